//! Experiment presets for the four benchmarks.

use std::fmt;
use std::str::FromStr;

use crate::env::EnvName;
use crate::error::{Error, Result};
use crate::policy::PolicySpec;
use crate::trainer::{Budget, Hyperparams};

/// Behavior policy family, parameter left to the preset or the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Epsilon,
    Bitwise,
    Agentwise,
    Softmax,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Epsilon,
        PolicyKind::Bitwise,
        PolicyKind::Agentwise,
        PolicyKind::Softmax,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Epsilon => "epsilon",
            PolicyKind::Bitwise => "bitwise",
            PolicyKind::Agentwise => "agentwise",
            PolicyKind::Softmax => "softmax",
        }
    }

    pub fn with_parameter(&self, p: f64) -> PolicySpec {
        match self {
            PolicyKind::Epsilon => PolicySpec::EpsilonGreedy(p),
            PolicyKind::Bitwise => PolicySpec::BitwiseEpsilonGreedy(p),
            PolicyKind::Agentwise => PolicySpec::AgentwiseEpsilonGreedy(p),
            PolicyKind::Softmax => PolicySpec::Softmax(p),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown policy '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub env: EnvName,
    pub n_hidden: usize,
    /// Policies this benchmark was run with, first one is the default.
    pub policies: Vec<PolicySpec>,
    pub budget: Budget,
}

impl ExperimentPreset {
    pub fn for_env(env: EnvName) -> Self {
        use PolicySpec::*;
        let (n_hidden, policies, budget) = match env {
            EnvName::GridOneHot => (50, vec![EpsilonGreedy(0.1)], Budget::Episodes(1000)),
            EnvName::GridBinary4 => (50, vec![EpsilonGreedy(0.2)], Budget::Episodes(1000)),
            EnvName::GridPopulation => (
                50,
                vec![
                    EpsilonGreedy(0.3),
                    BitwiseEpsilonGreedy(0.05),
                    Softmax(20.0),
                ],
                Budget::Episodes(2000),
            ),
            EnvName::Blocker => (
                100,
                vec![EpsilonGreedy(0.3), AgentwiseEpsilonGreedy(0.1)],
                Budget::Steps(200_000),
            ),
        };
        Self {
            env,
            n_hidden,
            policies,
            budget,
        }
    }

    pub fn default_policy(&self) -> PolicySpec {
        self.policies[0]
    }

    /// The preset's parameter for `kind`, if the benchmark used that family.
    pub fn policy_of_kind(&self, kind: PolicyKind) -> Option<PolicySpec> {
        self.policies.iter().copied().find(|p| {
            matches!(
                (kind, p),
                (PolicyKind::Epsilon, PolicySpec::EpsilonGreedy(_))
                    | (PolicyKind::Bitwise, PolicySpec::BitwiseEpsilonGreedy(_))
                    | (PolicyKind::Agentwise, PolicySpec::AgentwiseEpsilonGreedy(_))
                    | (PolicyKind::Softmax, PolicySpec::Softmax(_))
            )
        })
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams::new(self.n_hidden, self.default_policy(), self.budget)
    }

    pub fn hyperparams_with(&self, policy: PolicySpec) -> Hyperparams {
        Hyperparams {
            policy,
            ..self.hyperparams()
        }
    }
}
