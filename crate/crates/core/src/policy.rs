//! Behavior policies.

use std::fmt;

use rand::Rng;

use crate::action::{greedy_action, softmax_sample, ActionSpace, ActionVector, SpaceKind};
use crate::error::{Error, Result};
use crate::mlp::QOutputs;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    /// Whole-action epsilon-greedy.
    EpsilonGreedy(f64),
    /// Each bit independently explores with probability `eps_bit`. Binary spaces only.
    BitwiseEpsilonGreedy(f64),
    /// Each one-hot group independently explores with probability `eps_agent`. Factored spaces only.
    AgentwiseEpsilonGreedy(f64),
    /// Boltzmann policy with inverse temperature `beta`.
    Softmax(f64),
}

impl PolicySpec {
    pub fn parameter(&self) -> f64 {
        match *self {
            PolicySpec::EpsilonGreedy(p)
            | PolicySpec::BitwiseEpsilonGreedy(p)
            | PolicySpec::AgentwiseEpsilonGreedy(p)
            | PolicySpec::Softmax(p) => p,
        }
    }

    pub fn validate(&self, space: &ActionSpace) -> Result<()> {
        match *self {
            PolicySpec::EpsilonGreedy(e) => check_probability(e),
            PolicySpec::BitwiseEpsilonGreedy(e) => {
                check_probability(e)?;
                if space.kind() != SpaceKind::Binary {
                    return Err(Error::InvalidParameter(format!(
                        "bit-wise epsilon-greedy needs a binary action space, got {space}"
                    )));
                }
                Ok(())
            }
            PolicySpec::AgentwiseEpsilonGreedy(e) => {
                check_probability(e)?;
                if space.kind() != SpaceKind::Factored {
                    return Err(Error::InvalidParameter(format!(
                        "agent-wise epsilon-greedy needs a factored action space, got {space}"
                    )));
                }
                Ok(())
            }
            PolicySpec::Softmax(beta) => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "inverse temperature must be positive, got {beta}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn select<R: Rng + ?Sized>(
        &self,
        out: &QOutputs,
        space: &ActionSpace,
        rng: &mut R,
    ) -> Result<ActionVector> {
        match *self {
            PolicySpec::EpsilonGreedy(e) => epsilon_greedy(out, space, e, rng),
            PolicySpec::BitwiseEpsilonGreedy(e) => bitwise_epsilon_greedy(out, space, e, rng),
            PolicySpec::AgentwiseEpsilonGreedy(e) => agentwise_epsilon_greedy(out, space, e, rng),
            PolicySpec::Softmax(beta) => softmax_policy(out, space, beta, rng),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PolicySpec::EpsilonGreedy(e) => write!(f, "epsilon-greedy(epsilon={e})"),
            PolicySpec::BitwiseEpsilonGreedy(e) => {
                write!(f, "bitwise epsilon-greedy(epsilon_bit={e})")
            }
            PolicySpec::AgentwiseEpsilonGreedy(e) => {
                write!(f, "agent-wise epsilon-greedy(epsilon_agent={e})")
            }
            PolicySpec::Softmax(b) => write!(f, "softmax(beta={b})"),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "exploration rate must be in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Uniform over the whole action set: fair coin per bit for binary spaces,
/// uniform choice per group otherwise.
pub fn uniform_random_action<R: Rng + ?Sized>(space: &ActionSpace, rng: &mut R) -> ActionVector {
    let k = space.bit_len();
    if space.kind() == SpaceKind::Binary {
        return ActionVector::new((0..k).map(|_| rng.gen::<bool>()).collect());
    }
    let mut a = ActionVector::zeros(k);
    for r in space.group_ranges() {
        a.set(rng.gen_range(r), true);
    }
    a
}

pub fn epsilon_greedy<R: Rng + ?Sized>(
    out: &QOutputs,
    space: &ActionSpace,
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionVector> {
    check_probability(epsilon)?;
    space.check_len(out.phi.len())?;
    if rng.gen::<f64>() < epsilon {
        Ok(uniform_random_action(space, rng))
    } else {
        greedy_action(&out.phi, space)
    }
}

pub fn bitwise_epsilon_greedy<R: Rng + ?Sized>(
    out: &QOutputs,
    space: &ActionSpace,
    eps_bit: f64,
    rng: &mut R,
) -> Result<ActionVector> {
    PolicySpec::BitwiseEpsilonGreedy(eps_bit).validate(space)?;
    let mut a = greedy_action(&out.phi, space)?;
    for i in 0..a.len() {
        if rng.gen::<f64>() < eps_bit {
            a.set(i, rng.gen::<bool>());
        }
    }
    Ok(a)
}

pub fn agentwise_epsilon_greedy<R: Rng + ?Sized>(
    out: &QOutputs,
    space: &ActionSpace,
    eps_agent: f64,
    rng: &mut R,
) -> Result<ActionVector> {
    PolicySpec::AgentwiseEpsilonGreedy(eps_agent).validate(space)?;
    let mut a = greedy_action(&out.phi, space)?;
    for r in space.group_ranges() {
        if rng.gen::<f64>() < eps_agent {
            for i in r.clone() {
                a.set(i, false);
            }
            a.set(rng.gen_range(r), true);
        }
    }
    Ok(a)
}

pub fn softmax_policy<R: Rng + ?Sized>(
    out: &QOutputs,
    space: &ActionSpace,
    beta: f64,
    rng: &mut R,
) -> Result<ActionVector> {
    softmax_sample(&out.phi, beta, space, rng)
}
