//! Action spaces and the closed-form operations the linear-in-action head allows.
//!
//! With `Q(s, a) = psi + a . phi` the maximization over actions and the Boltzmann
//! distribution both split over independent bits (binary spaces) or independent
//! one-hot groups (one-hot and factored spaces). Nothing here enumerates the
//! action set except [`enumerate_actions`], which exists for oracles.

use std::fmt;
use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mlp::QOutputs;

/// Upper limit on the number of actions [`enumerate_actions`] will produce.
pub const ENUMERATION_LIMIT: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    OneHot,
    Binary,
    Factored,
}

/// Descriptor of an action set.
///
/// One-hot spaces are stored as a factored space with a single group, so every
/// group-wise operation handles both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    kind: SpaceKind,
    groups: Vec<usize>,
}

impl ActionSpace {
    pub fn one_hot(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDimension(
                "one-hot action space needs K >= 1".into(),
            ));
        }
        Ok(Self {
            kind: SpaceKind::OneHot,
            groups: vec![k],
        })
    }

    pub fn binary(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDimension(
                "binary action space needs K >= 1".into(),
            ));
        }
        Ok(Self {
            kind: SpaceKind::Binary,
            groups: vec![k],
        })
    }

    pub fn factored(group_sizes: &[usize]) -> Result<Self> {
        if group_sizes.is_empty() || group_sizes.contains(&0) {
            return Err(Error::InvalidDimension(
                "factored action space needs at least one group, each of size >= 1".into(),
            ));
        }
        Ok(Self {
            kind: SpaceKind::Factored,
            groups: group_sizes.to_vec(),
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Total bit length `K`.
    pub fn bit_len(&self) -> usize {
        self.groups.iter().sum()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.groups
    }

    /// Bit ranges of the one-hot groups. Empty for binary spaces.
    pub fn group_ranges(&self) -> Vec<Range<usize>> {
        if self.kind == SpaceKind::Binary {
            return Vec::new();
        }
        let mut start = 0;
        self.groups
            .iter()
            .map(|&k| {
                let r = start..start + k;
                start += k;
                r
            })
            .collect()
    }

    /// Number of actions in the set.
    pub fn action_count(&self) -> u128 {
        match self.kind {
            SpaceKind::Binary => 1u128
                .checked_shl(self.groups[0] as u32)
                .unwrap_or(u128::MAX),
            _ => self
                .groups
                .iter()
                .fold(1u128, |acc, &k| acc.saturating_mul(k as u128)),
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.bit_len() {
            return Err(Error::LengthMismatch {
                expected: self.bit_len(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Checks length and, for one-hot/factored spaces, that each group has exactly one bit set.
    pub fn validate(&self, a: &ActionVector) -> Result<()> {
        self.check_len(a.len())?;
        for (j, r) in self.group_ranges().into_iter().enumerate() {
            let set = a.bits[r].iter().filter(|&&b| b).count();
            if set != 1 {
                return Err(Error::InvalidAction {
                    space: self.to_string(),
                    reason: format!("group {j} has {set} bits set"),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ActionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::OneHot => write!(f, "one_hot({})", self.groups[0]),
            SpaceKind::Binary => write!(f, "binary({})", self.groups[0]),
            SpaceKind::Factored => write!(f, "factored({:?})", self.groups),
        }
    }
}

/// A bit vector action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionVector {
    bits: Vec<bool>,
}

impl ActionVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    /// From `0`/`1` integers; any non-zero value counts as set.
    pub fn from_bits(bits: &[u8]) -> Self {
        Self {
            bits: bits.iter().map(|&b| b != 0).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }

    /// Index of the set bit within `range`, if exactly one is set.
    pub fn choice_in(&self, range: Range<usize>) -> Option<usize> {
        let start = range.start;
        let mut set = self.bits[range].iter().enumerate().filter(|(_, &b)| b);
        match (set.next(), set.next()) {
            (Some((i, _)), None) => Some(start + i),
            _ => None,
        }
    }
}

impl fmt::Display for ActionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `psi + a . phi`.
pub fn q_value(out: &QOutputs, a: &ActionVector) -> Result<f64> {
    if a.len() != out.phi.len() {
        return Err(Error::LengthMismatch {
            expected: out.phi.len(),
            actual: a.len(),
        });
    }
    Ok(out.psi
        + a.bits
            .iter()
            .zip(&out.phi)
            .filter(|(&b, _)| b)
            .map(|(_, p)| p)
            .sum::<f64>())
}

/// First index of the maximum; lowest index wins ties.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// The action maximizing `Q`.
///
/// Binary spaces set bit `i` unless `phi_i < 0` (so `phi_i == 0` gives 1).
/// One-hot and factored spaces take the per-group argmax.
pub fn greedy_action(phi: &[f64], space: &ActionSpace) -> Result<ActionVector> {
    space.check_len(phi.len())?;
    if space.kind == SpaceKind::Binary {
        return Ok(ActionVector {
            bits: phi.iter().map(|&p| p >= 0.0).collect(),
        });
    }
    let mut a = ActionVector::zeros(phi.len());
    for r in space.group_ranges() {
        let i = argmax(&phi[r.clone()]);
        a.bits[r.start + i] = true;
    }
    Ok(a)
}

/// `max_a Q(s, a)`, without enumerating actions.
pub fn max_q(out: &QOutputs, space: &ActionSpace) -> Result<f64> {
    space.check_len(out.phi.len())?;
    let gain: f64 = if space.kind == SpaceKind::Binary {
        out.phi.iter().map(|&p| p.max(0.0)).sum()
    } else {
        space
            .group_ranges()
            .into_iter()
            .map(|r| {
                let g = &out.phi[r];
                g[argmax(g)]
            })
            .sum()
    };
    Ok(out.psi + gain)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    Ok(())
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(logistic(x))` without overflow.
fn log_logistic(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

/// Max-shifted softmax of `beta * xs`.
fn softmax(xs: &[f64], beta: f64) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|&x| (beta * (x - m)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Per-bit probability that the bit is set under the Boltzmann policy with
/// inverse temperature `beta`.
///
/// Binary spaces give `1 / (1 + exp(-beta phi_i))`; one-hot and factored spaces
/// give the softmax of `beta phi` within each group.
pub fn firing_probabilities(phi: &[f64], beta: f64, space: &ActionSpace) -> Result<Vec<f64>> {
    space.check_len(phi.len())?;
    check_beta(beta)?;
    if space.kind == SpaceKind::Binary {
        return Ok(phi.iter().map(|&p| logistic(beta * p)).collect());
    }
    let mut probs = Vec::with_capacity(phi.len());
    for r in space.group_ranges() {
        probs.extend(softmax(&phi[r], beta));
    }
    Ok(probs)
}

/// Exact draw from the Boltzmann policy `exp(beta Q(s, a)) / sum_a' exp(beta Q(s, a'))`.
pub fn softmax_sample<R: Rng + ?Sized>(
    phi: &[f64],
    beta: f64,
    space: &ActionSpace,
    rng: &mut R,
) -> Result<ActionVector> {
    let probs = firing_probabilities(phi, beta, space)?;
    if space.kind == SpaceKind::Binary {
        return Ok(ActionVector {
            bits: probs.iter().map(|&p| rng.gen::<f64>() < p).collect(),
        });
    }
    let mut a = ActionVector::zeros(phi.len());
    for r in space.group_ranges() {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        // falls back to the last entry if rounding leaves acc slightly below u
        let mut chosen = r.end - 1;
        for i in r {
            acc += probs[i];
            if u < acc {
                chosen = i;
                break;
            }
        }
        a.bits[chosen] = true;
    }
    Ok(a)
}

/// Log-probability of `a` under the factorized Boltzmann policy.
pub fn action_log_prob(
    phi: &[f64],
    beta: f64,
    space: &ActionSpace,
    a: &ActionVector,
) -> Result<f64> {
    space.check_len(phi.len())?;
    check_beta(beta)?;
    space.validate(a)?;
    if space.kind == SpaceKind::Binary {
        return Ok(phi
            .iter()
            .zip(&a.bits)
            .map(|(&p, &b)| log_logistic(if b { beta * p } else { -beta * p }))
            .sum());
    }
    let mut total = 0.0;
    for r in space.group_ranges() {
        let g = &phi[r.clone()];
        let m = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = beta * m + g.iter().map(|&x| (beta * (x - m)).exp()).sum::<f64>().ln();
        let chosen = a.choice_in(r).expect("validated");
        total += beta * phi[chosen] - log_z;
    }
    Ok(total)
}

/// Every valid action, sorted lexicographically (`0 < 1`), without duplicates.
pub fn enumerate_actions(space: &ActionSpace) -> Result<Vec<ActionVector>> {
    let count = space.action_count();
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let k = space.bit_len();
    let mut out: Vec<ActionVector> = if space.kind == SpaceKind::Binary {
        (0..count as u64)
            .map(|code| ActionVector {
                bits: (0..k).map(|i| code >> (k - 1 - i) & 1 == 1).collect(),
            })
            .collect()
    } else {
        let mut acc = vec![ActionVector::zeros(k)];
        for r in space.group_ranges() {
            acc = acc
                .into_iter()
                .flat_map(|a| {
                    r.clone().map(move |i| {
                        let mut b = a.clone();
                        b.bits[i] = true;
                        b
                    })
                })
                .collect();
        }
        acc
    };
    out.sort();
    Ok(out)
}
