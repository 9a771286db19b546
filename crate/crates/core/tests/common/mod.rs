//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use factoredq::action::{ActionSpace, ActionVector};
use factoredq::mlp::NetworkParams;

/// Every valid action, built by brute force over all bit patterns.
pub fn brute_force_actions(space: &ActionSpace) -> Vec<ActionVector> {
    let k = space.bit_len();
    assert!(k <= 20);
    (0u32..1 << k)
        .map(|code| ActionVector::new((0..k).map(|i| code >> (k - 1 - i) & 1 == 1).collect()))
        .filter(|a| space.validate(a).is_ok())
        .collect()
}

/// `psi + a . phi` by explicit summation.
pub fn q_direct(psi: f64, phi: &[f64], a: &ActionVector) -> f64 {
    psi + a
        .bits()
        .iter()
        .zip(phi)
        .map(|(&b, &p)| if b { p } else { 0.0 })
        .sum::<f64>()
}

/// Boltzmann distribution `exp(beta Q(a)) / sum exp(beta Q(a'))` over `actions`,
/// normalized with a max shift.
pub fn boltzmann(psi: f64, phi: &[f64], beta: f64, actions: &[ActionVector]) -> Vec<f64> {
    let q: Vec<f64> = actions
        .iter()
        .map(|a| beta * q_direct(psi, phi, a))
        .collect();
    let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = q.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// `Q(s, a)` from a naive forward pass written independently of the library.
pub fn q_naive(p: &NetworkParams, state: &[f64], a: &ActionVector) -> f64 {
    let (ni, nh) = (p.n_input(), p.n_hidden());
    let h: Vec<f64> = (0..nh)
        .map(|j| {
            let z = p.b_hidden[j] + (0..ni).map(|k| p.w_in[j * ni + k] * state[k]).sum::<f64>();
            z.max(0.0)
        })
        .collect();
    let psi = p.b_psi + (0..nh).map(|j| p.w_psi[j] * h[j]).sum::<f64>();
    let phi: Vec<f64> = (0..p.n_phi())
        .map(|i| p.b_phi[i] + (0..nh).map(|j| p.w_phi[i * nh + j] * h[j]).sum::<f64>())
        .collect();
    q_direct(psi, &phi, a)
}

/// Central finite differences of `Q(s, a)` with respect to every flattened parameter.
pub fn fd_gradient(p: &NetworkParams, state: &[f64], a: &ActionVector, h: f64) -> Vec<f64> {
    let flat = p.to_flat();
    (0..flat.len())
        .map(|i| {
            let mut plus = flat.clone();
            plus[i] += h;
            let mut minus = flat.clone();
            minus[i] -= h;
            let qp = q_naive(&p.with_flat(&plus).unwrap(), state, a);
            let qm = q_naive(&p.with_flat(&minus).unwrap(), state, a);
            (qp - qm) / (2.0 * h)
        })
        .collect()
}

/// Smallest |preactivation| over hidden units, to keep finite differences off the ReLU kink.
pub fn min_abs_preactivation(p: &NetworkParams, state: &[f64]) -> f64 {
    let (ni, nh) = (p.n_input(), p.n_hidden());
    (0..nh)
        .map(|j| {
            (p.b_hidden[j] + (0..ni).map(|k| p.w_in[j * ni + k] * state[k]).sum::<f64>()).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
