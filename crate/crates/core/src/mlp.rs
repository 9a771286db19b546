//! Three-layer perceptron with a two-headed linear output.
//!
//! The network maps a state to a scalar `psi` and a vector `phi`, and the
//! action value is `Q(s, a) = psi(s) + a . phi(s)`. Hidden units are ReLU.
//! Everything is `f64`.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::action::ActionVector;
use crate::error::{Error, Result};

/// Bound of the output-head weight initialization interval.
pub const OUTPUT_INIT_BOUND: f64 = 0.01;

/// Bound of the input-to-hidden initialization interval, `sqrt(6 / (n_hidden + n_input))`.
pub fn input_init_bound(n_input: usize, n_hidden: usize) -> f64 {
    (6.0 / (n_hidden + n_input) as f64).sqrt()
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct QOutputs {
    pub psi: f64,
    pub phi: Vec<f64>,
}

impl QOutputs {
    pub fn new(psi: f64, phi: Vec<f64>) -> Self {
        Self { psi, phi }
    }
}

/// All weights and biases. `w_in` is row-major `[n_hidden x n_input]`,
/// `w_phi` is row-major `[n_phi x n_hidden]`.
///
/// The same shape doubles as a gradient container (see [`NetworkParams::q_gradient`]).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    n_input: usize,
    n_hidden: usize,
    n_phi: usize,
    pub w_in: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_psi: Vec<f64>,
    pub b_psi: f64,
    pub w_phi: Vec<f64>,
    pub b_phi: Vec<f64>,
}

impl NetworkParams {
    /// All-zero network of the given shape.
    pub fn zeros(n_input: usize, n_hidden: usize, n_phi: usize) -> Result<Self> {
        for (name, v) in [
            ("n_input", n_input),
            ("n_hidden", n_hidden),
            ("n_phi", n_phi),
        ] {
            if v == 0 {
                return Err(Error::InvalidDimension(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        Ok(Self {
            n_input,
            n_hidden,
            n_phi,
            w_in: vec![0.0; n_hidden * n_input],
            b_hidden: vec![0.0; n_hidden],
            w_psi: vec![0.0; n_hidden],
            b_psi: 0.0,
            w_phi: vec![0.0; n_phi * n_hidden],
            b_phi: vec![0.0; n_phi],
        })
    }

    /// Randomly initialized network.
    ///
    /// Input weights are uniform on `[-b, b]` with `b = sqrt(6 / (n_hidden + n_input))`,
    /// output weights uniform on `[-0.01, 0.01]`, biases zero. Draw order is
    /// `w_in`, `w_psi`, `w_phi`, so a given rng state yields the same network.
    pub fn init<R: Rng + ?Sized>(
        n_input: usize,
        n_hidden: usize,
        n_phi: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut p = Self::zeros(n_input, n_hidden, n_phi)?;
        let bound = input_init_bound(n_input, n_hidden);
        let input_dist = Uniform::new_inclusive(-bound, bound);
        let output_dist = Uniform::new_inclusive(-OUTPUT_INIT_BOUND, OUTPUT_INIT_BOUND);
        p.w_in.iter_mut().for_each(|w| *w = input_dist.sample(rng));
        p.w_psi
            .iter_mut()
            .for_each(|w| *w = output_dist.sample(rng));
        p.w_phi
            .iter_mut()
            .for_each(|w| *w = output_dist.sample(rng));
        Ok(p)
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn param_count(&self) -> usize {
        self.w_in.len()
            + self.b_hidden.len()
            + self.w_psi.len()
            + 1
            + self.w_phi.len()
            + self.b_phi.len()
    }

    /// Flattened parameters in the order `w_in, b_hidden, w_psi, b_psi, w_phi, b_phi`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(&self.w_in);
        v.extend_from_slice(&self.b_hidden);
        v.extend_from_slice(&self.w_psi);
        v.push(self.b_psi);
        v.extend_from_slice(&self.w_phi);
        v.extend_from_slice(&self.b_phi);
        v
    }

    /// Inverse of [`NetworkParams::to_flat`] for a network of this shape.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                actual: flat.len(),
            });
        }
        let mut p = self.clone();
        let mut rest = flat;
        for dst in [&mut p.w_in, &mut p.b_hidden, &mut p.w_psi] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        p.b_psi = rest[0];
        rest = &rest[1..];
        let (head, tail) = rest.split_at(p.w_phi.len());
        p.w_phi.copy_from_slice(head);
        p.b_phi.copy_from_slice(tail);
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.w_in.iter().all(|x| x.is_finite())
            && self.b_hidden.iter().all(|x| x.is_finite())
            && self.w_psi.iter().all(|x| x.is_finite())
            && self.b_psi.is_finite()
            && self.w_phi.iter().all(|x| x.is_finite())
            && self.b_phi.iter().all(|x| x.is_finite())
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.n_input {
            return Err(Error::LengthMismatch {
                expected: self.n_input,
                actual: state.len(),
            });
        }
        Ok(())
    }

    /// Hidden preactivations `w_in . state + b_hidden`. Zero state entries are skipped,
    /// which matters for the one-hot encodings used by every environment here.
    fn preactivations(&self, state: &[f64]) -> Vec<f64> {
        let mut z = self.b_hidden.clone();
        for (k, &s) in state.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for (j, zj) in z.iter_mut().enumerate() {
                *zj += self.w_in[j * self.n_input + k] * s;
            }
        }
        z
    }

    pub fn forward(&self, state: &[f64]) -> Result<QOutputs> {
        self.check_state(state)?;
        let hidden: Vec<f64> = self
            .preactivations(state)
            .into_iter()
            .map(|z| z.max(0.0))
            .collect();
        let psi = self.b_psi + dot(&self.w_psi, &hidden);
        let phi = (0..self.n_phi)
            .map(|i| {
                self.b_phi[i]
                    + dot(
                        &self.w_phi[i * self.n_hidden..(i + 1) * self.n_hidden],
                        &hidden,
                    )
            })
            .collect();
        Ok(QOutputs { psi, phi })
    }

    /// Hidden activations and the backpropagated hidden deltas for output seeds
    /// `psi_seed` (on psi) and `phi_seed` (on phi). ReLU'(0) is taken as 0.
    fn backprop_hidden(
        &self,
        state: &[f64],
        psi_seed: f64,
        phi_seed: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let z = self.preactivations(state);
        let hidden: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
        let delta = (0..self.n_hidden)
            .map(|j| {
                if z[j] <= 0.0 {
                    return 0.0;
                }
                let mut d = psi_seed * self.w_psi[j];
                for (i, &seed) in phi_seed.iter().enumerate() {
                    if seed != 0.0 {
                        d += seed * self.w_phi[i * self.n_hidden + j];
                    }
                }
                d
            })
            .collect();
        (hidden, delta)
    }

    /// Adds `scale * dOut/dtheta` into `self`, given activations from [`Self::backprop_hidden`].
    #[allow(clippy::too_many_arguments)]
    fn add_scaled_gradient(
        &mut self,
        state: &[f64],
        hidden: &[f64],
        delta: &[f64],
        psi_seed: f64,
        phi_seed: &[f64],
        scale: f64,
    ) {
        let (n_input, n_hidden) = (self.n_input, self.n_hidden);
        for (j, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let g = scale * d;
            self.b_hidden[j] += g;
            let row = &mut self.w_in[j * n_input..(j + 1) * n_input];
            for (w, &s) in row.iter_mut().zip(state) {
                if s != 0.0 {
                    *w += g * s;
                }
            }
        }
        if psi_seed != 0.0 {
            let g = scale * psi_seed;
            self.b_psi += g;
            for (w, &h) in self.w_psi.iter_mut().zip(hidden) {
                *w += g * h;
            }
        }
        for (i, &seed) in phi_seed.iter().enumerate() {
            if seed == 0.0 {
                continue;
            }
            let g = scale * seed;
            self.b_phi[i] += g;
            let row = &mut self.w_phi[i * n_hidden..(i + 1) * n_hidden];
            for (w, &h) in row.iter_mut().zip(hidden) {
                *w += g * h;
            }
        }
    }

    /// Gradient of `psi_seed * psi(s) + phi_seed . phi(s)` with respect to every parameter,
    /// returned in a network-shaped container.
    pub fn output_gradient(
        &self,
        state: &[f64],
        psi_seed: f64,
        phi_seed: &[f64],
    ) -> Result<NetworkParams> {
        self.check_state(state)?;
        if phi_seed.len() != self.n_phi {
            return Err(Error::LengthMismatch {
                expected: self.n_phi,
                actual: phi_seed.len(),
            });
        }
        let (hidden, delta) = self.backprop_hidden(state, psi_seed, phi_seed);
        let mut grad = NetworkParams::zeros(self.n_input, self.n_hidden, self.n_phi)?;
        grad.add_scaled_gradient(state, &hidden, &delta, psi_seed, phi_seed, 1.0);
        Ok(grad)
    }

    /// `dQ(s, a)/dtheta = dpsi/dtheta + sum_i a_i dphi_i/dtheta`.
    pub fn q_gradient(&self, state: &[f64], action: &ActionVector) -> Result<NetworkParams> {
        self.output_gradient(state, 1.0, &action.to_f64())
    }

    /// In-place update `theta += step_size * td_error * dQ(s, a)/dtheta`.
    ///
    /// Fails with [`Error::Diverged`] if any parameter becomes non-finite; the
    /// parameters are left in their updated (non-finite) state.
    pub fn q_gradient_step(
        &mut self,
        state: &[f64],
        action: &ActionVector,
        td_error: f64,
        step_size: f64,
    ) -> Result<()> {
        self.check_state(state)?;
        if action.len() != self.n_phi {
            return Err(Error::LengthMismatch {
                expected: self.n_phi,
                actual: action.len(),
            });
        }
        if !td_error.is_finite() {
            return Err(Error::Diverged(format!("non-finite TD error {td_error}")));
        }
        let seed = action.to_f64();
        let (hidden, delta) = self.backprop_hidden(state, 1.0, &seed);
        self.add_scaled_gradient(state, &hidden, &delta, 1.0, &seed, step_size * td_error);
        if !self.is_finite() {
            return Err(Error::Diverged("non-finite parameter after update".into()));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(NetworkParams::init(0, 3, 2, &mut rng(0)).is_err());
        assert!(NetworkParams::init(3, 0, 2, &mut rng(0)).is_err());
        assert!(NetworkParams::init(3, 3, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let p = NetworkParams::init(47, 50, 4, &mut rng(1)).unwrap();
        // sqrt(6/97) to 12 digits, evaluated with mpmath.
        let bound = 0.248708001687;
        assert!((input_init_bound(47, 50) - bound).abs() < 1e-11);
        assert!(p.w_in.iter().all(|w| w.abs() <= bound + 1e-12));
        assert!(p.w_psi.iter().chain(&p.w_phi).all(|w| w.abs() <= 0.01));
        assert!(p.b_hidden.iter().chain(&p.b_phi).all(|&b| b == 0.0));
        assert_eq!(p.b_psi, 0.0);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = NetworkParams::init(5, 4, 3, &mut rng(9)).unwrap();
        let b = NetworkParams::init(5, 4, 3, &mut rng(9)).unwrap();
        let c = NetworkParams::init(5, 4, 3, &mut rng(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_means_are_centered() {
        let p = NetworkParams::init(100, 120, 100, &mut rng(2)).unwrap();
        let bound = input_init_bound(100, 120);
        let check = |xs: &[f64], b: f64| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            // uniform on [-b, b] has variance b^2 / 3
            let se = (b * b / 3.0 / n).sqrt();
            assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
        };
        check(&p.w_in, bound);
        check(&p.w_phi, 0.01);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = NetworkParams::zeros(3, 4, 2).unwrap();
        let out = p.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, QOutputs::new(0.0, vec![0.0, 0.0]));
    }

    #[test]
    fn forward_matches_hand_trace() {
        // 2 inputs, 2 hidden, 1 phi.
        let mut p = NetworkParams::zeros(2, 2, 1).unwrap();
        p.w_in = vec![1.0, 2.0, -1.0, 0.5];
        p.b_hidden = vec![0.5, -0.25];
        p.w_psi = vec![0.3, -0.7];
        p.b_psi = 0.1;
        p.w_phi = vec![2.0, 1.0];
        p.b_phi = vec![-0.5];
        // state (1, 1): z = (1+2+0.5, -1+0.5-0.25) = (3.5, -0.75), h = (3.5, 0)
        // psi = 0.1 + 0.3*3.5 = 1.15, phi = -0.5 + 2*3.5 = 6.5
        let out = p.forward(&[1.0, 1.0]).unwrap();
        assert!((out.psi - 1.15).abs() < 1e-12);
        assert!((out.phi[0] - 6.5).abs() < 1e-12);
        // state (2, -1): z = (2-2+0.5, -2-0.5-0.25) = (0.5, -2.75), h = (0.5, 0)
        // psi = 0.1 + 0.15 = 0.25, phi = -0.5 + 1.0 = 0.5
        let out = p.forward(&[2.0, -1.0]).unwrap();
        assert!((out.psi - 0.25).abs() < 1e-12);
        assert!((out.phi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dead_hidden_unit_contributes_nothing() {
        let mut p = NetworkParams::zeros(1, 2, 1).unwrap();
        p.w_in = vec![1.0, -1.0];
        p.w_psi = vec![0.0, 100.0];
        p.w_phi = vec![0.0, 100.0];
        let out = p.forward(&[3.0]).unwrap();
        assert_eq!(out.psi, 0.0);
        assert_eq!(out.phi, vec![0.0]);
    }

    #[test]
    fn forward_rejects_wrong_state_length() {
        let p = NetworkParams::zeros(3, 2, 2).unwrap();
        assert_eq!(
            p.forward(&[1.0]).unwrap_err(),
            Error::LengthMismatch {
                expected: 3,
                actual: 1
            }
        );
    }

    #[test]
    fn zero_td_error_leaves_params_unchanged() {
        let mut p = NetworkParams::init(5, 4, 3, &mut rng(3)).unwrap();
        let before = p.clone();
        let a = ActionVector::from_bits(&[1, 0, 1]);
        p.q_gradient_step(&[0.1, 0.2, -0.3, 0.4, 0.5], &a, 0.0, 0.01)
            .unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn backward_is_linear_in_the_seed() {
        let p = NetworkParams::init(5, 4, 3, &mut rng(4)).unwrap();
        let s = [0.3, -0.1, 0.8, 0.2, -0.5];
        let a = ActionVector::from_bits(&[1, 0, 1]);
        let full = p.q_gradient(&s, &a).unwrap().to_flat();
        let mut sum = p.output_gradient(&s, 1.0, &[0.0; 3]).unwrap().to_flat();
        for i in [0, 2] {
            let mut seed = [0.0; 3];
            seed[i] = 1.0;
            let g = p.output_gradient(&s, 0.0, &seed).unwrap().to_flat();
            sum.iter_mut().zip(g).for_each(|(x, y)| *x += y);
        }
        for (x, y) in full.iter().zip(&sum) {
            assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn step_equals_scaled_gradient() {
        let mut p = NetworkParams::init(5, 4, 3, &mut rng(5)).unwrap();
        let s = [0.3, -0.1, 0.8, 0.2, -0.5];
        let a = ActionVector::from_bits(&[0, 1, 1]);
        let grad = p.q_gradient(&s, &a).unwrap().to_flat();
        let before = p.to_flat();
        p.q_gradient_step(&s, &a, -1.7, 0.01).unwrap();
        for ((new, old), g) in p.to_flat().iter().zip(&before).zip(&grad) {
            let expected = old + 0.01 * -1.7 * g;
            assert!((new - expected).abs() <= 1e-15 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn non_finite_update_reports_divergence() {
        let mut p = NetworkParams::init(2, 2, 1, &mut rng(6)).unwrap();
        let a = ActionVector::from_bits(&[1]);
        let err = p
            .q_gradient_step(&[1.0, 1.0], &a, f64::MAX, f64::MAX)
            .unwrap_err();
        assert!(matches!(err, Error::Diverged(_)));
        let err = p
            .q_gradient_step(&[1.0, 1.0], &a, f64::NAN, 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::Diverged(_)));
    }

    #[test]
    fn flat_round_trip() {
        let p = NetworkParams::init(3, 2, 2, &mut rng(7)).unwrap();
        assert_eq!(p.with_flat(&p.to_flat()).unwrap(), p);
        assert!(p.with_flat(&[0.0]).is_err());
    }
}
