//! Q-learning for large binary and factored action spaces.
//!
//! The value network outputs a state value `psi(s)` and a per-bit vector
//! `phi(s)`, and scores an action bit vector as `Q(s, a) = psi(s) + a . phi(s)`.
//! Being linear in `a`, the greedy action, `max_a Q` and exact Boltzmann
//! sampling all reduce to independent per-bit or per-group computations, so
//! Q-learning stays tractable for action sets of size `2^40`.
//!
//! Modules:
//! - [`mlp`]: the two-headed perceptron and its backpropagated Q gradient.
//! - [`action`]: action spaces, greedy/max/softmax in closed form.
//! - [`policy`]: behavior policies.
//! - [`env`]: grid world (three action codings) and the blocker task.
//! - [`trainer`]: online Q-learning and the multi-run harness.
//! - [`preset`], [`report`], [`cli`]: experiment presets, CSV output, command line.

pub mod action;
pub mod cli;
pub mod env;
pub mod error;
pub mod mlp;
pub mod policy;
pub mod preset;
pub mod report;
pub mod trainer;

pub use error::{Error, Result};
