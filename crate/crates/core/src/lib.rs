//! Differentially private release of the basic reproduction number (R0) of a
//! weighted epidemic network.
//!
//! The library models an epidemic-spreading network as a weighted graph whose
//! next-generation matrix `W` has spectral radius `R0 = ρ(W)`. Two mechanisms
//! release R0 under ε-differential privacy with respect to *weight adjacency*
//! (graphs with the same edge set whose weight matrices differ by at most `k`
//! in Frobenius norm):
//!
//! * **input perturbation** ([`mechanisms::input_perturb`]): every positive
//!   weight is replaced by a bounded (truncated) Gaussian draw confined to its
//!   declared interval, and R0 is recomputed from the privatized graph;
//! * **output perturbation** ([`mechanisms::output_perturb`]): R0 itself is
//!   released through a bounded (truncated) Laplace mechanism on `(0, R̄0]`.
//!
//! The [`accuracy`] module evaluates the analytic error bounds that come with
//! each mechanism (mean/variance bounds, tail bounds, penetration-confidence
//! bounds, and the directed-graph variant), and [`epidemic`] simulates the
//! underlying networked SIS/SIR dynamics to validate the level-of-penetration
//! inequality `min_i s*_i ≤ 1/R0` at the disease-free equilibrium.

pub mod accuracy;
pub mod epidemic;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod mechanisms;
pub mod numerics;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{GraphFormat, WeightBounds, WeightedGraph};
pub use matrix::Matrix;
pub use numerics::SeededRng;
