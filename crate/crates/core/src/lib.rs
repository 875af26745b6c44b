//! Deterministic equivalents, a central limit theorem and outage
//! approximations for the mutual information of Rician channels with a
//! non-separable variance profile, with holographic MIMO arrays as the
//! main application.
//!
//! The channel is `H = A + Σ^{∘½} ⊙ X` with `X` i.i.d. `CN(0, 1/M)`. For a
//! noise parameter `ζ` the crate computes
//!
//! * the fixed point `(δ, δ̃)` and resolvent equivalents `T`, `T̃` ([`solver`]),
//! * the deterministic equivalent `C̄` of `E log det(I + HH^H/ζ)`, the
//!   variance `V = −log det(I_{2M} − B)` and `P(C < R) ≈ Φ((R − C̄)/√V)`
//!   ([`asymptotics`]),
//! * Monte-Carlo samples of `C` and their statistics ([`montecarlo`]).
//!
//! Holographic arrays enter through [`geometry`] (wavenumber lattices,
//! antenna gain, effective `ζ`) and [`profile`] (isotropic and Gaussian-kernel
//! variance profiles).

pub mod asymptotics;
pub mod channel;
pub mod commands;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod montecarlo;
pub mod normal;
pub mod profile;
pub mod solver;
pub mod validation;

pub use asymptotics::{analyze, outage_probability, Analysis, AsymptoticStats, BMatrix};
pub use channel::{synth_los, ChannelModel, LosKind};
pub use error::{Error, Result};
pub use geometry::ArrayGeometry;
pub use montecarlo::{run_mc, MiSampleSet};
pub use profile::VarianceProfile;
pub use solver::{solve_deltas, SolverOptions};
