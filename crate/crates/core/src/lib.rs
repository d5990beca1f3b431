//! Grand Lebesgue norms of Riesz and Bessel potentials on the line.
//!
//! The crate has three layers:
//!
//! * exponent and weight calculus: [`exponents`] (Sobolev, Hölder and
//!   Young exponents) and [`psi`] (weights `ψ` on exponent intervals and
//!   their transforms under the potential operators);
//! * one-dimensional numerics: [`quad`] (log-domain adaptive quadrature),
//!   [`norms`] (test functions, `L_p` norms, distribution functions) and
//!   [`potential`] (Riesz, truncated, log-weighted and Bessel potentials,
//!   maximal operators);
//! * [`grand`] (Grand Lebesgue norms, the functional `V`, growth fits) and
//!   [`experiments`], which tie the rest together into reproducible runs.
//!
//! Grid sweeps go through [`par`]; building without the default `parallel`
//! feature swaps rayon for a plain loop.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too;
// rule constants keep the digits of their published tables.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod grand;
pub mod norms;
pub mod optimize;
pub mod par;
pub mod potential;
pub mod psi;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use experiments::{run_experiment, ExperimentConfig, ExperimentName, ExperimentReport};
pub use exponents::{MultiIndex, PotentialParams};
pub use grand::{fit_growth_exponent, grand_norm, v_functional, FitResult, GrandNormReport};
pub use norms::{lp_norm, FormSpec, TestFunction};
pub use par::Execution;
pub use potential::{apply_kernel, bessel_potential, fractional_maximal, hl_maximal, macdonald_k, EvalGrid, KernelSpec};
pub use psi::{PsiFunction, PsiSpec, SlowlyVarying};
pub use quad::QuadratureSpec;
