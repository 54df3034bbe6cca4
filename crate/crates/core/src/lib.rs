//! Primal-dual three-operator splitting (PD3O) for
//!
//! ```text
//! minimize  f(x) + g(x) + (h □ l)(Ax)
//! ```
//!
//! with `f` smooth, `g` and `h` proximable, `l*` smooth and `A` linear, together with
//! the schemes it reduces to (Chambolle-Pock, PAPC, Davis-Yin) and the competing
//! schemes PDFP, Condat-Vu and AFBA.
//!
//! Everything is generic over the scalar type ([`Scalar`], implemented for `f32` and
//! `f64`); [`RealVector`] and the other aliases fix it to `f64`.
//!
//! ```
//! use std::ops::ControlFlow;
//! use pd3o::{algorithms::*, problems::gen_fused_lasso};
//!
//! let inst = gen_fused_lasso::<f64>(20, 60, 1, 0.01, 1.0, 5.0).unwrap();
//! let steps = StepSizes::from_factors(1.5, 0.125, inst.beta).unwrap();
//! let init = SolverState::zeros(&inst.spec, AlgorithmId::Pd3o, &steps).unwrap();
//! let opts = SolveOptions { max_iters: 2000, residual_tol: 1e-6, ..Default::default() };
//! let out = solve(&inst.spec, AlgorithmId::Pd3o, &steps, init, &opts, |_| ControlFlow::Continue(()))
//!     .unwrap();
//! assert!(out.record.meta.converged);
//! ```

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod error;
pub mod linops;
pub mod metrics;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod vector;

pub use algorithms::{AlgorithmId, SolverState, StepSizes};
pub use error::{Error, Result};
pub use linops::LinearMap;
pub use metrics::ConvergenceRecord;
pub use problem::{ConjugateSmoothTerm, ProblemSpec, ProxTerm, SmoothTerm};
pub use scalar::Scalar;
pub use vector::Vector;

pub type RealVector = Vector<f64>;
pub type RealProblem = ProblemSpec<f64>;
pub type RealState = SolverState<f64>;
pub type RealSteps = StepSizes<f64>;
pub type DenseMatrix64 = linops::DenseMatrix<f64>;
