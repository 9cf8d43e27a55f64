//! Polynomial nonlinear systems through Hadamard and SJT products.
//!
//! The central fact used throughout is that an order-`m` homogeneous
//! polynomial term satisfies `m·N⁽ᵐ⁾(U) = J⁽ᵐ⁾(U)·U`. A cubic-capped system
//! can therefore be written `f(U) = A(U)·U + F` with
//! `A(U) = L + ½J⁽²⁾(U) + ⅓J⁽³⁾(U)`, which this crate uses for
//!
//! * exact Jacobians of Hadamard-form expressions ([`hexpr`]),
//! * linear-style stability bounds for time integrators ([`stability`]),
//! * nonlinear Jacobi / Gauss-Seidel / SOR sweeps ([`iterative`]),
//! * rank-one quasi-Newton updates built on the exact relation
//!   `J·U = f̄(U)` ([`quasi_newton`]),
//! * rank-one pseudo-Jacobians for general nonlinearities ([`pseudo_jacobian`]).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod burgers;
pub mod dense;
pub mod error;
pub mod hadamard;
pub mod hexpr;
pub mod integrate;
pub mod iterative;
pub mod linalg;
pub mod poly;
pub mod presets;
pub mod pseudo_jacobian;
pub mod quasi_newton;
pub mod stability;
pub mod tensor;
pub mod trace;

pub use burgers::{burgers_discretize, BurgersOperators, SemiDiscreteIvp};
pub use dense::{DenseMatrix, NormKind, Vector};
pub use error::{Error, Result};
pub use hexpr::{h_eval, h_jacobian, lower_to_poly, HExpr, HFunc};
pub use integrate::{integrate, scan_blowup_threshold, Ivp, Method, RhsSource, Trajectory, TrajectoryStatus};
pub use iterative::{iterative_solve, sweep_once, IterMethod, IterativeOptions};
pub use poly::{IdentityResiduals, LinearizedForm, PolySystem};
pub use pseudo_jacobian::{NonlinearRhs, RankOneForm};
pub use quasi_newton::{qn_solve, QnOptions, QnVariant, ReinitPolicy};
pub use stability::StabilityReport;
pub use tensor::HomogeneousForm;
pub use trace::{SolverStatus, SolverTrace};
