//! Iteration history shared by all nonlinear solvers.

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverStatus {
    Converged { iterations: usize },
    MaxIterExceeded,
    /// No row interchange produced a usable diagonal entry in this row.
    SingularPivot { row: usize },
    Diverged { iteration: usize },
    /// The linear solve with the current Jacobian failed.
    SingularJacobian { iteration: usize },
    /// A rank-one update denominator fell below the guard and reinitialization
    /// is disabled.
    GuardTrip { iteration: usize, denominator: String },
}

impl SolverStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolverStatus::Converged { .. })
    }
}

/// Record of one solve. Entry `k` of each per-iteration list refers to the
/// `k`-th iterate, with entry 0 the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub method: String,
    pub iterates: Vec<Vector>,
    /// `‖f(U_k)‖∞`.
    pub residual_norms: Vec<f64>,
    /// `‖U_k − U_{k−1}‖∞`; 0 for the starting point.
    #[serde(default)]
    pub step_norms: Vec<f64>,
    pub status: SolverStatus,
    /// Equation ordering in effect at the end of the solve (identity when no
    /// interchange happened).
    #[serde(default)]
    pub permutation: Vec<usize>,
    /// Jacobian approximation held at each iterate (quasi-Newton solvers).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jacobians: Vec<DenseMatrix>,
    /// Relative Jacobian deviation at each iterate; `None` where `f̄(U) = 0`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deviations: Vec<Option<f64>>,
    /// Number of times the Jacobian pair was rebuilt from the exact Jacobian.
    #[serde(default)]
    pub reinitializations: usize,
}

impl SolverTrace {
    pub(crate) fn start(method: impl Into<String>, u0: &Vector, residual: f64, n: usize) -> Self {
        SolverTrace {
            method: method.into(),
            iterates: vec![u0.clone()],
            residual_norms: vec![residual],
            step_norms: vec![0.0],
            status: SolverStatus::MaxIterExceeded,
            permutation: (0..n).collect(),
            jacobians: Vec::new(),
            deviations: Vec::new(),
            reinitializations: 0,
        }
    }

    pub(crate) fn push(&mut self, u: &Vector, residual: f64) {
        let step = self
            .iterates
            .last()
            .map_or(0.0, |prev| u.sub(prev).norm_inf());
        self.iterates.push(u.clone());
        self.residual_norms.push(residual);
        self.step_norms.push(step);
    }

    /// Number of iterations performed (iterates after the start).
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn final_state(&self) -> &Vector {
        self.iterates.last().expect("trace always holds the start point")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().expect("trace always holds the start residual")
    }
}
