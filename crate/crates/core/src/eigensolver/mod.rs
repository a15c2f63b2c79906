//! Minimization of p-homogeneous Rayleigh quotients.

mod check;
mod descent;
mod form;
mod inverse;

pub use check::gradient_check;
pub use descent::minimize_quotient;
pub use form::{CellForm, FormGradient, FormValue};
pub use inverse::{inverse_iteration_p2, RitzPairs};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// When the `ε` regularization of `(|∇u|² + ε²)^{p/2}` is driven to zero
/// through a sequence of stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuation {
    /// Only for `p < 2`.
    Auto,
    On,
    Off,
}

/// Starting field of the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// All free coordinates equal to one.
    Ones,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop when the objective decreased by less than this fraction over
    /// `stagnation_window` iterations.
    pub stagnation_tol: f64,
    pub stagnation_window: usize,
    /// Relative gradient tolerance `‖∇F‖ / ‖∇Φ‖`.
    pub gradient_tol: f64,
    pub eps_start: f64,
    pub eps_factor: f64,
    pub eps_floor: f64,
    pub continuation: Continuation,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub initialization: Initialization,
    /// Iterations between rebuilds of the weighted-stiffness preconditioner
    /// when `p ≠ 2`.
    pub precond_refresh: usize,
    /// Relative accuracy assumed for reported eigenvalues; verdict margins
    /// are multiples of it.
    pub eigen_rel_tol: f64,
    /// Block size and shift of the `p = 2` inverse iteration.
    pub block_size: usize,
    pub shift: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            stagnation_tol: 1e-10,
            stagnation_window: 100,
            gradient_tol: 1e-7,
            eps_start: 1e-1,
            eps_factor: 0.25,
            eps_floor: 1e-8,
            continuation: Continuation::Auto,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            initialization: Initialization::Ones,
            precond_refresh: 10,
            eigen_rel_tol: 1e-8,
            block_size: 4,
            shift: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("stagnation_tol", self.stagnation_tol),
            ("gradient_tol", self.gradient_tol),
            ("eps_start", self.eps_start),
            ("eps_floor", self.eps_floor),
            ("initial_step", self.initial_step),
            ("sufficient_decrease", self.sufficient_decrease),
            ("eigen_rel_tol", self.eigen_rel_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return input(format!("solver.{name} must be positive, got {v}"));
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return input(format!(
                "solver.shrink must lie in (0, 1), got {}",
                self.shrink
            ));
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return input(format!(
                "solver.eps_factor must lie in (0, 1), got {}",
                self.eps_factor
            ));
        }
        if self.max_iterations == 0
            || self.stagnation_window == 0
            || self.precond_refresh == 0
            || self.block_size == 0
        {
            return input("solver iteration counts must be positive");
        }
        if !self.shift.is_finite() {
            return input("solver.shift must be finite");
        }
        Ok(())
    }

    /// Regularization levels for the stages of a solve at exponent `p`.
    pub fn epsilon_schedule(&self, p: f64) -> Vec<f64> {
        let active = match self.continuation {
            Continuation::Auto => p < 2.0,
            Continuation::On => true,
            Continuation::Off => false,
        };
        if !active {
            return vec![0.0];
        }
        let mut eps = Vec::new();
        let mut e = self.eps_start;
        while e > self.eps_floor {
            eps.push(e);
            e *= self.eps_factor;
        }
        eps.push(self.eps_floor);
        eps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    /// Gradient tolerance met in the final stage.
    Converged,
    /// Objective stopped decreasing before the gradient tolerance was met.
    Stagnated,
    MaxIterations,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverResult {
    /// Quotient of the returned field at `ε = 0`.
    pub eigenvalue: f64,
    /// Minimizer on the free coordinates, normalized to unit p-mass.
    pub field: Vec<f64>,
    pub iterations: usize,
    /// Final relative gradient norm.
    pub gradient_norm: f64,
    /// Regularization of the final stage.
    pub epsilon: f64,
    pub converged: bool,
    pub status: SolverStatus,
    /// Objective value at every iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
    /// Index into `history` where each `ε` stage begins.
    #[serde(skip)]
    pub stage_starts: Vec<usize>,
}

impl SolverResult {
    /// Objective values of stage `i`.
    pub fn stage_history(&self, i: usize) -> &[f64] {
        let start = self.stage_starts[i];
        let end = self
            .stage_starts
            .get(i + 1)
            .copied()
            .unwrap_or(self.history.len());
        &self.history[start..end]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_runs_down_to_floor() {
        let c = SolverConfig::default();
        assert_eq!(c.epsilon_schedule(2.0), vec![0.0]);
        let s = c.epsilon_schedule(1.5);
        assert_eq!(s[0], 0.1);
        assert_eq!(*s.last().unwrap(), 1e-8);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        let on = SolverConfig {
            continuation: Continuation::On,
            ..SolverConfig::default()
        };
        assert_eq!(on.epsilon_schedule(3.0).len(), s.len());
    }

    #[test]
    fn invalid_shrink_rejected() {
        let c = SolverConfig {
            shrink: 1.0,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
