//! The transformed energy on truncated tubes, its eigenvalue problems and
//! trial functions.

mod bounds;
mod mesh;
mod trial;

pub use bounds::{
    beta_schedule, conjugate_weight, schedule_bound, split_power_bound, straight_trial_bound,
};
pub use mesh::{assemble, assemble_gradient, DiscreteField, EndCondition, Potential, TubeMesh};
pub use trial::{cutoff_sequence, product_trial, rayleigh_gap, Cutoff};

pub use crate::eigensolver::FormValue;

use serde::Serialize;

use crate::eigensolver::{
    inverse_iteration_p2, minimize_quotient, SolverConfig, SolverResult, SolverStatus,
};
use crate::error::{input, Error, Result};

/// Minimizer of the tube quotient.
#[derive(Clone, Debug, Serialize)]
pub struct TubeEigenpair {
    pub eigenvalue: f64,
    #[serde(skip)]
    pub field: DiscreteField,
    pub solver: SolverResult,
}

fn solve(
    mesh: &TubeMesh,
    p: f64,
    config: &SolverConfig,
    potential: Option<&Potential>,
    initial: Option<&DiscreteField>,
) -> Result<TubeEigenpair> {
    let form = mesh.form(potential)?;
    let init = initial.map(|f| f.free_values(mesh));
    let result = minimize_quotient(&form, p, config, init.as_deref())?;
    if result.status == SolverStatus::MaxIterations {
        return Err(Error::Convergence(Box::new(result)));
    }
    Ok(TubeEigenpair {
        eigenvalue: result.eigenvalue,
        field: DiscreteField::from_free(mesh, &result.field),
        solver: result,
    })
}

/// Lowest quotient on a tube with Dirichlet conditions at both ends, an upper
/// bound for the threshold of the infinite tube.
pub fn dirichlet_tube_eigenvalue(
    mesh: &TubeMesh,
    p: f64,
    config: &SolverConfig,
    potential: Option<&Potential>,
    initial: Option<&DiscreteField>,
) -> Result<TubeEigenpair> {
    if mesh.ends() != (EndCondition::Dirichlet, EndCondition::Dirichlet) {
        return input("Dirichlet tube eigenvalue needs Dirichlet conditions at both ends");
    }
    solve(mesh, p, config, potential, initial)
}

/// Lowest quotient on an unbent segment with free ends.
pub fn neumann_segment_eigenvalue(
    mesh: &TubeMesh,
    p: f64,
    config: &SolverConfig,
    initial: Option<&DiscreteField>,
) -> Result<TubeEigenpair> {
    if mesh.ends() != (EndCondition::Free, EndCondition::Free) {
        return input("segment eigenvalue needs free conditions at both ends");
    }
    if !mesh.curvature().is_zero() {
        return input("segment eigenvalue is defined for unbent tubes (κ = 0)");
    }
    solve(mesh, p, config, None, initial)
}

/// The same eigenvalue for `p = 2` by block inverse iteration on the
/// assembled stiffness and mass matrices.
pub fn tube_oracle_p2(
    mesh: &TubeMesh,
    config: &SolverConfig,
    potential: Option<&Potential>,
) -> Result<f64> {
    let form = mesh.form(potential)?;
    let (result, _) = inverse_iteration_p2(&form, config)?;
    Ok(result.eigenvalue)
}

/// [`tube_oracle_p2`] with shifts placed below `ceiling`, an estimate from
/// above of the lowest eigenvalue. Shifts that turn out not to lie below the
/// spectrum are lowered step by step, ending with the unshifted iteration.
pub fn tube_oracle_p2_below(
    mesh: &TubeMesh,
    config: &SolverConfig,
    potential: Option<&Potential>,
    ceiling: f64,
) -> Result<f64> {
    let form = mesh.form(potential)?;
    let mut config = config.clone();
    for margin in [0.01, 0.03, 0.1, 0.3, 1.0] {
        config.shift = if margin < 1.0 {
            ceiling * (1.0 - margin)
        } else {
            0.0
        };
        match inverse_iteration_p2(&form, &config) {
            Ok((result, _)) => return Ok(result.eigenvalue),
            Err(Error::NotPositiveDefinite { .. }) if margin < 1.0 => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("the unshifted attempt always returns")
}
