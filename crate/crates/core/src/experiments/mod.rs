//! Runnable numerical experiments with pass/fail verdicts.
//!
//! Each experiment solves a family of discrete problems, records the
//! computed quantities and CSV tables in an [`ExperimentReport`], and checks
//! them against named rules. The `oracle` switch of every configuration
//! additionally runs the independent reference computations (the `p = 2`
//! inverse iteration and the one-dimensional formulas) and adds agreement
//! verdicts.

mod bending;
mod criticality;
mod essential;
mod report;
mod section;
mod straight;
mod twisting;

pub use bending::{bending_experiment, BendingConfig, BendingPerturbation};
pub use criticality::{criticality_experiment, CriticalityConfig};
pub use essential::{essential_threshold_bounds, EssentialBounds, EssentialConfig};
pub use report::{digest, ExperimentReport, Relation, Table, Verdict};
pub use section::{cross_section_experiment, CrossSectionConfig};
pub use straight::{straight_tube_experiment, StraightConfig};
pub use twisting::{
    assemble_hardy_weight, hardy_weight, twisting_hardy_experiment, HardyCertificate,
    TwistHardyConfig,
};

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cross_section::{
    build_mesh, solve_ground_state, CrossSectionMesh, CrossSectionShape, GroundState,
};
use crate::eigensolver::SolverConfig;
use crate::error::{input, Result};
use crate::geometry::{CurvatureProfile, TwistProfile};
use crate::tube_form::{EndCondition, TubeMesh};

/// Exponent, resolutions and solver settings shared by all experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub p: f64,
    /// Cross-section mesh size.
    pub h: f64,
    /// Longitudinal step.
    pub h_s: f64,
    pub solver: SolverConfig,
}

impl Numerics {
    pub fn new(p: f64, h: f64, h_s: f64) -> Self {
        Self {
            p,
            h,
            h_s,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return input(format!("exponent p must exceed 1, got {}", self.p));
        }
        if !(self.h > 0.0 && self.h.is_finite() && self.h_s > 0.0 && self.h_s.is_finite()) {
            return input(format!(
                "resolutions must be positive, got h = {}, h_s = {}",
                self.h, self.h_s
            ));
        }
        self.solver.validate()
    }

    /// Eigenvalue margin `factor × eigen_rel_tol × |λ|`.
    pub fn margin(&self, factor: f64, lambda: f64) -> f64 {
        factor * self.solver.eigen_rel_tol * lambda.abs()
    }
}

/// Cross-section mesh and its ground state, timed into the report.
pub(crate) fn ground_state(
    shape: &CrossSectionShape,
    numerics: &Numerics,
    report: &mut ExperimentReport,
) -> Result<(Arc<CrossSectionMesh>, GroundState)> {
    shape.validate()?;
    // Every experiment records its inputs before this point.
    let sealed = digest(&report.inputs)?;
    report.input("digest", sealed);
    let start = Instant::now();
    let mesh = Arc::new(build_mesh(shape, numerics.h)?);
    let state = solve_ground_state(&mesh, numerics.p, &numerics.solver)?;
    report.time("cross_section", start);
    report.quantity("lambda1_section", state.eigenvalue);
    report.quantity("section_nodes", mesh.n_nodes());
    let mut bytes = Vec::new();
    mesh.export(&mut bytes)?;
    report
        .attachments
        .push(("cross_section.mesh".into(), bytes));
    Ok((mesh, state))
}

/// Tube mesh on `[lo, hi]` whose step is `h_s` rounded so that both ends
/// are grid points.
pub(crate) fn tube_mesh(
    section: &Arc<CrossSectionMesh>,
    curvature: CurvatureProfile,
    twist: TwistProfile,
    (lo, hi): (f64, f64),
    h_s: f64,
    ends: EndCondition,
) -> Result<TubeMesh> {
    let slices = ((hi - lo) / h_s).round().max(1.0) as usize;
    TubeMesh::new(
        Arc::clone(section),
        curvature,
        twist,
        lo,
        hi,
        slices,
        ends,
        ends,
    )
}

pub(crate) fn straight_profiles(section: &CrossSectionMesh) -> (CurvatureProfile, TwistProfile) {
    let d = section.dim() + 1;
    (CurvatureProfile::straight(d), TwistProfile::none(d))
}

/// Metadata for `list`: experiment name, required keys and what it checks.
#[derive(Clone, Copy, Debug)]
pub struct ExperimentInfo {
    pub name: &'static str,
    /// Short name of the result the experiment exercises.
    pub topic: &'static str,
    pub claim: &'static str,
    pub required: &'static [&'static str],
}

pub const EXPERIMENTS: [ExperimentInfo; 6] = [
    ExperimentInfo {
        name: "cross-section",
        topic: "cross-section ground state",
        claim: "first Dirichlet eigenvalue of the cross-section against one-dimensional and Bessel references",
        required: &["geometry.shape", "numerics.p"],
    },
    ExperimentInfo {
        name: "straight",
        topic: "straight-tube threshold",
        claim: "the straight tube has threshold λ₁(ω) and no spectral gap",
        required: &["geometry.shape", "numerics.p"],
    },
    ExperimentInfo {
        name: "criticality",
        topic: "criticality of the straight tube",
        claim: "any nonpositive nontrivial potential pushes the straight-tube threshold below λ₁(ω)",
        required: &["geometry.shape", "numerics.p", "potential.longitudinal"],
    },
    ExperimentInfo {
        name: "essential",
        topic: "stability of the essential threshold",
        claim: "bending and twisting that vanish at infinity keep the essential threshold at λ₁(ω)",
        required: &["geometry.shape", "geometry.curvature", "numerics.p"],
    },
    ExperimentInfo {
        name: "bend",
        topic: "bending gap",
        claim: "bending with a circular cross-section creates a spectral gap below λ₁(ω)",
        required: &["geometry.shape", "geometry.curvature", "numerics.p"],
    },
    ExperimentInfo {
        name: "twist-hardy",
        topic: "twisting Hardy inequality",
        claim: "twisting a non-circular cross-section yields a positive Hardy weight",
        required: &["geometry.shape", "geometry.twist", "numerics.p"],
    },
];
