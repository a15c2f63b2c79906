use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ground_state, ExperimentReport, Numerics, Relation};
use crate::cross_section::{symmetry_moments, CrossSectionShape};
use crate::error::Result;
use crate::oracles::{
    disk_radial_fd, interval_eigenvalue, shooting_interval_eigenvalue, BESSEL_J0_FIRST_ZERO,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossSectionConfig {
    pub shape: CrossSectionShape,
    pub numerics: Numerics,
    /// Relative tolerance against the interval closed form and the shooting
    /// method.
    pub interval_tolerance: f64,
    /// Relative tolerance against `j₀₁²/R²` for the disk at `p = 2`.
    pub disk_tolerance: f64,
    pub oracle: bool,
}

impl CrossSectionConfig {
    pub fn new(shape: CrossSectionShape, numerics: Numerics) -> Self {
        Self {
            shape,
            numerics,
            interval_tolerance: 0.01,
            disk_tolerance: 0.02,
            oracle: false,
        }
    }
}

/// First eigenvalue of the cross-section, checked against the references
/// that exist for its shape.
pub fn cross_section_experiment(config: &CrossSectionConfig) -> Result<ExperimentReport> {
    config.numerics.validate()?;
    let p = config.numerics.p;
    let mut report = ExperimentReport::new("cross-section");
    report.input("shape", &config.shape);
    report.input("numerics", &config.numerics);
    let (mesh, state) = ground_state(&config.shape, &config.numerics, &mut report)?;
    let lambda = state.eigenvalue;
    report.quantity("iterations", state.iterations);
    report.quantity("normalization_residual", state.normalization_residual);
    let (m0, m1) = symmetry_moments(&state);
    report.quantity("moment_density", m0);
    report.quantity("moment_gradient", m1);
    report.quantity("elements", mesh.n_elements());

    let rel = |reference: f64| (lambda - reference).abs() / reference;
    match config.shape {
        CrossSectionShape::Interval { length, .. } => {
            let exact = interval_eigenvalue(p, length);
            report.quantity("closed_form", exact);
            report.check(
                "cross_section.closed_form",
                rel(exact),
                Relation::LessEq,
                config.interval_tolerance,
                "relative deviation from (p−1)(π_p/L)^p",
            );
            if config.oracle {
                let start = Instant::now();
                let shot = shooting_interval_eigenvalue(p, length)?;
                report.time("oracle", start);
                report.oracle("shooting", shot);
                report.quantity("shooting_oracle", shot);
                report.check(
                    "cross_section.shooting_oracle",
                    rel(shot),
                    Relation::LessEq,
                    config.interval_tolerance,
                    "relative deviation from the shooting method",
                );
            }
        }
        CrossSectionShape::Disk { radius } if p == 2.0 => {
            let exact = (BESSEL_J0_FIRST_ZERO / radius).powi(2);
            report.quantity("bessel", exact);
            report.check(
                "cross_section.bessel",
                rel(exact),
                Relation::LessEq,
                config.disk_tolerance,
                "relative deviation from j₀₁²/R²",
            );
            if config.oracle {
                let start = Instant::now();
                let fd = disk_radial_fd(radius, 4000);
                report.time("oracle", start);
                report.oracle("radial_fd", fd);
                report.quantity("radial_fd_oracle", fd);
                report.check(
                    "cross_section.radial_oracle",
                    rel(fd),
                    Relation::LessEq,
                    config.disk_tolerance,
                    "relative deviation from radial finite differences",
                );
            }
        }
        _ => report.note(format!(
            "no reference value for {} at p = {p}; eigenvalue reported without a verdict",
            config.shape
        )),
    }
    report.check(
        "cross_section.normalized",
        state.normalization_residual,
        Relation::LessEq,
        1e-8,
        "|‖φ₁‖_p − 1|",
    );
    Ok(report)
}
