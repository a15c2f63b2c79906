use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ground_state, tube_mesh, ExperimentReport, Numerics, Relation, Table};
use crate::cross_section::{twist_magnitude, CrossSectionShape};
use crate::error::{input, Result};
use crate::geometry::{check_embedding, CurvatureProfile, TwistProfile};
use crate::tube_form::{cutoff_sequence, product_trial, rayleigh_gap, EndCondition};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EssentialConfig {
    pub shape: CrossSectionShape,
    pub curvature: CurvatureProfile,
    pub twist: TwistProfile,
    pub numerics: Numerics,
    /// Tail start `l` of the lower bound.
    pub tail_start: f64,
    /// Indices of the shifted trial functions `φ̃_n ⊗ φ₁`.
    pub cutoffs: Vec<usize>,
    /// `a` in `(1 − a‖κ‖)/(1 + a‖κ‖)`; defaults to `sup_{t∈ω} |t|`.
    pub radius_bound: Option<f64>,
    /// Both bounds must lie within this fraction of `λ₁(ω_h)`.
    pub bracket: f64,
}

impl EssentialConfig {
    pub fn new(
        shape: CrossSectionShape,
        curvature: CurvatureProfile,
        twist: TwistProfile,
        numerics: Numerics,
    ) -> Self {
        Self {
            shape,
            curvature,
            twist,
            numerics,
            tail_start: 20.0,
            cutoffs: vec![4, 8, 16],
            radius_bound: None,
            bracket: 0.03,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EssentialBounds {
    pub lambda1: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `((1 − a k)/(1 + a k))·λ₁` with `k = sup_{|s|≥l} |κ(s)|`.
pub fn tail_lower_bound(
    curvature: &CurvatureProfile,
    radius_bound: f64,
    tail_start: f64,
    lambda1: f64,
) -> f64 {
    let k = radius_bound * curvature.tail_sup(tail_start);
    (1.0 - k) / (1.0 + k) * lambda1
}

/// Lower bound from the Jacobian bounds on the tail and upper bound from
/// shifted trial functions for the threshold outside a compact set.
pub fn essential_threshold_bounds(
    config: &EssentialConfig,
) -> Result<(EssentialBounds, ExperimentReport)> {
    config.numerics.validate()?;
    if !config.curvature.decays() || !config.twist.decays() {
        return input(
            "essential threshold bounds need curvature and twist rate that vanish at infinity",
        );
    }
    if config.cutoffs.is_empty() || config.cutoffs.iter().any(|&n| n < 3) {
        return input(
            "shifted cutoffs need n ≥ 3 so that the support lies to the right of the origin",
        );
    }
    if !(config.tail_start >= 0.0) {
        return input("tail start l must be nonnegative");
    }
    let num = &config.numerics;
    let p = num.p;
    let a = config
        .radius_bound
        .unwrap_or_else(|| config.shape.radius_bound());
    let embedding = check_embedding(&config.curvature, a);
    if !embedding.holds {
        return input(format!(
            "embedding condition fails: a·‖κ‖∞ = {} ≥ 1",
            a * config.curvature.sup_norm()
        ));
    }
    let mut report = ExperimentReport::new("essential");
    report.input("shape", &config.shape);
    report.input("curvature", &config.curvature);
    report.input("twist", &config.twist);
    report.input("numerics", num);
    report.input("tail_start", config.tail_start);
    report.input("cutoffs", &config.cutoffs);
    report.input("radius_bound", a);
    let (section, state) = ground_state(&config.shape, num, &mut report)?;
    let lambda1 = state.eigenvalue;

    let lower = tail_lower_bound(&config.curvature, a, config.tail_start, lambda1);
    report.quantity(
        "tail_curvature",
        config.curvature.tail_sup(config.tail_start),
    );
    report.quantity("lower", lower);

    if !config.twist.is_untwisted() && config.twist.dim() == 3 {
        let r = twist_magnitude(&state, &config.twist, config.tail_start)?;
        report.quantity("twist_magnitude_at_tail", r);
    }

    let mut table = Table::new("shifted_trials", &["n", "rayleigh_gap", "upper"]);
    let start = Instant::now();
    for &n in &config.cutoffs {
        let cut = cutoff_sequence(n, true)?;
        let mesh = tube_mesh(
            &section,
            config.curvature.clone(),
            config.twist.clone(),
            cut.support(),
            num.h_s,
            EndCondition::Dirichlet,
        )?;
        let field = product_trial(&mesh, |s| cut.value(s), &state)?;
        let gap = rayleigh_gap(&mesh, &field, p, lambda1, None)?;
        table.push(vec![n as f64, gap, lambda1 + gap]);
    }
    report.time("trial_functions", start);
    let upper = table
        .column("upper")
        .unwrap_or_default()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    report.quantity("upper", upper);
    report.table(table);

    report.check(
        "essential.lower_below_threshold",
        lower - lambda1,
        Relation::LessEq,
        0.0,
        "lower − λ₁(ω_h)",
    );
    report.check(
        "essential.lower_bracket",
        (lambda1 - lower) / lambda1,
        Relation::LessEq,
        config.bracket,
        "(λ₁ − lower)/λ₁",
    );
    report.check(
        "essential.upper_bracket",
        (upper - lambda1).abs() / lambda1,
        Relation::LessEq,
        config.bracket,
        "|upper − λ₁|/λ₁",
    );
    report.check(
        "essential.ordered",
        upper - lower,
        Relation::GreaterEq,
        0.0,
        "upper − lower",
    );
    Ok((
        EssentialBounds {
            lambda1,
            lower,
            upper,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;

    #[test]
    fn tail_formula_examples() {
        let straight = CurvatureProfile::straight(2);
        assert_eq!(tail_lower_bound(&straight, 0.5, 10.0, 9.0), 9.0);
        let bump = CurvatureProfile::new(vec![Profile::bump(0.0, 2.0, 0.5)]).unwrap();
        assert_eq!(tail_lower_bound(&bump, 0.5, 2.0, 9.0), 9.0);
        let decaying = CurvatureProfile::new(vec![Profile::Decaying { amplitude: 0.3 }]).unwrap();
        let k = 0.3 / 101.0;
        let expected = (1.0 - 0.5 * k) / (1.0 + 0.5 * k) * 9.0;
        assert!((tail_lower_bound(&decaying, 0.5, 10.0, 9.0) - expected).abs() < 1e-14);
    }
}
