use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    ground_state, straight_profiles, tube_mesh, ExperimentReport, Numerics, Relation, Table,
};
use crate::cross_section::{CrossSectionShape, GroundState};
use crate::error::{input, Result};
use crate::geometry::Profile;
use crate::tube_form::{dirichlet_tube_eigenvalue, tube_oracle_p2_below, EndCondition, Potential};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalityConfig {
    pub shape: CrossSectionShape,
    pub numerics: Numerics,
    pub potential: Potential,
    pub lengths: Vec<f64>,
    /// Required depth of `λ₁^V − λ₁(ω_h)` below zero at the largest length.
    pub margin: f64,
    /// Absolute tolerance of the `p = 2` oracle comparison.
    pub oracle_tolerance: f64,
    pub oracle: bool,
}

impl CriticalityConfig {
    pub fn new(shape: CrossSectionShape, numerics: Numerics, potential: Potential) -> Self {
        Self {
            shape,
            numerics,
            potential,
            lengths: vec![30.0],
            margin: 1e-3,
            oracle_tolerance: 1e-4,
            oracle: false,
        }
    }
}

/// `∫_ℝ V_long(s) ds` for a compactly supported or integrable profile.
fn longitudinal_integral(profile: &Profile) -> Result<f64> {
    match *profile {
        Profile::Zero => Ok(0.0),
        Profile::Decaying { amplitude } => Ok(amplitude * std::f64::consts::PI),
        Profile::Bump { .. } | Profile::Plateau { .. } => {
            let (lo, hi) = profile.support().unwrap_or((0.0, 0.0));
            Ok(profile.antiderivative(hi) - profile.antiderivative(lo))
        }
        Profile::Constant { value: 0.0 } => Ok(0.0),
        Profile::Constant { .. } => {
            input("potential must decay along the tube; a constant longitudinal profile does not")
        }
    }
}

/// `∫∫ V |φ₁|^p ds dt` with the transverse integral taken at element
/// barycenters, as in the discrete form.
fn potential_witness(potential: &Potential, state: &GroundState) -> Result<f64> {
    let long = longitudinal_integral(&potential.longitudinal)?;
    let mesh = &state.mesh;
    let mut trans = 0.0;
    for e in 0..mesh.n_elements() {
        let t = mesh.barycenter(e);
        let r = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        trans += mesh.volume(e)
            * potential.transverse.value(r)
            * state.element_value(e).abs().powf(state.p);
    }
    Ok(long * trans)
}

/// Straight tube with a nonpositive potential well: the threshold drops
/// below `λ₁(ω)` for every nontrivial well.
pub fn criticality_experiment(config: &CriticalityConfig) -> Result<ExperimentReport> {
    config.numerics.validate()?;
    config.potential.longitudinal.validate()?;
    config.potential.transverse.validate()?;
    if config.lengths.is_empty() || config.lengths.iter().any(|&l| !(l > 0.0)) {
        return input("criticality experiment needs positive lengths");
    }
    let num = &config.numerics;
    let p = num.p;
    let mut report = ExperimentReport::new("criticality");
    report.input("shape", &config.shape);
    report.input("numerics", num);
    report.input("potential", &config.potential);
    report.input("lengths", &config.lengths);
    let witness_integral = longitudinal_integral(&config.potential.longitudinal)?;
    let (section, state) = ground_state(&config.shape, num, &mut report)?;
    let lambda1 = state.eigenvalue;
    let (kappa, twist) = straight_profiles(&section);
    let trivial = config.potential.is_zero() || witness_integral == 0.0;

    let mut lengths = config.lengths.clone();
    lengths.sort_by(f64::total_cmp);
    let mut table = Table::new("lengths", &["L", "lambda", "gap", "oracle"]);
    let mut last = (f64::NAN, f64::NAN);
    for &l in &lengths {
        let mesh = tube_mesh(
            &section,
            kappa.clone(),
            twist.clone(),
            (-l, l),
            num.h_s,
            EndCondition::Dirichlet,
        )?;
        let start = Instant::now();
        let pair = dirichlet_tube_eigenvalue(&mesh, p, &num.solver, Some(&config.potential), None)?;
        report.time("tube_solves", start);
        let mut oracle = f64::NAN;
        if config.oracle && p == 2.0 {
            let start = Instant::now();
            oracle =
                tube_oracle_p2_below(&mesh, &num.solver, Some(&config.potential), pair.eigenvalue)?;
            report.time("oracle", start);
            report.oracle(&format!("tube_p2_L{l}"), oracle);
        }
        table.push(vec![l, pair.eigenvalue, pair.eigenvalue - lambda1, oracle]);
        last = (pair.eigenvalue, oracle);
    }
    let gap = last.0 - lambda1;
    report.quantity("lambda", last.0);
    report.quantity("gap", gap);
    let witness = potential_witness(&config.potential, &state)?;
    report.quantity("witness_integral", witness);

    if trivial {
        report.note("potential vanishes identically; the experiment reduces to the straight tube");
        report.check(
            "criticality.trivial_potential",
            gap,
            Relation::GreaterEq,
            -1e-10,
            "λ_L − λ₁(ω_h) with V = 0",
        );
    } else {
        report.check(
            "criticality.witness_negative",
            witness,
            Relation::Less,
            0.0,
            "∫ V |φ₁|^p ds dt",
        );
        report.check(
            "criticality.gap_below_threshold",
            gap,
            Relation::Less,
            -config.margin,
            format!("λ₁^V − λ₁(ω_h) at L = {}", lengths[lengths.len() - 1]),
        );
    }
    if config.oracle && p == 2.0 {
        report.check(
            "criticality.oracle_agreement",
            (last.1 - last.0).abs(),
            Relation::LessEq,
            config.oracle_tolerance,
            "|descent − inverse iteration| at the largest L",
        );
    }
    report.table(table);
    Ok(report)
}
