use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    ground_state, straight_profiles, tube_mesh, ExperimentReport, Numerics, Relation, Table,
};
use crate::cross_section::CrossSectionShape;
use crate::error::{input, Result};
use crate::oracles::separable_tube_p2;
use crate::tube_form::{
    beta_schedule, conjugate_weight, cutoff_sequence, dirichlet_tube_eigenvalue, product_trial,
    rayleigh_gap, straight_trial_bound, tube_oracle_p2_below, EndCondition,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StraightConfig {
    pub shape: CrossSectionShape,
    pub numerics: Numerics,
    /// Truncation half-lengths `L`.
    pub lengths: Vec<f64>,
    /// Indices `n` of the cutoff sequence `φ_n ⊗ φ₁`.
    pub cutoffs: Vec<usize>,
    /// The gap at the largest `L` must not exceed this fraction of `λ₁(ω)`.
    pub gap_fraction: f64,
    /// Relative tolerance of the `p = 2` comparison with `(π/(2L))²`.
    pub separable_tolerance: f64,
    pub oracle: bool,
}

impl StraightConfig {
    pub fn new(shape: CrossSectionShape, numerics: Numerics) -> Self {
        Self {
            shape,
            numerics,
            lengths: vec![5.0, 10.0, 20.0],
            cutoffs: vec![4, 8, 16],
            gap_fraction: 0.02,
            separable_tolerance: 0.1,
            oracle: false,
        }
    }
}

/// Straight untwisted tube: the truncated eigenvalues approach `λ₁(ω_h)`
/// from above and the cutoff sequence drives the Rayleigh gap to zero.
pub fn straight_tube_experiment(config: &StraightConfig) -> Result<ExperimentReport> {
    config.numerics.validate()?;
    if config.lengths.is_empty() || config.lengths.iter().any(|&l| !(l > 0.0)) {
        return input("straight experiment needs positive lengths");
    }
    if config.cutoffs.contains(&0) {
        return input("cutoff indices must be at least 1");
    }
    let num = &config.numerics;
    let p = num.p;
    let mut report = ExperimentReport::new("straight");
    report.input("shape", &config.shape);
    report.input("numerics", num);
    report.input("lengths", &config.lengths);
    report.input("cutoffs", &config.cutoffs);
    let (section, state) = ground_state(&config.shape, num, &mut report)?;
    let lambda1 = state.eigenvalue;
    let (kappa, twist) = straight_profiles(&section);

    let mut lengths = config.lengths.clone();
    lengths.sort_by(f64::total_cmp);
    let mut table = Table::new(
        "lengths",
        &["L", "lambda", "gap", "separable_gap", "oracle"],
    );
    let mut min_gap = f64::INFINITY;
    let mut worst_separable: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut eigenvalues = Vec::new();
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
        let pair = dirichlet_tube_eigenvalue(&mesh, p, &num.solver, None, None)?;
        report.time("tube_solves", start);
        let gap = pair.eigenvalue - lambda1;
        min_gap = min_gap.min(gap);
        eigenvalues.push(pair.eigenvalue);
        let separable = (PI / (2.0 * l)).powi(2);
        if p == 2.0 {
            worst_separable = worst_separable.max((gap / separable - 1.0).abs());
        }
        let mut oracle = f64::NAN;
        if config.oracle && p == 2.0 {
            let start = Instant::now();
            oracle = tube_oracle_p2_below(&mesh, &num.solver, None, pair.eigenvalue)?;
            report.time("oracle", start);
            worst_oracle = worst_oracle.max((oracle - pair.eigenvalue).abs() / pair.eigenvalue);
            report.oracle(&format!("tube_p2_L{l}"), oracle);
            report.oracle(&format!("separable_L{l}"), separable_tube_p2(lambda1, l));
        }
        table.push(vec![l, pair.eigenvalue, gap, separable, oracle]);
    }
    report.quantity("eigenvalues", &eigenvalues);
    report.quantity("gaps", table.column("gap"));
    let n = eigenvalues.len();
    if n >= 2 && (lengths[n - 1] / lengths[n - 2] - 2.0).abs() < 1e-12 {
        // The gap behaves like C/L², so λ(2L) − (λ(L) − λ(2L))/3 removes it.
        let limit = eigenvalues[n - 1] - (eigenvalues[n - 2] - eigenvalues[n - 1]) / 3.0;
        report.quantity("extrapolated_limit", limit);
        report
            .note("extrapolated_limit assumes a gap of order 1/L² and is an estimate, not a bound");
    }
    let last_gap = eigenvalues[n - 1] - lambda1;
    report.check(
        "straight.poincare",
        min_gap,
        Relation::GreaterEq,
        -1e-10,
        "min over L of λ_L − λ₁(ω_h)",
    );
    report.check(
        "straight.gap_at_largest_length",
        last_gap / lambda1,
        Relation::LessEq,
        config.gap_fraction,
        format!("(λ_L − λ₁(ω_h))/λ₁(ω_h) at L = {}", lengths[n - 1]),
    );
    if p == 2.0 {
        report.check(
            "straight.separable",
            worst_separable,
            Relation::LessEq,
            config.separable_tolerance,
            "max over L of |gap/(π/(2L))² − 1|",
        );
    }
    if config.oracle && p == 2.0 {
        report.check(
            "straight.oracle_agreement",
            worst_oracle,
            Relation::LessEq,
            1e-6,
            "max relative deviation from inverse iteration",
        );
    }
    report.table(table);

    if !config.cutoffs.is_empty() {
        let mut cutoffs = config.cutoffs.clone();
        cutoffs.sort_unstable();
        let reach = 2.0 * *cutoffs.last().unwrap_or(&1) as f64;
        let mesh = tube_mesh(
            &section,
            kappa,
            twist,
            (-reach, reach),
            num.h_s,
            EndCondition::Dirichlet,
        )?;
        let mut table = Table::new("cutoffs", &["n", "rayleigh_gap", "bound"]);
        let start = Instant::now();
        for &n in &cutoffs {
            let cut = cutoff_sequence(n, false)?;
            let field = product_trial(&mesh, |s| cut.value(s), &state)?;
            let gap = rayleigh_gap(&mesh, &field, p, lambda1, None)?;
            let nf = n as f64;
            let bound = if n >= 2 {
                straight_trial_bound(p, nf, conjugate_weight(beta_schedule(nf)), lambda1)
            } else {
                f64::NAN
            };
            table.push(vec![nf, gap, bound]);
        }
        report.time("trial_functions", start);
        let gaps = table.column("rayleigh_gap").unwrap_or_default();
        let worst_step = gaps
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        report.quantity("cutoff_gaps", &gaps);
        if gaps.len() >= 2 {
            report.check(
                "straight.cutoff_decreasing",
                worst_step,
                Relation::Less,
                0.0,
                "max of R[ψ_next] − R[ψ_n] along the cutoff sequence",
            );
        }
        report.table(table);
    }
    Ok(report)
}
