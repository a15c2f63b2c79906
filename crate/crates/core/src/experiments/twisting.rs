use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ground_state, tube_mesh, ExperimentReport, Numerics, Relation, Table};
use crate::cross_section::{twist_magnitude, CrossSectionShape};
use crate::error::{input, Result};
use crate::geometry::{CurvatureProfile, Profile, TwistProfile};
use crate::tube_form::{
    neumann_segment_eigenvalue, tube_oracle_p2_below, DiscreteField, EndCondition,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistHardyConfig {
    pub shape: CrossSectionShape,
    /// Angular velocity `θ′(s)`.
    pub twist_rate: Profile,
    pub numerics: Numerics,
    /// Base half-length `l`; segments have half-lengths `l + 1, …, l + J`.
    pub base_length: f64,
    /// Truncation depth `J` of the dyadic sum.
    pub depth: usize,
    /// Half-length of the Dirichlet window used by the direct test.
    pub window: f64,
    pub random_fields: usize,
    pub seed: u64,
    /// Expect no effect of the twist (circular or untwisted cross-section).
    pub null_test: bool,
    pub margin_factor: f64,
    /// Relative tolerance of the `p = 2` oracle comparison.
    pub oracle_tolerance: f64,
    pub oracle: bool,
}

impl TwistHardyConfig {
    pub fn new(shape: CrossSectionShape, twist_rate: Profile, numerics: Numerics) -> Self {
        Self {
            shape,
            twist_rate,
            numerics,
            base_length: 2.0,
            depth: 6,
            window: 9.0,
            random_fields: 20,
            seed: 7,
            null_test: false,
            margin_factor: 10.0,
            oracle_tolerance: 1e-6,
            oracle: false,
        }
    }
}

/// Segment gaps and the sampled weight they define.
#[derive(Clone, Debug, Serialize)]
pub struct HardyCertificate {
    pub base_length: f64,
    pub depth: usize,
    /// `l + j` for `j = 1..J`.
    pub lengths: Vec<f64>,
    /// `c_{l+j} = λ₁^N(segment) − λ₁(ω_h)`.
    pub gaps: Vec<f64>,
    /// `(s, ρ(s))`.
    pub samples: Vec<[f64; 2]>,
    /// `min ρ` over `[−(l+1), l+1]`.
    pub positivity_margin: f64,
}

/// `ρ(s) = Σ_j 2^{−j} min{c_{l+j}, 1} χ_{[−(l+j), l+j]}(s)`. Gaps are clamped
/// at zero so that solver noise on a vanishing gap cannot make `ρ` negative.
pub fn hardy_weight(gaps: &[f64], base_length: f64, depth: usize, s: f64) -> f64 {
    gaps.iter()
        .take(depth)
        .enumerate()
        .filter(|(j, _)| s.abs() <= base_length + (*j + 1) as f64)
        .map(|(j, c)| 0.5f64.powi(j as i32 + 1) * c.clamp(0.0, 1.0))
        .sum()
}

/// [`hardy_weight`] on a sample grid.
pub fn assemble_hardy_weight(
    gaps: &[f64],
    base_length: f64,
    depth: usize,
    samples: &[f64],
) -> Vec<f64> {
    samples
        .iter()
        .map(|&s| hardy_weight(gaps, base_length, depth, s))
        .collect()
}

fn aligned(x: f64, h: f64) -> bool {
    let r = x / h;
    (r - r.round()).abs() < 1e-9
}

/// Twisted straight tube: twist-condition magnitude, Neumann segment gaps
/// `c_l`, the Hardy weight they define, and a direct test of the Hardy
/// inequality on random compactly supported fields.
pub fn twisting_hardy_experiment(
    config: &TwistHardyConfig,
) -> Result<(HardyCertificate, ExperimentReport)> {
    config.numerics.validate()?;
    config.shape.validate()?;
    config.twist_rate.validate()?;
    let num = &config.numerics;
    let p = num.p;
    if config.shape.dim() != 2 {
        return input(
            "the twisting experiment needs a two-dimensional cross-section (tubes in R³)",
        );
    }
    let null = config.null_test || config.twist_rate.is_zero();
    if config.shape.is_circular() && !null {
        return input(
            "circular cross-section: twisting a disk or annulus does not change the tube, so no Hardy \
             weight can be certified; set twist.null_test = true to run the null test instead",
        );
    }
    if config.depth == 0 {
        return input("depth J must be at least 1");
    }
    let l = config.base_length;
    let lengths: Vec<f64> = (1..=config.depth).map(|j| l + j as f64).collect();
    let reach = lengths[lengths.len() - 1];
    if !(l >= 0.0) || config.window < reach {
        return input(format!(
            "window {} must contain the largest segment half-length {reach}",
            config.window
        ));
    }
    if !lengths
        .iter()
        .chain([&config.window])
        .all(|&x| aligned(x, num.h_s))
    {
        return input(
            "h_s must divide the window and all segment half-lengths so that the meshes align",
        );
    }

    let mut report = ExperimentReport::new("twist-hardy");
    report.input("shape", &config.shape);
    report.input("twist_rate", &config.twist_rate);
    report.input("numerics", num);
    report.input("base_length", l);
    report.input("depth", config.depth);
    report.input("window", config.window);
    report.input("random_fields", config.random_fields);
    report.input("seed", config.seed);
    report.input("null_test", null);
    let (section, state) = ground_state(&config.shape, num, &mut report)?;
    let lambda1 = state.eigenvalue;
    let twist = TwistProfile::planar(config.twist_rate.clone());
    let kappa = CurvatureProfile::straight(3);
    let margin = num.margin(config.margin_factor, lambda1);
    report.quantity("margin", margin);

    // Twist condition along the tube.
    let mut rtable = Table::new("twist_condition", &["s", "rate", "r"]);
    let steps = (2.0 * config.window / 0.25).round() as usize;
    let mut r_max: f64 = 0.0;
    for i in 0..=steps {
        let s = -config.window + i as f64 * 0.25;
        let r = twist_magnitude(&state, &twist, s)?;
        r_max = r_max.max(r);
        rtable.push(vec![s, config.twist_rate.value(s), r]);
    }
    report.quantity("twist_condition_max", r_max);
    report.table(rtable);

    // Segment gaps.
    let mut ctable = Table::new("segment_gaps", &["l", "lambda_neumann", "c", "oracle"]);
    let mut gaps = Vec::with_capacity(lengths.len());
    let mut worst_oracle: f64 = 0.0;
    for &lj in &lengths {
        let mesh = tube_mesh(
            &section,
            kappa.clone(),
            twist.clone(),
            (-lj, lj),
            num.h_s,
            EndCondition::Free,
        )?;
        let start = Instant::now();
        let pair = neumann_segment_eigenvalue(&mesh, p, &num.solver, None)?;
        report.time("segment_solves", start);
        let c = pair.eigenvalue - lambda1;
        let mut oracle = f64::NAN;
        if config.oracle && p == 2.0 {
            let start = Instant::now();
            oracle = tube_oracle_p2_below(&mesh, &num.solver, None, pair.eigenvalue)?;
            report.time("oracle", start);
            report.oracle(&format!("segment_p2_l{lj}"), oracle);
            worst_oracle = worst_oracle.max((oracle - pair.eigenvalue).abs() / pair.eigenvalue);
        }
        ctable.push(vec![lj, pair.eigenvalue, c, oracle]);
        gaps.push(c);
    }
    report.quantity("segment_gaps", &gaps);
    report.table(ctable);

    if null {
        report.check(
            "twist.null_condition",
            r_max,
            Relation::LessEq,
            1e-6,
            "max_s ∫ |f_μ ∂_μ φ₁|^p dt",
        );
        let worst = gaps.iter().map(|c| c.abs()).fold(0.0, f64::max);
        report.check(
            "twist.null_segment_gap",
            worst,
            Relation::LessEq,
            margin,
            "max_l |c_l|",
        );
    } else {
        report.check(
            "twist.condition",
            r_max,
            Relation::Greater,
            1e-6,
            "max_s ∫ |f_μ ∂_μ φ₁|^p dt",
        );
        for (&lj, &c) in lengths.iter().zip(&gaps) {
            report.check(
                &format!("twist.segment_gap.l{lj}"),
                c,
                Relation::Greater,
                margin,
                "λ₁^N(segment) − λ₁(ω_h)",
            );
        }
    }
    if config.oracle && p == 2.0 {
        report.check(
            "twist.oracle_agreement",
            worst_oracle,
            Relation::LessEq,
            config.oracle_tolerance,
            "max relative deviation of segment eigenvalues from inverse iteration",
        );
    }

    // Weight.
    let sample_s: Vec<f64> = (0..=steps)
        .map(|i| -config.window + i as f64 * 0.25)
        .collect();
    let rho = assemble_hardy_weight(&gaps, l, config.depth, &sample_s);
    let inner = l + 1.0;
    let positivity_margin = sample_s
        .iter()
        .zip(&rho)
        .filter(|(s, _)| s.abs() <= inner)
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    let mut wtable = Table::new("hardy_weight", &["s", "rho"]);
    for (&s, &r) in sample_s.iter().zip(&rho) {
        wtable.push(vec![s, r]);
    }
    report.table(wtable);
    report.quantity("positivity_margin", positivity_margin);
    if !null {
        report.check(
            "twist.weight_positive",
            positivity_margin,
            Relation::Greater,
            0.0,
            format!("min ρ on [−{inner}, {inner}]"),
        );
    }

    // Direct test on the window.
    let w = config.window;
    let mesh = tube_mesh(
        &section,
        kappa,
        twist,
        (-w, w),
        num.h_s,
        EndCondition::Dirichlet,
    )?;
    let mut form = mesh.form(None)?;
    let weights: Vec<f64> = (0..mesh.n_cells())
        .map(|c| -hardy_weight(&gaps, l, config.depth, mesh.cell_center(c).0))
        .collect();
    form.set_potential(weights);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut htable = Table::new(
        "hardy_direct",
        &["field", "energy_gap", "weighted_mass", "mass", "slack"],
    );
    let mut worst = f64::INFINITY;
    let start = Instant::now();
    for i in 0..config.random_fields {
        let center = rng.gen_range(-0.5 * w..0.5 * w);
        let half = rng.gen_range(1.0..0.5 * w);
        let noise = if i % 2 == 0 { 0.0 } else { 0.5 };
        let n_nodes = section.n_nodes();
        let jitter: Vec<f64> = (0..n_nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rough = i % 4 == 3;
        let field = DiscreteField::from_fn(&mesh, |s, j| {
            let x = (s - center) / half;
            let envelope = (1.0 - x * x).max(0.0);
            if rough {
                envelope * jitter[j] * (1.0 + (7.0 * s).sin())
            } else {
                envelope * state.phi[j] * (1.0 + noise * jitter[j])
            }
        });
        let v = form.evaluate(&field.free_values(&mesh), p, 0.0);
        if !(v.mass > 0.0) {
            continue;
        }
        let gap = v.energy - lambda1 * v.mass;
        let slack = (gap + v.potential) / v.mass;
        worst = worst.min(slack);
        htable.push(vec![i as f64, gap, -v.potential, v.mass, slack]);
    }
    report.time("hardy_direct", start);
    report.table(htable);
    report.quantity("hardy_min_slack", worst);
    report.check(
        "twist.hardy_direct",
        worst,
        Relation::GreaterEq,
        -1e-8,
        "min over fields of (Q − λ₁N − ∫ρ|u|^p)/N",
    );

    let certificate = HardyCertificate {
        base_length: l,
        depth: config.depth,
        lengths,
        gaps,
        samples: sample_s.iter().zip(&rho).map(|(&s, &r)| [s, r]).collect(),
        positivity_margin,
    };
    Ok((certificate, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        let ones = vec![2.0; 6];
        assert!((hardy_weight(&ones, 2.0, 6, 0.0) - (1.0 - 0.5f64.powi(6))).abs() < 1e-15);
        assert_eq!(hardy_weight(&ones, 2.0, 6, 8.5), 0.0);
        let single = [0.5, 0.0, 0.0];
        assert_eq!(hardy_weight(&single, 2.0, 3, 3.0), 0.25);
        assert_eq!(hardy_weight(&single, 2.0, 3, 3.5), 0.0);
        assert_eq!(
            assemble_hardy_weight(&single, 2.0, 3, &[-1.0, 4.0]),
            vec![0.25, 0.0]
        );
    }
}
