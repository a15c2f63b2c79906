//! Acceptance suite. Runs every criterion at its stated tolerance and
//! prints one PASS/FAIL line per criterion, followed by the individual
//! checks. Exits with a nonzero status when any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptube::cross_section::{build_mesh, scale_eigenvalue_check, CrossSectionShape};
use ptube::eigensolver::{gradient_check, SolverConfig};
use ptube::experiments::{
    bending_experiment, criticality_experiment, cross_section_experiment,
    essential_threshold_bounds, straight_tube_experiment, twisting_hardy_experiment, BendingConfig,
    CriticalityConfig, CrossSectionConfig, EssentialConfig, ExperimentReport, Numerics,
    StraightConfig, TwistHardyConfig,
};
use ptube::geometry::{evaluate_metric, integrate_frame, CurvatureProfile, Profile, TwistProfile};
use ptube::oracles::BESSEL_J0_FIRST_ZERO;
use ptube::tube_form::{split_power_bound, EndCondition, Potential, TubeMesh};

type Criterion = (&'static str, fn() -> Outcome);

struct Check {
    passed: bool,
    line: String,
}

struct Outcome {
    checks: Vec<Check>,
}

impl Outcome {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, passed: bool, line: impl Into<String>) {
        let line = line.into();
        self.checks.push(Check {
            passed,
            line: format!("{} {line}", if passed { "PASS" } else { "FAIL" }),
        });
    }

    /// Copies the named verdicts out of an experiment report. A missing
    /// verdict counts as a failure.
    fn verdicts(&mut self, prefix: &str, report: &ExperimentReport, rules: &[&str]) {
        for rule in rules {
            match report.verdict(rule) {
                Some(v) => self.checks.push(Check {
                    passed: v.passed,
                    line: format!("{prefix}{v}"),
                }),
                None => self.check(false, format!("{prefix}{rule}: verdict missing")),
            }
        }
    }

    fn error(&mut self, what: &str, err: impl std::fmt::Display) {
        self.check(false, format!("{what}: {err}"));
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

fn timed(budget: Duration, out: &mut Outcome, what: &str, start: Instant) {
    let t = start.elapsed();
    out.check(
        t <= budget,
        format!(
            "{what} runtime {:.1} s <= {:.0} s",
            t.as_secs_f64(),
            budget.as_secs_f64()
        ),
    );
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let cases: [(&str, CrossSectionShape, f64, f64, &[&str]); 4] = [
        (
            "interval p=2",
            CrossSectionShape::interval(1.0),
            2.0,
            0.05,
            &["cross_section.closed_form"],
        ),
        (
            "disk p=2",
            CrossSectionShape::Disk { radius: 1.0 },
            2.0,
            0.05,
            &["cross_section.bessel"],
        ),
        (
            "interval p=1.5",
            CrossSectionShape::interval(1.0),
            1.5,
            0.05,
            &["cross_section.shooting_oracle"],
        ),
        (
            "interval p=3",
            CrossSectionShape::interval(1.0),
            3.0,
            0.05,
            &["cross_section.shooting_oracle"],
        ),
    ];
    for (label, shape, p, h, rules) in cases {
        let mut config = CrossSectionConfig::new(shape, Numerics::new(p, h, h));
        config.oracle = true;
        let start = Instant::now();
        match cross_section_experiment(&config) {
            Ok(report) => {
                out.verdicts(&format!("[{label}] "), &report, rules);
                if label.starts_with("disk") {
                    let lambda = report.quantity_f64("lambda1_section").unwrap_or(f64::NAN);
                    let reference = BESSEL_J0_FIRST_ZERO.powi(2);
                    out.check(
                        ((lambda - reference) / reference).abs() <= 0.02,
                        format!("[{label}] λ₁ = {lambda:.5} within 2% of {reference:.4}"),
                    );
                }
            }
            Err(e) => out.error(label, e),
        }
        timed(Duration::from_secs(30), &mut out, label, start);
    }
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mesh = Arc::new(build_mesh(&CrossSectionShape::Disk { radius: 1.0 }, 0.1).unwrap());
    let config = SolverConfig::default();
    for p in [1.5, 2.0, 3.0] {
        for c in [0.5, 2.0] {
            match scale_eigenvalue_check(&mesh, p, c, &config) {
                Ok(ratio) => out.check(
                    (ratio - 1.0).abs() <= 1e-3,
                    format!("p = {p}, c = {c}: λ₁(cω)c^p/λ₁(ω) = {ratio:.9} within 1e-3 of 1"),
                ),
                Err(e) => out.error(&format!("p = {p}, c = {c}"), e),
            }
        }
    }
    timed(Duration::from_secs(60), &mut out, "scaling", start);
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    for p in [1.5, 2.0, 3.0] {
        let mut config = StraightConfig::new(
            CrossSectionShape::interval(1.0),
            Numerics::new(p, 0.05, 0.05),
        );
        config.lengths = vec![5.0, 10.0, 20.0];
        config.cutoffs = vec![4, 8, 16];
        config.gap_fraction = 0.02;
        match straight_tube_experiment(&config) {
            Ok(report) => out.verdicts(
                &format!("[p={p}] "),
                &report,
                &[
                    "straight.poincare",
                    "straight.gap_at_largest_length",
                    "straight.cutoff_decreasing",
                ],
            ),
            Err(e) => out.error(&format!("p = {p}"), e),
        }
    }
    timed(Duration::from_secs(300), &mut out, "straight tubes", start);
    out
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let potential = Potential::new(
        Profile::bump(0.0, 2.0, -0.5),
        Profile::Constant { value: 1.0 },
    );
    let mut config = CriticalityConfig::new(
        CrossSectionShape::interval(1.0),
        Numerics::new(2.0, 0.05, 0.05),
        potential,
    );
    config.lengths = vec![30.0];
    config.margin = 1e-3;
    config.oracle_tolerance = 1e-4;
    config.oracle = true;
    match criticality_experiment(&config) {
        Ok(report) => out.verdicts(
            "",
            &report,
            &[
                "criticality.witness_negative",
                "criticality.gap_below_threshold",
                "criticality.oracle_agreement",
            ],
        ),
        Err(e) => out.error("criticality", e),
    }
    timed(Duration::from_secs(120), &mut out, "criticality", start);
    out
}

fn strip_bend(p: f64) -> BendingConfig {
    let kappa = CurvatureProfile::new(vec![Profile::bump(0.0, 2.0, 0.5)]).unwrap();
    let mut config = BendingConfig::new(
        CrossSectionShape::interval(1.0),
        kappa,
        Numerics::new(p, 0.05, 0.05),
    );
    config.half_length = 30.0;
    config.margin_factor = 10.0;
    config
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut config = strip_bend(2.0);
    config.required_gap = 0.05;
    config.oracle = true;
    config.oracle_tolerance = 1e-3;
    match bending_experiment(&config) {
        Ok(report) => {
            out.verdicts(
                "[p=2] ",
                &report,
                &["bending.gap", "bending.oracle_agreement"],
            );
            let lambda = report.quantity_f64("lambda_bent").unwrap_or(f64::NAN);
            let exact = PI * PI;
            out.check(
                lambda < exact - 0.05,
                format!(
                    "[p=2] λ₁(bent) = {lambda:.6} < π² − 0.05 = {:.6}",
                    exact - 0.05
                ),
            );
        }
        Err(e) => out.error("p = 2", e),
    }
    for p in [1.5, 3.0] {
        match bending_experiment(&strip_bend(p)) {
            Ok(report) => out.verdicts(
                &format!("[p={p}] "),
                &report,
                &["bending.paired_comparison", "bending.witness"],
            ),
            Err(e) => out.error(&format!("p = {p}"), e),
        }
    }
    timed(Duration::from_secs(600), &mut out, "bending", start);
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let taper = Profile::Plateau {
        half_length: 2.0,
        taper: 1.0,
        amplitude: 1.0,
    };
    let mut config = TwistHardyConfig::new(
        CrossSectionShape::Rectangle {
            width: 0.6,
            height: 0.2,
        },
        taper.clone(),
        Numerics::new(2.0, 0.05, 0.05),
    );
    config.oracle = true;
    config.random_fields = 20;
    match twisting_hardy_experiment(&config) {
        Ok((_, report)) => out.verdicts(
            "[rectangle] ",
            &report,
            &[
                "twist.condition",
                "twist.segment_gap.l3",
                "twist.segment_gap.l5",
                "twist.segment_gap.l8",
                "twist.oracle_agreement",
                "twist.weight_positive",
                "twist.hardy_direct",
            ],
        ),
        Err(e) => out.error("rectangle", e),
    }
    let mut control = TwistHardyConfig::new(
        CrossSectionShape::Disk { radius: 1.0 },
        taper,
        Numerics::new(2.0, 0.2, 0.05),
    );
    control.null_test = true;
    control.random_fields = 20;
    match twisting_hardy_experiment(&control) {
        Ok((_, report)) => out.verdicts(
            "[disk control] ",
            &report,
            &[
                "twist.null_condition",
                "twist.null_segment_gap",
                "twist.hardy_direct",
            ],
        ),
        Err(e) => out.error("disk control", e),
    }
    timed(Duration::from_secs(900), &mut out, "twisting", start);
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let kappa = CurvatureProfile::new(vec![Profile::Decaying { amplitude: 0.3 }]).unwrap();
    let mut config = EssentialConfig::new(
        CrossSectionShape::interval(1.0),
        kappa,
        TwistProfile::none(2),
        Numerics::new(2.0, 0.05, 0.05),
    );
    config.tail_start = 20.0;
    config.cutoffs = vec![16];
    config.bracket = 0.03;
    match essential_threshold_bounds(&config) {
        Ok((bounds, report)) => {
            out.verdicts(
                "",
                &report,
                &[
                    "essential.lower_below_threshold",
                    "essential.lower_bracket",
                    "essential.upper_bracket",
                    "essential.ordered",
                ],
            );
            out.check(
                bounds.lower <= bounds.lambda1 && bounds.lambda1 <= bounds.upper,
                format!(
                    "lower {:.6} <= λ₁(ω_h) {:.6} <= upper {:.6}",
                    bounds.lower, bounds.lambda1, bounds.upper
                ),
            );
        }
        Err(e) => out.error("essential", e),
    }
    timed(Duration::from_secs(300), &mut out, "essential", start);
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    // Gradient against central differences on a bent, twisted tube with a potential.
    let section = Arc::new(
        build_mesh(
            &CrossSectionShape::Rectangle {
                width: 0.6,
                height: 0.2,
            },
            0.1,
        )
        .unwrap(),
    );
    let kappa3 = CurvatureProfile::new(vec![
        Profile::bump(0.0, 2.0, 0.5),
        Profile::bump(0.3, 1.5, -0.4),
    ])
    .unwrap();
    let twist3 = TwistProfile::planar(Profile::Plateau {
        half_length: 0.5,
        taper: 0.5,
        amplitude: 1.0,
    });
    let mesh = TubeMesh::new(
        section,
        kappa3.clone(),
        twist3.clone(),
        -1.5,
        1.5,
        30,
        EndCondition::Dirichlet,
        EndCondition::Dirichlet,
    )
    .unwrap();
    let potential = Potential::new(
        Profile::bump(0.0, 2.0, -0.5),
        Profile::Constant { value: 1.0 },
    );
    let form = mesh.form(Some(&potential)).unwrap();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let field: Vec<f64> = (0..form.n_free())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let p = [1.5, 2.0, 3.0, 4.5][k % 4];
        worst = worst.max(gradient_check(&form, &field, p, 1e-3, k as u64));
    }
    out.check(
        worst <= 1e-5,
        format!("gradient vs finite differences, 20 fields: {worst:.3e} <= 1e-5"),
    );

    let frame = integrate_frame(&kappa3, &DMatrix::identity(3, 3), -10.0, 10.0, 1e-3).unwrap();
    let drift = frame.orthonormality_defect();
    out.check(
        drift <= 1e-8,
        format!("frame orthonormality drift {drift:.3e} <= 1e-8"),
    );

    let (mut det_err, mut inv_err, mut shear_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let kappa = CurvatureProfile::new(vec![
            Profile::bump(0.0, rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0)),
            Profile::bump(0.5, rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0)),
        ])
        .unwrap();
        let twist = TwistProfile::planar(Profile::Plateau {
            half_length: 1.0,
            taper: 1.0,
            amplitude: rng.gen_range(-2.0..2.0),
        });
        let s = rng.gen_range(-4.0..4.0);
        let t = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let m = evaluate_metric(&kappa, &twist, s, &t).unwrap();
        det_err = det_err.max((m.g.determinant() - m.f * m.f).abs() / (1.0 + m.f * m.f));
        inv_err = inv_err.max(
            (&m.g * &m.g_inv - DMatrix::<f64>::identity(3, 3))
                .abs()
                .max(),
        );
        shear_err = shear_err.max((m.shear[0] * t[0] + m.shear[1] * t[1]).abs());
    }
    out.check(
        det_err <= 1e-10,
        format!("det g = f², 1000 samples: {det_err:.3e} <= 1e-10"),
    );
    out.check(
        inv_err <= 1e-9,
        format!("g·g⁻¹ = I, 1000 samples: {inv_err:.3e} <= 1e-9"),
    );
    out.check(
        shear_err <= 1e-10,
        format!("Σ f_μ t_μ = 0, 1000 samples: {shear_err:.3e} <= 1e-10"),
    );

    let mut violations = 0;
    for _ in 0..1000 {
        let a = rng.gen_range(0.0..50.0);
        let b = rng.gen_range(0.0..50.0);
        let q = rng.gen_range(1.0..6.0);
        let alpha = rng.gen_range(1.0001..20.0);
        let (lhs, rhs) = split_power_bound(a, b, q, alpha);
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    out.check(
        violations == 0,
        format!("(a+b)^q <= α^q a^q + β^q b^q on 1000 tuples: {violations} violations"),
    );
    timed(Duration::from_secs(60), &mut out, "hygiene", start);
    out
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("cross-section oracle agreement", criterion_1),
        ("scaling law", criterion_2),
        ("straight-tube equality", criterion_3),
        ("criticality", criterion_4),
        ("bending gap", criterion_5),
        ("twisting Hardy inequality", criterion_6),
        ("essential-threshold bracketing", criterion_7),
        ("numerical hygiene", criterion_8),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| f == &id.to_string() || name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.passed() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {id}: {name} ({:.1} s)",
            start.elapsed().as_secs_f64()
        );
        for c in &outcome.checks {
            println!("    {}", c.line);
        }
        if !outcome.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
