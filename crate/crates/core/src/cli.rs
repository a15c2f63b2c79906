//! Command-line front end: flat key-value configuration files, dispatch to
//! the experiments, and report output.
//!
//! A configuration is a TOML file whose keys are dotted paths, for example
//!
//! ```toml
//! experiment = "straight"
//! geometry.shape = "interval"
//! geometry.length = 1.0
//! numerics.p = 2.0
//! numerics.lengths = [5.0, 10.0, 20.0]
//! ```
//!
//! Every key is listed in `docs/config.md`. Keys the selected experiment
//! does not use are rejected.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use toml::Value;

use crate::cross_section::CrossSectionShape;
use crate::eigensolver::Continuation;
use crate::error::{Error, Result};
use crate::experiments::{
    bending_experiment, criticality_experiment, cross_section_experiment,
    essential_threshold_bounds, straight_tube_experiment, twisting_hardy_experiment, BendingConfig,
    CriticalityConfig, CrossSectionConfig, EssentialConfig, ExperimentReport, Numerics,
    StraightConfig, TwistHardyConfig, EXPERIMENTS,
};
use crate::geometry::{CurvatureProfile, Profile, TwistProfile};
use crate::tube_form::Potential;

/// Supported range of the exponent.
pub const P_RANGE: (f64, f64) = (1.1, 10.0);

#[derive(Debug, Parser)]
#[command(
    name = "ptube",
    version,
    about = "Spectral thresholds of the p-Laplacian in bent and twisted tubes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a configuration file.
    Run(RunArgs),
    /// List the experiments and their required keys.
    List,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also run the independent reference computations and write oracle.json.
    #[arg(long)]
    pub seed_oracle: bool,
    /// Write the cross-section mesh next to the report.
    #[arg(long)]
    pub mesh_out: bool,
    #[arg(long)]
    pub verbose: bool,
}

/// Parsed configuration of one run.
#[derive(Clone, Debug)]
pub enum RunConfig {
    CrossSection(CrossSectionConfig),
    Straight(StraightConfig),
    Criticality(CriticalityConfig),
    Essential(EssentialConfig),
    Bend(BendingConfig),
    TwistHardy(TwistHardyConfig),
}

impl RunConfig {
    pub fn set_oracle(&mut self, on: bool) {
        match self {
            RunConfig::CrossSection(c) => c.oracle = on,
            RunConfig::Straight(c) => c.oracle = on,
            RunConfig::Criticality(c) => c.oracle = on,
            RunConfig::Essential(_) => {}
            RunConfig::Bend(c) => c.oracle = on,
            RunConfig::TwistHardy(c) => c.oracle = on,
        }
    }
}

/// Dotted keys of a configuration, consumed as they are read.
struct Keys {
    values: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl Keys {
    fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut values = BTreeMap::new();
        flatten("", &table, &mut values);
        Ok(Self { values })
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(x)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(other) => config_error(format!("{key} must be a number, got {other}")),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
            Some(other) => {
                config_error(format!("{key} must be a nonnegative integer, got {other}"))
            }
        }
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(other) => config_error(format!("{key} must be true or false, got {other}")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => config_error(format!("{key} must be a string, got {other}")),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    other => config_error(format!("{key} must hold numbers, found {other}")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => config_error(format!("{key} must be an array of numbers, got {other}")),
        }
    }

    fn usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    other => config_error(format!(
                        "{key} must hold nonnegative integers, found {other}"
                    )),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => config_error(format!("{key} must be an array of integers, got {other}")),
        }
    }

    fn profile(&mut self, key: &str) -> Result<Option<Profile>> {
        self.string(key)?.map(|s| Profile::from_str(&s)).transpose()
    }

    /// One profile or an array of profiles (one per curvature component).
    fn profiles(&mut self, key: &str) -> Result<Option<Vec<Profile>>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(vec![Profile::from_str(&s)?])),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Profile::from_str(s),
                    other => {
                        config_error(format!("{key} must hold profile strings, found {other}"))
                    }
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => config_error(format!(
                "{key} must be a profile string or an array of them, got {other}"
            )),
        }
    }

    fn finish(self, experiment: &str) -> Result<()> {
        if self.values.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
            config_error(format!(
                "unknown keys for experiment '{experiment}': {}",
                keys.join(", ")
            ))
        }
    }
}

fn shape(keys: &mut Keys) -> Result<CrossSectionShape> {
    let name = keys
        .string("geometry.shape")?
        .ok_or_else(|| Error::Config("missing required key geometry.shape".into()))?;
    if name.split_whitespace().count() > 1 {
        return CrossSectionShape::from_str(&name);
    }
    let shape = match name.as_str() {
        "interval" => CrossSectionShape::Interval {
            length: keys.f64_or("geometry.length", 1.0)?,
            offset: keys.f64_or("geometry.offset", 0.0)?,
        },
        "disk" => CrossSectionShape::Disk {
            radius: keys.f64_or("geometry.radius", 1.0)?,
        },
        "annulus" => CrossSectionShape::Annulus {
            inner: keys.require_f64("geometry.inner")?,
            outer: keys.require_f64("geometry.outer")?,
        },
        "rectangle" => CrossSectionShape::Rectangle {
            width: keys.require_f64("geometry.width")?,
            height: keys.require_f64("geometry.height")?,
        },
        "ellipse" => CrossSectionShape::Ellipse {
            semi_x: keys.require_f64("geometry.semi_x")?,
            semi_y: keys.require_f64("geometry.semi_y")?,
        },
        "polygon" => {
            let flat = keys
                .f64_list("geometry.vertices")?
                .ok_or_else(|| Error::Config("missing required key geometry.vertices".into()))?;
            if flat.len() % 2 != 0 {
                return config_error("geometry.vertices must list x, y pairs");
            }
            CrossSectionShape::Polygon {
                vertices: flat.chunks(2).map(|c| [c[0], c[1]]).collect(),
            }
        }
        other => {
            return config_error(format!(
                "unknown geometry.shape '{other}' (expected interval, disk, annulus, rectangle, ellipse, polygon)"
            ))
        }
    };
    shape.validate()?;
    Ok(shape)
}

fn numerics(keys: &mut Keys) -> Result<Numerics> {
    let p = keys.require_f64("numerics.p")?;
    if !(p >= P_RANGE.0 && p <= P_RANGE.1) {
        return config_error(format!(
            "numerics.p = {p} is outside the supported range [{}, {}]",
            P_RANGE.0, P_RANGE.1
        ));
    }
    let mut num = Numerics::new(
        p,
        keys.f64_or("numerics.h", 0.05)?,
        keys.f64_or("numerics.h_s", 0.05)?,
    );
    if !(num.h > 0.0 && num.h_s > 0.0) {
        return config_error(format!(
            "resolutions must be positive, got numerics.h = {}, numerics.h_s = {}",
            num.h, num.h_s
        ));
    }
    let s = &mut num.solver;
    if let Some(v) = keys.usize("solver.max_iterations")? {
        s.max_iterations = v;
    }
    if let Some(v) = keys.f64("solver.gradient_tol")? {
        s.gradient_tol = v;
    }
    if let Some(v) = keys.f64("solver.stagnation_tol")? {
        s.stagnation_tol = v;
    }
    if let Some(v) = keys.usize("solver.stagnation_window")? {
        s.stagnation_window = v;
    }
    if let Some(v) = keys.f64("solver.eps_start")? {
        s.eps_start = v;
    }
    if let Some(v) = keys.f64("solver.eps_factor")? {
        s.eps_factor = v;
    }
    if let Some(v) = keys.f64("solver.eps_floor")? {
        s.eps_floor = v;
    }
    if let Some(v) = keys.string("solver.continuation")? {
        s.continuation = match v.as_str() {
            "auto" => Continuation::Auto,
            "on" => Continuation::On,
            "off" => Continuation::Off,
            other => {
                return config_error(format!(
                    "solver.continuation must be auto, on or off, got '{other}'"
                ))
            }
        };
    }
    if let Some(v) = keys.usize("solver.precond_refresh")? {
        s.precond_refresh = v;
    }
    if let Some(v) = keys.f64("solver.eigen_rel_tol")? {
        s.eigen_rel_tol = v;
    }
    if let Some(v) = keys.usize("solver.block_size")? {
        s.block_size = v;
    }
    num.validate()?;
    Ok(num)
}

fn curvature(keys: &mut Keys, d: usize, required: bool) -> Result<CurvatureProfile> {
    match keys.profiles("geometry.curvature")? {
        Some(components) => {
            if components.len() != d - 1 {
                return config_error(format!(
                    "geometry.curvature needs {} component(s) for this cross-section, got {}",
                    d - 1,
                    components.len()
                ));
            }
            CurvatureProfile::new(components)
        }
        None if required => config_error("missing required key geometry.curvature"),
        None => Ok(CurvatureProfile::straight(d)),
    }
}

/// Parses a configuration file's contents.
pub fn parse_config(text: &str) -> Result<(RunConfig, Option<PathBuf>)> {
    let mut keys = Keys::parse(text)?;
    let experiment = keys
        .string("experiment")?
        .ok_or_else(|| Error::Config("missing required key experiment".into()))?;
    if !EXPERIMENTS.iter().any(|e| e.name == experiment) {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        return config_error(format!(
            "unknown experiment '{experiment}' (expected one of {})",
            names.join(", ")
        ));
    }
    let out = keys.string("output.dir")?.map(PathBuf::from);
    let shape = shape(&mut keys)?;
    let d = shape.dim() + 1;
    let num = numerics(&mut keys)?;
    let config = match experiment.as_str() {
        "cross-section" => {
            let mut c = CrossSectionConfig::new(shape, num);
            c.interval_tolerance =
                keys.f64_or("verdict.interval_tolerance", c.interval_tolerance)?;
            c.disk_tolerance = keys.f64_or("verdict.disk_tolerance", c.disk_tolerance)?;
            RunConfig::CrossSection(c)
        }
        "straight" => {
            let mut c = StraightConfig::new(shape, num);
            if let Some(v) = keys.f64_list("numerics.lengths")? {
                c.lengths = v;
            }
            if let Some(v) = keys.usize_list("numerics.cutoffs")? {
                c.cutoffs = v;
            }
            c.gap_fraction = keys.f64_or("verdict.gap_fraction", c.gap_fraction)?;
            c.separable_tolerance =
                keys.f64_or("verdict.separable_tolerance", c.separable_tolerance)?;
            RunConfig::Straight(c)
        }
        "criticality" => {
            let longitudinal = keys.profile("potential.longitudinal")?.ok_or_else(|| {
                Error::Config("missing required key potential.longitudinal".into())
            })?;
            let transverse = keys
                .profile("potential.transverse")?
                .unwrap_or(Profile::Constant { value: 1.0 });
            let mut c =
                CriticalityConfig::new(shape, num, Potential::new(longitudinal, transverse));
            if let Some(v) = keys.f64_list("numerics.lengths")? {
                c.lengths = v;
            }
            c.margin = keys.f64_or("verdict.margin", c.margin)?;
            c.oracle_tolerance = keys.f64_or("verdict.oracle_tolerance", c.oracle_tolerance)?;
            RunConfig::Criticality(c)
        }
        "essential" => {
            let kappa = curvature(&mut keys, d, true)?;
            let twist = match keys.profile("geometry.twist")? {
                Some(rate) if d == 3 => TwistProfile::planar(rate),
                Some(_) => {
                    return config_error("geometry.twist needs a two-dimensional cross-section")
                }
                None => TwistProfile::none(d),
            };
            let mut c = EssentialConfig::new(shape, kappa, twist, num);
            c.tail_start = keys.f64_or("numerics.tail_start", c.tail_start)?;
            if let Some(v) = keys.usize_list("numerics.cutoffs")? {
                c.cutoffs = v;
            }
            c.radius_bound = keys.f64("geometry.radius_bound")?;
            c.bracket = keys.f64_or("verdict.bracket", c.bracket)?;
            RunConfig::Essential(c)
        }
        "bend" => {
            let kappa = curvature(&mut keys, d, true)?;
            let mut c = BendingConfig::new(shape, kappa, num);
            c.half_length = keys.f64_or("numerics.half_length", c.half_length)?;
            if let Some(v) = keys.usize_list("numerics.cutoffs")? {
                c.cutoffs = v;
            }
            if let Some(j) = keys.profile("perturbation.profile")? {
                c.perturbation.longitudinal = j;
            }
            if let Some(v) = keys.f64_list("perturbation.direction")? {
                c.perturbation.direction = Some(v);
            }
            if let Some(v) = keys.f64_list("perturbation.amplitudes")? {
                c.perturbation.amplitudes = v;
            }
            if let Some(v) = keys.bool("bend.compare_straight")? {
                c.compare_straight = v;
            }
            c.margin_factor = keys.f64_or("verdict.margin_factor", c.margin_factor)?;
            c.required_gap = keys.f64_or("verdict.required_gap", c.required_gap)?;
            c.oracle_tolerance = keys.f64_or("verdict.oracle_tolerance", c.oracle_tolerance)?;
            RunConfig::Bend(c)
        }
        "twist-hardy" => {
            let rate = keys
                .profile("geometry.twist")?
                .ok_or_else(|| Error::Config("missing required key geometry.twist".into()))?;
            let mut c = TwistHardyConfig::new(shape, rate, num);
            c.base_length = keys.f64_or("twist.base_length", c.base_length)?;
            if let Some(v) = keys.usize("twist.depth")? {
                c.depth = v;
            }
            c.window = keys.f64_or("twist.window", c.window)?;
            if let Some(v) = keys.usize("twist.random_fields")? {
                c.random_fields = v;
            }
            if let Some(v) = keys.usize("twist.seed")? {
                c.seed = v as u64;
            }
            if let Some(v) = keys.bool("twist.null_test")? {
                c.null_test = v;
            }
            c.margin_factor = keys.f64_or("verdict.margin_factor", c.margin_factor)?;
            c.oracle_tolerance = keys.f64_or("verdict.oracle_tolerance", c.oracle_tolerance)?;
            if c.shape.is_circular() && !c.null_test && !c.twist_rate.is_zero() {
                return config_error(
                    "twist-hardy with a circular cross-section: twisting a disk or annulus leaves the tube \
                     unchanged, so no Hardy weight exists; set twist.null_test = true",
                );
            }
            RunConfig::TwistHardy(c)
        }
        _ => unreachable!("experiment names were checked above"),
    };
    keys.finish(&experiment)?;
    Ok((config, out))
}

/// Runs a parsed configuration.
pub fn run_config(config: &RunConfig) -> Result<ExperimentReport> {
    match config {
        RunConfig::CrossSection(c) => cross_section_experiment(c),
        RunConfig::Straight(c) => straight_tube_experiment(c),
        RunConfig::Criticality(c) => criticality_experiment(c),
        RunConfig::Essential(c) => essential_threshold_bounds(c).map(|(_, r)| r),
        RunConfig::Bend(c) => bending_experiment(c),
        RunConfig::TwistHardy(c) => twisting_hardy_experiment(c).map(|(cert, mut r)| {
            r.quantity("certificate", &cert);
            r
        }),
    }
}

/// Text of the `list` subcommand.
pub fn list_experiments() -> String {
    let mut out = String::new();
    for e in &EXPERIMENTS {
        out.push_str(&format!("{:<14} [{}] {}\n", e.name, e.topic, e.claim));
        out.push_str(&format!("{:<14} required: {}\n", "", e.required.join(", ")));
    }
    out
}

/// Runs the `run` subcommand and returns the report.
pub fn execute(args: &RunArgs) -> Result<ExperimentReport> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let (mut config, dir) = parse_config(&text)?;
    config.set_oracle(args.seed_oracle);
    let report = run_config(&config)?;
    let dir = args
        .out
        .clone()
        .or(dir)
        .unwrap_or_else(|| Path::new("ptube-out").join(&report.experiment));
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    report.write(&dir, &timestamp, args.mesh_out)?;
    Ok(report)
}

/// Entry point shared by the binary and the tests. Exit status is 0 when
/// every verdict passes, 2 when one fails, and 1 on input or solver errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            0
        }
        Command::Run(args) => match execute(&args) {
            Ok(report) => {
                for v in &report.verdicts {
                    println!("{v}");
                }
                if args.verbose {
                    for (k, v) in &report.quantities {
                        println!("{k} = {v}");
                    }
                    for (k, v) in &report.timings {
                        println!("time {k} = {v:.3} s");
                    }
                    for n in &report.notes {
                        println!("note: {n}");
                    }
                }
                if report.passed() {
                    0
                } else {
                    2
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    }
}
