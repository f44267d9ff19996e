//! `isofactor` command line: configuration, the family/verification
//! pipelines, and CSV, JSON and gnuplot output.
//!
//! Settings are resolved as flag > config file > environment > default.
//! `ISOFACTOR_OUT_DIR` only supplies the output directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::darboux::{
    build_chain, hydrogen_generalized, hydrogen_mielnik, hydrogen_sdih, map_eigenfunction,
    missing_state_from_beta, oscillator_generalized, oscillator_mielnik, oscillator_sdih, ChainState,
    TransformResult,
};
use crate::eigensolve::{
    build_hamiltonian, eigenpairs, intertwine_residual, isospectral_report, numerov_levels,
    radial_spectrum_widening, rayleigh_quotient, SpectrumReport, LEVEL_CAP,
};
use crate::error::{Error, Result};
use crate::factorize::{apply_annihilation, apply_creation};
use crate::grid::{Grid, GridFunction};
use crate::riccati::{catalog, riccati_residual_sampled, BetaFunction, Ordering, PotentialSpec};
use crate::seeds::{
    hydrogen_lambda_bound, oscillator_gamma_bound, oscillator_seed, oscillator_seed_branch,
    validate_params, EnergyCatalog, FamilyDescriptor, Parity,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ISOFACTOR_OUT_DIR";

/// Grid step used for radial grids when only `--grid-max` or nothing is
/// given.
pub const RADIAL_STEP: f64 = 0.004;

const ANALYTIC_RESIDUAL_TOL: f64 = 1e-6;
const SAMPLED_RESIDUAL_FACTOR: f64 = 100.0;
const INTERTWINE_TOL: f64 = 1e-3;
const ORTHOGONALITY_TOL: f64 = 1e-4;
const NUMEROV_TOL: f64 = 1e-4;
const INTERTWINE_STATES: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "isofactor", version, about = "Isospectral potential families by factorization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the superpotential catalog, energy catalogs and family bounds.
    Catalog(CatalogArgs),
    /// Build a family member and write CSV, JSON and an optional plot script.
    Family(RunArgs),
    /// Compute the transformed spectrum and compare it with the prediction.
    Spectrum(RunArgs),
    /// Run the full check suite and write a JSON report.
    Verify(RunArgs),
    /// Build an oscillator chain at the energies given by `--epsilons`.
    Chain(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CatalogArgs {
    /// Highest Coulomb sector listed.
    #[arg(long, default_value_t = 3)]
    pub max_l: u32,
    /// Number of oscillator factorization energies listed.
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub system: Option<System>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<i64>,
    /// Value, comma list, or sweep `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Value, comma list, or sweep `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Value, comma list, or sweep `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// Comma-separated factorization energies.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilons: Option<String>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// `key=value` file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV.
    #[arg(long)]
    pub plot: bool,
    /// Add a constant to `β` before checking (negative control).
    #[arg(long, allow_hyphen_values = true)]
    pub corrupt_beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Oscillator,
    Hydrogen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sdih,
    Mielnik,
    Generalized,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Family,
    Spectrum,
    Verify,
    Chain,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Family => "family",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Verify => "verify",
            CommandKind::Chain => "chain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    /// Radial only: widen `max` at fixed step until the tails vanish.
    pub widen: bool,
}

/// A fully resolved run. Output settings are not part of the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub system: System,
    pub scheme: Scheme,
    pub l: u32,
    pub k: i64,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub nu: Option<f64>,
    pub epsilons: Vec<f64>,
    pub levels: usize,
    pub grid: GridSpec,
    pub tol: f64,
    pub corrupt_beta: Option<f64>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= tolerance,
            value,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectra {
    pub computed: Vec<f64>,
    pub predicted: Vec<f64>,
    /// Factorization energy of the (last) transform.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub spectra: Spectra,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Columns for the CSV file: name and samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub grid: Grid,
    pub columns: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub table: Option<Table>,
}

/// Parses `args` (including the program name) and runs. Returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DOMAIN } else { EXIT_PASS };
        }
    };
    let (kind, args) = match cli.command {
        Command::Catalog(a) => {
            emit(&catalog_text(&a));
            return EXIT_PASS;
        }
        Command::Family(a) => (CommandKind::Family, a),
        Command::Spectrum(a) => (CommandKind::Spectrum, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Chain(a) => (CommandKind::Chain, a),
    };
    match run_command(kind, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_domain() || matches!(e, Error::Unsupported(_) | Error::TooManyLevels { .. }) {
        EXIT_DOMAIN
    } else {
        EXIT_NUMERIC
    }
}

fn run_command(kind: CommandKind, args: &RunArgs) -> Result<i32> {
    let configs = resolve(kind, args)?;
    let outputs: Vec<RunOutput> = configs
        .par_iter()
        .map(execute)
        .collect::<Result<_>>()?;
    let mut written = Vec::new();
    for out in &outputs {
        emit(&report_text(&out.report));
        written.extend(write_outputs(out)?);
    }
    if outputs.len() > 1 {
        let reports: Vec<&Report> = outputs.iter().map(|o| &o.report).collect();
        let first = &outputs[0].report.config;
        let path = first.out_dir.join(format!(
            "{}_{}_{}_sweep.json",
            kind.name(),
            system_name(first.system),
            scheme_name(first.scheme)
        ));
        fs::write(&path, to_json(&reports)?).map_err(io_error)?;
        written.push(path);
    }
    for p in &written {
        emit(&format!("wrote {}\n", p.display()));
    }
    let pass = outputs.iter().all(|o| o.report.pass());
    Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn io_error(e: std::io::Error) -> Error {
    Error::Numeric(format!("i/o: {e}"))
}

fn system_name(s: System) -> &'static str {
    match s {
        System::Oscillator => "oscillator",
        System::Hydrogen => "hydrogen",
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Sdih => "sdih",
        Scheme::Mielnik => "mielnik",
        Scheme::Generalized => "generalized",
        Scheme::Chain => "chain",
    }
}

// ---------------------------------------------------------------------------
// Configuration

/// Reads a `key=value` file. Blank lines and lines starting with `#` are
/// skipped. Keys use the flag spelling without dashes in front
/// (`grid-max`, `grid_max` both work).
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parameter(format!("config line {}: expected key=value", lineno + 1))
        })?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parameter(format!("cannot parse {key} = '{v}'")))
}

fn parse_enum<T: ValueEnum>(key: &str, v: &str) -> Result<T> {
    T::from_str(v, true).map_err(|_| Error::Parameter(format!("unknown {key} '{v}'")))
}

/// Fills unset fields of `args` from a config file.
pub fn merge_config(args: &RunArgs, file: &BTreeMap<String, String>) -> Result<RunArgs> {
    let mut a = args.clone();
    for (key, v) in file {
        match key.as_str() {
            "system" if a.system.is_none() => a.system = Some(parse_enum(key, v)?),
            "scheme" if a.scheme.is_none() => a.scheme = Some(parse_enum(key, v)?),
            "l" if a.l.is_none() => a.l = Some(parse_value(key, v)?),
            "k" if a.k.is_none() => a.k = Some(parse_value(key, v)?),
            "gamma" if a.gamma.is_none() => a.gamma = Some(v.clone()),
            "lambda" if a.lambda.is_none() => a.lambda = Some(v.clone()),
            "nu" if a.nu.is_none() => a.nu = Some(v.clone()),
            "epsilons" if a.epsilons.is_none() => a.epsilons = Some(v.clone()),
            "levels" if a.levels.is_none() => a.levels = Some(parse_value(key, v)?),
            "grid-min" if a.grid_min.is_none() => a.grid_min = Some(parse_value(key, v)?),
            "grid-max" if a.grid_max.is_none() => a.grid_max = Some(parse_value(key, v)?),
            "grid-n" if a.grid_n.is_none() => a.grid_n = Some(parse_value(key, v)?),
            "tol" if a.tol.is_none() => a.tol = Some(parse_value(key, v)?),
            "out-dir" if a.out_dir.is_none() => a.out_dir = Some(PathBuf::from(v)),
            "corrupt-beta" if a.corrupt_beta.is_none() => {
                a.corrupt_beta = Some(parse_value(key, v)?)
            }
            "plot" => a.plot = a.plot || parse_value::<bool>(key, v)?,
            "system" | "scheme" | "l" | "k" | "gamma" | "lambda" | "nu" | "epsilons" | "levels"
            | "grid-min" | "grid-max" | "grid-n" | "tol" | "out-dir" | "corrupt-beta" => {}
            _ => return Err(Error::Parameter(format!("unknown config key '{key}'"))),
        }
    }
    Ok(a)
}

/// Values from `v`, `a,b,c` or `start:stop:step` (inclusive of `stop`).
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parameter(format!("cannot parse value list '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        3 => {
            let p: Vec<f64> = parts
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let (start, stop, step) = (p[0], p[1], p[2]);
            if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                return Err(Error::Parameter(format!(
                    "sweep '{text}' needs start <= stop and step > 0"
                )));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

fn optional_sweep(text: &Option<String>) -> Result<Vec<Option<f64>>> {
    match text {
        None => Ok(vec![None]),
        Some(t) => Ok(parse_sweep(t)?.into_iter().map(Some).collect()),
    }
}

/// Resolves arguments into one config per sweep point, validating family
/// parameters before anything is computed.
pub fn resolve(kind: CommandKind, args: &RunArgs) -> Result<Vec<RunConfig>> {
    let args = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Parameter(format!("cannot read config {}: {e}", path.display()))
            })?;
            merge_config(args, &parse_config_text(&text)?)?
        }
        None => args.clone(),
    };
    let system = args.system.unwrap_or(System::Oscillator);
    let scheme = match kind {
        CommandKind::Chain => Scheme::Chain,
        _ => args.scheme.unwrap_or(Scheme::Sdih),
    };
    let l = args.l.unwrap_or(1);
    let k = args.k.unwrap_or(0);
    let levels = args.levels.unwrap_or(match system {
        System::Oscillator => 5,
        System::Hydrogen => 3,
    });
    if levels == 0 || levels > LEVEL_CAP {
        return Err(Error::TooManyLevels {
            requested: levels,
            available: LEVEL_CAP,
        });
    }
    let tol = args.tol.unwrap_or(match system {
        System::Oscillator => 2e-3,
        System::Hydrogen => 5e-3,
    });
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let grid = match system {
        System::Oscillator => GridSpec {
            min: args.grid_min.unwrap_or(-8.0),
            max: args.grid_max.unwrap_or(8.0),
            // Odd seeds vanish at x = 0, so chains default to an even node
            // count that keeps the origin off the grid.
            n: args.grid_n.unwrap_or(if scheme == Scheme::Chain { 4000 } else { 4001 }),
            widen: false,
        },
        System::Hydrogen => {
            let widen = args.grid_max.is_none();
            let max = args.grid_max.unwrap_or(40.0 * l.max(1) as f64);
            GridSpec {
                min: 0.0,
                max,
                n: args
                    .grid_n
                    .unwrap_or_else(|| (max / RADIAL_STEP).round() as usize),
                widen,
            }
        }
    };
    let epsilons = match &args.epsilons {
        Some(t) => parse_sweep(t)?,
        None => Vec::new(),
    };
    let out_dir = args.out_dir.clone().unwrap_or_else(default_out_dir);

    let mut configs = Vec::new();
    for gamma in optional_sweep(&args.gamma)? {
        for lambda in optional_sweep(&args.lambda)? {
            for nu in optional_sweep(&args.nu)? {
                let cfg = RunConfig {
                    command: kind,
                    system,
                    scheme,
                    l,
                    k,
                    gamma,
                    lambda,
                    nu,
                    epsilons: epsilons.clone(),
                    levels,
                    grid: grid.clone(),
                    tol,
                    corrupt_beta: args.corrupt_beta,
                    out_dir: out_dir.clone(),
                    plot: args.plot,
                };
                validate_config(&cfg)?;
                configs.push(cfg);
            }
        }
    }
    Ok(configs)
}

/// Factorization energy of a generalized oscillator run: the single
/// `--epsilons` value when given, otherwise `-2k - 1`.
fn oscillator_epsilon(cfg: &RunConfig) -> Result<f64> {
    match cfg.epsilons.as_slice() {
        [] => Ok(-2.0 * cfg.k as f64 - 1.0),
        [e] => Ok(*e),
        _ => Err(Error::Parameter(
            "the generalized scheme takes a single factorization energy".into(),
        )),
    }
}

pub fn validate_config(cfg: &RunConfig) -> Result<()> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Parameter(format!("scheme {} needs --{name}", scheme_name(cfg.scheme))))
    };
    match (cfg.system, cfg.scheme) {
        (System::Oscillator, Scheme::Sdih) | (System::Hydrogen, Scheme::Sdih) => {}
        (System::Oscillator, Scheme::Mielnik) => validate_params(&FamilyDescriptor::OscillatorMielnik {
            gamma: need(cfg.gamma, "gamma")?,
        })?,
        (System::Hydrogen, Scheme::Mielnik) => validate_params(&FamilyDescriptor::HydrogenMielnik {
            l: cfg.l,
            lambda: need(cfg.lambda, "lambda")?,
        })?,
        (System::Oscillator, Scheme::Generalized) => {
            validate_params(&FamilyDescriptor::OscillatorGeneralized {
                epsilon: oscillator_epsilon(cfg)?,
                nu: cfg.nu.unwrap_or(0.0),
            })?
        }
        (System::Hydrogen, Scheme::Generalized) => {
            validate_params(&FamilyDescriptor::HydrogenGeneralized {
                l: cfg.l,
                k: cfg.k,
                lambda: need(cfg.lambda, "lambda")?,
            })?
        }
        (System::Oscillator, Scheme::Chain) => {
            if cfg.epsilons.is_empty() {
                return Err(Error::Parameter("a chain needs --epsilons".into()));
            }
            for (i, e) in cfg.epsilons.iter().enumerate() {
                if cfg.epsilons[..i].contains(e) {
                    return Err(Error::EqualEnergies(*e));
                }
                if catalog_index(*e).is_none() {
                    validate_params(&FamilyDescriptor::OscillatorGeneralized {
                        epsilon: *e,
                        nu: cfg.nu.unwrap_or(0.0),
                    })?;
                }
            }
        }
        (System::Hydrogen, Scheme::Chain) => {
            return Err(Error::Unsupported("chains are built for the oscillator only".into()))
        }
    }
    if cfg.system == System::Hydrogen && cfg.l == 0 {
        return Err(Error::Parameter("hydrogen transforms need l >= 1".into()));
    }
    if let Some(d) = cfg.corrupt_beta {
        if !d.is_finite() {
            return Err(Error::Parameter("corrupt-beta must be finite".into()));
        }
    }
    Ok(())
}

/// `k` with `ε = -2k - 1`, if `ε` is an oscillator catalog energy.
fn catalog_index(e: f64) -> Option<i64> {
    let k = (-(e + 1.0) / 2.0).round();
    (k >= 0.0 && -2.0 * k - 1.0 == e).then_some(k as i64)
}

// ---------------------------------------------------------------------------
// Pipelines

fn build_grid(spec: &GridSpec, radial: bool) -> Result<Grid> {
    if radial {
        Grid::radial(spec.max, spec.n)
    } else {
        Grid::new(spec.min, spec.max, spec.n)
    }
}

/// The transform described by a (non-chain) config on `grid`.
pub fn build_transform(cfg: &RunConfig, grid: &Grid) -> Result<TransformResult> {
    match (cfg.system, cfg.scheme) {
        (System::Oscillator, Scheme::Sdih) => oscillator_sdih(grid),
        (System::Oscillator, Scheme::Mielnik) => {
            oscillator_mielnik(cfg.gamma.unwrap_or(f64::NAN), grid)
        }
        (System::Oscillator, Scheme::Generalized) => {
            oscillator_generalized(oscillator_epsilon(cfg)?, cfg.nu.unwrap_or(0.0), grid)
        }
        (System::Hydrogen, Scheme::Sdih) => hydrogen_sdih(cfg.l, grid),
        (System::Hydrogen, Scheme::Mielnik) => {
            hydrogen_mielnik(cfg.l, cfg.lambda.unwrap_or(f64::NAN), grid)
        }
        (System::Hydrogen, Scheme::Generalized) => {
            hydrogen_generalized(cfg.l, cfg.k, cfg.lambda.unwrap_or(f64::NAN), grid)
        }
        (_, Scheme::Chain) => Err(Error::Parameter("use the chain pipeline for chains".into())),
    }
}

/// Grid for a transform run, widened for radial systems when no outer
/// boundary was given.
pub fn transform_grid(cfg: &RunConfig) -> Result<Grid> {
    match cfg.system {
        System::Oscillator => build_grid(&cfg.grid, false),
        System::Hydrogen if cfg.grid.widen => {
            let h = cfg.grid.max / cfg.grid.n as f64;
            let (grid, _) = radial_spectrum_widening(
                |g| build_transform(cfg, g).map(|t| t.target_potential),
                h,
                cfg.grid.max,
                cfg.levels,
            )?;
            Ok(grid)
        }
        System::Hydrogen => build_grid(&cfg.grid, true),
    }
}

/// Exact source levels, lowest first.
fn source_levels(cfg: &RunConfig, m: usize) -> Vec<f64> {
    match (cfg.system, cfg.scheme) {
        (System::Oscillator, Scheme::Sdih | Scheme::Mielnik) => {
            (0..m).map(|n| 2.0 * n as f64 + 3.0).collect()
        }
        (System::Oscillator, _) => (0..m).map(|n| 2.0 * n as f64 + 1.0).collect(),
        (System::Hydrogen, _) => (1..=m)
            .map(|j| -1.0 / ((cfg.l as usize + j) as f64).powi(2))
            .collect(),
    }
}

/// Exact target levels: the source levels with the added energies.
fn predicted_levels(cfg: &RunConfig, added: &[f64], m: usize) -> Vec<f64> {
    let mut p = source_levels(cfg, m);
    p.extend_from_slice(added);
    p.sort_by(f64::total_cmp);
    p.truncate(m);
    p
}

/// Runs one resolved config.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.scheme {
        Scheme::Chain => execute_chain(cfg),
        _ => execute_transform(cfg),
    }
}

fn execute_transform(cfg: &RunConfig) -> Result<RunOutput> {
    let grid = transform_grid(cfg)?;
    let mut t = build_transform(cfg, &grid)?;
    if let Some(delta) = cfg.corrupt_beta {
        t.scheme.beta = t.scheme.beta.shifted(&grid, delta)?;
    }
    let m = cfg.levels;
    let target_pairs = eigenpairs(&build_hamiltonian(&t.target_potential)?, m)?;
    let computed: Vec<f64> = target_pairs.iter().map(|p| p.0).collect();
    let added: Vec<f64> = t.predicted_epsilon().into_iter().collect();
    let predicted = predicted_levels(cfg, &added, m);
    let spectrum = SpectrumReport::new(computed.clone(), predicted.clone(), cfg.tol);

    let mut checks = vec![Check::at_most("spectrum", spectrum.max_abs_error, cfg.tol)];
    let residual = t.residual()?.max_abs();
    checks.push(Check::at_most("riccati_residual", residual, ANALYTIC_RESIDUAL_TOL));
    checks.push(Check {
        name: "missing_state_normalizable".into(),
        value: tail_ratio(&t.missing.state),
        tolerance: 1e-3,
        pass: t.missing.normalizable,
    });
    if t.missing.normalizable {
        let q = rayleigh_quotient(&t.target_potential, &t.missing.state)?;
        checks.push(Check::at_most("missing_state_energy", (q - t.epsilon).abs(), cfg.tol));
    }

    let source_pairs = eigenpairs(&build_hamiltonian(&t.source_potential)?, m)?;
    if cfg.command == CommandKind::Verify {
        checks.extend(verify_transform(cfg, &t, &source_pairs, &computed)?);
    }

    let table = (cfg.command != CommandKind::Spectrum).then(|| {
        let mut columns = vec![
            ("x".to_string(), grid.nodes().collect::<Vec<_>>()),
            ("V".to_string(), t.source_potential.values().to_vec()),
            ("V_transformed".to_string(), t.target_potential.values().to_vec()),
            ("missing_state".to_string(), t.missing.state.values().to_vec()),
        ];
        for (j, (e, psi)) in source_pairs.iter().enumerate() {
            let mapped = map_eigenfunction(&t.scheme, psi, *e)
                .map(|s| s.state.into_values())
                .unwrap_or_else(|_| vec![f64::NAN; grid.len()]);
            columns.push((format!("psi_{j}"), mapped));
        }
        Table { grid, columns }
    });

    Ok(RunOutput {
        report: Report {
            config: cfg.clone(),
            checks,
            spectra: Spectra {
                computed,
                predicted,
                epsilon: t.epsilon,
            },
        },
        table,
    })
}

/// Largest magnitude over the outer fifth of the grid (both ends on a
/// line), relative to the peak.
fn tail_ratio(f: &GridFunction) -> f64 {
    let v = f.values();
    let n = v.len();
    let tail = (n / 5).max(2);
    let peak = f.max_abs();
    let right = v[n - tail..].iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let left = if f.grid().is_radial() {
        0.0
    } else {
        v[..tail].iter().fold(0.0f64, |a, b| a.max(b.abs()))
    };
    right.max(left) / peak
}

fn verify_transform(
    cfg: &RunConfig,
    t: &TransformResult,
    source_pairs: &[(f64, GridFunction)],
    computed: &[f64],
) -> Result<Vec<Check>> {
    let grid = *t.grid();
    let m = cfg.levels;
    let h = grid.spacing();
    let mut checks = Vec::new();

    let iso = isospectral_report(&t.source_potential, &t.target_potential, t.predicted_epsilon(), m, cfg.tol)?;
    checks.push(Check::at_most("isospectral", iso.max_abs_error, cfg.tol));

    if !grid.is_radial() {
        let sampled = t.scheme.beta.with_numeric_derivative(&grid)?;
        let r = riccati_residual_sampled(&sampled, Ordering::DaggerFirst, &t.source_potential)?;
        checks.push(Check::at_most(
            "riccati_residual_sampled",
            r.max_abs_interior(2),
            SAMPLED_RESIDUAL_FACTOR * h * h,
        ));
    }

    let beta = t.scheme.forward_beta(&grid)?;
    let (e0, psi0) = &source_pairs[0];
    checks.push(Check::at_most(
        "factorization",
        factorization_defect(&beta, psi0, *e0)?,
        INTERTWINE_TOL,
    ));
    checks.push(Check::at_most(
        "commutator",
        commutator_defect(&beta, psi0, &grid)?,
        INTERTWINE_TOL,
    ));

    for (j, (_, psi)) in source_pairs.iter().take(INTERTWINE_STATES).enumerate() {
        let r = intertwine_residual(&t.source_potential, &t.target_potential, &t.scheme, psi)?;
        checks.push(Check::at_most(format!("intertwining_{j}"), r, INTERTWINE_TOL));
    }

    if t.missing.normalizable {
        let mut worst = 0.0f64;
        for (e, psi) in source_pairs.iter().take(m.saturating_sub(1)) {
            let mapped = map_eigenfunction(&t.scheme, psi, *e)?;
            worst = worst.max(mapped.state.inner(&t.missing.state)?.abs());
        }
        checks.push(Check::at_most("orthogonality", worst, ORTHOGONALITY_TOL));
    }

    let numerov = numerov_levels(&t.target_potential, computed)?;
    checks.push(Check::at_most("numerov_agreement", max_deviation(&numerov, computed), NUMEROV_TOL));
    Ok(checks)
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn relative_interior_norm(f: &GridFunction, reference: &GridFunction, margin: usize) -> f64 {
    let n = f.len();
    let num: f64 = (margin..n - margin).map(|i| f.get(i).powi(2)).sum();
    let den: f64 = reference.values().iter().map(|v| v * v).sum();
    (num / den).sqrt()
}

/// `‖(A†A + ε - H) ψ‖ / ‖ψ‖` with `Hψ = Eψ` for an eigenvector.
fn factorization_defect(beta: &BetaFunction, psi: &GridFunction, e: f64) -> Result<f64> {
    let lhs = apply_creation(beta, &apply_annihilation(beta, psi)?)?.add(&psi.scale(beta.epsilon))?;
    Ok(relative_interior_norm(&lhs.sub(&psi.scale(e))?, psi, 3))
}

/// `‖([A, A†] - 2β') f‖ / ‖f‖`
fn commutator_defect(beta: &BetaFunction, f: &GridFunction, grid: &Grid) -> Result<f64> {
    let aad = apply_annihilation(beta, &apply_creation(beta, f)?)?;
    let ada = apply_creation(beta, &apply_annihilation(beta, f)?)?;
    let db = beta.derivative(grid)?;
    let d = aad.sub(&ada)?.sub(&f.mul(&db)?.scale(2.0))?;
    Ok(relative_interior_norm(&d, f, 3))
}

/// Seed for a chain step at `e`: the catalog branch of matching parity when
/// `e = -2k - 1`, otherwise the validated seed at `(e, ν)`.
fn chain_seed(e: f64, nu: f64, grid: &Grid) -> Result<BetaFunction> {
    let seed = match catalog_index(e) {
        Some(k) => {
            let parity = if k % 2 == 0 { Parity::Even } else { Parity::Odd };
            oscillator_seed_branch(e, parity, grid)?
        }
        None => oscillator_seed(e, nu, grid)?,
    };
    Ok(seed.beta())
}

/// Chain of first-order transforms on `x²`.
pub fn build_oscillator_chain(cfg: &RunConfig, grid: &Grid) -> Result<ChainState> {
    let base = PotentialSpec::oscillator().sample(grid)?;
    let seeds = cfg
        .epsilons
        .iter()
        .map(|e| chain_seed(*e, cfg.nu.unwrap_or(0.0), grid))
        .collect::<Result<Vec<_>>>()?;
    build_chain(base, seeds)
}

fn execute_chain(cfg: &RunConfig) -> Result<RunOutput> {
    let grid = build_grid(&cfg.grid, false)?;
    let mut chain = build_oscillator_chain(cfg, &grid)?;
    if let Some(delta) = cfg.corrupt_beta {
        let last = chain.steps.last_mut().expect("non-empty chain");
        last.beta = last.beta.shifted(&grid, delta)?;
    }
    let m = cfg.levels;
    let h = grid.spacing();
    let target = chain.current().clone();
    let pairs = eigenpairs(&build_hamiltonian(&target)?, m)?;
    let computed: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let predicted = predicted_levels(cfg, &cfg.epsilons, m);
    let spectrum = SpectrumReport::new(computed.clone(), predicted.clone(), cfg.tol);
    let mut checks = vec![Check::at_most("spectrum", spectrum.max_abs_error, cfg.tol)];

    let mut previous = chain.base.clone();
    for (i, step) in chain.steps.iter().enumerate() {
        let sampled = step.beta.with_numeric_derivative(&grid)?;
        let r = riccati_residual_sampled(&sampled, Ordering::DaggerFirst, &previous)?;
        checks.push(Check::at_most(
            format!("riccati_residual_step_{i}"),
            r.max_abs_interior(2),
            SAMPLED_RESIDUAL_FACTOR * h * h,
        ));
        previous = step.potential.clone();
    }
    let last = chain.steps.last().expect("non-empty chain");
    let missing = missing_state_from_beta(&last.beta, &grid)?;
    checks.push(Check {
        name: "missing_state_normalizable".into(),
        value: tail_ratio(&missing.state),
        tolerance: 1e-3,
        pass: missing.normalizable,
    });
    if cfg.command == CommandKind::Verify || cfg.command == CommandKind::Chain {
        let numerov = numerov_levels(&target, &computed)?;
        checks.push(Check::at_most("numerov_agreement", max_deviation(&numerov, &computed), NUMEROV_TOL));
    }

    let mut columns = vec![
        ("x".to_string(), grid.nodes().collect::<Vec<_>>()),
        ("V".to_string(), chain.base.values().to_vec()),
        ("V_transformed".to_string(), target.values().to_vec()),
        ("missing_state".to_string(), missing.state.values().to_vec()),
    ];
    for (j, (_, psi)) in pairs.iter().enumerate() {
        columns.push((format!("psi_{j}"), psi.values().to_vec()));
    }
    Ok(RunOutput {
        report: Report {
            config: cfg.clone(),
            checks,
            spectra: Spectra {
                computed,
                predicted,
                epsilon: last.epsilon,
            },
        },
        table: (cfg.command != CommandKind::Spectrum).then_some(Table { grid, columns }),
    })
}

// ---------------------------------------------------------------------------
// Output

/// Rounds to 12 significant digits.
pub fn round_sig12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            let r = round_sig12(n.as_f64().unwrap_or(0.0));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Numeric(format!("json: {e}")))?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Numeric(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn csv_text(table: &Table) -> String {
    let mut s = String::new();
    let names: Vec<&str> = table.columns.iter().map(|c| c.0.as_str()).collect();
    s.push_str(&names.join(","));
    s.push('\n');
    for i in 0..table.grid.len() {
        for (j, (_, col)) in table.columns.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{:.12e}", col[i]);
        }
        s.push('\n');
    }
    s
}

fn fmt_param(v: f64) -> String {
    format!("{}", round_sig12(v))
}

/// File stem for a run, e.g. `family_oscillator_mielnik_gamma2`.
pub fn file_stem(cfg: &RunConfig) -> String {
    let mut s = format!(
        "{}_{}_{}",
        cfg.command.name(),
        system_name(cfg.system),
        scheme_name(cfg.scheme)
    );
    if cfg.system == System::Hydrogen {
        let _ = write!(s, "_l{}", cfg.l);
    }
    if cfg.scheme == Scheme::Generalized && cfg.system == System::Hydrogen {
        let _ = write!(s, "_k{}", cfg.k);
    }
    for (name, v) in [("gamma", cfg.gamma), ("lambda", cfg.lambda), ("nu", cfg.nu)] {
        if let Some(v) = v {
            let _ = write!(s, "_{name}{}", fmt_param(v));
        }
    }
    if !cfg.epsilons.is_empty() {
        let e: Vec<String> = cfg.epsilons.iter().map(|e| fmt_param(*e)).collect();
        let _ = write!(s, "_eps{}", e.join("_"));
    }
    s
}

/// gnuplot script that plots the CSV columns against `x`.
pub fn plot_script(stem: &str, table: &Table, system: System) -> String {
    let yrange = match system {
        System::Oscillator => "[-6:30]",
        System::Hydrogen => "[-1.5:1]",
    };
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 1000,700");
    let _ = writeln!(s, "set output '{stem}.png'");
    let _ = writeln!(s, "set xlabel 'x'");
    let _ = writeln!(s, "set yrange {yrange}");
    let plots: Vec<String> = (2..=table.columns.len())
        .map(|c| format!("'{stem}.csv' using 1:{c} with lines"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

fn write_outputs(out: &RunOutput) -> Result<Vec<PathBuf>> {
    let cfg = &out.report.config;
    fs::create_dir_all(&cfg.out_dir).map_err(io_error)?;
    let stem = file_stem(cfg);
    let mut written = Vec::new();
    let json = cfg.out_dir.join(format!("{stem}.json"));
    fs::write(&json, to_json(&out.report)?).map_err(io_error)?;
    written.push(json);
    if let Some(table) = &out.table {
        let csv = cfg.out_dir.join(format!("{stem}.csv"));
        fs::write(&csv, csv_text(table)).map_err(io_error)?;
        written.push(csv);
        if cfg.plot {
            let gp = cfg.out_dir.join(format!("{stem}.gp"));
            fs::write(&gp, plot_script(&stem, table, cfg.system)).map_err(io_error)?;
            written.push(gp);
        }
    }
    Ok(written)
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write as _;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Human-readable summary: one line per check with its tolerance.
pub fn report_text(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run {}", file_stem(&report.config));
    for c in &report.checks {
        let _ = writeln!(
            s,
            "  {:<28} {:>14.6e}  tol {:>10.3e}  {}",
            c.name,
            c.value,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{e:.6}")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(s, "  computed  {}", fmt(&report.spectra.computed));
    let _ = writeln!(s, "  predicted {}", fmt(&report.spectra.predicted));
    s
}

/// Text printed by `catalog`.
pub fn catalog_text(args: &CatalogArgs) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Particular superpotentials");
    let _ = writeln!(s, "  {:<24} {:<12} {:>10}  superpotential", "potential", "ordering", "epsilon");
    for entry in catalog(args.max_l) {
        let ordering = match entry.ordering {
            Ordering::DaggerFirst => "A†A + eps",
            Ordering::PlainFirst => "AA† + eps",
        };
        let _ = writeln!(
            s,
            "  {:<24} {:<12} {:>10.6}  {}",
            entry.potential.label, ordering, entry.beta.epsilon, entry.formula
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Oscillator factorization energies (eps = -2k - 1)");
    for (k, e) in EnergyCatalog::oscillator(args.levels).entries {
        let _ = writeln!(s, "  k = {k:<3} eps = {e}");
    }
    for l in 1..=args.max_l {
        if let Ok(cat) = EnergyCatalog::hydrogen(l) {
            let _ = writeln!(s);
            let _ = writeln!(s, "Coulomb l = {l} factorization energies (eps = -1/(l+k)^2)");
            for (k, e) in cat.entries {
                let _ = writeln!(s, "  k = {k:<3} eps = {e:.6}");
            }
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Family domains");
    let _ = writeln!(s, "  oscillator mielnik:     |gamma| > sqrt(pi)/2 = {:.7}", oscillator_gamma_bound());
    for l in 1..=args.max_l {
        let _ = writeln!(
            s,
            "  hydrogen mielnik l = {l}: lambda < 0 or lambda > (2l)!(l/2)^(2l+1) = {}",
            hydrogen_lambda_bound(l)
        );
    }
    let _ = writeln!(s, "  oscillator generalized: eps < 1, |nu| < 1");
    let _ = writeln!(s, "  hydrogen generalized:   lambda < 1 (even |k|), lambda > 1 (odd |k|)");
    s
}

/// Output directory used when neither a flag nor a config file sets one.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(".").to_path_buf())
}
