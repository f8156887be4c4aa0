//! Command-line front end: `test`, `simulate`, `boundary` and `calibrate`.
//!
//! Every command writes CSV to standard output or to `--out`. When `--out` is
//! given a `<out>.manifest` file is written next to it holding the resolved
//! configuration. Exit codes: 0 success, 1 usage or configuration error,
//! 2 data error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{critical_value, run_test_on_summary, DEFAULT_ETA};
use crate::error::Error;
use crate::simulation::{
    mc_calibrate_all, preset, run_scenario, ScenarioConfig, BETA_GRID, DEFAULT_NULL_REPS,
    DEFAULT_REPS, DEFAULT_SEED, MIN_NULL_REPS, RHO_GRID, R_GRID,
};
use crate::stats::{marginal_summaries, SampleMatrix, TestFamily};
use crate::theory::{
    classify_regime, delta2_separation, detectable_cases, detectable_windows, detection_boundary,
    restricted_boundary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "maxthresh", version, about = "Maximal thresholding tests for sparse faint signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run HC, L1 and/or L2 tests on an n x p CSV data file.
    Test(TestArgs),
    /// Monte Carlo size and power table.
    Simulate(SimArgs),
    /// Detection boundary and regime table over a (beta, r) grid.
    Boundary(BoundaryArgs),
    /// Gumbel and Monte Carlo critical values.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV file, one observation per row; an optional single header row.
    data: PathBuf,
    /// hc, l1, l2 or all.
    #[arg(long, env = "MAXTHRESH_GAMMA", default_value = "all")]
    gamma: String,
    #[arg(long, env = "MAXTHRESH_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, env = "MAXTHRESH_ETA", default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// Divide each column by its sample standard deviation first.
    #[arg(long, env = "MAXTHRESH_STANDARDIZE")]
    standardize: bool,
    #[arg(long, env = "MAXTHRESH_OUT")]
    out: Option<PathBuf>,
}

/// Scenario options shared by `simulate` and `calibrate`. Unset values fall
/// back to the config file, then to the preset and built-in defaults.
#[derive(Debug, Args)]
struct ScenarioArgs {
    /// fig1, fig2, fig3 or fig4.
    #[arg(long, env = "MAXTHRESH_PRESET")]
    preset: Option<String>,
    /// Flat key=value configuration file.
    #[arg(long, env = "MAXTHRESH_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "MAXTHRESH_P")]
    p: Option<usize>,
    #[arg(long, env = "MAXTHRESH_N")]
    n: Option<usize>,
    /// Comma-separated list.
    #[arg(long, env = "MAXTHRESH_RHO")]
    rho: Option<String>,
    #[arg(long, env = "MAXTHRESH_ALPHA")]
    alpha: Option<f64>,
    #[arg(long, env = "MAXTHRESH_ETA")]
    eta: Option<f64>,
    #[arg(long, env = "MAXTHRESH_SEED")]
    seed: Option<u64>,
    #[arg(long = "null-reps", env = "MAXTHRESH_NULL_REPS")]
    null_reps: Option<usize>,
    /// Worker threads; output does not depend on this value.
    #[arg(long, env = "MAXTHRESH_WORKERS")]
    workers: Option<usize>,
    #[arg(long, env = "MAXTHRESH_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated list.
    #[arg(long, env = "MAXTHRESH_BETA")]
    beta: Option<String>,
    /// Comma-separated list.
    #[arg(long, env = "MAXTHRESH_R")]
    r: Option<String>,
    #[arg(long, env = "MAXTHRESH_REPS")]
    reps: Option<usize>,
    /// Draw signal locations once per scenario.
    #[arg(long = "fixed-locations", env = "MAXTHRESH_FIXED_LOCATIONS")]
    fixed_locations: bool,
}

#[derive(Debug, Args)]
struct BoundaryArgs {
    /// Comma-separated list or start:stop:step.
    #[arg(long = "beta-grid", env = "MAXTHRESH_BETA_GRID")]
    beta_grid: String,
    /// Comma-separated list or start:stop:step.
    #[arg(long = "r-grid", env = "MAXTHRESH_R_GRID")]
    r_grid: String,
    #[arg(long, env = "MAXTHRESH_THETA")]
    theta: Option<f64>,
    /// Dimension at which the best level is chosen.
    #[arg(long, env = "MAXTHRESH_P", default_value_t = 10_000)]
    p: usize,
    #[arg(long, env = "MAXTHRESH_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// hc, l1, l2 or all.
    #[arg(long, env = "MAXTHRESH_GAMMA")]
    gamma: Option<String>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Data(_) => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Boundary(a) => cmd_boundary(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    strip_zeros(&format!("{x:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn families(spec: &str) -> CmdResult<Vec<TestFamily>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(TestFamily::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let f: TestFamily = part.parse().map_err(Failure::from)?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out.sort();
    Ok(out)
}

fn parse_list(key: &str, spec: &str) -> CmdResult<Vec<f64>> {
    let spec = spec.trim();
    let parse = |s: &str| -> CmdResult<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("invalid number '{s}' for {key}")))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("{key}: expected start:stop:step, got '{spec}'")));
        }
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(usage(format!("{key}: need step > 0 and stop ≥ start")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Round to 12 decimals so that 0.55 + 3 * 0.05 prints as 0.7.
        return Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    spec.split(',').filter(|s| !s.trim().is_empty()).map(parse).collect()
}

fn read_config_file(path: &Path) -> CmdResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    const KNOWN: [&str; 15] = [
        "preset", "p", "n", "rho", "beta", "r", "alpha", "eta", "reps", "null_reps", "seed",
        "fixed_locations", "gamma", "workers", "out",
    ];
    if let Some(k) = map.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(usage(format!("unknown config key '{k}'")));
    }
    Ok(map)
}

/// Resolved settings: flag (or env var) over config file over defaults.
struct Resolved {
    file: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl Resolved {
    fn new(config: Option<&Path>) -> CmdResult<Self> {
        let file = match config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        Ok(Self { file, echo: BTreeMap::new() })
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> CmdResult<Option<T>>
    where
        T: ToString,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(s.parse::<T>().map_err(|_| usage(format!("invalid value '{s}' for {key}")))?),
                None => default,
            },
        };
        if let Some(v) = &value {
            self.echo.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    fn list(&mut self, key: &str, flag: Option<String>, default: &[f64]) -> CmdResult<Vec<f64>> {
        let spec = flag.or_else(|| self.file.get(key).cloned());
        let values = match spec {
            Some(s) => parse_list(key, &s)?,
            None => default.to_vec(),
        };
        if values.is_empty() {
            return Err(usage(format!("{key}: empty list")));
        }
        self.echo.insert(key.to_string(), values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        Ok(values)
    }
}

struct Grid {
    label: Option<String>,
    p: usize,
    n: usize,
    rhos: Vec<f64>,
    alpha: f64,
    eta: f64,
    seed: u64,
    null_reps: usize,
    workers: Option<usize>,
    out: Option<PathBuf>,
}

fn resolve_grid(a: &ScenarioArgs, res: &mut Resolved) -> CmdResult<Grid> {
    let label = res.get::<String>("preset", a.preset.clone(), None)?;
    let base = label.as_deref().map(preset).transpose()?;
    let p = res.get("p", a.p, base.map(|b| b.p))?.ok_or_else(|| usage("p is required (set --p or --preset)"))?;
    let n = res.get("n", a.n, base.map(|b| b.n))?.ok_or_else(|| usage("n is required (set --n or --preset)"))?;
    let rhos = res.list("rho", a.rho.clone(), &RHO_GRID)?;
    let alpha = res.get("alpha", a.alpha, Some(0.05))?.unwrap();
    let eta = res.get("eta", a.eta, Some(DEFAULT_ETA))?.unwrap();
    let seed = res.get("seed", a.seed, Some(DEFAULT_SEED))?.unwrap();
    let null_reps = res.get("null_reps", a.null_reps, Some(DEFAULT_NULL_REPS))?.unwrap();
    let workers = res.get::<usize>("workers", a.workers, None)?;
    let out = res.get::<String>("out", a.out.as_ref().map(|p| p.display().to_string()), None)?.map(PathBuf::from);
    if null_reps < MIN_NULL_REPS {
        return Err(usage(format!("null_reps must be ≥ {MIN_NULL_REPS}, got {null_reps}")));
    }
    if workers == Some(0) {
        return Err(usage("workers must be ≥ 1"));
    }
    Ok(Grid { label, p, n, rhos, alpha, eta, seed, null_reps, workers, out })
}

impl Grid {
    fn config(&self, rho: f64, beta: f64, r: f64, reps: usize) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::null(self.p, self.n, rho);
        cfg.alpha = self.alpha;
        cfg.eta = self.eta;
        cfg.master_seed = self.seed;
        cfg.null_reps = self.null_reps;
        cfg.reps = reps;
        cfg = cfg.with_signal(beta, r);
        if let Some(label) = &self.label {
            cfg.scenario_id = if r == 0.0 {
                format!("{label}_rho{rho}_size")
            } else {
                format!("{label}_rho{rho}_beta{beta}_r{r}")
            };
        }
        cfg
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CmdResult<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| usage(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn emit(out: Option<&Path>, body: &str, manifest: &BTreeMap<String, String>, command: &str) -> CmdResult<()> {
    match out {
        Some(path) => {
            fs::write(path, body).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            let mut m = format!("command={command}\n");
            for (k, v) in manifest {
                let _ = writeln!(m, "{k}={v}");
            }
            let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
            let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let _ = writeln!(m, "timestamp_unix={ts}");
            let mpath = PathBuf::from(format!("{}.manifest", path.display()));
            fs::write(&mpath, m).map_err(|e| usage(format!("cannot write {}: {e}", mpath.display())))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes()).map_err(|e| usage(format!("cannot write output: {e}")))?;
        }
    }
    Ok(())
}

/// Reads a numeric CSV. A first row with any non-numeric cell is taken as a
/// header; anything non-numeric after it is a data error.
pub fn read_data_csv(path: &Path) -> Result<SampleMatrix, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("line {}: {e}", i + 1)))?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, String> = record
            .iter()
            .enumerate()
            .map(|(j, c)| c.parse::<f64>().map_err(|_| format!("line {}, column {}: '{c}' is not numeric", i + 1, j + 1)))
            .collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(msg) => return Err(Error::Data(msg)),
        }
    }
    SampleMatrix::from_rows(&rows)
}

fn cmd_test(a: TestArgs) -> CmdResult<()> {
    let fams = families(&a.gamma)?;
    let x = read_data_csv(&a.data)?;
    let x = if a.standardize { x.standardize_columns()? } else { x };
    let summary = marginal_summaries(&x);
    let mut body = String::from("gamma,m_hat,argmax_s,critical_value,p_value,reject\n");
    for family in fams {
        let r = run_test_on_summary(&summary, family, a.alpha, a.eta)?;
        let _ = writeln!(
            body,
            "{},{},{},{},{},{}",
            family.gamma(),
            fmt_num(r.m_hat),
            fmt_num(r.argmax_s),
            fmt_num(r.critical_value),
            fmt_num(r.p_value),
            r.reject
        );
    }
    let manifest = BTreeMap::from([
        ("data".to_string(), a.data.display().to_string()),
        ("gamma".to_string(), a.gamma.clone()),
        ("alpha".to_string(), a.alpha.to_string()),
        ("eta".to_string(), a.eta.to_string()),
        ("standardize".to_string(), a.standardize.to_string()),
    ]);
    emit(a.out.as_deref(), &body, &manifest, "test")
}

pub const SIMULATE_HEADER: &str =
    "scenario_id,p,n,rho,beta,r,test,alpha,calibration,rejection_rate,mc_se,reps,seed";

fn cmd_simulate(a: SimArgs) -> CmdResult<()> {
    let mut res = Resolved::new(a.scenario.config.as_deref())?;
    let grid = resolve_grid(&a.scenario, &mut res)?;
    let betas = res.list("beta", a.beta.clone(), &BETA_GRID)?;
    let rs = res.list("r", a.r.clone(), &R_GRID)?;
    let reps = res.get("reps", a.reps, Some(DEFAULT_REPS))?.unwrap();
    let fixed = res.get("fixed_locations", a.fixed_locations.then_some(true), Some(false))?.unwrap();
    if reps == 0 {
        return Err(usage("reps must be ≥ 1"));
    }
    if let Some(r) = rs.iter().find(|r| !(**r > 0.0)) {
        return Err(usage(format!("r values must be positive, got {r}")));
    }

    let mut cells = Vec::new();
    for &rho in &grid.rhos {
        cells.push(grid.config(rho, betas[0], 0.0, reps));
        for &beta in &betas {
            for &r in &rs {
                cells.push(grid.config(rho, beta, r, reps));
            }
        }
    }
    for c in &mut cells {
        c.fixed_locations = fixed;
        c.validate()?;
    }

    let results = with_workers(grid.workers, || -> Result<Vec<_>, Error> {
        let mut calib: Vec<(f64, [f64; 3])> = Vec::new();
        let mut out = Vec::with_capacity(cells.len());
        for cfg in &cells {
            let mc = match calib.iter().find(|(rho, _)| *rho == cfg.rho) {
                Some((_, c)) => *c,
                None => {
                    let c = mc_calibrate_all(cfg, cfg.null_reps)?;
                    calib.push((cfg.rho, c));
                    c
                }
            };
            out.push(run_scenario(cfg, mc)?);
        }
        Ok(out)
    })??;

    let mut body = format!("{SIMULATE_HEADER}\n");
    for result in &results {
        let c = &result.config;
        let beta = if c.r == 0.0 { String::new() } else { c.beta.to_string() };
        for e in &result.estimates {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.scenario_id,
                c.p,
                c.n,
                c.rho,
                beta,
                c.r,
                e.family,
                c.alpha,
                e.calibration.label(),
                fmt_num(e.rejection_rate),
                fmt_num(e.mc_standard_error),
                e.reps,
                c.master_seed
            );
        }
    }
    emit(grid.out.as_deref(), &body, &res.echo, "simulate")
}

fn cmd_boundary(a: BoundaryArgs) -> CmdResult<()> {
    let betas = parse_list("beta-grid", &a.beta_grid)?;
    let rs = parse_list("r-grid", &a.r_grid)?;
    if let Some(b) = betas.iter().find(|b| !(**b > 0.5 && **b < 1.0)) {
        return Err(usage(format!("beta-grid value {b} is outside (1/2, 1)")));
    }
    if let Some(r) = rs.iter().find(|r| !(**r > 0.0)) {
        return Err(usage(format!("r-grid value {r} must be positive")));
    }
    if let Some(t) = a.theta {
        if !(t > 0.0) {
            return Err(usage(format!("theta must be positive, got {t}")));
        }
    }
    if a.p < 3 {
        return Err(usage("p must be ≥ 3"));
    }
    let mut body = String::from("beta,r,rho_star,rho_star_theta,regime,best_s,case\n");
    for &beta in &betas {
        let rho_star = detection_boundary(beta)?;
        let rho_theta = a.theta.map(|t| restricted_boundary(beta, t)).transpose()?;
        for &r in &rs {
            let regime = classify_regime(r, beta)?;
            let best = best_level(r, beta, a.p as f64);
            let _ = writeln!(
                body,
                "{beta},{r},{},{},{},{},{}",
                fmt_num(rho_star),
                rho_theta.map(fmt_num).unwrap_or_default(),
                regime.power_order.label(),
                best.map(|(s, _)| fmt_num(s)).unwrap_or_default(),
                best.map(|(_, c)| c.to_string()).unwrap_or_default(),
            );
        }
    }
    let manifest = BTreeMap::from([
        ("beta_grid".to_string(), a.beta_grid.clone()),
        ("r_grid".to_string(), a.r_grid.clone()),
        ("theta".to_string(), a.theta.map(|t| t.to_string()).unwrap_or_default()),
        ("p".to_string(), a.p.to_string()),
    ]);
    emit(a.out.as_deref(), &body, &manifest, "boundary")
}

/// Level maximizing `Delta_2` among detectable levels, from a 1000-point grid
/// plus the midpoint of each detectable window.
pub fn best_level(r: f64, beta: f64, p: f64) -> Option<(f64, u8)> {
    let mut levels: Vec<f64> = (1..=1000).map(|i| i as f64 / 1001.0).collect();
    levels.extend(detectable_windows(r, beta).iter().map(|(_, lo, hi)| 0.5 * (lo + hi)));
    let mut best: Option<(f64, f64, u8)> = None;
    for s in levels {
        if s == r {
            continue;
        }
        let (case, detectable) = detectable_cases(s, r, beta);
        if !detectable {
            continue;
        }
        let Ok(d) = delta2_separation(s, r, beta, p) else { continue };
        if best.map_or(true, |(_, bd, _)| d > bd) {
            best = Some((s, d, case.number()));
        }
    }
    best.map(|(s, _, c)| (s, c))
}

fn cmd_calibrate(a: CalibrateArgs) -> CmdResult<()> {
    let mut res = Resolved::new(a.scenario.config.as_deref())?;
    let grid = resolve_grid(&a.scenario, &mut res)?;
    let gamma = res.get("gamma", a.gamma.clone(), Some("all".to_string()))?.unwrap();
    let fams = families(&gamma)?;
    let gumbel = critical_value(grid.alpha, grid.p, grid.eta)?;
    let cells: Vec<ScenarioConfig> = grid.rhos.iter().map(|&rho| grid.config(rho, 0.7, 0.0, 1)).collect();
    for c in &cells {
        c.validate()?;
    }
    let mc = with_workers(grid.workers, || {
        cells.iter().map(|c| mc_calibrate_all(c, grid.null_reps)).collect::<Result<Vec<_>, Error>>()
    })??;
    let mut body = String::from("gamma,p,n,rho,alpha,gumbel_critical,mc_critical,null_reps,seed\n");
    for (cfg, crit) in cells.iter().zip(&mc) {
        for &family in &fams {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{},{},{}",
                family.gamma(),
                cfg.p,
                cfg.n,
                cfg.rho,
                cfg.alpha,
                fmt_num(gumbel),
                fmt_num(crit[family.gamma() as usize]),
                grid.null_reps,
                cfg.master_seed
            );
        }
    }
    emit(grid.out.as_deref(), &body, &res.echo, "calibrate")
}
