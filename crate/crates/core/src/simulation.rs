//! Monte Carlo size and power studies under AR(1)-correlated Gaussian noise.
//!
//! Every replication owns its generators, seeded from a SHA-256 digest of
//! `(master_seed, key, replication index, role)`. Replications are mapped in
//! parallel and collected in index order, so results do not depend on the
//! number of worker threads. Callers control the thread count by running
//! inside a rayon pool of the desired size.
//!
//! Null calibration draws are keyed by the null model `(p, n, rho)` rather
//! than by the scenario, so every alternative in a sweep is compared against
//! the same calibrated critical value, and those draws never overlap the
//! noise used for size or power.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::calibration::{critical_value, maximal_statistics, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::stats::{MarginalSummary, SampleMatrix, TestFamily};

pub const DEFAULT_REPS: usize = 2000;
pub const DEFAULT_NULL_REPS: usize = 2000;
pub const MIN_NULL_REPS: usize = 1000;
pub const DEFAULT_SEED: u64 = 20_130_601;

/// Grid of signal strengths used by the presets.
pub const R_GRID: [f64; 8] = [0.1, 0.3, 0.5, 0.6, 0.8, 0.9, 1.1, 1.2];
pub const BETA_GRID: [f64; 3] = [0.6, 0.7, 0.8];
pub const RHO_GRID: [f64; 2] = [0.3, 0.5];

/// Named `(p, n)` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub p: usize,
    pub n: usize,
}

/// `fig1`/`fig2` follow `p = exp(1.9 n^0.3 + 2.3)` (rounded to 2000 and
/// 20000); `fig3`/`fig4` follow `p = n^1.25 + 184`.
pub const PRESETS: [Preset; 4] = [
    Preset { name: "fig1", p: 2000, n: 30 },
    Preset { name: "fig2", p: 20_000, n: 100 },
    Preset { name: "fig3", p: 500, n: 100 },
    Preset { name: "fig4", p: 936, n: 200 },
];

pub fn preset(name: &str) -> Result<Preset> {
    PRESETS
        .iter()
        .copied()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}' (expected fig1, fig2, fig3 or fig4)")))
}

/// One cell of an experiment grid. `r = 0` encodes the null hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub p: usize,
    pub n: usize,
    pub rho: f64,
    pub beta: f64,
    pub r: f64,
    pub alpha: f64,
    pub eta: f64,
    pub reps: usize,
    pub null_reps: usize,
    pub master_seed: u64,
    pub scenario_id: String,
    /// Draw signal locations once per scenario instead of per replication.
    pub fixed_locations: bool,
}

impl ScenarioConfig {
    /// A null scenario with default `alpha`, `eta`, replication counts and seed.
    pub fn null(p: usize, n: usize, rho: f64) -> Self {
        Self {
            p,
            n,
            rho,
            beta: 0.7,
            r: 0.0,
            alpha: 0.05,
            eta: DEFAULT_ETA,
            reps: DEFAULT_REPS,
            null_reps: DEFAULT_NULL_REPS,
            master_seed: DEFAULT_SEED,
            scenario_id: String::new(),
            fixed_locations: false,
        }
        .with_default_id()
    }

    /// Same null model with a signal of sparsity `beta` and strength `r`.
    pub fn with_signal(mut self, beta: f64, r: f64) -> Self {
        self.beta = beta;
        self.r = r;
        self.with_default_id()
    }

    /// Resets `scenario_id` to a canonical label built from the grid values.
    pub fn with_default_id(mut self) -> Self {
        self.scenario_id = if self.r == 0.0 {
            format!("p{}_n{}_rho{}_size", self.p, self.n, self.rho)
        } else {
            format!("p{}_n{}_rho{}_beta{}_r{}", self.p, self.n, self.rho, self.beta, self.r)
        };
        self
    }

    /// Key of the null model, shared by every scenario with the same `(p, n, rho)`.
    pub fn null_key(&self) -> String {
        format!("p{}_n{}_rho{}", self.p, self.n, self.rho)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 3 || self.n < 2 {
            return Err(Error::Config(format!("need p ≥ 3 and n ≥ 2, got p = {}, n = {}", self.p, self.n)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be ≥ 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::Config(format!("r must be ≥ 0, got {}", self.r)));
        }
        if self.r > 0.0 && !(self.beta > 0.5 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (1/2, 1), got {}", self.beta)));
        }
        Ok(())
    }
}

/// Every preset cell crossed with the `rho`, `beta` and `r` grids.
pub fn scenario_presets() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for cell in PRESETS {
        for rho in RHO_GRID {
            for beta in BETA_GRID {
                for r in R_GRID {
                    let mut cfg = ScenarioConfig::null(cell.p, cell.n, rho).with_signal(beta, r);
                    cfg.scenario_id = format!("{}_rho{rho}_beta{beta}_r{r}", cell.name);
                    out.push(cfg);
                }
            }
        }
    }
    out
}

/// Purpose of a random stream; part of the seed derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Noise,
    Locations,
    Calibration,
}

impl StreamRole {
    fn tag(self) -> &'static [u8] {
        match self {
            StreamRole::Noise => b"noise",
            StreamRole::Locations => b"locations",
            StreamRole::Calibration => b"calibration",
        }
    }
}

/// Deterministic generator for replication `index` of stream `key`.
pub fn substream(master_seed: u64, key: &str, index: u64, role: StreamRole) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update(index.to_le_bytes());
    h.update(role.tag());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Sparse alternative: `m` columns shifted by `amplitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeSpec {
    pub beta: f64,
    pub r: f64,
    pub m: usize,
    /// Zero-based, strictly increasing column indices.
    pub locations: Vec<usize>,
    pub amplitude: f64,
}

/// `floor(p^{1 - beta})`, guarded against `p^{1-beta}` landing a hair below
/// an integer.
pub fn signal_count(p: usize, beta: f64) -> usize {
    ((p as f64).powf(1.0 - beta) + 1e-9).floor() as usize
}

/// `sqrt(2 r log p / n)`.
pub fn signal_amplitude(p: usize, n: usize, r: f64) -> f64 {
    (2.0 * r * (p as f64).ln() / n as f64).sqrt()
}

impl AlternativeSpec {
    /// Draws `floor(p^{1-beta})` locations uniformly without replacement.
    pub fn draw<R: Rng + ?Sized>(p: usize, n: usize, beta: f64, r: f64, rng: &mut R) -> Result<Self> {
        if !(beta > 0.5 && beta < 1.0) {
            return Err(Error::Domain(format!("beta must lie in (1/2, 1), got {beta}")));
        }
        let m = signal_count(p, beta).max(1);
        let mut locations = index::sample(rng, p, m).into_vec();
        locations.sort_unstable();
        Ok(Self { beta, r, m, locations, amplitude: signal_amplitude(p, n, r) })
    }

    fn amplitude_mask(&self, p: usize) -> Vec<f64> {
        let mut mask = vec![0.0; p];
        for &j in &self.locations {
            mask[j] = self.amplitude;
        }
        mask
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain(format!("rho must lie in [0, 1), got {rho}")))
    }
}

/// `n` independent rows with covariance `sigma_ij = rho^{|i-j|}`, generated by
/// the AR(1) recursion `W_{j+1} = rho W_j + sqrt(1 - rho^2) eps_{j+1}`.
pub fn generate_noise<R: Rng + ?Sized>(p: usize, n: usize, rho: f64, rng: &mut R) -> Result<SampleMatrix> {
    check_rho(rho)?;
    let mut values = vec![0.0; n * p];
    let c = (1.0 - rho * rho).sqrt();
    for row in values.chunks_exact_mut(p) {
        fill_ar1(row, rho, c, rng);
    }
    SampleMatrix::new(values, n, p)
}

#[inline]
fn fill_ar1<R: Rng + ?Sized>(row: &mut [f64], rho: f64, c: f64, rng: &mut R) {
    let mut w: f64 = rng.sample(StandardNormal);
    row[0] = w;
    for slot in &mut row[1..] {
        let eps: f64 = rng.sample(StandardNormal);
        w = rho * w + c * eps;
        *slot = w;
    }
}

/// Adds `spec.amplitude` to every entry of each signal column.
pub fn plant_signals(x: &SampleMatrix, spec: &AlternativeSpec) -> Result<SampleMatrix> {
    let p = x.p();
    if let Some(&j) = spec.locations.iter().find(|&&j| j >= p) {
        return Err(Error::Data(format!("signal location {j} is out of range for p = {p}")));
    }
    let mut out = x.clone();
    let mask = spec.amplitude_mask(p);
    for row in out.values_mut().chunks_exact_mut(p) {
        for (v, a) in row.iter_mut().zip(&mask) {
            if *a != 0.0 {
                *v += a;
            }
        }
    }
    Ok(out)
}

/// Column sums of `generate_noise` followed by `plant_signals`, without
/// materializing the matrix. Consumes the generator identically.
fn streamed_summary<R: Rng + ?Sized>(
    p: usize,
    n: usize,
    rho: f64,
    mask: Option<&[f64]>,
    rng: &mut R,
) -> MarginalSummary {
    let c = (1.0 - rho * rho).sqrt();
    let mut sums = vec![0.0; p];
    let mut row = vec![0.0; p];
    for _ in 0..n {
        fill_ar1(&mut row, rho, c, rng);
        match mask {
            Some(mask) => {
                for ((acc, w), a) in sums.iter_mut().zip(&row).zip(mask) {
                    *acc += if *a != 0.0 { w + a } else { *w };
                }
            }
            None => {
                for (acc, w) in sums.iter_mut().zip(&row) {
                    *acc += w;
                }
            }
        }
    }
    MarginalSummary::from_column_sums(sums, n)
}

/// How the rejection threshold is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Calibration {
    /// Asymptotic Gumbel critical value `B_alpha`.
    Gumbel,
    /// Empirical upper-`alpha` quantile of simulated null maxima.
    McAdjusted,
}

impl Calibration {
    pub const ALL: [Calibration; 2] = [Calibration::Gumbel, Calibration::McAdjusted];

    pub fn label(self) -> &'static str {
        match self {
            Calibration::Gumbel => "gumbel",
            Calibration::McAdjusted => "mc_adjusted",
        }
    }
}

/// Monte Carlo rejection rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub family: TestFamily,
    pub rejection_rate: f64,
    pub mc_standard_error: f64,
    pub reps: usize,
    pub calibration: Calibration,
    pub critical_value: f64,
}

impl PowerEstimate {
    fn from_count(family: TestFamily, calibration: Calibration, critical_value: f64, hits: usize, reps: usize) -> Self {
        let rate = hits as f64 / reps as f64;
        Self {
            family,
            rejection_rate: rate,
            mc_standard_error: (rate * (1.0 - rate) / reps as f64).sqrt(),
            reps,
            calibration,
            critical_value,
        }
    }
}

/// Maximal statistics `[M_0, M_1, M_2]` of one replication.
pub type Maxima = [f64; 3];

fn draw_locations(cfg: &ScenarioConfig, k: u64) -> Result<AlternativeSpec> {
    let index = if cfg.fixed_locations { 0 } else { k };
    let mut rng = substream(cfg.master_seed, &cfg.scenario_id, index, StreamRole::Locations);
    AlternativeSpec::draw(cfg.p, cfg.n, cfg.beta, cfg.r, &mut rng)
}

fn maxima_of(summary: &MarginalSummary, eta: f64) -> Result<Maxima> {
    let m = maximal_statistics(summary, eta)?;
    Ok([m[0].0, m[1].0, m[2].0])
}

/// Maximal statistics for replications `0..reps` of the scenario's own noise
/// stream, with signals planted when `r > 0`.
pub fn replicate_maxima(cfg: &ScenarioConfig, reps: usize) -> Result<Vec<Maxima>> {
    cfg.validate()?;
    (0..reps as u64)
        .into_par_iter()
        .map(|k| {
            let mask = if cfg.r > 0.0 { Some(draw_locations(cfg, k)?.amplitude_mask(cfg.p)) } else { None };
            let mut rng = substream(cfg.master_seed, &cfg.scenario_id, k, StreamRole::Noise);
            let summary = streamed_summary(cfg.p, cfg.n, cfg.rho, mask.as_deref(), &mut rng);
            maxima_of(&summary, cfg.eta)
        })
        .collect()
}

/// Null maximal statistics on the calibration stream of the scenario's null
/// model.
pub fn calibration_maxima(cfg: &ScenarioConfig, null_reps: usize) -> Result<Vec<Maxima>> {
    cfg.validate()?;
    let key = cfg.null_key();
    (0..null_reps as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(cfg.master_seed, &key, k, StreamRole::Calibration);
            let summary = streamed_summary(cfg.p, cfg.n, cfg.rho, None, &mut rng);
            maxima_of(&summary, cfg.eta)
        })
        .collect()
}

/// Empirical upper-`alpha` quantile: the smallest order statistic exceeded by
/// at most a fraction `alpha` of the sample.
pub fn upper_quantile(values: &[f64], alpha: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = ((n as f64) * (1.0 - alpha) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[k - 1]
}

fn check_null_reps(null_reps: usize) -> Result<()> {
    if null_reps < MIN_NULL_REPS {
        Err(Error::Config(format!("null_reps must be ≥ {MIN_NULL_REPS}, got {null_reps}")))
    } else {
        Ok(())
    }
}

/// MC-adjusted critical values for all three families, indexed by `gamma`.
pub fn mc_calibrate_all(cfg: &ScenarioConfig, null_reps: usize) -> Result<[f64; 3]> {
    check_null_reps(null_reps)?;
    let maxima = calibration_maxima(cfg, null_reps)?;
    Ok(quantiles_of(&maxima, cfg.alpha))
}

fn quantiles_of(maxima: &[Maxima], alpha: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (g, slot) in out.iter_mut().enumerate() {
        let col: Vec<f64> = maxima.iter().map(|m| m[g]).collect();
        *slot = upper_quantile(&col, alpha);
    }
    out
}

/// Empirical upper-`alpha` quantile of the null `M_hat_gamma`.
pub fn mc_calibrate(cfg: &ScenarioConfig, family: TestFamily, null_reps: usize) -> Result<f64> {
    Ok(mc_calibrate_all(cfg, null_reps)?[family.gamma() as usize])
}

/// Critical values `[B_0, B_1, B_2]` under a calibration mode.
pub fn critical_values(cfg: &ScenarioConfig, calibration: Calibration) -> Result<[f64; 3]> {
    match calibration {
        Calibration::Gumbel => {
            let b = critical_value(cfg.alpha, cfg.p, cfg.eta)?;
            Ok([b; 3])
        }
        Calibration::McAdjusted => mc_calibrate_all(cfg, cfg.null_reps),
    }
}

/// Rejection counts of `maxima` against `critical`, per family.
pub fn rejection_estimates(
    maxima: &[Maxima],
    critical: [f64; 3],
    calibration: Calibration,
) -> [PowerEstimate; 3] {
    TestFamily::ALL.map(|family| {
        let g = family.gamma() as usize;
        let hits = maxima.iter().filter(|m| m[g] > critical[g]).count();
        PowerEstimate::from_count(family, calibration, critical[g], hits, maxima.len())
    })
}

/// Empirical power of one family.
pub fn mc_power(cfg: &ScenarioConfig, family: TestFamily, calibration: Calibration) -> Result<PowerEstimate> {
    let critical = critical_values(cfg, calibration)?;
    let maxima = replicate_maxima(cfg, cfg.reps)?;
    Ok(rejection_estimates(&maxima, critical, calibration)[family.gamma() as usize])
}

/// Empirical size of one family: the scenario run with `r = 0`.
pub fn mc_size(cfg: &ScenarioConfig, family: TestFamily, calibration: Calibration) -> Result<PowerEstimate> {
    let mut null = cfg.clone();
    null.r = 0.0;
    mc_power(&null, family, calibration)
}

/// Size or power of all three families under both calibrations, from one set
/// of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub estimates: Vec<PowerEstimate>,
}

/// Runs a scenario; `mc_critical` supplies already-computed MC-adjusted
/// critical values for the scenario's null model.
pub fn run_scenario(cfg: &ScenarioConfig, mc_critical: [f64; 3]) -> Result<ScenarioResult> {
    let maxima = replicate_maxima(cfg, cfg.reps)?;
    let mut estimates = Vec::with_capacity(6);
    let gumbel = critical_values(cfg, Calibration::Gumbel)?;
    let by_mode = [
        rejection_estimates(&maxima, gumbel, Calibration::Gumbel),
        rejection_estimates(&maxima, mc_critical, Calibration::McAdjusted),
    ];
    for g in 0..3 {
        for mode in &by_mode {
            estimates.push(mode[g]);
        }
    }
    Ok(ScenarioResult { config: cfg.clone(), estimates })
}
