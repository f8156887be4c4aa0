//! Null moments, standardization, the data-driven level set `S_n`, maximal
//! statistics and their Gumbel calibration.
//!
//! The null mean estimator is the leading Gaussian form, which is exact for
//! Gaussian data with unit variances. All three families share the same
//! norming sequences and hence the same critical value at a given `alpha`.

use log::warn;

use crate::error::{Error, Result};
use crate::stats::{
    check_level, gumbel_survival, gumbel_upper_quantile, marginal_summaries, normal_pdf,
    normal_survival, MarginalSummary, SampleMatrix, TestFamily,
};

/// Default `eta`; the level set is `(0, 1 - eta]`.
pub const DEFAULT_ETA: f64 = 0.05;

/// Leading-order null mean and standard deviation of `T_{gamma n}(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullMoments {
    pub family: TestFamily,
    pub s: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Norming constants `a(log p)` and `b(log p, eta)` of the Gumbel limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelNorming {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
}

impl GumbelNorming {
    /// `1 - exp(-exp(-(a m - b)))`.
    pub fn p_value(&self, m_hat: f64) -> f64 {
        gumbel_survival(self.a * m_hat - self.b).clamp(0.0, 1.0)
    }

    /// `a m - b`, the statistic on the Gumbel scale.
    pub fn normalize(&self, m_hat: f64) -> f64 {
        self.a * m_hat - self.b
    }
}

/// Outcome of one maximal thresholding test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport {
    pub family: TestFamily,
    pub m_hat: f64,
    pub argmax_s: f64,
    pub norming: GumbelNorming,
    pub critical_value: f64,
    pub alpha: f64,
    pub p_value: f64,
    pub reject: bool,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_dimension(p: usize) -> Result<()> {
    if p >= 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!("p must be ≥ 3 so that log p > 1, got {p}")))
    }
}

/// Null mean and variance at truncation point `t = sqrt(2 s log p)`.
#[inline]
fn moments_at(family: TestFamily, s: f64, p: f64, log_p: f64) -> (f64, f64) {
    let t = (2.0 * s * log_p).sqrt();
    let phi = normal_pdf(t);
    let sf = normal_survival(t);
    match family {
        TestFamily::Hc => {
            let tail = 2.0 * sf;
            (p * tail, p * tail * (1.0 - tail))
        }
        // 2 p phi(t) == sqrt(2/pi) p^{1-s} at this t.
        TestFamily::L1 => (
            2.0 * p * phi,
            2.0 * p.powf(1.0 - s) * (s * log_p / std::f64::consts::PI).sqrt(),
        ),
        TestFamily::L2 => (
            p * (2.0 * t * phi + 2.0 * sf),
            p * (2.0 * (t * t * t + 3.0 * t) * phi + 6.0 * sf),
        ),
    }
}

/// Leading Gaussian null moments of `T_{gamma n}(s)`.
pub fn null_moments(family: TestFamily, s: f64, p: usize) -> Result<NullMoments> {
    check_level(s)?;
    check_dimension(p)?;
    let pf = p as f64;
    let (mean, var) = moments_at(family, s, pf, pf.ln());
    Ok(NullMoments { family, s, mean, sd: var.sqrt() })
}

/// `(T_{gamma n}(s) - mean) / sd` with the leading null moments.
pub fn standardized_statistic(summary: &MarginalSummary, family: TestFamily, s: f64) -> Result<f64> {
    let m = null_moments(family, s, summary.p)?;
    let t = crate::stats::threshold_statistic(summary, family, s)?;
    Ok((t - m.mean) / m.sd)
}

/// Level set built from explicit `2 log p`: every `Y_j / (2 log p)` with
/// `0 < Y_j < 2 (1 - eta) log p`, plus the anchor `1 - eta`, ascending and
/// without duplicates.
pub fn candidate_levels(y: &[f64], two_log_p: f64, eta: f64) -> Vec<f64> {
    let cap = two_log_p * (1.0 - eta);
    let mut levels: Vec<f64> = y
        .iter()
        .filter(|&&v| v > 0.0 && v < cap)
        .map(|&v| v / two_log_p)
        .collect();
    levels.push(1.0 - eta);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    // A level can round up onto the anchor; keep the anchor as the maximum.
    levels.retain(|&s| s <= 1.0 - eta);
    levels
}

/// The candidate set `S_n`.
pub fn candidate_grid(summary: &MarginalSummary, eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    check_dimension(summary.p)?;
    Ok(candidate_levels(&summary.y, 2.0 * (summary.p as f64).ln(), eta))
}

/// `S_n` restricted to `s > (1 - theta)_+`; the anchor `1 - eta` is kept.
pub fn restricted_grid(summary: &MarginalSummary, eta: f64, theta: f64) -> Result<Vec<f64>> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    let grid = candidate_grid(summary, eta)?;
    Ok(restrict_levels(grid, eta, theta))
}

pub(crate) fn restrict_levels(grid: Vec<f64>, eta: f64, theta: f64) -> Vec<f64> {
    let floor = (1.0 - theta).max(0.0);
    let anchor = 1.0 - eta;
    grid.into_iter().filter(|&s| s > floor || s == anchor).collect()
}

/// Coordinates sorted by decreasing `Y`, with their levels `Y / (2 log p)`.
struct SortedLevels {
    y: Vec<f64>,
    level: Vec<f64>,
}

impl SortedLevels {
    fn new(summary: &MarginalSummary) -> Self {
        let two_log_p = 2.0 * (summary.p as f64).ln();
        let mut y = summary.y.clone();
        y.sort_by(|a, b| b.total_cmp(a));
        let level = y.iter().map(|v| v / two_log_p).collect();
        Self { y, level }
    }

    /// `T_gamma` at each level of an ascending grid, for every family.
    fn sums_on(&self, grid: &[f64]) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; grid.len()];
        let mut acc = [0.0f64; 3];
        let mut next = 0;
        for (k, &s) in grid.iter().enumerate().rev() {
            while next < self.y.len() && self.level[next] >= s {
                let v = self.y[next];
                acc[0] += 1.0;
                acc[1] += v.sqrt();
                acc[2] += v;
                next += 1;
            }
            out[k] = acc;
        }
        out
    }
}

/// Maximum of the standardized statistics over an ascending level grid, for
/// all three families at once. Returns `(m_hat, argmax_s)` per family, indexed
/// by `gamma`. Ties go to the smallest level.
pub fn maximal_statistics_on_grid(summary: &MarginalSummary, grid: &[f64]) -> Result<[(f64, f64); 3]> {
    check_dimension(summary.p)?;
    if grid.is_empty() {
        return Err(Error::Domain("level grid is empty".into()));
    }
    for &s in grid {
        check_level(s)?;
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("level grid must be strictly ascending".into()));
    }
    let sorted = SortedLevels::new(summary);
    let sums = sorted.sums_on(grid);
    let p = summary.p as f64;
    let log_p = p.ln();
    let mut best = [(f64::NEG_INFINITY, grid[0]); 3];
    for (&s, t) in grid.iter().zip(&sums) {
        for family in TestFamily::ALL {
            let g = family.gamma() as usize;
            let (mean, var) = moments_at(family, s, p, log_p);
            let z = (t[g] - mean) / var.sqrt();
            if z > best[g].0 {
                best[g] = (z, s);
            }
        }
    }
    Ok(best)
}

/// All three maximal statistics over `S_n`.
pub fn maximal_statistics(summary: &MarginalSummary, eta: f64) -> Result<[(f64, f64); 3]> {
    let grid = candidate_grid(summary, eta)?;
    maximal_statistics_on_grid(summary, &grid)
}

/// `M_hat_{gamma n} = max over S_n` of the standardized statistic, with the
/// maximizing level.
pub fn maximal_statistic(summary: &MarginalSummary, family: TestFamily, eta: f64) -> Result<(f64, f64)> {
    Ok(maximal_statistics(summary, eta)?[family.gamma() as usize])
}

/// Gumbel norming at `y = log p`:
/// `a = sqrt(2 log log p)`,
/// `b = 2 log log p + log log log p / 2 - log(4 pi / (1 - eta)^2) / 2`.
pub fn gumbel_norming(p: usize, eta: f64) -> Result<GumbelNorming> {
    check_eta(eta)?;
    let ll = (p as f64).ln().ln();
    if !(ll > 0.0) {
        return Err(Error::Calibration(format!(
            "p = {p} is too small for the Gumbel norming: log log p must be positive"
        )));
    }
    if ll < 1.0 {
        warn!("p = {p} < 16: log log log p is negative and the Gumbel norming is unreliable");
    }
    let a = (2.0 * ll).sqrt();
    let b = 2.0 * ll + 0.5 * ll.ln()
        - 0.5 * (4.0 * std::f64::consts::PI / ((1.0 - eta) * (1.0 - eta))).ln();
    Ok(GumbelNorming { a, b, eta })
}

/// `B_alpha = (E_alpha + b) / a` with `E_alpha` the upper Gumbel quantile.
pub fn critical_value(alpha: f64, p: usize, eta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let norming = gumbel_norming(p, eta)?;
    Ok((gumbel_upper_quantile(alpha) + norming.b) / norming.a)
}

/// Runs one test on precomputed marginal summaries.
pub fn run_test_on_summary(
    summary: &MarginalSummary,
    family: TestFamily,
    alpha: f64,
    eta: f64,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let norming = gumbel_norming(summary.p, eta)?;
    let critical_value = critical_value(alpha, summary.p, eta)?;
    let log_p = (summary.p as f64).ln();
    if log_p > (summary.n as f64).cbrt() {
        warn!(
            "log p = {log_p:.3} exceeds n^(1/3) = {:.3}; the sample may be too small for the normal approximation of the marginal means",
            (summary.n as f64).cbrt()
        );
    }
    let (m_hat, argmax_s) = maximal_statistic(summary, family, eta)?;
    Ok(TestReport {
        family,
        m_hat,
        argmax_s,
        norming,
        critical_value,
        alpha,
        p_value: norming.p_value(m_hat),
        reject: m_hat > critical_value,
    })
}

/// Runs one maximal thresholding test on a data matrix.
pub fn run_test(x: &SampleMatrix, family: TestFamily, alpha: f64, eta: f64) -> Result<TestReport> {
    run_test_on_summary(&marginal_summaries(x), family, alpha, eta)
}
