//! Marginal summaries, thresholded statistics and the special functions they
//! rest on.
//!
//! Every statistic here is a function of the squared z-statistics
//! `Y_j = n * xbar_j^2`. Marginal variances are taken as known and equal to
//! one; [`SampleMatrix::standardize_columns`] is available for callers who
//! want to rescale by the sample standard deviation first, but the null
//! moments used downstream are exact only in the known-variance case.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `1 / sqrt(2 pi)`.
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// An `n x p` observation matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: Vec<f64>,
    n: usize,
    p: usize,
}

impl SampleMatrix {
    pub fn new(values: Vec<f64>, n: usize, p: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Data("n must be ≥ 2".into()));
        }
        if p < 2 {
            return Err(Error::Data("p must be ≥ 2".into()));
        }
        if values.len() != n * p {
            return Err(Error::Data(format!(
                "expected {} values for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite entry at row {}, column {}",
                idx / p + 1,
                idx % p + 1
            )));
        }
        Ok(Self { values, n, p })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Data(format!(
                "ragged rows: row 1 has {p} columns, row {} has {}",
                i + 1,
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), n, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Divides every column by its sample standard deviation (denominator
    /// `n - 1`). Columns are not centred.
    pub fn standardize_columns(&self) -> Result<Self> {
        let (n, p) = (self.n, self.p);
        let mut out = self.values.clone();
        for j in 0..p {
            let mean = (0..n).map(|i| self.get(i, j)).sum::<f64>() / n as f64;
            let ss: f64 = (0..n).map(|i| (self.get(i, j) - mean).powi(2)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if !(sd > 0.0) {
                return Err(Error::Data(format!(
                    "column {} has zero sample variance and cannot be standardized",
                    j + 1
                )));
            }
            for i in 0..n {
                out[i * p + j] /= sd;
            }
        }
        Self::new(out, n, p)
    }
}

/// Column means and squared z-statistics of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSummary {
    pub xbar: Vec<f64>,
    pub y: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl MarginalSummary {
    /// Forms the summary from per-column sums accumulated over `n` rows.
    pub fn from_column_sums(sums: Vec<f64>, n: usize) -> Self {
        let nf = n as f64;
        let xbar: Vec<f64> = sums.into_iter().map(|s| s / nf).collect();
        let y = xbar.iter().map(|m| nf * m * m).collect();
        let p = xbar.len();
        Self { xbar, y, n, p }
    }

    /// Summary built directly from squared z-statistics. `xbar` is filled with
    /// the non-negative root `sqrt(y / n)`.
    pub fn from_y(y: Vec<f64>, n: usize) -> Result<Self> {
        if let Some(v) = y.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Data(format!("squared z-statistic {v} is not a finite non-negative value")));
        }
        let nf = n as f64;
        let xbar = y.iter().map(|v| (v / nf).sqrt()).collect();
        let p = y.len();
        Ok(Self { xbar, y, n, p })
    }
}

/// Column means `xbar_j` and `Y_j = n * xbar_j^2`.
pub fn marginal_summaries(x: &SampleMatrix) -> MarginalSummary {
    let mut sums = vec![0.0; x.p];
    for i in 0..x.n {
        for (acc, v) in sums.iter_mut().zip(x.row(i)) {
            *acc += v;
        }
    }
    MarginalSummary::from_column_sums(sums, x.n)
}

/// Member of the thresholding family, indexed by the power `gamma` applied to
/// `|sqrt(n) xbar_j|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestFamily {
    /// Higher Criticism, `gamma = 0` (exceedance count).
    Hc,
    /// Maximal L1 thresholding, `gamma = 1`.
    L1,
    /// Maximal L2 thresholding, `gamma = 2`.
    L2,
}

impl TestFamily {
    pub const ALL: [TestFamily; 3] = [TestFamily::Hc, TestFamily::L1, TestFamily::L2];

    pub fn gamma(self) -> u8 {
        match self {
            TestFamily::Hc => 0,
            TestFamily::L1 => 1,
            TestFamily::L2 => 2,
        }
    }

    pub fn from_gamma(gamma: u8) -> Result<Self> {
        match gamma {
            0 => Ok(TestFamily::Hc),
            1 => Ok(TestFamily::L1),
            2 => Ok(TestFamily::L2),
            g => Err(Error::Domain(format!("gamma must be 0, 1 or 2, got {g}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TestFamily::Hc => "hc",
            TestFamily::L1 => "l1",
            TestFamily::L2 => "l2",
        }
    }

    /// Contribution of one exceedance `y` to `T_gamma`.
    #[inline]
    pub(crate) fn term(self, y: f64) -> f64 {
        match self {
            TestFamily::Hc => 1.0,
            TestFamily::L1 => y.sqrt(),
            TestFamily::L2 => y,
        }
    }
}

impl fmt::Display for TestFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TestFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hc" | "0" => Ok(TestFamily::Hc),
            "l1" | "1" => Ok(TestFamily::L1),
            "l2" | "2" => Ok(TestFamily::L2),
            other => Err(Error::Config(format!("unknown test family '{other}' (expected hc, l1 or l2)"))),
        }
    }
}

/// A thresholding level `s` together with `lambda = 2 s log p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdLevel {
    pub s: f64,
    pub lambda: f64,
}

impl ThresholdLevel {
    pub fn new(s: f64, p: usize) -> Result<Self> {
        Ok(Self { s, lambda: lambda_p(s, p)? })
    }
}

pub(crate) fn check_level(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold level s must lie in (0, 1), got {s}")))
    }
}

/// `lambda_p(s) = 2 s log p`.
pub fn lambda_p(s: f64, p: usize) -> Result<f64> {
    check_level(s)?;
    if p < 2 {
        return Err(Error::Domain(format!("p must be ≥ 2, got {p}")));
    }
    Ok(2.0 * s * (p as f64).ln())
}

/// `sum_j Y_j^{gamma/2} I{Y_j >= lambda}` for an explicit threshold.
pub fn thresholded_sum(y: &[f64], family: TestFamily, lambda: f64) -> f64 {
    y.iter().filter(|&&v| v >= lambda).map(|&v| family.term(v)).sum()
}

/// `T_{gamma n}(s)`.
///
/// The exceedance test `Y_j >= 2 s log p` is carried out as
/// `Y_j / (2 log p) >= s` so that a level built from some `Y_j` includes that
/// coordinate exactly.
pub fn threshold_statistic(summary: &MarginalSummary, family: TestFamily, s: f64) -> Result<f64> {
    check_level(s)?;
    let two_log_p = 2.0 * (summary.p as f64).ln();
    Ok(summary
        .y
        .iter()
        .filter(|&&v| v / two_log_p >= s)
        .map(|&v| family.term(v))
        .sum())
}

/// Standard normal density.
pub fn normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Standard normal survival function `P(Z > t)`, evaluated through `erfc` so
/// that the upper tail keeps full relative precision.
pub fn normal_survival(t: f64) -> f64 {
    0.5 * libm::erfc(t / SQRT_2)
}

/// Standard Gumbel distribution function `exp(-exp(-x))`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// `1 - gumbel_cdf(x)` without cancellation.
pub fn gumbel_survival(x: f64) -> f64 {
    -(-(-x).exp()).exp_m1()
}

/// Upper `alpha` quantile of the standard Gumbel law.
pub fn gumbel_upper_quantile(alpha: f64) -> f64 {
    -(-(-alpha).ln_1p()).ln()
}

/// `E[|Z|^k I(|Z| > t)]` for standard normal `Z`, by adaptive Gauss-Kronrod
/// quadrature of `2 z^k phi(z)` over `(t, t + 40]`.
///
/// Serves as an independent check on the closed-form truncated moments.
pub fn truncated_moment_oracle(k: u32, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("truncation point must be finite and ≥ 0, got {t}")));
    }
    let f = |z: f64| z.powi(k as i32) * normal_pdf(z);
    // Split so that the bulk of the mass sits in the first few panels.
    let mut total = 0.0;
    let mut a = t;
    for width in [1.0, 2.0, 4.0, 8.0, 25.0] {
        let b = a + width;
        total += adaptive_kronrod(&f, a, b, 2e-13, 0);
        a = b;
    }
    Ok(2.0 * total)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its embedded 7-point Gauss estimate.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, g * h)
}

fn adaptive_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, g) = kronrod15(f, a, b);
    if (k - g).abs() <= tol || depth >= 40 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive_kronrod(f, a, m, 0.5 * tol, depth + 1) + adaptive_kronrod(f, m, b, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn summary(y: &[f64]) -> MarginalSummary {
        MarginalSummary::from_y(y.to_vec(), 10).unwrap()
    }

    #[test]
    fn marginal_summary_examples() {
        let x = SampleMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![1.0, -1.0, 3.0],
            vec![1.0, 1.0, 0.0],
            vec![1.0, -1.0, 0.0],
        ])
        .unwrap();
        let s = marginal_summaries(&x);
        assert_eq!(s.xbar[0], 1.0);
        assert_eq!(s.y[0], 4.0);
        assert_eq!(s.xbar[1], 0.0);
        assert_eq!(s.y[1], 0.0);

        let x = SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 3.0], vec![0.0, 0.0]]).unwrap();
        let s = marginal_summaries(&x);
        assert_eq!(s.xbar[0], 0.0);
        assert_eq!(s.xbar[1], 1.0);
        assert_eq!(s.y[1], 3.0);
    }

    #[test]
    fn sample_matrix_rejects_bad_shapes() {
        assert!(matches!(SampleMatrix::from_rows(&[vec![1.0, 2.0]]), Err(Error::Data(m)) if m.contains("n must be ≥ 2")));
        assert!(SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(SampleMatrix::new(vec![1.0, f64::NAN, 0.0, 0.0], 2, 2).is_err());
        assert!(SampleMatrix::new(vec![1.0; 6], 3, 2).is_ok());
    }

    #[test]
    fn standardize_divides_by_sample_sd() {
        let x = SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 2.0]]).unwrap();
        assert!(x.standardize_columns().is_err());
        let x = SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 6.0]]).unwrap();
        let z = x.standardize_columns().unwrap();
        // sd of (1,3) is sqrt(2), of (2,6) is sqrt(8)
        assert!((z.get(1, 0) - 3.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((z.get(1, 1) - 6.0 / 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_p(0.5, 100).unwrap() - 4.605_170_185_988_092).abs() < 1e-12);
        assert!(lambda_p(1e-12, 100).unwrap() < 1e-10);
        assert!(lambda_p(0.0, 100).is_err());
        assert!(lambda_p(1.0, 100).is_err());
        let lam = ThresholdLevel::new(0.25, 55).unwrap();
        assert!((lam.lambda - 0.5 * 55f64.ln()).abs() < 1e-15);
        // p = e^4 is not an integer; check the arithmetic directly.
        assert!((2.0 * 0.25 * 4.0f64 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn thresholded_sum_examples() {
        let y = [5.0, 1.0, 9.0];
        assert_eq!(thresholded_sum(&y, TestFamily::L2, 4.0), 14.0);
        assert!((thresholded_sum(&y, TestFamily::L1, 4.0) - (5f64.sqrt() + 3.0)).abs() < 1e-15);
        assert_eq!(thresholded_sum(&y, TestFamily::Hc, 4.0), 2.0);
        for fam in TestFamily::ALL {
            assert_eq!(thresholded_sum(&y, fam, 9.5), 0.0);
        }
        // ties at lambda are included
        assert_eq!(thresholded_sum(&y, TestFamily::Hc, 9.0), 1.0);
    }

    #[test]
    fn threshold_statistic_includes_own_level() {
        let y = vec![0.3, 1.7, 2.9, 4.1, 7.7];
        let s = summary(&y);
        let two_log_p = 2.0 * 5f64.ln();
        for (k, &v) in y.iter().enumerate() {
            let level = v / two_log_p;
            if level < 1.0 {
                let count = threshold_statistic(&s, TestFamily::Hc, level).unwrap();
                assert_eq!(count, (y.len() - k) as f64);
            }
        }
        assert!(threshold_statistic(&s, TestFamily::L2, 1.5).is_err());
    }

    #[test]
    fn special_function_values() {
        assert!((normal_pdf(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert_eq!(normal_survival(0.0), 0.5);
        assert!((gumbel_cdf(0.0) - (-1f64).exp()).abs() < 1e-16);
        assert!((gumbel_upper_quantile(0.05) - 2.970_195_249_042_164_6).abs() < 1e-13);
        assert!((gumbel_survival(gumbel_upper_quantile(0.05)) - 0.05).abs() < 1e-15);
    }

    // Reference values from 40-digit erfc evaluations.
    #[test]
    fn normal_survival_tail_accuracy() {
        let refs = [
            (0.5, 0.308_537_538_725_986_9),
            (1.0, 0.158_655_253_931_457_05),
            (2.0, 0.022_750_131_948_179_207),
            (3.0, 0.001_349_898_031_630_094_5),
            (5.0, 2.866_515_718_791_939_1e-7),
            (8.0, 6.220_960_574_271_784e-16),
            (10.0, 7.619_853_024_160_526e-24),
            (20.0, 2.753_624_118_606_233_7e-89),
            (30.0, 4.906_713_927_148_187e-198),
            (37.0, 5.725_571_222_524_577e-300),
        ];
        for (t, want) in refs {
            let got = normal_survival(t);
            assert!(((got - want) / want).abs() < 1e-12, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn survival_symmetry() {
        let mut t = -8.0;
        while t <= 8.0 {
            assert!((normal_survival(t) + normal_survival(-t) - 1.0).abs() < 1e-12);
            t += 0.01;
        }
    }

    #[test]
    fn oracle_examples() {
        assert!((truncated_moment_oracle(2, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((truncated_moment_oracle(4, 0.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((truncated_moment_oracle(1, 1.0).unwrap() - 0.483_941_449_038_286_7).abs() < 1e-12);
        assert!(truncated_moment_oracle(2, -1.0).is_err());
    }

    #[test]
    fn oracle_matches_closed_forms() {
        for t in [0.0, 0.5, 1.0, 2.0, 3.0, 5.0] {
            let (phi, sf) = (normal_pdf(t), normal_survival(t));
            let closed = [
                (0, 2.0 * sf),
                (1, 2.0 * phi),
                (2, 2.0 * t * phi + 2.0 * sf),
                (4, 2.0 * (t * t * t + 3.0 * t) * phi + 6.0 * sf),
            ];
            for (k, want) in closed {
                let got = truncated_moment_oracle(k, t).unwrap();
                assert!((got - want).abs() < 1e-10, "k={k} t={t}: {got} vs {want}");
            }
        }
    }

    proptest! {
        #[test]
        fn exceedance_bounds(y in prop::collection::vec(0.0f64..30.0, 3..60), s in 0.01f64..0.99) {
            let p = y.len();
            let sm = summary(&y);
            let lam = lambda_p(s, p).unwrap();
            let t0 = threshold_statistic(&sm, TestFamily::Hc, s).unwrap();
            let t1 = threshold_statistic(&sm, TestFamily::L1, s).unwrap();
            let t2 = threshold_statistic(&sm, TestFamily::L2, s).unwrap();
            let slack = 1e-9 * (1.0 + t2);
            prop_assert!(t2 >= lam * t0 - slack);
            prop_assert!(t1 >= lam.sqrt() * t0 - slack);
            prop_assert!(t1 * t1 <= t0 * t2 + slack * (1.0 + t1));
        }

        #[test]
        fn monotone_in_level(y in prop::collection::vec(0.0f64..30.0, 3..60), s in 0.01f64..0.98, ds in 0.0f64..0.5) {
            let sm = summary(&y);
            let s2 = (s + ds).min(0.99);
            for fam in TestFamily::ALL {
                prop_assert!(threshold_statistic(&sm, fam, s2).unwrap() <= threshold_statistic(&sm, fam, s).unwrap());
            }
        }

        #[test]
        fn summary_invariants(vals in prop::collection::vec(-5.0f64..5.0, 6..40)) {
            let p = 2;
            let n = vals.len() / p;
            let x = SampleMatrix::new(vals[..n * p].to_vec(), n, p).unwrap();
            let s = marginal_summaries(&x);
            for j in 0..p {
                prop_assert!(s.y[j] >= 0.0);
                prop_assert!((s.y[j] - n as f64 * s.xbar[j] * s.xbar[j]).abs() <= 1e-15 * (1.0 + s.y[j]));
            }
        }
    }
}
