//! Detection boundaries, separation functions and regime classification for
//! the sparse alternative with `m = p^{1 - beta}` signals of size
//! `sqrt(2 r log p / n)`.
//!
//! The separation functions keep their slowly varying prefactors so that
//! finite-`p` ratios between the three families are exact.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stats::TestFamily;

/// Sparsity `beta` in `(1/2, 1)` and strength `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRegime {
    pub beta: f64,
    pub r: f64,
}

impl SignalRegime {
    pub fn new(beta: f64, r: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("signal strength r must be positive, got {r}")));
        }
        Ok(Self { beta, r })
    }
}

/// Asymptotic power ordering of the three tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerOrder {
    /// `r > 2 beta - 1`: HC <= L1 <= L2 with strict separation.
    Strict,
    /// `rho*(beta) < r <= 2 beta - 1`: all three are asymptotically equivalent.
    Equivalent,
    /// `r <= rho*(beta)`: no test separates the hypotheses.
    Undetectable,
}

impl PowerOrder {
    pub fn label(self) -> &'static str {
        match self {
            PowerOrder::Strict => "strict",
            PowerOrder::Equivalent => "equivalent",
            PowerOrder::Undetectable => "undetectable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeClassification {
    pub detectable: bool,
    pub power_order: PowerOrder,
    pub boundary_value: f64,
}

/// Region of the `(s, r, beta)` space used in the L2 detectability argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationCase {
    /// `s <= r`, `s <= beta`.
    One,
    /// `s <= r`, `s > beta`.
    Two,
    /// `s > r`, `s <= (sqrt s - sqrt r)^2 + beta`.
    Three,
    /// `s > r`, `s > (sqrt s - sqrt r)^2 + beta`.
    Four,
}

impl SeparationCase {
    pub fn number(self) -> u8 {
        match self {
            SeparationCase::One => 1,
            SeparationCase::Two => 2,
            SeparationCase::Three => 3,
            SeparationCase::Four => 4,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.5 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("sparsity beta must lie in (1/2, 1), got {beta}")))
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold level s must lie in (0, 1), got {s}")))
    }
}

fn check_not_pole(s: f64, r: f64) -> Result<()> {
    if s == r {
        Err(Error::Singularity(format!(
            "separation function is singular at s = r = {s}; offset s from r"
        )))
    } else {
        Ok(())
    }
}

fn case_of(s: f64, r: f64, beta: f64) -> SeparationCase {
    if s <= r {
        if s <= beta {
            SeparationCase::One
        } else {
            SeparationCase::Two
        }
    } else if s <= (s.sqrt() - r.sqrt()).powi(2) + beta {
        SeparationCase::Three
    } else {
        SeparationCase::Four
    }
}

/// Optimal detection boundary `rho*(beta)`.
pub fn detection_boundary(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(if beta <= 0.75 { beta - 0.5 } else { (1.0 - (1.0 - beta).sqrt()).powi(2) })
}

/// Boundary when only the leading null mean is used and `p = n^{1/theta}`.
pub fn restricted_boundary(beta: f64, theta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    if theta >= 1.0 || beta > 0.75 {
        return detection_boundary(beta);
    }
    if beta > (3.0 - theta) / 4.0 {
        return Ok(beta - 0.5);
    }
    let inner = 1.0 - beta - theta / 2.0;
    if inner < 0.0 {
        return Err(Error::Domain(format!(
            "1 - beta - theta/2 = {inner} is negative for beta = {beta}, theta = {theta}"
        )));
    }
    Ok(((1.0 - theta).sqrt() - inner.sqrt()).powi(2))
}

/// Standardized null-to-alternative mean shift `Delta_{gamma,0}(s; r, beta)`
/// at dimension `p`.
pub fn delta_gamma0(family: TestFamily, s: f64, r: f64, beta: f64, p: f64) -> Result<f64> {
    check_s(s)?;
    SignalRegime::new(beta, r)?;
    check_not_pole(s, r)?;
    let log_p = p.ln();
    if r > s {
        let base = (s * PI * log_p).powf(0.25) * p.powf(0.5 - beta + s / 2.0);
        let ratio = r / s;
        Ok(match family {
            TestFamily::Hc => base,
            TestFamily::L1 => base * ratio.powf(0.25),
            TestFamily::L2 => base * ratio,
        })
    } else {
        let gap = s.sqrt() - r.sqrt();
        let slow = s.powf(0.25) * (PI * log_p).powf(-0.25) / (2.0 * gap);
        Ok(slow * p.powf(0.5 - beta - gap * gap + s / 2.0))
    }
}

/// Separation `Delta_2(s; r, beta)` of the L2 statistic under the
/// alternative's standard deviation, by case.
pub fn delta2_separation(s: f64, r: f64, beta: f64, p: f64) -> Result<f64> {
    check_s(s)?;
    SignalRegime::new(beta, r)?;
    check_not_pole(s, r)?;
    let log_p = p.ln();
    let (rs, rr) = (s.sqrt(), r.sqrt());
    Ok(match case_of(s, r, beta) {
        SeparationCase::One => {
            let c1 = 2f64.sqrt() * (PI * s).powf(0.25) * (r / s) * log_p.powf(0.25);
            c1 * p.powf((1.0 + s - 2.0 * beta) / 2.0)
        }
        SeparationCase::Two => {
            let c2 = 0.5 * (r * log_p).sqrt();
            c2 * p.powf((1.0 - beta) / 2.0)
        }
        SeparationCase::Three => {
            let c3 = s.powf(0.25) * log_p.powf(-0.25) / (2f64.sqrt() * PI.powf(0.25) * (rs - rr));
            c3 * p.powf(0.5 - beta + r - (rs - 2.0 * rr).powi(2) / 2.0)
        }
        SeparationCase::Four => {
            let c4 = (2.0 * PI.sqrt() * (rs - rr)).powf(-0.5) * log_p.powf(-0.25);
            c4 * p.powf((1.0 - beta - (rs - rr).powi(2)) / 2.0)
        }
    })
}

/// Case of `(s, r, beta)` and whether `Delta_2` diverges there.
pub fn detectable_cases(s: f64, r: f64, beta: f64) -> (SeparationCase, bool) {
    let case = case_of(s, r, beta);
    let (rs, rr) = (s.sqrt(), r.sqrt());
    let detectable = match case {
        SeparationCase::One => s > 2.0 * beta - 1.0,
        SeparationCase::Two => true,
        SeparationCase::Three => {
            let d = 1.0 - 2.0 * beta + 2.0 * r;
            d > 0.0 && 2.0 * rr - d.sqrt() < rs && rs < 2.0 * rr + d.sqrt()
        }
        SeparationCase::Four => {
            let w = (1.0 - beta).sqrt();
            rr - w < rs && rs < rr + w
        }
    };
    (case, detectable)
}

/// Sub-intervals of `(0, 1)` on which `detectable_cases` reports divergence,
/// one per case that contributes. Intervals are returned as `(lo, hi)` and may
/// be open or closed at either end; their interiors are exactly detectable.
pub fn detectable_windows(r: f64, beta: f64) -> Vec<(SeparationCase, f64, f64)> {
    let mut out = Vec::new();
    let rr = r.sqrt();
    let mut push = |case, lo: f64, hi: f64| {
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        if lo < hi {
            out.push((case, lo, hi));
        }
    };
    // Case 1: 2 beta - 1 < s <= min(r, beta).
    push(SeparationCase::One, 2.0 * beta - 1.0, r.min(beta));
    // Case 2: beta < s <= r.
    push(SeparationCase::Two, beta, r);
    // Cases 3/4 split at sqrt s = (r + beta) / (2 sqrt r).
    let split = ((r + beta) / (2.0 * rr)).powi(2);
    let d = 1.0 - 2.0 * beta + 2.0 * r;
    if d > 0.0 {
        let lo = (2.0 * rr - d.sqrt()).max(0.0).powi(2);
        let hi = (2.0 * rr + d.sqrt()).powi(2);
        push(SeparationCase::Three, lo.max(r), hi.min(split));
    }
    let w = (1.0 - beta).sqrt();
    let lo = (rr - w).max(0.0).powi(2);
    let hi = (rr + w).powi(2);
    push(SeparationCase::Four, lo.max(r).max(split), hi);
    out
}

/// Power regime of `(r, beta)`.
pub fn classify_regime(r: f64, beta: f64) -> Result<RegimeClassification> {
    SignalRegime::new(beta, r)?;
    let boundary_value = detection_boundary(beta)?;
    let power_order = if r <= boundary_value {
        PowerOrder::Undetectable
    } else if r > 2.0 * beta - 1.0 {
        PowerOrder::Strict
    } else {
        PowerOrder::Equivalent
    };
    Ok(RegimeClassification {
        detectable: r > boundary_value,
        power_order,
        boundary_value,
    })
}
