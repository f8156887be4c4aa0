//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use maxthresh::calibration::{candidate_grid, gumbel_norming, maximal_statistics, null_moments};
use maxthresh::simulation::{
    calibration_maxima, generate_noise, mc_calibrate_all, plant_signals, rejection_estimates,
    replicate_maxima, substream, upper_quantile, AlternativeSpec, Calibration, Maxima,
    ScenarioConfig, StreamRole,
};
use maxthresh::stats::{gumbel_cdf, marginal_summaries, truncated_moment_oracle, MarginalSummary, TestFamily};
use maxthresh::theory::{
    delta_gamma0, detectable_cases, detectable_windows, detection_boundary,
};

const SEED: u64 = 7_340_021;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> (Outcome, Duration, bool) {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    (o, elapsed, elapsed <= limit)
}

fn moment_identities() -> Outcome {
    let p = 1_000_000usize;
    let two_log_p = 2.0 * (p as f64).ln();
    let mut levels: Vec<f64> = (1..=5).map(|t| (t * t) as f64 / two_log_p).collect();
    levels.extend((1..=19).map(|i| i as f64 * 0.05));
    let mut worst: f64 = 0.0;
    for s in levels {
        let t = (s * two_log_p).sqrt();
        let m = null_moments(TestFamily::L2, s, p).unwrap();
        let mean = p as f64 * truncated_moment_oracle(2, t).unwrap();
        let var = p as f64 * truncated_moment_oracle(4, t).unwrap();
        worst = worst.max(rel(m.mean, mean)).max(rel(m.sd * m.sd, var));
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.3e}"))
}

fn ratio_identities() -> Outcome {
    let mut rng = substream(SEED, "ratios", 0, StreamRole::Noise);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 10_000 {
        let beta = rng.random_range(0.51..0.99);
        let r = rng.random_range(0.02..1.0);
        let s = rng.random_range(0.01..1.0) * r;
        if r - s < 1e-6 {
            continue;
        }
        let p = 10f64.powf(rng.random_range(2.0..8.0));
        let d0 = delta_gamma0(TestFamily::Hc, s, r, beta, p).unwrap();
        let d1 = delta_gamma0(TestFamily::L1, s, r, beta, p).unwrap();
        let d2 = delta_gamma0(TestFamily::L2, s, r, beta, p).unwrap();
        worst = worst
            .max(rel(d2 / d1, (r / s).powf(0.75)))
            .max(rel(d1 / d0, (r / s).powf(0.25)));
        count += 1;
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.3e} over {count} tuples"))
}

fn boundary_fidelity() -> Outcome {
    let exact = [(0.6, 0.1), (0.75, 0.25), (0.84, 0.36)];
    let mut worst: f64 = 0.0;
    for (beta, want) in exact {
        worst = worst.max((detection_boundary(beta).unwrap() - want).abs());
    }
    let dense: Vec<f64> = (1..2000).map(|i| i as f64 / 2000.0).collect();
    let mut disagreements = 0;
    for i in 0..200 {
        let beta = 0.5 + (i as f64 + 0.5) * 0.0025;
        let rho = detection_boundary(beta).unwrap();
        for j in 0..200 {
            let r = (j as f64 + 0.5) * 0.006;
            let mut levels = dense.clone();
            levels.extend(detectable_windows(r, beta).iter().map(|(_, lo, hi)| 0.5 * (lo + hi)));
            let any = levels.iter().any(|&s| s != r && detectable_cases(s, r, beta).1);
            if any != (r > rho) {
                disagreements += 1;
            }
        }
    }
    outcome(
        worst <= 1e-15 && disagreements == 0,
        format!("boundary error {worst:.1e}, {disagreements} disagreements on 200x200"),
    )
}

fn random_summary(k: u64) -> MarginalSummary {
    let mut rng = substream(SEED, "grid-max", k, StreamRole::Noise);
    let p = rng.random_range(50..=2000usize);
    let n = rng.random_range(10..=100usize);
    let rho = rng.random_range(0.0..0.6);
    let x = generate_noise(p, n, rho, &mut rng).unwrap();
    let x = if k % 2 == 1 {
        let beta = rng.random_range(0.55..0.9);
        let r = rng.random_range(0.1..1.5);
        let spec = AlternativeSpec::draw(p, n, beta, r, &mut rng).unwrap();
        plant_signals(&x, &spec).unwrap()
    } else {
        x
    };
    marginal_summaries(&x)
}

/// Standardized statistics at level `s` computed from a descending sort.
fn dense_value(sorted_desc: &[f64], prefix: &[[f64; 3]], two_log_p: f64, p: usize, s: f64) -> [f64; 3] {
    let k = sorted_desc.partition_point(|&y| y / two_log_p >= s);
    let mut out = [0.0; 3];
    for family in TestFamily::ALL {
        let g = family.gamma() as usize;
        let m = null_moments(family, s, p).unwrap();
        out[g] = (prefix[k][g] - m.mean) / m.sd;
    }
    out
}

fn grid_maximization() -> Outcome {
    let eta = 0.05;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..500 {
        let summary = random_summary(k);
        let p = summary.p;
        let two_log_p = 2.0 * (p as f64).ln();
        let exact = maximal_statistics(&summary, eta).unwrap();
        let grid = candidate_grid(&summary, eta).unwrap();
        let lo = grid[0];
        let hi = 1.0 - eta;
        let mut sorted = summary.y.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = vec![[0.0; 3]; p + 1];
        for (i, &y) in sorted.iter().enumerate() {
            prefix[i + 1] = [prefix[i][0] + 1.0, prefix[i][1] + y.sqrt(), prefix[i][2] + y];
        }
        let mut dense_max = [f64::NEG_INFINITY; 3];
        for i in 0..10_000 {
            let s = lo + (hi - lo) * i as f64 / 9_999.0;
            let v = dense_value(&sorted, &prefix, two_log_p, p, s);
            for g in 0..3 {
                dense_max[g] = dense_max[g].max(v[g]);
            }
        }
        for g in 0..3 {
            worst = worst.max(dense_max[g] - exact[g].0);
        }
    }
    outcome(worst <= 1e-9, format!("max(dense - candidate) = {worst:.3e}"))
}

fn null_scenario(rho: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::null(500, 100, rho);
    cfg.master_seed = SEED;
    cfg.null_reps = 10_000;
    cfg
}

fn null_calibration() -> Outcome {
    let alpha: f64 = 0.05;
    let band = 3.0 * (alpha * (1.0 - alpha) / 1e4).sqrt();
    let mut pass = true;
    let mut detail = Vec::new();
    for rho in [0.3, 0.5] {
        let mut cfg = null_scenario(rho);
        cfg.reps = 10_000;
        let critical = mc_calibrate_all(&cfg, cfg.null_reps).unwrap();
        let maxima = replicate_maxima(&cfg, cfg.reps).unwrap();
        for e in rejection_estimates(&maxima, critical, Calibration::McAdjusted) {
            pass &= (e.rejection_rate - alpha).abs() <= band;
            detail.push(format!("rho={rho} {}={:.4}", e.family, e.rejection_rate));
        }
    }
    outcome(pass, format!("{} (band ±{band:.4})", detail.join(" ")))
}

fn alternative_maxima(rho: f64, beta: f64, r: f64) -> Vec<Maxima> {
    let mut cfg = null_scenario(rho).with_signal(beta, r);
    cfg.reps = 4000;
    replicate_maxima(&cfg, cfg.reps).unwrap()
}

fn power_ordering() -> Outcome {
    let critical = mc_calibrate_all(&null_scenario(0.3), 10_000).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for r in [1.1, 1.2] {
        let maxima = alternative_maxima(0.3, 0.8, r);
        let [hc, l1, l2] = rejection_estimates(&maxima, critical, Calibration::McAdjusted);
        let (mut b, mut c) = (0.0f64, 0.0f64);
        for m in &maxima {
            let (rej2, rej0) = (m[2] > critical[2], m[0] > critical[0]);
            if rej2 && !rej0 {
                b += 1.0;
            }
            if rej0 && !rej2 {
                c += 1.0;
            }
        }
        let z = if b + c > 0.0 { (b - c) / (b + c).sqrt() } else { 0.0 };
        let ok = l2.rejection_rate >= l1.rejection_rate - 2.0 * l2.mc_standard_error.max(l1.mc_standard_error)
            && l1.rejection_rate >= hc.rejection_rate - 2.0 * l1.mc_standard_error.max(hc.mc_standard_error)
            && z > 2.326;
        pass &= ok;
        detail.push(format!(
            "r={r}: hc={:.4} l1={:.4} l2={:.4} z={z:.2}",
            hc.rejection_rate, l1.rejection_rate, l2.rejection_rate
        ));
    }
    outcome(pass, detail.join("; "))
}

fn below_boundary_flatness() -> Outcome {
    let alpha: f64 = 0.05;
    let critical = mc_calibrate_all(&null_scenario(0.3), 10_000).unwrap();
    let maxima = alternative_maxima(0.3, 0.8, 0.1);
    let est = rejection_estimates(&maxima, critical, Calibration::McAdjusted);
    let rates: Vec<f64> = est.iter().map(|e| e.rejection_rate).collect();
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = lo >= alpha - 0.02 && hi <= alpha + 0.10 && hi - lo <= 0.03;
    outcome(pass, format!("hc={:.4} l1={:.4} l2={:.4}", rates[0], rates[1], rates[2]))
}

fn dependence_insensitivity() -> Outcome {
    let mut est = Vec::new();
    for rho in [0.3, 0.5] {
        let critical = mc_calibrate_all(&null_scenario(rho), 10_000).unwrap();
        let maxima = alternative_maxima(rho, 0.7, 0.9);
        est.push(rejection_estimates(&maxima, critical, Calibration::McAdjusted));
    }
    let mut pass = true;
    let mut detail = Vec::new();
    for g in 0..3 {
        let (a, b) = (est[0][g], est[1][g]);
        let se = a.mc_standard_error.max(b.mc_standard_error);
        let diff = (a.rejection_rate - b.rejection_rate).abs();
        pass &= diff <= 0.05 + 2.0 * se;
        detail.push(format!("{}: {:.4} vs {:.4}", a.family, a.rejection_rate, b.rejection_rate));
    }
    outcome(pass, detail.join("; "))
}

fn gumbel_limit() -> Outcome {
    let mut cfg = ScenarioConfig::null(20_000, 100, 0.0);
    cfg.master_seed = SEED;
    let norming = gumbel_norming(cfg.p, cfg.eta).unwrap();
    let maxima = calibration_maxima(&cfg, 2000).unwrap();
    let mut x: Vec<f64> = maxima.iter().map(|m| norming.normalize(m[2])).collect();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = gumbel_cdf(v);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    let median = upper_quantile(&x, 0.5);
    outcome(d <= 0.15, format!("KS distance {d:.4}, median {median:.3}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_maxthresh");
    let mut outputs = Vec::new();
    for workers in ["1", "2", "4"] {
        let out = dir.path().join(format!("w{workers}.csv"));
        let status = Command::new(bin)
            .args([
                "simulate", "--p", "300", "--n", "40", "--rho", "0.3,0.5", "--beta", "0.7",
                "--r", "0.5,1.1", "--reps", "300", "--null-reps", "1000", "--seed", "99",
                "--workers", workers, "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("simulate exited with {status}"));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("{} bytes per run, identical for workers 1, 2, 4", outputs[0].len()))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 10] = [
        (1, "moment identities", Duration::from_secs(1), moment_identities),
        (2, "ratio identities", Duration::from_secs(1), ratio_identities),
        (3, "boundary fidelity", Duration::from_secs(10), boundary_fidelity),
        (4, "grid maximization", Duration::from_secs(120), grid_maximization),
        (5, "null calibration", Duration::from_secs(600), null_calibration),
        (6, "power ordering", Duration::from_secs(900), power_ordering),
        (7, "below-boundary flatness", Duration::from_secs(600), below_boundary_flatness),
        (8, "dependence insensitivity", Duration::from_secs(600), dependence_insensitivity),
        (9, "gumbel limit", Duration::from_secs(1800), gumbel_limit),
        (10, "determinism", Duration::from_secs(300), determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|k| name.contains(k.as_str()) || *k == id.to_string()) {
            continue;
        }
        let (o, elapsed, in_time) = timed(limit, f);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {:<4} {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
