//! Ensemble statistics: compensated sums, Monte Carlo reports with z-scores,
//! and the two-sample / goodness-of-fit tests used to compare path generators.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fmt;

/// Pass threshold for every Monte Carlo z-score.
pub const Z_THRESHOLD: f64 = 4.0;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = compensated_sum(xs.iter().copied()) / n as f64;
        let stderr = if n < 2 {
            f64::NAN
        } else {
            let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        };
        Self { mean, stderr, n }
    }
}

/// Unbiased sample variance with the delta-method standard error
/// `sqrt((m4 - s^4) / n)`.
pub fn variance_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
    let m4 = compensated_sum(xs.iter().map(|x| (x - mean).powi(4))) / n as f64;
    let stderr = ((m4 - var * var).max(0.0) / n as f64).sqrt();
    MeanEstimate {
        mean: var,
        stderr,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// An ensemble statistic compared against an oracle value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloReport {
    pub estimate: f64,
    pub oracle: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub n_paths: usize,
    pub verdict: Verdict,
}

impl MonteCarloReport {
    /// A zero standard error only passes when the estimate hits the oracle exactly.
    pub fn new(estimate: f64, oracle: f64, stderr: f64, n_paths: usize) -> Self {
        let diff = estimate - oracle;
        let z_score = if diff == 0.0 {
            0.0
        } else if stderr > 0.0 {
            diff / stderr
        } else {
            f64::INFINITY.copysign(diff)
        };
        let verdict = Verdict::from_bool(z_score.abs() < Z_THRESHOLD);
        Self {
            estimate,
            oracle,
            stderr,
            z_score,
            n_paths,
            verdict,
        }
    }

    pub fn from_mean(m: MeanEstimate, oracle: f64) -> Self {
        Self::new(m.mean, oracle, m.stderr, m.n)
    }

    /// Paired comparison of two per-path quantities sharing random numbers.
    /// The z-score is that of the mean difference.
    pub fn paired(lhs: &[f64], rhs: &[f64]) -> Self {
        assert_eq!(lhs.len(), rhs.len());
        let diffs: Vec<f64> = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
        let d = MeanEstimate::from_samples(&diffs);
        let l = MeanEstimate::from_samples(lhs);
        let r = MeanEstimate::from_samples(rhs);
        let z_score = if d.mean == 0.0 {
            0.0
        } else if d.stderr > 0.0 {
            d.mean / d.stderr
        } else {
            f64::INFINITY.copysign(d.mean)
        };
        Self {
            estimate: l.mean,
            oracle: r.mean,
            stderr: d.stderr,
            z_score,
            n_paths: lhs.len(),
            verdict: Verdict::from_bool(z_score.abs() < Z_THRESHOLD),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Asymptotic Kolmogorov tail probability `P(K > lambda)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> TestOutcome {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    TestOutcome {
        statistic: d,
        p_value: kolmogorov_tail((en + 0.12 + 0.11 / en) * d),
    }
}

/// 1% critical value of the one-sample KS statistic (asymptotic).
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestOutcome {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    TestOutcome {
        statistic: d,
        p_value: kolmogorov_tail((en + 0.12 + 0.11 / en) * d),
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Two-sample energy-distance test with a permutation p-value.
///
/// Cost is quadratic in the pooled sample size; callers subsample large ensembles.
pub fn energy_test(a: &[Vec<f64>], b: &[Vec<f64>], permutations: usize, seed: u64) -> TestOutcome {
    let pooled: Vec<&[f64]> = a.iter().chain(b).map(|v| v.as_slice()).collect();
    let n = pooled.len();
    let (na, nb) = (a.len(), b.len());
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclid(pooled[i], pooled[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let total: f64 = (0..n)
        .map(|i| dist[i * n + i + 1..i * n + n].iter().sum::<f64>())
        .sum();

    let statistic_for = |in_a: &[bool]| -> f64 {
        let mut within_a = 0.0;
        let mut within_b = 0.0;
        for i in 0..n {
            let row = &dist[i * n..i * n + n];
            for j in (i + 1)..n {
                match (in_a[i], in_a[j]) {
                    (true, true) => within_a += row[j],
                    (false, false) => within_b += row[j],
                    _ => {}
                }
            }
        }
        let cross = total - within_a - within_b;
        let e = 2.0 * cross / (na * nb) as f64
            - 2.0 * within_a / (na * na) as f64
            - 2.0 * within_b / (nb * nb) as f64;
        (na * nb) as f64 / n as f64 * e
    };

    let mut labels: Vec<bool> = (0..n).map(|i| i < na).collect();
    let observed = statistic_for(&labels);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..permutations {
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            labels.swap(i, j);
        }
        if statistic_for(&labels) >= observed {
            exceed += 1;
        }
    }
    TestOutcome {
        statistic: observed,
        p_value: (exceed + 1) as f64 / (permutations + 1) as f64,
    }
}
