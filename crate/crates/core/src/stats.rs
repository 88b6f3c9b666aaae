//! Goodness-of-fit tests and tail estimators.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};

/// Outcome of one statistical gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub z_score: Option<f64>,
    /// Significance level the test was judged at (0.01 for a 99% gate).
    pub level: f64,
    pub passed: bool,
    pub sample_sizes: Vec<usize>,
    pub config_hash: String,
}

impl StatReport {
    fn from_p(name: &str, statistic: f64, p: f64, level: f64, sizes: Vec<usize>) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            p_value: Some(p),
            z_score: None,
            level,
            passed: p >= level,
            sample_sizes: sizes,
            config_hash: String::new(),
        }
    }

    pub fn with_hash(mut self, hash: &str) -> Self {
        self.config_hash = hash.to_string();
        self
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Small-x series converges faster in this form.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut s = 0.0;
        for k in 0..50 {
            let j = (2 * k + 1) as f64;
            s += (-j * j * c).exp();
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(invalid("samples", "contain NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<StatReport> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: samples.len() });
    }
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    let p = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
    Ok(StatReport::from_p("ks", d, p, level, vec![v.len()]))
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<StatReport> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: a.len().min(b.len()) });
    }
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let p = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    Ok(StatReport::from_p("ks2", d, p, level, vec![x.len(), y.len()]))
}

/// Pearson chi-square test of observed counts against expected counts.
/// Cells with zero expectation must have zero count.
pub fn chi_square(counts: &[u64], expected: &[f64], level: f64) -> Result<StatReport> {
    if counts.len() != expected.len() || counts.len() < 2 {
        return Err(invalid("counts", "need matching lengths of at least 2"));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &e) in counts.iter().zip(expected) {
        if e < 0.0 {
            return Err(invalid("expected", "must be nonnegative"));
        }
        if e == 0.0 {
            if c != 0 {
                return Ok(StatReport::from_p("chi_square", f64::INFINITY, 0.0, level, vec![counts.iter().sum::<u64>() as usize]));
            }
            continue;
        }
        cells += 1;
        let d = c as f64 - e;
        stat += d * d / e;
    }
    if cells < 2 {
        return Err(invalid("expected", "need at least two cells with positive expectation"));
    }
    let p = ChiSquared::new((cells - 1) as f64).map_err(|e| Error::Degenerate(e.to_string()))?.sf(stat);
    Ok(StatReport::from_p("chi_square", stat, p, level, vec![counts.iter().sum::<u64>() as usize]))
}

/// Hill estimate of the tail index from the `k` largest samples.
pub fn hill(samples: &[f64], k: usize) -> Result<f64> {
    if k < 1 || k >= samples.len() {
        return Err(invalid("k", format!("need 1 <= k < n = {}", samples.len())));
    }
    let mut v = sorted(samples)?;
    v.reverse();
    let threshold = v[k];
    if !(threshold > 0.0) {
        return Err(Error::Degenerate("the (k+1)th largest sample is not positive".into()));
    }
    let mean_log: f64 = v[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if mean_log <= 0.0 {
        return Err(Error::Degenerate("top order statistics are tied".into()));
    }
    Ok(1.0 / mean_log)
}

/// Percentile bootstrap interval for `stat` with 2000 resamples.
pub fn bootstrap_ci<R: RngCore + ?Sized>(
    stat: impl Fn(&[f64]) -> f64,
    samples: &[f64],
    level: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    const RESAMPLES: usize = 2000;
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: samples.len() });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid("level", "must be in (0, 1)"));
    }
    let n = samples.len();
    let mut buf = vec![0.0; n];
    let mut stats = Vec::with_capacity(RESAMPLES);
    for _ in 0..RESAMPLES {
        for b in buf.iter_mut() {
            *b = samples[(rng.next_u64() % n as u64) as usize];
        }
        stats.push(stat(&buf));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lo = stats[((alpha * RESAMPLES as f64) as usize).min(RESAMPLES - 1)];
    let hi = stats[(((1.0 - alpha) * RESAMPLES as f64) as usize).min(RESAMPLES - 1)];
    Ok((lo, hi))
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
