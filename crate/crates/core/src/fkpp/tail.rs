use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::hill;

pub const MIN_TAIL_SAMPLES: usize = 10_000;
/// Number of log-spaced `k` values in the Hill sweep.
pub const HILL_SWEEP_POINTS: usize = 10;
/// Width of the band (`max - min`) a run of Hill values must fit in to count
/// as a plateau.
pub const PLATEAU_BAND: f64 = 0.2;
pub const PLATEAU_MIN_RUN: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    /// Indices into the sweep, inclusive.
    pub first: usize,
    pub last: usize,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    pub ks: Vec<usize>,
    pub hill: Vec<f64>,
    pub plateau: Option<Plateau>,
    /// `(x, x P(W > x))` with the empirical survival function.
    pub survival: Vec<(f64, f64)>,
}

impl TailReport {
    pub fn heavy_tailed(&self) -> bool {
        self.plateau.is_some()
    }
}

/// Log-spaced `k` from `n/200` to `n/20`.
pub fn hill_sweep(n: usize) -> Vec<usize> {
    let lo = (n / 200).max(1) as f64;
    let hi = (n / 20).max(2) as f64;
    let mut ks: Vec<usize> = (0..HILL_SWEEP_POINTS)
        .map(|i| (lo * (hi / lo).powf(i as f64 / (HILL_SWEEP_POINTS - 1) as f64)).round() as usize)
        .collect();
    ks.dedup();
    ks
}

/// Longest run of consecutive sweep values fitting in a band of width
/// [`PLATEAU_BAND`]; `None` if shorter than [`PLATEAU_MIN_RUN`].
pub fn find_plateau(values: &[f64]) -> Option<Plateau> {
    let mut best: Option<(usize, usize)> = None;
    for first in 0..values.len() {
        let (mut lo, mut hi) = (values[first], values[first]);
        let mut last = first;
        for (j, &v) in values.iter().enumerate().skip(first + 1) {
            lo = lo.min(v);
            hi = hi.max(v);
            if hi - lo > PLATEAU_BAND {
                break;
            }
            last = j;
        }
        if best.map_or(true, |(f, l)| last - first > l - f) {
            best = Some((first, last));
        }
    }
    let (first, last) = best?;
    if last - first + 1 < PLATEAU_MIN_RUN {
        return None;
    }
    let run = &values[first..=last];
    Some(Plateau {
        first,
        last,
        mean: run.iter().sum::<f64>() / run.len() as f64,
    })
}

/// Hill sweep, plateau detection and `x P(W > x)` at each of `xs`.
pub fn tail_analysis(samples: &[f64], xs: &[f64]) -> Result<TailReport> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_TAIL_SAMPLES,
            got: samples.len(),
        });
    }
    let ks = hill_sweep(samples.len());
    let hills = ks.iter().map(|&k| hill(samples, k)).collect::<Result<Vec<f64>>>()?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let survival = xs
        .iter()
        .map(|&x| {
            let above = sorted.len() - sorted.partition_point(|&s| s <= x);
            (x, x * above as f64 / n)
        })
        .collect();
    Ok(TailReport {
        n: samples.len(),
        plateau: find_plateau(&hills),
        ks,
        hill: hills,
        survival,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_bounds() {
        let ks = hill_sweep(100_000);
        assert_eq!(ks.first(), Some(&500));
        assert_eq!(ks.last(), Some(&5000));
    }

    #[test]
    fn plateau_on_flat_and_none_on_ramp() {
        let flat = [1.3, 1.02, 0.98, 1.05, 1.0, 1.4];
        let p = find_plateau(&flat).unwrap();
        assert_eq!((p.first, p.last), (1, 4));
        let ramp: Vec<f64> = (0..10).map(|i| 5.0 - 0.25 * i as f64).collect();
        assert!(find_plateau(&ramp).is_none());
    }

    #[test]
    fn too_few_samples() {
        assert!(tail_analysis(&[1.0; 100], &[1.0]).is_err());
    }
}
