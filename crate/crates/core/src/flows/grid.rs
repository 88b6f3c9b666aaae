use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::stable::ln_s_increment;
use crate::analytics::CsbpParams;
use crate::error::{invalid, Result};

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`.
fn ln_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// The flow `x -> S^{(t_0, t_i)}(x)` sampled jointly at a set of marks.
///
/// Row `i` holds `ln S^{(t_0, t_i)}(x_m)`. Each step evaluates the next
/// subordinator at the images of the marks by sampling its independent
/// increments, so rows are nondecreasing in `m` and compose exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowGrid {
    pub times: Vec<f64>,
    pub marks: Vec<f64>,
    pub ln_values: Vec<Vec<f64>>,
}

impl FlowGrid {
    pub fn sample<R: RngCore + ?Sized>(times: &[f64], marks: &[f64], params: &CsbpParams, rng: &mut R) -> Result<Self> {
        if times.is_empty() || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("times", "must be nonempty and sorted"));
        }
        if marks.windows(2).any(|w| w[1] < w[0]) || marks.iter().any(|&x| !(x >= 0.0)) {
            return Err(invalid("marks", "must be sorted and nonnegative"));
        }
        let mut rows = vec![marks.iter().map(|x| x.ln()).collect::<Vec<f64>>()];
        for w in times.windows(2) {
            let dt = w[1] - w[0];
            let prev = rows.last().expect("at least one row");
            let mut next = Vec::with_capacity(prev.len());
            let mut acc = f64::NEG_INFINITY;
            let mut below = f64::NEG_INFINITY;
            for &y in prev {
                let gap = ln_sub(y, below);
                acc = ln_add(acc, ln_s_increment(dt, gap, params, rng)?);
                below = y;
                next.push(acc);
            }
            rows.push(next);
        }
        Ok(Self {
            times: times.to_vec(),
            marks: marks.to_vec(),
            ln_values: rows,
        })
    }

    /// `ln S^{(t_0, t_i)}(x_m)`.
    pub fn ln_value(&self, i: usize, m: usize) -> f64 {
        self.ln_values[i][m]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn rows_are_monotone() {
        let p = CsbpParams::new(0.0, 1.0).unwrap();
        let mut rng = StreamRng::new(4, 0);
        let g = FlowGrid::sample(&[0.0, 0.3, 0.7, 1.5], &[0.0, 0.1, 0.5, 1.0, 2.0], &p, &mut rng).unwrap();
        for row in &g.ln_values {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(row[0], f64::NEG_INFINITY);
        }
        assert!((g.ln_value(0, 4) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_helpers() {
        assert!((ln_add(1f64.ln(), 2f64.ln()) - 3f64.ln()).abs() < 1e-15);
        assert!((ln_sub(5f64.ln(), 2f64.ln()) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(ln_sub(1.0, 1.0), f64::NEG_INFINITY);
    }
}
