use serde::{Deserialize, Serialize};

use super::partition::Partition;
use crate::error::{invalid, Result};

/// Nondecreasing right-continuous map `[0, 1] -> [0, 1]` of the form
/// `B(y) = drift * y + S(y)`, where `S` is the pure-jump part stored as
/// breakpoints `(x, S(x))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    drift: f64,
    breakpoints: Vec<(f64, f64)>,
}

impl Bridge {
    pub fn identity() -> Self {
        Self {
            drift: 1.0,
            breakpoints: Vec::new(),
        }
    }

    /// A pure step function through `breakpoints`, which must be sorted in `x`
    /// with nondecreasing values ending at `(x_last, 1)`. Entries with equal
    /// `x` collapse onto the last one.
    pub fn step(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        Self::with_drift(0.0, breakpoints)
    }

    pub fn with_drift(drift: f64, breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if !(0.0..=1.0).contains(&drift) {
            return Err(invalid("drift", format!("{drift} outside [0, 1]")));
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(breakpoints.len());
        for (x, v) in breakpoints {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&v) {
                return Err(invalid("breakpoints", format!("({x}, {v}) outside the unit square")));
            }
            if let Some(last) = pts.last_mut() {
                if x < last.0 || v < last.1 {
                    return Err(invalid("breakpoints", "must be sorted and nondecreasing"));
                }
                if x == last.0 {
                    *last = (x, v);
                    continue;
                }
            }
            pts.push((x, v));
        }
        let b = Self {
            drift,
            breakpoints: pts,
        };
        let end = b.eval(1.0);
        if (end - 1.0).abs() > 1e-9 {
            return Err(invalid("breakpoints", format!("B(1) = {end}, expected 1")));
        }
        Ok(b)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Jump sizes in breakpoint order (zero jumps omitted).
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut prev = 0.0;
        let mut out = Vec::new();
        for &(x, v) in &self.breakpoints {
            if v > prev {
                out.push((x, v - prev));
            }
            prev = v;
        }
        out
    }

    fn jump_part(&self, y: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&(x, _)| x <= y);
        if idx == 0 {
            0.0
        } else {
            self.breakpoints[idx - 1].1
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        if self.drift == 0.0 {
            self.jump_part(y)
        } else {
            self.drift * y + self.jump_part(y)
        }
    }

    /// `inf { s : B(s) >= u }`, with `0` for `u <= 0` and `1` when no such `s` exists.
    pub fn inverse(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let d = self.drift;
        let at = |i: usize| {
            let (x, v) = self.breakpoints[i];
            if d == 0.0 {
                v
            } else {
                d * x + v
            }
        };
        let j = {
            let (mut lo, mut hi) = (0usize, self.breakpoints.len());
            while lo < hi {
                let mid = (lo + hi) / 2;
                if at(mid) >= u {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        };
        if d > 0.0 {
            let (left_x, left_v) = if j == 0 { (0.0, 0.0) } else { self.breakpoints[j - 1] };
            let s = ((u - left_v) / d).max(left_x);
            let right = self.breakpoints.get(j).map_or(1.0, |p| p.0);
            return if s < right { s } else { right.min(1.0) };
        }
        self.breakpoints.get(j).map_or(1.0, |p| p.0)
    }
}

/// `i ~ j` iff `B^{-1}(U_i) = B^{-1}(U_j)` exactly.
pub fn partition_from_bridge(b: &Bridge, us: &[f64]) -> Partition {
    let labels: Vec<u64> = us.iter().map(|&u| b.inverse(u).to_bits()).collect();
    Partition::from_labels(&labels)
}
