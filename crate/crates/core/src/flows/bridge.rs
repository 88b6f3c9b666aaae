use rand::RngCore;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::stable::ln_s_increment;
use crate::analytics::CsbpParams;
use crate::error::{invalid, Result};
use crate::genealogy::{partition_from_bridge, Bridge, Partition};
use crate::rng::open01;

pub const DEFAULT_GAP_COUNT: usize = 4096;

/// A sampled `B_{s,t}` together with its ranked gaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowBridge {
    pub bridge: Bridge,
    /// Normalized jump sizes, largest first.
    pub gaps: Vec<f64>,
    /// Mass of the untracked jumps, carried as linear drift. Equals
    /// `1 - sum(gaps)`.
    pub residual: f64,
    pub alpha: f64,
    /// `ln S^{(0,s)}(z0)`, the mass the bridge was built on.
    pub ln_mass_s: f64,
}

impl FlowBridge {
    pub fn largest_gap(&self) -> f64 {
        self.gaps.first().copied().unwrap_or(0.0)
    }
}

/// The `j` largest normalized jumps of an `alpha`-stable subordinator on a
/// unit interval, largest first, plus the residual mass.
///
/// Jumps are `Gamma_i^{-1/alpha}` for the arrival times of a unit Poisson
/// process; the tail beyond `Gamma_j` is replaced by its conditional mean
/// `alpha/(1-alpha) Gamma_j^{1-1/alpha}`. Everything is normalized against
/// the largest jump so tiny indices do not underflow.
pub fn ranked_stable_gaps<R: RngCore + ?Sized>(alpha: f64, j: usize, rng: &mut R) -> Result<(Vec<f64>, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if j == 0 {
        return Err(invalid("gap_count", "must be at least 1"));
    }
    let mut gamma = 0.0;
    let mut ln_gamma = Vec::with_capacity(j);
    for _ in 0..j {
        gamma += -open01(rng).ln();
        ln_gamma.push(gamma.ln());
    }
    let top = ln_gamma[0];
    let mut rel: Vec<f64> = ln_gamma.iter().map(|lg| (-(lg - top) / alpha).exp()).collect();
    let last = ln_gamma[j - 1];
    let tail = (alpha / (1.0 - alpha)).ln() + last - (last - top) / alpha;
    let tail = tail.exp();
    let total: f64 = rel.iter().sum::<f64>() + tail;
    for g in &mut rel {
        *g /= total;
    }
    let residual = (1.0 - rel.iter().sum::<f64>()).max(0.0);
    Ok((rel, residual))
}

/// `B_{s,t}(x) = S^{(s,t)}(x S^{(0,s)}(z0)) / S^{(0,t)}(z0)`, keeping the
/// `j` largest jumps at independent uniform positions.
pub fn bridge_from_flow<R: RngCore + ?Sized>(
    s: f64,
    t: f64,
    z0: f64,
    params: &CsbpParams,
    j: usize,
    rng: &mut R,
) -> Result<FlowBridge> {
    if !(s >= 0.0 && t >= s) {
        return Err(invalid("s, t", format!("need 0 <= s <= t, got s = {s}, t = {t}")));
    }
    if !(z0 > 0.0) {
        return Err(invalid("z0", "must be positive"));
    }
    let ln_mass_s = ln_s_increment(s, z0.ln(), params, rng)?;
    let alpha = params.stable_index(t - s);
    if alpha == 1.0 {
        return Ok(FlowBridge {
            bridge: Bridge::identity(),
            gaps: Vec::new(),
            residual: 1.0,
            alpha,
            ln_mass_s,
        });
    }
    if alpha <= 0.0 {
        return Err(invalid("t - s", "stable index underflows"));
    }
    let (gaps, residual) = ranked_stable_gaps(alpha, j, rng)?;
    let mut located: Vec<(f64, f64)> = gaps.iter().map(|&g| (open01(rng), g)).collect();
    located.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    let mut pts = Vec::with_capacity(located.len() + 1);
    for (x, g) in located {
        cum += g;
        pts.push((x, cum.min(1.0)));
    }
    pts.push((1.0, (1.0 - residual).max(cum.min(1.0))));
    Ok(FlowBridge {
        bridge: Bridge::with_drift(residual, pts)?,
        gaps,
        residual,
        alpha,
        ln_mass_s,
    })
}

/// Poisson-Dirichlet(alpha, 0) weights in size-biased order by stick
/// breaking with `V_i ~ Beta(1 - alpha, i alpha)`.
pub fn pd_stick_breaking<R: RngCore + ?Sized>(alpha: f64, sticks: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let mut rest = 1.0;
    let mut out = Vec::with_capacity(sticks);
    for i in 1..=sticks {
        let beta = Beta::new(1.0 - alpha, i as f64 * alpha).map_err(|e| invalid("alpha", e.to_string()))?;
        let v = beta.sample(rng);
        out.push(rest * v);
        rest *= 1.0 - v;
    }
    Ok(out)
}

/// Partitions of `n` individuals sampled at time `t`, at the coalescent
/// times `taus`, read off a chain of independent flow bridges.
///
/// Coalescent time `tau` maps to flow time `tau / clock_rate` before `t`.
/// Composing inverse bridges keeps the path nested.
pub fn bsz_partitions_from_flow<R: RngCore + ?Sized>(
    t: f64,
    n: usize,
    taus: &[f64],
    params: &CsbpParams,
    clock_rate: f64,
    j: usize,
    rng: &mut R,
) -> Result<Vec<Partition>> {
    if !(clock_rate > 0.0) {
        return Err(invalid("clock_rate", "must be positive"));
    }
    if taus.iter().any(|&x| !(x >= 0.0)) || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be sorted and nonnegative"));
    }
    if let Some(&last) = taus.last() {
        if last / clock_rate > t {
            return Err(invalid("times", "reach back past time zero"));
        }
    }
    let mut v: Vec<f64> = (0..n).map(|_| open01(rng)).collect();
    let mut back = 0.0;
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let delta = tau / clock_rate;
        if delta > back {
            let fb = bridge_from_flow((t - delta).max(0.0), t - back, 1.0, params, j, rng)?;
            for x in &mut v {
                *x = fb.bridge.inverse(*x);
            }
            back = delta;
        }
        out.push(Partition::from_labels(&v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()));
    }
    Ok(out)
}

/// One-shot partition for a single bridge.
pub fn partition_from_flow_bridge(fb: &FlowBridge, us: &[f64]) -> Partition {
    partition_from_bridge(&fb.bridge, us)
}
