use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bridge::Bridge;
use super::log::{GenealogyLog, Generation};
use super::partition::Partition;
use crate::error::{Error, Result};

/// Cumulative particle weights of one generation in label order.
///
/// `prefix[i]` is the total weight of the first `i` particles. Non-terminal
/// generations use running sums of `e^{mu x} sin(pi x/L) 1{x <= L}` divided
/// by their total; the terminal generation uses `i / M`. Either way the last
/// entry is exactly 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    prefix: Vec<f64>,
    terminal: bool,
}

impl Weights {
    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// Individual weights `w(i)`.
    pub fn weights(&self) -> Vec<f64> {
        self.prefix.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `max { I : w(1) + .. + w(I) <= y }`, which is 0 when `w(1) > y`.
    pub fn quantile_index(&self, y: f64) -> usize {
        self.prefix.partition_point(|&p| p <= y).saturating_sub(1)
    }
}

/// Weights of `gen` for drift `mu` and level `l`.
pub fn assign_weights(gen: &Generation, mu: f64, l: f64, terminal: bool) -> Result<Weights> {
    let m = gen.len();
    if m == 0 {
        return Err(Error::Degenerate(format!("empty generation at t = {}", gen.time)));
    }
    if terminal {
        let mf = m as f64;
        return Ok(Weights {
            prefix: (0..=m).map(|i| i as f64 / mf).collect(),
            terminal,
        });
    }
    let mut running = Vec::with_capacity(m + 1);
    running.push(0.0);
    let mut s = 0.0;
    for &x in &gen.positions {
        if x <= l {
            s += (mu * x).exp() * (PI * x / l).sin().max(0.0);
        }
        running.push(s);
    }
    if !(s > 0.0) {
        return Err(Error::Degenerate(format!("Z = 0 at t = {}", gen.time)));
    }
    Ok(Weights {
        prefix: running.into_iter().map(|r| r / s).collect(),
        terminal,
    })
}

/// Weights from prefix arrays built elsewhere (hand-built logs in tests).
pub fn weights_from_values(values: &[f64], terminal: bool) -> Result<Weights> {
    let total: f64 = values.iter().sum();
    if values.is_empty() || !(total > 0.0) || values.iter().any(|&v| v < 0.0) {
        return Err(Error::Degenerate("weights must be nonnegative with positive total".into()));
    }
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut s = 0.0;
    for &v in values {
        s += v;
        prefix.push(s / total);
    }
    Ok(Weights { prefix, terminal })
}

/// Smallest `r` with `r / m >= u`, computed with the same floating-point
/// quotient as the terminal prefix so the two never disagree.
pub fn terminal_rank(u: f64, m: usize) -> usize {
    let mf = m as f64;
    let mut r = ((u * mf).ceil() as usize).min(m);
    while r > 0 && (r - 1) as f64 / mf >= u {
        r -= 1;
    }
    while r < m && (r as f64) / mf < u {
        r += 1;
    }
    r
}

/// A genealogy log together with the weights of every generation.
#[derive(Clone, Debug)]
pub struct WeightedLog<'a> {
    log: &'a GenealogyLog,
    weights: Vec<Weights>,
    terminal: usize,
}

impl<'a> WeightedLog<'a> {
    /// The last generation is terminal.
    pub fn new(log: &'a GenealogyLog, mu: f64, l: f64) -> Result<Self> {
        if log.is_empty() {
            return Err(Error::Degenerate("empty genealogy log".into()));
        }
        Self::with_terminal(log, mu, l, log.len() - 1)
    }

    pub fn with_terminal(log: &'a GenealogyLog, mu: f64, l: f64, terminal: usize) -> Result<Self> {
        if terminal >= log.len() {
            return Err(Error::Domain(format!("terminal generation {terminal} out of range")));
        }
        let weights = log.generations[..=terminal]
            .iter()
            .enumerate()
            .map(|(j, g)| assign_weights(g, mu, l, j == terminal))
            .collect::<Result<_>>()?;
        Ok(Self { log, weights, terminal })
    }

    /// Uses explicit weights, one array per generation.
    pub fn from_weights(log: &'a GenealogyLog, weights: Vec<Weights>) -> Result<Self> {
        if weights.len() != log.len() || weights.iter().zip(&log.generations).any(|(w, g)| w.len() != g.len()) {
            return Err(Error::Domain("weights do not match the log".into()));
        }
        let terminal = log.len() - 1;
        Ok(Self { log, weights, terminal })
    }

    pub fn log(&self) -> &GenealogyLog {
        self.log
    }

    pub fn weights(&self, j: usize) -> &Weights {
        &self.weights[j]
    }

    pub fn terminal(&self) -> usize {
        self.terminal
    }

    /// For each particle of generation `k`, its ancestor in generation `j`.
    pub fn ancestor_map(&self, j: usize, k: usize) -> Result<Vec<u32>> {
        ancestor_map(self.log, j, k)
    }

    /// `D(l)`: number of generation-`k` particles descended from the first
    /// `l` particles of generation `j`, for `l = 0..=M_j`.
    pub fn descendant_counts(&self, j: usize, k: usize) -> Result<Vec<usize>> {
        let anc = self.ancestor_map(j, k)?;
        let mj = self.log.generations[j].len();
        Ok((0..=mj).map(|l| anc.partition_point(|&a| (a as usize) < l)).collect())
    }

    /// `B_{t_j, t_k}`: breakpoints at the cumulative weights of generation
    /// `j`, valued at the weight of their descendants in generation `k`.
    pub fn discrete_bridge(&self, j: usize, k: usize) -> Result<Bridge> {
        if j >= k || k > self.terminal {
            return Err(Error::Domain(format!("need j < k <= {}, got j = {j}, k = {k}", self.terminal)));
        }
        let d = self.descendant_counts(j, k)?;
        let pj = self.weights[j].prefix();
        let pk = self.weights[k].prefix();
        Bridge::step(d.iter().enumerate().map(|(l, &dl)| (pj[l], pk[dl])).collect())
    }

    /// Ancestral partition of the sample `floor`-ranked by `us` in the
    /// terminal generation, traced back to generation `j`.
    pub fn partition_for_uniforms(&self, j: usize, us: &[f64]) -> Result<Partition> {
        let m = self.log.generations[self.terminal].len();
        let sample: Vec<usize> = us.iter().map(|&u| terminal_rank(u, m).max(1) - 1).collect();
        ancestral_partition_at(self.log, &sample, self.terminal, j)
    }
}

/// For each particle of generation `k`, its ancestor in generation `j <= k`.
pub fn ancestor_map(log: &GenealogyLog, j: usize, k: usize) -> Result<Vec<u32>> {
    if j > k || k >= log.len() {
        return Err(Error::Domain(format!("cannot trace generation {k} back to {j}")));
    }
    let mut anc: Vec<u32> = (0..log.generations[k].len() as u32).collect();
    for g in (j + 1..=k).rev() {
        let parents = &log.generations[g].parents;
        for a in anc.iter_mut() {
            *a = parents[*a as usize];
        }
    }
    Ok(anc)
}

/// Partition of `sample` (indices in generation `from`) by common ancestor in generation `to`.
pub fn ancestral_partition_at(log: &GenealogyLog, sample: &[usize], from: usize, to: usize) -> Result<Partition> {
    if from >= log.len() || to > from {
        return Err(Error::Domain(format!("cannot trace generation {from} back to {to}")));
    }
    let size = log.generations[from].len();
    if let Some(&bad) = sample.iter().find(|&&i| i >= size) {
        return Err(Error::UnknownParticle { index: bad, size });
    }
    let anc = ancestor_map(log, to, from)?;
    let labels: Vec<u32> = sample.iter().map(|&i| anc[i]).collect();
    Ok(Partition::from_labels(&labels))
}

/// Partition of `sample` at checkpoint time `t` by common ancestor at `t - s_back`.
pub fn ancestral_partition(log: &GenealogyLog, sample: &[usize], t: f64, s_back: f64) -> Result<Partition> {
    let from = log.checkpoint_index(t)?;
    let to = log.checkpoint_index(t - s_back)?;
    ancestral_partition_at(log, sample, from, to)
}

/// Label path of particle `i` of generation `k`: its ancestor index at every earlier checkpoint.
pub fn label_path(log: &GenealogyLog, k: usize, i: usize) -> Result<Vec<u32>> {
    let mut path = vec![0u32; k + 1];
    let mut idx = i;
    if idx >= log.generations[k].len() {
        return Err(Error::UnknownParticle { index: i, size: log.generations[k].len() });
    }
    for g in (0..=k).rev() {
        path[g] = idx as u32;
        if g > 0 {
            idx = log.generations[g].parents[idx] as usize;
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        let w = weights_from_values(&[0.5, 0.3, 0.2], false).unwrap();
        assert_eq!(w.quantile_index(0.0), 0);
        assert_eq!(w.quantile_index(0.75), 1);
        assert_eq!(w.quantile_index(0.49), 0);
        assert_eq!(w.quantile_index(1.0), 3);
    }

    #[test]
    fn terminal_weights_are_uniform() {
        let g = Generation {
            time: 1.0,
            parents: vec![],
            positions: vec![0.5, 2.0, 3.0, 9.0],
            ids: None,
        };
        let w = assign_weights(&g, 1.0, 5.0, true).unwrap();
        assert_eq!(w.weights(), vec![0.25; 4]);
        let nt = assign_weights(&g, 1.0, 5.0, false).unwrap();
        assert_eq!(nt.prefix()[4], 1.0);
        assert_eq!(nt.weights()[3], 0.0);
        let beyond = Generation {
            positions: vec![6.0],
            ..g
        };
        assert!(assign_weights(&beyond, 1.0, 5.0, false).is_err());
    }

    #[test]
    fn terminal_rank_matches_prefix() {
        for m in [1usize, 3, 7, 10, 1000, 9999] {
            for i in 0..=200 {
                let u = i as f64 / 200.0;
                let r = terminal_rank(u, m);
                assert!(r as f64 / m as f64 >= u);
                assert!(r == 0 || ((r - 1) as f64 / m as f64) < u);
            }
        }
    }
}
