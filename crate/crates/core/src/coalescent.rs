//! Exact continuous-time samplers for Kingman and Bolthausen-Sznitman coalescents.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{merger_rates, LambdaMeasure};
use crate::error::{invalid, Result};
use crate::genealogy::Partition;
use crate::rng::{open01, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoalescentKind {
    Kingman,
    #[serde(alias = "bsz")]
    BolthausenSznitman,
}

impl CoalescentKind {
    pub fn measure(self) -> LambdaMeasure {
        match self {
            CoalescentKind::Kingman => LambdaMeasure::PointMassAtZero,
            CoalescentKind::BolthausenSznitman => LambdaMeasure::Uniform,
        }
    }
}

/// One merger: `blocks` are the smallest elements of the merged blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub time: f64,
    pub blocks: Vec<usize>,
}

impl MergeEvent {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }
}

/// A coalescent path up to its horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescentState {
    pub n: usize,
    pub horizon: f64,
    pub time: f64,
    pub partition: Partition,
    pub history: Vec<MergeEvent>,
}

impl CoalescentState {
    /// Partition at time `t`, replayed from the event history.
    pub fn partition_at(&self, t: f64) -> Partition {
        let mut label: Vec<usize> = (0..self.n).collect();
        for e in self.history.iter().take_while(|e| e.time <= t) {
            let target = e.blocks[0];
            for l in label.iter_mut() {
                if e.blocks[1..].contains(l) {
                    *l = target;
                }
            }
        }
        Partition::from_labels(&label)
    }

    pub fn block_count_at(&self, t: f64) -> usize {
        self.n - self.history.iter().take_while(|e| e.time <= t).map(|e| e.k() - 1).sum::<usize>()
    }
}

/// Aggregate rates `C(b, k) lambda_{b,k}`, cached per block count.
struct RateTable {
    kind: CoalescentKind,
    rows: Vec<Option<(Vec<f64>, f64)>>,
}

impl RateTable {
    fn new(kind: CoalescentKind, n: usize) -> Self {
        Self {
            kind,
            rows: vec![None; n + 1],
        }
    }

    fn row(&mut self, b: usize) -> &(Vec<f64>, f64) {
        let kind = self.kind;
        self.rows[b].get_or_insert_with(|| {
            let r = merger_rates(b, kind.measure());
            let total = r.iter().sum();
            (r, total)
        })
    }
}

/// Draws the size of the next merger from `b` blocks.
fn draw_k<R: RngCore + ?Sized>(rates: &[f64], total: f64, rng: &mut R) -> usize {
    let mut target = open01(rng) * total;
    for (i, &r) in rates.iter().enumerate() {
        if target < r {
            return i + 2;
        }
        target -= r;
    }
    // Rounding left a sliver; take the last positive rate.
    rates.iter().rposition(|&r| r > 0.0).unwrap_or(0) + 2
}

/// Uniform `k`-subset of `0..b` via a partial Fisher-Yates shuffle.
pub fn uniform_subset<R: RngCore + ?Sized>(b: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..b).collect();
    for i in 0..k {
        let j = i + (rng.next_u64() % (b - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

fn sample_with_table<R: RngCore + ?Sized>(
    n: usize,
    horizon: f64,
    table: &mut RateTable,
    rng: &mut R,
) -> CoalescentState {
    // Blocks are identified by their smallest element.
    let mut reps: Vec<usize> = (0..n).collect();
    let mut label: Vec<usize> = (0..n).collect();
    let mut history = Vec::new();
    let mut t = 0.0;
    while reps.len() > 1 {
        let b = reps.len();
        let (rates, total) = table.row(b);
        let wait = -open01(rng).ln() / total;
        if t + wait > horizon {
            break;
        }
        t += wait;
        let k = draw_k(rates, *total, rng);
        let chosen = uniform_subset(b, k, rng);
        let mut merged: Vec<usize> = chosen.iter().map(|&i| reps[i]).collect();
        merged.sort_unstable();
        let target = merged[0];
        for l in label.iter_mut() {
            if merged[1..].binary_search(l).is_ok() {
                *l = target;
            }
        }
        reps.retain(|r| merged[1..].binary_search(r).is_err());
        history.push(MergeEvent {
            time: t,
            blocks: merged,
        });
    }
    CoalescentState {
        n,
        horizon,
        time: horizon,
        partition: Partition::from_labels(&label),
        history,
    }
}

/// Gillespie path on `n` labels up to `horizon`.
pub fn sample_path<R: RngCore + ?Sized>(n: usize, horizon: f64, kind: CoalescentKind, rng: &mut R) -> Result<CoalescentState> {
    if n < 1 {
        return Err(invalid("n", "need at least one label"));
    }
    if !(horizon >= 0.0) {
        return Err(invalid("horizon", "must be nonnegative"));
    }
    let mut table = RateTable::new(kind, n);
    Ok(sample_with_table(n, horizon, &mut table, rng))
}

/// Monte Carlo summary of a coalescent at fixed times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub n: usize,
    pub times: Vec<f64>,
    pub replicates: usize,
    /// `block_counts[i][b]` = replicates with `b` blocks at `times[i]`.
    pub block_counts: Vec<Vec<u64>>,
    /// Fraction of replicates where labels 0 and 1 share a block at `times[i]`.
    pub pair_coalesced: Vec<f64>,
}

impl Marginals {
    pub fn mean_block_count(&self, i: usize) -> f64 {
        self.block_counts[i].iter().enumerate().map(|(b, &c)| b as f64 * c as f64).sum::<f64>()
            / self.replicates as f64
    }

    /// Empirical CDF of the block count at `times[i]`, indexed by block count.
    pub fn block_count_cdf(&self, i: usize) -> Vec<f64> {
        let mut acc = 0.0;
        self.block_counts[i]
            .iter()
            .map(|&c| {
                acc += c as f64 / self.replicates as f64;
                acc
            })
            .collect()
    }
}

/// Block-count and pair-coalescence marginals over `replicates` independent
/// paths; replicate `r` uses stream `StreamRng::replicate(seed, r)`.
pub fn finite_dim_marginal(n: usize, times: &[f64], kind: CoalescentKind, replicates: usize, seed: u64) -> Result<Marginals> {
    if n < 2 {
        return Err(invalid("n", "need at least two labels"));
    }
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("times", "must be nonnegative"));
    }
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let per_rep: Vec<(Vec<usize>, Vec<bool>)> = (0..replicates)
        .into_par_iter()
        .map_init(
            || RateTable::new(kind, n),
            |table, r| {
                let mut rng = StreamRng::replicate(seed, r as u64);
                let path = sample_with_table(n, horizon, table, &mut rng);
                let counts = times.iter().map(|&t| path.block_count_at(t)).collect();
                let pairs = times.iter().map(|&t| path.partition_at(t).same_block(0, 1)).collect();
                (counts, pairs)
            },
        )
        .collect();
    let mut block_counts = vec![vec![0u64; n + 1]; times.len()];
    let mut pair = vec![0u64; times.len()];
    for (counts, pairs) in &per_rep {
        for i in 0..times.len() {
            block_counts[i][counts[i]] += 1;
            pair[i] += pairs[i] as u64;
        }
    }
    Ok(Marginals {
        n,
        times: times.to_vec(),
        replicates,
        block_counts,
        pair_coalesced: pair.iter().map(|&p| p as f64 / replicates as f64).collect(),
    })
}

/// Size of the first merger among `b` blocks.
pub fn first_event_k<R: RngCore + ?Sized>(b: usize, kind: CoalescentKind, rng: &mut R) -> Result<usize> {
    if b < 2 {
        return Err(invalid("b", "need at least two blocks"));
    }
    let rates = merger_rates(b, kind.measure());
    let total = rates.iter().sum();
    Ok(draw_k(&rates, total, rng))
}
