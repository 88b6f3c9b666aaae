//! Desk-scale probes of the large-N limit theorems: pair coalescence times,
//! the population-size link, and multiple mergers in sampled genealogies.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{derive_params, ModelParams};
use crate::coalescent::{finite_dim_marginal, uniform_subset, CoalescentKind};
use crate::engine::{run, GenealogyDetail, InitialCondition, RightBarrier, RunStatus, SimConfig};
use crate::error::{invalid, Result};
use crate::genealogy::Partition;
use crate::rng::{child_key, streams, StreamRng};

/// Run shape shared by the genealogy experiments, in units of `(log N)^3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub horizon_scaled: f64,
    pub spacing_scaled: f64,
    /// The run aborts once the population exceeds `cap_factor * N`.
    pub cap_factor: usize,
    pub parallel: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            horizon_scaled: 5.0,
            spacing_scaled: 0.005,
            cap_factor: 50,
            parallel: true,
        }
    }
}

/// Genealogy of a uniform sample taken at the horizon, or at the last
/// checkpoint holding enough particles if the run stopped early. `partitions[i]` groups the sample by ancestor `lookbacks[i]`
/// time units earlier; `lookbacks[0] = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledGenealogy {
    pub n: u64,
    pub seed: u64,
    pub status: RunStatus,
    pub sample_time: f64,
    pub population: usize,
    pub lookbacks: Vec<f64>,
    pub partitions: Vec<Partition>,
}

impl SampledGenealogy {
    /// Lookback at which sample members `a` and `b` first share an ancestor.
    pub fn merge_lookback(&self, a: usize, b: usize) -> Option<f64> {
        self.partitions
            .iter()
            .position(|p| p.same_block(a, b))
            .map(|i| self.lookbacks[i])
    }

    /// Whether the run reached the horizon with the population intact.
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

fn model_config(p: &ModelParams, horizon: f64, checkpoints: Vec<f64>, cap: usize, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::from_params(p, InitialCondition::StableProfile { n: p.n as usize }, horizon, checkpoints);
    cfg.right_barrier = RightBarrier::None;
    cfg.max_particles = cap;
    cfg.seed = seed;
    cfg
}

/// Runs BBM with absorption at zero only from the stable profile, then
/// samples `sample_size` particles and traces their ancestry through the
/// checkpoints.
pub fn sample_genealogy(p: &ModelParams, sample_size: usize, opts: &PathOptions, seed: u64) -> Result<SampledGenealogy> {
    if sample_size < 2 {
        return Err(invalid("sample_size", "need at least two particles"));
    }
    if sample_size > p.n as usize {
        return Err(invalid("sample_size", "larger than the initial population"));
    }
    if !(opts.spacing_scaled > 0.0 && opts.horizon_scaled >= opts.spacing_scaled) {
        return Err(invalid("spacing", "need 0 < spacing <= horizon"));
    }
    let ts = p.time_scale();
    let horizon = opts.horizon_scaled * ts;
    let spacing = opts.spacing_scaled * ts;
    let steps = (horizon / spacing).round() as usize;
    let checkpoints: Vec<f64> = (0..=steps).map(|i| (i as f64 * spacing).min(horizon)).collect();
    let mut cfg = model_config(p, horizon, checkpoints, opts.cap_factor * p.n as usize, seed);
    cfg.genealogy = GenealogyDetail::Ancestry;
    let out = run(&cfg)?;
    let log = &out.genealogy;
    let last = (0..log.len())
        .rev()
        .find(|&j| log.generations[j].len() >= sample_size)
        .expect("the initial generation holds N particles");
    let mut rng = StreamRng::new(seed, streams::SAMPLING);
    let mut anc = uniform_subset(log.generations[last].len(), sample_size, &mut rng);
    let t_last = log.generations[last].time;
    let mut lookbacks = Vec::with_capacity(last + 1);
    let mut partitions = Vec::with_capacity(last + 1);
    for j in (0..=last).rev() {
        lookbacks.push(t_last - log.generations[j].time);
        partitions.push(Partition::from_labels(&anc));
        if j > 0 {
            let parents = &log.generations[j].parents;
            for a in &mut anc {
                *a = parents[*a] as usize;
            }
        }
    }
    Ok(SampledGenealogy {
        n: p.n,
        seed,
        status: out.status,
        sample_time: t_last,
        population: log.generations[last].len(),
        lookbacks,
        partitions,
    })
}

fn sample_many(p: &ModelParams, sample_size: usize, range: std::ops::Range<usize>, opts: &PathOptions, seed: u64) -> Result<Vec<SampledGenealogy>> {
    let base = child_key(seed, p.n);
    let one = |r: usize| sample_genealogy(p, sample_size, opts, child_key(base, r as u64));
    if opts.parallel {
        range.into_par_iter().map(one).collect()
    } else {
        range.map(one).collect()
    }
}

/// Genealogies from the first `want` runs that reach the horizon, with the
/// number of discarded runs. Gives up after `5 * want` attempts.
pub fn sample_surviving(p: &ModelParams, sample_size: usize, want: usize, opts: &PathOptions, seed: u64) -> Result<(Vec<SampledGenealogy>, usize)> {
    let mut kept = Vec::with_capacity(want);
    let mut discarded = 0;
    let mut next = 0;
    while kept.len() < want && next < 5 * want {
        let end = (next + want - kept.len()).min(5 * want);
        for g in sample_many(p, sample_size, next..end, opts, seed)? {
            if g.completed() {
                kept.push(g);
            } else {
                discarded += 1;
            }
        }
        next = end;
    }
    Ok((kept, discarded))
}

/// Median of `observed` values plus `censored` values known only to exceed
/// every observation; `None` when half or more are censored.
pub fn censored_median(observed: &[f64], censored: usize) -> Option<f64> {
    let n = observed.len() + censored;
    if n == 0 || 2 * censored >= n {
        return None;
    }
    let mut v = observed.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |i: usize| v.get(i).copied().unwrap_or(f64::INFINITY);
    let m = if n % 2 == 1 { at(n / 2) } else { 0.5 * (at(n / 2 - 1) + at(n / 2)) };
    m.is_finite().then_some(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrcaRow {
    pub n: u64,
    pub time_scale: f64,
    pub replicates: usize,
    pub merged: usize,
    pub censored: usize,
    /// Runs that died out or hit the population cap before the sampling time.
    pub discarded: usize,
    pub median: Option<f64>,
    pub median_scaled: Option<f64>,
}

impl MrcaRow {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.replicates.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrcaReport {
    pub rows: Vec<MrcaRow>,
    /// Median of the last `N` over the first.
    pub ratio: Option<f64>,
    /// `(log N_last / log N_first)^3`.
    pub predicted: f64,
}

/// Median lookback to the common ancestor of two particles sampled at the
/// horizon, for each `N` in `ns` (ascending). Only runs alive at the horizon
/// count; pairs still apart at time zero are censored.
pub fn mrca_scaling_experiment(ns: &[u64], replicates: usize, opts: &PathOptions, seed: u64) -> Result<MrcaReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("N list", "must be nonempty and ascending"));
    }
    let mut rows: Vec<MrcaRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        if let Some(prev) = rows.iter().find(|r| r.n == n) {
            rows.push(prev.clone());
            continue;
        }
        let p = derive_params(n, 0.0)?;
        let (runs, discarded) = sample_surviving(&p, 2, replicates, opts, seed)?;
        let times: Vec<f64> = runs.iter().filter_map(|g| g.merge_lookback(0, 1)).collect();
        let censored = runs.len() - times.len();
        let median = censored_median(&times, censored);
        rows.push(MrcaRow {
            n,
            time_scale: p.time_scale(),
            replicates: runs.len(),
            merged: times.len(),
            censored,
            discarded,
            median,
            median_scaled: median.map(|m| m / p.time_scale()),
        });
    }
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let ratio = match (first.median, last.median) {
        (Some(a), Some(b)) => Some(b / a),
        _ => None,
    };
    let predicted = ((last.n as f64).ln() / (first.n as f64).ln()).powi(3);
    Ok(MrcaReport { rows, ratio, predicted })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationLinkReport {
    pub n: u64,
    pub burn_in: f64,
    /// `M (log N)^2 / (2 pi Z)` per surviving run.
    pub ratios: Vec<f64>,
    pub median: Option<f64>,
    pub extinct: usize,
    pub aborted: usize,
    /// The same ratio for a population in exact stable-profile proportions.
    pub profile_value: f64,
}

/// `M (log N)^2 / (2 pi Z)` when particle density is proportional to
/// `e^{-mu y} sin(pi y / L)`.
pub fn stable_profile_ratio(p: &ModelParams) -> f64 {
    let (mu, l) = (p.mu, p.l);
    let k = PI / l;
    let mass = k * (1.0 + (-mu * l).exp()) / (mu * mu + k * k);
    p.log_n().powi(2) * mass / (2.0 * PI * (l / 2.0))
}

/// Runs from the stable profile for `burn_in` time units and records
/// `M (log N)^2 / (2 pi Z)`, until `runs` populations survive (at most
/// `5 * runs` attempts).
pub fn population_link_experiment(n: u64, runs: usize, burn_in: f64, cap_factor: usize, seed: u64) -> Result<PopulationLinkReport> {
    let p = derive_params(n, 0.0)?;
    if !(burn_in > 0.0) {
        return Err(invalid("burn_in", "must be positive"));
    }
    let base = child_key(seed, n);
    let mut ratios = Vec::with_capacity(runs);
    let (mut extinct, mut aborted) = (0, 0);
    let mut next = 0usize;
    while ratios.len() < runs && next < 5 * runs {
        let batch: Vec<usize> = (next..(next + runs).min(5 * runs)).collect();
        next = batch.last().map_or(next, |b| b + 1);
        let outs = batch
            .par_iter()
            .map(|&r| run(&model_config(&p, burn_in, vec![burn_in], cap_factor * n as usize, child_key(base, r as u64))))
            .collect::<Result<Vec<_>>>()?;
        for out in outs {
            if ratios.len() == runs {
                break;
            }
            match out.status {
                RunStatus::Extinct { .. } => extinct += 1,
                RunStatus::Aborted { .. } => aborted += 1,
                RunStatus::Completed => {
                    let row = out.trajectory.last().expect("checkpoint at burn-in");
                    ratios.push(row.m as f64 * p.log_n().powi(2) / (2.0 * PI * row.z));
                }
            }
        }
    }
    let median = (!ratios.is_empty()).then(|| crate::stats::median(&ratios));
    Ok(PopulationLinkReport {
        n,
        burn_in,
        ratios,
        median,
        extinct,
        aborted,
        profile_value: stable_profile_ratio(&p),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultipleMergerReport {
    pub n: u64,
    pub sample_size: usize,
    pub runs: usize,
    pub discarded: usize,
    /// Runs whose sampled genealogy shows a block formed from three or more
    /// blocks between consecutive checkpoints.
    pub runs_with_multiple_merger: usize,
    pub multiple_merger_events: usize,
    pub pair_median_scaled: Option<f64>,
    /// Coalescent time per `(log N)^3` time units, from the pair median.
    pub clock_rate: Option<f64>,
    /// Lookbacks (time units) where at least half of the runs have data.
    pub lookbacks: Vec<f64>,
    pub mean_blocks: Vec<f64>,
    pub bsz_blocks: Vec<f64>,
    pub kingman_blocks: Vec<f64>,
    pub sup_distance_bsz: f64,
    pub sup_distance_kingman: f64,
}

impl MultipleMergerReport {
    pub fn multiple_merger_frequency(&self) -> f64 {
        self.runs_with_multiple_merger as f64 / self.runs.max(1) as f64
    }
}

/// Number of blocks of `coarse` that absorb three or more blocks of `fine`.
pub fn multiple_merger_count(fine: &Partition, coarse: &Partition) -> usize {
    let mut per = vec![0usize; coarse.block_count()];
    for block in fine.blocks() {
        per[coarse.block_of()[block[0]]] += 1;
    }
    per.iter().filter(|&&c| c >= 3).count()
}

/// Sampled genealogies of `sample_size` particles compared with the BSZ and
/// Kingman block-count curves, with the coalescent clock calibrated so the
/// pooled pair-coalescence median matches `ln 2`.
pub fn multiple_mergers_experiment(
    n: u64,
    sample_size: usize,
    runs: usize,
    opts: &PathOptions,
    oracle_replicates: usize,
    seed: u64,
) -> Result<MultipleMergerReport> {
    let p = derive_params(n, 0.0)?;
    let ts = p.time_scale();
    let (gens, discarded) = sample_surviving(&p, sample_size, runs, opts, seed)?;
    let runs = gens.len();
    let mut events = 0;
    let mut with_event = 0;
    let mut pair_times = Vec::new();
    let mut pair_censored = 0;
    for g in &gens {
        let e: usize = g.partitions.windows(2).map(|w| multiple_merger_count(&w[0], &w[1])).sum();
        events += e;
        with_event += (e > 0) as usize;
        for a in 0..sample_size {
            for b in a + 1..sample_size {
                match g.merge_lookback(a, b) {
                    Some(t) => pair_times.push(t / ts),
                    None => pair_censored += 1,
                }
            }
        }
    }
    let pair_median_scaled = censored_median(&pair_times, pair_censored);
    let clock_rate = pair_median_scaled.map(|m| 2f64.ln() / m);
    let longest = gens.iter().map(|g| g.lookbacks.len()).max().unwrap_or(0);
    let mut lookbacks = Vec::new();
    let mut mean_blocks = Vec::new();
    for i in 0..longest {
        let have: Vec<&SampledGenealogy> = gens.iter().filter(|g| g.lookbacks.len() > i).collect();
        if 2 * have.len() < runs {
            break;
        }
        lookbacks.push(have[0].lookbacks[i]);
        mean_blocks.push(have.iter().map(|g| g.partitions[i].block_count() as f64).sum::<f64>() / have.len() as f64);
    }
    let (mut bsz_blocks, mut kingman_blocks) = (Vec::new(), Vec::new());
    let (mut d_bsz, mut d_kingman) = (f64::NAN, f64::NAN);
    if let Some(rate) = clock_rate {
        let s: Vec<f64> = lookbacks.iter().map(|l| rate * l / ts).collect();
        let curve = |kind| -> Result<Vec<f64>> {
            let m = finite_dim_marginal(sample_size, &s, kind, oracle_replicates, child_key(seed, 0xB52))?;
            Ok((0..s.len()).map(|i| m.mean_block_count(i)).collect())
        };
        bsz_blocks = curve(CoalescentKind::BolthausenSznitman)?;
        kingman_blocks = curve(CoalescentKind::Kingman)?;
        let sup = |o: &[f64]| mean_blocks.iter().zip(o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        d_bsz = sup(&bsz_blocks);
        d_kingman = sup(&kingman_blocks);
    }
    Ok(MultipleMergerReport {
        n,
        sample_size,
        runs,
        discarded,
        runs_with_multiple_merger: with_event,
        multiple_merger_events: events,
        pair_median_scaled,
        clock_rate,
        lookbacks,
        mean_blocks,
        bsz_blocks,
        kingman_blocks,
        sup_distance_bsz: d_bsz,
        sup_distance_kingman: d_kingman,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn censored_median_lies_within_observations(
            obs in proptest::collection::vec(0.0f64..100.0, 1..40),
            censored in 0usize..40,
        ) {
            let lo = obs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = obs.iter().cloned().fold(0.0, f64::max);
            match censored_median(&obs, censored) {
                Some(m) => {
                    prop_assert!(2 * censored < obs.len() + censored);
                    prop_assert!(lo <= m && m <= hi);
                }
                None => prop_assert!(2 * censored >= obs.len() + censored),
            }
        }

        #[test]
        fn more_censoring_never_lowers_the_median(
            obs in proptest::collection::vec(0.0f64..100.0, 1..40),
            censored in 0usize..20,
        ) {
            if let (Some(a), Some(b)) = (censored_median(&obs, censored), censored_median(&obs, censored + 1)) {
                prop_assert!(b >= a);
            }
        }
    }

    #[test]
    fn censored_median_cases() {
        assert_eq!(censored_median(&[3.0, 1.0, 2.0], 0), Some(2.0));
        assert_eq!(censored_median(&[1.0, 2.0, 3.0], 1), Some(2.5));
        assert_eq!(censored_median(&[1.0, 2.0], 1), Some(2.0));
        assert_eq!(censored_median(&[1.0], 1), None);
        assert_eq!(censored_median(&[], 0), None);
    }

    #[test]
    fn triple_merger_detected() {
        let fine = Partition::singletons(4);
        let coarse = Partition::from_labels(&[0, 0, 0, 1]);
        assert_eq!(multiple_merger_count(&fine, &coarse), 1);
        let pairs = Partition::from_labels(&[0, 0, 1, 1]);
        assert_eq!(multiple_merger_count(&fine, &pairs), 0);
    }

    #[test]
    fn profile_ratio_is_below_one_at_desk_scale() {
        let p = derive_params(10_000, 0.0).unwrap();
        let r = stable_profile_ratio(&p);
        assert!((r - 0.337).abs() < 0.01, "{r}");
    }

    #[test]
    fn identical_n_gives_unit_ratio() {
        let opts = PathOptions {
            horizon_scaled: 0.2,
            spacing_scaled: 0.02,
            ..PathOptions::default()
        };
        let r = mrca_scaling_experiment(&[200, 200], 6, &opts, 3).unwrap();
        if let Some(ratio) = r.ratio {
            assert_eq!(ratio, 1.0);
        }
        assert_eq!(r.predicted, 1.0);
    }
}
