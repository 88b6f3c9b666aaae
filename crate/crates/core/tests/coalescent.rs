use bbmlab::analytics::{merger_rates, LambdaMeasure};
use bbmlab::coalescent::{finite_dim_marginal, sample_path, CoalescentKind};
use bbmlab::rng::StreamRng;
use bbmlab::stats::{chi_square, ks_test, mean_se};

#[test]
fn kingman_pair_waiting_time_is_exponential() {
    let waits: Vec<f64> = (0..100_000u64)
        .map(|r| {
            let mut rng = StreamRng::replicate(1, r);
            sample_path(2, f64::INFINITY, CoalescentKind::Kingman, &mut rng).unwrap().history[0].time
        })
        .collect();
    let report = ks_test(&waits, |t| 1.0 - (-t).exp(), 0.01).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn bsz_first_event_sizes() {
    let mut counts = [0u64; 4];
    for r in 0..100_000u64 {
        let mut rng = StreamRng::replicate(2, r);
        let path = sample_path(5, f64::INFINITY, CoalescentKind::BolthausenSznitman, &mut rng).unwrap();
        counts[path.history[0].k() - 2] += 1;
    }
    let rates = merger_rates(5, LambdaMeasure::Uniform);
    // C(5,k) * (1/4, 1/12, 1/12, 1/4) = (5/2, 5/6, 5/12, 1/4), total 4.
    let exact = [2.5, 5.0 / 6.0, 5.0 / 12.0, 0.25];
    for (r, e) in rates.iter().zip(exact) {
        assert!((r - e).abs() < 1e-15);
    }
    let expected: Vec<f64> = exact.iter().map(|r| r / 4.0 * 100_000.0).collect();
    let report = chi_square(&counts, &expected, 0.01).unwrap();
    assert!(report.passed, "{report:?} {counts:?}");
}

#[test]
fn pair_coalescence_is_rate_one() {
    let times = [0.25, 0.5, 1.0, 2.0];
    for kind in [CoalescentKind::Kingman, CoalescentKind::BolthausenSznitman] {
        let m = finite_dim_marginal(8, &times, kind, 20_000, 3).unwrap();
        for (i, &s) in times.iter().enumerate() {
            let p = 1.0 - (-s).exp();
            let se = (p * (1.0 - p) / m.replicates as f64).sqrt();
            assert!((m.pair_coalesced[i] - p).abs() < 3.0 * se, "{kind:?} s={s}: {} vs {p}", m.pair_coalesced[i]);
        }
    }
}

fn block_size_of(label: usize, n: usize, s: f64, reps: u64, seed: u64) -> Vec<f64> {
    (0..reps)
        .map(|r| {
            let mut rng = StreamRng::replicate(seed, r);
            let p = sample_path(n, s, CoalescentKind::BolthausenSznitman, &mut rng).unwrap().partition;
            let b = p.block_of()[label];
            p.block_of().iter().filter(|&&x| x == b).count() as f64
        })
        .collect()
}

#[test]
fn exchangeable_labels() {
    let a = block_size_of(0, 12, 0.7, 20_000, 4);
    let b = block_size_of(11, 12, 0.7, 20_000, 5);
    let (ma, sa) = mean_se(&a);
    let (mb, sb) = mean_se(&b);
    assert!((ma - mb).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "{ma} vs {mb}");
}

#[test]
fn restriction_is_consistent() {
    let s = 0.8;
    let reps = 20_000u64;
    let mut restricted = [0u64; 6];
    let subset = [2usize, 5, 7, 8, 11];
    for r in 0..reps {
        let mut rng = StreamRng::replicate(6, r);
        let p = sample_path(12, s, CoalescentKind::BolthausenSznitman, &mut rng).unwrap().partition;
        restricted[p.restrict(&subset).block_count()] += 1;
    }
    let direct = finite_dim_marginal(5, &[s], CoalescentKind::BolthausenSznitman, reps as usize, 7).unwrap();
    for b in 1..=5 {
        let p1 = restricted[b] as f64 / reps as f64;
        let p2 = direct.block_counts[0][b] as f64 / reps as f64;
        let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / reps as f64).sqrt().max(1e-4);
        assert!((p1 - p2).abs() < 4.0 * se, "b={b}: {p1} vs {p2}");
    }
}
