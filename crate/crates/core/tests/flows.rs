use bbmlab::analytics::CsbpParams;
use bbmlab::coalescent::{finite_dim_marginal, CoalescentKind};
use bbmlab::flows::{
    bridge_from_flow, bsz_partitions_from_flow, ln_csbp_trajectory, ln_s_increment, pd_stick_breaking,
    sample_positive_stable, sample_s_increment, FlowGrid, DEFAULT_GAP_COUNT,
};
use bbmlab::rng::StreamRng;
use bbmlab::stats::{chi_square, ks_test, ks_two_sample, mean_se};
use statrs::function::erf::erfc;

fn draws(n: u64, seed: u64, mut f: impl FnMut(&mut StreamRng) -> f64) -> Vec<f64> {
    (0..n).map(|r| f(&mut StreamRng::replicate(seed, r))).collect()
}

fn laplace_within(samples: &[f64], lambda: f64, exact: f64, sigmas: f64) {
    let ys: Vec<f64> = samples.iter().map(|x| (-lambda * x).exp()).collect();
    let (m, se) = mean_se(&ys);
    assert!((m - exact).abs() <= sigmas * se, "lambda {lambda}: {m} vs {exact} (se {se})");
}

#[test]
fn half_stable_matches_levy_cdf() {
    let xs = draws(100_000, 1, |r| sample_positive_stable(0.5, r).unwrap());
    let report = ks_test(&xs, |x| if x <= 0.0 { 0.0 } else { erfc(1.0 / (2.0 * x.sqrt())) }, 0.01).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn near_one_stable_concentrates() {
    let xs = draws(100_000, 2, |r| sample_positive_stable(0.999, r).unwrap().min(10.0));
    let (m, _) = mean_se(&xs);
    assert!((0.9..=1.1).contains(&m), "{m}");
}

#[test]
fn stable_laplace_transform() {
    let xs = draws(100_000, 3, |r| sample_positive_stable(0.7, r).unwrap());
    for lambda in [0.5, 1.0, 2.0] {
        laplace_within(&xs, lambda, (-f64::powf(lambda, 0.7)).exp(), 4.0);
    }
}

#[test]
fn increment_laplace_grid() {
    let p = CsbpParams::new(0.3, 1.0).unwrap();
    let mut seed = 10;
    for dt in [0.1, 0.5] {
        for x in [0.5, 2.0] {
            seed += 1;
            let xs = draws(100_000, seed, |r| sample_s_increment(dt, x, &p, r).unwrap());
            for lambda in [0.5, 2.0] {
                let exact = (-x * p.laplace_u(dt, lambda).unwrap()).exp();
                laplace_within(&xs, lambda, exact, 4.0);
            }
        }
    }
}

#[test]
fn increments_are_additive_in_mass() {
    let p = CsbpParams::new(-0.2, 1.5).unwrap();
    let dt = 0.3;
    let split = draws(100_000, 20, |r| {
        sample_s_increment(dt, 0.4, &p, r).unwrap() + sample_s_increment(dt, 1.1, &p, r).unwrap()
    });
    let whole = draws(100_000, 21, |r| sample_s_increment(dt, 1.5, &p, r).unwrap());
    let report = ks_two_sample(&split, &whole, 0.01).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn flow_composition_preserves_marginals() {
    let p = CsbpParams::new(0.5, 1.0).unwrap();
    let x: f64 = 1.3;
    let direct = draws(100_000, 30, |r| ln_s_increment(0.8, x.ln(), &p, r).unwrap());
    let composed = draws(100_000, 31, |r| {
        let mid = ln_s_increment(0.3, x.ln(), &p, r).unwrap();
        ln_s_increment(0.5, mid, &p, r).unwrap()
    });
    let report = ks_two_sample(&direct, &composed, 0.01).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn flow_grid_marginal_matches_direct_draw() {
    let p = CsbpParams::new(0.5, 1.0).unwrap();
    let times = [0.0, 0.2, 0.5, 0.8];
    let marks = [0.5, 1.3, 2.0];
    let via_grid = draws(20_000, 32, |r| FlowGrid::sample(&times, &marks, &p, r).unwrap().ln_value(3, 1));
    let direct = draws(20_000, 33, |r| ln_s_increment(0.8, 1.3f64.ln(), &p, r).unwrap());
    let report = ks_two_sample(&via_grid, &direct, 0.01).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn trajectory_one_step_laplace() {
    let p = CsbpParams::new(1.0, 2.0).unwrap();
    let xs = draws(100_000, 40, |r| ln_csbp_trajectory(0.7, &[0.25], &p, r).unwrap()[0].exp());
    for lambda in [0.5, 1.0, 3.0] {
        let exact = (-0.7 * p.laplace_u(0.25, lambda).unwrap()).exp();
        laplace_within(&xs, lambda, exact, 4.0);
    }
}

#[test]
fn neveu_trajectories_stay_positive_and_finite() {
    let p = CsbpParams::neveu_limit(0.0);
    let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    for r in 0..100_000u64 {
        let mut rng = StreamRng::replicate(41, r);
        let path = ln_csbp_trajectory(1.0, &times, &p, &mut rng).unwrap();
        assert!(path.iter().all(|z| z.is_finite()), "replicate {r}: {path:?}");
    }
}

#[test]
fn largest_gap_follows_poisson_dirichlet() {
    let p = CsbpParams::new(0.0, 1.0).unwrap();
    let dt = 2f64.ln();
    let ranked = draws(10_000, 50, |r| {
        let fb = bridge_from_flow(0.5, 0.5 + dt, 1.0, &p, DEFAULT_GAP_COUNT, r).unwrap();
        assert!((fb.alpha - 0.5).abs() < 1e-12);
        fb.largest_gap()
    });
    let sticks = draws(10_000, 51, |r| {
        pd_stick_breaking(0.5, 2000, r).unwrap().into_iter().fold(0.0, f64::max)
    });
    let report = ks_two_sample(&ranked, &sticks, 0.01).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn bridge_gaps_independent_of_mass() {
    let p = CsbpParams::new(0.0, 1.0).unwrap();
    let pairs: Vec<(f64, f64)> = (0..5_000u64)
        .map(|r| {
            let mut rng = StreamRng::replicate(52, r);
            let fb = bridge_from_flow(0.6, 1.2, 1.0, &p, 512, &mut rng).unwrap();
            (fb.ln_mass_s, fb.largest_gap())
        })
        .collect();
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    let corr = sxy / (sxx * syy).sqrt();
    assert!(corr.abs() * n.sqrt() < 3.0, "correlation {corr}");
}

#[test]
fn flow_pair_coalescence_matches_bsz_at_calibrated_clock() {
    let p = CsbpParams::neveu_limit(0.0);
    let taus = [0.5, 1.0];
    let reps = 10_000u64;
    let mut hits = [0u64; 2];
    for r in 0..reps {
        let mut rng = StreamRng::replicate(60, r);
        let path = bsz_partitions_from_flow(1.0, 2, &taus, &p, p.b, 1024, &mut rng).unwrap();
        for (h, part) in hits.iter_mut().zip(&path) {
            *h += part.same_block(0, 1) as u64;
        }
    }
    for (h, tau) in hits.iter().zip(taus) {
        let q = 1.0 - (-tau).exp();
        let se = (q * (1.0 - q) / reps as f64).sqrt();
        let phat = *h as f64 / reps as f64;
        assert!((phat - q).abs() <= 3.0 * se, "tau {tau}: {phat} vs {q}");
    }
}

#[test]
fn flow_block_counts_match_bsz() {
    let p = CsbpParams::neveu_limit(0.0);
    let n = 6;
    let reps = 10_000u64;
    let mut counts = vec![0u64; n + 1];
    for r in 0..reps {
        let mut rng = StreamRng::replicate(61, r);
        let path = bsz_partitions_from_flow(1.0, n, &[1.0], &p, p.b, 1024, &mut rng).unwrap();
        counts[path[0].block_count()] += 1;
    }
    let direct = finite_dim_marginal(n, &[1.0], CoalescentKind::BolthausenSznitman, 200_000, 62).unwrap();
    let probs: Vec<f64> = direct.block_counts[0].iter().map(|&c| c as f64 / 200_000.0).collect();
    // Pool blocks counts 5 and 6 with 4 to keep expected cells large.
    let pool = |v: &[f64]| vec![v[1], v[2], v[3], v[4] + v[5] + v[6]];
    let observed: Vec<u64> = pool(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>())
        .iter()
        .map(|&c| c as u64)
        .collect();
    let expected: Vec<f64> = pool(&probs).iter().map(|q| q * reps as f64).collect();
    let report = chi_square(&observed, &expected, 0.01).unwrap();
    assert!(report.passed, "{report:?} {observed:?} {expected:?}");
}
