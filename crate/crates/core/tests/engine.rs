use std::f64::consts::PI;

use bbmlab::analytics::{derive_params, expected_count_principal, expected_z, eterm_bound, strip_interval_mass, bbm_density_q, StripSpec};
use bbmlab::engine::{
    run, sample_stable_profile, stable_profile_cdf, statistics_of, Dynamics, GenealogyDetail,
    InitialCondition, ParticleSystem, RightBarrier, RunStatus, SimConfig,
};
use bbmlab::quad;
use bbmlab::rng::StreamRng;
use bbmlab::stats::{ks_test, mean_se};
use statrs::function::erf::erfc;

fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn free_particle(x: f64, mu: f64, horizon: f64) -> SimConfig {
    let mut cfg = SimConfig::strip(mu, 1.0, InitialCondition::PointMass { x, count: 1 }, horizon);
    cfg.right_barrier = RightBarrier::None;
    cfg.dynamics.branch_rate = 0.0;
    cfg.dynamics.z_level = 1.0;
    cfg
}

#[test]
fn zero_step_is_identity() {
    let cfg = SimConfig::strip(1.0, 5.0, InitialCondition::Explicit { positions: vec![1.0, 2.0, 3.5] }, 1.0);
    let mut sys = ParticleSystem::new(&cfg).unwrap();
    let before = sys.positions();
    assert!(sys.step_population(0.0, &cfg).unwrap().is_empty());
    assert_eq!(sys.positions(), before);
    assert!(sys.step_population(-1.0, &cfg).is_err());
}

#[test]
fn gaussian_increment_moments() {
    let (mu, dt, x) = (0.7, 0.9, 1000.0);
    let disp: Vec<f64> = (0..100_000u64)
        .map(|seed| {
            let mut cfg = free_particle(x, mu, dt);
            cfg.seed = seed;
            let mut sys = ParticleSystem::new(&cfg).unwrap();
            sys.step_population(dt, &cfg).unwrap();
            sys.positions()[0] - x
        })
        .collect();
    let (m, se) = mean_se(&disp);
    assert!((m + mu * dt).abs() < 4.0 * se, "mean {m}");
    let var = disp.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (disp.len() - 1) as f64;
    // Var of the sample variance for a Gaussian is 2 sigma^4/(n-1).
    let se_var = (2.0 * dt * dt / (disp.len() - 1) as f64).sqrt();
    assert!((var - dt).abs() < 4.0 * se_var, "var {var}");
}

fn absorption_estimate(dt_max: f64, reps: u64) -> (f64, f64) {
    let hits: Vec<f64> = (0..reps)
        .map(|seed| {
            let mut cfg = free_particle(0.5, 1.0, 1.0);
            cfg.seed = seed;
            cfg.dt_max = dt_max;
            cfg.checkpoint_times = vec![1.0];
            let out = run(&cfg).unwrap();
            if out.final_positions.is_empty() { 1.0 } else { 0.0 }
        })
        .collect();
    mean_se(&hits)
}

#[test]
fn absorption_probability_matches_first_passage_law() {
    // Hitting 0 by time t from x with drift -mu:
    // Phi((-x + mu t)/sqrt t) + e^{2 mu x} Phi((-x - mu t)/sqrt t).
    let (x, mu, t): (f64, f64, f64) = (0.5, 1.0, 1.0);
    let exact = phi((-x + mu * t) / t.sqrt()) + (2.0 * mu * x).exp() * phi((-x - mu * t) / t.sqrt());
    let (p1, se1) = absorption_estimate(1.0, 100_000);
    assert!((p1 - exact).abs() < 3.0 * se1, "{p1} vs {exact}");
    let (p2, se2) = absorption_estimate(0.5, 100_000);
    assert!((p1 - p2).abs() < 2.0 * (se1 * se1 + se2 * se2).sqrt());
}

#[test]
fn statistics_examples() {
    let (mu, l) = (1.2, 10.0);
    let s = statistics_of(&[l / 2.0], mu, l);
    assert!((s.z - (mu * l / 2.0).exp()).abs() < 1e-12);
    assert_eq!(s.y, (mu * l / 2.0).exp());
    assert_eq!(s.m, 1);
    assert_eq!(statistics_of(&[l + 0.5], mu, l).z, 0.0);
    let a = statistics_of(&[1.0, 2.0], mu, l);
    let b = statistics_of(&[7.0], mu, l);
    let ab = statistics_of(&[1.0, 2.0, 7.0], mu, l);
    assert!((ab.z - a.z - b.z).abs() < 1e-12 * ab.z);
    assert_eq!(ab.m, 3);
}

#[test]
fn stable_profile_ks_and_mean_z() {
    let p = derive_params(1_000_000, 0.0).unwrap();
    let mut rng = StreamRng::new(5, 0);
    let n = 100_000;
    let xs = sample_stable_profile(n, p.mu, p.l, &mut rng).unwrap();
    assert!(xs.iter().all(|&x| x > 0.0 && x < p.l));
    let ks = ks_test(&xs, |x| stable_profile_cdf(x, p.mu, p.l), 0.05).unwrap();
    assert!(ks.statistic < 1.36 / (n as f64).sqrt(), "{ks:?}");
    let zs: Vec<f64> = xs.iter().map(|&x| (p.mu * x).exp() * (PI * x / p.l).sin()).collect();
    let (m, se) = mean_se(&zs);
    let norm = quad::integrate(|y| (-p.mu * y).exp() * (PI * y / p.l).sin(), 0.0, p.l, 1e-12);
    let expect = quad::integrate(|y| (PI * y / p.l).sin().powi(2), 0.0, p.l, 1e-12) / norm;
    assert!((m - expect).abs() < 3.0 * se, "{m} vs {expect}");
}

fn strip_runs(mu: f64, k: f64, x: f64, t: f64, reps: u64, seed0: u64) -> Vec<(f64, f64, usize)> {
    (0..reps)
        .map(|i| {
            let mut cfg = SimConfig::strip(mu, k, InitialCondition::PointMass { x, count: 1 }, t);
            cfg.seed = seed0 + i;
            let out = run(&cfg).unwrap();
            let s = statistics_of(&out.final_positions, mu, k);
            (s.z, s.y, s.m)
        })
        .collect()
}

#[test]
fn z_martingale_in_strip() {
    let (mu, k, x, t) = (1.0, 6.0, 3.0, 2.0);
    let runs = strip_runs(mu, k, x, t, 10_000, 100);
    let decay = (-(1.0 - mu * mu / 2.0 - PI * PI / (2.0 * k * k)) * t).exp();
    let zs: Vec<f64> = runs.iter().map(|r| r.0 * decay).collect();
    let (m, se) = mean_se(&zs);
    let z0 = (mu * x).exp() * (PI * x / k).sin();
    assert!((m - z0).abs() < 3.0 * se, "{m} vs {z0} (se {se})");
}

#[test]
fn expected_count_in_strip() {
    let (mu, k, x) = (1.0, 3.0, 1.2);
    let t = k * k;
    let runs = strip_runs(mu, k, x, t, 10_000, 7_000);
    let counts: Vec<f64> = runs.iter().map(|r| r.2 as f64).collect();
    let (m, se) = mean_se(&counts);
    let principal = expected_count_principal(t, x, k, mu);
    let tol = 3.0 * se + principal * eterm_bound(t, k);
    assert!((m - principal).abs() < tol, "{m} vs {principal}");
    let exact = strip_interval_mass(t, x, 0.0, k, &StripSpec::new(k, mu).unwrap()).unwrap().value;
    assert!((exact - principal).abs() <= principal * eterm_bound(t, k));
    assert!((expected_z(t, x, k, mu) - (mu * x).exp() * (PI * x / k).sin() * ((1.0 - mu * mu / 2.0 - PI * PI / (2.0 * k * k)) * t).exp()).abs() < 1e-12);
}

#[test]
fn second_moment_matches_nested_quadrature() {
    let (mu, k, x, t) = (0.5, 3.0, 1.5, 2.0);
    let (c, d) = (1.0, 2.0);
    let spec = StripSpec::new(k, mu).unwrap();
    let mass = |s: f64, z: f64| -> f64 {
        if s <= 0.0 {
            return if (c..=d).contains(&z) { 1.0 } else { 0.0 };
        }
        strip_interval_mass(s, z, c, d, &spec).unwrap().value
    };
    let first = mass(t, x);
    let inner = |s: f64| -> f64 {
        if s <= 0.0 {
            return first * first;
        }
        quad::integrate_split(
            |z| bbm_density_q(s, x, z, &spec).unwrap().value * mass(t - s, z).powi(2),
            0.0,
            k,
            &[c, x, d],
            1e-7,
        )
    };
    let exact = first + 2.0 * quad::integrate_split(inner, 0.0, t, &[0.05, t - 0.05], 1e-6);

    let runs: Vec<f64> = (0..40_000u64)
        .map(|i| {
            let mut cfg = SimConfig::strip(mu, k, InitialCondition::PointMass { x, count: 1 }, t);
            cfg.seed = 90_000 + i;
            let out = run(&cfg).unwrap();
            let n = out.final_positions.iter().filter(|&&y| (c..=d).contains(&y)).count() as f64;
            n * n
        })
        .collect();
    let (m, se) = mean_se(&runs);
    assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact} (se {se})");
}

fn model_config(seed: u64) -> SimConfig {
    let p = derive_params(1_000, 0.0).unwrap();
    let mut cfg = SimConfig::from_params(&p, InitialCondition::StableProfile { n: 300 }, 12.0, vec![0.0, 4.0, 8.0, 12.0]);
    cfg.seed = seed;
    cfg.genealogy = GenealogyDetail::Full;
    cfg
}

#[test]
fn reproducible_and_thread_independent() {
    let cfg = model_config(42);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    let mut par = cfg.clone();
    par.parallel = true;
    let c = run(&par).unwrap();
    assert_eq!(a, c);
    let other = run(&model_config(43)).unwrap();
    assert_ne!(a.trajectory, other.trajectory);
}

#[test]
fn conservation_and_barrier() {
    let cfg = model_config(9);
    let out = run(&cfg).unwrap();
    let e = out.events;
    let last = out.trajectory.last().unwrap();
    assert_eq!(
        last.m as i64,
        out.initial.m as i64 + e.branches as i64 - e.absorbed as i64 - e.killed as i64
    );
    let l_a = match cfg.right_barrier {
        RightBarrier::KillAt(l) => l,
        _ => unreachable!(),
    };
    for g in &out.genealogy.generations {
        assert!(g.positions.iter().all(|&x| x > 0.0 && x < l_a));
    }
    assert_eq!(out.hits.counts.iter().sum::<u64>(), e.killed);
    assert_eq!(out.hits.hit_times.len() as u64, e.killed);
    out.genealogy.validate().unwrap();
    let r: Vec<u64> = out.trajectory.iter().map(|r| r.r).collect();
    assert_eq!(r, out.hits.counts);
}

#[test]
fn record_hits_does_not_remove() {
    let mut cfg = SimConfig::strip(0.0, 2.0, InitialCondition::PointMass { x: 1.0, count: 20 }, 3.0);
    cfg.right_barrier = RightBarrier::RecordHits(2.0);
    cfg.dynamics.branch_rate = 0.0;
    cfg.seed = 3;
    let out = run(&cfg).unwrap();
    assert_eq!(out.events.killed, 0);
    assert!(out.events.hits > 0);
    assert!(out.events.hits <= 20);
    assert_eq!(out.initial.m as u64 - out.events.absorbed, out.final_positions.len() as u64);
}

#[test]
fn cap_aborts_with_partial_result() {
    let mut cfg = SimConfig::strip(0.0, 50.0, InitialCondition::PointMass { x: 25.0, count: 10 }, 20.0);
    cfg.max_particles = 200;
    cfg.checkpoint_times = vec![0.0, 1.0, 20.0];
    let out = run(&cfg).unwrap();
    assert!(matches!(out.status, RunStatus::Aborted { cap: 200, .. }));
    assert!(!out.trajectory.is_empty());
}

#[test]
fn cap_reached_mid_step_aborts() {
    for seed in 0..5 {
        let mut cfg = SimConfig::strip(0.0, 50.0, InitialCondition::PointMass { x: 25.0, count: 10 }, 1.0);
        cfg.max_particles = 10;
        cfg.seed = seed;
        let out = run(&cfg).unwrap();
        assert!(matches!(out.status, RunStatus::Aborted { cap: 10, .. }), "seed {seed}: {:?}", out.status);
    }
}

#[test]
fn extinction_is_recorded() {
    let cfg = SimConfig {
        dynamics: Dynamics { mu: 5.0, branch_rate: 0.0, z_level: 1.0 },
        ..SimConfig::strip(5.0, 1.0, InitialCondition::PointMass { x: 0.2, count: 3 }, 50.0)
    };
    let out = run(&cfg).unwrap();
    match out.status {
        RunStatus::Extinct { time } => assert!(time > 0.0 && time < 50.0),
        s => panic!("{s:?}"),
    }
}

#[test]
fn rejects_invalid_configs() {
    let base = SimConfig::strip(1.0, 5.0, InitialCondition::PointMass { x: 1.0, count: 1 }, 1.0);
    let mut c = base.clone();
    c.dt_max = 0.0;
    assert!(run(&c).is_err());
    let mut c = base.clone();
    c.checkpoint_times = vec![0.5, 0.2];
    assert!(run(&c).is_err());
    let mut c = base.clone();
    c.init = InitialCondition::PointMass { x: 6.0, count: 1 };
    assert!(run(&c).is_err());
    let mut c = base;
    c.max_particles = 0;
    assert!(run(&c).is_err());
}
