use bbmlab::analytics::derive_params;
use bbmlab::engine::{run, InitialCondition, SimConfig};
use bbmlab::genealogy::{
    ancestral_partition, label_path, partition_from_bridge, weights_from_values, GenealogyLog,
    Partition, WeightedLog,
};
use bbmlab::rng::{open01, StreamRng};

/// Gen 0: two roots. Gen 1: three particles. Gen 2: five leaves.
fn hand_log() -> GenealogyLog {
    GenealogyLog::from_parents(&[0.0, 1.0, 2.0], &[vec![0, 0, 1], vec![0, 1, 1, 2, 2]], 2).unwrap()
}

#[test]
fn hand_built_partitions() {
    let log = hand_log();
    let all: Vec<usize> = (0..5).collect();
    assert_eq!(ancestral_partition(&log, &all, 2.0, 0.0).unwrap(), Partition::singletons(5));
    let p1 = ancestral_partition(&log, &all, 2.0, 1.0).unwrap();
    assert_eq!(p1.blocks(), vec![vec![0], vec![1, 2], vec![3, 4]]);
    let p2 = ancestral_partition(&log, &all, 2.0, 2.0).unwrap();
    assert_eq!(p2.blocks(), vec![vec![0, 1, 2], vec![3, 4]]);
    assert!(p1.refines(&p2));
    assert!(ancestral_partition(&log, &all, 2.0, 0.5).is_err());
    assert!(ancestral_partition(&log, &[7], 2.0, 1.0).is_err());
}

#[test]
fn single_root_gives_one_block() {
    let log = GenealogyLog::from_parents(&[0.0, 1.0], &[vec![0, 0, 0]], 1).unwrap();
    assert_eq!(ancestral_partition(&log, &[0, 1, 2], 1.0, 1.0).unwrap(), Partition::one_block(3));
    let w = vec![weights_from_values(&[1.0], false).unwrap(), weights_from_values(&[1.0; 3], true).unwrap()];
    let wl = WeightedLog::from_weights(&log, w).unwrap();
    let b = wl.discrete_bridge(0, 1).unwrap();
    assert_eq!(b.eval(0.5), 0.0);
    assert_eq!(b.eval(1.0), 1.0);
    for u in [0.01, 0.5, 1.0] {
        assert_eq!(b.inverse(u), 1.0);
    }
}

#[test]
fn two_ancestor_bridge() {
    let log = GenealogyLog::from_parents(&[0.0, 1.0], &[vec![0, 0, 1, 1, 1]], 2).unwrap();
    let w = vec![
        weights_from_values(&[0.4, 0.6], false).unwrap(),
        weights_from_values(&[1.0; 5], true).unwrap(),
    ];
    let wl = WeightedLog::from_weights(&log, w).unwrap();
    let b = wl.discrete_bridge(0, 1).unwrap();
    assert_eq!(b.eval(0.0), 0.0);
    assert_eq!(b.eval(0.39), 0.0);
    assert_eq!(b.eval(0.4), 0.4);
    assert_eq!(b.eval(0.99), 0.4);
    assert_eq!(b.eval(1.0), 1.0);
    assert_eq!(b.inverse(0.3), 0.4);
    assert_eq!(b.inverse(0.41), 1.0);
}

fn simulated_log(n: usize, seed: u64) -> (GenealogyLog, f64, f64) {
    let p = derive_params(n as u64, 0.0).unwrap();
    // Small populations can die out; take the first seed whose log is complete.
    for s in seed.. {
        let mut cfg = SimConfig::from_params(&p, InitialCondition::StableProfile { n }, 20.0, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        cfg.seed = s;
        let out = run(&cfg).unwrap();
        if out.genealogy.len() == 5 {
            return (out.genealogy, p.mu, p.l);
        }
    }
    unreachable!()
}

#[test]
fn cocycle_on_simulated_log() {
    let (log, mu, l) = simulated_log(500, 21);
    let wl = WeightedLog::new(&log, mu, l).unwrap();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    for i in 0..log.len() {
        for j in i + 1..log.len() {
            for k in j + 1..log.len() {
                let ik = wl.discrete_bridge(i, k).unwrap();
                let ij = wl.discrete_bridge(i, j).unwrap();
                let jk = wl.discrete_bridge(j, k).unwrap();
                for &y in &grid {
                    assert_eq!(ik.eval(y).to_bits(), jk.eval(ij.eval(y)).to_bits(), "({i},{j},{k}) y={y}");
                    assert_eq!(ik.inverse(y).to_bits(), ij.inverse(jk.inverse(y)).to_bits(), "({i},{j},{k}) u={y}");
                }
            }
        }
    }
}

#[test]
fn bridge_and_ancestry_agree() {
    let (log, mu, l) = simulated_log(500, 22);
    let wl = WeightedLog::new(&log, mu, l).unwrap();
    let last = log.len() - 1;
    let mut rng = StreamRng::new(5, 0);
    for j in 0..last {
        let b = wl.discrete_bridge(j, last).unwrap();
        for _ in 0..50 {
            let us: Vec<f64> = (0..10).map(|_| open01(&mut rng)).collect();
            assert_eq!(partition_from_bridge(&b, &us), wl.partition_for_uniforms(j, &us).unwrap());
        }
    }
}

#[test]
fn refinement_and_label_order() {
    let (log, _, _) = simulated_log(300, 23);
    let last = log.len() - 1;
    let m = log.generations[last].len();
    let sample: Vec<usize> = (0..m).step_by((m / 20).max(1)).collect();
    let t = log.generations[last].time;
    let mut prev = Partition::singletons(sample.len());
    for g in (0..=last).rev() {
        let p = ancestral_partition(&log, &sample, t, t - log.generations[g].time).unwrap();
        assert!(prev.refines(&p));
        prev = p;
    }
    let paths: Vec<Vec<u32>> = (0..m).map(|i| label_path(&log, last, i).unwrap()).collect();
    assert!(paths.windows(2).all(|w| w[0] < w[1]));
}
