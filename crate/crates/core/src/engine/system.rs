use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Dynamics, InitialCondition, RightBarrier, SiblingOrder, SimConfig};
use super::kernel::{bridge_hit_probability, exp_clock, substep, Crossing};
use super::profile::sample_stable_profile;
use crate::error::{invalid, Error, Result};
use crate::rng::{child_key, open01, streams, StreamRng};

const ROOT_KEY: u64 = 0x524F_4F54;

#[derive(Clone, Debug)]
struct Particle {
    pos: f64,
    next_branch: f64,
    id: u64,
    /// Index of the ancestor in the most recently marked generation.
    origin: u32,
    hit: bool,
    rng: StreamRng,
}

/// Running totals of the events that change the population.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub branches: u64,
    pub absorbed: u64,
    /// Removed at the right barrier.
    pub killed: u64,
    /// First arrivals at the right barrier in record-only mode.
    pub hits: u64,
}

impl EventCounts {
    fn add(&mut self, o: &EventCounts) {
        self.branches += o.branches;
        self.absorbed += o.absorbed;
        self.killed += o.killed;
        self.hits += o.hits;
    }
}

/// `(Z, Y, M)` of a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub z: f64,
    pub y: f64,
    pub m: usize,
}

/// `Z = sum e^{mu x} sin(pi x/L) 1{x <= L}`, `Y = sum e^{mu x}`, `M` = count,
/// accumulated in slice order.
pub fn statistics_of(positions: &[f64], mu: f64, l: f64) -> Statistics {
    let mut z = 0.0;
    let mut y = 0.0;
    for &x in positions {
        let e = (mu * x).exp();
        y += e;
        if x <= l {
            z += e * (std::f64::consts::PI * x / l).sin();
        }
    }
    Statistics {
        z,
        y,
        m: positions.len(),
    }
}

struct Ctx {
    mu: f64,
    rate: f64,
    h: f64,
    kill_level: Option<f64>,
    record_level: Option<f64>,
    seed: u64,
    order: SiblingOrder,
}

impl Ctx {
    fn new(cfg: &SimConfig) -> Self {
        let (kill_level, record_level) = match cfg.right_barrier {
            RightBarrier::None => (None, None),
            RightBarrier::KillAt(l) => (Some(l), None),
            RightBarrier::RecordHits(l) => (None, Some(l)),
        };
        // Keeps the image series for the two-sided bridge short.
        let h = match kill_level {
            Some(l) => cfg.dt_max.min(l * l / 16.0),
            None => cfg.dt_max,
        };
        Self {
            mu: cfg.dynamics.mu,
            rate: cfg.dynamics.branch_rate,
            h,
            kill_level,
            record_level,
            seed: cfg.seed,
            order: cfg.sibling_order,
        }
    }

    fn spawn(&self, pos: f64, id: u64, origin: u32, hit: bool, t: f64) -> Particle {
        let mut rng = StreamRng::new(self.seed, id);
        let next_branch = t + exp_clock(self.rate, &mut rng);
        Particle {
            pos,
            next_branch,
            id,
            origin,
            hit,
            rng,
        }
    }

    fn split(&self, mut p: Particle, t: f64) -> (Particle, Particle) {
        let swap = self.order == SiblingOrder::Uniform && p.rng.next_u32() & 1 == 1;
        let a = self.spawn(p.pos, child_key(p.id, 0), p.origin, p.hit, t);
        let b = self.spawn(p.pos, child_key(p.id, 1), p.origin, p.hit, t);
        if swap {
            (b, a)
        } else {
            (a, b)
        }
    }
}

#[derive(Default)]
struct Subtree {
    survivors: Vec<Particle>,
    hits: Vec<f64>,
    events: EventCounts,
    last_death: Option<f64>,
}

/// Runs the descendants of `root` from `t0` to `t1` depth first, so survivors
/// come out in lexicographic label order.
fn evolve(root: Particle, t0: f64, t1: f64, ctx: &Ctx, budget: usize) -> Result<Subtree> {
    let mut out = Subtree::default();
    let mut stack = vec![(root, t0)];
    while let Some((mut p, mut t)) = stack.pop() {
        loop {
            let target = p.next_branch.min(t1);
            let mut fate = Crossing::None;
            while t < target {
                let end = if target - t <= ctx.h { target } else { t + ctx.h };
                let dt = end - t;
                let (x1, c) = substep(p.pos, ctx.mu, dt, ctx.kill_level, &mut p.rng);
                t = end;
                if c != Crossing::None {
                    fate = c;
                    break;
                }
                if let Some(l) = ctx.record_level {
                    if !p.hit && (x1 >= l || open01(&mut p.rng) < bridge_hit_probability(l - p.pos, l - x1, dt)) {
                        p.hit = true;
                        out.events.hits += 1;
                        out.hits.push(t);
                    }
                }
                p.pos = x1;
            }
            match fate {
                Crossing::Lower => {
                    out.events.absorbed += 1;
                    out.last_death = Some(out.last_death.map_or(t, |d: f64| d.max(t)));
                    break;
                }
                Crossing::Upper => {
                    out.events.killed += 1;
                    out.hits.push(t);
                    out.last_death = Some(out.last_death.map_or(t, |d: f64| d.max(t)));
                    break;
                }
                Crossing::None => {}
            }
            if p.next_branch > t1 {
                out.survivors.push(p);
                break;
            }
            out.events.branches += 1;
            if out.survivors.len() + stack.len() + 2 > budget {
                return Err(Error::PopulationCap { cap: budget, time: t });
            }
            let (first, second) = ctx.split(p, t);
            stack.push((second, t));
            p = first;
        }
    }
    Ok(out)
}

/// One realisation of branching Brownian motion, advanced checkpoint by checkpoint.
#[derive(Clone, Debug)]
pub struct ParticleSystem {
    time: f64,
    particles: Vec<Particle>,
    events: EventCounts,
    last_death: Option<f64>,
}

impl ParticleSystem {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let positions = match &cfg.init {
            InitialCondition::StableProfile { n } => {
                let mut rng = StreamRng::new(cfg.seed, streams::INITIAL_PROFILE);
                sample_stable_profile(*n, cfg.dynamics.mu, cfg.dynamics.z_level, &mut rng)?
            }
            InitialCondition::PointMass { x, count } => vec![*x; *count],
            InitialCondition::Explicit { positions } => positions.clone(),
        };
        let ctx = Ctx::new(cfg);
        let particles = positions
            .iter()
            .enumerate()
            .map(|(i, &x)| ctx.spawn(x, child_key(ROOT_KEY, i as u64), i as u32, false, 0.0))
            .collect();
        Ok(Self {
            time: 0.0,
            particles,
            events: EventCounts::default(),
            last_death: None,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.pos).collect()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.particles.iter().map(|p| p.id).collect()
    }

    /// Ancestor index of each particle in the last marked generation.
    pub fn origins(&self) -> Vec<u32> {
        self.particles.iter().map(|p| p.origin).collect()
    }

    pub fn events(&self) -> EventCounts {
        self.events
    }

    /// Time of the most recent death, if any.
    pub fn last_death(&self) -> Option<f64> {
        self.last_death
    }

    pub fn statistics(&self, d: &Dynamics) -> Statistics {
        statistics_of(&self.positions(), d.mu, d.z_level)
    }

    /// Makes the current particles the reference generation for `origins`.
    pub fn mark_generation(&mut self) {
        for (i, p) in self.particles.iter_mut().enumerate() {
            p.origin = i as u32;
        }
    }

    /// Advances by `dt`; returns the right-barrier event times in this step.
    pub fn step_population(&mut self, dt: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
        if !(dt >= 0.0) {
            return Err(invalid("dt", format!("must be nonnegative, got {dt}")));
        }
        self.advance_to(self.time + dt, cfg)
    }

    /// Advances to `t_end`; returns the sorted right-barrier event times.
    /// The state is unchanged when the population cap is exceeded.
    pub fn advance_to(&mut self, t_end: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
        if !(t_end >= self.time) {
            return Err(invalid("t_end", format!("{t_end} is before the current time {}", self.time)));
        }
        if t_end == self.time {
            return Ok(Vec::new());
        }
        let ctx = Ctx::new(cfg);
        let cap = cfg.max_particles;
        let t0 = self.time;
        let parts: Vec<Subtree> = if cfg.parallel {
            self.particles
                .par_iter()
                .map(|p| evolve(p.clone(), t0, t_end, &ctx, cap))
                .collect::<Result<_>>()?
        } else {
            let mut parts = Vec::with_capacity(self.particles.len());
            let mut total = 0usize;
            for p in &self.particles {
                let sub = evolve(p.clone(), t0, t_end, &ctx, cap - total).map_err(|e| match e {
                    Error::PopulationCap { time, .. } => Error::PopulationCap { cap, time },
                    e => e,
                })?;
                total += sub.survivors.len();
                if total > cap {
                    return Err(Error::PopulationCap { cap, time: t_end });
                }
                parts.push(sub);
            }
            parts
        };
        let total: usize = parts.iter().map(|s| s.survivors.len()).sum();
        if total > cap {
            return Err(Error::PopulationCap { cap, time: t_end });
        }
        let mut next = Vec::with_capacity(total);
        let mut hits = Vec::new();
        for sub in parts {
            next.extend(sub.survivors);
            hits.extend(sub.hits);
            self.events.add(&sub.events);
            if let Some(d) = sub.last_death {
                self.last_death = Some(self.last_death.map_or(d, |e| e.max(d)));
            }
        }
        hits.sort_by(f64::total_cmp);
        self.particles = next;
        self.time = t_end;
        Ok(hits)
    }
}
