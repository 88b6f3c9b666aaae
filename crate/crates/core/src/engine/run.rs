use serde::{Deserialize, Serialize};

use super::config::{GenealogyDetail, SimConfig};
use super::system::{EventCounts, ParticleSystem, Statistics};
use crate::error::{Error, Result};
use crate::genealogy::{GenealogyLog, Generation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Every particle died; `time` is the last death.
    Extinct { time: f64 },
    /// The population cap was exceeded; results up to `time` are kept.
    Aborted { time: f64, cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub z: f64,
    pub y: f64,
    pub m: usize,
    /// Right-barrier events since the previous checkpoint.
    pub r: u64,
}

/// Right-barrier event times and their counts per checkpoint interval.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HitLog {
    pub hit_times: Vec<f64>,
    /// `counts[k]` = events in `(t_{k-1}, t_k]`; the first interval starts at 0.
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub trajectory: Vec<TrajectoryRow>,
    pub genealogy: GenealogyLog,
    pub hits: HitLog,
    pub status: RunStatus,
    pub events: EventCounts,
    pub initial: Statistics,
    pub final_positions: Vec<f64>,
}

pub fn run(cfg: &SimConfig) -> Result<RunOutput> {
    let mut sys = ParticleSystem::new(cfg)?;
    let initial = sys.statistics(&cfg.dynamics);
    let mut out = RunOutput {
        trajectory: Vec::new(),
        genealogy: GenealogyLog::default(),
        hits: HitLog::default(),
        status: RunStatus::Completed,
        events: EventCounts::default(),
        initial,
        final_positions: Vec::new(),
    };
    let mut since_checkpoint = 0u64;
    let mut stops: Vec<(f64, bool)> = cfg.checkpoint_times.iter().map(|&t| (t, true)).collect();
    if stops.last().map_or(true, |&(t, _)| t < cfg.horizon) {
        stops.push((cfg.horizon, false));
    }
    for (t, is_checkpoint) in stops {
        match sys.advance_to(t, cfg) {
            Ok(hits) => {
                since_checkpoint += hits.len() as u64;
                out.hits.hit_times.extend(hits);
            }
            Err(Error::PopulationCap { cap, time }) => {
                out.status = RunStatus::Aborted { time, cap };
                break;
            }
            Err(e) => return Err(e),
        }
        if is_checkpoint {
            let s = sys.statistics(&cfg.dynamics);
            out.trajectory.push(TrajectoryRow {
                t,
                z: s.z,
                y: s.y,
                m: s.m,
                r: since_checkpoint,
            });
            out.hits.counts.push(since_checkpoint);
            since_checkpoint = 0;
            if cfg.genealogy != GenealogyDetail::Off {
                let parents = if out.genealogy.is_empty() {
                    Vec::new()
                } else {
                    sys.origins()
                };
                out.genealogy.generations.push(Generation {
                    time: t,
                    parents,
                    positions: sys.positions(),
                    ids: (cfg.genealogy == GenealogyDetail::Full).then(|| sys.ids()),
                });
            }
            sys.mark_generation();
        }
        if sys.is_empty() {
            out.status = RunStatus::Extinct {
                time: sys.last_death().unwrap_or(0.0),
            };
            break;
        }
    }
    out.events = sys.events();
    out.final_positions = sys.positions();
    Ok(out)
}
