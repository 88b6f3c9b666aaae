use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The population at one checkpoint, in lexicographic label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub time: f64,
    /// `parents[i]` is the index in the previous generation of the ancestor of
    /// particle `i`. Empty for the first generation.
    pub parents: Vec<u32>,
    pub positions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<u64>>,
}

impl Generation {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Ancestry recorded at checkpoint granularity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenealogyLog {
    pub generations: Vec<Generation>,
}

impl GenealogyLog {
    /// Builds a log from hand-specified parent arrays; positions default to 1.
    pub fn from_parents(times: &[f64], parents: &[Vec<u32>], first_size: usize) -> Result<Self> {
        if times.len() != parents.len() + 1 {
            return Err(Error::Domain("need one more time than parent arrays".into()));
        }
        let mut generations = vec![Generation {
            time: times[0],
            parents: Vec::new(),
            positions: vec![1.0; first_size],
            ids: None,
        }];
        for (t, p) in times[1..].iter().zip(parents) {
            generations.push(Generation {
                time: *t,
                parents: p.clone(),
                positions: vec![1.0; p.len()],
                ids: None,
            });
        }
        let log = Self { generations };
        log.validate()?;
        Ok(log)
    }

    pub fn len(&self) -> usize {
        self.generations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generations.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.time).collect()
    }

    /// Index of the generation recorded at time `t` (relative tolerance 1e-9).
    pub fn checkpoint_index(&self, t: f64) -> Result<usize> {
        self.generations
            .iter()
            .position(|g| (g.time - t).abs() <= 1e-9 * g.time.abs().max(1.0))
            .ok_or(Error::NotACheckpoint(t))
    }

    /// Ancestor in generation `to` of particle `i` of generation `from`.
    pub fn ancestor(&self, from: usize, i: usize, to: usize) -> Result<usize> {
        if to > from || from >= self.len() {
            return Err(Error::Domain(format!("cannot trace generation {from} back to {to}")));
        }
        let size = self.generations[from].len();
        if i >= size {
            return Err(Error::UnknownParticle { index: i, size });
        }
        let mut idx = i;
        for g in (to + 1..=from).rev() {
            idx = self.generations[g].parents[idx] as usize;
        }
        Ok(idx)
    }

    /// Checks that every parent pointer is in range and parents are
    /// nondecreasing, which is what lexicographic ordering implies.
    pub fn validate(&self) -> Result<()> {
        for w in 1..self.len() {
            let prev = self.generations[w - 1].len();
            let g = &self.generations[w];
            if g.parents.len() != g.positions.len() {
                return Err(Error::Domain(format!("generation {w}: parent and position arrays differ in length")));
            }
            let mut last = 0u32;
            for &p in &g.parents {
                if p as usize >= prev {
                    return Err(Error::UnknownParticle { index: p as usize, size: prev });
                }
                if p < last {
                    return Err(Error::Domain(format!("generation {w}: parents are not in lexicographic order")));
                }
                last = p;
            }
        }
        Ok(())
    }
}
