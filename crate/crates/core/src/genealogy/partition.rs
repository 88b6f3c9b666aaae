use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

/// A partition of `{0, .., n-1}` with blocks numbered by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    block_of: Vec<usize>,
}

impl Partition {
    /// Elements with equal labels share a block.
    pub fn from_labels<T: Eq + Hash>(labels: &[T]) -> Self {
        let mut ids: HashMap<&T, usize> = HashMap::with_capacity(labels.len());
        let block_of = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect();
        Self { block_of }
    }

    pub fn singletons(n: usize) -> Self {
        Self { block_of: (0..n).collect() }
    }

    pub fn one_block(n: usize) -> Self {
        Self { block_of: vec![0; n] }
    }

    /// Builds a partition from explicit blocks covering `0..n` exactly once.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Option<Self> {
        let mut label = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &i in block {
                if i >= n || label[i] != usize::MAX {
                    return None;
                }
                label[i] = b;
            }
        }
        if label.contains(&usize::MAX) {
            return None;
        }
        Some(Self::from_labels(&label))
    }

    pub fn n(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn block_count(&self) -> usize {
        self.block_of.iter().max().map_or(0, |m| m + 1)
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of[i] == self.block_of[j]
    }

    /// Blocks in canonical order, each sorted.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count()];
        for (i, &b) in self.block_of.iter().enumerate() {
            out[b].push(i);
        }
        out
    }

    /// Sizes of the blocks in canonical order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks().iter().map(Vec::len).collect()
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.n() != coarser.n() {
            return false;
        }
        let mut image = vec![usize::MAX; self.block_count()];
        for (i, &b) in self.block_of.iter().enumerate() {
            let c = coarser.block_of[i];
            if image[b] == usize::MAX {
                image[b] = c;
            } else if image[b] != c {
                return false;
            }
        }
        true
    }

    /// Restriction to the listed elements, renumbered `0..subset.len()`.
    pub fn restrict(&self, subset: &[usize]) -> Partition {
        let labels: Vec<usize> = subset.iter().map(|&i| self.block_of[i]).collect();
        Self::from_labels(&labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_numbering() {
        let p = Partition::from_labels(&['c', 'a', 'c', 'b', 'a']);
        assert_eq!(p.block_of(), &[0, 1, 0, 2, 1]);
        assert_eq!(p.blocks(), vec![vec![0, 2], vec![1, 4], vec![3]]);
        assert_eq!(Partition::from_blocks(5, &p.blocks()), Some(p));
        assert!(Partition::from_blocks(3, &[vec![0, 1]]).is_none());
    }

    #[test]
    fn refinement_order() {
        let fine = Partition::from_labels(&[0, 1, 2, 2]);
        let coarse = Partition::from_labels(&[0, 0, 1, 1]);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(Partition::singletons(4).refines(&fine));
        assert!(fine.refines(&Partition::one_block(4)));
    }

    proptest! {
        #[test]
        fn relabelling_is_canonical(labels in proptest::collection::vec(0u8..6, 1..40), shift in 1u8..50) {
            let p = Partition::from_labels(&labels);
            let shifted: Vec<u8> = labels.iter().map(|l| l.wrapping_add(shift)).collect();
            prop_assert_eq!(&p, &Partition::from_labels(&shifted));
            prop_assert!(p.refines(&p));
            prop_assert_eq!(p.block_sizes().iter().sum::<usize>(), labels.len());
        }
    }
}
