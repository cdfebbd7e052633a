//! Sets of root-to-sink paths, stored as bitsets over an enumerated path
//! space.

use fixedbitset::FixedBitSet;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathSet {
    bits: FixedBitSet,
}

impl PathSet {
    pub fn empty(universe: usize) -> Self {
        PathSet {
            bits: FixedBitSet::with_capacity(universe),
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        bits.insert_range(..);
        PathSet { bits }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, path: usize) {
        self.bits.insert(path);
    }

    pub fn contains(&self, path: usize) -> bool {
        self.bits.contains(path)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn union(&self, other: &PathSet) -> PathSet {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        PathSet { bits }
    }

    pub fn intersection(&self, other: &PathSet) -> PathSet {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        PathSet { bits }
    }

    pub fn difference(&self, other: &PathSet) -> PathSet {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        PathSet { bits }
    }

    pub fn complement(&self) -> PathSet {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        PathSet { bits }
    }

    pub fn union_with(&mut self, other: &PathSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn is_subset(&self, other: &PathSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &PathSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    /// Σ of `weights` over the members.
    pub fn measure(&self, weights: &[f64]) -> f64 {
        self.iter().map(|i| weights[i]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = PathSet::from_indices(6, [0, 1, 2]);
        let b = PathSet::from_indices(6, [2, 3]);
        assert_eq!(a.union(&b).len(), 4);
        assert_eq!(a.intersection(&b).iter().collect::<Vec<_>>(), vec![2]);
        assert_eq!(a.difference(&b).len(), 2);
        assert_eq!(a.complement().iter().collect::<Vec<_>>(), vec![3, 4, 5]);
        assert!(PathSet::from_indices(6, [1]).is_subset(&a));
        assert!(a.difference(&b).is_disjoint(&b));
        assert_eq!(PathSet::full(6).len(), 6);
        assert!(PathSet::empty(6).is_empty());
    }

    #[test]
    fn measure_sums_weights() {
        let w = [0.1, 0.2, 0.3, 0.4];
        assert!((PathSet::from_indices(4, [1, 3]).measure(&w) - 0.6).abs() < 1e-15);
    }
}
