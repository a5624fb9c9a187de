//! Sorted sets of feature indices.
//!
//! Indices are 0-based in memory and 1-based whenever they are serialized,
//! so JSON and CLI output match the usual `z_1, ..., z_d` notation.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Strictly increasing list of distinct 0-based indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    /// Builds a set from arbitrary indices; duplicates are dropped.
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }

    pub fn range(lo: usize, hi: usize) -> Self {
        IndexSet((lo..hi).collect())
    }

    /// Builds a set from 1-based indices. Zero is rejected.
    pub fn from_one_based(indices: &[usize]) -> Option<Self> {
        if indices.contains(&0) {
            return None;
        }
        Some(Self::new(indices.iter().map(|&i| i - 1)))
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// True when every element is below `d`.
    pub fn within(&self, d: usize) -> bool {
        self.last().is_none_or(|l| l < d)
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        IndexSet::new(self.iter().chain(other.iter()))
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.iter().filter(|&i| !other.contains(i)).collect())
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        IndexSet(self.iter().filter(|&i| other.contains(i)).collect())
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| !other.contains(i))
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn with(&self, i: usize) -> IndexSet {
        IndexSet::new(self.iter().chain(std::iter::once(i)))
    }

    pub fn without(&self, i: usize) -> IndexSet {
        IndexSet(self.iter().filter(|&j| j != i).collect())
    }

    /// `[0, d) \ self`.
    pub fn complement(&self, d: usize) -> IndexSet {
        IndexSet((0..d).filter(|&i| !self.contains(i)).collect())
    }

    /// Membership mask of length `d`.
    pub fn mask(&self, d: usize) -> Vec<bool> {
        let mut m = vec![false; d];
        for i in self.iter() {
            m[i] = true;
        }
        m
    }

    /// Bit mask for `d <= 64`.
    pub fn bits(&self) -> u64 {
        self.iter().fold(0u64, |acc, i| acc | (1u64 << i))
    }

    pub fn map(&self, f: impl Fn(usize) -> usize) -> IndexSet {
        IndexSet::new(self.iter().map(f))
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        IndexSet::new(iter)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IndexSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(deserializer)?;
        IndexSet::from_one_based(&raw).ok_or_else(|| serde::de::Error::custom("indices are 1-based; 0 is not allowed"))
    }
}
