//! Undirected edge sets over `p` nodes.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{bail, Result};

/// A set of unordered node pairs `(a, b)`, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EdgeSet {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(p: usize) -> Self {
        EdgeSet {
            p,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a set from pairs in any orientation. Self-loops and
    /// out-of-range nodes are rejected.
    pub fn from_pairs(p: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = EdgeSet::new(p);
        for (a, b) in pairs {
            out.insert(a, b)?;
        }
        Ok(out)
    }

    /// Complete graph on `p` nodes.
    pub fn complete(p: usize) -> Self {
        let mut edges = BTreeSet::new();
        for a in 0..p {
            for b in a + 1..p {
                edges.insert((a, b));
            }
        }
        EdgeSet { p, edges }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Returns `true` if the edge was new.
    pub fn insert(&mut self, a: usize, b: usize) -> Result<bool> {
        if a == b {
            bail!(InvalidInput, "self-loop at node {}", a);
        }
        if a >= self.p || b >= self.p {
            bail!(InvalidInput, "edge ({}, {}) outside {} nodes", a, b, self.p);
        }
        Ok(self.edges.insert((a.min(b), a.max(b))))
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Edges in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<(usize, usize)> {
        self.iter().collect()
    }

    pub fn intersection_len(&self, other: &EdgeSet) -> usize {
        self.edges.intersection(&other.edges).count()
    }

    pub fn symmetric_difference_len(&self, other: &EdgeSet) -> usize {
        self.edges.symmetric_difference(&other.edges).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0; self.p];
        for (a, b) in self.iter() {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Number of connected components (isolated nodes count).
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.p).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.p;
        for (a, b) in self.iter() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                count -= 1;
            }
        }
        count
    }

    /// Relabels nodes to match [`crate::matrix::BlockMatrix::permute_nodes`]:
    /// new node `k` is old node `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<EdgeSet> {
        if perm.len() != self.p {
            bail!(Shape, "permutation of length {} for p={}", perm.len(), self.p);
        }
        let mut inverse = alloc::vec![usize::MAX; self.p];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.p || inverse[old] != usize::MAX {
                bail!(InvalidInput, "not a permutation");
            }
            inverse[old] = new;
        }
        EdgeSet::from_pairs(self.p, self.iter().map(|(a, b)| (inverse[a], inverse[b])))
    }
}
