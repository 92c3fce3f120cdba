//! Multiset of edge stems with O(log n) uniform draws.

use rand::Rng;

/// Per-node stem counts backed by a Fenwick tree over the counts.
#[derive(Debug, Clone)]
pub(crate) struct StemPool {
    counts: Vec<usize>,
    tree: Vec<usize>,
    total: usize,
}

impl StemPool {
    pub(crate) fn new(counts: Vec<usize>) -> Self {
        let n = counts.len();
        let mut tree = vec![0; n + 1];
        for (i, &c) in counts.iter().enumerate() {
            let mut j = i + 1;
            while j <= n {
                tree[j] += c;
                j += j & j.wrapping_neg();
            }
        }
        let total = counts.iter().sum();
        Self {
            counts,
            tree,
            total,
        }
    }

    pub(crate) fn total(&self) -> usize {
        self.total
    }

    pub(crate) fn count(&self, node: usize) -> usize {
        self.counts[node]
    }

    pub(crate) fn remove(&mut self, node: usize) {
        assert!(self.counts[node] > 0, "no stem left for node {node}");
        self.counts[node] -= 1;
        self.total -= 1;
        let n = self.counts.len();
        let mut j = node + 1;
        while j <= n {
            self.tree[j] -= 1;
            j += j & j.wrapping_neg();
        }
    }

    /// Draw a stem uniformly, i.e. a node with probability proportional to
    /// its remaining count, and remove it.
    pub(crate) fn pop<R: Rng>(&mut self, rng: &mut R) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        let mut target = rng.random_range(0..self.total);
        let n = self.counts.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        self.remove(pos);
        Some(pos)
    }
}
