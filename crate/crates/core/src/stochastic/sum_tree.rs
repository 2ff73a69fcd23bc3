/// Complete binary tree of partial sums over non-negative leaf weights.
///
/// Updating a leaf recomputes the sums on its path to the root from the
/// children, so the stored totals never accumulate drift from repeated
/// add/subtract updates.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    base: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(weights: &[f64]) -> Self {
        let leaves = weights.len();
        let base = leaves.next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * base];
        nodes[base..base + leaves].copy_from_slice(weights);
        for i in (1..base).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self { leaves, base, nodes }
    }

    pub fn len(&self) -> usize {
        self.leaves
    }

    pub fn is_empty(&self) -> bool {
        self.leaves == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.base + i]
    }

    pub fn update(&mut self, i: usize, w: f64) {
        debug_assert!(i < self.leaves && w >= 0.0);
        let mut k = self.base + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf whose cumulative interval contains `u`, for `u` in `[0, total)`.
    ///
    /// Subtrees of zero weight are never entered, so a positive total always
    /// yields a leaf with positive weight even when rounding pushes `u` to
    /// the edge of an interval.
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.base {
            let left = self.nodes[2 * k];
            let right = self.nodes[2 * k + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_by_cumulative_weight() {
        let t = SumTree::new(&[1.0, 0.0, 2.0, 3.0, 0.5]);
        assert_eq!(t.total(), 6.5);
        assert_eq!(t.find(0.0), 0);
        assert_eq!(t.find(0.999), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.999), 2);
        assert_eq!(t.find(3.0), 3);
        assert_eq!(t.find(6.2), 4);
    }

    #[test]
    fn never_lands_on_zero_weight() {
        let t = SumTree::new(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        for u in [0.0, 0.5, 1.0, 1.5, 100.0] {
            assert_eq!(t.find(u), 1);
        }
    }

    #[test]
    fn updates_recompute_totals() {
        let mut t = SumTree::new(&[1.0; 7]);
        for _ in 0..1000 {
            t.update(3, 0.1);
            t.update(3, 1.0);
        }
        assert_eq!(t.total(), 7.0);
        t.update(6, 0.0);
        assert_eq!(t.total(), 6.0);
        assert_eq!(t.get(6), 0.0);
    }
}
