//! A static 3D k-d tree for nearest-neighbor queries.
//!
//! Median-split over the longest axis of each node's point set; queries
//! compute squared distances with the same expression a brute-force scan
//! would, so results agree with an all-pairs oracle exactly.

use crate::math::{Aabb, Vec3};

#[derive(Debug, Clone)]
pub struct KdTree3 {
    points: Vec<Vec3>,
    axes: Vec<u8>,
}

impl KdTree3 {
    /// Builds a tree over the given points. Empty input is allowed; queries
    /// then return infinity.
    pub fn build(points: &[Vec3]) -> Self {
        let mut tree = KdTree3 {
            points: points.to_vec(),
            axes: vec![0; points.len()],
        };
        if !points.is_empty() {
            let n = tree.points.len();
            tree.split(0, n);
        }
        tree
    }

    fn split(&mut self, lo: usize, hi: usize) {
        if hi - lo <= 1 {
            return;
        }
        let bounds = Aabb::from_points(self.points[lo..hi].iter().copied());
        let axis = bounds.longest_axis();
        let mid = lo + (hi - lo) / 2;
        self.points[lo..hi]
            .select_nth_unstable_by(mid - lo, |a, b| a.axis(axis).total_cmp(&b.axis(axis)));
        self.axes[mid] = axis as u8;
        self.split(lo, mid);
        self.split(mid + 1, hi);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance from `q` to its nearest neighbor in the tree.
    pub fn nearest_dist_sq(&self, q: Vec3) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        self.search(0, self.points.len(), q, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, q: Vec3, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let node = self.points[mid];
        let d = (node - q).norm_sq();
        if d < *best {
            *best = d;
        }
        if hi - lo == 1 {
            return;
        }
        let axis = self.axes[mid] as usize;
        let delta = q.axis(axis) - node.axis(axis);
        let (near_lo, near_hi, far_lo, far_hi) = if delta < 0.0 {
            (lo, mid, mid + 1, hi)
        } else {
            (mid + 1, hi, lo, mid)
        };
        self.search(near_lo, near_hi, q, best);
        if delta * delta < *best {
            self.search(far_lo, far_hi, q, best);
        }
    }
}
