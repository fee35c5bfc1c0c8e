//! Uniform cube grids and the machinery to extend near-surface integral
//! values to every grid point: boundary-matched extensions, a fourth
//! order 15-point Laplacian, a sine-transform Poisson solver, and the
//! two-stage pipelines built from them.

pub mod dst;
pub mod extension;
pub mod laplacian;
pub mod pipeline;

pub use dst::DstSolver;
pub use pipeline::{GridBands, MayoChain};

use crate::surface::Vec3;

/// Node-centered grid over the cube [0, L]^3 with n cells per axis, so
/// n + 1 nodes per axis and L = n h. Values live in flat arrays indexed
/// by `idx`, with the last coordinate fastest.
#[derive(Clone, Copy, Debug)]
pub struct CubeGrid {
    pub n: usize,
    pub h: f64,
}

impl CubeGrid {
    pub fn new(n: usize, h: f64) -> Self {
        assert!(n >= 4, "grid too small for the 15-point stencil");
        CubeGrid { n, h }
    }

    /// Grid covering [0, side]^3 with spacing h; side must be an integer
    /// multiple of h to within roundoff.
    pub fn with_side(side: f64, h: f64) -> Self {
        let n = (side / h).round() as usize;
        assert!(
            ((n as f64) * h - side).abs() <= 1e-9 * side,
            "side is not a multiple of h"
        );
        Self::new(n, h)
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn points_per_axis(&self) -> usize {
        self.n + 1
    }

    /// Total node count (n+1)^3.
    pub fn len(&self) -> usize {
        let d = self.n + 1;
        d * d * d
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.n + 1;
        (i * d + j) * d + k
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(i as f64 * self.h, j as f64 * self.h, k as f64 * self.h)
    }

    pub fn on_face(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0 || j == 0 || k == 0 || i == self.n || j == self.n || k == self.n
    }

    /// Interior node count (n-1)^3, the size of the Poisson unknowns.
    pub fn interior_len(&self) -> usize {
        let m = self.n - 1;
        m * m * m
    }

    /// Index into interior-sized arrays for a node with 1 <= i,j,k <= n-1.
    pub fn interior_idx(&self, i: usize, j: usize, k: usize) -> usize {
        let m = self.n - 1;
        ((i - 1) * m + (j - 1)) * m + (k - 1)
    }

    /// Visit all nodes in index order.
    pub fn for_each(&self, mut visit: impl FnMut(usize, usize, usize, usize)) {
        let d = self.n + 1;
        let mut idx = 0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    visit(idx, i, j, k);
                    idx += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = CubeGrid::with_side(3.0, 3.0 / 24.0);
        assert_eq!(g.n, 24);
        assert_eq!(g.len(), 25 * 25 * 25);
        assert_eq!(g.idx(0, 0, 0), 0);
        assert_eq!(g.idx(0, 0, 1), 1);
        assert_eq!(g.idx(1, 0, 0), 25 * 25);
        let p = g.point(24, 0, 12);
        assert_eq!(p, Vec3::new(3.0, 0.0, 1.5));
        assert!(g.on_face(24, 3, 3));
        assert!(!g.on_face(1, 3, 3));
        assert_eq!(g.interior_len(), 23 * 23 * 23);
        assert_eq!(g.interior_idx(1, 1, 1), 0);
        assert_eq!(g.interior_idx(2, 1, 1), 23 * 23);
        let mut count = 0;
        g.for_each(|idx, i, j, k| {
            assert_eq!(idx, g.idx(i, j, k));
            count += 1;
        });
        assert_eq!(count, g.len());
    }
}
