//! Boundary-matched smooth extensions into the cube.
//!
//! Given values on the faces of the cube, the transfinite blend
//! F - E + C (face, edge, and corner terms with linear weights) produces
//! a smooth function on the whole cube that agrees with the data on all
//! six faces. Subtracting it reduces a problem with general boundary
//! values to one with homogeneous Dirichlet data.

use super::CubeGrid;

fn ell(w: f64, end: usize) -> f64 {
    if end == 1 {
        w
    } else {
        1.0 - w
    }
}

/// Blend face values into the cube. `face` is a full grid array whose
/// boundary entries hold the data; interior entries are ignored. The
/// result agrees with `face` on the boundary.
pub fn extend_cube(grid: &CubeGrid, face: &[f64]) -> Vec<f64> {
    let n = grid.n;
    assert_eq!(face.len(), grid.len());
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut w = vec![0.0; grid.len()];
    grid.for_each(|idx, i, j, k| {
        let (x1, x2, x3) = (xs[i], xs[j], xs[k]);
        let mut acc = 0.0;
        for r in 0..2 {
            let rn = r * n;
            acc += ell(x1, r) * face[grid.idx(rn, j, k)];
            acc += ell(x2, r) * face[grid.idx(i, rn, k)];
            acc += ell(x3, r) * face[grid.idx(i, j, rn)];
        }
        for r in 0..2 {
            for s in 0..2 {
                let (rn, sn) = (r * n, s * n);
                acc -= ell(x2, r) * ell(x3, s) * face[grid.idx(i, rn, sn)];
                acc -= ell(x1, r) * ell(x3, s) * face[grid.idx(rn, j, sn)];
                acc -= ell(x1, r) * ell(x2, s) * face[grid.idx(rn, sn, k)];
            }
        }
        for r in 0..2 {
            for s in 0..2 {
                for t in 0..2 {
                    acc +=
                        ell(x1, r) * ell(x2, s) * ell(x3, t) * face[grid.idx(r * n, s * n, t * n)];
                }
            }
        }
        w[idx] = acc;
    });
    w
}
