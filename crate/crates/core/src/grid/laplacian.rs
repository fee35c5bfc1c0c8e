//! Fourth order difference operators on the cube grid.
//!
//! The 15-point Laplacian combines the usual 7-point Laplacian with the
//! average over the 8 cube corners around a node,
//! (2/(3h^2)) (h^2 lap7 u + C u / 8 - u), which is fourth order accurate
//! up to an (h^2/12) biharmonic term that the pipelines absorb into the
//! solve. One-dimensional derivatives use the five-point fourth order
//! stencils, one-sided near the cube faces.

use super::CubeGrid;

/// 15-point Laplacian at one interior node.
pub fn lap15_at(grid: &CubeGrid, u: &[f64], i: usize, j: usize, k: usize) -> f64 {
    let c = u[grid.idx(i, j, k)];
    let d7 = u[grid.idx(i + 1, j, k)]
        + u[grid.idx(i - 1, j, k)]
        + u[grid.idx(i, j + 1, k)]
        + u[grid.idx(i, j - 1, k)]
        + u[grid.idx(i, j, k + 1)]
        + u[grid.idx(i, j, k - 1)]
        - 6.0 * c;
    let mut corners = 0.0;
    for di in [-1isize, 1] {
        for dj in [-1isize, 1] {
            for dk in [-1isize, 1] {
                corners += u[grid.idx(
                    (i as isize + di) as usize,
                    (j as isize + dj) as usize,
                    (k as isize + dk) as usize,
                )];
            }
        }
    }
    (2.0 / (3.0 * grid.h * grid.h)) * (d7 + corners / 8.0 - c)
}

/// 15-point Laplacian at all interior nodes, returned in interior
/// ordering.
pub fn lap15(grid: &CubeGrid, u: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), grid.len());
    let n = grid.n;
    let mut out = vec![0.0; grid.interior_len()];
    let mut idx = 0;
    for i in 1..n {
        for j in 1..n {
            for k in 1..n {
                out[idx] = lap15_at(grid, u, i, j, k);
                idx += 1;
            }
        }
    }
    out
}

/// Symbol of the 15-point Laplacian on the product sine mode
/// (m1, m2, m3), each in 1..n.
pub fn lap15_symbol(grid: &CubeGrid, m: [usize; 3]) -> f64 {
    let c: Vec<f64> = m
        .iter()
        .map(|&mi| (mi as f64 * std::f64::consts::PI / grid.n as f64).cos())
        .collect();
    (2.0 / (3.0 * grid.h * grid.h)) * (2.0 * (c[0] + c[1] + c[2] - 3.0) + c[0] * c[1] * c[2] - 1.0)
}

/// Fourth order first derivative along one axis at every node, using the
/// symmetric five-point stencil away from the faces and one-sided
/// stencils at and next to them.
pub fn grad4_axis(grid: &CubeGrid, u: &[f64], axis: usize) -> Vec<f64> {
    assert_eq!(u.len(), grid.len());
    let n = grid.n;
    let inv = 1.0 / (12.0 * grid.h);
    let stride = match axis {
        0 => (grid.n + 1) * (grid.n + 1),
        1 => grid.n + 1,
        2 => 1,
        _ => panic!("axis out of range"),
    };
    let mut out = vec![0.0; grid.len()];
    grid.for_each(|idx, i, j, k| {
        let pos = [i, j, k][axis];
        let at = |p: usize| u[idx + p * stride - pos * stride];
        out[idx] = inv
            * if pos >= 2 && pos + 2 <= n {
                at(pos - 2) - 8.0 * at(pos - 1) + 8.0 * at(pos + 1) - at(pos + 2)
            } else if pos == 0 {
                -25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)
            } else if pos == 1 {
                -3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)
            } else if pos == n - 1 {
                3.0 * at(n) + 10.0 * at(n - 1) - 18.0 * at(n - 2) + 6.0 * at(n - 3) - at(n - 4)
            } else {
                25.0 * at(n) - 48.0 * at(n - 1) + 36.0 * at(n - 2) - 16.0 * at(n - 3)
                    + 3.0 * at(n - 4)
            };
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &CubeGrid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let mut u = vec![0.0; grid.len()];
        grid.for_each(|idx, i, j, k| {
            let p = grid.point(i, j, k);
            u[idx] = f(p.x, p.y, p.z);
        });
        u
    }

    #[test]
    fn lap15_exact_on_quadratics() {
        let grid = CubeGrid::with_side(3.0, 3.0 / 16.0);
        let u = sample(&grid, |x, y, z| {
            x * x + 0.5 * y * y - 2.0 * z * z + x * y - 3.0 * x + 1.0
        });
        let l = lap15(&grid, &u);
        for v in &l {
            assert!((v - (2.0 + 1.0 - 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn lap15_symbol_matches_operator() {
        let grid = CubeGrid::with_side(3.0, 3.0 / 16.0);
        let m = [3usize, 5, 2];
        let l = grid.side();
        let u = sample(&grid, |x, y, z| {
            (m[0] as f64 * std::f64::consts::PI * x / l).sin()
                * (m[1] as f64 * std::f64::consts::PI * y / l).sin()
                * (m[2] as f64 * std::f64::consts::PI * z / l).sin()
        });
        let lam = lap15_symbol(&grid, m);
        assert!(lam < 0.0);
        let lu = lap15(&grid, &u);
        let n = grid.n;
        let mut worst: f64 = 0.0;
        for i in 1..n {
            for j in 1..n {
                for k in 1..n {
                    let expect = lam * u[grid.idx(i, j, k)];
                    worst = worst.max((lu[grid.interior_idx(i, j, k)] - expect).abs());
                }
            }
        }
        assert!(worst < 1e-9, "symbol mismatch {worst:.2e}");
    }

    #[test]
    fn grad4_exact_on_quartics() {
        let grid = CubeGrid::new(12, 0.25);
        let u = sample(&grid, |x, y, z| {
            x.powi(4) - 2.0 * x.powi(3) * y + z.powi(4) + x * y * z
        });
        let dx = grad4_axis(&grid, &u, 0);
        let dz = grad4_axis(&grid, &u, 2);
        grid.for_each(|idx, i, j, k| {
            let p = grid.point(i, j, k);
            let ex = 4.0 * p.x.powi(3) - 6.0 * p.x * p.x * p.y + p.y * p.z;
            let ez = 4.0 * p.z.powi(3) + p.x * p.y;
            assert!((dx[idx] - ex).abs() < 1e-10, "dx at ({i},{j},{k})");
            assert!((dz[idx] - ez).abs() < 1e-10, "dz at ({i},{j},{k})");
        });
    }

    #[test]
    fn grad4_converges_at_fourth_order() {
        let f = |x: f64, _y: f64, _z: f64| (1.7 * x).sin();
        let df = |x: f64| 1.7 * (1.7 * x).cos();
        let mut errs = Vec::new();
        for n in [8usize, 16] {
            let grid = CubeGrid::with_side(1.0, 1.0 / n as f64);
            let u = sample(&grid, f);
            let dx = grad4_axis(&grid, &u, 0);
            let mut worst: f64 = 0.0;
            grid.for_each(|idx, i, _j, _k| {
                worst = worst.max((dx[idx] - df(i as f64 * grid.h)).abs());
            });
            errs.push(worst);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.7, "order {order:.2}");
    }
}
