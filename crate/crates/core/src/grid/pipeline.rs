//! Extension pipelines: compute layer potentials near the surface only,
//! then recover values on the whole grid through a corrected Poisson
//! solve.
//!
//! The chain is: evaluate the potential on the cube faces with plain
//! kernels, blend those values into a smooth field w, evaluate the
//! regularized potential at grid points within 4h of the surface, form
//! the 15-point Laplacian right side (corrected near the surface,
//! -lap w or the momentum balance elsewhere), solve with the sine
//! transform, and add w back. Values and their differences inherit the
//! near-surface accuracy up to one order.

use super::dst::DstSolver;
use super::extension::extend_cube;
use super::laplacian::{grad4_axis, lap15_at};
use super::CubeGrid;
use crate::config::RegConfig;
use crate::eval::{EvalTarget, Evaluator, TargetClass};
use crate::quadrature::{NodeIndex, SurfaceQuadrature};
use crate::surface::{Surface, SurfacePoint, Vec3};
use crate::Result;

/// A grid node within 4h of the surface, carrying its classified target.
pub struct BandNode {
    pub grid_idx: usize,
    pub target: EvalTarget,
}

/// Distance field and near-surface bands of a grid relative to a surface.
pub struct GridBands {
    /// Unsigned distance to the surface where within the candidate
    /// band, infinity elsewhere.
    pub dist: Vec<f64>,
    /// Sign of the level set: strictly negative at the node.
    pub inside: Vec<bool>,
    /// Nodes within 4h, with targets ready for evaluation.
    pub band4: Vec<BandNode>,
}

impl GridBands {
    pub fn in_band2(&self, grid: &CubeGrid, idx: usize) -> bool {
        self.dist[idx] <= 2.0 * grid.h
    }
}

/// Classify every grid node against the surface. A generous first-order
/// distance estimate |phi| / |grad phi| prunes most of the grid; the
/// estimate can overestimate the true distance several times over where
/// the level set is far from linear, so the margin is wide and the
/// surviving nodes are filtered again by the distance to the nearest
/// quadrature node, which bounds the surface distance to within the node
/// spacing. The exact foot then comes from the node-seeded closest point
/// solve.
pub fn classify_grid<S: Surface + ?Sized>(
    surface: &S,
    grid: &CubeGrid,
    quad: &SurfaceQuadrature,
    index: &NodeIndex,
) -> Result<GridBands> {
    let h = grid.h;
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut inside = vec![false; grid.len()];
    let mut band4 = Vec::new();
    let on_tol = 1e-10 * surface.diameter();
    let d = grid.n + 1;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let idx = grid.idx(i, j, k);
                let p = grid.point(i, j, k);
                let ph = surface.phi(p);
                inside[idx] = ph < 0.0;
                let gn = surface.grad(p).norm();
                if gn < 1e-14 || ph.abs() / gn >= 26.0 * h {
                    continue;
                }
                let Some((seed, _)) = index.nearest(quad, p, 6.0 * h) else {
                    continue;
                };
                let cp = surface.closest_point_from(p, quad.nodes[seed])?;
                dist[idx] = cp.b.abs();
                if cp.b.abs() > 4.0 * h {
                    continue;
                }
                let target = if cp.b.abs() <= on_tol {
                    inside[idx] = false;
                    EvalTarget {
                        point: p,
                        class: TargetClass::OnSurface(SurfacePoint { b: 0.0, ..cp }),
                        chi: 0.5,
                        nearest: seed,
                    }
                } else {
                    EvalTarget {
                        point: p,
                        class: TargetClass::Near(cp),
                        chi: if cp.b < 0.0 { 1.0 } else { 0.0 },
                        nearest: seed,
                    }
                };
                band4.push(BandNode {
                    grid_idx: idx,
                    target,
                });
            }
        }
    }
    Ok(GridBands {
        dist,
        inside,
        band4,
    })
}

/// Far-field target for cube face points: every face lies outside the
/// surface and beyond its near band.
fn face_target(p: Vec3) -> EvalTarget {
    EvalTarget {
        point: p,
        class: TargetClass::Far,
        chi: 0.0,
        nearest: 0,
    }
}

/// Steps 2, 4 and 5 of the chain: blend `face` into w, assemble the
/// corrected right side from `uint` (valid on the 4h band, zero
/// elsewhere) and the optional `base_rhs` used beyond the 2h band, solve,
/// and return w plus the correction.
pub fn mayo_solve(
    grid: &CubeGrid,
    dst: &mut DstSolver,
    bands: &GridBands,
    face: &[f64],
    uint: &[f64],
    base_rhs: Option<&[f64]>,
) -> Vec<f64> {
    let w = extend_cube(grid, face);
    let n = grid.n;
    let mut rhs = vec![0.0; grid.interior_len()];
    let mut pos = 0;
    for i in 1..n {
        for j in 1..n {
            for k in 1..n {
                let idx = grid.idx(i, j, k);
                let mut v = -lap15_at(grid, &w, i, j, k);
                if bands.in_band2(grid, idx) {
                    v += lap15_at(grid, uint, i, j, k);
                } else if let Some(base) = base_rhs {
                    v += base[idx];
                }
                rhs[pos] = v;
                pos += 1;
            }
        }
    }
    dst.solve_poisson(grid, &mut rhs);
    let mut u = w;
    for i in 1..n {
        for j in 1..n {
            for k in 1..n {
                u[grid.idx(i, j, k)] += rhs[grid.interior_idx(i, j, k)];
            }
        }
    }
    u
}

/// Grid solution of the two-stage flow chain.
pub struct StokesGridSolution {
    pub p: Vec<f64>,
    pub grad_p: [Vec<f64>; 3],
    pub u: [Vec<f64>; 3],
    pub grad_u: [[Vec<f64>; 3]; 3],
}

/// One surface embedded in one grid, with everything classified and a
/// solver planned; runs the pipelines.
pub struct MayoChain<'a, S: Surface + ?Sized> {
    pub surface: &'a S,
    pub quad: &'a SurfaceQuadrature,
    pub grid: CubeGrid,
    pub cfg: RegConfig,
    pub delta: f64,
    pub bands: GridBands,
    dst: DstSolver,
}

impl<'a, S: Surface + ?Sized> MayoChain<'a, S> {
    pub fn new(
        surface: &'a S,
        quad: &'a SurfaceQuadrature,
        grid: CubeGrid,
        cfg: RegConfig,
        delta: f64,
    ) -> Result<Self> {
        let index = quad.node_index();
        let bands = classify_grid(surface, &grid, quad, &index)?;
        let dst = DstSolver::new(grid.n);
        Ok(MayoChain {
            surface,
            quad,
            grid,
            cfg,
            delta,
            bands,
            dst,
        })
    }

    fn evaluator(&self) -> Evaluator<'a> {
        Evaluator::new(self.quad, self.cfg, self.delta)
    }

    /// Visit all cube face nodes.
    fn for_faces(&self, mut visit: impl FnMut(usize, Vec3)) {
        let d = self.grid.n + 1;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if self.grid.on_face(i, j, k) {
                        visit(self.grid.idx(i, j, k), self.grid.point(i, j, k));
                    }
                }
            }
        }
    }

    /// Harmonic chain: single layer density f and double layer density g
    /// at the quadrature nodes, with `g_at` giving the double layer
    /// density at closest points for the band subtraction; returns u on
    /// the whole grid.
    pub fn harmonic(&mut self, f: &[f64], g: &[f64], g_at: impl Fn(Vec3) -> f64) -> Vec<f64> {
        let ev = self.evaluator();
        let mut face = vec![0.0; self.grid.len()];
        self.for_faces(|idx, p| {
            let t = face_target(p);
            face[idx] = ev.harmonic_single(f, &t) + ev.harmonic_double(g, &t);
        });
        let mut uint = vec![0.0; self.grid.len()];
        for bn in &self.bands.band4 {
            let g0 = match bn.target.foot() {
                Some(x0) => g_at(x0),
                None => g[bn.target.nearest],
            };
            uint[bn.grid_idx] =
                ev.harmonic_single(f, &bn.target) + ev.harmonic_double_with(g, g0, &bn.target);
        }
        mayo_solve(&self.grid, &mut self.dst, &self.bands, &face, &uint, None)
    }

    /// Two-stage flow chain for the single layer with density f, with
    /// `f_at` giving the density at closest points for the band
    /// subtractions: the pressure chain with zero extension inside the
    /// body and the exterior limit on the surface, then the velocity
    /// chain per component with the rigid velocity inside and the
    /// pressure gradient driving the right side beyond the band.
    pub fn stokes(
        &mut self,
        f: &[Vec3],
        body_velocity: Vec3,
        f_at: impl Fn(Vec3) -> Vec3,
    ) -> StokesGridSolution {
        let ev = self.evaluator();
        let foot_density = |t: &EvalTarget| match t.foot() {
            Some(x0) => f_at(x0),
            None => f[t.nearest],
        };
        let mut face = vec![0.0; self.grid.len()];
        self.for_faces(|idx, p| {
            face[idx] = ev.stokes_pressure(f, &face_target(p), 0.0);
        });
        let mut uint = vec![0.0; self.grid.len()];
        for bn in &self.bands.band4 {
            if !self.bands.inside[bn.grid_idx] {
                uint[bn.grid_idx] =
                    ev.stokes_pressure_with(f, foot_density(&bn.target), &bn.target, 0.0);
            }
        }
        let p = mayo_solve(&self.grid, &mut self.dst, &self.bands, &face, &uint, None);
        let grad_p = [
            grad4_axis(&self.grid, &p, 0),
            grad4_axis(&self.grid, &p, 1),
            grad4_axis(&self.grid, &p, 2),
        ];

        let mut face_u = [
            vec![0.0; self.grid.len()],
            vec![0.0; self.grid.len()],
            vec![0.0; self.grid.len()],
        ];
        self.for_faces(|idx, p| {
            let v = ev.stokes_single(f, &face_target(p), false);
            for c in 0..3 {
                face_u[c][idx] = v[c];
            }
        });
        let mut uint_u = [
            vec![0.0; self.grid.len()],
            vec![0.0; self.grid.len()],
            vec![0.0; self.grid.len()],
        ];
        for bn in &self.bands.band4 {
            let v = if self.bands.inside[bn.grid_idx] {
                body_velocity
            } else {
                let fn0 = match bn.target.class {
                    TargetClass::OnSurface(cp) | TargetClass::Near(cp) => {
                        foot_density(&bn.target).dot(&cp.normal)
                    }
                    TargetClass::Far => 0.0,
                };
                ev.stokes_single_with(f, fn0, &bn.target)
            };
            for c in 0..3 {
                uint_u[c][bn.grid_idx] = v[c];
            }
        }
        let u = [0, 1, 2].map(|c| {
            mayo_solve(
                &self.grid,
                &mut self.dst,
                &self.bands,
                &face_u[c],
                &uint_u[c],
                Some(&grad_p[c]),
            )
        });
        let grad_u = [0, 1, 2].map(|c| [0, 1, 2].map(|axis| grad4_axis(&self.grid, &u[c], axis)));
        StokesGridSolution {
            p,
            grad_p,
            u,
            grad_u,
        }
    }
}
