//! Drivers for the convergence experiments shared by the command line
//! tool and the acceptance tests. Each driver assembles geometry,
//! densities, and evaluation targets, runs a ladder of grid spacings,
//! and reports max and root mean square errors together with the
//! observed orders between levels.

use std::time::Instant;

use crate::config::RegConfig;
use crate::eval::{classify, node_target, Evaluator};
use crate::fields::{
    cubic_harmonic_density, cubic_harmonic_double, cubic_harmonic_single, interfacial_force,
    rotation_density, HarmonicPair, SpheroidTraction,
};
use crate::grid::pipeline::StokesGridSolution;
use crate::grid::{CubeGrid, MayoChain};
use crate::io::{ConvergenceRow, TargetRow};
use crate::quadrature::{NodeIndex, SurfaceQuadrature};
use crate::rng::uniform_at;
use crate::surface::{Ellipsoid, Molecular, Rotated, Sphere, Surface, Vec3};
use crate::two_phase::TwoSurfaceStokes;
use crate::Result;

/// Max and root mean square of a set of error magnitudes.
pub fn error_norms(errs: &[f64]) -> (f64, f64) {
    assert!(!errs.is_empty(), "no errors to reduce");
    let max = errs.iter().cloned().fold(0.0, f64::max);
    let l2 = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
    (max, l2)
}

/// Order observed between errors at spacings h and h/2.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Lattice points within one spacing of the surface, excluding points
/// on it, thinned with probability `per_area` h^2 per point so the
/// expected count stays near 2 A `per_area` at every resolution. Each
/// point comes back with its signed distance. Deterministic in the
/// seed.
pub fn shell_targets<S: Surface + ?Sized>(
    surface: &S,
    quad: &SurfaceQuadrature,
    index: &NodeIndex,
    per_area: f64,
    seed: u64,
) -> Result<Vec<(Vec3, f64)>> {
    let h = quad.h;
    let keep = (per_area * h * h).min(1.0);
    let (lo, hi) = surface.bounds();
    let range = |a: f64, b: f64| {
        (
            ((a - 2.0 * h) / h).ceil() as i64,
            ((b + 2.0 * h) / h).floor() as i64,
        )
    };
    let (ix0, ix1) = range(lo.x, hi.x);
    let (iy0, iy1) = range(lo.y, hi.y);
    let (iz0, iz1) = range(lo.z, hi.z);
    let mut out = Vec::new();
    let mut counter = 0_u64;
    for i in ix0..=ix1 {
        for j in iy0..=iy1 {
            for k in iz0..=iz1 {
                counter += 1;
                if uniform_at(seed, counter) >= keep {
                    continue;
                }
                let p = Vec3::new(i as f64 * h, j as f64 * h, k as f64 * h);
                let ph = surface.phi(p);
                let gn = surface.grad(p).norm();
                if gn < 1e-14 || ph.abs() / gn > 4.0 * h {
                    continue;
                }
                let Some((s, _)) = index.nearest(quad, p, 3.0 * h) else {
                    continue;
                };
                let cp = surface.closest_point_from(p, quad.nodes[s])?;
                if cp.b.abs() <= h && cp.b.abs() > 1e-12 {
                    out.push((p, cp.b));
                }
            }
        }
    }
    Ok(out)
}

/// One rung of a refinement ladder over a cloud of targets.
#[derive(Clone, Debug)]
pub struct LevelResult {
    pub h: f64,
    pub delta: f64,
    pub n_targets: usize,
    pub err_max: f64,
    pub err_l2: f64,
    pub wall_time_s: f64,
    pub targets: Vec<TargetRow>,
}

/// Levels of one experiment, finest last.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub experiment: String,
    pub levels: Vec<LevelResult>,
}

impl Ladder {
    /// Observed max norm orders, None at the coarsest level. Computed
    /// against the actual spacing ratio, which reduces to the log base
    /// two ratio on halving ladders.
    pub fn orders_max(&self) -> Vec<Option<f64>> {
        self.pairwise(|a, b| (a.err_max / b.err_max).ln() / (a.h / b.h).ln())
    }

    /// Observed root mean square orders, None at the coarsest level.
    pub fn orders_l2(&self) -> Vec<Option<f64>> {
        self.pairwise(|a, b| (a.err_l2 / b.err_l2).ln() / (a.h / b.h).ln())
    }

    fn pairwise(&self, f: impl Fn(&LevelResult, &LevelResult) -> f64) -> Vec<Option<f64>> {
        if self.levels.is_empty() {
            return Vec::new();
        }
        let mut out = vec![None];
        for w in self.levels.windows(2) {
            out.push(Some(f(&w[0], &w[1])));
        }
        out
    }

    /// Summary rows for the table writer.
    pub fn rows(&self, cfg: &RegConfig, seed: u64) -> Vec<ConvergenceRow> {
        let om = self.orders_max();
        let ol = self.orders_l2();
        self.levels
            .iter()
            .enumerate()
            .map(|(i, lv)| ConvergenceRow {
                experiment: self.experiment.clone(),
                h: lv.h,
                delta: lv.delta,
                p: cfg.order.p(),
                q: cfg.q,
                kappa0: cfg.kappa0,
                n_targets: lv.n_targets,
                err_max: lv.err_max,
                err_l2: lv.err_l2,
                order_max: om[i],
                order_l2: ol[i],
                seed,
                wall_time_s: lv.wall_time_s,
            })
            .collect()
    }
}

fn finish_level(
    h: f64,
    delta: f64,
    start: Instant,
    rows: Vec<(Vec3, f64, Vec<f64>, Vec<f64>)>,
) -> LevelResult {
    let mut errs = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    for (p, b, computed, exact) in rows {
        let err = computed
            .iter()
            .zip(&exact)
            .map(|(c, e)| (c - e) * (c - e))
            .sum::<f64>()
            .sqrt();
        errs.push(err);
        targets.push(TargetRow {
            point: p,
            b: Some(b),
            computed,
            exact: Some(exact),
            abs_error: err,
        });
    }
    let (err_max, err_l2) = error_norms(&errs);
    LevelResult {
        h,
        delta,
        n_targets: targets.len(),
        err_max,
        err_l2,
        wall_time_s: start.elapsed().as_secs_f64(),
        targets,
    }
}

/// Which layer potential of the cubic density over the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SphereLayer {
    Single,
    Double,
}

/// Single or double layer of the cubic harmonic density over the unit
/// sphere, measured against the closed forms at lattice points within
/// one spacing of the surface.
pub fn sphere_layer(
    layer: SphereLayer,
    cfg: &RegConfig,
    h_list: &[f64],
    per_area: f64,
    seed: u64,
) -> Result<Ladder> {
    let sphere = Sphere::new(Vec3::zeros(), 1.0);
    let mut levels = Vec::new();
    for &h in h_list {
        let start = Instant::now();
        let quad = SurfaceQuadrature::build(&sphere, h)?;
        let index = quad.node_index();
        let delta = cfg.delta(h);
        let ev = Evaluator::new(&quad, *cfg, delta);
        let dens: Vec<f64> = quad
            .nodes
            .iter()
            .map(|&x| cubic_harmonic_density(x))
            .collect();
        let mut rows = Vec::new();
        for (p, b) in shell_targets(&sphere, &quad, &index, per_area, seed)? {
            let t = classify(&sphere, &quad, &index, p, cfg, delta)?;
            let (c, e) = match layer {
                SphereLayer::Single => (ev.harmonic_single(&dens, &t), cubic_harmonic_single(p)),
                SphereLayer::Double => {
                    let g0 = t.foot().map_or(0.0, cubic_harmonic_density);
                    (
                        ev.harmonic_double_with(&dens, g0, &t),
                        cubic_harmonic_double(p),
                    )
                }
            };
            rows.push((p, b, vec![c], vec![e]));
        }
        levels.push(finish_level(h, delta, start, rows));
    }
    let experiment = match layer {
        SphereLayer::Single => "sphere-sl",
        SphereLayer::Double => "sphere-dl",
    };
    Ok(Ladder {
        experiment: experiment.to_string(),
        levels,
    })
}

/// Geometry for the combined layer test, where the sum of a single and
/// a double layer built from the jump data of a harmonic field must
/// reproduce the field inside and zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombinedSurface {
    /// Four overlapping spheres at the vertices of a tetrahedron.
    Molecular,
    /// Ellipsoid with semiaxes (1, 0.6, 0.4).
    EllipsoidA,
    /// Ellipsoid with semiaxes (1, 0.4, 0.3).
    EllipsoidB,
}

impl CombinedSurface {
    fn build(self) -> Box<dyn Surface> {
        match self {
            CombinedSurface::Molecular => Box::new(Molecular::tetrahedron(Vec3::zeros())),
            CombinedSurface::EllipsoidA => {
                Box::new(Ellipsoid::new(Vec3::zeros(), Vec3::new(1.0, 0.6, 0.4)))
            }
            CombinedSurface::EllipsoidB => {
                Box::new(Ellipsoid::new(Vec3::zeros(), Vec3::new(1.0, 0.4, 0.3)))
            }
        }
    }

    /// Target density per unit area chosen so each surface yields on
    /// the order of a thousand points.
    pub fn per_area(self) -> f64 {
        match self {
            CombinedSurface::Molecular => 85.0,
            CombinedSurface::EllipsoidA => 120.0,
            CombinedSurface::EllipsoidB => 180.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CombinedSurface::Molecular => "molecular",
            CombinedSurface::EllipsoidA => "ellipsoid-a",
            CombinedSurface::EllipsoidB => "ellipsoid-b",
        }
    }
}

/// Combined single plus double layer with the jump densities of the
/// interior harmonic field, compared against the field inside and zero
/// outside.
pub fn combined_layer(
    which: CombinedSurface,
    cfg: &RegConfig,
    h_list: &[f64],
    seed: u64,
) -> Result<Ladder> {
    let surface = which.build();
    let hp = HarmonicPair::interior_only();
    let mut levels = Vec::new();
    for &h in h_list {
        let start = Instant::now();
        let quad = SurfaceQuadrature::build(surface.as_ref(), h)?;
        let index = quad.node_index();
        let delta = cfg.delta(h);
        let ev = Evaluator::new(&quad, *cfg, delta);
        let f: Vec<f64> = (0..quad.len())
            .map(|j| hp.single_density(quad.nodes[j], quad.normals[j]))
            .collect();
        let g: Vec<f64> = quad.nodes.iter().map(|&x| hp.double_density(x)).collect();
        let mut rows = Vec::new();
        for (p, b) in shell_targets(surface.as_ref(), &quad, &index, which.per_area(), seed)? {
            let t = classify(surface.as_ref(), &quad, &index, p, cfg, delta)?;
            let g0 = t.foot().map_or(0.0, |x0| hp.double_density(x0));
            let c = ev.harmonic_single(&f, &t) + ev.harmonic_double_with(&g, g0, &t);
            let e = hp.value(p, b < 0.0);
            rows.push((p, b, vec![c], vec![e]));
        }
        levels.push(finish_level(h, delta, start, rows));
    }
    Ok(Ladder {
        experiment: which.name().to_string(),
        levels,
    })
}

/// Stresslet of the rigid rotation density over a prolate spheroid,
/// compared against the rotation inside and zero outside.
pub fn stresslet_identity(cfg: &RegConfig, h_list: &[f64], seed: u64) -> Result<Ladder> {
    let spheroid = Ellipsoid::new(Vec3::zeros(), Vec3::new(1.0, 0.5, 0.5));
    let mut levels = Vec::new();
    for &h in h_list {
        let start = Instant::now();
        let quad = SurfaceQuadrature::build(&spheroid, h)?;
        let index = quad.node_index();
        let delta = cfg.delta(h);
        let ev = Evaluator::new(&quad, *cfg, delta);
        let dens: Vec<Vec3> = quad.nodes.iter().map(|&x| rotation_density(x)).collect();
        let mut rows = Vec::new();
        for (p, b) in shell_targets(&spheroid, &quad, &index, 120.0, seed)? {
            let t = classify(&spheroid, &quad, &index, p, cfg, delta)?;
            let q0 = t.foot().map_or(Vec3::zeros(), rotation_density);
            let c = ev.stokes_double_with(&dens, q0, &t);
            let e = rotation_density(p) * t.chi;
            rows.push((p, b, vec![c.x, c.y, c.z], vec![e.x, e.y, e.z]));
        }
        levels.push(finish_level(h, delta, start, rows));
    }
    Ok(Ladder {
        experiment: "stresslet-identity".to_string(),
        levels,
    })
}

/// Single layer of the outward normal field over a prolate spheroid,
/// which vanishes identically. Evaluated at a seeded subset of the
/// quadrature nodes without the subtraction, which would cancel the
/// integrand pointwise here. Off the surface the unsubtracted form
/// carries an error proportional to the distance, so the identity is a
/// clean order probe only at points on the surface itself.
pub fn stokeslet_normal(cfg: &RegConfig, h_list: &[f64], seed: u64) -> Result<Ladder> {
    let spheroid = Ellipsoid::new(Vec3::zeros(), Vec3::new(1.0, 0.5, 0.5));
    let mut levels = Vec::new();
    for &h in h_list {
        let start = Instant::now();
        let quad = SurfaceQuadrature::build(&spheroid, h)?;
        let delta = cfg.delta(h);
        let ev = Evaluator::new(&quad, *cfg, delta);
        let keep = (1200.0 / quad.len() as f64).min(1.0);
        let mut rows = Vec::new();
        for j in 0..quad.len() {
            if uniform_at(seed, j as u64 + 1) >= keep {
                continue;
            }
            let c = ev.stokes_single(&quad.normals, &node_target(&quad, j), false);
            rows.push((quad.nodes[j], 0.0, vec![c.x, c.y, c.z], vec![0.0, 0.0, 0.0]));
        }
        levels.push(finish_level(h, delta, start, rows));
    }
    Ok(Ladder {
        experiment: "stokeslet-normal".to_string(),
        levels,
    })
}

/// One level of the grid chain for the harmonic pair around the
/// molecular surface, with errors of the solution and of its first
/// axis divided differences.
pub struct HarmonicGridLevel {
    pub n: usize,
    pub h: f64,
    pub err_u: (f64, f64),
    pub err_du: (f64, f64),
    pub n_u: usize,
    pub n_du: usize,
    pub wall_time_s: f64,
    pub grid: CubeGrid,
    pub u: Vec<f64>,
}

/// Solve the harmonic chain on an n-cell cube over [0, 3]^3 with the
/// molecular surface at its center and compare against the harmonic
/// pair. Nodes on the surface are skipped; divided differences are
/// compared where both ends are off the surface.
pub fn harmonic_grid_level(cfg: &RegConfig, n: usize) -> Result<HarmonicGridLevel> {
    let start = Instant::now();
    let h = 3.0 / n as f64;
    let center = Vec3::new(1.5, 1.5, 1.5);
    let mol = Molecular::tetrahedron(center);
    let quad = SurfaceQuadrature::build(&mol, h)?;
    let hp = HarmonicPair::with_decaying_exterior(center);
    let f: Vec<f64> = (0..quad.len())
        .map(|j| hp.single_density(quad.nodes[j], quad.normals[j]))
        .collect();
    let g: Vec<f64> = quad.nodes.iter().map(|&x| hp.double_density(x)).collect();
    let grid = CubeGrid::new(n, h);
    let delta = cfg.delta(h);
    let mut chain = MayoChain::new(&mol, &quad, grid, *cfg, delta)?;
    let u = chain.harmonic(&f, &g, |x| hp.double_density(x));

    let d = n + 1;
    let mut ok = vec![false; grid.len()];
    let mut exact = vec![0.0; grid.len()];
    let mut errs_u = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let idx = grid.idx(i, j, k);
                let p = grid.point(i, j, k);
                let ph = mol.phi(p);
                if ph.abs() <= 1e-10 * mol.grad(p).norm() {
                    continue;
                }
                ok[idx] = true;
                exact[idx] = hp.value(p, ph < 0.0);
                errs_u.push((u[idx] - exact[idx]).abs());
            }
        }
    }
    let mut errs_du = Vec::new();
    for i in 0..d - 1 {
        for j in 0..d {
            for k in 0..d {
                let a = grid.idx(i, j, k);
                let b = grid.idx(i + 1, j, k);
                if ok[a] && ok[b] {
                    let du = (u[b] - u[a]) / h;
                    let de = (exact[b] - exact[a]) / h;
                    errs_du.push((du - de).abs());
                }
            }
        }
    }
    Ok(HarmonicGridLevel {
        n,
        h,
        err_u: error_norms(&errs_u),
        err_du: error_norms(&errs_du),
        n_u: errs_u.len(),
        n_du: errs_du.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        grid,
        u,
    })
}

/// Harmonic grid chain over a ladder of cube resolutions.
pub fn harmonic_grid(cfg: &RegConfig, n_list: &[usize]) -> Result<Vec<HarmonicGridLevel>> {
    n_list
        .iter()
        .map(|&n| harmonic_grid_level(cfg, n))
        .collect()
}

/// One level of the flow chain for the translating spheroid.
pub struct StokesGridLevel {
    pub n: usize,
    pub h: f64,
    /// Largest deviation of the on-surface single layer from the body
    /// velocity over a node subsample.
    pub bc_err: f64,
    pub wall_time_s: f64,
    pub grid: CubeGrid,
    pub sol: StokesGridSolution,
    pub dist: Vec<f64>,
    pub inside: Vec<bool>,
}

/// Solve the flow chain on an n-cell cube over [0, 3]^3 for the
/// spheroid translating along its long axis, driven by the classical
/// traction.
pub fn stokes_grid_level(cfg: &RegConfig, n: usize) -> Result<StokesGridLevel> {
    let start = Instant::now();
    let h = 3.0 / n as f64;
    let center = Vec3::new(1.5, 1.5, 1.5);
    let spheroid = Ellipsoid::new(center, Vec3::new(1.0, 0.5, 0.5));
    let quad = SurfaceQuadrature::build(&spheroid, h)?;
    let traction = SpheroidTraction::new(1.0, 0.5, 1.0, 1.0);
    let f: Vec<Vec3> = quad
        .nodes
        .iter()
        .map(|&x| traction.density(x - center))
        .collect();
    let body_velocity = Vec3::new(1.0, 0.0, 0.0);
    let grid = CubeGrid::new(n, h);
    let delta = cfg.delta(h);
    let mut chain = MayoChain::new(&spheroid, &quad, grid, *cfg, delta)?;
    let sol = chain.stokes(&f, body_velocity, |x| traction.density(x - center));

    let ev = Evaluator::new(&quad, *cfg, delta);
    let step = (quad.len() / 2000).max(1);
    let mut bc_err = 0.0_f64;
    for j in (0..quad.len()).step_by(step) {
        let v = ev.stokes_single(&f, &node_target(&quad, j), true);
        bc_err = bc_err.max((v - body_velocity).norm());
    }
    let MayoChain { bands, .. } = chain;
    Ok(StokesGridLevel {
        n,
        h,
        bc_err,
        wall_time_s: start.elapsed().as_secs_f64(),
        grid,
        sol,
        dist: bands.dist,
        inside: bands.inside,
    })
}

/// Max and root mean square differences between two consecutive flow
/// levels on their common lattice: pressure and velocity at nodes
/// outside or on the surface, velocity gradient at nodes farther than
/// twice the coarse spacing from it.
pub struct StokesGridDiff {
    pub d_p: (f64, f64),
    pub d_u: (f64, f64),
    pub d_gu: (f64, f64),
    pub n_pu: usize,
    pub n_gu: usize,
}

pub fn stokes_grid_diff(coarse: &StokesGridLevel, fine: &StokesGridLevel) -> StokesGridDiff {
    assert_eq!(2 * coarse.n, fine.n, "levels must double the resolution");
    let center = Vec3::new(1.5, 1.5, 1.5);
    let spheroid = Ellipsoid::new(center, Vec3::new(1.0, 0.5, 0.5));
    let d = coarse.n + 1;
    let mut dp = Vec::new();
    let mut du = Vec::new();
    let mut dgu = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let a = coarse.grid.idx(i, j, k);
                let b = fine.grid.idx(2 * i, 2 * j, 2 * k);
                let p = coarse.grid.point(i, j, k);
                if spheroid.phi(p) >= 0.0 {
                    dp.push((coarse.sol.p[a] - fine.sol.p[b]).abs());
                    let mut s = 0.0;
                    for c in 0..3 {
                        let e = coarse.sol.u[c][a] - fine.sol.u[c][b];
                        s += e * e;
                    }
                    du.push(s.sqrt());
                }
                if coarse.dist[a] > 2.0 * coarse.h {
                    let mut s = 0.0;
                    for ax in 0..3 {
                        for c in 0..3 {
                            let e = coarse.sol.grad_u[ax][c][a] - fine.sol.grad_u[ax][c][b];
                            s += e * e;
                        }
                    }
                    dgu.push(s.sqrt());
                }
            }
        }
    }
    StokesGridDiff {
        d_p: error_norms(&dp),
        d_u: error_norms(&du),
        d_gu: error_norms(&dgu),
        n_pu: dp.len(),
        n_gu: dgu.len(),
    }
}

/// Summary of one flow level without the bulk arrays.
pub struct StokesGridSummary {
    pub n: usize,
    pub h: f64,
    pub bc_err: f64,
    pub wall_time_s: f64,
}

/// Flow chain over a ladder of cube resolutions with pairwise
/// differences. Holds at most two levels at a time and hands back the
/// finest for artifact dumps.
pub struct StokesGridReport {
    pub levels: Vec<StokesGridSummary>,
    pub diffs: Vec<StokesGridDiff>,
    pub finest: StokesGridLevel,
}

pub fn stokes_grid(cfg: &RegConfig, n_list: &[usize]) -> Result<StokesGridReport> {
    assert!(!n_list.is_empty(), "need at least one resolution");
    let mut levels = Vec::new();
    let mut diffs = Vec::new();
    let mut prev: Option<StokesGridLevel> = None;
    for &n in n_list {
        let lvl = stokes_grid_level(cfg, n)?;
        levels.push(StokesGridSummary {
            n: lvl.n,
            h: lvl.h,
            bc_err: lvl.bc_err,
            wall_time_s: lvl.wall_time_s,
        });
        if let Some(c) = prev.take() {
            diffs.push(stokes_grid_diff(&c, &lvl));
        }
        prev = Some(lvl);
    }
    Ok(StokesGridReport {
        levels,
        diffs,
        finest: prev.expect("at least one level"),
    })
}

/// Two nearly touching spheroids with a height-dependent surface
/// tension, solved by the interface velocity equation.
pub struct TwoSpheroidLevel {
    pub h: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub quads: [SurfaceQuadrature; 2],
    /// Interface velocity at each quadrature node, the solver unknowns.
    pub node_velocity: [Vec<Vec3>; 2],
    /// Whether each node lies within 0.1 of the other surface.
    pub near_other: [Vec<bool>; 2],
    pub wall_time_s: f64,
}

/// Solve the two spheroid problem at one spacing: semiaxes (1, 0.5,
/// 0.5), the lower body axis aligned, the upper rotated 30 degrees
/// about the vertical through its center, separated by `epsilon` at
/// the closest approach.
pub fn two_spheroid_level(cfg: &RegConfig, h: f64, epsilon: f64) -> Result<TwoSpheroidLevel> {
    let start = Instant::now();
    let semi = Vec3::new(1.0, 0.5, 0.5);
    let centers = [
        Vec3::new(0.0, 0.0, -0.5 - epsilon),
        Vec3::new(0.0, 0.0, 0.5),
    ];
    let angle = 30.0_f64.to_radians();
    let lower = Ellipsoid::new(centers[0], semi);
    let upper = Rotated::about_z(Ellipsoid::new(centers[1], semi), centers[1], angle);
    let surfaces: [&dyn Surface; 2] = [&lower, &upper];
    let quads = [
        SurfaceQuadrature::build(&lower, h)?,
        SurfaceQuadrature::build(&upper, h)?,
    ];
    let force_jump: [Vec<Vec3>; 2] = [0, 1].map(|b| {
        (0..quads[b].len())
            .map(|j| {
                let x = quads[b].nodes[j];
                let n = quads[b].normals[j];
                interfacial_force(x, n, surfaces[b].mean_curvature(x), centers[b].z)
            })
            .collect()
    });
    let solver = TwoSurfaceStokes::new(surfaces, [&quads[0], &quads[1]], *cfg, 1.0, [2.0, 2.0])?;
    let sol = solver.solve([&force_jump[0], &force_jump[1]], 1e-10, 200);

    let mut near_other = [Vec::new(), Vec::new()];
    for b in 0..2 {
        let other = surfaces[1 - b];
        for &x in &quads[b].nodes {
            let est = other.phi(x).abs() / other.grad(x).norm().max(1e-14);
            let near = est <= 0.25 && other.closest_point(x)?.b.abs() <= 0.1;
            near_other[b].push(near);
        }
    }
    Ok(TwoSpheroidLevel {
        h,
        epsilon,
        iterations: sol.iterations,
        residuals: sol.residuals,
        converged: sol.converged,
        quads,
        node_velocity: sol.velocity,
        near_other,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Interface velocity differences between two levels whose lattices
/// nest. The coarse nodes are a subset of the fine nodes, since grid
/// lines sit at integer multiples of the spacing and the node placement
/// along a line does not depend on it, so each coarse unknown has a
/// fine counterpart at the same point and no interpolation enters.
pub struct TwoSpheroidDiff {
    pub all: (f64, f64),
    /// Max restricted to nodes within 0.1 of the other surface.
    pub near_max: f64,
    pub n_matched: usize,
}

/// Velocity difference between levels `a` and `b`, sampled at the nodes
/// of `base`. Sampling every pair of a ladder at the same base set keeps
/// the norms comparable, where norms over each pair's own coarse nodes
/// would mix node sets of different sizes.
pub fn node_diff_at(
    base: &TwoSpheroidLevel,
    a: &TwoSpheroidLevel,
    b: &TwoSpheroidLevel,
) -> TwoSpheroidDiff {
    for level in [a, b] {
        let ratio = base.h / level.h;
        assert!(
            (ratio - ratio.round()).abs() < 1e-9 && ratio >= 1.0,
            "levels must nest, got h {} against {}",
            base.h,
            level.h
        );
    }
    let mut errs = Vec::new();
    let mut near_max = 0.0_f64;
    for body in 0..2 {
        let index_a = a.quads[body].node_index();
        let index_b = b.quads[body].node_index();
        for (i, &x) in base.quads[body].nodes.iter().enumerate() {
            let velocity = |level: &TwoSpheroidLevel, index: &crate::quadrature::NodeIndex| {
                let (j, d) = index
                    .nearest(&level.quads[body], x, 1e-6)
                    .expect("base node missing from a finer node set");
                assert!(d < 1e-7, "base node off a finer node set by {d:e}");
                level.node_velocity[body][j]
            };
            let e = (velocity(a, &index_a) - velocity(b, &index_b)).norm();
            errs.push(e);
            if base.near_other[body][i] {
                near_max = near_max.max(e);
            }
        }
    }
    TwoSpheroidDiff {
        all: error_norms(&errs),
        near_max,
        n_matched: errs.len(),
    }
}

pub fn node_diff(coarse: &TwoSpheroidLevel, fine: &TwoSpheroidLevel) -> TwoSpheroidDiff {
    node_diff_at(coarse, coarse, fine)
}

/// Two spheroid problem over a ladder of spacings with pairwise node
/// velocity differences.
pub struct TwoSpheroidReport {
    pub levels: Vec<TwoSpheroidLevel>,
    pub diffs: Vec<TwoSpheroidDiff>,
}

pub fn two_spheroid(cfg: &RegConfig, h_list: &[f64], epsilon: f64) -> Result<TwoSpheroidReport> {
    let mut levels = Vec::new();
    for &h in h_list {
        levels.push(two_spheroid_level(cfg, h, epsilon)?);
    }
    let mut diffs = Vec::new();
    for i in 1..levels.len() {
        diffs.push(node_diff_at(&levels[0], &levels[i - 1], &levels[i]));
    }
    Ok(TwoSpheroidReport { levels, diffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Order;

    #[test]
    fn norms_and_orders() {
        let (max, l2) = error_norms(&[3.0, 4.0]);
        assert_eq!(max, 4.0);
        assert!((l2 - (12.5_f64).sqrt()).abs() < 1e-15);
        assert!((observed_order(8.0, 1.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn shell_targets_are_thin_seeded_and_deterministic() {
        let sphere = Sphere::new(Vec3::zeros(), 1.0);
        let quad = SurfaceQuadrature::build(&sphere, 1.0 / 8.0).unwrap();
        let index = quad.node_index();
        let a = shell_targets(&sphere, &quad, &index, 20.0, 7).unwrap();
        let b = shell_targets(&sphere, &quad, &index, 20.0, 7).unwrap();
        let c = shell_targets(&sphere, &quad, &index, 20.0, 8).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
        assert_ne!(
            a.iter().map(|t| t.0).collect::<Vec<_>>(),
            c.iter().map(|t| t.0).collect::<Vec<_>>()
        );
        // Expected count is 2 area per_area with thinning noise.
        let expect = 2.0 * 4.0 * std::f64::consts::PI * 20.0;
        assert!(a.len() as f64 > 0.6 * expect && (a.len() as f64) < 1.6 * expect);
        for &(p, b) in &a {
            assert!(b.abs() <= quad.h && b.abs() > 1e-12);
            assert!(((p.norm() - 1.0) - b).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_single_layer_smoke() {
        let cfg = RegConfig::new(Order::P3);
        let ladder = sphere_layer(SphereLayer::Single, &cfg, &[1.0 / 8.0], 20.0, 1).unwrap();
        let lv = &ladder.levels[0];
        assert!(lv.n_targets > 100);
        assert!(lv.err_max.is_finite() && lv.err_max < 0.5);
        assert!(lv.err_l2 <= lv.err_max);
        assert_eq!(lv.targets.len(), lv.n_targets);
    }

    #[test]
    fn traction_single_layer_moves_the_spheroid_rigidly() {
        let center = Vec3::new(1.5, 1.5, 1.5);
        let spheroid = Ellipsoid::new(center, Vec3::new(1.0, 0.5, 0.5));
        let h = 1.0 / 8.0;
        let quad = SurfaceQuadrature::build(&spheroid, h).unwrap();
        let cfg = RegConfig::new(Order::P7);
        let ev = Evaluator::new(&quad, cfg, cfg.delta(h));
        let traction = SpheroidTraction::new(1.0, 0.5, 1.0, 1.0);
        let f: Vec<Vec3> = quad
            .nodes
            .iter()
            .map(|&x| traction.density(x - center))
            .collect();
        let u = Vec3::new(1.0, 0.0, 0.0);
        let step = quad.len() / 20;
        for j in (0..quad.len()).step_by(step) {
            let v = ev.stokes_single(&f, &node_target(&quad, j), true);
            assert!((v - u).norm() < 0.15, "node {j}: {v:?}");
        }
    }

    #[test]
    fn two_spheroid_smoke() {
        let cfg = RegConfig::new(Order::P5);
        let lvl = two_spheroid_level(&cfg, 1.0 / 12.0, 1.0 / 16.0).unwrap();
        assert!(lvl.converged, "residuals {:?}", lvl.residuals);
        assert!(lvl.iterations <= 30);
        for b in 0..2 {
            assert_eq!(lvl.node_velocity[b].len(), lvl.quads[b].len());
            assert!(lvl.near_other[b].iter().any(|&x| x));
            assert!(lvl.node_velocity[b].iter().all(|v| v.norm().is_finite()));
        }
        let speed = lvl.node_velocity[0]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(speed > 1e-3 && speed < 10.0, "max speed {speed}");
    }
}
