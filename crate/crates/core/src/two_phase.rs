//! Two closed interfaces moving through viscous fluid.
//!
//! The velocity of each interface satisfies an integral equation: a
//! multiple of the unknown velocity, minus stresslet integrals of the
//! velocity over both interfaces weighted by the viscosity contrasts,
//! equals stokeslet integrals of the known surface force jumps. The
//! operator is applied matrix free and the system is solved with GMRES.
//! All inner products accumulate one partial sum per interface, so
//! swapping the two labels reproduces the run exactly.

use crate::config::RegConfig;
use crate::eval::{classify, node_target, EvalTarget, Evaluator};
use crate::quadrature::{NodeIndex, SurfaceQuadrature};
use crate::surface::{Surface, Vec3};
use crate::Result;

/// The coupled pair of interfaces with fixed geometry and viscosities.
pub struct TwoSurfaceStokes<'a> {
    surfaces: [&'a dyn Surface; 2],
    quads: [&'a SurfaceQuadrature; 2],
    evals: [Evaluator<'a>; 2],
    indexes: [NodeIndex; 2],
    /// `cross[b][j]` classifies node j of interface b against the other
    /// interface.
    cross: [Vec<EvalTarget>; 2],
    /// Viscosity of the surrounding fluid.
    pub mu0: f64,
    /// Ratio of each enclosed viscosity to the surrounding one.
    pub lambda: [f64; 2],
}

impl<'a> TwoSurfaceStokes<'a> {
    pub fn new(
        surfaces: [&'a dyn Surface; 2],
        quads: [&'a SurfaceQuadrature; 2],
        cfg: RegConfig,
        mu0: f64,
        lambda: [f64; 2],
    ) -> Result<Self> {
        let evals = [
            Evaluator::new(quads[0], cfg, cfg.delta(quads[0].h)),
            Evaluator::new(quads[1], cfg, cfg.delta(quads[1].h)),
        ];
        let indexes = [quads[0].node_index(), quads[1].node_index()];
        let mut cross = [Vec::new(), Vec::new()];
        for b in 0..2 {
            let o = 1 - b;
            cross[b] = quads[b]
                .nodes
                .iter()
                .map(|&y| classify(surfaces[o], quads[o], &indexes[o], y, &cfg, evals[o].delta))
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(TwoSurfaceStokes {
            surfaces,
            quads,
            evals,
            indexes,
            cross,
            mu0,
            lambda,
        })
    }

    pub fn node_count(&self, b: usize) -> usize {
        self.quads[b].len()
    }

    /// Left side of the interface equation applied to a velocity field.
    pub fn apply(&self, u: [&[Vec3]; 2]) -> [Vec<Vec3>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for b in 0..2 {
            let o = 1 - b;
            out[b] = (0..self.quads[b].len())
                .map(|j| {
                    let dl_self = self.evals[b].stokes_double(u[b], &node_target(self.quads[b], j));
                    let dl_cross = self.evals[o].stokes_double(u[o], &self.cross[b][j]);
                    u[b][j] * (self.lambda[b] + 1.0)
                        - (dl_self * (self.lambda[b] - 1.0) + dl_cross * (self.lambda[o] - 1.0))
                            * 2.0
                })
                .collect();
        }
        out
    }

    /// Right side of the interface equation for the given force jumps.
    pub fn rhs(&self, force_jump: [&[Vec3]; 2]) -> [Vec<Vec3>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for b in 0..2 {
            let o = 1 - b;
            out[b] = (0..self.quads[b].len())
                .map(|j| {
                    let sl_self = self.evals[b].stokes_single(
                        force_jump[b],
                        &node_target(self.quads[b], j),
                        true,
                    );
                    let sl_cross =
                        self.evals[o].stokes_single(force_jump[o], &self.cross[b][j], true);
                    (sl_self + sl_cross) * (-2.0 / self.mu0)
                })
                .collect();
        }
        out
    }

    /// Solve for the interface velocities.
    pub fn solve(&self, force_jump: [&[Vec3]; 2], tol: f64, max_iter: usize) -> TwoSurfaceSolution {
        let rhs = self.rhs(force_jump);
        let split = 3 * self.quads[0].len();
        let flat_rhs = flatten(&rhs);
        let outcome = gmres(
            |x| {
                let u = unflatten(x, self.quads[0].len());
                flatten(&self.apply([&u[0], &u[1]]))
            },
            &flat_rhs,
            split,
            tol,
            max_iter,
        );
        TwoSurfaceSolution {
            velocity: unflatten(&outcome.solution, self.quads[0].len()),
            iterations: outcome.iterations,
            residual: outcome.residual,
            residuals: outcome.residuals,
            converged: outcome.converged,
        }
    }

    /// Velocity at a point of interface `b`, reconstructed from solved
    /// interface velocities through the integral equation. The point
    /// need not be a quadrature node.
    pub fn velocity_at(
        &self,
        b: usize,
        y: Vec3,
        u: [&[Vec3]; 2],
        force_jump: [&[Vec3]; 2],
    ) -> Result<Vec3> {
        let o = 1 - b;
        let cfg = &self.evals[b].cfg;
        let t_self = classify(
            self.surfaces[b],
            self.quads[b],
            &self.indexes[b],
            y,
            cfg,
            self.evals[b].delta,
        )?;
        let t_cross = classify(
            self.surfaces[o],
            self.quads[o],
            &self.indexes[o],
            y,
            cfg,
            self.evals[o].delta,
        )?;
        let sl = self.evals[b].stokes_single(force_jump[b], &t_self, true)
            + self.evals[o].stokes_single(force_jump[o], &t_cross, true);
        let dl = self.evals[b].stokes_double(u[b], &t_self) * (self.lambda[b] - 1.0)
            + self.evals[o].stokes_double(u[o], &t_cross) * (self.lambda[o] - 1.0);
        Ok((sl * (-2.0 / self.mu0) + dl * 2.0) / (self.lambda[b] + 1.0))
    }
}

/// Velocities of both interfaces with the iteration record.
pub struct TwoSurfaceSolution {
    pub velocity: [Vec<Vec3>; 2],
    pub iterations: usize,
    /// Final residual relative to the right side.
    pub residual: f64,
    /// Relative residual after each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

fn flatten(u: &[Vec<Vec3>; 2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * (u[0].len() + u[1].len()));
    for part in u {
        for v in part {
            out.extend_from_slice(&[v.x, v.y, v.z]);
        }
    }
    out
}

fn unflatten(x: &[f64], len0: usize) -> [Vec<Vec3>; 2] {
    let take = |r: &[f64]| -> Vec<Vec3> {
        r.chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect()
    };
    [take(&x[..3 * len0]), take(&x[3 * len0..])]
}

/// Dot product with one partial sum per block, so exchanging the blocks
/// changes nothing but the order of the final addition.
fn blocked_dot(a: &[f64], b: &[f64], split: usize) -> f64 {
    let head: f64 = a[..split].iter().zip(&b[..split]).map(|(x, y)| x * y).sum();
    let tail: f64 = a[split..].iter().zip(&b[split..]).map(|(x, y)| x * y).sum();
    head + tail
}

/// Result of a GMRES run.
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final residual relative to the right side.
    pub residual: f64,
    /// Relative residual after each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Unrestarted GMRES with modified Gram-Schmidt and a second
/// orthogonalization pass, least squares by Givens rotations. `split`
/// marks the block boundary for the inner products.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    split: usize,
    tol: f64,
    max_iter: usize,
) -> GmresOutcome {
    let n = rhs.len();
    let beta = blocked_dot(rhs, rhs, split).sqrt();
    if beta == 0.0 {
        return GmresOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            residuals: Vec::new(),
            converged: true,
        };
    }
    let mut basis: Vec<Vec<f64>> = vec![rhs.iter().map(|x| x / beta).collect()];
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut residual = beta;
    let mut residuals = Vec::new();
    let mut iterations = 0;
    for k in 0..max_iter {
        let mut w = apply(&basis[k]);
        let mut col = vec![0.0; k + 2];
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = blocked_dot(&w, v, split);
                col[i] += c;
                for (wv, bv) in w.iter_mut().zip(v) {
                    *wv -= c * bv;
                }
            }
        }
        let wn = blocked_dot(&w, &w, split).sqrt();
        col[k + 1] = wn;
        for (i, &(c, s)) in rot.iter().enumerate() {
            let t = c * col[i] + s * col[i + 1];
            col[i + 1] = -s * col[i] + c * col[i + 1];
            col[i] = t;
        }
        let denom = (col[k] * col[k] + col[k + 1] * col[k + 1]).sqrt();
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (col[k] / denom, col[k + 1] / denom)
        };
        col[k] = denom;
        col[k + 1] = 0.0;
        rot.push((c, s));
        g.push(-s * g[k]);
        g[k] *= c;
        residual = g[k + 1].abs();
        residuals.push(residual / beta);
        h_cols.push(col);
        iterations = k + 1;
        let exhausted = wn <= 1e-14 * beta;
        if !exhausted {
            basis.push(w.iter().map(|x| x / wn).collect());
        }
        if residual <= tol * beta || exhausted {
            break;
        }
    }
    let m = iterations;
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for j in i + 1..m {
            acc -= h_cols[j][i] * y[j];
        }
        y[i] = acc / h_cols[i][i];
    }
    let mut x = vec![0.0; n];
    for (i, yi) in y.iter().enumerate() {
        for (xv, bv) in x.iter_mut().zip(&basis[i]) {
            *xv += yi * bv;
        }
    }
    GmresOutcome {
        solution: x,
        iterations,
        residual: residual / beta,
        residuals,
        converged: residual <= tol * beta,
    }
}
