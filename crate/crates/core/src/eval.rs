//! Layer potential evaluators over a surface quadrature.
//!
//! Targets are classified by their distance to the surface. Within the
//! cutoff in smoothing lengths the regularized kernels apply, with
//! coefficients depending on the signed distance; beyond it the plain
//! kernels are exact to machine precision. On-surface targets take the
//! principal value factors. The double layer sums subtract the density
//! value at the closest surface point, which removes the largest part
//! of the near-singular error and makes constants reproduce the
//! indicator exactly; the Stokes single layer subtracts the normal
//! component of the density there, using the identity that the
//! stokeslet of the normal field integrates to zero over a closed
//! surface.
//!
//! The subtraction value matters. Each potential comes in two forms: a
//! `_with` form taking the closest point value explicitly, and a short
//! form reading it from the nearest quadrature node. The short form is
//! exact when the target sits on a node, as in the integral equation
//! solves; for targets off the nodes the nearest node value is off by
//! O(h), which the off-surface indicator defect turns into an O(h)
//! error floor. Callers that can evaluate the density at the closest
//! point, such as the grid pipelines and the convergence experiments
//! with analytic densities, must use the `_with` forms to keep the full
//! order.

use crate::config::RegConfig;
use crate::kernels::{
    self, green, reg_grad_green, reg_green, reg_stokeslet_apply, reg_stresslet_apply,
    reg_stresslet_split_apply, stokeslet_apply, stresslet_apply, FOUR_PI,
};
use crate::quadrature::{NodeIndex, SurfaceQuadrature};
use crate::regular::{coeffs, s2, star_coeffs, Coeffs};
use crate::surface::{Surface, SurfacePoint, Vec3};
use crate::Result;

const EIGHT_PI: f64 = 2.0 * FOUR_PI;

/// Where a target sits relative to the surface.
#[derive(Clone, Copy, Debug)]
pub enum TargetClass {
    /// Within the on-surface tolerance band; carries the foot data.
    OnSurface(SurfacePoint),
    /// Within the cutoff distance in smoothing lengths.
    Near(SurfacePoint),
    /// Beyond the cutoff; plain kernels apply.
    Far,
}

/// A classified evaluation point.
#[derive(Clone, Copy, Debug)]
pub struct EvalTarget {
    pub point: Vec3,
    pub class: TargetClass,
    /// Indicator value: 1 inside, 1/2 on the surface, 0 outside.
    pub chi: f64,
    /// Index of the nearest quadrature node, used for subtraction
    /// constants.
    pub nearest: usize,
}

impl EvalTarget {
    /// Signed distance to the surface, zero for on-surface targets and
    /// None for far ones.
    pub fn b(&self) -> Option<f64> {
        match self.class {
            TargetClass::OnSurface(cp) | TargetClass::Near(cp) => Some(cp.b),
            TargetClass::Far => None,
        }
    }

    /// Closest surface point, where the subtraction values live; None
    /// for far targets, which need none.
    pub fn foot(&self) -> Option<Vec3> {
        match self.class {
            TargetClass::OnSurface(cp) | TargetClass::Near(cp) => Some(cp.foot),
            TargetClass::Far => None,
        }
    }
}

/// Classify a target against a surface and its quadrature. `index` must
/// have been built from `quad`.
pub fn classify<S: Surface + ?Sized>(
    surface: &S,
    quad: &SurfaceQuadrature,
    index: &NodeIndex,
    y: Vec3,
    cfg: &RegConfig,
    delta: f64,
) -> Result<EvalTarget> {
    let reach = cfg.cutoff * delta;
    // A node lies within O(h) of the true foot, so a miss at this search
    // radius guarantees the target is beyond the cutoff.
    let search = reach + 3.0 * quad.h;
    let band = 1e-10 * surface.diameter();
    match index.nearest(quad, y, search) {
        Some((j, d)) if d <= search => {
            let cp = surface.closest_point_from(y, quad.nodes[j])?;
            if cp.b.abs() <= band {
                let on = SurfacePoint { b: 0.0, ..cp };
                Ok(EvalTarget {
                    point: y,
                    class: TargetClass::OnSurface(on),
                    chi: 0.5,
                    nearest: j,
                })
            } else if cp.b.abs() <= reach {
                Ok(EvalTarget {
                    point: y,
                    class: TargetClass::Near(cp),
                    chi: if cp.b < 0.0 { 1.0 } else { 0.0 },
                    nearest: j,
                })
            } else {
                Ok(EvalTarget {
                    point: y,
                    class: TargetClass::Far,
                    chi: surface.chi(y),
                    nearest: j,
                })
            }
        }
        _ => Ok(EvalTarget {
            point: y,
            class: TargetClass::Far,
            chi: surface.chi(y),
            nearest: index.nearest_any(quad, y).0,
        }),
    }
}

/// Target sitting exactly at quadrature node `j`.
pub fn node_target(quad: &SurfaceQuadrature, j: usize) -> EvalTarget {
    EvalTarget {
        point: quad.nodes[j],
        class: TargetClass::OnSurface(SurfacePoint {
            foot: quad.nodes[j],
            b: 0.0,
            normal: quad.normals[j],
        }),
        chi: 0.5,
        nearest: j,
    }
}

/// Layer potential sums over one quadrature at a fixed smoothing length.
pub struct Evaluator<'a> {
    pub quad: &'a SurfaceQuadrature,
    pub cfg: RegConfig,
    pub delta: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(quad: &'a SurfaceQuadrature, cfg: RegConfig, delta: f64) -> Self {
        Evaluator { quad, cfg, delta }
    }

    fn near_coeffs(&self, b: f64) -> Coeffs {
        coeffs(self.cfg.order, b / self.delta)
    }

    /// Single layer potential of a scalar density.
    pub fn harmonic_single(&self, f: &[f64], t: &EvalTarget) -> f64 {
        let q = self.quad;
        let mut acc = 0.0;
        match t.class {
            TargetClass::Far => {
                for j in 0..q.len() {
                    acc += green(q.nodes[j] - t.point) * f[j] * q.weights[j];
                }
            }
            TargetClass::OnSurface(cp) | TargetClass::Near(cp) => {
                let c = self.near_coeffs(cp.b);
                let cut = self.cfg.cutoff * self.delta;
                for j in 0..q.len() {
                    let r = q.nodes[j] - t.point;
                    let g = if r.norm() >= cut {
                        green(r)
                    } else {
                        reg_green(r, self.delta, &c)
                    };
                    acc += g * f[j] * q.weights[j];
                }
            }
        }
        acc
    }

    /// Double layer potential of a scalar density, subtracting the
    /// nearest node value. Exact for targets on a node; prefer
    /// [`Self::harmonic_double_with`] when g is known at the closest
    /// point.
    pub fn harmonic_double(&self, g: &[f64], t: &EvalTarget) -> f64 {
        self.harmonic_double_with(g, g[t.nearest], t)
    }

    /// Double layer potential of a scalar density, with the closest point
    /// value `g0` subtracted and added back through the indicator. The
    /// kernel is the normal derivative of the free-space Green's function
    /// at the source point, (x - y).n / (4 pi |x - y|^3).
    pub fn harmonic_double_with(&self, g: &[f64], g0: f64, t: &EvalTarget) -> f64 {
        let q = self.quad;
        let mut acc = 0.0;
        let sum_with = |acc: &mut f64, factor: &dyn Fn(f64) -> f64| {
            for j in 0..q.len() {
                let r = q.nodes[j] - t.point;
                let rn = r.norm();
                if rn < kernels::COINCIDENT {
                    continue;
                }
                let k = r.dot(&q.normals[j]) / (FOUR_PI * rn * rn * rn);
                *acc += k * factor(rn) * (g[j] - g0) * q.weights[j];
            }
        };
        match t.class {
            TargetClass::Far => {
                sum_with(&mut acc, &|_| 1.0);
            }
            TargetClass::OnSurface(_) => {
                let c = star_coeffs(self.cfg.order);
                let cut = self.cfg.cutoff * self.delta;
                sum_with(&mut acc, &|rn| {
                    if rn >= cut {
                        1.0
                    } else {
                        s2(rn / self.delta, &c)
                    }
                });
            }
            TargetClass::Near(cp) => {
                let c = self.near_coeffs(cp.b);
                let cut = self.cfg.cutoff * self.delta;
                sum_with(&mut acc, &|rn| {
                    if rn >= cut {
                        1.0
                    } else {
                        s2(rn / self.delta, &c)
                    }
                });
            }
        }
        acc + t.chi * g0
    }

    /// Stokes single layer velocity of a vector density, scaled by
    /// 1/(8 pi) for unit viscosity. With `subtract` the normal part of
    /// the density at the nearest node is removed, which costs nothing
    /// in exact arithmetic and suppresses the near-surface error; prefer
    /// [`Self::stokes_single_with`] when f is known at the closest
    /// point.
    pub fn stokes_single(&self, f: &[Vec3], t: &EvalTarget, subtract: bool) -> Vec3 {
        let fn0 = match (subtract, &t.class) {
            (true, TargetClass::OnSurface(cp) | TargetClass::Near(cp)) => {
                f[t.nearest].dot(&cp.normal)
            }
            _ => 0.0,
        };
        self.stokes_single_with(f, fn0, t)
    }

    /// Stokes single layer velocity with the normal density component
    /// `fn0 = f(x0).n(x0)` at the closest point subtracted; pass zero to
    /// skip the subtraction. The subtraction applies on and near the
    /// surface only; far targets use the plain sum.
    pub fn stokes_single_with(&self, f: &[Vec3], fn0: f64, t: &EvalTarget) -> Vec3 {
        let q = self.quad;
        let mut acc = Vec3::zeros();
        match t.class {
            TargetClass::Far => {
                for j in 0..q.len() {
                    acc += stokeslet_apply(t.point - q.nodes[j], f[j]) * q.weights[j];
                }
            }
            TargetClass::OnSurface(cp) | TargetClass::Near(cp) => {
                let c = self.near_coeffs(cp.b);
                let cut = self.cfg.cutoff * self.delta;
                for j in 0..q.len() {
                    let fj = f[j] - q.normals[j] * fn0;
                    let r = t.point - q.nodes[j];
                    let contrib = if r.norm() >= cut {
                        stokeslet_apply(r, fj)
                    } else {
                        reg_stokeslet_apply(r, fj, self.delta, &c)
                    };
                    acc += contrib * q.weights[j];
                }
            }
        }
        acc / EIGHT_PI
    }

    /// Stokes double layer velocity of a vector density, scaled by
    /// 1/(8 pi), subtracting the nearest node value. Exact for targets
    /// on a node; prefer [`Self::stokes_double_with`] when the density
    /// is known at the closest point.
    pub fn stokes_double(&self, dens: &[Vec3], t: &EvalTarget) -> Vec3 {
        self.stokes_double_with(dens, dens[t.nearest], t)
    }

    /// Stokes double layer velocity with the closest point value `q0`
    /// subtracted and added back through the indicator.
    pub fn stokes_double_with(&self, dens: &[Vec3], q0: Vec3, t: &EvalTarget) -> Vec3 {
        let q = self.quad;
        let mut acc = Vec3::zeros();
        let cut = self.cfg.cutoff * self.delta;
        match t.class {
            TargetClass::Far => {
                for j in 0..q.len() {
                    let r = t.point - q.nodes[j];
                    if r.norm() < kernels::COINCIDENT {
                        continue;
                    }
                    acc += stresslet_apply(r, dens[j] - q0, q.normals[j]) * q.weights[j];
                }
            }
            TargetClass::OnSurface(_) => {
                let c = star_coeffs(self.cfg.order);
                for j in 0..q.len() {
                    let r = t.point - q.nodes[j];
                    let rn = r.norm();
                    if rn < kernels::COINCIDENT {
                        continue;
                    }
                    let dq = dens[j] - q0;
                    let contrib = if rn >= cut {
                        stresslet_apply(r, dq, q.normals[j])
                    } else {
                        reg_stresslet_apply(r, dq, q.normals[j], self.delta, &c)
                    };
                    acc += contrib * q.weights[j];
                }
            }
            TargetClass::Near(cp) => {
                let c = self.near_coeffs(cp.b);
                for j in 0..q.len() {
                    let r = t.point - q.nodes[j];
                    let rn = r.norm();
                    if rn < kernels::COINCIDENT {
                        continue;
                    }
                    let dq = dens[j] - q0;
                    let contrib = if rn >= cut {
                        stresslet_apply(r, dq, q.normals[j])
                    } else {
                        let xhat = q.nodes[j] - cp.foot;
                        reg_stresslet_split_apply(
                            cp.b,
                            cp.normal,
                            xhat,
                            dq,
                            q.normals[j],
                            self.delta,
                            &c,
                        )
                    };
                    acc += contrib * q.weights[j];
                }
            }
        }
        acc / EIGHT_PI + t.chi * q0
    }

    /// Pressure of the Stokes single layer with unit viscosity,
    /// subtracting the nearest node density. Exact for targets on a
    /// node; prefer [`Self::stokes_pressure_with`] when f is known at
    /// the closest point.
    pub fn stokes_pressure(&self, f: &[Vec3], t: &EvalTarget, chi: f64) -> f64 {
        self.stokes_pressure_with(f, f[t.nearest], t, chi)
    }

    /// Pressure of the Stokes single layer with unit viscosity, matched
    /// to the 1/(8 pi) velocity scaling, with the closest point density
    /// `f0` subtracted. Far from the surface this is the plain dipole
    /// sum. On and near the surface the normal and tangential parts of
    /// the density are subtracted at the closest point and the normal
    /// part is restored through the indicator, which keeps the
    /// evaluation accurate up to the surface from either side; `chi`
    /// selects the side for on-surface targets.
    pub fn stokes_pressure_with(&self, f: &[Vec3], f0: Vec3, t: &EvalTarget, chi: f64) -> f64 {
        let q = self.quad;
        let cp = match t.class {
            TargetClass::OnSurface(cp) | TargetClass::Near(cp) => cp,
            TargetClass::Far => {
                let mut acc = 0.0;
                for j in 0..q.len() {
                    acc += kernels::grad_green(t.point - q.nodes[j]).dot(&f[j]) * q.weights[j];
                }
                return acc;
            }
        };
        let fn0 = f0.dot(&cp.normal);
        let n0xf0 = cp.normal.cross(&f0);
        let c = self.near_coeffs(cp.b);
        let cut = self.cfg.cutoff * self.delta;
        let mut acc = 0.0;
        for j in 0..q.len() {
            let r = t.point - q.nodes[j];
            let rn = r.norm();
            if rn < kernels::COINCIDENT {
                continue;
            }
            let gv = if rn >= cut {
                kernels::grad_green(r)
            } else {
                reg_grad_green(r, self.delta, &c)
            };
            let nj = q.normals[j];
            let fnj = f[j].dot(&nj);
            let term = nj.dot(&gv) * (fnj - fn0) + nj.cross(&gv).dot(&(nj.cross(&f[j]) - n0xf0));
            acc += term * q.weights[j];
        }
        acc - chi * fn0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Order;
    use crate::surface::Sphere;
    use approx::assert_relative_eq;

    fn sphere_setup(h: f64) -> (Sphere, SurfaceQuadrature, RegConfig, f64) {
        let sph = Sphere::unit();
        let quad = SurfaceQuadrature::build(&sph, h).unwrap();
        let cfg = RegConfig::new(Order::P7);
        let delta = 2.0 * h;
        (sph, quad, cfg, delta)
    }

    #[test]
    fn classify_by_distance() {
        let (sph, quad, cfg, delta) = sphere_setup(1.0 / 8.0);
        let idx = quad.node_index();
        let mk = |r: f64| classify(&sph, &quad, &idx, Vec3::new(r, 0.0, 0.0), &cfg, delta).unwrap();
        let on = mk(1.0);
        assert!(matches!(on.class, TargetClass::OnSurface(_)));
        assert_eq!(on.chi, 0.5);
        let h = quad.h;
        let near_out = mk(1.0 + 3.0 * h);
        assert!(matches!(near_out.class, TargetClass::Near(_)));
        assert_eq!(near_out.chi, 0.0);
        assert_relative_eq!(near_out.b().unwrap(), 3.0 * h, max_relative = 1e-10);
        let near_in = mk(1.0 - 3.0 * h);
        assert_eq!(near_in.chi, 1.0);
        assert!(near_in.b().unwrap() < 0.0);
        let far = mk(1.0 + 2.0 * cfg.cutoff * delta);
        assert!(matches!(far.class, TargetClass::Far));
        assert_eq!(far.chi, 0.0);
    }

    #[test]
    fn double_layer_of_one_is_indicator() {
        let (sph, quad, cfg, delta) = sphere_setup(1.0 / 8.0);
        let idx = quad.node_index();
        let ones = vec![1.0; quad.len()];
        let ev = Evaluator::new(&quad, cfg, delta);
        for (y, chi) in [
            (Vec3::new(0.3, 0.2, -0.1), 1.0),
            (Vec3::new(1.01, 0.0, 0.0), 0.0),
            (Vec3::new(2.0, 1.0, 0.5), 0.0),
            (Vec3::new(0.0, 0.0, -0.95), 1.0),
        ] {
            let t = classify(&sph, &quad, &idx, y, &cfg, delta).unwrap();
            assert_eq!(ev.harmonic_double(&ones, &t), chi, "at {y:?}");
        }
        let t = node_target(&quad, 17);
        assert_eq!(ev.harmonic_double(&ones, &t), 0.5);
    }

    #[test]
    fn stokes_double_layer_of_constant_is_indicator() {
        let (sph, quad, cfg, delta) = sphere_setup(1.0 / 8.0);
        let idx = quad.node_index();
        let cvec = Vec3::new(0.7, -0.2, 1.1);
        let dens = vec![cvec; quad.len()];
        let ev = Evaluator::new(&quad, cfg, delta);
        for (y, chi) in [
            (Vec3::new(0.2, -0.3, 0.1), 1.0),
            (Vec3::new(1.6, 0.0, 0.2), 0.0),
        ] {
            let t = classify(&sph, &quad, &idx, y, &cfg, delta).unwrap();
            let out = ev.stokes_double(&dens, &t);
            assert_relative_eq!((out - cvec * chi).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn double_layer_of_degree_one_harmonic() {
        // For g = x3 on the unit sphere the double layer is (2/3) y3
        // inside and -(1/3) y3 / |y|^3 outside.
        let (sph, quad, cfg, delta) = sphere_setup(1.0 / 16.0);
        let idx = quad.node_index();
        let g: Vec<f64> = quad.nodes.iter().map(|x| x.z).collect();
        let ev = Evaluator::new(&quad, cfg, delta);
        let cases = [
            (Vec3::new(0.0, 0.0, 0.5), 2.0 / 3.0 * 0.5),
            (Vec3::new(0.1, 0.0, -0.4), 2.0 / 3.0 * -0.4),
            (Vec3::new(0.0, 0.0, 2.0), -(1.0 / 3.0) * 2.0 / 8.0),
            (
                Vec3::new(0.0, 0.0, 1.0 + delta),
                -(1.0 / 3.0) * (1.0 + delta) / (1.0 + delta).powi(3),
            ),
        ];
        for (y, exact) in cases {
            let t = classify(&sph, &quad, &idx, y, &cfg, delta).unwrap();
            let got = ev.harmonic_double(&g, &t);
            assert_relative_eq!(got, exact, max_relative = 2e-3, epsilon = 1e-4);
        }
    }

    #[test]
    fn stokes_double_of_rotation_matches_indicator_field() {
        // The stresslet identity: for q equal to a rigid rotation field
        // the double layer reproduces chi(y) q(y).
        let (sph, quad, cfg, delta) = sphere_setup(1.0 / 16.0);
        let idx = quad.node_index();
        let dens: Vec<Vec3> = quad
            .nodes
            .iter()
            .map(|x| Vec3::new(0.0, -x.z, x.y))
            .collect();
        let ev = Evaluator::new(&quad, cfg, delta);
        for (y, chi) in [
            (Vec3::new(0.3, -0.2, 0.4), 1.0),
            (Vec3::new(0.0, 0.9, -0.1), 1.0),
            (Vec3::new(0.0, 1.0 + 0.5 * delta, 0.0), 0.0),
        ] {
            let t = classify(&sph, &quad, &idx, y, &cfg, delta).unwrap();
            let got = ev.stokes_double(&dens, &t);
            let exact = Vec3::new(0.0, -y.z, y.y) * chi;
            assert_relative_eq!((got - exact).norm(), 0.0, epsilon = 1e-2);
        }
    }

    #[test]
    fn single_layer_matches_shell_potential() {
        // For a uniform density on the unit sphere the potential is -1
        // inside and -1/|y| outside.
        let (sph, quad, cfg, delta) = sphere_setup(1.0 / 16.0);
        let idx = quad.node_index();
        let ones = vec![1.0; quad.len()];
        let ev = Evaluator::new(&quad, cfg, delta);
        let cases = [
            (Vec3::new(0.5, 0.0, 0.0), -1.0),
            (Vec3::new(0.0, 1.9, 0.0), -1.0 / 1.9),
            (Vec3::new(1.0 + delta, 0.0, 0.0), -1.0 / (1.0 + delta)),
        ];
        for (y, exact) in cases {
            let t = classify(&sph, &quad, &idx, y, &cfg, delta).unwrap();
            let got = ev.harmonic_single(&ones, &t);
            assert_relative_eq!(got, exact, max_relative = 2e-3);
        }
    }

    #[test]
    fn stokes_single_layer_of_normal_is_small() {
        let (_sph, quad, cfg, delta) = sphere_setup(1.0 / 16.0);
        let dens: Vec<Vec3> = quad.normals.clone();
        let ev = Evaluator::new(&quad, cfg, delta);
        let t = node_target(&quad, 3);
        let v = ev.stokes_single(&dens, &t, true);
        assert!(v.norm() < 1e-2, "stokeslet of normal {v:?}");
    }

    #[test]
    fn pressure_far_matches_plain_dipole_sum() {
        let (sph, quad, cfg, delta) = sphere_setup(1.0 / 8.0);
        let idx = quad.node_index();
        let f: Vec<Vec3> = quad
            .nodes
            .iter()
            .map(|x| Vec3::new(x.z, x.x * x.x, -0.3 * x.y))
            .collect();
        let y = Vec3::new(3.5, -0.4, 0.3);
        let t = classify(&sph, &quad, &idx, y, &cfg, delta).unwrap();
        assert!(matches!(t.class, TargetClass::Far));
        let got = ev_pressure_plain(&quad, &f, y);
        let p = Evaluator::new(&quad, cfg, delta).stokes_pressure(&f, &t, t.chi);
        assert_relative_eq!(p, got, max_relative = 1e-12);
    }

    fn ev_pressure_plain(quad: &SurfaceQuadrature, f: &[Vec3], y: Vec3) -> f64 {
        let mut acc = 0.0;
        for j in 0..quad.len() {
            let r = y - quad.nodes[j];
            let rn = r.norm();
            acc += r.dot(&f[j]) / (FOUR_PI * rn * rn * rn) * quad.weights[j];
        }
        acc
    }
}
