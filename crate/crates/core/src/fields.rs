//! Closed-form fields used by the convergence experiments: a cubic
//! harmonic and its layer potentials on the unit sphere, interior and
//! exterior harmonic pairs with their jump data, the traction of a
//! spheroid translating through viscous fluid, and the interfacial
//! force produced by a height-dependent surface tension.

use crate::surface::Vec3;

/// Degree three harmonic restricted to the unit sphere, used as a layer
/// density.
pub fn cubic_harmonic_density(x: Vec3) -> f64 {
    (7.0 / 8.0) * (x.x - 2.0 * x.y) * (15.0 * x.z * x.z - 3.0)
}

/// Solid harmonic extending the density into the unit ball.
pub fn cubic_harmonic_interior(y: Vec3) -> f64 {
    let r2 = y.dot(&y);
    (7.0 / 8.0) * (y.x - 2.0 * y.y) * (15.0 * y.z * y.z - 3.0 * r2)
}

/// Decaying harmonic extending the density outside the unit ball.
pub fn cubic_harmonic_exterior(y: Vec3) -> f64 {
    let r = y.norm();
    cubic_harmonic_interior(y) / r.powi(7)
}

/// Single layer potential of the cubic density over the unit sphere.
/// Continuous across the sphere; its normal derivative jumps by the
/// density.
pub fn cubic_harmonic_single(y: Vec3) -> f64 {
    if y.dot(&y) < 1.0 {
        -cubic_harmonic_interior(y) / 7.0
    } else {
        -cubic_harmonic_exterior(y) / 7.0
    }
}

/// Double layer potential of the cubic density over the unit sphere.
/// Jumps by minus the density across the sphere; its normal derivative
/// is continuous.
pub fn cubic_harmonic_double(y: Vec3) -> f64 {
    if y.dot(&y) < 1.0 {
        4.0 / 7.0 * cubic_harmonic_interior(y)
    } else {
        -3.0 / 7.0 * cubic_harmonic_exterior(y)
    }
}

/// Harmonic field (sin y1 + sin y2) exp(y3) about a center, paired with
/// an exterior field that is either zero or the decaying 1/|y - center|.
/// The difference in values and normal derivatives across a surface
/// supplies densities for which the combined single and double layer
/// reproduces the pair on both sides.
#[derive(Clone, Copy, Debug)]
pub struct HarmonicPair {
    center: Vec3,
    decaying_exterior: bool,
}

impl HarmonicPair {
    /// Field about the origin with zero exterior.
    pub fn interior_only() -> Self {
        Self {
            center: Vec3::zeros(),
            decaying_exterior: false,
        }
    }

    /// Field about the given center with the decaying exterior.
    pub fn with_decaying_exterior(center: Vec3) -> Self {
        Self {
            center,
            decaying_exterior: true,
        }
    }

    /// Value of the interior field.
    pub fn interior(&self, y: Vec3) -> f64 {
        let z = y - self.center;
        (z.x.sin() + z.y.sin()) * z.z.exp()
    }

    /// Gradient of the interior field.
    pub fn interior_grad(&self, y: Vec3) -> Vec3 {
        let z = y - self.center;
        let e = z.z.exp();
        Vec3::new(z.x.cos() * e, z.y.cos() * e, (z.x.sin() + z.y.sin()) * e)
    }

    /// Value of the exterior field.
    pub fn exterior(&self, y: Vec3) -> f64 {
        if self.decaying_exterior {
            1.0 / (y - self.center).norm()
        } else {
            0.0
        }
    }

    /// Gradient of the exterior field.
    pub fn exterior_grad(&self, y: Vec3) -> Vec3 {
        if self.decaying_exterior {
            let z = y - self.center;
            let r = z.norm();
            -z / (r * r * r)
        } else {
            Vec3::zeros()
        }
    }

    /// Jump in the normal derivative across the surface, which is the
    /// single layer density.
    pub fn single_density(&self, x: Vec3, n: Vec3) -> f64 {
        (self.exterior_grad(x) - self.interior_grad(x)).dot(&n)
    }

    /// Minus the jump in value across the surface, which is the double
    /// layer density.
    pub fn double_density(&self, x: Vec3) -> f64 {
        self.interior(x) - self.exterior(x)
    }

    /// Value of the pair on the side indicated.
    pub fn value(&self, y: Vec3, inside: bool) -> f64 {
        if inside {
            self.interior(y)
        } else {
            self.exterior(y)
        }
    }
}

/// Rigid rotation about the first axis, evaluated at a point. The
/// stresslet of this density over a closed surface reproduces the
/// rotation inside, half of it on the surface, and zero outside.
pub fn rotation_density(x: Vec3) -> Vec3 {
    Vec3::new(0.0, -x.z, x.y)
}

/// Surface force of a prolate spheroid with semiaxes (a, b, b)
/// translating along its long axis through unbounded viscous fluid.
/// The pointwise force follows the classical ellipsoidal distribution,
/// proportional to [x^2/a^4 + (y^2 + z^2)/b^4]^{-1/2}, scaled so the
/// total matches the known drag.
#[derive(Clone, Copy, Debug)]
pub struct SpheroidTraction {
    a: f64,
    b: f64,
    scale: f64,
    drag: f64,
}

impl SpheroidTraction {
    /// Traction for viscosity mu and translation speed along the long
    /// axis. Requires b < a.
    pub fn new(a: f64, b: f64, mu: f64, speed: f64) -> Self {
        assert!(b < a, "the long axis must come first");
        let e = (1.0 - (b * b) / (a * a)).sqrt();
        let l = ((1.0 + e) / (1.0 - e)).ln();
        let k = (8.0 / 3.0) * e.powi(3) / (-2.0 * e + (1.0 + e * e) * l);
        let drag = 6.0 * std::f64::consts::PI * mu * a * speed * k;
        let scale = drag / (4.0 * std::f64::consts::PI * a * b * b);
        Self { a, b, scale, drag }
    }

    /// Total force the body transmits to the fluid, along the axis of
    /// motion.
    pub fn drag(&self) -> f64 {
        self.drag
    }

    /// Pointwise surface force at a point given in body coordinates.
    pub fn density(&self, x: Vec3) -> Vec3 {
        let q = (x.x * x.x) / self.a.powi(4) + (x.y * x.y + x.z * x.z) / self.b.powi(4);
        Vec3::new(self.scale / q.sqrt(), 0.0, 0.0)
    }
}

/// Surface tension quadratic in height about a reference level.
pub fn surface_tension(z: f64, z_ref: f64) -> f64 {
    1.0 + (z - z_ref) * (z - z_ref)
}

/// Jump in surface force across an interface carrying the quadratic
/// tension: the normal capillary term plus the tangential term from the
/// tension gradient. Integrates to zero over any closed surface.
pub fn interfacial_force(x: Vec3, n: Vec3, mean_curv: f64, z_ref: f64) -> Vec3 {
    let gamma = surface_tension(x.z, z_ref);
    let grad = Vec3::new(0.0, 0.0, 2.0 * (x.z - z_ref));
    let tangential = grad - n * n.dot(&grad);
    n * (2.0 * gamma * mean_curv) - tangential
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::SurfaceQuadrature;
    use crate::surface::{Sphere, Surface};

    fn fd_laplacian(f: impl Fn(Vec3) -> f64, y: Vec3) -> f64 {
        let h = 1e-3;
        let mut acc = -6.0 * f(y);
        for ax in 0..3 {
            let mut e = Vec3::zeros();
            e[ax] = h;
            acc += f(y + e) + f(y - e);
        }
        acc / (h * h)
    }

    #[test]
    fn cubic_fields_are_harmonic_and_agree_on_the_sphere() {
        let pts = [
            Vec3::new(0.3, -0.2, 0.4),
            Vec3::new(-0.1, 0.5, -0.3),
            Vec3::new(1.4, 0.8, -1.1),
        ];
        for &y in &pts {
            assert!(fd_laplacian(cubic_harmonic_interior, y).abs() < 1e-4);
            if y.norm() > 1.0 {
                assert!(fd_laplacian(cubic_harmonic_exterior, y).abs() < 1e-4);
            }
        }
        let on = Vec3::new(0.6, 0.48, 0.64).normalize();
        let d = cubic_harmonic_density(on);
        assert!((cubic_harmonic_interior(on) - d).abs() < 1e-12);
        assert!((cubic_harmonic_exterior(on) - d).abs() < 1e-12);
    }

    /// Direct Simpson integration over the sphere, independent of the
    /// node quadrature, pins the constants in the closed forms.
    #[test]
    fn sphere_layer_closed_forms_match_direct_integration() {
        let y = Vec3::new(0.3, 0.2, 0.5);
        let nt = 400;
        let np = 800;
        let simpson_w = |i: usize, n: usize| -> f64 {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut single = 0.0;
        let mut double = 0.0;
        for i in 0..=nt {
            let th = std::f64::consts::PI * i as f64 / nt as f64;
            for j in 0..np {
                let ph = 2.0 * std::f64::consts::PI * j as f64 / np as f64;
                let x = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                let w = simpson_w(i, nt) / 3.0 * th.sin();
                let r = (x - y).norm();
                let f = cubic_harmonic_density(x);
                single += w * f * (-1.0 / r);
                double += w * f * (x - y).dot(&x) / (r * r * r);
            }
        }
        let cell = std::f64::consts::PI / nt as f64 * 2.0 * std::f64::consts::PI / np as f64;
        single *= cell / (4.0 * std::f64::consts::PI);
        double *= cell / (4.0 * std::f64::consts::PI);
        assert!((single - cubic_harmonic_single(y)).abs() < 1e-8);
        assert!((double - cubic_harmonic_double(y)).abs() < 1e-8);
    }

    #[test]
    fn harmonic_pair_fields_check_out() {
        let hp = HarmonicPair::with_decaying_exterior(Vec3::new(1.5, 1.5, 1.5));
        let inside = Vec3::new(1.6, 1.3, 1.7);
        let outside = Vec3::new(2.5, 0.8, 1.2);
        assert!(fd_laplacian(|p| hp.interior(p), inside).abs() < 1e-4);
        assert!(fd_laplacian(|p| hp.exterior(p), outside).abs() < 1e-4);
        let g = hp.interior_grad(inside);
        let h = 1e-6;
        let fd = (hp.interior(inside + Vec3::new(h, 0.0, 0.0)) - hp.interior(inside)) / h;
        assert!((g.x - fd).abs() < 1e-5);
        let go = hp.exterior_grad(outside);
        let fdo = (hp.exterior(outside + Vec3::new(0.0, h, 0.0)) - hp.exterior(outside)) / h;
        assert!((go.y - fdo).abs() < 1e-5);

        let basic = HarmonicPair::interior_only();
        let x = Vec3::new(0.2, -0.3, 0.4);
        let n = Vec3::new(0.6, 0.0, 0.8);
        assert_eq!(basic.exterior(x), 0.0);
        assert!((basic.single_density(x, n) + basic.interior_grad(x).dot(&n)).abs() < 1e-15);
        assert!((basic.double_density(x) - basic.interior(x)).abs() < 1e-15);
    }

    #[test]
    fn spheroid_traction_sums_to_the_classical_drag() {
        let tr = SpheroidTraction::new(1.0, 0.5, 1.0, 1.0);
        assert!((tr.drag() - 11.346877).abs() < 1e-5);

        // Parametrize x = a cos(th), (y, z) = b sin(th)(cos(ph), sin(ph))
        // and integrate the force with the exact area element.
        let a = 1.0;
        let b = 0.5;
        let nt = 400;
        let np = 400;
        let simpson_w = |i: usize, n: usize| -> f64 {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut total = 0.0;
        for i in 0..=nt {
            let th = std::f64::consts::PI * i as f64 / nt as f64;
            let (st, ct) = th.sin_cos();
            let area = b * st * (a * a * st * st + b * b * ct * ct).sqrt();
            for j in 0..np {
                let ph = 2.0 * std::f64::consts::PI * j as f64 / np as f64;
                let x = Vec3::new(a * ct, b * st * ph.cos(), b * st * ph.sin());
                total += simpson_w(i, nt) / 3.0 * area * tr.density(x).x;
            }
        }
        total *= std::f64::consts::PI / nt as f64 * 2.0 * std::f64::consts::PI / np as f64;
        assert!(
            (total - tr.drag()).abs() < 1e-8 * tr.drag(),
            "total {total} drag {}",
            tr.drag()
        );
    }

    #[test]
    fn interfacial_force_balances_over_a_closed_surface() {
        let sph = Sphere::new(Vec3::zeros(), 1.0);
        let quad = SurfaceQuadrature::build(&sph, 1.0 / 16.0).unwrap();
        let z_ref = 0.3;
        let mut total = Vec3::zeros();
        let mut normal_part = Vec3::zeros();
        for j in 0..quad.len() {
            let x = quad.nodes[j];
            let n = quad.normals[j];
            let hm = sph.mean_curvature(x);
            total += interfacial_force(x, n, hm, z_ref) * quad.weights[j];
            normal_part += n * (2.0 * surface_tension(x.z, z_ref) * hm * quad.weights[j]);
        }
        assert!(normal_part.norm() > 0.1, "cancellation must be nontrivial");
        assert!(total.norm() < 1e-6, "net force {total:?}");
    }

    #[test]
    fn interfacial_force_pointwise_values() {
        let pole = interfacial_force(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 1.0, 0.3);
        assert!((pole - Vec3::new(0.0, 0.0, 2.0 * 1.49)).norm() < 1e-14);
        let eq = interfacial_force(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 1.0, 0.3);
        assert!((eq - Vec3::new(2.0 * 1.09, 0.0, 0.6)).norm() < 1e-14);
    }
}
