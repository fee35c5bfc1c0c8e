//! Singular kernels of potential theory and their regularized forms.
//!
//! The regularized kernels multiply each singular factor by a shape
//! factor matched to the strength of the singularity: s1 for 1/r, s2 for
//! 1/r^3, s3 for 1/r^5. All factors saturate to 1 well inside eight
//! smoothing lengths, so beyond the cutoff the plain forms apply.

use crate::regular::{s1, s1_over_rho_limit, s2, s3, Coeffs};
use crate::surface::Vec3;

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Distance below which two points count as coincident.
pub const COINCIDENT: f64 = 1e-14;

/// Free space Green function G(r) = -1/(4 pi |r|).
pub fn green(r: Vec3) -> f64 {
    -1.0 / (FOUR_PI * r.norm())
}

/// Gradient of G with respect to its first argument, r = x - y.
pub fn grad_green(r: Vec3) -> Vec3 {
    let rn = r.norm();
    r / (FOUR_PI * rn * rn * rn)
}

/// Regularized G; finite at r = 0.
pub fn reg_green(r: Vec3, delta: f64, c: &Coeffs) -> f64 {
    let rn = r.norm();
    if rn < COINCIDENT {
        return -s1_over_rho_limit(c) / (FOUR_PI * delta);
    }
    -s1(rn / delta, c) / (FOUR_PI * rn)
}

/// Regularized gradient of G; vanishes at r = 0.
pub fn reg_grad_green(r: Vec3, delta: f64, c: &Coeffs) -> Vec3 {
    let rn = r.norm();
    if rn < COINCIDENT {
        return Vec3::zeros();
    }
    r * (s2(rn / delta, c) / (FOUR_PI * rn * rn * rn))
}

/// Stokeslet applied to a strength vector: f/|r| + r (r.f)/|r|^3.
pub fn stokeslet_apply(r: Vec3, f: Vec3) -> Vec3 {
    let rn = r.norm();
    f / rn + r * (r.dot(&f) / (rn * rn * rn))
}

/// Regularized stokeslet. The r = 0 limit is (2/sqrt(pi))(1 + a1)/delta
/// times f.
pub fn reg_stokeslet_apply(r: Vec3, f: Vec3, delta: f64, c: &Coeffs) -> Vec3 {
    let rn = r.norm();
    if rn < COINCIDENT {
        return f * (s1_over_rho_limit(c) / delta);
    }
    let rho = rn / delta;
    f * (s1(rho, c) / rn) + r * (r.dot(&f) * s2(rho, c) / (rn * rn * rn))
}

/// Stresslet contracted with a strength q and a normal n:
/// T_ijk q_j n_k = -6 r_i (r.q)(r.n)/|r|^5.
pub fn stresslet_apply(r: Vec3, q: Vec3, n: Vec3) -> Vec3 {
    let rn = r.norm();
    let rn5 = rn * rn * rn * rn * rn;
    r * (-6.0 * r.dot(&q) * r.dot(&n) / rn5)
}

/// Stresslet with a single shape factor for the 1/r^5 singularity, used
/// with the principal value coefficients for on-surface evaluation.
pub fn reg_stresslet_apply(r: Vec3, q: Vec3, n: Vec3, delta: f64, c: &Coeffs) -> Vec3 {
    let rn = r.norm();
    if rn < COINCIDENT {
        return Vec3::zeros();
    }
    stresslet_apply(r, q, n) * s3(rn / delta, c)
}

/// Stresslet at a point off the surface, split by singularity strength.
///
/// With b the signed distance of the target, n0 the unit normal at its
/// foot x0, and xhat = x - x0 the node offset, the displacement is
/// r = y - x = b n0 - xhat. The stresslet then splits exactly into a
/// part that blows up like 1/r^3 and a remainder like 1/r^5, and each
/// part takes the shape factor matched to its strength. Contraction with
/// q and n is carried out directly.
pub fn reg_stresslet_split_apply(
    b: f64,
    n0: Vec3,
    xhat: Vec3,
    q: Vec3,
    n: Vec3,
    delta: f64,
    c: &Coeffs,
) -> Vec3 {
    let r = n0 * b - xhat;
    let rn = r.norm();
    if rn < COINCIDENT {
        return Vec3::zeros();
    }
    let rho = rn / delta;
    let rn3 = rn * rn * rn;
    let rn5 = rn3 * rn * rn;
    let eta = xhat.norm_squared() - 2.0 * b * xhat.dot(&n0);
    let a = n0.dot(&q);
    let bb = n0.dot(&n);
    let cc = xhat.dot(&n);
    let d = xhat.dot(&q);
    let sym = n0 * (a * cc + d * bb) + xhat * (a * bb);
    let t1 = (n0 * (b * a * bb) - sym) * (-6.0 / rn3);
    let t2 =
        (n0 * (-b * eta * a * bb) + sym * eta + (n0 * (d * cc) + xhat * (a * cc + d * bb)) * b
            - xhat * (d * cc))
            * (-6.0 / rn5);
    t1 * s2(rho, c) + t2 * s3(rho, c)
}
