//! Implicit surface descriptions and closest point queries.
//!
//! A surface is the zero level set of a smooth function phi that is
//! negative inside and positive outside. Everything downstream works
//! through the `Surface` trait: the quadrature construction needs phi
//! along grid lines and gradients at the nodes, the evaluators need
//! closest points and normals, and the grid solvers need the indicator
//! side of each grid node.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Closest point data for a query point y: the foot of the perpendicular
/// on the surface, the signed distance b with b < 0 inside, and the
/// outward unit normal at the foot.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub foot: Vec3,
    pub b: f64,
    pub normal: Vec3,
}

/// Tangential part of an ambient gradient at a point with unit normal n.
pub fn surface_gradient(grad: Vec3, n: Vec3) -> Vec3 {
    grad - n * n.dot(&grad)
}

pub trait Surface {
    /// Level set function, negative inside.
    fn phi(&self, x: Vec3) -> f64;

    /// Gradient of phi.
    fn grad(&self, x: Vec3) -> Vec3;

    /// Hessian of phi.
    fn hess(&self, x: Vec3) -> Mat3;

    /// Axis aligned box that contains the surface.
    fn bounds(&self) -> (Vec3, Vec3);

    /// Outward unit normal, valid where grad does not vanish.
    fn normal(&self, x: Vec3) -> Vec3 {
        self.grad(x).normalize()
    }

    /// Mean curvature with the convention that a unit sphere has H = 1.
    fn mean_curvature(&self, x: Vec3) -> f64 {
        let g = self.grad(x);
        let hess = self.hess(x);
        let g2 = g.norm_squared();
        (hess.trace() * g2 - (hess * g).dot(&g)) / (2.0 * g2 * g.norm())
    }

    /// Diagonal of the bounding box, used as the length scale for
    /// tolerances.
    fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (hi - lo).norm()
    }

    /// Indicator of the interior: 1 inside, 0 outside, 1/2 within a
    /// thin tolerance band of the surface.
    fn chi(&self, x: Vec3) -> f64 {
        let ph = self.phi(x);
        let gn = self.grad(x).norm();
        let tol = 1e-10 * self.diameter();
        if ph.abs() <= gn * tol {
            0.5
        } else if ph < 0.0 {
            1.0
        } else {
            0.0
        }
    }

    /// Closest point on the surface, found by projection iterations that
    /// bring the query near the surface followed by a damped Newton
    /// solve. Fails near critical points of phi where the foot is not
    /// defined by the local gradient.
    fn closest_point(&self, y: Vec3) -> Result<SurfacePoint> {
        let scale = self.diameter();
        let cap = 0.02 * scale;
        let mut x = y;
        for _ in 0..400 {
            let ph = self.phi(x);
            if ph.abs() <= 1e-6 * scale {
                break;
            }
            let g = self.grad(x);
            let g2 = g.norm_squared();
            if g2 < 1e-28 {
                return Err(Error::ClosestPointDiverged(y.x, y.y, y.z));
            }
            let mut step = g * (-ph / g2);
            let len = step.norm();
            if len > cap {
                step *= cap / len;
            }
            x += step;
        }
        self.closest_point_from(y, x)
    }

    /// Damped Newton solve for the closest point starting from a seed at
    /// or near the surface. The unknowns are the foot x0 and the offset
    /// t along the gradient, with y = x0 + t grad(x0) and phi(x0) = 0.
    fn closest_point_from(&self, y: Vec3, seed: Vec3) -> Result<SurfacePoint> {
        let scale = self.diameter();
        let tol = 1e-12 * scale;
        let cap = 0.1 * scale;
        let mut x = seed;
        let g0 = self.grad(x);
        let g02 = g0.norm_squared();
        if g02 < 1e-28 {
            return Err(Error::ClosestPointDiverged(y.x, y.y, y.z));
        }
        let mut t = (y - x).dot(&g0) / g02;
        for _ in 0..50 {
            let g = self.grad(x);
            let ph = self.phi(x);
            let res = x + g * t - y;
            if ph.abs() <= tol && res.norm() <= 10.0 * tol {
                let gn = g.norm();
                if gn < 1e-14 {
                    return Err(Error::ClosestPointDiverged(y.x, y.y, y.z));
                }
                return Ok(SurfacePoint {
                    foot: x,
                    b: t * gn,
                    normal: g / gn,
                });
            }
            let hess = self.hess(x);
            let mut jac = Matrix4::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    jac[(i, j)] = t * hess[(i, j)] + if i == j { 1.0 } else { 0.0 };
                }
                jac[(i, 3)] = g[i];
                jac[(3, i)] = g[i];
            }
            let rhs = Vector4::new(-res.x, -res.y, -res.z, -ph);
            let Some(update) = jac.lu().solve(&rhs) else {
                return Err(Error::ClosestPointDiverged(y.x, y.y, y.z));
            };
            let mut dx = Vec3::new(update.x, update.y, update.z);
            let mut dt = update.w;
            let len = dx.norm();
            if len > cap {
                let s = cap / len;
                dx *= s;
                dt *= s;
            }
            x += dx;
            t += dt;
        }
        Err(Error::ClosestPointDiverged(y.x, y.y, y.z))
    }
}

/// Sphere of radius R centered at c, with phi scaled so that the
/// gradient has unit length on the surface.
#[derive(Clone, Debug)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Sphere { center, radius }
    }

    pub fn unit() -> Self {
        Sphere::new(Vec3::zeros(), 1.0)
    }
}

impl Surface for Sphere {
    fn phi(&self, x: Vec3) -> f64 {
        let d = x - self.center;
        (d.norm_squared() - self.radius * self.radius) / (2.0 * self.radius)
    }

    fn grad(&self, x: Vec3) -> Vec3 {
        (x - self.center) / self.radius
    }

    fn hess(&self, _x: Vec3) -> Mat3 {
        Mat3::identity() / self.radius
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        let r = Vec3::repeat(self.radius);
        (self.center - r, self.center + r)
    }

    fn closest_point(&self, y: Vec3) -> Result<SurfacePoint> {
        let d = y - self.center;
        let dn = d.norm();
        // At the exact center every direction is equally close; the +x
        // foot serves, and callers there only need the distance.
        let normal = if dn < 1e-14 * self.radius {
            Vec3::x()
        } else {
            d / dn
        };
        Ok(SurfacePoint {
            foot: self.center + normal * self.radius,
            b: dn - self.radius,
            normal,
        })
    }

    fn closest_point_from(&self, y: Vec3, _seed: Vec3) -> Result<SurfacePoint> {
        self.closest_point(y)
    }
}

/// Axis aligned ellipsoid with semi axes a.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub semi_axes: Vec3,
}

impl Ellipsoid {
    pub fn new(center: Vec3, semi_axes: Vec3) -> Self {
        Ellipsoid { center, semi_axes }
    }
}

impl Surface for Ellipsoid {
    fn phi(&self, x: Vec3) -> f64 {
        let d = x - self.center;
        let a = self.semi_axes;
        (d.x / a.x).powi(2) + (d.y / a.y).powi(2) + (d.z / a.z).powi(2) - 1.0
    }

    fn grad(&self, x: Vec3) -> Vec3 {
        let d = x - self.center;
        let a = self.semi_axes;
        Vec3::new(
            2.0 * d.x / (a.x * a.x),
            2.0 * d.y / (a.y * a.y),
            2.0 * d.z / (a.z * a.z),
        )
    }

    fn hess(&self, _x: Vec3) -> Mat3 {
        let a = self.semi_axes;
        Mat3::from_diagonal(&Vec3::new(
            2.0 / (a.x * a.x),
            2.0 / (a.y * a.y),
            2.0 / (a.z * a.z),
        ))
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        (self.center - self.semi_axes, self.center + self.semi_axes)
    }
}

/// Level set built from a sum of Gaussians centered at atom positions,
/// giving a smooth molecular style surface.
#[derive(Clone, Debug)]
pub struct Molecular {
    pub centers: Vec<Vec3>,
    /// Gaussian width.
    pub r: f64,
    /// Level value; larger values shrink the surface.
    pub c: f64,
}

impl Molecular {
    pub fn new(centers: Vec<Vec3>, r: f64, c: f64) -> Self {
        Molecular { centers, r, c }
    }

    /// Four atoms at the vertices of a regular tetrahedron with unit edge
    /// length centered at `center`, with the default width and level.
    pub fn tetrahedron(center: Vec3) -> Self {
        let s3 = 3.0_f64.sqrt();
        let s6 = 6.0_f64.sqrt();
        let verts = [
            Vec3::new(s3 / 3.0, 0.0, -s6 / 12.0),
            Vec3::new(-s3 / 6.0, 0.5, -s6 / 12.0),
            Vec3::new(-s3 / 6.0, -0.5, -s6 / 12.0),
            Vec3::new(0.0, 0.0, s6 / 4.0),
        ];
        Molecular::new(verts.iter().map(|v| center + v).collect(), 0.5, 0.6)
    }
}

impl Surface for Molecular {
    fn phi(&self, x: Vec3) -> f64 {
        let inv_r2 = 1.0 / (self.r * self.r);
        let mut sum = 0.0;
        for ck in &self.centers {
            sum += (-(x - ck).norm_squared() * inv_r2).exp();
        }
        self.c - sum
    }

    fn grad(&self, x: Vec3) -> Vec3 {
        let inv_r2 = 1.0 / (self.r * self.r);
        let mut g = Vec3::zeros();
        for ck in &self.centers {
            let d = x - ck;
            g += d * (2.0 * inv_r2 * (-d.norm_squared() * inv_r2).exp());
        }
        g
    }

    fn hess(&self, x: Vec3) -> Mat3 {
        let inv_r2 = 1.0 / (self.r * self.r);
        let mut h = Mat3::zeros();
        for ck in &self.centers {
            let d = x - ck;
            let e = (-d.norm_squared() * inv_r2).exp();
            h += (Mat3::identity() - (d * d.transpose()) * (2.0 * inv_r2)) * (2.0 * inv_r2 * e);
        }
        h
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        // The surface can extend at most r sqrt(ln(k / c)) from the
        // nearest atom, since k Gaussians each contribute at most
        // exp(-d^2 / r^2).
        let k = self.centers.len() as f64;
        let margin = 1.05 * self.r * (k / self.c).ln().sqrt() + 1e-6;
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for ck in &self.centers {
            lo = lo.inf(ck);
            hi = hi.sup(ck);
        }
        (lo - Vec3::repeat(margin), hi + Vec3::repeat(margin))
    }
}

/// A surface rotated rigidly about its own center.
#[derive(Clone, Debug)]
pub struct Rotated<S> {
    pub inner: S,
    pub center: Vec3,
    /// Body to world rotation.
    pub rot: Mat3,
}

impl<S: Surface> Rotated<S> {
    pub fn new(inner: S, center: Vec3, rot: Mat3) -> Self {
        Rotated { inner, center, rot }
    }

    /// Rotation by `angle` radians about the z axis.
    pub fn about_z(inner: S, center: Vec3, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let rot = Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        Rotated::new(inner, center, rot)
    }

    fn to_body(&self, x: Vec3) -> Vec3 {
        self.center + self.rot.transpose() * (x - self.center)
    }

    fn to_world(&self, xi: Vec3) -> Vec3 {
        self.center + self.rot * (xi - self.center)
    }
}

impl<S: Surface> Surface for Rotated<S> {
    fn phi(&self, x: Vec3) -> f64 {
        self.inner.phi(self.to_body(x))
    }

    fn grad(&self, x: Vec3) -> Vec3 {
        self.rot * self.inner.grad(self.to_body(x))
    }

    fn hess(&self, x: Vec3) -> Mat3 {
        self.rot * self.inner.hess(self.to_body(x)) * self.rot.transpose()
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        let (lo, hi) = self.inner.bounds();
        let mut wlo = Vec3::repeat(f64::INFINITY);
        let mut whi = Vec3::repeat(f64::NEG_INFINITY);
        for i in 0..8 {
            let corner = Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            );
            let w = self.to_world(corner);
            wlo = wlo.inf(&w);
            whi = whi.sup(&w);
        }
        (wlo, whi)
    }

    fn closest_point(&self, y: Vec3) -> Result<SurfacePoint> {
        let cp = self.inner.closest_point(self.to_body(y))?;
        Ok(SurfacePoint {
            foot: self.to_world(cp.foot),
            b: cp.b,
            normal: self.rot * cp.normal,
        })
    }

    fn closest_point_from(&self, y: Vec3, seed: Vec3) -> Result<SurfacePoint> {
        let cp = self
            .inner
            .closest_point_from(self.to_body(y), self.to_body(seed))?;
        Ok(SurfacePoint {
            foot: self.to_world(cp.foot),
            b: cp.b,
            normal: self.rot * cp.normal,
        })
    }
}
