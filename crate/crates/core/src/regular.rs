//! Smoothing coefficients and shape factors for the regularized kernels.
//!
//! Each regularized kernel is the singular kernel multiplied by a shape
//! factor s(rho), where rho = r / delta and delta is the smoothing length.
//! The factors interpolate smoothly between 0 at rho = 0 and 1 for large
//! rho. Their coefficients depend on the signed distance b of the
//! evaluation point from the surface through lambda = b / delta; the
//! dependence is even in lambda. With the coefficients below the leading
//! discretization moments cancel and the regularization error is
//! O(delta^p) uniformly on and near the surface.

use crate::config::Order;
use crate::special::{erf, erfcx, INV_SQRT_PI, SQRT_PI, TWO_OVER_SQRT_PI};

/// Coefficient triple entering the shape factor polynomials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

/// Exponentially scaled moments `(M0, M2, M4)` with `Mn = exp(lambda^2) In`,
/// where `In` is the n-th Gaussian distance moment. Scaling by
/// `exp(lambda^2)` keeps the values representable for large `|lambda|`;
/// the coefficient formulas only ever need the scaled form.
pub fn scaled_moments(lambda: f64) -> (f64, f64, f64) {
    let l = lambda.abs();
    let l2 = l * l;
    let ex = erfcx(l);
    let m0 = INV_SQRT_PI - l * ex;
    let m2 = (2.0 / 3.0) * ((0.5 - l2) * INV_SQRT_PI + l2 * l * ex);
    let m4 = (8.0 / 15.0) * ((0.75 - 0.5 * l2 + l2 * l2) * INV_SQRT_PI - l2 * l2 * l * ex);
    (m0, m2, m4)
}

/// Shape factor coefficients at signed distance ratio `lambda = b / delta`.
pub fn coeffs(order: Order, lambda: f64) -> Coeffs {
    let l2 = lambda * lambda;
    let (m0, m2, m4) = scaled_moments(lambda);
    match order {
        Order::P3 => Coeffs {
            a1: SQRT_PI * m0,
            a2: 0.0,
            a3: 0.0,
        },
        Order::P5 => {
            let a2 = 0.5 * SQRT_PI * (m0 - m2);
            Coeffs {
                a1: SQRT_PI * m0 + 2.0 * (l2 + 1.0) * a2,
                a2,
                a3: 0.0,
            }
        }
        Order::P7 => {
            let a3 = (SQRT_PI / 16.0) * (2.0 * m0 - 4.0 * m2 + m4);
            let a2 = 0.5 * SQRT_PI * (m0 - m2) + (4.0 * l2 + 7.0) * a3;
            let a1 = SQRT_PI * m0 + 2.0 * (l2 + 1.0) * a2 - (4.0 * l2 * l2 + 6.0 * l2 + 6.0) * a3;
            Coeffs { a1, a2, a3 }
        }
    }
}

/// Coefficients for the on-surface stresslet factors. These are constants
/// chosen for the principal value integral rather than functions of the
/// distance ratio.
pub fn star_coeffs(order: Order) -> Coeffs {
    match order {
        Order::P3 => Coeffs {
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
        },
        Order::P5 => Coeffs {
            a1: 1.0 / 3.0,
            a2: 0.0,
            a3: 0.0,
        },
        Order::P7 => Coeffs {
            a1: 3.0 / 5.0,
            a2: 1.0 / 15.0,
            a3: 0.0,
        },
    }
}

/// Shape factor for kernels with a 1/r singularity.
pub fn s1(rho: f64, c: &Coeffs) -> f64 {
    let r2 = rho * rho;
    let poly = c.a1 * rho - 2.0 * (c.a2 + c.a3) * rho * r2 + 4.0 * c.a3 * rho * r2 * r2;
    erf(rho) + TWO_OVER_SQRT_PI * poly * (-r2).exp()
}

/// Shape factor for kernels with a 1/r^3 singularity.
pub fn s2(rho: f64, c: &Coeffs) -> f64 {
    let r2 = rho * rho;
    let r3 = rho * r2;
    let poly = -rho + 2.0 * (c.a1 + 2.0 * c.a2 + 2.0 * c.a3) * r3
        - 4.0 * (c.a2 + 5.0 * c.a3) * r3 * r2
        + 8.0 * c.a3 * r3 * r2 * r2;
    erf(rho) + TWO_OVER_SQRT_PI * poly * (-r2).exp()
}

/// Shape factor for kernels with a 1/r^5 singularity.
pub fn s3(rho: f64, c: &Coeffs) -> f64 {
    let r2 = rho * rho;
    let r5 = rho * r2 * r2;
    let e = (-r2).exp();
    let poly = (c.a1 + 4.0 * c.a2 + 12.0 * c.a3) * r5 - 2.0 * (c.a2 + 9.0 * c.a3) * r5 * r2
        + 4.0 * c.a3 * r5 * r2 * r2;
    erf(rho) - TWO_OVER_SQRT_PI * (rho + (2.0 / 3.0) * rho * r2) * e
        + (8.0 / (3.0 * SQRT_PI)) * poly * e
}

/// Limit of `s1(rho) / rho` as rho goes to 0, used for self interaction
/// terms of the single layer kernels.
pub fn s1_over_rho_limit(c: &Coeffs) -> f64 {
    TWO_OVER_SQRT_PI * (1.0 + c.a1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn scaled_moments_on_surface() {
        let (m0, m2, m4) = scaled_moments(0.0);
        assert_relative_eq!(m0, INV_SQRT_PI, max_relative = 1e-15);
        assert_relative_eq!(m2, INV_SQRT_PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(m4, 0.4 * INV_SQRT_PI, max_relative = 1e-15);
    }

    #[test]
    fn scaled_moments_match_unscaled_for_small_lambda() {
        use crate::special::erfc;
        for &l in &[0.1, 0.5, 1.0, 2.0, 3.0] {
            let (m0, m2, m4) = scaled_moments(l);
            let e = (-l * l).exp();
            let i0 = e * INV_SQRT_PI - l * erfc(l);
            let i2 = (2.0 / 3.0) * ((0.5 - l * l) * e * INV_SQRT_PI + l.powi(3) * erfc(l));
            let i4 = (8.0 / 15.0)
                * ((0.75 - 0.5 * l * l + l.powi(4)) * e * INV_SQRT_PI - l.powi(5) * erfc(l));
            assert_relative_eq!(m0 * e, i0, max_relative = 1e-13);
            assert_relative_eq!(m2 * e, i2, max_relative = 1e-13);
            assert_relative_eq!(m4 * e, i4, max_relative = 1e-12, epsilon = 1e-18);
        }
    }

    #[test]
    fn coefficients_on_surface() {
        let c7 = coeffs(Order::P7, 0.0);
        assert_relative_eq!(c7.a1, 11.0 / 5.0, max_relative = 1e-14);
        assert_relative_eq!(c7.a2, 4.0 / 5.0, max_relative = 1e-14);
        assert_relative_eq!(c7.a3, 1.0 / 15.0, max_relative = 1e-14);

        let c5 = coeffs(Order::P5, 0.0);
        assert_relative_eq!(c5.a1, 5.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(c5.a2, 1.0 / 3.0, max_relative = 1e-14);
        assert_eq!(c5.a3, 0.0);

        let c3 = coeffs(Order::P3, 0.0);
        assert_relative_eq!(c3.a1, 1.0, max_relative = 1e-14);
        assert_eq!(c3.a2, 0.0);
        assert_eq!(c3.a3, 0.0);
    }

    #[test]
    fn coefficients_even_in_lambda() {
        for order in [Order::P3, Order::P5, Order::P7] {
            for &l in &[0.25, 1.0, 2.5, 7.9] {
                assert_eq!(coeffs(order, l), coeffs(order, -l));
            }
        }
    }

    #[test]
    fn coefficients_finite_over_working_range() {
        for order in [Order::P3, Order::P5, Order::P7] {
            for k in 0..=400 {
                let l = k as f64 * 0.1;
                let c = coeffs(order, l);
                assert!(c.a1.is_finite() && c.a2.is_finite() && c.a3.is_finite());
            }
        }
    }

    // On the surface the factors collapse to fixed polynomials in rho times
    // the Gaussian. These forms are frozen here as an independent check of
    // the coefficient and factor algebra.

    fn poly_factor(rho: f64, terms: &[(f64, i32)]) -> f64 {
        let p: f64 = terms.iter().map(|&(c, k)| c * rho.powi(k)).sum();
        erf(rho) + TWO_OVER_SQRT_PI * p * (-rho * rho).exp()
    }

    #[test]
    fn on_surface_factor_polynomials() {
        let c7 = coeffs(Order::P7, 0.0);
        let c3 = coeffs(Order::P3, 0.0);
        let b7 = star_coeffs(Order::P7);
        let b5 = star_coeffs(Order::P5);
        for k in 0..=160 {
            let rho = k as f64 * 0.05;
            assert_relative_eq!(
                s1(rho, &c7),
                poly_factor(rho, &[(11.0 / 5.0, 1), (-26.0 / 15.0, 3), (4.0 / 15.0, 5)]),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
            assert_relative_eq!(
                s2(rho, &c7),
                poly_factor(
                    rho,
                    &[
                        (-1.0, 1),
                        (118.0 / 15.0, 3),
                        (-68.0 / 15.0, 5),
                        (8.0 / 15.0, 7)
                    ]
                ),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
            assert_relative_eq!(
                s2(rho, &c3),
                poly_factor(rho, &[(-1.0, 1), (2.0, 3)]),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
            assert_relative_eq!(
                s2(rho, &b7),
                poly_factor(rho, &[(-1.0, 1), (22.0 / 15.0, 3), (-4.0 / 15.0, 5)]),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
            assert_relative_eq!(
                s2(rho, &b5),
                poly_factor(rho, &[(-1.0, 1), (2.0 / 3.0, 3)]),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
            assert_relative_eq!(
                s3(rho, &b7),
                poly_factor(
                    rho,
                    &[
                        (-1.0, 1),
                        (-2.0 / 3.0, 3),
                        (52.0 / 45.0, 5),
                        (-8.0 / 45.0, 7)
                    ]
                ),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
            assert_relative_eq!(
                s3(rho, &b5),
                poly_factor(rho, &[(-1.0, 1), (-2.0 / 3.0, 3), (4.0 / 9.0, 5)]),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn factors_vanish_at_zero_and_saturate() {
        for order in [Order::P3, Order::P5, Order::P7] {
            for &l in &[0.0, 0.4, 1.3, 3.0] {
                let c = coeffs(order, l);
                assert_eq!(s1(0.0, &c), 0.0);
                assert_eq!(s2(0.0, &c), 0.0);
                assert_eq!(s3(0.0, &c), 0.0);
                assert_eq!(s1(8.0, &c), 1.0);
                assert_eq!(s2(8.0, &c), 1.0);
                assert_eq!(s3(8.0, &c), 1.0);
            }
        }
    }

    #[test]
    fn s1_small_rho_limit() {
        let c = coeffs(Order::P7, 0.7);
        let lim = s1_over_rho_limit(&c);
        for &rho in &[1e-4, 1e-5, 1e-6] {
            assert_relative_eq!(s1(rho, &c) / rho, lim, max_relative = 1e-7);
        }
        let c0 = coeffs(Order::P7, 0.0);
        assert_relative_eq!(
            s1_over_rho_limit(&c0),
            TWO_OVER_SQRT_PI * 16.0 / 5.0,
            max_relative = 1e-14
        );
    }

    proptest! {
        #[test]
        fn factors_bounded_and_saturating(
            lambda in -40.0f64..40.0,
            rho in 0.0f64..12.0,
        ) {
            for order in [Order::P3, Order::P5, Order::P7] {
                let c = coeffs(order, lambda);
                for s in [s1(rho, &c), s2(rho, &c), s3(rho, &c)] {
                    prop_assert!(s.is_finite());
                    prop_assert!(s.abs() <= 30.0, "factor {s} out of range");
                    if rho >= 7.0 {
                        prop_assert!((s - 1.0).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
