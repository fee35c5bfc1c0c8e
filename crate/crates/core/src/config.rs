//! Regularization order and smoothing-length policy.

use crate::{Error, Result};

/// Order of accuracy of the regularized surface integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    P3,
    P5,
    P7,
}

impl Order {
    /// Numeric order: the regularization error is O(delta^p).
    pub fn p(self) -> u32 {
        match self {
            Order::P3 => 3,
            Order::P5 => 5,
            Order::P7 => 7,
        }
    }

    /// Default grading exponent for the smoothing-length policy.
    pub fn default_q(self) -> f64 {
        match self {
            Order::P3 => 2.0 / 3.0,
            Order::P5 => 4.0 / 5.0,
            Order::P7 => 5.0 / 7.0,
        }
    }

    /// Default smoothing-length prefactor.
    pub fn default_kappa0(self) -> f64 {
        match self {
            Order::P3 => 2.0,
            Order::P5 => 3.0,
            Order::P7 => 4.0,
        }
    }

    pub fn from_p(p: u32) -> Result<Order> {
        match p {
            3 => Ok(Order::P3),
            5 => Ok(Order::P5),
            7 => Ok(Order::P7),
            _ => Err(Error::InvalidConfig(format!(
                "order must be 3, 5, or 7, got {p}"
            ))),
        }
    }
}

/// Parameters tying the smoothing length delta to the grid spacing h.
///
/// The policy is `delta = kappa0 * h0^(1-q) * h^q` with a reference spacing
/// `h0`. With `q = 1` this reduces to `delta = kappa0 * h`; with `q < 1` the
/// ratio `delta / h` grows as the grid is refined, which trades a larger
/// regularization stencil for a faster total convergence rate `p * q`.
#[derive(Clone, Copy, Debug)]
pub struct RegConfig {
    pub order: Order,
    pub q: f64,
    pub kappa0: f64,
    /// Reference spacing at which `delta = kappa0 * h0`.
    pub h0: f64,
    /// Number of smoothing lengths beyond which the regularized kernels are
    /// treated as the plain singular kernels.
    pub cutoff: f64,
}

impl RegConfig {
    /// Configuration with the per-order default policy.
    pub fn new(order: Order) -> Self {
        RegConfig {
            order,
            q: order.default_q(),
            kappa0: order.default_kappa0(),
            h0: 1.0 / 64.0,
            cutoff: 8.0,
        }
    }

    /// Configuration with an explicit policy, validated.
    pub fn with_policy(order: Order, q: f64, kappa0: f64) -> Result<Self> {
        let cfg = RegConfig {
            order,
            q,
            kappa0,
            ..RegConfig::new(order)
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "grading exponent q must lie in (0, 1], got {}",
                self.q
            )));
        }
        if !(self.kappa0.is_finite() && self.kappa0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kappa0 must be positive, got {}",
                self.kappa0
            )));
        }
        if !(self.h0.is_finite() && self.h0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "h0 must be positive, got {}",
                self.h0
            )));
        }
        if !(self.cutoff.is_finite() && self.cutoff >= 4.0) {
            return Err(Error::InvalidConfig(format!(
                "cutoff must be at least 4 smoothing lengths, got {}",
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Smoothing length for grid spacing `h`.
    pub fn delta(&self, h: f64) -> f64 {
        self.kappa0 * self.h0.powf(1.0 - self.q) * h.powf(self.q)
    }
}
