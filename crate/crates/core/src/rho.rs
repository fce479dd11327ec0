//! Tukey bisquare ρ-function family.
//!
//! `rho` is bounded with `rho(∞) = 1` and serves both as the ρ of the
//! regression equations and as the χ of the scale equation. `psi` is
//! standardized to `psi'(0) = 1`, so `d/dv rho(v) = (6 / c²) · psi(v)`.

use crate::error::{Error, Result};

/// Tuning constant giving `E[rho(Z)] = 0.5` for standard normal `Z`.
pub const DEFAULT_TUNING: f64 = 1.54764;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisquare {
    c: f64,
}

impl Default for Bisquare {
    fn default() -> Self {
        Bisquare { c: DEFAULT_TUNING }
    }
}

impl Bisquare {
    pub fn new(tuning_c: f64) -> Result<Self> {
        if !(tuning_c.is_finite() && tuning_c > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bisquare tuning constant must be positive and finite, got {tuning_c}"
            )));
        }
        Ok(Bisquare { c: tuning_c })
    }

    #[inline]
    pub fn tuning(&self) -> f64 {
        self.c
    }

    /// Ratio between `rho'` and `psi`: `6 / c²`.
    #[inline]
    pub fn derivative_ratio(&self) -> f64 {
        6.0 / (self.c * self.c)
    }

    #[inline]
    pub fn rho(&self, v: f64) -> f64 {
        let u = v / self.c;
        let u2 = u * u;
        if u2 >= 1.0 {
            1.0
        } else {
            let t = 1.0 - u2;
            1.0 - t * t * t
        }
    }

    #[inline]
    pub fn psi(&self, v: f64) -> f64 {
        let u = v / self.c;
        let u2 = u * u;
        if u2 >= 1.0 {
            0.0
        } else {
            let t = 1.0 - u2;
            v * t * t
        }
    }

    /// Robustness weight `psi(v) / v`, equal to 1 at the origin.
    #[inline]
    pub fn weight(&self, v: f64) -> f64 {
        let u = v / self.c;
        let u2 = u * u;
        if u2 >= 1.0 {
            0.0
        } else {
            let t = 1.0 - u2;
            t * t
        }
    }

    /// Inverse of `rho` on `[0, c]`: the `q ≥ 0` with `rho(q) = level`.
    pub fn rho_inverse(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        if level >= 1.0 {
            return self.c;
        }
        // 1 - (1 - u²)³ = level  =>  u² = 1 - (1 - level)^(1/3)
        self.c * (1.0 - (1.0 - level).cbrt()).sqrt()
    }
}
