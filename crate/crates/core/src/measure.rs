//! The velocity/length measure of the gas and its closed-form statistics.
//!
//! Everything downstream (sampling, recentering, acceptance targets) pulls
//! its analytic values from here. The measure is canonically a finite
//! discrete mixture, so all formulas reduce to finite sums and the analytic
//! layer carries no quadrature error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;
/// Tolerance at which the two covariance-rate routes must agree.
const GAMMA_ROUTE_TOL: f64 = 1e-12;

/// One atom of the discrete mixture: velocity, signed rod length, weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub v: f64,
    pub r: f64,
    pub w: f64,
}

/// A finite discrete probability on (velocity, length) together with the
/// gas number density `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityLengthMeasure {
    atoms: Vec<Atom>,
    rho: f64,
}

/// First and second length-weighted moments of the gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// Length density: rho * sum w r.
    pub sigma: f64,
    /// Momentum density: rho * sum w r v.
    pub pi: f64,
    /// Squared-length weight: rho * sum w r^2.
    pub r2: f64,
}

impl VelocityLengthMeasure {
    pub fn new(atoms: Vec<Atom>, rho: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        // negated form so NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidMeasure(format!("rho must be > 0, got {rho}")));
        }
        let mut wsum = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if !a.v.is_finite() || !a.r.is_finite() || !a.w.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom {i}")));
            }
            if a.w <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has non-positive weight {}",
                    a.w
                )));
            }
            wsum += a.w;
        }
        if (wsum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {wsum}, expected 1"
            )));
        }
        let m = Self { atoms, rho };
        let sigma = m.moments().sigma;
        if 1.0 + sigma <= 0.0 {
            // The dilation map degenerates for 1 + sigma <= 0.
            return Err(Error::InvalidMeasure(format!(
                "1 + sigma = {} must be positive",
                1.0 + sigma
            )));
        }
        Ok(m)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Length density, momentum density and squared-length weight.
    pub fn moments(&self) -> Moments {
        let mut sigma = 0.0;
        let mut pi = 0.0;
        let mut r2 = 0.0;
        for a in &self.atoms {
            sigma += a.w * a.r;
            pi += a.w * a.r * a.v;
            r2 += a.w * a.r * a.r;
        }
        Moments {
            sigma: self.rho * sigma,
            pi: self.rho * pi,
            r2: self.rho * r2,
        }
    }

    /// Largest velocity gap between two atoms; bounds every flow interval.
    pub fn velocity_span(&self) -> f64 {
        let min = self.atoms.iter().map(|a| a.v).fold(f64::INFINITY, f64::min);
        let max = self
            .atoms
            .iter()
            .map(|a| a.v)
            .fold(f64::NEG_INFINITY, f64::max);
        max - min
    }

    /// Variance rate of the recentered tagged displacement at velocity `v`:
    /// rho * sum w r^2 |v - v_i|.
    pub fn diffusion_coefficient(&self, v: f64) -> f64 {
        self.rho
            * self
                .atoms
                .iter()
                .map(|a| a.w * a.r * a.r * (v - a.v).abs())
                .sum::<f64>()
    }

    /// Covariance rate between recentered displacements at two velocities.
    ///
    /// Two algebraically equivalent routes are evaluated; they must agree to
    /// `1e-12` or the analytic layer is broken.
    pub fn gamma(&self, v: f64, w: f64) -> f64 {
        let ind = self.gamma_by_indicators(v, w);
        let closed = self.gamma_closed_form(v, w);
        assert!(
            (ind - closed).abs() <= GAMMA_ROUTE_TOL * (1.0 + ind.abs().max(closed.abs())),
            "gamma routes disagree: {ind} vs {closed}"
        );
        ind
    }

    /// Indicator-sum route: rho * sum w r^2 [ (v_lo - v_i)+ indicator below
    /// plus (v_i - v_hi)+ indicator above ].
    pub fn gamma_by_indicators(&self, v: f64, w: f64) -> f64 {
        let (lo, hi) = if v <= w { (v, w) } else { (w, v) };
        self.rho
            * self
                .atoms
                .iter()
                .map(|a| {
                    let below = if a.v < lo { lo - a.v } else { 0.0 };
                    let above = if a.v > hi { a.v - hi } else { 0.0 };
                    a.w * a.r * a.r * (below + above)
                })
                .sum::<f64>()
    }

    /// Closed-form route: (D(lo) + D(hi) - (hi - lo) * r2) / 2.
    pub fn gamma_closed_form(&self, v: f64, w: f64) -> f64 {
        let (lo, hi) = if v <= w { (v, w) } else { (w, v) };
        let m = self.moments();
        0.5 * (self.diffusion_coefficient(lo) + self.diffusion_coefficient(hi) - (hi - lo) * m.r2)
    }
}

/// Euler-scale drift of a velocity-`v` quasi-particle: v (1 + sigma) - pi.
pub fn effective_velocity(v: f64, m: &Moments) -> f64 {
    v * (1.0 + m.sigma) - m.pi
}
