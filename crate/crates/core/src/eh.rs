//! Energy-harvester transfer functions `g`: incident RF power to DC power.
//!
//! Powers are linear milliwatts throughout. The logistic model's constants
//! are expressed in microwatts (its input and output are converted
//! internally), matching the fitted values `p2 = 140`, `p3 = 84`.

use crate::error::{domain, invalid, Result};

/// Harvester model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EhModel {
    IdealLinear { eta: f64 },
    /// Zero below `w1`, `η·x` on `[w1, w2)`, `η·w2` from `w2` on.
    Piecewise { eta: f64, w1: f64, w2: f64 },
    /// Logistic fit with `p2`, `p3` in µW and `p1` in 1/µW.
    Logistic { p1: f64, p2: f64, p3: f64 },
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("eta", format!("must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

impl EhModel {
    pub fn ideal(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self::IdealLinear { eta })
    }

    pub fn piecewise(eta: f64, w1: f64, w2: f64) -> Result<Self> {
        check_eta(eta)?;
        if !(w1 >= 0.0) || !w1.is_finite() {
            return Err(invalid("w1", format!("sensitivity must be finite and non-negative, got {w1}")));
        }
        if !(w2 > w1) {
            return Err(invalid("w2", format!("saturation {w2} must exceed sensitivity {w1}")));
        }
        Ok(Self::Piecewise { eta, w1, w2 })
    }

    pub fn logistic(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2", p2), ("p3", p3)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(Self::Logistic { p1, p2, p3 })
    }

    /// Sensitivity −22 dBm, saturation −4.8 dBm, 25 % efficiency.
    pub fn reference_piecewise() -> Self {
        Self::Piecewise { eta: 0.25, w1: dbm_to_linear(-22.0), w2: dbm_to_linear(-4.8) }
    }

    pub fn reference_logistic() -> Self {
        Self::Logistic { p1: 0.015, p2: 140.0, p3: 84.0 }
    }

    /// Conversion efficiency, if the model has one.
    pub fn eta(&self) -> Option<f64> {
        match *self {
            Self::IdealLinear { eta } | Self::Piecewise { eta, .. } => Some(eta),
            Self::Logistic { .. } => None,
        }
    }

    /// Harvested power for RF input `rf_in` (mW).
    pub fn harvest(&self, rf_in: f64) -> Result<f64> {
        if rf_in.is_nan() || rf_in < 0.0 {
            return Err(domain("harvest", format!("input power must be non-negative, got {rf_in}")));
        }
        Ok(self.g(rf_in))
    }

    /// Unchecked transfer function; `x ≥ 0`.
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        match *self {
            Self::IdealLinear { eta } => eta * x,
            Self::Piecewise { eta, w1, w2 } => {
                if x < w1 {
                    0.0
                } else if x < w2 {
                    eta * x
                } else {
                    eta * w2
                }
            }
            Self::Logistic { p1, p2, p3 } => {
                let x_uw = 1e3 * x;
                let c = (p1 * p2).exp();
                let ratio = (1.0 + c) / (1.0 + (-p1 * (x_uw - p2)).exp());
                (p3 * (ratio - 1.0) / c).max(0.0) * 1e-3
            }
        }
    }
}

/// dBm to mW.
pub fn dbm_to_linear(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// mW to dBm.
pub fn linear_to_dbm(p: f64) -> f64 {
    10.0 * p.log10()
}
