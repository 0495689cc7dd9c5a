//! Physical constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fine-structure constant as the plain fraction 1/137.
///
/// This is the default coupling for the symmetric-phase polarization; use
/// [`PhysicalConstants::with_alpha`] to switch to the CODATA value when the
/// extra digits matter.
pub const ALPHA_1_137: f64 = 1.0 / 137.0;

/// CODATA 2018 fine-structure constant.
pub const ALPHA_CODATA: f64 = 7.297_352_569_3e-3;

/// The constants entering the vacuum emission rate and the polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Speed of light (m/s).
    pub c: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Fine-structure constant (dimensionless).
    pub alpha: f64,
}

impl PhysicalConstants {
    /// CODATA 2018 SI values with alpha = 1/137.
    pub fn si() -> Self {
        Self {
            hbar: 1.054_571_817e-34,
            c: 299_792_458.0,
            eps0: 8.854_187_812_8e-12,
            alpha: ALPHA_1_137,
        }
    }

    /// Same SI values with a caller-chosen fine-structure constant.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        let mut k = Self::si();
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "fine-structure constant must lie in (0, 1), got {alpha}"
            )));
        }
        k.alpha = alpha;
        Ok(k)
    }

    /// Validated fully custom constants.
    pub fn new(hbar: f64, c: f64, eps0: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("c", c), ("eps0", eps0), ("alpha", alpha)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if alpha >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "fine-structure constant must be < 1, got {alpha}"
            )));
        }
        Ok(Self {
            hbar,
            c,
            eps0,
            alpha,
        })
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::si()
    }
}
