//! Closed-form emission rates on both sides of a second-order transition.
//!
//! Everything here works in dimensionless ratios: the photon mass enters as
//! `x = M c^2 / (hbar omega0)`, the correlation length as `xi / xi0`, the
//! rate as `Gamma / Gamma0`, and the temperature as `t = 1 - T / Tc`
//! (positive below the transition, negative above it). SI units appear only
//! in [`gamma_vacuum`].
//!
//! Below the transition the medium gaps the photon spectrum and the rate is
//! suppressed, `Gamma/Gamma0 = sqrt(1 - x^2)`, vanishing entirely once the
//! transition energy drops below the photon rest energy. Above it the photon
//! stays massless but order-parameter fluctuations renormalize the
//! propagator by `Z = 1/(1 - Pi)` with `Pi = (alpha/6 pi) ln(xi/xi0)`, which
//! enhances the rate and blows up at the perturbative pole `Pi -> 1`.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// `z_factor` refuses to evaluate once `Pi >= 1 - POLE_GUARD`; the one-loop
/// `Z` is not trustworthy that close to its pole.
pub const POLE_GUARD: f64 = 1e-9;

/// Default floor on `|t|` for symmetric-phase evaluations, guarding the
/// correlation-length divergence at the critical point.
pub const DEFAULT_T_FLOOR: f64 = 1e-12;

/// Two-level emitter: transition frequency and dipole magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    /// Transition angular frequency (rad/s).
    pub omega0: f64,
    /// Transition dipole moment magnitude (C m).
    pub mu: f64,
}

impl EmitterSpec {
    pub fn new(omega0: f64, mu: f64) -> Result<Self> {
        if !omega0.is_finite() || omega0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "transition frequency must be positive, got {omega0}"
            )));
        }
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "dipole magnitude must be positive, got {mu}"
            )));
        }
        Ok(Self { omega0, mu })
    }
}

/// Which side of the transition a reduced temperature lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// `t > 0`: below the transition, gapped photon.
    Broken,
    /// `t < 0`: above the transition, massless photon with renormalized
    /// propagator.
    Symmetric,
    /// `t = 0` exactly.
    Critical,
}

/// Reduced temperature `t = 1 - T/Tc`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReducedTemperature(f64);

impl ReducedTemperature {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "reduced temperature must be finite, got {t}"
            )));
        }
        Ok(Self(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn phase(self) -> Phase {
        if self.0 > 0.0 {
            Phase::Broken
        } else if self.0 < 0.0 {
            Phase::Symmetric
        } else {
            Phase::Critical
        }
    }
}

/// Power-law photon mass below the transition: `M(t) = M0 |t|^beta`,
/// stored as the dimensionless amplitude `x0 = M0 c^2 / (hbar omega0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrokenPhaseLaw {
    /// Dimensionless mass amplitude.
    pub x0: f64,
    /// Critical exponent, in (0, 1].
    pub beta: f64,
    /// Transition temperature in K; only needed when converting data given
    /// in absolute temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc: Option<f64>,
}

impl BrokenPhaseLaw {
    pub fn new(x0: f64, beta: f64) -> Result<Self> {
        if !x0.is_finite() || x0 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "mass amplitude x0 must be >= 0, got {x0}"
            )));
        }
        if !beta.is_finite() || beta <= 0.0 || beta > 1.0 {
            return Err(Error::InvalidInput(format!(
                "critical exponent beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(Self { x0, beta, tc: None })
    }

    pub fn with_tc(mut self, tc: f64) -> Result<Self> {
        if !tc.is_finite() || tc <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "transition temperature must be positive, got {tc}"
            )));
        }
        self.tc = Some(tc);
        Ok(self)
    }

    /// Reduced temperature above which the emitter is inside the gap and the
    /// rate vanishes: `x0 |t|^beta >= 1`. `None` when `x0 < 1` (the mass
    /// never reaches the transition energy for t in (0, 1]).
    pub fn gap_edge(&self) -> Option<f64> {
        if self.x0 >= 1.0 {
            Some(self.x0.powf(-1.0 / self.beta))
        } else {
            None
        }
    }
}

/// How the correlation length approaches its divergence at the transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelationModel {
    /// `xi(t) = A |t|^-nu + xi0`, stored via the ratio `A/xi0`.
    PowerLaw { a_over_xi0: f64, nu: f64 },
    /// `xi(t) = xi0 exp(delta / |t|)`.
    Exponential { delta: f64 },
}

/// Symmetric-phase correlation-length law with its reference scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPhaseLaw {
    pub model: CorrelationModel,
    /// Reference length far from the transition; `xi/xi0 -> 1` there.
    pub xi0: f64,
    /// Divergence guard: evaluations reject `|t|` below this floor.
    #[serde(default = "default_t_floor")]
    pub t_floor: f64,
}

fn default_t_floor() -> f64 {
    DEFAULT_T_FLOOR
}

impl SymmetricPhaseLaw {
    pub fn exponential(delta: f64, xi0: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Self::validated(CorrelationModel::Exponential { delta }, xi0)
    }

    /// `a` is the power-law amplitude in the same units as `xi0`.
    pub fn power_law(a: f64, nu: f64, xi0: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::InvalidInput(format!(
                "power-law amplitude must be >= 0, got {a}"
            )));
        }
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "correlation-length exponent nu must be positive, got {nu}"
            )));
        }
        if !xi0.is_finite() || xi0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "reference length xi0 must be positive, got {xi0}"
            )));
        }
        Self::validated(
            CorrelationModel::PowerLaw {
                a_over_xi0: a / xi0,
                nu,
            },
            xi0,
        )
    }

    fn validated(model: CorrelationModel, xi0: f64) -> Result<Self> {
        if !xi0.is_finite() || xi0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "reference length xi0 must be positive, got {xi0}"
            )));
        }
        Ok(Self {
            model,
            xi0,
            t_floor: DEFAULT_T_FLOOR,
        })
    }

    pub fn with_t_floor(mut self, t_floor: f64) -> Result<Self> {
        if !t_floor.is_finite() || t_floor <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "t floor must be positive, got {t_floor}"
            )));
        }
        self.t_floor = t_floor;
        Ok(self)
    }

    /// `ln(xi/xi0)` at distance `t_abs = |t|` from the transition.
    ///
    /// The exponential law overflows `xi/xi0` itself long before the
    /// renormalization pole is reached, so the polarization is always
    /// computed from this logarithm.
    pub fn log_xi_ratio(&self, t_abs: f64) -> f64 {
        match self.model {
            CorrelationModel::Exponential { delta } => delta / t_abs,
            CorrelationModel::PowerLaw { a_over_xi0, nu } => {
                (a_over_xi0 * t_abs.powf(-nu)).ln_1p()
            }
        }
    }

    /// `xi/xi0` at distance `t_abs = |t|`; may overflow to infinity for the
    /// exponential law very close to the transition.
    pub fn xi_ratio(&self, t_abs: f64) -> f64 {
        match self.model {
            CorrelationModel::Exponential { delta } => (delta / t_abs).exp(),
            CorrelationModel::PowerLaw { a_over_xi0, nu } => a_over_xi0 * t_abs.powf(-nu) + 1.0,
        }
    }
}

/// Full scenario: both phase laws plus the emitter they act on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScenario {
    pub broken: BrokenPhaseLaw,
    pub symmetric: SymmetricPhaseLaw,
    pub emitter: EmitterSpec,
    pub constants: PhysicalConstants,
}

impl PhaseScenario {
    pub fn new(
        broken: BrokenPhaseLaw,
        symmetric: SymmetricPhaseLaw,
        emitter: EmitterSpec,
        constants: PhysicalConstants,
    ) -> Self {
        Self {
            broken,
            symmetric,
            emitter,
            constants,
        }
    }
}

/// Free-space emission rate `omega0^3 mu^2 / (3 pi eps0 hbar c^3)` in 1/s.
pub fn gamma_vacuum(emitter: &EmitterSpec, constants: &PhysicalConstants) -> f64 {
    let w = emitter.omega0;
    let mu2 = emitter.mu * emitter.mu;
    w * w * w * mu2 / (3.0 * std::f64::consts::PI * constants.eps0 * constants.hbar * constants.c.powi(3))
}

/// Dimensionless photon mass `x = x0 |t|^beta` in the broken phase.
pub fn mass_ratio(t: ReducedTemperature, law: &BrokenPhaseLaw) -> Result<f64> {
    let tv = t.value();
    if tv < 0.0 {
        return Err(Error::WrongPhase(format!(
            "mass law applies below the transition (t >= 0), got t = {tv}"
        )));
    }
    Ok(law.x0 * tv.powf(law.beta))
}

/// Broken-phase rate suppression `Gamma/Gamma0 = sqrt(1 - x^2)`, exactly 0
/// once the photon rest energy exceeds the transition energy (`x >= 1`).
pub fn gamma_ratio_higgs(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidInput(format!(
            "mass ratio must be finite and >= 0, got {x}"
        )));
    }
    if x >= 1.0 {
        Ok(0.0)
    } else {
        Ok((1.0 - x * x).sqrt())
    }
}

/// `xi/xi0` for a symmetric-phase temperature (`t < 0`).
pub fn correlation_ratio(t: ReducedTemperature, law: &SymmetricPhaseLaw) -> Result<f64> {
    let t_abs = symmetric_t_abs(t, law)?;
    Ok(law.xi_ratio(t_abs))
}

fn symmetric_t_abs(t: ReducedTemperature, law: &SymmetricPhaseLaw) -> Result<f64> {
    let tv = t.value();
    if tv >= 0.0 {
        return Err(Error::WrongPhase(format!(
            "correlation-length law applies above the transition (t < 0), got t = {tv}"
        )));
    }
    let t_abs = tv.abs();
    if t_abs < law.t_floor {
        return Err(Error::InvalidInput(format!(
            "|t| = {t_abs:e} is below the divergence guard {:e}",
            law.t_floor
        )));
    }
    Ok(t_abs)
}

/// One-loop polarization `Pi = (alpha / 6 pi) ln(xi/xi0)`.
///
/// Vanishes at the renormalization point `xi = xi0` and grows with the
/// correlation length.
pub fn vacuum_polarization(xi_ratio: f64, alpha: f64) -> Result<f64> {
    if !xi_ratio.is_finite() || xi_ratio < 1.0 {
        return Err(Error::InvalidInput(format!(
            "correlation-length ratio must be >= 1, got {xi_ratio}"
        )));
    }
    Ok(polarization_from_log(xi_ratio.ln(), alpha))
}

/// Same polarization from `ln(xi/xi0)` directly; safe where the ratio
/// itself would overflow.
pub fn polarization_from_log(log_xi_ratio: f64, alpha: f64) -> f64 {
    alpha / (6.0 * std::f64::consts::PI) * log_xi_ratio
}

/// Propagator renormalization `Z = 1/(1 - Pi)`.
pub fn z_factor(pi_value: f64) -> Result<f64> {
    if !pi_value.is_finite() || pi_value < 0.0 {
        return Err(Error::InvalidInput(format!(
            "polarization must be finite and >= 0, got {pi_value}"
        )));
    }
    let limit = 1.0 - POLE_GUARD;
    if pi_value >= limit {
        return Err(Error::PoleReached {
            pi: pi_value,
            limit,
        });
    }
    Ok(1.0 / (1.0 - pi_value))
}

/// Symmetric-phase rate enhancement `Gamma/Gamma0 = Z(xi^2/xi0^2)`.
pub fn gamma_ratio_symmetric(
    t: ReducedTemperature,
    law: &SymmetricPhaseLaw,
    alpha: f64,
) -> Result<f64> {
    let t_abs = symmetric_t_abs(t, law)?;
    z_factor(polarization_from_log(law.log_xi_ratio(t_abs), alpha))
}

/// Rate ratio across the whole transition, dispatching on the sign of `t`.
pub fn gamma_ratio(t: ReducedTemperature, scenario: &PhaseScenario) -> Result<f64> {
    match t.phase() {
        Phase::Broken => gamma_ratio_higgs(mass_ratio(t, &scenario.broken)?),
        Phase::Symmetric => {
            gamma_ratio_symmetric(t, &scenario.symmetric, scenario.constants.alpha)
        }
        Phase::Critical => Err(Error::CriticalPoint),
    }
}

/// `|t|` at which the polarization hits the renormalization pole, found by
/// bisection on `Pi(|t|) = 1`.
///
/// Returns `None` when no pole exists above the law's divergence floor
/// (typical for power-law correlation lengths at physical couplings, where
/// the logarithm keeps `Pi` far below 1).
pub fn pole_location(law: &SymmetricPhaseLaw, alpha: f64) -> Option<f64> {
    let excess = |t_abs: f64| polarization_from_log(law.log_xi_ratio(t_abs), alpha) - 1.0;
    let mut lo = law.t_floor;
    let mut hi = 1.0;
    // Pi decreases with |t|; a pole needs Pi > 1 at the floor and Pi < 1 at
    // some larger |t|.
    if excess(lo) <= 0.0 {
        return None;
    }
    while excess(hi) > 0.0 {
        hi *= 10.0;
        if hi > 1e12 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}
