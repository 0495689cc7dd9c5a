//! Temperature sweeps of the rate ratio, plus seeded noise injection.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveMetadata, RateCurve, Sample};
use crate::error::{Error, Result};
use crate::physics::{
    gamma_ratio, gamma_ratio_higgs, mass_ratio, pole_location, BrokenPhaseLaw, PhaseScenario,
    ReducedTemperature,
};

/// Grids built against a scenario stay at least this factor away from the
/// symmetric-phase renormalization pole.
pub const POLE_WINDOW_FACTOR: f64 = 1.05;

/// Strictly increasing reduced temperatures, never containing t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    points: Vec<f64>,
}

impl TemperatureGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("grid must not be empty".into()));
        }
        for &p in &points {
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!("grid point {p} is not finite")));
            }
            if p == 0.0 {
                return Err(Error::InvalidInput(
                    "grid must exclude the critical point t = 0".into(),
                ));
            }
        }
        for w in points.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(format!(
                    "grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// `count` evenly spaced points from `start` to `end` inclusive; a point
    /// landing exactly on t = 0 is dropped.
    pub fn linspace(start: f64, end: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput("grid count must be positive".into()));
        }
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::InvalidInput(format!(
                "grid range must be finite with start < end, got [{start}, {end}]"
            )));
        }
        let points = if count == 1 {
            vec![start]
        } else {
            let step = (end - start) / (count - 1) as f64;
            (0..count).map(|i| start + step * i as f64).collect()
        };
        Self::from_points(points.into_iter().filter(|&p| p != 0.0).collect())
    }

    /// Evenly spaced grid spanning both phases, excluding t = 0 and the
    /// pole window `|t| < POLE_WINDOW_FACTOR * |t*|` on the symmetric side.
    pub fn spanning_transition(
        scenario: &PhaseScenario,
        start: f64,
        end: f64,
        count: usize,
    ) -> Result<Self> {
        let raw = Self::linspace(start, end, count)?;
        let window = pole_location(&scenario.symmetric, scenario.constants.alpha)
            .map(|t_star| POLE_WINDOW_FACTOR * t_star);
        let points: Vec<f64> = raw
            .points
            .into_iter()
            .filter(|&t| match window {
                Some(w) => t > 0.0 || t.abs() >= w,
                None => true,
            })
            .collect();
        Self::from_points(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Multiplicative Gaussian noise setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Relative standard deviation.
    pub sigma_rel: f64,
    pub seed: u64,
    /// Clamp noisy ratios at zero from below.
    pub floor_at_zero: bool,
}

impl NoiseSpec {
    pub fn new(sigma_rel: f64, seed: u64, floor_at_zero: bool) -> Result<Self> {
        if !sigma_rel.is_finite() || sigma_rel < 0.0 {
            return Err(Error::InvalidInput(format!(
                "sigma_rel must be finite and >= 0, got {sigma_rel}"
            )));
        }
        Ok(Self {
            sigma_rel,
            seed,
            floor_at_zero,
        })
    }
}

/// Broken-phase sweep: `Gamma/Gamma0 = sqrt(1 - (x0 t^beta)^2)` pointwise.
pub fn sweep_broken(grid: &TemperatureGrid, law: &BrokenPhaseLaw) -> Result<RateCurve> {
    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        if t <= 0.0 {
            return Err(Error::WrongPhase(format!(
                "broken-phase sweep needs t > 0 everywhere, got {t}"
            )));
        }
        let x = mass_ratio(ReducedTemperature::new(t)?, law)?;
        samples.push(Sample {
            t,
            gamma_ratio: gamma_ratio_higgs(x)?,
        });
    }
    RateCurve::new(
        CurveMetadata {
            description: Some(format!(
                "broken-phase sweep: x0={}, beta={}",
                law.x0, law.beta
            )),
            seed: None,
            sigma_rel: None,
        },
        samples,
    )
}

/// Sweep across both phases, dispatching per point on the sign of `t`.
pub fn sweep_full(grid: &TemperatureGrid, scenario: &PhaseScenario) -> Result<RateCurve> {
    let mut samples = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let ratio = gamma_ratio(ReducedTemperature::new(t)?, scenario)?;
        samples.push(Sample {
            t,
            gamma_ratio: ratio,
        });
    }
    RateCurve::new(
        CurveMetadata {
            description: Some(format!(
                "transition sweep: x0={}, beta={}, {}",
                scenario.broken.x0,
                scenario.broken.beta,
                match scenario.symmetric.model {
                    crate::physics::CorrelationModel::Exponential { delta } =>
                        format!("exponential delta={delta}"),
                    crate::physics::CorrelationModel::PowerLaw { a_over_xi0, nu } =>
                        format!("power-law a/xi0={a_over_xi0}, nu={nu}"),
                }
            )),
            seed: None,
            sigma_rel: None,
        },
        samples,
    )
}

/// One standard-normal draw via Box-Muller on the raw ChaCha8 stream.
///
/// The generator and the transform are both fixed here so that a seed pins
/// the output bytes on any platform.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    const SCALE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) * SCALE; // (0, 1]
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE; // [0, 1)
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Multiply each ratio by `1 + sigma_rel * g_i` with seeded standard-normal
/// draws in sample order. `sigma_rel = 0` returns the curve unchanged.
pub fn add_noise(curve: &RateCurve, noise: &NoiseSpec) -> RateCurve {
    if noise.sigma_rel == 0.0 {
        return curve.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let samples = curve
        .samples
        .iter()
        .map(|s| {
            let mut r = s.gamma_ratio * (1.0 + noise.sigma_rel * standard_normal(&mut rng));
            if noise.floor_at_zero && r < 0.0 {
                r = 0.0;
            }
            Sample {
                t: s.t,
                gamma_ratio: r,
            }
        })
        .collect();
    RateCurve {
        metadata: CurveMetadata {
            description: curve.metadata.description.clone(),
            seed: Some(noise.seed),
            sigma_rel: Some(noise.sigma_rel),
        },
        samples,
    }
}
