//! Weighted straight-line fits and the exact broken-phase linearization.

use crate::curve::RateCurve;
use crate::error::{Error, Result};

use super::{GAP_MASK_THRESHOLD, SATURATION_MASK_MARGIN};

/// Weighted least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WeightedLine {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub rss: f64,
    /// Coefficient of determination; `None` when the response has no
    /// weighted variance.
    pub r_squared: Option<f64>,
}

/// Fit a line to `(x, y, w)` triples with `w > 0`.
pub(crate) fn weighted_line(points: &[(f64, f64, f64)]) -> Result<WeightedLine> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let mx: f64 = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my: f64 = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::DegenerateJacobian(
            "no spread in the abscissa; slope is unidentifiable".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let rss: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            p.2 * e * e
        })
        .sum();
    let tss: f64 = points.iter().map(|p| p.2 * (p.1 - my) * (p.1 - my)).sum();
    let dof = points.len().saturating_sub(2);
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    Ok(WeightedLine {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        rss,
        r_squared: if tss > f64::MIN_POSITIVE {
            Some(1.0 - rss / tss)
        } else {
            None
        },
    })
}

/// Through-origin weighted fit `y = slope x`; returns (slope, stderr, rss).
pub(crate) fn weighted_line_through_origin(points: &[(f64, f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.is_empty() {
        return Err(Error::InsufficientData("no points for slope fit".into()));
    }
    let sxx: f64 = points.iter().map(|p| p.2 * p.0 * p.0).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::DegenerateJacobian(
            "all abscissae vanish; slope is unidentifiable".into(),
        ));
    }
    let sxy: f64 = points.iter().map(|p| p.2 * p.0 * p.1).sum();
    let slope = sxy / sxx;
    let rss: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - slope * p.0;
            p.2 * e * e
        })
        .sum();
    let dof = points.len().saturating_sub(1);
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    Ok((slope, (s2 / sxx).sqrt(), rss))
}

/// A broken-phase point after masking, in both raw and transformed
/// coordinates.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedPoint {
    pub log_abs_t: f64,
    /// `ln(1 - r^2) = 2 ln x0 + 2 beta ln|t|`.
    pub log_one_minus_r2: f64,
    /// Variance-propagation weight for the transformed ordinate.
    pub weight: f64,
}

/// Linearization output plus the mask report.
#[derive(Debug, Clone)]
pub struct Linearized {
    pub points: Vec<LinearizedPoint>,
    /// Points at or below the gap threshold (no exponent information beyond
    /// an inequality).
    pub masked_gap: usize,
    /// Points indistinguishable from the vacuum rate.
    pub masked_saturated: usize,
}

/// Raw usable broken-phase points shared by the linear and nonlinear fits.
pub(crate) struct MaskedBroken {
    /// (t, r, sqrt of the rate-space weight).
    pub points: Vec<(f64, f64, f64)>,
    pub masked_gap: usize,
    pub masked_saturated: usize,
    pub sigma_rel: Option<f64>,
}

pub(crate) fn mask_broken(curve: &RateCurve) -> Result<MaskedBroken> {
    let sigma_rel = curve.metadata.sigma_rel.filter(|&s| s > 0.0);
    let mut points = Vec::with_capacity(curve.len());
    let mut masked_gap = 0;
    let mut masked_saturated = 0;
    for s in &curve.samples {
        if s.t <= 0.0 {
            return Err(Error::WrongPhase(format!(
                "broken-phase estimator needs t > 0 everywhere, got t = {}",
                s.t
            )));
        }
        let r = s.gamma_ratio;
        if r <= GAP_MASK_THRESHOLD {
            masked_gap += 1;
            continue;
        }
        if r >= 1.0 - SATURATION_MASK_MARGIN {
            masked_saturated += 1;
            continue;
        }
        let sqrt_w = match sigma_rel {
            Some(sig) => 1.0 / (sig * r),
            None => 1.0,
        };
        points.push((s.t, r, sqrt_w));
    }
    Ok(MaskedBroken {
        points,
        masked_gap,
        masked_saturated,
        sigma_rel,
    })
}

/// Exact linearization of the broken-phase suppression law.
///
/// Points in the gap or saturated at the vacuum rate are excluded and
/// counted; with known relative noise the weights follow from error
/// propagation through `ln(1 - r^2)`.
pub fn linearize_broken(curve: &RateCurve) -> Result<Linearized> {
    let masked = mask_broken(curve)?;
    if masked.points.is_empty() {
        return Err(Error::AllMasked(format!(
            "{} gap points and {} saturated points, none usable",
            masked.masked_gap, masked.masked_saturated
        )));
    }
    if masked.points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 usable points, got {}",
            masked.points.len()
        )));
    }
    let points = masked
        .points
        .iter()
        .map(|&(t, r, _)| {
            let one_minus_r2 = 1.0 - r * r;
            let weight = match masked.sigma_rel {
                // Var[ln(1 - r^2)] = (2 r^2 sigma / (1 - r^2))^2 for
                // relative noise sigma on r.
                Some(sig) => {
                    let dy = 2.0 * r * r * sig / one_minus_r2;
                    1.0 / (dy * dy)
                }
                None => 1.0,
            };
            LinearizedPoint {
                log_abs_t: t.ln(),
                log_one_minus_r2: one_minus_r2.ln(),
                weight,
            }
        })
        .collect();
    Ok(Linearized {
        points,
        masked_gap: masked.masked_gap,
        masked_saturated: masked.masked_saturated,
    })
}

impl Linearized {
    /// Weighted line through the transformed points; slope/2 estimates the
    /// exponent, exp(intercept/2) the amplitude.
    pub(crate) fn line(&self) -> Result<WeightedLine> {
        let pts: Vec<(f64, f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.log_abs_t, p.log_one_minus_r2, p.weight))
            .collect();
        weighted_line(&pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CurveMetadata, Sample};
    use crate::physics::BrokenPhaseLaw;
    use crate::sweep::{sweep_broken, TemperatureGrid};
    use approx::assert_relative_eq;

    fn synthetic(beta: f64, x0: f64, sigma: Option<f64>) -> RateCurve {
        let grid = TemperatureGrid::linspace(0.05, 0.95, 50).unwrap();
        let mut c = sweep_broken(&grid, &BrokenPhaseLaw::new(x0, beta).unwrap()).unwrap();
        c.metadata.sigma_rel = sigma;
        c
    }

    #[test]
    fn noiseless_linearization_recovers_parameters() {
        let c = synthetic(0.5, 0.9, None);
        let lin = linearize_broken(&c).unwrap();
        let line = lin.line().unwrap();
        assert_relative_eq!(line.slope / 2.0, 0.5, epsilon = 1e-10);
        assert_relative_eq!((line.intercept / 2.0).exp(), 0.9, epsilon = 1e-10);
        assert_eq!(lin.masked_gap, 0);
        assert_eq!(lin.masked_saturated, 0);
    }

    #[test]
    fn gap_points_are_masked_and_counted() {
        let mut c = synthetic(0.5, 2.0, None);
        // x0 = 2 gaps everything at t >= 0.25.
        let lin = linearize_broken(&c).unwrap();
        let expected_gap = c
            .samples
            .iter()
            .filter(|s| s.gamma_ratio <= GAP_MASK_THRESHOLD)
            .count();
        assert!(expected_gap > 0);
        assert_eq!(lin.masked_gap, expected_gap);

        // Saturated points count separately.
        c.samples.push(Sample {
            t: 1e-9,
            gamma_ratio: 1.0,
        });
        let lin = linearize_broken(&c).unwrap();
        assert_eq!(lin.masked_saturated, 1);
    }

    #[test]
    fn all_masked_and_insufficient_errors() {
        let gap_only = RateCurve::new(
            CurveMetadata::default(),
            vec![
                Sample { t: 0.5, gamma_ratio: 0.0 },
                Sample { t: 0.6, gamma_ratio: 0.0 },
            ],
        )
        .unwrap();
        assert!(matches!(
            linearize_broken(&gap_only),
            Err(Error::AllMasked(_))
        ));

        let two_usable = RateCurve::new(
            CurveMetadata::default(),
            vec![
                Sample { t: 0.3, gamma_ratio: 0.9 },
                Sample { t: 0.5, gamma_ratio: 0.8 },
            ],
        )
        .unwrap();
        assert!(matches!(
            linearize_broken(&two_usable),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn wrong_phase_is_rejected() {
        let c = RateCurve::new(
            CurveMetadata::default(),
            vec![Sample { t: -0.5, gamma_ratio: 1.2 }],
        )
        .unwrap();
        assert!(matches!(linearize_broken(&c), Err(Error::WrongPhase(_))));
    }

    #[test]
    fn rescaling_t_shifts_only_the_intercept() {
        let c = synthetic(0.25, 0.8, None);
        let line = linearize_broken(&c).unwrap().line().unwrap();
        let scaled = RateCurve::new(
            c.metadata.clone(),
            c.samples
                .iter()
                .map(|s| Sample {
                    t: s.t * 0.37,
                    gamma_ratio: s.gamma_ratio,
                })
                .collect(),
        )
        .unwrap();
        let line2 = linearize_broken(&scaled).unwrap().line().unwrap();
        assert_relative_eq!(line.slope, line2.slope, epsilon = 1e-9);
        assert!((line.intercept - line2.intercept).abs() > 1e-3);
    }

    #[test]
    fn weighted_line_matches_closed_form_on_exact_data() {
        let pts: Vec<(f64, f64, f64)> = (0..10)
            .map(|i| {
                let x = i as f64 * 0.3;
                (x, 1.5 - 2.0 * x, 1.0 + i as f64)
            })
            .collect();
        let line = weighted_line(&pts).unwrap();
        assert_relative_eq!(line.slope, -2.0, epsilon = 1e-12);
        assert_relative_eq!(line.intercept, 1.5, epsilon = 1e-12);
        assert!(line.rss < 1e-20);
        assert!(line.r_squared.unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn degenerate_abscissa_is_flagged() {
        let pts = vec![(1.0, 0.5, 1.0), (1.0, 0.7, 1.0), (1.0, 0.9, 1.0)];
        assert!(matches!(
            weighted_line(&pts),
            Err(Error::DegenerateJacobian(_))
        ));
    }

    #[test]
    fn through_origin_slope() {
        let pts: Vec<(f64, f64, f64)> = (1..6).map(|i| (i as f64, 3.0 * i as f64, 2.0)).collect();
        let (slope, stderr, rss) = weighted_line_through_origin(&pts).unwrap();
        assert_relative_eq!(slope, 3.0, epsilon = 1e-13);
        assert!(rss < 1e-22);
        assert!(stderr < 1e-11);
    }
}
