//! Transition-temperature scan for data recorded against absolute
//! temperature.
//!
//! The broken-phase linearization assumes the reduced temperature is known;
//! when `Tc` is not, each candidate value converts `T -> t = 1 - T/Tc` and
//! the quality of the resulting straight-line fit profiles the likelihood
//! of that candidate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveMetadata, RateCurve, Sample};
use crate::error::{Error, Result};

use super::linearize_broken;

/// One candidate transition temperature with its fit quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcScanPoint {
    pub tc: f64,
    /// Weighted coefficient of determination of the linearized fit; absent
    /// when the candidate leaves too few usable points or a flat response.
    pub r_squared: Option<f64>,
}

/// Scan outcome: the winning candidate and the whole profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcScan {
    pub best_tc: f64,
    pub best_r_squared: f64,
    pub profile: Vec<TcScanPoint>,
}

/// Scan candidate transition temperatures against a curve whose `t` column
/// holds absolute temperature (K).
pub fn tc_scan(curve_absolute_t: &RateCurve, tc_grid: &[f64]) -> Result<TcScan> {
    if tc_grid.is_empty() {
        return Err(Error::InvalidInput("tc grid must not be empty".into()));
    }
    for &tc in tc_grid {
        if !tc.is_finite() || tc <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "candidate Tc must be positive, got {tc}"
            )));
        }
    }

    let profile: Vec<TcScanPoint> = tc_grid
        .par_iter()
        .map(|&tc| {
            let reduced: Vec<Sample> = curve_absolute_t
                .samples
                .iter()
                .filter_map(|s| {
                    let t = 1.0 - s.t / tc;
                    (t > 0.0).then_some(Sample {
                        t,
                        gamma_ratio: s.gamma_ratio,
                    })
                })
                .collect();
            let r_squared = RateCurve::new(
                CurveMetadata {
                    sigma_rel: curve_absolute_t.metadata.sigma_rel,
                    ..Default::default()
                },
                reduced,
            )
            .ok()
            .and_then(|c| linearize_broken(&c).ok())
            .and_then(|lin| lin.line().ok())
            .and_then(|line| line.r_squared);
            TcScanPoint { tc, r_squared }
        })
        .collect();

    let best = profile
        .iter()
        .filter_map(|p| p.r_squared.map(|r2| (p.tc, r2)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)));
    let Some((best_tc, best_r_squared)) = best else {
        return Err(Error::InsufficientData(
            "no candidate Tc produced a valid linearized fit".into(),
        ));
    };
    Ok(TcScan {
        best_tc,
        best_r_squared,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::BrokenPhaseLaw;
    use crate::sweep::{sweep_broken, TemperatureGrid};

    /// Broken-phase curve re-expressed against absolute temperature.
    fn absolute_curve(tc: f64, beta: f64, x0: f64) -> RateCurve {
        let grid = TemperatureGrid::linspace(0.05, 0.95, 50).unwrap();
        let reduced = sweep_broken(&grid, &BrokenPhaseLaw::new(x0, beta).unwrap()).unwrap();
        RateCurve::new(
            CurveMetadata::default(),
            reduced
                .samples
                .iter()
                .map(|s| Sample {
                    t: (1.0 - s.t) * tc,
                    gamma_ratio: s.gamma_ratio,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn scan_peaks_at_true_tc() {
        let curve = absolute_curve(300.0, 0.25, 0.8);
        let grid: Vec<f64> = (280..=320).map(|k| k as f64).collect();
        let scan = tc_scan(&curve, &grid).unwrap();
        assert!(
            (scan.best_tc - 300.0).abs() <= 1.0,
            "best Tc = {}",
            scan.best_tc
        );
        assert!(scan.best_r_squared > 0.999);
        assert_eq!(scan.profile.len(), grid.len());
    }

    #[test]
    fn offset_tc_biases_the_exponent_and_the_profile_shows_it() {
        let curve = absolute_curve(300.0, 0.25, 0.8);
        let scan = tc_scan(&curve, &[285.0, 300.0, 315.0]).unwrap();
        let r2_at = |tc: f64| {
            scan.profile
                .iter()
                .find(|p| p.tc == tc)
                .unwrap()
                .r_squared
                .unwrap()
        };
        assert!(r2_at(300.0) > r2_at(315.0));
        assert!(r2_at(300.0) > r2_at(285.0));
    }

    #[test]
    fn flat_curve_has_no_valid_candidate() {
        let flat = RateCurve::new(
            CurveMetadata::default(),
            (0..20)
                .map(|i| Sample {
                    t: 250.0 + i as f64,
                    gamma_ratio: 0.5,
                })
                .collect(),
        )
        .unwrap();
        assert!(matches!(
            tc_scan(&flat, &[280.0, 300.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn grid_validation() {
        let curve = absolute_curve(300.0, 0.5, 0.8);
        assert!(tc_scan(&curve, &[]).is_err());
        assert!(tc_scan(&curve, &[-5.0]).is_err());
    }
}
