//! Correlation-length-law fits in the symmetric phase.
//!
//! The data enter through `Pi = 1 - Gamma0/Gamma`, which is linear in
//! `1/|t|` for the exponential law (slope `alpha delta / 6 pi`) and
//! logarithmic for the power law.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curve::RateCurve;
use crate::error::{Error, Result};

use super::linear::{weighted_line, weighted_line_through_origin};
use super::lm::{minimize, LmOptions};
use super::SymmetricFit;

/// Which correlation-length family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricFitKind {
    Exponential,
    PowerLaw,
}

const SIX_PI: f64 = 6.0 * std::f64::consts::PI;

/// Transformed symmetric-phase points: `(1/|t|, Pi, sqrt weight)`.
fn transformed_points(curve: &RateCurve) -> Result<Vec<(f64, f64, f64)>> {
    let sigma_rel = curve.metadata.sigma_rel.filter(|&s| s > 0.0);
    let mut pts = Vec::with_capacity(curve.len());
    for s in &curve.samples {
        if s.t >= 0.0 {
            return Err(Error::WrongPhase(format!(
                "symmetric-phase estimator needs t < 0 everywhere, got t = {}",
                s.t
            )));
        }
        let r = s.gamma_ratio;
        if r <= 0.0 {
            return Err(Error::WrongPhase(format!(
                "symmetric-phase ratios must be positive, got {r} at t = {}",
                s.t
            )));
        }
        let pi = 1.0 - 1.0 / r;
        // d Pi / d r = 1/r^2, with absolute noise sigma_rel * r.
        let weight = match sigma_rel {
            Some(sig) => {
                let dpi = sig / r;
                1.0 / (dpi * dpi)
            }
            None => 1.0,
        };
        pts.push((1.0 / s.t.abs(), pi, weight));
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 symmetric-phase points, got {}",
            pts.len()
        )));
    }
    Ok(pts)
}

/// Fit the chosen correlation-length law; `alpha` converts the polarization
/// slope into the law's parameters.
pub fn fit_symmetric(curve: &RateCurve, kind: SymmetricFitKind, alpha: f64) -> Result<SymmetricFit> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "fine-structure constant must lie in (0, 1), got {alpha}"
        )));
    }
    let pts = transformed_points(curve)?;
    match kind {
        SymmetricFitKind::Exponential => fit_exponential(&pts, alpha),
        SymmetricFitKind::PowerLaw => fit_power_law(&pts, alpha),
    }
}

/// `Pi = (alpha delta / 6 pi) (1/|t|)`: a through-origin regression.
fn fit_exponential(pts: &[(f64, f64, f64)], alpha: f64) -> Result<SymmetricFit> {
    let (slope, slope_stderr, rss) = weighted_line_through_origin(pts)?;
    let scale = SIX_PI / alpha;
    let delta = slope * scale;
    let mut params = BTreeMap::new();
    params.insert("delta".to_string(), delta);
    let mut stderr = BTreeMap::new();
    stderr.insert("delta".to_string(), slope_stderr * scale);
    Ok(SymmetricFit {
        kind: SymmetricFitKind::Exponential,
        params,
        residual_ss: rss,
        dof: pts.len() - 1,
        param_stderr: Some(stderr),
        converged: true,
        iterations: 0,
    })
}

/// `Pi = (alpha / 6 pi) ln(a |t|^-nu + 1)`: exact linearization for the
/// seed, then a damped refinement.
fn fit_power_law(pts: &[(f64, f64, f64)], alpha: f64) -> Result<SymmetricFit> {
    // ln(exp(6 pi Pi / alpha) - 1) = ln a + nu ln(1/|t|) wherever Pi > 0.
    let seed_pts: Vec<(f64, f64, f64)> = pts
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(inv_t, pi, w)| (inv_t.ln(), (SIX_PI * pi / alpha).exp_m1().ln(), w))
        .filter(|p| p.1.is_finite())
        .collect();
    let (a_seed, nu_seed) = if seed_pts.len() >= 2 {
        match weighted_line(&seed_pts) {
            Ok(line) => (
                line.intercept.exp().clamp(1e-9, 1e9),
                line.slope.clamp(1e-3, 25.0),
            ),
            Err(_) => (1.0, 1.0),
        }
    } else {
        (1.0, 1.0)
    };

    let data = pts.to_vec();
    let eval = move |p: &[f64]| {
        let (a, nu) = (p[0], p[1]);
        let mut res = Vec::with_capacity(data.len());
        let mut jac = Vec::with_capacity(data.len());
        let coef = alpha / SIX_PI;
        for &(inv_t, pi, w) in &data {
            let sqrt_w = w.sqrt();
            let u = inv_t.powf(nu);
            let arg = a * u + 1.0;
            let pi_model = coef * arg.ln();
            res.push(sqrt_w * (pi_model - pi));
            jac.push(vec![
                sqrt_w * coef * u / arg,
                sqrt_w * coef * a * u * inv_t.ln() / arg,
            ]);
        }
        (res, jac)
    };

    let opts = LmOptions::bounded(vec![0.0, 1e-4], vec![1e12, 25.0]);
    let fit = minimize(&eval, &[a_seed, nu_seed], &opts)?;

    let mut params = BTreeMap::new();
    params.insert("a_over_xi0".to_string(), fit.params[0]);
    params.insert("nu".to_string(), fit.params[1]);
    let param_stderr = fit.covariance.as_ref().map(|cov| {
        let mut m = BTreeMap::new();
        m.insert("a_over_xi0".to_string(), cov[0][0].max(0.0).sqrt());
        m.insert("nu".to_string(), cov[1][1].max(0.0).sqrt());
        m
    });
    Ok(SymmetricFit {
        kind: SymmetricFitKind::PowerLaw,
        params,
        residual_ss: fit.residual_ss,
        dof: fit.dof,
        param_stderr,
        converged: fit.converged,
        iterations: fit.iterations,
    })
}
