//! Broken-phase exponent fits and universality-class selection.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::curve::RateCurve;
use crate::error::{Error, Result};

use super::linear::{mask_broken, MaskedBroken};
use super::lm::{minimize, LmFit, LmOptions};
use super::{linearize_broken, CandidateScore, CandidateSet, Classification, FitResult};

/// Suppression model `r(t) = sqrt(max(0, 1 - x0^2 t^(2 beta)))` and its
/// partial derivatives with respect to (beta, x0).
fn model(t: f64, beta: f64, x0: f64) -> (f64, f64, f64) {
    let u = x0 * x0 * t.powf(2.0 * beta);
    let arg = 1.0 - u;
    if arg <= 0.0 {
        // On the plateau the model is locally constant.
        return (0.0, 0.0, 0.0);
    }
    let r = arg.sqrt();
    let denom = r.max(1e-12);
    let d_beta = -u * t.ln() / denom;
    let d_x0 = -u / (x0.max(1e-300) * denom);
    (r, d_beta, d_x0)
}

fn plateau_only_error(masked: &MaskedBroken) -> Option<Error> {
    if masked.points.is_empty() {
        if masked.masked_saturated == 0 && masked.masked_gap > 0 {
            Some(Error::DegenerateJacobian(
                "all data on the zero plateau; the model is locally constant".into(),
            ))
        } else {
            Some(Error::AllMasked(format!(
                "{} gap points and {} saturated points, none usable",
                masked.masked_gap, masked.masked_saturated
            )))
        }
    } else if masked.points.len() < 3 {
        Some(Error::InsufficientData(format!(
            "need at least 3 usable points, got {}",
            masked.points.len()
        )))
    } else {
        None
    }
}

/// Fit `(beta, x0)` to a broken-phase curve.
///
/// With `init = None` the starting point comes from the exact log-log
/// linearization; the damped refinement then never worsens that seed.
pub fn fit_broken(curve: &RateCurve, init: Option<(f64, f64)>) -> Result<FitResult> {
    let masked = mask_broken(curve)?;
    if let Some(err) = plateau_only_error(&masked) {
        return Err(err);
    }

    let (beta0, x00) = match init {
        Some((b, x)) => (b.clamp(1e-3, 1.0), x.clamp(1e-6, 1e6)),
        None => {
            let line = linearize_broken(curve)?.line()?;
            (
                (line.slope / 2.0).clamp(1e-3, 1.0),
                (line.intercept / 2.0).exp().clamp(1e-6, 1e6),
            )
        }
    };

    let pts = masked.points.clone();
    let eval = move |p: &[f64]| {
        let (beta, x0) = (p[0], p[1]);
        let mut res = Vec::with_capacity(pts.len());
        let mut jac = Vec::with_capacity(pts.len());
        for &(t, r, sqrt_w) in &pts {
            let (m, d_beta, d_x0) = model(t, beta, x0);
            res.push(sqrt_w * (m - r));
            jac.push(vec![sqrt_w * d_beta, sqrt_w * d_x0]);
        }
        (res, jac)
    };

    let opts = LmOptions::bounded(vec![1e-4, 0.0], vec![1.0, 1e9]);
    let fit = minimize(&eval, &[beta0, x00], &opts)?;
    Ok(into_fit_result(fit, &["beta", "x0"]))
}

fn into_fit_result(fit: LmFit, names: &[&str]) -> FitResult {
    let params: BTreeMap<String, f64> = names
        .iter()
        .zip(&fit.params)
        .map(|(n, v)| (n.to_string(), *v))
        .collect();
    let param_stderr = fit.covariance.as_ref().map(|cov| {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), cov[i][i].max(0.0).sqrt()))
            .collect()
    });
    FitResult {
        params,
        residual_ss: fit.residual_ss,
        dof: fit.dof,
        param_stderr,
        converged: fit.converged,
        iterations: fit.iterations,
    }
}

/// Gaussian AIC with `k` free parameters.
fn aic(rss: f64, n: usize, k: usize) -> f64 {
    n as f64 * (rss.max(1e-300) / n as f64).ln() + 2.0 * k as f64
}

/// Score each candidate exponent by fitting the amplitude alone, then rank
/// by information criterion.
pub fn classify(curve: &RateCurve, candidates: &CandidateSet) -> Result<Classification> {
    let masked = mask_broken(curve)?;
    if let Some(err) = plateau_only_error(&masked) {
        return Err(err);
    }
    let lin = linearize_broken(curve)?;
    let n = masked.points.len();

    let outcomes: Vec<Result<CandidateScore>> = candidates
        .entries
        .par_iter()
        .map(|(label, beta)| {
            let beta = *beta;
            // Amplitude seed: weighted mean intercept with the slope pinned.
            let sw: f64 = lin.points.iter().map(|p| p.weight).sum();
            let intercept: f64 = lin
                .points
                .iter()
                .map(|p| p.weight * (p.log_one_minus_r2 - 2.0 * beta * p.log_abs_t))
                .sum::<f64>()
                / sw;
            let x0_seed = (intercept / 2.0).exp().clamp(1e-6, 1e6);

            let pts = masked.points.clone();
            let eval = move |p: &[f64]| {
                let x0 = p[0];
                let mut res = Vec::with_capacity(pts.len());
                let mut jac = Vec::with_capacity(pts.len());
                for &(t, r, sqrt_w) in &pts {
                    let (m, _, d_x0) = model(t, beta, x0);
                    res.push(sqrt_w * (m - r));
                    jac.push(vec![sqrt_w * d_x0]);
                }
                (res, jac)
            };
            let opts = LmOptions::bounded(vec![0.0], vec![1e9]);
            let fit = minimize(&eval, &[x0_seed], &opts)?;
            Ok(CandidateScore {
                label: label.clone(),
                beta,
                x0: fit.params[0],
                residual_ss: fit.residual_ss,
                aic: aic(fit.residual_ss, n, 1),
                converged: fit.converged,
            })
        })
        .collect();

    let mut scores = Vec::new();
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(score) => scores.push(score),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if scores.is_empty() {
        return Err(first_error.unwrap_or_else(|| {
            Error::InsufficientData("no candidate could be scored".into())
        }));
    }
    scores.sort_by(|a, b| a.aic.total_cmp(&b.aic).then(a.label.cmp(&b.label)));

    let margin = (scores.len() > 1).then(|| scores[1].aic - scores[0].aic);
    Ok(Classification {
        best: scores[0].label.clone(),
        scores,
        margin,
    })
}
