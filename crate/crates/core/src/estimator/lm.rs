//! Damped least-squares (Levenberg-Marquardt) minimizer for the small,
//! dense problems in this crate (one or two parameters, tens of residuals).

use crate::error::{Error, Result};
use crate::linalg;

pub(crate) struct LmOptions {
    pub max_iterations: usize,
    /// Converged when the gradient infinity-norm drops below
    /// `gradient_tol * (1 + residual_ss)`.
    pub gradient_tol: f64,
    /// Converged when an accepted step is shorter than
    /// `step_tol * (1 + |params|)`.
    pub step_tol: f64,
    /// Box constraints; steps are clamped inside.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LmOptions {
    pub fn bounded(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            max_iterations: 200,
            gradient_tol: 1e-10,
            step_tol: 1e-12,
            lower,
            upper,
        }
    }
}

pub(crate) struct LmFit {
    pub params: Vec<f64>,
    pub residual_ss: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `s^2 (J^T J)^-1` at the optimum, when it exists.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub dof: usize,
}

/// Minimize the sum of squared residuals returned by `eval`, which yields
/// the residual vector and its Jacobian at given parameters.
pub(crate) fn minimize(
    eval: &dyn Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
    init: &[f64],
    opts: &LmOptions,
) -> Result<LmFit> {
    let p = init.len();
    let clamp = |x: &mut Vec<f64>| {
        for j in 0..p {
            x[j] = x[j].clamp(opts.lower[j], opts.upper[j]);
        }
    };

    let mut params = init.to_vec();
    clamp(&mut params);
    let (mut residuals, mut jac) = eval(&params);
    let m = residuals.len();
    if m < p {
        return Err(Error::InsufficientData(format!(
            "{m} residuals cannot determine {p} parameters"
        )));
    }
    let mut cost: f64 = residuals.iter().map(|r| r * r).sum();

    let (mut jtj, mut grad) = normal_equations(&jac, &residuals, p);
    let max_diag = jtj.iter().enumerate().map(|(j, row)| row[j]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 || !max_diag.is_finite() {
        return Err(Error::DegenerateJacobian(
            "jacobian vanishes at the starting point; the model is locally constant".into(),
        ));
    }

    let mut lambda = 1e-3 * max_diag;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;

        if grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) < opts.gradient_tol * (1.0 + cost) {
            converged = true;
            break;
        }

        // Inner damping loop: grow lambda until a step reduces the cost.
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped: Vec<Vec<f64>> = jtj.clone();
            for j in 0..p {
                damped[j][j] += lambda * jtj[j][j].max(1e-12 * max_diag);
            }
            let mut rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(step) = linalg::solve(&mut damped, &mut rhs) else {
                lambda *= 10.0;
                continue;
            };

            let mut trial = params.clone();
            for j in 0..p {
                trial[j] += step[j];
            }
            clamp(&mut trial);
            let (trial_res, trial_jac) = eval(&trial);
            let trial_cost: f64 = trial_res.iter().map(|r| r * r).sum();

            if trial_cost.is_finite() && trial_cost <= cost {
                let step_norm = params
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let param_norm = params.iter().map(|v| v * v).sum::<f64>().sqrt();

                params = trial;
                residuals = trial_res;
                jac = trial_jac;
                cost = trial_cost;
                (jtj, grad) = normal_equations(&jac, &residuals, p);
                lambda = (lambda / 9.0).max(1e-14 * max_diag);
                accepted = true;

                if step_norm < opts.step_tol * (1.0 + param_norm) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 * max_diag {
                break;
            }
        }

        if converged || !accepted {
            // Either done, or damping cannot find a descent direction; the
            // gradient check on the next pass decides convergence.
            if !accepted {
                converged =
                    grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) < opts.gradient_tol * (1.0 + cost);
            }
            break;
        }
    }

    let dof = m - p;
    let covariance = if converged {
        linalg::invert(&jtj).map(|inv| {
            let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
            inv.into_iter()
                .map(|row| row.into_iter().map(|v| v * s2).collect())
                .collect()
        })
    } else {
        None
    };

    Ok(LmFit {
        params,
        residual_ss: cost,
        converged,
        iterations,
        covariance,
        dof,
    })
}

fn normal_equations(jac: &[Vec<f64>], residuals: &[f64], p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut jtj = vec![vec![0.0; p]; p];
    let mut grad = vec![0.0; p];
    for (row, &r) in jac.iter().zip(residuals) {
        for i in 0..p {
            for j in 0..p {
                jtj[i][j] += row[i] * row[j];
            }
            grad[i] += row[i] * r;
        }
    }
    (jtj, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_decay_problem(
        ts: Vec<f64>,
        ys: Vec<f64>,
    ) -> impl Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        move |p: &[f64]| {
            let (a, k) = (p[0], p[1]);
            let res: Vec<f64> = ts
                .iter()
                .zip(&ys)
                .map(|(&t, &y)| a * (-k * t).exp() - y)
                .collect();
            let jac: Vec<Vec<f64>> = ts
                .iter()
                .map(|&t| {
                    let e = (-k * t).exp();
                    vec![e, -a * t * e]
                })
                .collect();
            (res, jac)
        }
    }

    #[test]
    fn recovers_exponential_decay() {
        let ts: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| 2.5 * (-1.3 * t).exp()).collect();
        let eval = exp_decay_problem(ts, ys);
        let opts = LmOptions::bounded(vec![0.0, 0.0], vec![1e6, 1e6]);
        let fit = minimize(&eval, &[1.0, 1.0], &opts).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.params[0], 2.5, epsilon = 1e-8);
        assert_relative_eq!(fit.params[1], 1.3, epsilon = 1e-8);
        assert!(fit.residual_ss < 1e-16);
        assert!(fit.covariance.is_some());
    }

    #[test]
    fn cost_never_increases_from_seed() {
        let ts: Vec<f64> = (0..20).map(|i| 0.05 + i as f64 * 0.1).collect();
        // Noisy-ish data from fixed offsets so the optimum is not exact.
        let ys: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(i, &t)| 2.0 * (-0.7 * t).exp() + if i % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        let eval = exp_decay_problem(ts, ys);
        let init = [3.0, 0.2];
        let seed_cost: f64 = eval(&init).0.iter().map(|r| r * r).sum();
        let opts = LmOptions::bounded(vec![0.0, 0.0], vec![1e6, 1e6]);
        let fit = minimize(&eval, &init, &opts).unwrap();
        assert!(fit.residual_ss <= seed_cost);
    }

    #[test]
    fn zero_jacobian_is_degenerate() {
        let eval = |_p: &[f64]| (vec![1.0, 1.0, 1.0], vec![vec![0.0]; 3]);
        let opts = LmOptions::bounded(vec![-1e6], vec![1e6]);
        assert!(matches!(
            minimize(&eval, &[0.5], &opts),
            Err(Error::DegenerateJacobian(_))
        ));
    }

    #[test]
    fn budget_exhaustion_reports_unconverged() {
        let ts: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| 2.5 * (-1.3 * t).exp()).collect();
        let eval = exp_decay_problem(ts, ys);
        let mut opts = LmOptions::bounded(vec![0.0, 0.0], vec![1e6, 1e6]);
        opts.max_iterations = 1;
        opts.gradient_tol = 1e-30;
        opts.step_tol = 1e-30;
        let fit = minimize(&eval, &[30.0, 4.0], &opts).unwrap();
        assert!(!fit.converged);
        assert!(fit.covariance.is_none());
    }

    #[test]
    fn respects_bounds() {
        let ts: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| 2.0 * (-0.5 * t).exp()).collect();
        let eval = exp_decay_problem(ts, ys);
        let opts = LmOptions::bounded(vec![0.0, 1.0], vec![1e6, 2.0]);
        let fit = minimize(&eval, &[1.5, 1.5], &opts).unwrap();
        assert!(fit.params[1] >= 1.0 && fit.params[1] <= 2.0);
    }
}
