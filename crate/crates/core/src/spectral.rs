//! Independent verification of the closed-form rates by k-space quadrature.
//!
//! The broadened spectral function replaces each on-shell delta with a
//! unit-area Lorentzian of width `eta` (in units of the emitter frequency),
//! keeping both the positive- and negative-frequency terms. The raw rate is
//! the radial integral of the phase-space measure against that spectral
//! function, evaluated at the emitter frequency; a ladder of decreasing
//! `eta` values is then extrapolated polynomially to `eta = 0` and compared
//! against the closed form.
//!
//! Everything is dimensionless: frequencies in units of `omega0`, momenta in
//! units of `omega0/c`, the photon mass as `x = M c^2 / (hbar omega0)`. All
//! reported rates are ratios to the massless run with identical broadening
//! and quadrature settings, so normalization prefactors cancel identically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::physics::gamma_ratio_higgs;
use crate::quad;

/// Fraction of the accumulated integral that the analytic tail bound may
/// reach before the cutoff is rejected as too small.
pub const TAIL_BUDGET_FRACTION: f64 = 0.01;

/// A massive photon branch with Lorentzian-broadened on-shell peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadenedSpectral {
    /// Dimensionless photon mass ratio.
    pub x: f64,
    /// Broadening width in units of the emitter frequency.
    pub eta: f64,
}

impl BroadenedSpectral {
    pub fn new(x: f64, eta: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidInput(format!(
                "mass ratio must be finite and >= 0, got {x}"
            )));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "broadening width must be positive, got {eta}"
            )));
        }
        Ok(Self { x, eta })
    }

    /// Massive dispersion `omega_k = sqrt(k^2 + x^2)`.
    pub fn dispersion(&self, k: f64) -> f64 {
        (k * k + self.x * self.x).sqrt()
    }
}

/// Unit-area Lorentzian of width `eta`.
fn lorentzian(u: f64, eta: f64) -> f64 {
    eta / (std::f64::consts::PI * (u * u + eta * eta))
}

/// Broadened spectral function at mode frequency `omega_k` and probe
/// frequency `omega`:
///
/// `(1/omega_k) [L_eta(omega - omega_k) - L_eta(omega + omega_k)]`
///
/// Antisymmetric in `omega`; the negative-frequency term is kept because the
/// two tails cancel to one order higher at large `omega_k`, which is what
/// makes the k-integral converge.
pub fn spectral_value(omega_k: f64, omega: f64, spec: &BroadenedSpectral) -> f64 {
    (lorentzian(omega - omega_k, spec.eta) - lorentzian(omega + omega_k, spec.eta)) / omega_k
}

/// Quadrature settings for the radial rate integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Radial cutoff in units of `omega0/c`; must exceed the on-shell
    /// momentum, i.e. be > 1.
    pub k_max: f64,
    /// Relative tolerance on the adaptive integral.
    pub rel_tol: f64,
    /// Bisection budget.
    pub max_subdivisions: usize,
}

impl QuadratureConfig {
    pub fn new(k_max: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !k_max.is_finite() || k_max <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "k_max must be > 1 (the on-shell momentum scale), got {k_max}"
            )));
        }
        if !rel_tol.is_finite() || rel_tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "rel_tol must be positive, got {rel_tol}"
            )));
        }
        Ok(Self {
            k_max,
            rel_tol,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            k_max: 50.0,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
        }
    }
}

/// Raw broadened rate with its error diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct RawRate {
    /// `R(x, eta)` over `[0, k_max]`.
    pub value: f64,
    /// Quadrature error estimate.
    pub quad_error: f64,
    /// Analytic bound on the neglected tail beyond `k_max`.
    pub tail_bound: f64,
}

/// Radial integral of `k^2 A_eta(omega_k, 1)` over `[0, k_max]`.
///
/// The tail of the integrand beyond the cutoff is bounded by
/// `4 eta / (pi (k_max - 1))`, linear in the broadening, and is checked
/// against [`TAIL_BUDGET_FRACTION`] of the accumulated value; the residual
/// bias it leaves is removed by the eta-extrapolation along with the
/// broadening bias itself.
pub fn integrate_rate(spec: &BroadenedSpectral, quad_cfg: &QuadratureConfig) -> Result<RawRate> {
    let s = *spec;
    let integrand = move |k: f64| k * k * spectral_value(s.dispersion(k), 1.0, &s);

    // Seed the subdivision at the on-shell resonance, if any.
    let mut seeds = Vec::new();
    if s.x < 1.0 {
        let k_star = (1.0 - s.x * s.x).sqrt();
        for m in [-8.0, -2.0, 0.0, 2.0, 8.0] {
            let p = k_star + m * s.eta;
            if p > 0.0 && p < quad_cfg.k_max {
                seeds.push(p);
            }
        }
        seeds.sort_by(f64::total_cmp);
        seeds.dedup();
    }

    let r = quad::integrate(
        integrand,
        0.0,
        quad_cfg.k_max,
        quad_cfg.rel_tol,
        0.0,
        quad_cfg.max_subdivisions,
        &seeds,
    )?;

    let tail_bound = 4.0 * s.eta / (std::f64::consts::PI * (quad_cfg.k_max - 1.0));
    let budget = TAIL_BUDGET_FRACTION * r.value.abs();
    if tail_bound >= budget {
        return Err(Error::TailTooFat {
            k_max: quad_cfg.k_max,
            tail_bound,
            budget,
        });
    }

    Ok(RawRate {
        value: r.value,
        quad_error: r.abs_error,
        tail_bound,
    })
}

/// Decreasing broadening widths plus the polynomial order used to send them
/// to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaLadder {
    pub etas: Vec<f64>,
    pub extrapolation_order: usize,
}

impl EtaLadder {
    pub fn new(etas: Vec<f64>, extrapolation_order: usize) -> Result<Self> {
        if etas.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "ladder needs at least 3 widths, got {}",
                etas.len()
            )));
        }
        for w in etas.windows(2) {
            if !(w[1] > 0.0 && w[1] < w[0]) {
                return Err(Error::InvalidInput(
                    "ladder widths must be strictly decreasing and positive".into(),
                ));
            }
        }
        if !(etas[0].is_finite() && etas[0] > 0.0) {
            return Err(Error::InvalidInput(
                "ladder widths must be finite and positive".into(),
            ));
        }
        if etas.len() < extrapolation_order + 1 {
            return Err(Error::InvalidInput(format!(
                "order-{extrapolation_order} extrapolation needs at least {} points",
                extrapolation_order + 1
            )));
        }
        Ok(Self {
            etas,
            extrapolation_order,
        })
    }
}

impl Default for EtaLadder {
    fn default() -> Self {
        Self {
            etas: vec![0.08, 0.04, 0.02, 0.01],
            extrapolation_order: 2,
        }
    }
}

/// Zero-broadening estimate with an uncertainty.
#[derive(Debug, Clone, Copy)]
pub struct Extrapolated {
    pub value: f64,
    /// Larger of the intercept standard error (when the fit has spare
    /// degrees of freedom) and the shift from dropping one polynomial order.
    pub uncertainty: f64,
}

/// Least-squares polynomial intercept of `(eta, value)` pairs at `eta = 0`.
pub fn extrapolate_eta(values: &[(f64, f64)], order: usize) -> Result<Extrapolated> {
    let n = values.len();
    if n < order + 1 {
        return Err(Error::IllConditioned(format!(
            "order-{order} fit needs at least {} points, got {n}",
            order + 1
        )));
    }
    let value = poly_intercept(values, order)?;
    let mut uncertainty = value.1;
    if order >= 1 {
        let lower = poly_intercept(values, order - 1)?;
        uncertainty = uncertainty.max((value.0 - lower.0).abs());
    }
    Ok(Extrapolated {
        value: value.0,
        uncertainty,
    })
}

/// Returns (intercept, intercept stderr or 0 when dof = 0).
fn poly_intercept(values: &[(f64, f64)], order: usize) -> Result<(f64, f64)> {
    let n = values.len();
    let p = order + 1;
    let scale = values
        .iter()
        .fold(0.0f64, |m, &(eta, _)| m.max(eta.abs()));
    if scale == 0.0 {
        return Err(Error::IllConditioned("all ladder widths are zero".into()));
    }

    // Normal equations in the scaled variable eta/scale.
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for &(eta, v) in values {
        let u = eta / scale;
        let mut pow = vec![1.0; p];
        for j in 1..p {
            pow[j] = pow[j - 1] * u;
        }
        for i in 0..p {
            for j in 0..p {
                ata[i][j] += pow[i] * pow[j];
            }
            atb[i] += pow[i] * v;
        }
    }
    let ata_copy = ata.clone();
    let coefs = linalg::solve(&mut ata, &mut atb).ok_or_else(|| {
        Error::IllConditioned("ladder spacing makes the polynomial fit singular".into())
    })?;

    let rss: f64 = values
        .iter()
        .map(|&(eta, v)| {
            let u = eta / scale;
            let mut fit = 0.0;
            let mut pow = 1.0;
            for c in &coefs {
                fit += c * pow;
                pow *= u;
            }
            (fit - v) * (fit - v)
        })
        .sum();

    let stderr = if n > p {
        let inv = linalg::invert(&ata_copy).ok_or_else(|| {
            Error::IllConditioned("normal matrix not invertible for the error estimate".into())
        })?;
        (rss / (n - p) as f64 * inv[0][0]).sqrt()
    } else {
        0.0
    };
    Ok((coefs[0], stderr))
}

/// Gapped photon density of states, normalized so the massless curve is
/// exactly `omega^2`: `omega sqrt(omega^2 - x^2)` above the gap, zero below.
pub fn dos_value(x: f64, omega: f64) -> f64 {
    if omega > x {
        omega * (omega * omega - x * x).sqrt()
    } else {
        0.0
    }
}

/// Tabulated DOS over a frequency grid.
pub fn dos_curve(x: f64, omega_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidInput(format!(
            "mass ratio must be finite and >= 0, got {x}"
        )));
    }
    for &w in omega_grid {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidInput(format!(
                "frequency grid values must be finite and >= 0, got {w}"
            )));
        }
    }
    Ok(omega_grid.iter().map(|&w| (w, dos_value(x, w))).collect())
}

/// One closed-form-vs-quadrature comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleRow {
    pub x: f64,
    pub closed_form: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub eta_error_bar: f64,
    pub within_tolerance: bool,
}

/// Full comparison report.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within_tolerance)
    }

    /// CSV rendering, one row per mass ratio.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,closed_form,oracle,abs_diff,eta_error_bar\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.x, r.closed_form, r.oracle, r.abs_diff, r.eta_error_bar
            ));
        }
        out
    }
}

/// Run the quadrature oracle across `x_list` and compare each extrapolated
/// ratio against the closed form.
///
/// Ratios are taken against the massless run at identical `eta` and
/// quadrature settings. The per-`x` ladders run in parallel; the output
/// order is the input order regardless of scheduling.
pub fn oracle_check(
    x_list: &[f64],
    ladder: &EtaLadder,
    quad_cfg: &QuadratureConfig,
    tolerance: f64,
) -> Result<OracleReport> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let mut baselines = Vec::with_capacity(ladder.etas.len());
    for &eta in &ladder.etas {
        let base = integrate_rate(&BroadenedSpectral::new(0.0, eta)?, quad_cfg)?;
        baselines.push((eta, base.value));
    }

    let outcomes: Vec<Result<OracleRow>> = x_list
        .par_iter()
        .map(|&x| {
            let closed_form = gamma_ratio_higgs(x)?;
            let mut ratios = Vec::with_capacity(baselines.len());
            for &(eta, base) in &baselines {
                let raw = integrate_rate(&BroadenedSpectral::new(x, eta)?, quad_cfg)?;
                ratios.push((eta, raw.value / base));
            }
            let limit = extrapolate_eta(&ratios, ladder.extrapolation_order)?;
            let abs_diff = (limit.value - closed_form).abs();
            Ok(OracleRow {
                x,
                closed_form,
                oracle: limit.value,
                abs_diff,
                eta_error_bar: limit.uncertainty,
                within_tolerance: abs_diff < tolerance,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        rows.push(outcome?);
    }
    Ok(OracleReport { rows, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_value_is_antisymmetric_and_peaked() {
        let spec = BroadenedSpectral::new(0.0, 0.01).unwrap();
        let wk = 1.0;
        for &w in &[0.3, 0.9, 1.0, 1.7] {
            let plus = spectral_value(wk, w, &spec);
            let minus = spectral_value(wk, -w, &spec);
            assert_relative_eq!(plus, -minus, max_relative = 1e-13);
        }
        // Peak height ~ 1 / (pi eta omega_k) at resonance.
        let peak = spectral_value(wk, wk, &spec);
        let expected = 1.0 / (std::f64::consts::PI * spec.eta * wk)
            - lorentzian(2.0 * wk, spec.eta) / wk;
        assert_relative_eq!(peak, expected, max_relative = 1e-13);
    }

    #[test]
    fn first_moment_sum_rule() {
        // integral over omega >= 0 of omega * A(omega_k, omega) equals 1 for
        // any eta; only the cutoff truncation spoils it, linearly in eta.
        for &(eta, tol) in &[(0.08, 3e-3), (0.01, 4e-4)] {
            let spec = BroadenedSpectral::new(0.3, eta).unwrap();
            let wk = spec.dispersion(0.95);
            let moment = quad::integrate(
                |w| w * spectral_value(wk, w, &spec),
                0.0,
                50.0,
                1e-11,
                0.0,
                4000,
                &[wk],
            )
            .unwrap();
            assert!(
                (moment.value - 1.0).abs() < tol,
                "eta = {eta}: moment = {}",
                moment.value
            );
        }
    }

    #[test]
    fn raw_rate_is_positive_and_self_normalizes() {
        let cfg = QuadratureConfig::default();
        let r = integrate_rate(&BroadenedSpectral::new(0.0, 0.04).unwrap(), &cfg).unwrap();
        assert!(r.value > 0.0);
        assert_relative_eq!(r.value / r.value, 1.0);
    }

    #[test]
    fn tail_too_fat_on_absurd_cutoff() {
        let cfg = QuadratureConfig::new(1.5, 1e-9, 4000).unwrap();
        let err = integrate_rate(&BroadenedSpectral::new(0.0, 0.08).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, Error::TailTooFat { .. }));
    }

    #[test]
    fn quadrature_config_validation() {
        assert!(QuadratureConfig::new(0.9, 1e-9, 100).is_err());
        assert!(QuadratureConfig::new(50.0, 0.0, 100).is_err());
    }

    #[test]
    fn ladder_validation() {
        assert!(EtaLadder::new(vec![0.08, 0.04], 1).is_err());
        assert!(EtaLadder::new(vec![0.04, 0.08, 0.16], 1).is_err());
        assert!(EtaLadder::new(vec![0.08, 0.04, 0.02], 3).is_err());
        assert!(EtaLadder::new(vec![0.08, 0.04, 0.02], 2).is_ok());
    }

    #[test]
    fn extrapolation_recovers_linear_data_exactly() {
        let pts: Vec<(f64, f64)> = [0.08, 0.04, 0.02, 0.01]
            .iter()
            .map(|&e| (e, 0.7 + 3.0 * e))
            .collect();
        let r = extrapolate_eta(&pts, 2).unwrap();
        assert_relative_eq!(r.value, 0.7, max_relative = 1e-10);
    }

    #[test]
    fn extrapolation_of_constant_is_constant() {
        let pts: Vec<(f64, f64)> = [0.08, 0.04, 0.02, 0.01].iter().map(|&e| (e, 0.42)).collect();
        let r = extrapolate_eta(&pts, 2).unwrap();
        assert_relative_eq!(r.value, 0.42, max_relative = 1e-12);
        assert!(r.uncertainty < 1e-12);
    }

    #[test]
    fn extrapolation_rejects_underdetermined_and_degenerate() {
        let two = vec![(0.08, 1.0), (0.04, 1.1)];
        assert!(matches!(
            extrapolate_eta(&two, 2),
            Err(Error::IllConditioned(_))
        ));
        let duplicated = vec![(0.04, 1.0), (0.04, 1.1), (0.04, 1.2)];
        assert!(matches!(
            extrapolate_eta(&duplicated, 2),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn oracle_ratio_matches_closed_form_at_x_06() {
        let report = oracle_check(
            &[0.6],
            &EtaLadder::default(),
            &QuadratureConfig::default(),
            1e-3,
        )
        .unwrap();
        let row = &report.rows[0];
        assert_relative_eq!(row.closed_form, 0.8, max_relative = 1e-15);
        assert!(row.abs_diff < 1e-3, "diff = {}", row.abs_diff);
        assert!(row.within_tolerance);
    }

    #[test]
    fn oracle_gap_rate_vanishes() {
        let report = oracle_check(
            &[1.2],
            &EtaLadder::default(),
            &QuadratureConfig::default(),
            1e-3,
        )
        .unwrap();
        let row = &report.rows[0];
        assert_eq!(row.closed_form, 0.0);
        assert!(row.oracle.abs() < 1e-3, "oracle = {}", row.oracle);
    }

    #[test]
    fn dos_examples() {
        // Massless: exactly omega^2.
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.15).collect();
        for (w, v) in dos_curve(0.0, &grid).unwrap() {
            assert_relative_eq!(v, w * w, max_relative = 1e-15);
        }
        // Inside the gap: exactly zero.
        assert_eq!(dos_value(0.5, 0.4), 0.0);
        assert_eq!(dos_value(0.5, 0.5), 0.0);
        // sqrt(0.75), 40-digit reference.
        assert_relative_eq!(
            dos_value(0.5, 1.0),
            0.866_025_403_784_438_6,
            max_relative = 1e-15
        );
        assert!(dos_curve(-0.1, &grid).is_err());
    }

    #[test]
    fn dos_approaches_vacuum_from_below() {
        let x = 0.5;
        let mut last_ratio = 0.0;
        for &w in &[0.6, 1.0, 2.0, 5.0, 20.0] {
            let ratio = dos_value(x, w) / (w * w);
            assert!(ratio < 1.0 && ratio > last_ratio);
            assert_relative_eq!(
                ratio,
                (1.0 - x * x / (w * w)).sqrt(),
                max_relative = 1e-13
            );
            last_ratio = ratio;
        }
    }

    #[test]
    fn report_csv_shape() {
        let report = OracleReport {
            rows: vec![OracleRow {
                x: 0.5,
                closed_form: 0.8660254,
                oracle: 0.8660,
                abs_diff: 2.54e-5,
                eta_error_bar: 1e-4,
                within_tolerance: true,
            }],
            tolerance: 1e-3,
        };
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "x,closed_form,oracle,abs_diff,eta_error_bar"
        );
        assert_eq!(lines.next().unwrap().split(',').count(), 5);
    }
}
