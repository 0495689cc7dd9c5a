//! Critical-exponent inference from rate-vs-temperature data.
//!
//! The broken-phase model `Gamma/Gamma0 = sqrt(1 - x0^2 |t|^(2 beta))`
//! linearizes exactly as `ln(1 - r^2) = 2 ln x0 + 2 beta ln|t|`, which seeds
//! a damped least-squares refinement. Universality-class selection fixes
//! each candidate exponent and compares information criteria. The symmetric
//! phase fits the correlation-length law through the transformed variable
//! `Pi = 1 - Gamma0/Gamma`.

mod broken;
mod linear;
mod lm;
mod symmetric;
mod tc_scan;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use broken::{classify, fit_broken};
pub use linear::{linearize_broken, Linearized, LinearizedPoint};
pub use symmetric::{fit_symmetric, SymmetricFitKind};
pub use tc_scan::{tc_scan, TcScan, TcScanPoint};

/// Ratios at or below this value carry no exponent information (gap or
/// noise floor) and are masked from broken-phase fits.
pub const GAP_MASK_THRESHOLD: f64 = 1e-3;

/// Ratios above `1 - SATURATION_MASK_MARGIN` are masked: the transform
/// `ln(1 - r^2)` is singular there and the mass is indistinguishable from
/// zero.
pub const SATURATION_MASK_MARGIN: f64 = 1e-6;

/// Outcome of a nonlinear fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Estimated parameters by name.
    pub params: BTreeMap<String, f64>,
    /// Weighted residual sum of squares at the optimum.
    pub residual_ss: f64,
    /// Residual degrees of freedom.
    pub dof: usize,
    /// Standard errors by name; present only when the fit converged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_stderr: Option<BTreeMap<String, f64>>,
    pub converged: bool,
    pub iterations: usize,
}

/// Labeled candidate exponents for classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub entries: Vec<(String, f64)>,
}

impl CandidateSet {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("candidate set must not be empty".into()));
        }
        for (label, beta) in &entries {
            if !beta.is_finite() || *beta <= 0.0 || *beta > 1.0 {
                return Err(Error::InvalidInput(format!(
                    "candidate {label:?} has exponent {beta} outside (0, 1]"
                )));
            }
        }
        for (i, (_, a)) in entries.iter().enumerate() {
            for (_, b) in entries.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::InvalidInput(format!(
                        "candidate exponents must be distinct, {a} repeats"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Plain numeric labels.
    pub fn from_betas(betas: &[f64]) -> Result<Self> {
        Self::new(betas.iter().map(|&b| (format!("{b}"), b)).collect())
    }

    /// The classic trio: mean field 1/2, Ising 1/8, and 1/4.
    pub fn standard() -> Self {
        Self::new(vec![
            ("mean field".into(), 0.5),
            ("1/4".into(), 0.25),
            ("Ising model".into(), 0.125),
        ])
        .expect("static candidate set is valid")
    }
}

/// One scored candidate in a classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub label: String,
    pub beta: f64,
    /// Amplitude fitted with the exponent held fixed.
    pub x0: f64,
    pub residual_ss: f64,
    /// Gaussian AIC: `n ln(rss/n) + 2 k`.
    pub aic: f64,
    pub converged: bool,
}

/// Model-selection outcome over a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// Label of the candidate with the lowest criterion.
    pub best: String,
    /// All scored candidates, best first.
    pub scores: Vec<CandidateScore>,
    /// Criterion gap to the runner-up; absent with a single candidate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

/// Correlation-length fit outcome for the symmetric phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricFit {
    pub kind: SymmetricFitKind,
    /// `{"delta"}` for the exponential law, `{"a_over_xi0", "nu"}` for the
    /// power law.
    pub params: BTreeMap<String, f64>,
    /// Residual sum of squares in the transformed variable `Pi`.
    pub residual_ss: f64,
    pub dof: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_stderr: Option<BTreeMap<String, f64>>,
    pub converged: bool,
    pub iterations: usize,
}
