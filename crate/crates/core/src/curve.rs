//! Rate-vs-temperature curves and their CSV/JSON codecs.
//!
//! The CSV side is two columns (`t,gamma_ratio`) with LF line endings and
//! shortest-round-trip float rendering, optionally preceded by `# key=value`
//! comment lines carrying the metadata. Both codecs are lossless for finite
//! doubles and byte-stable for a fixed curve, which is what the golden-file
//! tests rely on.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sampled point of the normalized rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Reduced temperature `t = 1 - T/Tc` (or absolute temperature for the
    /// transition-point scan, which documents that reading).
    pub t: f64,
    /// `Gamma / Gamma0`.
    pub gamma_ratio: f64,
}

/// Descriptive metadata carried along with a curve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Seed used for noise injection, when any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Relative noise level used for injection; estimators read it back as
    /// the known measurement error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_rel: Option<f64>,
}

/// Sampled `(t, Gamma/Gamma0)` curve, the exchange format between the sweep
/// engine, the estimators and the CLI.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub metadata: CurveMetadata,
    pub samples: Vec<Sample>,
}

/// Serialization format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFormat {
    Csv,
    Json,
}

impl RateCurve {
    pub fn new(metadata: CurveMetadata, samples: Vec<Sample>) -> Result<Self> {
        for s in &samples {
            if !s.t.is_finite() || !s.gamma_ratio.is_finite() {
                return Err(Error::Format(format!(
                    "curve samples must be finite, got ({}, {})",
                    s.t, s.gamma_ratio
                )));
            }
        }
        if let Some(sigma) = metadata.sigma_rel {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::Format(format!(
                    "sigma_rel must be finite and >= 0, got {sigma}"
                )));
            }
        }
        Ok(Self { metadata, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        if let Some(d) = &self.metadata.description {
            if d.contains('\n') || d.contains('\r') {
                return Err(Error::Format(
                    "curve description must not contain line breaks".into(),
                ));
            }
            out.push_str(&format!("# description={d}\n"));
        }
        if let Some(seed) = self.metadata.seed {
            out.push_str(&format!("# seed={seed}\n"));
        }
        if let Some(sigma) = self.metadata.sigma_rel {
            out.push_str(&format!("# sigma_rel={sigma}\n"));
        }
        out.push_str("t,gamma_ratio\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.t, s.gamma_ratio));
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = CurveMetadata::default();
        let mut lines = text.lines().peekable();

        while let Some(line) = lines.peek() {
            let Some(comment) = line.strip_prefix('#') else {
                break;
            };
            let comment = comment.trim_start();
            if let Some(v) = comment.strip_prefix("description=") {
                metadata.description = Some(v.to_string());
            } else if let Some(v) = comment.strip_prefix("seed=") {
                metadata.seed = Some(v.trim().parse().map_err(|_| {
                    Error::Format(format!("unparsable seed in metadata comment: {v:?}"))
                })?);
            } else if let Some(v) = comment.strip_prefix("sigma_rel=") {
                metadata.sigma_rel = Some(v.trim().parse().map_err(|_| {
                    Error::Format(format!("unparsable sigma_rel in metadata comment: {v:?}"))
                })?);
            }
            lines.next();
        }

        match lines.next() {
            Some(header) if header.trim() == "t,gamma_ratio" => {}
            other => {
                return Err(Error::Format(format!(
                    "expected header 't,gamma_ratio', got {other:?}"
                )))
            }
        }

        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (Some(ts), Some(rs), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Format(format!(
                    "row {} must have exactly 2 fields: {line:?}",
                    i + 1
                )));
            };
            let t: f64 = ts.trim().parse().map_err(|_| {
                Error::Format(format!("unparsable t in row {}: {ts:?}", i + 1))
            })?;
            let gamma_ratio: f64 = rs.trim().parse().map_err(|_| {
                Error::Format(format!("unparsable gamma_ratio in row {}: {rs:?}", i + 1))
            })?;
            samples.push(Sample { t, gamma_ratio });
        }
        Self::new(metadata, samples)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("JSON encoding failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: Self = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("JSON decoding failed: {e}")))?;
        Self::new(parsed.metadata, parsed.samples)
    }

    pub fn to_bytes(&self, format: CurveFormat) -> Result<Vec<u8>> {
        let s = match format {
            CurveFormat::Csv => self.to_csv()?,
            CurveFormat::Json => self.to_json()?,
        };
        Ok(s.into_bytes())
    }

    pub fn write_path(&self, path: &Path, format: CurveFormat) -> Result<()> {
        fs::write(path, self.to_bytes(format)?)?;
        Ok(())
    }

    /// Read a curve, deciding the format from the extension and falling back
    /// to content sniffing (a leading `{` means JSON).
    pub fn read_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let looks_json = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => true,
            Some("csv") => false,
            _ => text.trim_start().starts_with('{'),
        };
        if looks_json {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_curve() -> RateCurve {
        RateCurve::new(
            CurveMetadata {
                description: Some("broken-phase sweep: x0=1, beta=0.5".into()),
                seed: Some(42),
                sigma_rel: Some(0.01),
            },
            vec![
                Sample {
                    t: 0.1,
                    gamma_ratio: 0.99498743710662,
                },
                Sample {
                    t: 0.25,
                    gamma_ratio: 0.8660254037844386,
                },
                Sample {
                    t: -0.5,
                    gamma_ratio: 1.0000774626912425,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = sample_curve();
        let back = RateCurve::from_csv(&c.to_csv().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let c = sample_curve();
        let back = RateCurve::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn empty_curve_is_header_only() {
        let c = RateCurve::default();
        assert_eq!(c.to_csv().unwrap(), "t,gamma_ratio\n");
        let back = RateCurve::from_csv("t,gamma_ratio\n").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn csv_uses_lf_only() {
        let csv = sample_curve().to_csv().unwrap();
        assert!(!csv.contains('\r'));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(RateCurve::from_csv("").is_err());
        assert!(RateCurve::from_csv("wrong,header\n1,2\n").is_err());
        assert!(RateCurve::from_csv("t,gamma_ratio\n0.1\n").is_err());
        assert!(RateCurve::from_csv("t,gamma_ratio\n0.1,abc\n").is_err());
        assert!(RateCurve::from_csv("t,gamma_ratio\n0.1,0.2,0.3\n").is_err());
        assert!(RateCurve::from_csv("# seed=xyz\nt,gamma_ratio\n").is_err());
    }

    #[test]
    fn nonfinite_samples_are_rejected() {
        let bad = RateCurve::new(
            CurveMetadata::default(),
            vec![Sample {
                t: f64::NAN,
                gamma_ratio: 1.0,
            }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn description_with_newline_is_rejected_at_export() {
        let c = RateCurve::new(
            CurveMetadata {
                description: Some("two\nlines".into()),
                ..Default::default()
            },
            vec![],
        )
        .unwrap();
        assert!(c.to_csv().is_err());
    }

    #[test]
    fn write_read_path_round_trips_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let c = sample_curve();
        for (name, format) in [("c.csv", CurveFormat::Csv), ("c.json", CurveFormat::Json)] {
            let p = dir.path().join(name);
            c.write_path(&p, format).unwrap();
            assert_eq!(RateCurve::read_path(&p).unwrap(), c);
        }
    }

    proptest! {
        // Lossless round trip for arbitrary finite doubles, both codecs.
        #[test]
        fn round_trip_arbitrary_finite(
            pairs in proptest::collection::vec(
                (
                    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
                    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
                ),
                0..40,
            ),
            seed in prop::option::of(any::<u64>()),
        ) {
            let samples = pairs
                .iter()
                .map(|&(t, gamma_ratio)| Sample { t, gamma_ratio })
                .collect();
            let c = RateCurve::new(
                CurveMetadata { description: None, seed, sigma_rel: None },
                samples,
            ).unwrap();
            let via_csv = RateCurve::from_csv(&c.to_csv().unwrap()).unwrap();
            let via_json = RateCurve::from_json(&c.to_json().unwrap()).unwrap();
            prop_assert!(via_csv.samples.iter().zip(&c.samples).all(|(a, b)| {
                a.t.to_bits() == b.t.to_bits()
                    && a.gamma_ratio.to_bits() == b.gamma_ratio.to_bits()
            }));
            prop_assert_eq!(via_json, c);
        }
    }
}
