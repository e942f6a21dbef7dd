//! The experiment configuration file: a strict, versioned TOML schema.
//!
//! Physics parameters (amplitudes, frequencies, phases, training size,
//! contamination count) must be spelled out; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use specdet::detect::TestKind;
use specdet::model::SinusoidSet;
use specdet::sim::{default_stellar_ar6, ArModel};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "specdet-config-v1";
pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA`].
    pub schema: String,
    /// Subtract each ingested series' sample mean before analysis.
    #[serde(default)]
    pub detrend: bool,
    pub grid: GridSection,
    pub training: TrainingSection,
    pub noise: Option<NoiseSection>,
    pub signal: SignalSection,
    pub tests: TestsSection,
    pub mc: Option<McSection>,
    pub detect: Option<DetectSection>,
    pub validate: Option<ValidateSection>,
    pub roc: Option<RocSection>,
    pub histogram: Option<HistogramSection>,
    pub calibrate: Option<CalibrateSection>,
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub dt_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub mode: TrainingMode,
    /// Training-set size; required in synthetic mode.
    pub l: Option<usize>,
    /// Training series files; required in external mode.
    pub files: Option<Vec<PathBuf>>,
    /// Observation series file; required in external mode for `detect`.
    pub observation: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum TrainingMode {
    #[serde(rename = "synthetic-ar")]
    SyntheticAr,
    #[serde(rename = "external-files")]
    ExternalFiles,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    /// AR coefficients, required when `kind = "ar"`.
    pub coeffs: Option<Vec<f64>>,
    /// Innovation standard deviation; required for `"ar"`, optional scale
    /// override for `"stellar-ar6"`.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum NoiseKind {
    #[serde(rename = "stellar-ar6")]
    StellarAr6,
    #[serde(rename = "ar")]
    Ar,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    /// Sinusoid amplitudes in signal units; empty means noise only.
    pub amplitudes: Vec<f64>,
    pub frequencies_hz: Vec<f64>,
    pub phases_rad: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestsSection {
    /// Test tokens: fisher, robust-fisher, chiu, t-tilde, t-tilde-fisher,
    /// t-tilde-nc.
    pub kinds: Vec<String>,
    /// Contamination count; required when any configured test uses one.
    pub n_c: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectSection {
    /// False-alarm target for every test's threshold.
    pub pfa: f64,
    /// Null trials for calibrating tests without a closed form.
    pub calibration_trials: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub pfa_targets: Vec<f64>,
    /// Extra thresholds to tabulate alongside the inverted targets.
    #[serde(default)]
    pub gamma_grid: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocSection {
    /// Strictly increasing false-alarm grid for the analytic curves.
    pub pfa_grid: Vec<f64>,
    /// Cap on emitted empirical staircase points per test; 0 keeps all.
    pub max_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSection {
    pub bins: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub pfa_targets: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if cfg.schema != SCHEMA {
            return Err(CliError::config(format!(
                "unsupported schema '{}', expected '{SCHEMA}'",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    /// The declared sinusoids.
    pub fn sines(&self) -> CliResult<SinusoidSet> {
        SinusoidSet::from_parts(
            &self.signal.amplitudes,
            &self.signal.frequencies_hz,
            &self.signal.phases_rad,
        )
        .map_err(|e| CliError::config(e.to_string()))
    }

    /// The declared noise model, if a `[noise]` section is present.
    pub fn noise_model(&self) -> CliResult<Option<ArModel>> {
        let Some(section) = &self.noise else {
            return Ok(None);
        };
        let model = match section.kind {
            NoiseKind::StellarAr6 => {
                if section.coeffs.is_some() {
                    return Err(CliError::config(
                        "noise.coeffs is only valid with kind = \"ar\"",
                    ));
                }
                let base = default_stellar_ar6();
                match section.sigma {
                    Some(s) => base
                        .with_sigma(s)
                        .map_err(|e| CliError::config(e.to_string()))?,
                    None => base,
                }
            }
            NoiseKind::Ar => {
                let coeffs = section.coeffs.clone().ok_or_else(|| {
                    CliError::config("noise.coeffs is required for kind = \"ar\"")
                })?;
                let sigma = section
                    .sigma
                    .ok_or_else(|| CliError::config("noise.sigma is required for kind = \"ar\""))?;
                ArModel::new(coeffs, sigma).map_err(|e| CliError::config(e.to_string()))?
            }
        };
        Ok(Some(model))
    }

    /// The configured tests with their contamination counts attached.
    pub fn test_kinds(&self) -> CliResult<Vec<TestKind>> {
        if self.tests.kinds.is_empty() {
            return Err(CliError::config("tests.kinds must not be empty"));
        }
        let mut kinds = Vec::with_capacity(self.tests.kinds.len());
        for token in &self.tests.kinds {
            let base: TestKind = token
                .parse()
                .map_err(|e: specdet::Error| CliError::config(e.to_string()))?;
            let kind = if base.n_c().is_some() {
                let n_c = self.tests.n_c.ok_or_else(|| {
                    CliError::config(format!("tests.n_c is required because '{token}' uses it"))
                })?;
                base.with_n_c(n_c)
            } else {
                base
            };
            if kinds.contains(&kind) {
                return Err(CliError::config(format!("duplicate test '{token}'")));
            }
            kinds.push(kind);
        }
        Ok(kinds)
    }

    pub fn mc_section(&self) -> CliResult<&McSection> {
        self.mc
            .as_ref()
            .ok_or_else(|| CliError::config("this command requires an [mc] section"))
    }

    pub fn histogram_bins(&self) -> usize {
        self.histogram
            .as_ref()
            .and_then(|h| h.bins)
            .unwrap_or(DEFAULT_HISTOGRAM_BINS)
    }

    /// Synthetic-mode commands need the AR model and the training size.
    pub fn require_synthetic(&self) -> CliResult<(ArModel, usize)> {
        if self.training.mode != TrainingMode::SyntheticAr {
            return Err(CliError::config(
                "this command requires training.mode = \"synthetic-ar\"",
            ));
        }
        let l = self
            .training
            .l
            .ok_or_else(|| CliError::config("training.l is required in synthetic mode"))?;
        let model = self
            .noise_model()?
            .ok_or_else(|| CliError::config("a [noise] section is required in synthetic mode"))?;
        Ok((model, l))
    }
}
