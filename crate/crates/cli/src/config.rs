// SPDX-License-Identifier: Apache-2.0

//! Run configuration, read from TOML. Every section is optional and unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use nvdyn::cce::{CceSettings, DecayProfile};
use nvdyn::dynamics::{PreparationSpec, SequenceKind, SequenceShape};
use nvdyn::model::SystemParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemParams,
    pub bath: BathSection,
    pub sequence: SequenceSection,
    pub preparation: PreparationSpec,
    pub decay: DecaySection,
    pub tomography: TomographySection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BathMethod {
    /// Cluster correlation expansion.
    Cce,
    /// Exact system ⊗ bath propagation, up to eight bath spins.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub seed: u64,
    pub abundance: f64,
    /// Å
    pub r_min: f64,
    /// Å
    pub r_max: f64,
    pub max_order: usize,
    /// Hz
    pub pair_cutoff: f64,
    /// Bath realisations averaged, with seeds `seed, seed+1, …`.
    pub n_seeds: usize,
    pub method: BathMethod,
}

impl Default for BathSection {
    fn default() -> Self {
        let cce = CceSettings::default();
        Self {
            seed: 1,
            abundance: 0.011,
            r_min: 2.0,
            r_max: 30.0,
            max_order: cce.max_order,
            pair_cutoff: cce.pair_cutoff,
            n_seeds: 1,
            method: BathMethod::Cce,
        }
    }
}

impl BathSection {
    pub fn cce(&self) -> CceSettings {
        CceSettings {
            max_order: self.max_order,
            pair_cutoff: self.pair_cutoff,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSection {
    pub kind: SequenceKind,
    pub n_pulses: usize,
    /// Longest total evolution time, s.
    pub duration: f64,
    /// Evenly spaced total times in `[0, duration]`; each is its own sequence.
    pub n_samples: usize,
}

impl Default for SequenceSection {
    fn default() -> Self {
        Self {
            kind: SequenceKind::Pdd,
            n_pulses: 2,
            duration: 80e-6,
            n_samples: 161,
        }
    }
}

impl SequenceSection {
    pub fn shape(&self) -> SequenceShape {
        SequenceShape {
            kind: self.kind,
            n_pulses: self.n_pulses,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_samples - 1;
        (0..=n).map(|k| self.duration * k as f64 / n as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySection {
    pub profile: DecayProfile,
}

impl Default for DecaySection {
    fn default() -> Self {
        Self {
            profile: DecayProfile::Gaussian,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub enabled: bool,
    pub shots: u64,
    pub contrast: f64,
    pub n_resamples: usize,
    pub seed: u64,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            enabled: false,
            shots: 1_000_000,
            contrast: 0.3,
            n_resamples: 200,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Window start, s; defaults to the first sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Window end, s; defaults to the last sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: PathBuf::from("nvdyn-out"),
            format: OutputFormat::Csv,
        }
    }
}

fn bad(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The fully populated configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let b = &self.bath;
        if !(0.0..=1.0).contains(&b.abundance) {
            return Err(bad("bath.abundance", "must lie in [0, 1]"));
        }
        if !(b.r_min > 0.0 && b.r_min < b.r_max && b.r_max.is_finite()) {
            return Err(bad("bath.r_min", "require 0 < r_min < r_max"));
        }
        if b.n_seeds == 0 {
            return Err(bad("bath.n_seeds", "must be at least 1"));
        }
        b.cce().validate().map_err(|e| CliError::Config(e.to_string()))?;
        let s = &self.sequence;
        if !(s.duration.is_finite() && s.duration > 0.0) {
            return Err(bad("sequence.duration", "must be positive"));
        }
        if s.n_samples < 2 {
            return Err(bad("sequence.n_samples", "must be at least 2"));
        }
        if s.kind == SequenceKind::Pdd && s.n_pulses == 0 {
            return Err(bad("sequence.n_pulses", "must be at least 1"));
        }
        self.preparation.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let t = &self.tomography;
        if t.enabled {
            if t.shots == 0 {
                return Err(bad("tomography.shots", "must be at least 1"));
            }
            if !(t.contrast > 0.0 && t.contrast <= 1.0) {
                return Err(bad("tomography.contrast", "must lie in (0, 1]"));
            }
            if t.n_resamples < nvdyn::tomography::MIN_RESAMPLES {
                return Err(bad(
                    "tomography.n_resamples",
                    format!("must be at least {}", nvdyn::tomography::MIN_RESAMPLES),
                ));
            }
        }
        let (t0, tmax) = self.window();
        if !(t0 >= 0.0 && t0 < tmax && tmax <= s.duration) {
            return Err(bad("analysis", "require 0 ≤ t0 < tmax ≤ sequence.duration"));
        }
        Ok(())
    }

    /// Analysis window with defaults filled in.
    pub fn window(&self) -> (f64, f64) {
        (
            self.analysis.t0.unwrap_or(0.0),
            self.analysis.tmax.unwrap_or(self.sequence.duration),
        )
    }
}
