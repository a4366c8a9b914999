use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use threecp_core::{
    Alphabet, ClusterMethod, CurveFormat, DiscretizeMethod, Error, Result, ScanOrder, ThresholdMode,
};

/// Full description of a pipeline run. Every field except `input` has a
/// default, so a minimal config is `{"input": "curves.csv"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub format: CurveFormat,
    /// Input is already discrete (`id<TAB>symbols` lines).
    pub discrete_input: bool,
    /// Symbol characters. Defaults to the first `alphabet_size` characters
    /// of `a-z A-Z 0-9`.
    pub alphabet: Option<String>,
    pub expected_length: Option<usize>,
    pub align: bool,
    pub alphabet_size: Option<usize>,
    pub discretizer: DiscretizeMethod,
    pub clamp_sigma: f64,
    pub spl: usize,
    /// Defaults to the heuristic in `threecp_core::default_lerp`.
    pub lerp: Option<usize>,
    pub scan_order: ScanOrder,
    pub threshold: f64,
    /// Apply the threshold during analysis as well as clustering.
    pub early_stop: Option<ThresholdMode>,
    pub cluster_method: ClusterMethod,
    /// 0 lets the thread pool decide.
    pub workers: usize,
    pub output: PathBuf,
    /// Number of equal position ranges in the region profile.
    pub regions: usize,
}

pub const DEFAULT_ALPHABET_SIZE: usize = 12;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            format: CurveFormat::CsvWide,
            discrete_input: false,
            alphabet: None,
            expected_length: None,
            align: true,
            alphabet_size: None,
            discretizer: DiscretizeMethod::EqualWidth,
            clamp_sigma: 3.0,
            spl: 2,
            lerp: None,
            scan_order: ScanOrder::LengthAsc,
            threshold: 0.5,
            early_stop: None,
            cluster_method: ClusterMethod::Components,
            workers: 0,
            output: PathBuf::from("out"),
            regions: 2,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            source_name: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        let alphabet = match &self.alphabet {
            Some(chars) => Alphabet::new(chars)?,
            None => Alphabet::default_for(self.alphabet_size.unwrap_or(DEFAULT_ALPHABET_SIZE))?,
        };
        if let Some(k) = self.alphabet_size {
            if k != alphabet.len() {
                return Err(Error::Config(format!(
                    "alphabet_size {k} disagrees with the {}-character alphabet",
                    alphabet.len()
                )));
            }
        }
        Ok(alphabet)
    }

    pub fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Config("no input file configured".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.alphabet()?.len();
        if k < 2 {
            return Err(Error::Config("alphabet size must be at least 2".into()));
        }
        if self.spl < 1 {
            return Err(Error::Config("spl must be at least 1".into()));
        }
        if let Some(lerp) = self.lerp {
            if lerp < self.spl {
                return Err(Error::Config(format!(
                    "lerp ({lerp}) must be at least spl ({})",
                    self.spl
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if !(self.clamp_sigma.is_finite() && self.clamp_sigma > 0.0) {
            return Err(Error::Config("clamp_sigma must be positive".into()));
        }
        if let Some(len) = self.expected_length {
            if len < 2 {
                return Err(Error::Config("expected_length must be at least 2".into()));
            }
        }
        if self.early_stop == Some(ThresholdMode::PruneBelow)
            && self.scan_order != ScanOrder::PositionAsc
        {
            return Err(Error::Config(
                "early_stop prune_below requires scan_order position_asc".into(),
            ));
        }
        if self.regions == 0 {
            return Err(Error::Config("regions must be at least 1".into()));
        }
        Ok(())
    }
}
