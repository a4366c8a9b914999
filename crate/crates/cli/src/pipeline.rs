//! Stage functions and their on-disk artifacts.
//!
//! Each stage reads the artifact of the previous one from the output
//! directory, so running the subcommands one by one produces the same files
//! as [`run`]. Data files carry no timestamps.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use threecp_core::commonality::{render_region_csv, split_ranges};
use threecp_core::dataset::{parse_discrete, render_discrete};
use threecp_core::index::{self, SequenceInfo};
use threecp_core::preprocess::standardize_set;
use threecp_core::{
    analyze, analyze_with_threshold, arpad, cluster_threshold, default_lerp, dendrogram,
    detect_all, group_same_position, load_curves, Alphabet, AnalyzeOptions, CommonalityReport,
    CommonalityResult, DiscreteSequence, Discretizer, Error, ErrorKind, Merge, MultivariateLerpRsa,
    PatternSet, StandardizedCurve,
};

use crate::config::PipelineConfig;

pub const STANDARDIZED: &str = "standardized.json";
pub const PLOT_CURVES: &str = "plot_curves.csv";
pub const DISCRETIZER: &str = "discretizer.json";
pub const DISCRETE: &str = "discrete.txt";
pub const INDEX_DIR: &str = "index";
pub const PATTERNS: &str = "patterns.tsv";
pub const COMMONALITY: &str = "commonality.json";
pub const REGIONS: &str = "regions.csv";
pub const PLOT_COVERAGE: &str = "plot_coverage.csv";
pub const CLUSTERS: &str = "clusters.json";
pub const DENDROGRAM: &str = "dendrogram.json";
pub const MANIFEST: &str = "MANIFEST.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Standardize,
    Discretize,
    Index,
    Detect,
    Analyze,
    Cluster,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Standardize,
        Stage::Discretize,
        Stage::Index,
        Stage::Detect,
        Stage::Analyze,
        Stage::Cluster,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Standardize => "standardize",
            Stage::Discretize => "discretize",
            Stage::Index => "index",
            Stage::Detect => "detect",
            Stage::Analyze => "analyze",
            Stage::Cluster => "cluster",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Option<Stage>,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(s) => write!(f, "{s}: {}", self.source),
            None => write!(f, "{}", self.source),
        }
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl StageError {
    /// 1 validation/config, 2 I/O, 3 internal consistency.
    pub fn exit_code(&self) -> i32 {
        match self.source.kind() {
            ErrorKind::Validation => 1,
            ErrorKind::Io => 2,
            ErrorKind::Consistency => 3,
        }
    }
}

impl From<Error> for StageError {
    fn from(source: Error) -> Self {
        StageError {
            stage: None,
            source,
        }
    }
}

// ---- manifest -------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageState {
    Pending,
    Complete,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub state: StageState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub complete: bool,
    pub stages: Vec<StageRecord>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            complete: false,
            stages: Stage::ALL
                .iter()
                .map(|&stage| StageRecord {
                    stage,
                    state: StageState::Pending,
                    error: None,
                })
                .collect(),
        }
    }
}

impl RunManifest {
    pub fn load_or_default(out: &Path) -> Self {
        fs::read_to_string(out.join(MANIFEST))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default()
    }

    fn mark(&mut self, stage: Stage, state: StageState, error: Option<String>) {
        for r in &mut self.stages {
            if r.stage == stage {
                r.state = state;
                r.error = error.clone();
            }
        }
        self.complete = self
            .stages
            .iter()
            .all(|r| matches!(r.state, StageState::Complete | StageState::Skipped));
    }

    fn save(&self, out: &Path) -> Result<(), Error> {
        write_json(&out.join(MANIFEST), self)
    }
}

// ---- io helpers -----------------------------------------------------------

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::CorruptFile {
        path: path.to_owned(),
        line: e.line(),
        message: e.to_string(),
    })
}

// ---- stage payloads -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizerArtifact {
    pub alphabet: Alphabet,
    #[serde(flatten)]
    pub discretizer: Discretizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersArtifact {
    pub threshold: f64,
    pub method: threecp_core::ClusterMethod,
    pub clusters: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramArtifact {
    /// Leaf `k` is `ids[k]`; merge `k` creates node `ids.len() + k`.
    pub ids: Vec<String>,
    pub merges: Vec<Merge>,
}

/// Executes stages against one output directory.
pub struct Pipeline {
    pub config: PipelineConfig,
    out: PathBuf,
    manifest: RunManifest,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, StageError> {
        config.validate()?;
        let out = config.output.clone();
        fs::create_dir_all(&out).map_err(io_err(&out))?;
        let manifest = RunManifest::load_or_default(&out);
        Ok(Pipeline {
            config,
            out,
            manifest,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn workers(&self) -> usize {
        self.config.workers
    }

    fn finish<T>(
        &mut self,
        stage: Stage,
        result: Result<T, Error>,
        skipped: bool,
    ) -> Result<T, StageError> {
        match result {
            Ok(v) => {
                let state = if skipped {
                    StageState::Skipped
                } else {
                    StageState::Complete
                };
                self.manifest.mark(stage, state, None);
                self.manifest.save(&self.out).map_err(|source| StageError {
                    stage: Some(stage),
                    source,
                })?;
                log::info!("{stage}: {state:?}");
                Ok(v)
            }
            Err(source) => {
                self.manifest
                    .mark(stage, StageState::Failed, Some(source.to_string()));
                let _ = self.manifest.save(&self.out);
                Err(StageError {
                    stage: Some(stage),
                    source,
                })
            }
        }
    }

    // ---- standardize ----

    /// Z-scores and aligns the input curves. Skipped for discrete input.
    pub fn standardize(&mut self) -> Result<Option<Vec<StandardizedCurve>>, StageError> {
        if self.config.discrete_input {
            return self.finish(Stage::Standardize, Ok(None), true);
        }
        let r = self.standardize_inner().map(Some);
        self.finish(Stage::Standardize, r, false)
    }

    fn standardize_inner(&self) -> Result<Vec<StandardizedCurve>, Error> {
        let set = load_curves(self.config.input()?, self.config.format)?
            .with_expected_length(self.config.expected_length)?;
        let curves = threecp_core::parallel::with_workers(self.workers(), || {
            standardize_set(&set, self.config.align)
        })?;
        write_json(&self.path(STANDARDIZED), &curves)?;
        let mut plot = String::from("id,index,value\n");
        for c in &curves {
            for (i, v) in c.values.iter().enumerate() {
                plot.push_str(&format!("{},{i},{v}\n", c.id));
            }
        }
        write_text(&self.path(PLOT_CURVES), &plot)?;
        Ok(curves)
    }

    pub fn read_standardized(&self) -> Result<Vec<StandardizedCurve>, Error> {
        read_json(&self.path(STANDARDIZED))
    }

    // ---- discretize ----

    pub fn discretize(
        &mut self,
        curves: Option<Vec<StandardizedCurve>>,
    ) -> Result<Vec<DiscreteSequence>, StageError> {
        let r = self.discretize_inner(curves);
        self.finish(Stage::Discretize, r, false)
    }

    fn discretize_inner(
        &self,
        curves: Option<Vec<StandardizedCurve>>,
    ) -> Result<Vec<DiscreteSequence>, Error> {
        let alphabet = self.config.alphabet()?;
        let seqs = if self.config.discrete_input {
            let input = self.config.input()?;
            let text = fs::read_to_string(input).map_err(io_err(input))?;
            parse_discrete(&text, &alphabet, &input.display().to_string())?
        } else {
            let curves = match curves {
                Some(c) => c,
                None => self.read_standardized()?,
            };
            let pooled: Vec<f64> = curves
                .iter()
                .flat_map(|c| c.values.iter().copied())
                .collect();
            let d = Discretizer::fit(
                self.config.discretizer,
                alphabet.len(),
                &pooled,
                self.config.clamp_sigma,
            )?;
            write_json(
                &self.path(DISCRETIZER),
                &DiscretizerArtifact {
                    alphabet: alphabet.clone(),
                    discretizer: d.clone(),
                },
            )?;
            curves.iter().map(|c| d.discretize_curve(c)).collect()
        };
        write_text(&self.path(DISCRETE), &render_discrete(&seqs, &alphabet)?)?;
        Ok(seqs)
    }

    pub fn read_discrete(&self) -> Result<Vec<DiscreteSequence>, Error> {
        let path = self.path(DISCRETE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        parse_discrete(&text, &self.config.alphabet()?, &path.display().to_string())
    }

    // ---- index ----

    pub fn lerp_for(&self, seqs: &[DiscreteSequence], alphabet_size: usize) -> usize {
        self.config.lerp.unwrap_or_else(|| {
            let total: usize = seqs.iter().map(DiscreteSequence::len).sum();
            default_lerp(total, alphabet_size).max(self.config.spl)
        })
    }

    pub fn index(
        &mut self,
        seqs: Option<Vec<DiscreteSequence>>,
    ) -> Result<MultivariateLerpRsa, StageError> {
        let r = self.index_inner(seqs);
        self.finish(Stage::Index, r, false)
    }

    fn index_inner(
        &self,
        seqs: Option<Vec<DiscreteSequence>>,
    ) -> Result<MultivariateLerpRsa, Error> {
        let seqs = match seqs {
            Some(s) => s,
            None => self.read_discrete()?,
        };
        let alphabet = self.config.alphabet()?;
        let lerp = self.lerp_for(&seqs, alphabet.len());
        let idx = index::build(&seqs, alphabet.len(), self.config.spl, lerp, self.workers())?;
        let dir = self.path(INDEX_DIR);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        index::persist(&idx, &dir, &alphabet, self.workers())?;
        Ok(idx)
    }

    // ---- detect ----

    pub fn detect(&mut self, idx: Option<MultivariateLerpRsa>) -> Result<PatternSet, StageError> {
        let r = self.detect_inner(idx);
        self.finish(Stage::Detect, r, false)
    }

    fn detect_inner(&self, idx: Option<MultivariateLerpRsa>) -> Result<PatternSet, Error> {
        let (idx, alphabet) = match idx {
            Some(i) => (i, self.config.alphabet()?),
            None => index::load(&self.path(INDEX_DIR), self.workers())?,
        };
        let set = detect_all(&idx, self.workers())?;
        arpad::write_patterns(&set, &alphabet, &self.path(PATTERNS))?;
        Ok(set)
    }

    // ---- analyze ----

    pub fn analyze(
        &mut self,
        patterns: Option<PatternSet>,
    ) -> Result<CommonalityReport, StageError> {
        let r = self.analyze_inner(patterns);
        self.finish(Stage::Analyze, r, false)
    }

    fn analyze_inner(&self, patterns: Option<PatternSet>) -> Result<CommonalityReport, Error> {
        let manifest = index::load_manifest(&self.path(INDEX_DIR))?;
        let patterns = match patterns {
            Some(p) => p,
            None => arpad::read_patterns(
                &self.path(PATTERNS),
                &manifest.alphabet,
                manifest.spl,
                manifest.lerp,
            )?,
        };
        let n = common_length(&manifest.sequences)?;
        let m = manifest.sequences.len();
        let groups = group_same_position(&patterns);
        let options = AnalyzeOptions::default();
        let result: CommonalityResult = match self.config.early_stop {
            Some(mode) => analyze_with_threshold(
                &groups,
                self.config.scan_order,
                n,
                m,
                self.config.threshold,
                mode,
                &options,
            )?,
            None => analyze(&groups, self.config.scan_order, n, m, &options)?,
        };
        let ids: Vec<String> = manifest.sequences.iter().map(|s| s.id.clone()).collect();
        let report = CommonalityReport::from_result(&result, &ids);
        write_text(&self.path(COMMONALITY), &report.to_json())?;
        let ranges = split_ranges(n, self.config.regions);
        write_text(&self.path(REGIONS), &render_region_csv(&result, &ranges)?)?;
        let mut plot = String::from("i,j,coverage\n");
        for (i, j) in result.pairs() {
            plot.push_str(&format!(
                "{i},{j},{}\n",
                result.coverage(i, j).to_bit_string()
            ));
        }
        write_text(&self.path(PLOT_COVERAGE), &plot)?;
        Ok(report)
    }

    pub fn read_commonality(&self) -> Result<CommonalityReport, Error> {
        read_json(&self.path(COMMONALITY))
    }

    // ---- cluster ----

    pub fn cluster(
        &mut self,
        report: Option<CommonalityReport>,
    ) -> Result<ClustersArtifact, StageError> {
        let r = self.cluster_inner(report);
        self.finish(Stage::Cluster, r, false)
    }

    fn cluster_inner(&self, report: Option<CommonalityReport>) -> Result<ClustersArtifact, Error> {
        let report = match report {
            Some(r) => r,
            None => self.read_commonality()?,
        };
        let sim = report.similarity()?;
        let ids: Vec<String> = if report.ids.is_empty() {
            (1..=sim.m).map(|s| s.to_string()).collect()
        } else {
            report.ids.clone()
        };
        let clustering =
            cluster_threshold(&sim, self.config.threshold, self.config.cluster_method)?;
        let artifact = ClustersArtifact {
            threshold: clustering.threshold,
            method: clustering.method,
            clusters: clustering
                .clusters
                .iter()
                .map(|c| c.iter().map(|&s| ids[s as usize - 1].clone()).collect())
                .collect(),
        };
        write_json(&self.path(CLUSTERS), &artifact)?;
        write_json(
            &self.path(DENDROGRAM),
            &DendrogramArtifact {
                ids,
                merges: dendrogram(&sim),
            },
        )?;
        Ok(artifact)
    }

    pub fn run_stage(&mut self, stage: Stage) -> Result<(), StageError> {
        match stage {
            Stage::Standardize => self.standardize().map(drop),
            Stage::Discretize => self.discretize(None).map(drop),
            Stage::Index => self.index(None).map(drop),
            Stage::Detect => self.detect(None).map(drop),
            Stage::Analyze => self.analyze(None).map(drop),
            Stage::Cluster => self.cluster(None).map(drop),
        }
    }
}

fn common_length(seqs: &[SequenceInfo]) -> Result<usize, Error> {
    let n = seqs
        .first()
        .map(|s| s.length)
        .ok_or_else(|| Error::Validation("no sequences".into()))?;
    if let Some(s) = seqs.iter().find(|s| s.length != n) {
        return Err(Error::Validation(format!(
            "sequence '{}' has length {} but '{}' has length {n}; align lengths before analysis",
            s.id, s.length, seqs[0].id
        )));
    }
    Ok(n)
}

/// Runs every stage, passing results in memory and writing each artifact.
pub fn run(config: PipelineConfig) -> Result<ClustersArtifact, StageError> {
    let mut p = Pipeline::new(config)?;
    p.manifest = RunManifest::default();
    let curves = p.standardize()?;
    let seqs = p.discretize(curves)?;
    let idx = p.index(Some(seqs))?;
    let patterns = p.detect(Some(idx))?;
    let report = p.analyze(Some(patterns))?;
    p.cluster(Some(report))
}
