//! Meta-analysis of detected patterns.
//!
//! Only occurrences shared by two or more sequences at the same position
//! count as commonality. Each such group marks its interval in the
//! per-sequence SPI bitmaps and in the coverage bitmap of every member
//! pair; the pair's Sequence Commonality Matrix cell counts the patterns
//! that contributed new bits and the total bits covered.

mod bitmap;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::bitmap::Bitmap;
use crate::arpad::PatternSet;
use crate::dataset::Symbol;
use crate::error::{Error, Result};
use crate::index::SeqNo;
use crate::parallel::with_workers;

/// A pattern found at the same position in at least two sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonOccurrence {
    pub pattern: Vec<Symbol>,
    pub pos: u32,
    /// Ascending, at least two.
    pub seqs: Vec<SeqNo>,
}

impl CommonOccurrence {
    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    pub fn interval(&self) -> Range<usize> {
        self.pos as usize..self.pos as usize + self.pattern.len()
    }
}

pub fn group_same_position(patterns: &PatternSet) -> Vec<CommonOccurrence> {
    let mut out = Vec::new();
    for r in &patterns.results {
        // Occurrences are sorted by (pos, seq), so each position is one run.
        for run in r.occurrences.chunk_by(|a, b| a.pos == b.pos) {
            if run.len() >= 2 {
                out.push(CommonOccurrence {
                    pattern: r.pattern.clone(),
                    pos: run[0].pos,
                    seqs: run.iter().map(|o| o.seq).collect(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    /// Pattern length, then pattern, then position.
    #[default]
    LengthAsc,
    /// Position, then longest pattern first, then pattern.
    PositionAsc,
}

impl FromStr for ScanOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length_asc" | "length-asc" => Ok(ScanOrder::LengthAsc),
            "position_asc" | "position-asc" => Ok(ScanOrder::PositionAsc),
            other => Err(Error::Config(format!("unknown scan order '{other}'"))),
        }
    }
}

impl fmt::Display for ScanOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanOrder::LengthAsc => "length_asc",
            ScanOrder::PositionAsc => "position_asc",
        })
    }
}

pub fn sorted_groups(groups: &[CommonOccurrence], order: ScanOrder) -> Vec<&CommonOccurrence> {
    let mut v: Vec<&CommonOccurrence> = groups.iter().collect();
    match order {
        ScanOrder::LengthAsc => {
            v.sort_by(|a, b| (a.len(), &a.pattern, a.pos).cmp(&(b.len(), &b.pattern, b.pos)))
        }
        ScanOrder::PositionAsc => v.sort_by(|a, b| {
            (a.pos, std::cmp::Reverse(a.len()), &a.pattern).cmp(&(
                b.pos,
                std::cmp::Reverse(b.len()),
                &b.pattern,
            ))
        }),
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairStats {
    pub pattern_count: u64,
    pub common_bits: usize,
}

impl fmt::Display for PairStats {
    /// `count(bits)`, e.g. `6(8)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pattern_count, self.common_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    #[default]
    Active,
    /// Reached the threshold; later groups were not applied to this pair.
    Frozen,
    /// Could no longer reach the threshold.
    Dropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    StopAt,
    PruneBelow,
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stop_at" | "stop-at" => Ok(ThresholdMode::StopAt),
            "prune_below" | "prune-below" => Ok(ThresholdMode::PruneBelow),
            other => Err(Error::Config(format!("unknown threshold mode '{other}'"))),
        }
    }
}

pub type GroupFilter = Arc<dyn Fn(&CommonOccurrence) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct AnalyzeOptions {
    /// Groups rejected by the filter are ignored.
    pub filter: Option<GroupFilter>,
    /// Warn when the pair bitmaps would exceed this many bits.
    pub pair_bit_cap: u64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            filter: None,
            pair_bit_cap: 1_000_000_000,
        }
    }
}

impl fmt::Debug for AnalyzeOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyzeOptions")
            .field("filter", &self.filter.as_ref().map(|_| "<fn>"))
            .field("pair_bit_cap", &self.pair_bit_cap)
            .finish()
    }
}

/// Index of unordered pair `{i, j}` (1-based, `i != j`) in row-major upper
/// triangle order.
pub fn pair_index(m: usize, i: SeqNo, j: SeqNo) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    let (a, b) = (a as usize - 1, b as usize - 1);
    a * (2 * m - a - 1) / 2 + (b - a - 1)
}

pub fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonalityResult {
    pub n: usize,
    pub m: usize,
    spi: Vec<Bitmap>,
    coverage: Vec<Bitmap>,
    scm: Vec<PairStats>,
    status: Vec<PairStatus>,
}

impl CommonalityResult {
    pub fn new(n: usize, m: usize) -> Self {
        let pairs = pair_count(m);
        CommonalityResult {
            n,
            m,
            spi: vec![Bitmap::zeros(n); m],
            coverage: vec![Bitmap::zeros(n); pairs],
            scm: vec![PairStats::default(); pairs],
            status: vec![PairStatus::Active; pairs],
        }
    }

    pub fn spi(&self, seq: SeqNo) -> &Bitmap {
        &self.spi[seq as usize - 1]
    }

    pub fn coverage(&self, i: SeqNo, j: SeqNo) -> &Bitmap {
        &self.coverage[pair_index(self.m, i, j)]
    }

    pub fn stats(&self, i: SeqNo, j: SeqNo) -> PairStats {
        self.scm[pair_index(self.m, i, j)]
    }

    pub fn status(&self, i: SeqNo, j: SeqNo) -> PairStatus {
        self.status[pair_index(self.m, i, j)]
    }

    /// All pairs `(i, j)` with `i < j`, in the order used by [`pair_index`].
    pub fn pairs(&self) -> impl Iterator<Item = (SeqNo, SeqNo)> {
        let m = self.m as SeqNo;
        (1..=m).flat_map(move |i| (i + 1..=m).map(move |j| (i, j)))
    }

    pub fn similarity(&self) -> SimilarityMatrix {
        similarity(self)
    }

    fn check(&self, g: &CommonOccurrence) -> Result<()> {
        if g.seqs.len() < 2 {
            return Err(Error::Consistency(format!(
                "group at position {} has fewer than two sequences",
                g.pos
            )));
        }
        if let Some(&s) = g.seqs.iter().find(|&&s| s == 0 || s as usize > self.m) {
            return Err(Error::Consistency(format!(
                "group references unknown sequence {s} (m = {})",
                self.m
            )));
        }
        if !g.seqs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Consistency(
                "group sequences not strictly ascending".into(),
            ));
        }
        if g.interval().end > self.n {
            return Err(Error::Consistency(format!(
                "pattern at position {} with length {} runs past n = {}",
                g.pos,
                g.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Applies one group. Pairs not `Active` are left untouched.
    fn apply(&mut self, g: &CommonOccurrence, tau_stop: Option<f64>) {
        let range = g.interval();
        for &s in &g.seqs {
            self.spi[s as usize - 1].set_range(range.clone());
        }
        for (a, &i) in g.seqs.iter().enumerate() {
            for &j in &g.seqs[a + 1..] {
                let p = pair_index(self.m, i, j);
                if self.status[p] != PairStatus::Active {
                    continue;
                }
                let newly = self.coverage[p].set_range(range.clone());
                if newly == 0 {
                    continue;
                }
                self.scm[p].pattern_count += 1;
                self.scm[p].common_bits += newly;
                if let Some(tau) = tau_stop {
                    if self.scm[p].common_bits as f64 / self.n as f64 >= tau {
                        self.status[p] = PairStatus::Frozen;
                    }
                }
            }
        }
    }

    /// Drops active pairs whose best possible score, given that every
    /// position from `from` on could still match, is below `tau`.
    fn prune(&mut self, from: usize, tau: f64) {
        let remaining = self.n.saturating_sub(from);
        for p in 0..self.scm.len() {
            if self.status[p] == PairStatus::Active
                && ((self.scm[p].common_bits + remaining) as f64 / self.n as f64) < tau
            {
                self.status[p] = PairStatus::Dropped;
            }
        }
    }

    /// OR-merges coverage and SPI of a result over the same `n`/`m`.
    /// Pattern counts are summed and therefore only approximate.
    pub fn merge(&mut self, other: &CommonalityResult) {
        assert_eq!((self.n, self.m), (other.n, other.m), "shape mismatch");
        for (a, b) in self.spi.iter_mut().zip(&other.spi) {
            a.or_assign(b);
        }
        for p in 0..self.coverage.len() {
            self.coverage[p].or_assign(&other.coverage[p]);
            self.scm[p].common_bits = self.coverage[p].count_ones();
            self.scm[p].pattern_count += other.scm[p].pattern_count;
        }
    }
}

fn prepare(n: usize, m: usize, options: &AnalyzeOptions) -> Result<CommonalityResult> {
    if n == 0 {
        return Err(Error::Config("sequence length n must be positive".into()));
    }
    let bits = pair_count(m) as u64 * n as u64;
    if bits > options.pair_bit_cap {
        log::warn!(
            "pair coverage needs {bits} bits for {m} sequences of length {n} (cap {})",
            options.pair_bit_cap
        );
    }
    Ok(CommonalityResult::new(n, m))
}

fn accepted<'a>(
    groups: Vec<&'a CommonOccurrence>,
    options: &AnalyzeOptions,
) -> Vec<&'a CommonOccurrence> {
    match &options.filter {
        Some(f) => groups.into_iter().filter(|g| f(g)).collect(),
        None => groups,
    }
}

pub fn analyze(
    groups: &[CommonOccurrence],
    order: ScanOrder,
    n: usize,
    m: usize,
    options: &AnalyzeOptions,
) -> Result<CommonalityResult> {
    let mut result = prepare(n, m, options)?;
    for g in accepted(sorted_groups(groups, order), options) {
        result.check(g)?;
        result.apply(g, None);
    }
    Ok(result)
}

/// Threshold-aware analysis. A threshold of 0 disables both modes.
///
/// `StopAt` freezes a pair as soon as its score reaches `tau`.
/// `PruneBelow` needs `PositionAsc`; before the groups of each new position
/// `p` it drops pairs with `(bits + n - p) / n < tau`, and applies the same
/// test with `p = n` at the end.
#[allow(clippy::too_many_arguments)]
pub fn analyze_with_threshold(
    groups: &[CommonOccurrence],
    order: ScanOrder,
    n: usize,
    m: usize,
    tau: f64,
    mode: ThresholdMode,
    options: &AnalyzeOptions,
) -> Result<CommonalityResult> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!(
            "threshold must lie in [0, 1], got {tau}"
        )));
    }
    if mode == ThresholdMode::PruneBelow && order != ScanOrder::PositionAsc {
        return Err(Error::Config(
            "prune_below requires position_asc scan order".into(),
        ));
    }
    if tau == 0.0 {
        return analyze(groups, order, n, m, options);
    }
    let mut result = prepare(n, m, options)?;
    let mut last_pos: Option<u32> = None;
    for g in accepted(sorted_groups(groups, order), options) {
        result.check(g)?;
        match mode {
            ThresholdMode::StopAt => result.apply(g, Some(tau)),
            ThresholdMode::PruneBelow => {
                if last_pos != Some(g.pos) {
                    result.prune(g.pos as usize, tau);
                    last_pos = Some(g.pos);
                }
                result.apply(g, None);
            }
        }
    }
    if mode == ThresholdMode::PruneBelow {
        result.prune(n, tau);
    }
    Ok(result)
}

/// Splits groups into `partitions` contiguous position ranges, analyzes
/// them in parallel and OR-merges the bitmaps. Coverage, SPI and common
/// bits equal the serial result; pattern counts are approximate.
pub fn analyze_partitioned(
    groups: &[CommonOccurrence],
    order: ScanOrder,
    n: usize,
    m: usize,
    partitions: usize,
    workers: usize,
    options: &AnalyzeOptions,
) -> Result<CommonalityResult> {
    let parts = partitions.clamp(1, n.max(1));
    let mut buckets: Vec<Vec<CommonOccurrence>> = vec![Vec::new(); parts];
    for g in groups {
        let b = (g.pos as usize * parts / n.max(1)).min(parts - 1);
        buckets[b].push(g.clone());
    }
    let results = with_workers(workers, || {
        buckets
            .par_iter()
            .map(|b| analyze(b, order, n, m, options))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut iter = results.into_iter();
    let mut merged = iter.next().unwrap_or_else(|| CommonalityResult::new(n, m));
    for r in iter {
        merged.merge(&r);
    }
    Ok(merged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub m: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// `values` in [`pair_index`] order.
    pub fn from_pairs(m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != pair_count(m) {
            return Err(Error::Validation(format!(
                "{} similarities for {m} sequences, expected {}",
                values.len(),
                pair_count(m)
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!("similarity {v} outside [0, 1]")));
        }
        Ok(SimilarityMatrix { m, values })
    }

    /// Similarity of two sequences; a sequence is fully similar to itself.
    pub fn get(&self, i: SeqNo, j: SeqNo) -> f64 {
        if i == j {
            1.0
        } else {
            self.values[pair_index(self.m, i, j)]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn similarity(result: &CommonalityResult) -> SimilarityMatrix {
    let values = result
        .scm
        .iter()
        .map(|s| s.common_bits as f64 / result.n as f64)
        .collect();
    SimilarityMatrix {
        m: result.m,
        values,
    }
}

/// Coverage ratio of a pair inside each range.
pub fn region_profile(
    result: &CommonalityResult,
    pair: (SeqNo, SeqNo),
    ranges: &[Range<usize>],
) -> Result<Vec<f64>> {
    let (i, j) = pair;
    if i == j || i == 0 || j == 0 || i as usize > result.m || j as usize > result.m {
        return Err(Error::Config(format!("invalid pair ({i}, {j})")));
    }
    let cov = result.coverage(i, j);
    ranges
        .iter()
        .map(|r| {
            if r.start >= r.end {
                return Err(Error::Config(format!("empty range {}..{}", r.start, r.end)));
            }
            if r.end > result.n {
                return Err(Error::Config(format!(
                    "range {}..{} exceeds n = {}",
                    r.start, r.end, result.n
                )));
            }
            Ok(cov.count_ones_in(r.clone()) as f64 / r.len() as f64)
        })
        .collect()
}

/// `parts` near-equal consecutive ranges covering `0..n`.
pub fn split_ranges(n: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.clamp(1, n.max(1));
    (0..parts)
        .map(|k| k * n / parts..(k + 1) * n / parts)
        .collect()
}

/// CSV with header `i,j,range_start,range_end,ratio`, one row per pair and range.
pub fn render_region_csv(result: &CommonalityResult, ranges: &[Range<usize>]) -> Result<String> {
    let mut out = String::from("i,j,range_start,range_end,ratio\n");
    for (i, j) in result.pairs() {
        let ratios = region_profile(result, (i, j), ranges)?;
        for (r, ratio) in ranges.iter().zip(ratios) {
            out.push_str(&format!("{i},{j},{},{},{ratio}\n", r.start, r.end));
        }
    }
    Ok(out)
}

// ---- JSON report ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub i: SeqNo,
    pub j: SeqNo,
    pub pattern_count: u64,
    pub common_bits: usize,
    pub sim: f64,
    #[serde(default)]
    pub status: PairStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonalityReport {
    pub n: usize,
    #[serde(default)]
    pub ids: Vec<String>,
    pub pairs: Vec<PairReport>,
    pub spi: BTreeMap<SeqNo, String>,
    pub coverage: serde_json::Map<String, serde_json::Value>,
}

impl CommonalityReport {
    pub fn from_result(result: &CommonalityResult, ids: &[String]) -> Self {
        let sims = similarity(result);
        let pairs = result
            .pairs()
            .map(|(i, j)| {
                let s = result.stats(i, j);
                PairReport {
                    i,
                    j,
                    pattern_count: s.pattern_count,
                    common_bits: s.common_bits,
                    sim: sims.get(i, j),
                    status: result.status(i, j),
                }
            })
            .collect();
        let spi = (1..=result.m as SeqNo)
            .map(|s| (s, result.spi(s).to_bit_string()))
            .collect();
        let coverage = result
            .pairs()
            .map(|(i, j)| {
                (
                    format!("{i}-{j}"),
                    result.coverage(i, j).to_bit_string().into(),
                )
            })
            .collect();
        CommonalityReport {
            n: result.n,
            ids: ids.to_vec(),
            pairs,
            spi,
            coverage,
        }
    }

    pub fn m(&self) -> usize {
        if !self.ids.is_empty() {
            self.ids.len()
        } else {
            self.spi.len()
        }
    }

    pub fn similarity(&self) -> Result<SimilarityMatrix> {
        let m = self.m();
        let mut values = vec![f64::NAN; pair_count(m)];
        for p in &self.pairs {
            if p.i == p.j || p.i as usize > m || p.j as usize > m || p.i == 0 || p.j == 0 {
                return Err(Error::Validation(format!(
                    "report has invalid pair ({}, {})",
                    p.i, p.j
                )));
            }
            values[pair_index(m, p.i, p.j)] = p.sim;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Validation("report is missing pairs".into()));
        }
        SimilarityMatrix::from_pairs(m, values)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
