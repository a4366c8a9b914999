//! Curve clustering by common repeated patterns.
//!
//! The pipeline z-scores and length-aligns curves ([`preprocess`]), maps
//! them onto a finite alphabet ([`discretize`]), indexes every truncated
//! suffix in a classified multivariate LERP-RSA ([`index`]), detects all
//! repeated patterns ([`arpad`]), scores pairs by the patterns they share
//! at identical positions ([`commonality`]) and thresholds the resulting
//! similarities into clusters ([`clustering`]).

pub mod arpad;
pub mod clustering;
pub mod commonality;
pub mod dataset;
pub mod discretize;
pub mod error;
pub mod index;
pub mod parallel;
pub mod preprocess;

pub use crate::arpad::{
    detect_all, detect_class, oracle_detect, Occurrence, PatternResult, PatternSet,
};
pub use crate::clustering::{cluster_threshold, dendrogram, ClusterMethod, Clustering, Merge};
pub use crate::commonality::{
    analyze, analyze_partitioned, analyze_with_threshold, group_same_position, region_profile,
    similarity, AnalyzeOptions, Bitmap, CommonOccurrence, CommonalityReport, CommonalityResult,
    PairStats, PairStatus, ScanOrder, SimilarityMatrix, ThresholdMode,
};
pub use crate::dataset::{
    load_curves, load_discrete, parse_curves, write_curves, Alphabet, Curve, CurveFormat, CurveSet,
    DiscreteSequence, Symbol,
};
pub use crate::discretize::{Discretizer, Method as DiscretizeMethod};
pub use crate::error::{Error, ErrorKind, Result};
pub use crate::index::{
    build as build_index, default_lerp, LerpRsaClass, MultivariateLerpRsa, SeqNo, SuffixEntry,
};
pub use crate::preprocess::{align_length, resample_direct, zscore, StandardizedCurve};
