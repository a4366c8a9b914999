//! Mapping standardized values onto a finite alphabet.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Alphabet, DiscreteSequence, Symbol, MAX_ALPHABET_SIZE};
use crate::error::{Error, Result};
use crate::preprocess::StandardizedCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EqualWidth,
    EqualFrequency,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal_width" | "equal-width" => Ok(Method::EqualWidth),
            "equal_frequency" | "equal-frequency" => Ok(Method::EqualFrequency),
            other => Err(Error::Config(format!("unknown discretizer '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::EqualWidth => "equal_width",
            Method::EqualFrequency => "equal_frequency",
        })
    }
}

/// A fitted set of `k - 1` cut points splitting the real line into `k`
/// classes. Class `i` is `[cut[i-1], cut[i])`; the outer classes extend to
/// infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub method: Method,
    pub alphabet_size: usize,
    pub cut_points: Vec<f64>,
    pub clamp_sigma: f64,
}

impl Discretizer {
    /// `data` is the pooled standardized values of every curve; fitting one
    /// discretizer for all curves keeps symbols comparable across curves.
    pub fn fit(method: Method, k: usize, data: &[f64], clamp_sigma: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!(
                "alphabet size must be at least 2, got {k}"
            )));
        }
        if k > MAX_ALPHABET_SIZE {
            return Err(Error::Config(format!(
                "alphabet size {k} exceeds the supported maximum {MAX_ALPHABET_SIZE}"
            )));
        }
        let cut_points = match method {
            Method::EqualWidth => {
                if !(clamp_sigma.is_finite() && clamp_sigma > 0.0) {
                    return Err(Error::Config(format!(
                        "clamp sigma must be positive, got {clamp_sigma}"
                    )));
                }
                let width = 2.0 * clamp_sigma;
                (1..k)
                    .map(|i| -clamp_sigma + width * i as f64 / k as f64)
                    .collect()
            }
            Method::EqualFrequency => equal_frequency_cuts(k, data)?,
        };
        let d = Discretizer {
            method,
            alphabet_size: k,
            cut_points,
            clamp_sigma,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cut_points.len() + 1 != self.alphabet_size {
            return Err(Error::Consistency(format!(
                "{} cut points for {} classes",
                self.cut_points.len(),
                self.alphabet_size
            )));
        }
        if !self.cut_points.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::DegenerateBins(
                "cut points are not strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Class of `v`: the number of cut points at or below it.
    pub fn classify(&self, v: f64) -> Symbol {
        self.cut_points.partition_point(|&c| c <= v) as Symbol
    }

    pub fn discretize_curve(&self, curve: &StandardizedCurve) -> DiscreteSequence {
        DiscreteSequence {
            id: curve.id.clone(),
            symbols: curve.values.iter().map(|&v| self.classify(v)).collect(),
        }
    }
}

fn equal_frequency_cuts(k: usize, data: &[f64]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Validation(
            "equal-frequency fitting needs data".into(),
        ));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::DegenerateBins(format!(
            "{} distinct values cannot fill {k} classes",
            distinct.len()
        )));
    }
    let n = sorted.len();
    Ok((1..k).map(|i| sorted[i * n / k]).collect())
}

/// Renders symbols with `alphabet`; fails if a symbol has no character.
pub fn render(seq: &DiscreteSequence, alphabet: &Alphabet) -> Result<String> {
    alphabet.render(&seq.symbols)
}
