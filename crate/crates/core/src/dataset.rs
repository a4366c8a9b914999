//! Curve sets and discrete sequences, plus their on-disk formats.
//!
//! Curves arrive as CSV (wide or long) or JSON. Discrete sequences use a
//! plain-text format with one `id<TAB>symbols` record per line.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a symbol in the alphabet.
pub type Symbol = u8;

/// Largest alphabet a [`Symbol`] can address.
pub const MAX_ALPHABET_SIZE: usize = Symbol::MAX as usize + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub id: String,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let curve = Curve {
            id: id.into(),
            values,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::Validation(format!(
                "curve '{}' has {} value(s), at least 2 required",
                self.id,
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "curve '{}' has non-finite value {} at index {i}",
                self.id, self.values[i]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    curves: Vec<Curve>,
    expected_length: Option<usize>,
}

impl CurveSet {
    pub fn new(curves: Vec<Curve>, expected_length: Option<usize>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Validation("no curves".into()));
        }
        let mut seen = HashSet::with_capacity(curves.len());
        for c in &curves {
            c.validate()?;
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Validation(format!("duplicate curve id '{}'", c.id)));
            }
        }
        if let Some(len) = expected_length {
            if len < 2 {
                return Err(Error::Config(format!(
                    "expected length must be at least 2, got {len}"
                )));
            }
        }
        Ok(CurveSet {
            curves,
            expected_length,
        })
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn into_curves(self) -> Vec<Curve> {
        self.curves
    }

    pub fn expected_length(&self) -> Option<usize> {
        self.expected_length
    }

    pub fn with_expected_length(self, expected_length: Option<usize>) -> Result<Self> {
        CurveSet::new(self.curves, expected_length)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveFormat {
    CsvWide,
    CsvLong,
    Json,
}

impl FromStr for CurveFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv-wide" | "csv_wide" | "csv" => Ok(CurveFormat::CsvWide),
            "csv-long" | "csv_long" => Ok(CurveFormat::CsvLong),
            "json" => Ok(CurveFormat::Json),
            other => Err(Error::Config(format!("unknown curve format '{other}'"))),
        }
    }
}

impl fmt::Display for CurveFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveFormat::CsvWide => "csv-wide",
            CurveFormat::CsvLong => "csv-long",
            CurveFormat::Json => "json",
        })
    }
}

pub fn load_curves(path: impl AsRef<Path>, format: CurveFormat) -> Result<CurveSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curves(&text, format, &path.display().to_string())
}

pub fn write_curves(set: &CurveSet, path: impl AsRef<Path>, format: CurveFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_curves(set, format)).map_err(|e| Error::io(path, e))
}

/// Parses curves from text. `source_name` is used in error messages.
pub fn parse_curves(text: &str, format: CurveFormat, source_name: &str) -> Result<CurveSet> {
    let curves = match format {
        CurveFormat::CsvWide => parse_wide(text, source_name)?,
        CurveFormat::CsvLong => parse_long(text, source_name)?,
        CurveFormat::Json => {
            if text.trim().is_empty() {
                Vec::new()
            } else {
                serde_json::from_str::<Vec<Curve>>(text).map_err(|e| Error::Parse {
                    source_name: source_name.to_owned(),
                    line: e.line(),
                    message: e.to_string(),
                })?
            }
        }
    };
    CurveSet::new(curves, None)
}

pub fn render_curves(set: &CurveSet, format: CurveFormat) -> String {
    let mut out = String::new();
    match format {
        CurveFormat::CsvWide => {
            for c in set.curves() {
                out.push_str(&csv_field(&c.id));
                for v in &c.values {
                    out.push(',');
                    out.push_str(&v.to_string());
                }
                out.push('\n');
            }
        }
        CurveFormat::CsvLong => {
            out.push_str("id,index,value\n");
            for c in set.curves() {
                let id = csv_field(&c.id);
                for (i, v) in c.values.iter().enumerate() {
                    out.push_str(&format!("{id},{i},{v}\n"));
                }
            }
        }
        CurveFormat::Json => {
            out = serde_json::to_string_pretty(set.curves()).expect("curves serialize");
            out.push('\n');
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn parse_value(field: &str, source_name: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        source_name: source_name.to_owned(),
        line,
        message: format!("cannot parse '{field}' as a number"),
    })
}

fn csv_error(e: csv::Error, source_name: &str) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        source_name: source_name.to_owned(),
        line,
        message: e.to_string(),
    }
}

fn parse_wide(text: &str, source_name: &str) -> Result<Vec<Curve>> {
    let mut curves = Vec::new();
    for record in csv_reader(text).records() {
        let record = record.map_err(|e| csv_error(e, source_name))?;
        let line = record_line(&record);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let id = record.get(0).unwrap_or_default();
        if id.is_empty() {
            return Err(Error::Parse {
                source_name: source_name.to_owned(),
                line,
                message: "missing curve id".into(),
            });
        }
        let values = record
            .iter()
            .skip(1)
            .map(|f| parse_value(f, source_name, line))
            .collect::<Result<Vec<_>>>()?;
        curves.push(Curve {
            id: id.to_owned(),
            values,
        });
    }
    Ok(curves)
}

fn parse_long(text: &str, source_name: &str) -> Result<Vec<Curve>> {
    // Curves keep the order of their first appearance.
    let mut curves: Vec<Curve> = Vec::new();
    let mut last_index: Vec<u64> = Vec::new();
    let mut slot: std::collections::HashMap<String, usize> = Default::default();

    for (n, record) in csv_reader(text).records().enumerate() {
        let record = record.map_err(|e| csv_error(e, source_name))?;
        let line = record_line(&record);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if n == 0 && record.get(1) == Some("index") {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Parse {
                source_name: source_name.to_owned(),
                line,
                message: format!(
                    "expected 3 columns (id,index,value), found {}",
                    record.len()
                ),
            });
        }
        let id = &record[0];
        let index: u64 = record[1].parse().map_err(|_| Error::Parse {
            source_name: source_name.to_owned(),
            line,
            message: format!("cannot parse '{}' as an index", &record[1]),
        })?;
        let value = parse_value(&record[2], source_name, line)?;

        let k = *slot.entry(id.to_owned()).or_insert_with(|| {
            curves.push(Curve {
                id: id.to_owned(),
                values: Vec::new(),
            });
            last_index.push(0);
            curves.len() - 1
        });
        if !curves[k].values.is_empty() && index <= last_index[k] {
            return Err(Error::Parse {
                source_name: source_name.to_owned(),
                line,
                message: format!(
                    "index {index} for curve '{id}' is not greater than previous index {}",
                    last_index[k]
                ),
            });
        }
        last_index[k] = index;
        curves[k].values.push(value);
    }
    Ok(curves)
}

/// Ordered set of distinct characters used to spell symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet {
    chars: Vec<char>,
}

/// Lowercase Latin, then uppercase Latin, then digits.
pub const DEFAULT_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

impl Alphabet {
    pub fn new(chars: &str) -> Result<Self> {
        let chars: Vec<char> = chars.chars().collect();
        if chars.len() < 2 {
            return Err(Error::Config("alphabet needs at least 2 characters".into()));
        }
        if chars.len() > MAX_ALPHABET_SIZE {
            return Err(Error::Config(format!(
                "alphabet has {} characters, at most {MAX_ALPHABET_SIZE} supported",
                chars.len()
            )));
        }
        let mut seen = HashSet::new();
        for &c in &chars {
            if c == '\t' || c == '\n' || c == '\r' {
                return Err(Error::Config(
                    "alphabet may not contain whitespace control characters".into(),
                ));
            }
            if !seen.insert(c) {
                return Err(Error::Config(format!("alphabet repeats character '{c}'")));
            }
        }
        Ok(Alphabet { chars })
    }

    /// The first `size` characters of [`DEFAULT_ALPHABET`].
    pub fn default_for(size: usize) -> Result<Self> {
        let n = DEFAULT_ALPHABET.chars().count();
        if size > n {
            return Err(Error::Config(format!(
                "alphabet size {size} exceeds the {n}-character default alphabet"
            )));
        }
        Alphabet::new(&DEFAULT_ALPHABET[..size])
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn char_of(&self, symbol: Symbol) -> Option<char> {
        self.chars.get(symbol as usize).copied()
    }

    pub fn symbol_of(&self, c: char) -> Option<Symbol> {
        self.chars.iter().position(|&x| x == c).map(|i| i as Symbol)
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }

    /// Maps text onto symbol indices. Positions in errors are 0-based.
    pub fn parse(&self, text: &str) -> Result<Vec<Symbol>> {
        if text.is_empty() {
            return Err(Error::Validation("empty sequence".into()));
        }
        text.chars()
            .enumerate()
            .map(|(i, c)| {
                self.symbol_of(c).ok_or_else(|| {
                    Error::Validation(format!("unknown symbol '{c}' at position {i}"))
                })
            })
            .collect()
    }

    pub fn render(&self, symbols: &[Symbol]) -> Result<String> {
        symbols
            .iter()
            .map(|&s| {
                self.char_of(s).ok_or_else(|| {
                    Error::Config(format!(
                        "symbol index {s} exceeds alphabet of size {}",
                        self.len()
                    ))
                })
            })
            .collect()
    }
}

impl TryFrom<String> for Alphabet {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Alphabet::new(&s)
    }
}

impl From<Alphabet> for String {
    fn from(a: Alphabet) -> String {
        a.as_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteSequence {
    pub id: String,
    pub symbols: Vec<Symbol>,
}

impl DiscreteSequence {
    pub fn new(id: impl Into<String>, symbols: Vec<Symbol>) -> Self {
        DiscreteSequence {
            id: id.into(),
            symbols,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Parses `id<TAB>symbols` lines. A line without a tab is taken as the
/// symbols alone and gets its 1-based record number as id. Blank lines are skipped.
pub fn parse_discrete(
    text: &str,
    alphabet: &Alphabet,
    source_name: &str,
) -> Result<Vec<DiscreteSequence>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = match line.split_once('\t') {
            Some((id, body)) => (id.to_owned(), body),
            None => ((out.len() + 1).to_string(), line),
        };
        let symbols = alphabet.parse(body).map_err(|e| Error::Parse {
            source_name: source_name.to_owned(),
            line: lineno + 1,
            message: match e {
                Error::Validation(m) => m,
                other => other.to_string(),
            },
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::Validation(format!("duplicate sequence id '{id}'")));
        }
        out.push(DiscreteSequence { id, symbols });
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("{source_name}: no sequences")));
    }
    Ok(out)
}

pub fn load_discrete(path: impl AsRef<Path>, alphabet: &Alphabet) -> Result<Vec<DiscreteSequence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_discrete(&text, alphabet, &path.display().to_string())
}

pub fn render_discrete(seqs: &[DiscreteSequence], alphabet: &Alphabet) -> Result<String> {
    let mut out = String::new();
    for s in seqs {
        out.push_str(&s.id);
        out.push('\t');
        out.push_str(&alphabet.render(&s.symbols)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_discrete(
    seqs: &[DiscreteSequence],
    alphabet: &Alphabet,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = render_discrete(seqs, alphabet)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
