//! Multivariate LERP-reduced suffix array, classified by first symbol.
//!
//! Every suffix of length at least `spl` is stored truncated to `lerp`
//! symbols together with its sequence number (1-based) and start position
//! (0-based). Entries are bucketed by first symbol in one pass; each class
//! is then sorted independently by `(suffix, pos, seq)`.

use std::cmp::Ordering;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Alphabet, DiscreteSequence, Symbol};
use crate::error::{Error, Result};
use crate::parallel::with_workers;

/// 1-based sequence number.
pub type SeqNo = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixEntry {
    pub seq: SeqNo,
    pub pos: u32,
    pub suffix: Box<[Symbol]>,
}

impl SuffixEntry {
    pub fn sort_cmp(&self, other: &Self) -> Ordering {
        self.suffix
            .cmp(&other.suffix)
            .then(self.pos.cmp(&other.pos))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Big-endian packing of up to eight leading symbols, zero padded. Padding
/// keeps the key monotone: a proper prefix never gets a larger key.
fn prefix_key(suffix: &[Symbol]) -> u64 {
    let mut buf = [0u8; 8];
    let n = suffix.len().min(8);
    buf[..n].copy_from_slice(&suffix[..n]);
    u64::from_be_bytes(buf)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LerpRsaClass {
    pub symbol: Symbol,
    pub entries: Vec<SuffixEntry>,
}

impl LerpRsaClass {
    pub fn new(symbol: Symbol) -> Self {
        LerpRsaClass {
            symbol,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts by `(suffix, pos, seq)`. The first eight symbols are packed
    /// into an inline key so most comparisons avoid touching the suffix.
    pub fn sort(&mut self) {
        let mut keyed: Vec<(u64, SuffixEntry)> = self
            .entries
            .drain(..)
            .map(|e| (prefix_key(&e.suffix), e))
            .collect();
        keyed.sort_unstable_by(|(ka, a), (kb, b)| ka.cmp(kb).then_with(|| a.sort_cmp(b)));
        self.entries = keyed.into_iter().map(|(_, e)| e).collect();
    }

    pub fn is_sorted(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].sort_cmp(&w[1]) == Ordering::Less)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceInfo {
    pub id: String,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultivariateLerpRsa {
    /// One class per alphabet symbol, in symbol order; some may be empty.
    pub classes: Vec<LerpRsaClass>,
    pub spl: usize,
    pub lerp: usize,
    pub sequences: Vec<SequenceInfo>,
}

impl MultivariateLerpRsa {
    pub fn total_entries(&self) -> usize {
        self.classes.iter().map(LerpRsaClass::len).sum()
    }

    pub fn alphabet_size(&self) -> usize {
        self.classes.len()
    }

    /// All entries in global sort order.
    pub fn iter(&self) -> impl Iterator<Item = &SuffixEntry> {
        self.classes.iter().flat_map(|c| c.entries.iter())
    }

    pub fn class(&self, symbol: Symbol) -> Option<&LerpRsaClass> {
        self.classes.get(symbol as usize)
    }
}

/// Stand-in for the longest expected repeated pattern length: the smallest
/// `L` with `alphabet_size^L >= total_length^2`, i.e.
/// `ceil(2 * log_alphabet(total_length))`, never below 2.
///
/// This is a heuristic default, not a derived bound; callers with a better
/// estimate should pass `lerp` explicitly.
pub fn default_lerp(total_length: usize, alphabet_size: usize) -> usize {
    let target = (total_length as u128).saturating_mul(total_length as u128);
    let base = alphabet_size.max(2) as u128;
    let mut power: u128 = 1;
    let mut l = 0;
    while power < target {
        power = power.saturating_mul(base);
        l += 1;
    }
    l.max(2)
}

pub fn build(
    sequences: &[DiscreteSequence],
    alphabet_size: usize,
    spl: usize,
    lerp: usize,
    workers: usize,
) -> Result<MultivariateLerpRsa> {
    if spl < 1 {
        return Err(Error::Config("SPL must be at least 1".into()));
    }
    if lerp < spl {
        return Err(Error::Config(format!(
            "LERP ({lerp}) must be at least SPL ({spl})"
        )));
    }
    if !(1..=crate::dataset::MAX_ALPHABET_SIZE).contains(&alphabet_size) {
        return Err(Error::Config(format!(
            "unsupported alphabet size {alphabet_size}"
        )));
    }
    if sequences.len() > SeqNo::MAX as usize {
        return Err(Error::Validation("too many sequences".into()));
    }
    for s in sequences {
        if s.len() < spl {
            return Err(Error::Validation(format!(
                "sequence '{}' has length {} which is shorter than SPL {spl}",
                s.id,
                s.len()
            )));
        }
        if s.len() > u32::MAX as usize {
            return Err(Error::Validation(format!(
                "sequence '{}' is too long",
                s.id
            )));
        }
        if let Some(&bad) = s.symbols.iter().find(|&&c| c as usize >= alphabet_size) {
            return Err(Error::Validation(format!(
                "sequence '{}' has symbol {bad} outside alphabet of size {alphabet_size}",
                s.id
            )));
        }
    }

    let mut classes: Vec<LerpRsaClass> = (0..alphabet_size)
        .map(|c| LerpRsaClass::new(c as Symbol))
        .collect();
    for (i, s) in sequences.iter().enumerate() {
        let seq = (i + 1) as SeqNo;
        let n = s.len();
        for pos in 0..=n - spl {
            let end = (pos + lerp).min(n);
            classes[s.symbols[pos] as usize].entries.push(SuffixEntry {
                seq,
                pos: pos as u32,
                suffix: s.symbols[pos..end].into(),
            });
        }
    }

    with_workers(workers, || {
        classes.par_iter_mut().for_each(LerpRsaClass::sort)
    });

    Ok(MultivariateLerpRsa {
        classes,
        spl,
        lerp,
        sequences: sequences
            .iter()
            .map(|s| SequenceInfo {
                id: s.id.clone(),
                length: s.len(),
            })
            .collect(),
    })
}

// ---- persistence ----------------------------------------------------------

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn class_file_name(symbol: Symbol) -> String {
    format!("class_{symbol:03}.tsv")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub symbol: String,
    pub file: String,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub spl: usize,
    pub lerp: usize,
    pub alphabet: Alphabet,
    pub sequences: Vec<SequenceInfo>,
    pub classes: Vec<ClassInfo>,
}

/// Writes one class as `seq<TAB>pos<TAB>suffix` lines in sorted order.
pub fn persist_class(class: &LerpRsaClass, dir: &Path, alphabet: &Alphabet) -> Result<PathBuf> {
    let path = dir.join(class_file_name(class.symbol));
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let mut line = String::new();
    for e in &class.entries {
        line.clear();
        line.push_str(&format!("{}\t{}\t", e.seq, e.pos));
        line.push_str(&alphabet.render(&e.suffix)?);
        line.push('\n');
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_class(dir: &Path, symbol: Symbol, alphabet: &Alphabet) -> Result<LerpRsaClass> {
    let path = dir.join(class_file_name(symbol));
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut class = LerpRsaClass::new(symbol);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(&path, e))?;
        let mut parts = line.split('\t');
        let (Some(seq), Some(pos), Some(suffix), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::corrupt(
                &path,
                lineno,
                "expected 3 tab-separated fields",
            ));
        };
        let seq: SeqNo = seq
            .parse()
            .map_err(|_| Error::corrupt(&path, lineno, format!("bad sequence number '{seq}'")))?;
        let pos: u32 = pos
            .parse()
            .map_err(|_| Error::corrupt(&path, lineno, format!("bad position '{pos}'")))?;
        let suffix = alphabet
            .parse(suffix)
            .map_err(|e| Error::corrupt(&path, lineno, e.to_string()))?;
        if suffix[0] != symbol {
            return Err(Error::corrupt(
                &path,
                lineno,
                "suffix does not belong to this class",
            ));
        }
        class.entries.push(SuffixEntry {
            seq,
            pos,
            suffix: suffix.into(),
        });
    }
    if !class.is_sorted() {
        return Err(Error::corrupt(&path, 0, "entries are not in sorted order"));
    }
    Ok(class)
}

/// Persists the manifest and every class (empty classes become empty
/// files). Classes are written in parallel.
pub fn persist(
    index: &MultivariateLerpRsa,
    dir: &Path,
    alphabet: &Alphabet,
    workers: usize,
) -> Result<()> {
    if alphabet.len() != index.alphabet_size() {
        return Err(Error::Config(format!(
            "alphabet has {} characters but index has {} classes",
            alphabet.len(),
            index.alphabet_size()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    with_workers(workers, || {
        index
            .classes
            .par_iter()
            .map(|c| persist_class(c, dir, alphabet).map(|_| ()))
            .collect::<Result<()>>()
    })?;
    let manifest = IndexManifest {
        spl: index.spl,
        lerp: index.lerp,
        alphabet: alphabet.clone(),
        sequences: index.sequences.clone(),
        classes: index
            .classes
            .iter()
            .map(|c| ClassInfo {
                symbol: alphabet
                    .char_of(c.symbol)
                    .map(String::from)
                    .unwrap_or_default(),
                file: class_file_name(c.symbol),
                entries: c.len(),
            })
            .collect(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_manifest(dir: &Path) -> Result<IndexManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::corrupt(&path, e.line(), e.to_string()))
}

pub fn load(dir: &Path, workers: usize) -> Result<(MultivariateLerpRsa, Alphabet)> {
    let manifest = load_manifest(dir)?;
    let alphabet = manifest.alphabet.clone();
    let classes = with_workers(workers, || {
        (0..alphabet.len())
            .into_par_iter()
            .map(|s| load_class(dir, s as Symbol, &alphabet))
            .collect::<Result<Vec<_>>>()
    })?;
    for (c, info) in classes.iter().zip(&manifest.classes) {
        if c.len() != info.entries {
            return Err(Error::corrupt(
                dir.join(&info.file),
                0,
                format!(
                    "manifest lists {} entries, file has {}",
                    info.entries,
                    c.len()
                ),
            ));
        }
    }
    Ok((
        MultivariateLerpRsa {
            classes,
            spl: manifest.spl,
            lerp: manifest.lerp,
            sequences: manifest.sequences,
        },
        alphabet,
    ))
}
