//! All repeated patterns detection over a classified LERP-RSA.
//!
//! Within a sorted class, entries sharing a prefix of length `l` form a
//! contiguous run. Refining a run by the symbol at offset `l` splits it into
//! the runs for length `l + 1`, so one depth-first walk per class visits
//! every repeated prefix with lengths `spl..=lerp` in lexicographic order.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{Alphabet, DiscreteSequence, Symbol};
use crate::error::{Error, Result};
use crate::index::{LerpRsaClass, MultivariateLerpRsa, SeqNo, SuffixEntry};
use crate::parallel::with_workers;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub seq: SeqNo,
    pub pos: u32,
}

impl Occurrence {
    fn by_position(&self) -> (u32, SeqNo) {
        (self.pos, self.seq)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternResult {
    pub pattern: Vec<Symbol>,
    /// Sorted by `(pos, seq)`.
    pub occurrences: Vec<Occurrence>,
}

impl PatternResult {
    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    /// Sorted by pattern.
    pub results: Vec<PatternResult>,
    pub spl: usize,
    pub lerp: usize,
}

impl PatternSet {
    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    pub fn get(&self, pattern: &[Symbol]) -> Option<&PatternResult> {
        self.results
            .binary_search_by(|r| r.pattern.as_slice().cmp(pattern))
            .ok()
            .map(|i| &self.results[i])
    }
}

fn make_result(pattern: &[Symbol], run: &[SuffixEntry]) -> PatternResult {
    let mut occurrences: Vec<Occurrence> = run
        .iter()
        .map(|e| Occurrence {
            seq: e.seq,
            pos: e.pos,
        })
        .collect();
    occurrences.sort_unstable_by_key(Occurrence::by_position);
    PatternResult {
        pattern: pattern.to_vec(),
        occurrences,
    }
}

pub fn detect_class(class: &LerpRsaClass, spl: usize, lerp: usize) -> Result<Vec<PatternResult>> {
    if spl < 1 || lerp < spl {
        return Err(Error::Config(format!("invalid SPL/LERP pair {spl}/{lerp}")));
    }
    if !class.is_sorted() {
        return Err(Error::Consistency(format!(
            "class {} is not sorted by (suffix, pos, seq)",
            class.symbol
        )));
    }
    if let Some(e) = class
        .entries
        .iter()
        .find(|e| e.suffix.first() != Some(&class.symbol))
    {
        return Err(Error::Consistency(format!(
            "entry ({}, {}) does not start with class symbol {}",
            e.seq, e.pos, class.symbol
        )));
    }

    let entries = &class.entries;
    let mut out = Vec::new();
    if entries.len() < 2 {
        return Ok(out);
    }

    // Suffixes copied into one strided buffer so the walk below reads
    // contiguous memory instead of chasing one allocation per entry.
    let stride = lerp;
    let mut flat = vec![0 as Symbol; entries.len() * stride];
    let mut lens = Vec::with_capacity(entries.len());
    for (e, row) in entries.iter().zip(flat.chunks_exact_mut(stride)) {
        let l = e.suffix.len().min(stride);
        row[..l].copy_from_slice(&e.suffix[..l]);
        lens.push(l);
    }
    let at = |i: usize, d: usize| flat[i * stride + d];

    // Each frame is a run of >= 2 entries sharing a prefix of length `depth`.
    // Children are pushed in reverse symbol order so pops are lexicographic.
    let mut stack: Vec<(usize, usize, usize)> = vec![(0, entries.len(), 1)];
    while let Some((lo, hi, depth)) = stack.pop() {
        if depth >= spl {
            out.push(make_result(
                &flat[lo * stride..lo * stride + depth],
                &entries[lo..hi],
            ));
        }
        if depth == lerp {
            continue;
        }
        // Entries whose suffix ends at `depth` sort first within the run.
        let mut i = lo + lens[lo..hi].partition_point(|&l| l <= depth);
        let base = stack.len();
        while i < hi {
            let sym = at(i, depth);
            let mut j = i + 1;
            while j < hi && at(j, depth) == sym {
                j += 1;
            }
            if j - i >= 2 {
                stack.push((i, j, depth + 1));
            }
            i = j;
        }
        stack[base..].reverse();
    }
    Ok(out)
}

pub fn detect_all(index: &MultivariateLerpRsa, workers: usize) -> Result<PatternSet> {
    let per_class = with_workers(workers, || {
        index
            .classes
            .par_iter()
            .map(|c| detect_class(c, index.spl, index.lerp))
            .collect::<Result<Vec<_>>>()
    })?;
    let results: Vec<PatternResult> = per_class.into_iter().flatten().collect();
    debug_assert!(results.windows(2).all(|w| w[0].pattern < w[1].pattern));
    Ok(PatternSet {
        results,
        spl: index.spl,
        lerp: index.lerp,
    })
}

/// Brute-force reference: enumerate every substring with length in
/// `spl..=lerp` and keep those occurring at least twice.
pub fn oracle_detect(sequences: &[DiscreteSequence], spl: usize, lerp: usize) -> PatternSet {
    let mut seen: HashMap<&[Symbol], Vec<Occurrence>> = HashMap::new();
    for (i, s) in sequences.iter().enumerate() {
        let n = s.symbols.len();
        for pos in 0..n {
            for len in spl..=lerp.min(n - pos) {
                seen.entry(&s.symbols[pos..pos + len])
                    .or_default()
                    .push(Occurrence {
                        seq: (i + 1) as SeqNo,
                        pos: pos as u32,
                    });
            }
        }
    }
    let mut results: Vec<PatternResult> = seen
        .into_iter()
        .filter(|(_, occ)| occ.len() >= 2)
        .map(|(p, mut occurrences)| {
            occurrences.sort_unstable_by_key(Occurrence::by_position);
            PatternResult {
                pattern: p.to_vec(),
                occurrences,
            }
        })
        .collect();
    results.sort_unstable_by(|a, b| a.pattern.cmp(&b.pattern));
    PatternSet { results, spl, lerp }
}

// ---- pattern dump ---------------------------------------------------------

/// One `pattern<TAB>seq<TAB>pos` line per occurrence, grouped by pattern.
pub fn render_patterns(set: &PatternSet, alphabet: &Alphabet) -> Result<String> {
    let mut out = String::new();
    for r in &set.results {
        let p = alphabet.render(&r.pattern)?;
        for o in &r.occurrences {
            out.push_str(&format!("{p}\t{}\t{}\n", o.seq, o.pos));
        }
    }
    Ok(out)
}

pub fn write_patterns(set: &PatternSet, alphabet: &Alphabet, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in &set.results {
        let p = alphabet.render(&r.pattern)?;
        for o in &r.occurrences {
            writeln!(w, "{p}\t{}\t{}", o.seq, o.pos).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a pattern dump. `spl` and `lerp` are not stored in the dump and
/// must be supplied (typically from the index manifest).
pub fn read_patterns(
    path: &Path,
    alphabet: &Alphabet,
    spl: usize,
    lerp: usize,
) -> Result<PatternSet> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut results: Vec<PatternResult> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split('\t').collect();
        let [p, seq, pos] = fields[..] else {
            return Err(Error::corrupt(
                path,
                lineno,
                "expected 3 tab-separated fields",
            ));
        };
        let pattern = alphabet
            .parse(p)
            .map_err(|e| Error::corrupt(path, lineno, e.to_string()))?;
        let occ = Occurrence {
            seq: seq.parse().map_err(|_| {
                Error::corrupt(path, lineno, format!("bad sequence number '{seq}'"))
            })?,
            pos: pos
                .parse()
                .map_err(|_| Error::corrupt(path, lineno, format!("bad position '{pos}'")))?,
        };
        match results.last_mut() {
            Some(last) if last.pattern == pattern => {
                if last.occurrences.last().map(Occurrence::by_position) >= Some(occ.by_position()) {
                    return Err(Error::corrupt(path, lineno, "occurrences out of order"));
                }
                last.occurrences.push(occ);
            }
            last => {
                if last.is_some_and(|l| l.pattern >= pattern) {
                    return Err(Error::corrupt(path, lineno, "pattern groups out of order"));
                }
                results.push(PatternResult {
                    pattern,
                    occurrences: vec![occ],
                });
            }
        }
    }
    Ok(PatternSet { results, spl, lerp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build;
    use proptest::prelude::*;

    fn seqs(abc: &Alphabet, texts: &[&str]) -> Vec<DiscreteSequence> {
        texts
            .iter()
            .enumerate()
            .map(|(i, s)| DiscreteSequence::new((i + 1).to_string(), abc.parse(s).unwrap()))
            .collect()
    }

    fn occ(pairs: &[(u32, u32)]) -> Vec<Occurrence> {
        pairs
            .iter()
            .map(|&(seq, pos)| Occurrence { seq, pos })
            .collect()
    }

    fn worked() -> (MultivariateLerpRsa, Alphabet, Vec<DiscreteSequence>) {
        let abc = Alphabet::new("abcd").unwrap();
        let s = seqs(&abc, &["abcdcbabcd", "abcbdbabcd", "cbcdbaabcb"]);
        (build(&s, 4, 2, 5, 1).unwrap(), abc, s)
    }

    #[test]
    fn class_a_patterns() {
        let (index, abc, _) = worked();
        let found = detect_class(&index.classes[0], 2, 5).unwrap();
        let got: Vec<(String, Vec<Occurrence>)> = found
            .into_iter()
            .map(|r| (abc.render(&r.pattern).unwrap(), r.occurrences))
            .collect();
        assert_eq!(
            got,
            vec![
                ("ab".into(), occ(&[(1, 0), (2, 0), (1, 6), (2, 6), (3, 6)])),
                ("abc".into(), occ(&[(1, 0), (2, 0), (1, 6), (2, 6), (3, 6)])),
                ("abcb".into(), occ(&[(2, 0), (3, 6)])),
                ("abcd".into(), occ(&[(1, 0), (1, 6), (2, 6)])),
            ]
        );
    }

    #[test]
    fn class_d_patterns() {
        let (index, abc, _) = worked();
        let found = detect_class(&index.classes[3], 2, 5).unwrap();
        assert_eq!(abc.render(&found[0].pattern).unwrap(), "db");
        assert_eq!(found[0].occurrences, occ(&[(3, 3), (2, 4)]));
        // "dbaab" and "dbabc" also share "dba".
        assert_eq!(found.len(), 2);
        assert_eq!(abc.render(&found[1].pattern).unwrap(), "dba");
        assert_eq!(found[1].occurrences, occ(&[(3, 3), (2, 4)]));
    }

    #[test]
    fn worked_example_all() {
        let (index, abc, s) = worked();
        let set = detect_all(&index, 2).unwrap();
        let names: Vec<String> = set
            .results
            .iter()
            .map(|r| abc.render(&r.pattern).unwrap())
            .collect();
        // Brute force also finds "bcb" at (2,1),(3,7) and "dba" at (3,3),(2,4).
        assert_eq!(
            names,
            [
                "ab", "abc", "abcb", "abcd", "ba", "bab", "babc", "babcd", "bc", "bcb", "bcd",
                "cb", "cd", "db", "dba"
            ]
        );
        let bcb = set.get(&abc.parse("bcb").unwrap()).unwrap();
        assert_eq!(bcb.occurrences, occ(&[(2, 1), (3, 7)]));
        let babcd = set.get(&abc.parse("babcd").unwrap()).unwrap();
        assert_eq!(babcd.occurrences, occ(&[(1, 5), (2, 5)]));
        assert_eq!(set, oracle_detect(&s, 2, 5));
    }

    #[test]
    fn overlapping_self_repeat() {
        let abc = Alphabet::new("ab").unwrap();
        let s = seqs(&abc, &["aaa"]);
        let set = detect_all(&build(&s, 2, 2, 5, 1).unwrap(), 1).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.results[0].pattern, vec![0, 0]);
        assert_eq!(set.results[0].occurrences, occ(&[(1, 0), (1, 1)]));
    }

    #[test]
    fn single_symbol_mode() {
        let abc = Alphabet::new("abc").unwrap();
        let s = seqs(&abc, &["abca", "cbba"]);
        let set = detect_all(&build(&s, 3, 1, 1, 1).unwrap(), 1).unwrap();
        let got: Vec<_> = set
            .results
            .iter()
            .map(|r| (r.pattern.clone(), r.occurrences.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![0], occ(&[(1, 0), (1, 3), (2, 3)])),
                (vec![1], occ(&[(1, 1), (2, 1), (2, 2)])),
                (vec![2], occ(&[(2, 0), (1, 2)])),
            ]
        );
    }

    #[test]
    fn oracle_small_cases() {
        let abc = Alphabet::new("abcd").unwrap();
        assert!(oracle_detect(&seqs(&abc, &["ab", "cd"]), 2, 2).is_empty());
        let set = oracle_detect(&seqs(&abc, &["ab", "ab"]), 2, 5);
        assert_eq!(set.len(), 1);
        assert_eq!(set.results[0].occurrences, occ(&[(1, 0), (2, 0)]));
    }

    #[test]
    fn unsorted_class_is_rejected() {
        let (index, _, _) = worked();
        let mut class = index.classes[1].clone();
        class.entries.swap(0, 1);
        assert!(matches!(
            detect_class(&class, 2, 5),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn dump_round_trip() {
        let (index, abc, _) = worked();
        let set = detect_all(&index, 1).unwrap();
        let text = render_patterns(&set, &abc).unwrap();
        assert!(text.starts_with("ab\t1\t0\nab\t2\t0\nab\t1\t6\n"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patterns.tsv");
        write_patterns(&set, &abc, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
        assert_eq!(read_patterns(&path, &abc, 2, 5).unwrap(), set);
        fs::write(&path, "ba\t1\t5\nab\t1\t0\n").unwrap();
        assert!(matches!(
            read_patterns(&path, &abc, 2, 5),
            Err(Error::CorruptFile { line: 2, .. })
        ));
    }

    fn instance() -> impl Strategy<Value = (Vec<DiscreteSequence>, usize, usize, usize)> {
        (2usize..=4, 1usize..=3).prop_flat_map(|(k, spl)| {
            (
                prop::collection::vec(prop::collection::vec(0..k as u8, spl.max(2)..=64), 1..=5),
                Just(k),
                Just(spl),
                spl..=8,
            )
                .prop_map(|(raw, k, spl, lerp)| {
                    let seqs = raw
                        .into_iter()
                        .enumerate()
                        .map(|(i, s)| DiscreteSequence::new(format!("s{i}"), s))
                        .collect();
                    (seqs, k, spl, lerp)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pattern_invariants((seqs, k, spl, lerp) in instance()) {
            let set = detect_all(&build(&seqs, k, spl, lerp, 1).unwrap(), 1).unwrap();
            for r in &set.results {
                prop_assert!(r.len() >= spl && r.len() <= lerp);
                prop_assert!(r.occurrences.len() >= 2);
                prop_assert!(r.occurrences.windows(2).all(|w| w[0].by_position() < w[1].by_position()));
                for o in &r.occurrences {
                    let src = &seqs[o.seq as usize - 1].symbols;
                    let p = o.pos as usize;
                    prop_assert_eq!(&src[p..p + r.len()], &r.pattern[..]);
                }
                if r.len() > spl {
                    let parent = set.get(&r.pattern[..r.len() - 1]).expect("prefix reported");
                    prop_assert!(r.occurrences.iter().all(|o| parent.occurrences.contains(o)));
                }
            }
        }
    }
}
