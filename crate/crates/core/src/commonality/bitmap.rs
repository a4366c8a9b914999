use std::fmt;
use std::ops::Range;

const WORD: usize = 64;

/// Fixed-length bit array backed by `u64` words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn zeros(len: usize) -> Self {
        Bitmap {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    /// Calls `f(word_index, mask)` for every word overlapping `range`.
    fn for_masks(range: &Range<usize>, mut f: impl FnMut(usize, u64)) {
        if range.start >= range.end {
            return;
        }
        let (first, last) = (range.start / WORD, (range.end - 1) / WORD);
        for w in first..=last {
            let lo = if w == first { range.start % WORD } else { 0 };
            let hi = if w == last {
                (range.end - 1) % WORD + 1
            } else {
                WORD
            };
            let mask = if hi - lo == WORD {
                u64::MAX
            } else {
                ((1u64 << (hi - lo)) - 1) << lo
            };
            f(w, mask);
        }
    }

    /// Number of zero bits inside `range`.
    pub fn count_zeros_in(&self, range: Range<usize>) -> usize {
        assert!(range.end <= self.len);
        let mut n = 0;
        Self::for_masks(&range, |w, m| {
            n += (!self.words[w] & m).count_ones() as usize
        });
        n
    }

    pub fn count_ones_in(&self, range: Range<usize>) -> usize {
        assert!(range.end <= self.len);
        let mut n = 0;
        Self::for_masks(&range, |w, m| {
            n += (self.words[w] & m).count_ones() as usize
        });
        n
    }

    /// Sets every bit in `range`, returning how many were previously zero.
    pub fn set_range(&mut self, range: Range<usize>) -> usize {
        assert!(range.end <= self.len);
        let mut newly = 0;
        let words = &mut self.words;
        Self::for_masks(&range, |w, m| {
            newly += (!words[w] & m).count_ones() as usize;
            words[w] |= m;
        });
        newly
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn or_assign(&mut self, other: &Bitmap) {
        assert_eq!(self.len, other.len, "bitmap length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_superset_of(&self, other: &Bitmap) -> bool {
        self.len == other.len
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & b == *b)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// Renders as a `0`/`1` string, position 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bit_string(s: &str) -> Option<Self> {
        let mut b = Bitmap::zeros(s.len());
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'1' => b.set(i),
                b'0' => {}
                _ => return None,
            }
        }
        Some(b)
    }
}

impl fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitmap({})", self.to_bit_string())
    }
}
