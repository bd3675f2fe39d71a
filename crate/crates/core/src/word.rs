//! Words: elementary tensors of basis letters.
//!
//! A word is stored run-length encoded. Fock-space computations here are
//! dominated by words made mostly of the distinguished letter (`e^a f e^b`
//! and friends), and removing one letter from a run only touches that run.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Index of a vector in the orthonormal basis `(e_i)` of the one-particle
/// space. Letter `0` is the distinguished vector `e`.
pub type Letter = u8;

/// The distinguished letter `e = e_0`.
pub const E: Letter = 0;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    runs: SmallVec<[(Letter, u32); 4]>,
    len: usize,
}

impl Word {
    /// The empty word, i.e. the vacuum.
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut w = Word::empty();
        for &a in letters {
            w.push_back(a, 1);
        }
        w
    }

    /// `letter^{⊗count}`.
    pub fn power(letter: Letter, count: usize) -> Self {
        let mut w = Word::empty();
        w.push_back(letter, count as u32);
        w
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Maximal runs `(letter, length)` from left to right.
    pub fn runs(&self) -> &[(Letter, u32)] {
        &self.runs
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.runs
            .iter()
            .flat_map(|&(a, n)| std::iter::repeat(a).take(n as usize))
    }

    pub fn to_letters(&self) -> Vec<Letter> {
        self.letters().collect()
    }

    pub fn max_letter(&self) -> Option<Letter> {
        self.runs.iter().map(|&(a, _)| a).max()
    }

    /// True for `letter^{⊗n}`, including the empty word.
    pub fn is_power_of(&self, letter: Letter) -> bool {
        self.runs.iter().all(|&(a, _)| a == letter)
    }

    pub fn first(&self) -> Option<Letter> {
        self.runs.first().map(|&(a, _)| a)
    }

    pub fn count_of(&self, letter: Letter) -> usize {
        self.runs
            .iter()
            .filter(|&&(a, _)| a == letter)
            .map(|&(_, n)| n as usize)
            .sum()
    }

    fn push_back(&mut self, letter: Letter, count: u32) {
        if count == 0 {
            return;
        }
        match self.runs.last_mut() {
            Some((a, n)) if *a == letter => *n += count,
            _ => self.runs.push((letter, count)),
        }
        self.len += count as usize;
    }

    /// `letter ⊗ self`.
    pub fn prepend(&self, letter: Letter) -> Word {
        let mut out = Word::empty();
        out.push_back(letter, 1);
        for &(a, n) in &self.runs {
            out.push_back(a, n);
        }
        out
    }

    /// `self ⊗ letter`.
    pub fn append(&self, letter: Letter) -> Word {
        let mut out = self.clone();
        out.push_back(letter, 1);
        out
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.clone();
        for &(a, n) in &other.runs {
            out.push_back(a, n);
        }
        out
    }

    pub fn reversed(&self) -> Word {
        let mut out = Word::empty();
        for &(a, n) in self.runs.iter().rev() {
            out.push_back(a, n);
        }
        out
    }

    /// Copy of `self` with one letter removed from run `run`.
    pub fn remove_from_run(&self, run: usize) -> Word {
        let mut out = Word::empty();
        for (i, &(a, n)) in self.runs.iter().enumerate() {
            out.push_back(a, if i == run { n - 1 } else { n });
        }
        out
    }

    /// Runs as `(run index, letter, start position, length)`.
    pub fn run_positions(&self) -> impl Iterator<Item = (usize, Letter, usize, usize)> + '_ {
        let mut start = 0;
        self.runs.iter().enumerate().map(move |(i, &(a, n))| {
            let s = start;
            start += n as usize;
            (i, a, s, n as usize)
        })
    }

    /// Position among the `d^n` words of this length in lexicographic order.
    pub fn lex_index(&self, d: usize) -> usize {
        self.letters().fold(0, |acc, a| acc * d + a as usize)
    }

    pub fn from_lex_index(mut index: usize, len: usize, d: usize) -> Word {
        let mut letters = vec![0 as Letter; len];
        for slot in letters.iter_mut().rev() {
            *slot = (index % d) as Letter;
            index /= d;
        }
        Word::from_letters(&letters)
    }

    /// All `d^len` words of length `len`, lexicographically.
    pub fn all_of_length(len: usize, d: usize) -> impl Iterator<Item = Word> {
        let count = d.pow(len as u32);
        (0..count).map(move |i| Word::from_lex_index(i, len, d))
    }
}

impl Ord for Word {
    /// Shorter words first, then lexicographic in the letters.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            let (mut i, mut j) = (0, 0);
            let (mut left_i, mut left_j) = (0u32, 0u32);
            loop {
                if left_i == 0 {
                    if i == self.runs.len() {
                        return Ordering::Equal;
                    }
                    left_i = self.runs[i].1;
                }
                if left_j == 0 {
                    left_j = other.runs[j].1;
                }
                let (a, b) = (self.runs[i].0, other.runs[j].0);
                if a != b {
                    return a.cmp(&b);
                }
                let step = left_i.min(left_j);
                left_i -= step;
                left_j -= step;
                if left_i == 0 {
                    i += 1;
                }
                if left_j == 0 {
                    j += 1;
                }
            }
        })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    /// `Ω` for the vacuum, otherwise letters joined by `.` (e.g. `0.1.0`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "Ω");
        }
        for (i, a) in self.letters().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Accepts letters separated by `,` or `.`; an empty string, `Ω` or `omega`
    /// is the vacuum.
    fn from_str(s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "Ω" || s.eq_ignore_ascii_case("omega") {
            return Ok(Word::empty());
        }
        let letters = s
            .split([',', '.'])
            .map(|tok| {
                tok.trim()
                    .parse::<Letter>()
                    .map_err(|_| Error::InvalidArgument(format!("bad letter {tok:?} in word {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::from_letters(&letters))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.letters())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_letters() -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec(0u8..3, 0..9)
    }

    proptest! {
        #[test]
        fn order_matches_plain_letters(a in arb_letters(), b in arb_letters()) {
            let (wa, wb) = (Word::from_letters(&a), Word::from_letters(&b));
            let plain = a.len().cmp(&b.len()).then_with(|| a.cmp(&b));
            prop_assert_eq!(wa.cmp(&wb), plain);
            prop_assert_eq!(wa == wb, a == b);
        }

        #[test]
        fn structural_ops_match_plain(a in arb_letters(), b in arb_letters(), x in 0u8..3) {
            let wa = Word::from_letters(&a);
            prop_assert_eq!(wa.to_letters(), a.clone());
            let mut pre = vec![x];
            pre.extend(&a);
            prop_assert_eq!(wa.prepend(x).to_letters(), pre);
            let mut app = a.clone();
            app.push(x);
            prop_assert_eq!(wa.append(x).to_letters(), app);
            let mut cat = a.clone();
            cat.extend(&b);
            prop_assert_eq!(wa.concat(&Word::from_letters(&b)).to_letters(), cat);
            let mut rev = a.clone();
            rev.reverse();
            prop_assert_eq!(wa.reversed().to_letters(), rev);
            prop_assert_eq!(Word::from_lex_index(wa.lex_index(3), a.len(), 3), wa);
        }
    }

    #[test]
    fn runs_are_canonical() {
        let w = Word::from_letters(&[0, 0, 1, 0, 0, 0]);
        assert_eq!(w.runs(), &[(0, 2), (1, 1), (0, 3)]);
        let removed = w.remove_from_run(1);
        assert_eq!(removed.runs(), &[(0, 5)]);
        assert_eq!(removed.len(), 5);
        let pos: Vec<_> = w.run_positions().collect();
        assert_eq!(pos, vec![(0, 0, 0, 2), (1, 1, 2, 1), (2, 0, 3, 3)]);
    }

    #[test]
    fn parse_and_display() {
        let w: Word = "0,1,1".parse().unwrap();
        assert_eq!(w.to_string(), "0.1.1");
        assert_eq!("".parse::<Word>().unwrap(), Word::empty());
        assert_eq!(Word::empty().to_string(), "Ω");
        assert!("0,x".parse::<Word>().is_err());
        assert_eq!(serde_json::to_string(&w).unwrap(), "[0,1,1]");
    }

    #[test]
    fn lexicographic_enumeration() {
        let words: Vec<String> = Word::all_of_length(2, 2).map(|w| w.to_string()).collect();
        assert_eq!(words, vec!["0.0", "0.1", "1.0", "1.1"]);
        assert_eq!(Word::all_of_length(0, 3).count(), 1);
    }
}
