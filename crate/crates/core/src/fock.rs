//! Truncated q-Fock space: bases, vectors and the q-inner product.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::combinatorics::QScalar;
use crate::error::{Error, Result};
use crate::symmetrizer;
use crate::word::{Letter, Word};

/// Letter dimension `d`, truncation level `N` and deformation `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockSpace {
    dim: usize,
    max_level: usize,
    q: QScalar,
}

impl FockSpace {
    pub fn new(dim: usize, max_level: usize, q: f64) -> Result<Self> {
        let q = QScalar::new(q)?;
        if dim == 0 || dim > Letter::MAX as usize + 1 {
            return Err(Error::InvalidArgument(format!(
                "letter dimension must be in 1..=256, got {dim}"
            )));
        }
        Ok(FockSpace { dim, max_level, q })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn max_level(&self) -> usize {
        self.max_level
    }

    #[inline]
    pub fn q(&self) -> QScalar {
        self.q
    }

    /// Same letters and `q`, different truncation.
    pub fn with_max_level(&self, max_level: usize) -> FockSpace {
        FockSpace { max_level, ..*self }
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        if w.len() > self.max_level {
            return Err(Error::WordTooLong {
                len: w.len(),
                max_level: self.max_level,
            });
        }
        match w.max_letter() {
            Some(a) if a as usize >= self.dim => Err(Error::LetterOutOfRange {
                letter: a as usize,
                dim: self.dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn check_letter(&self, a: Letter) -> Result<()> {
        if (a as usize) < self.dim {
            Ok(())
        } else {
            Err(Error::LetterOutOfRange {
                letter: a as usize,
                dim: self.dim,
            })
        }
    }

    /// Number of words of length `n`, refusing levels above `cap`.
    pub fn level_dim(&self, n: usize, cap: usize) -> Result<usize> {
        let requested = (self.dim as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if requested > cap as u128 {
            return Err(Error::DimensionCap {
                requested: requested.min(usize::MAX as u128) as usize,
                cap,
            });
        }
        Ok(requested as usize)
    }

    pub fn basis(&self) -> Result<FockBasis> {
        FockBasis::new(*self, self.max_level)
    }

    /// Basis restricted to levels `0..=level_cap`.
    pub fn basis_up_to(&self, level_cap: usize) -> Result<FockBasis> {
        FockBasis::new(*self, level_cap.min(self.max_level))
    }
}

/// The plain tensor basis, level by level, each level in lexicographic order.
#[derive(Debug, Clone)]
pub struct FockBasis {
    space: FockSpace,
    levels: Vec<Vec<Word>>,
}

impl FockBasis {
    fn new(space: FockSpace, top: usize) -> Result<Self> {
        let cap = symmetrizer::dim_cap();
        let levels = (0..=top)
            .map(|n| {
                space.level_dim(n, cap)?;
                Ok(Word::all_of_length(n, space.dim).collect())
            })
            .collect::<Result<Vec<Vec<Word>>>>()?;
        Ok(FockBasis { space, levels })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &[Word] {
        &self.levels[n]
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.levels.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Finitely supported vector of the truncated Fock space, as a sparse map
/// from words to real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    space: FockSpace,
    coeffs: BTreeMap<Word, f64>,
}

impl FockVector {
    pub fn zero(space: FockSpace) -> Self {
        FockVector {
            space,
            coeffs: BTreeMap::new(),
        }
    }

    /// The vacuum `Ω`.
    pub fn vacuum(space: FockSpace) -> Self {
        let mut v = FockVector::zero(space);
        v.coeffs.insert(Word::empty(), 1.0);
        v
    }

    pub fn word(space: FockSpace, w: Word) -> Result<Self> {
        space.check_word(&w)?;
        let mut v = FockVector::zero(space);
        v.coeffs.insert(w, 1.0);
        Ok(v)
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, f64)>>(space: FockSpace, terms: I) -> Result<Self> {
        let mut v = FockVector::zero(space);
        for (w, c) in terms {
            space.check_word(&w)?;
            *v.coeffs.entry(w).or_insert(0.0) += c;
        }
        Ok(v)
    }

    pub(crate) fn from_map_unchecked(space: FockSpace, coeffs: BTreeMap<Word, f64>) -> Self {
        FockVector { space, coeffs }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    /// Moves the vector to a space with the same letters and `q` but another
    /// truncation; fails if some word is too long for it.
    pub fn rehome(&self, space: FockSpace) -> Result<Self> {
        if space.dim != self.space.dim || space.q != self.space.q {
            return Err(Error::SpaceMismatch);
        }
        for w in self.coeffs.keys() {
            space.check_word(w)?;
        }
        Ok(FockVector {
            space,
            coeffs: self.coeffs.clone(),
        })
    }

    pub fn get(&self, w: &Word) -> f64 {
        self.coeffs.get(w).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.coeffs.iter().map(|(w, &c)| (w, c))
    }

    pub(crate) fn map(&self) -> &BTreeMap<Word, f64> {
        &self.coeffs
    }

    /// Number of stored coefficients.
    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|&c| c == 0.0)
    }

    /// Highest level carrying a nonzero coefficient.
    pub fn max_level(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .rev()
            .find(|(_, &c)| c != 0.0)
            .map(|(w, _)| w.len())
    }

    /// Component at level `n`.
    pub fn level(&self, n: usize) -> FockVector {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(w, _)| w.len() == n)
            .map(|(w, &c)| (w.clone(), c))
            .collect();
        FockVector {
            space: self.space,
            coeffs,
        }
    }

    /// Adds `c` to the coefficient of `w` without validating `w`.
    pub(crate) fn add_unchecked(&mut self, w: Word, c: f64) {
        *self.coeffs.entry(w).or_insert(0.0) += c;
    }

    pub fn add_term(&mut self, w: Word, c: f64) -> Result<()> {
        self.space.check_word(&w)?;
        self.add_unchecked(w, c);
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> FockVector {
        FockVector {
            space: self.space,
            coeffs: self.coeffs.iter().map(|(w, &c)| (w.clone(), alpha * c)).collect(),
        }
    }

    /// `self += alpha * other`. Panics if the letter dimensions differ.
    pub fn axpy(&mut self, alpha: f64, other: &FockVector) {
        assert_eq!(self.space.dim, other.space.dim, "axpy across different letter dimensions");
        for (w, &c) in &other.coeffs {
            self.add_unchecked(w.clone(), alpha * c);
        }
    }

    pub fn plus(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn minus(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Drops coefficients with `|c| <= eps`.
    pub fn pruned(mut self, eps: f64) -> FockVector {
        self.coeffs.retain(|_, c| c.abs() > eps);
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean norm of the coefficients in the plain tensor basis.
    pub fn plain_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Plain (undeformed) inner product of coefficients.
    pub fn plain_inner(&self, other: &FockVector) -> f64 {
        self.coeffs
            .iter()
            .map(|(w, &c)| c * other.get(w))
            .sum()
    }

    /// `⟨x, y⟩_q = Σ_n (x_n, P_n y_n)`.
    pub fn q_inner(&self, other: &FockVector) -> Result<f64> {
        if self.space.dim != other.space.dim || self.space.q != other.space.q {
            return Err(Error::SpaceMismatch);
        }
        let q = self.space.q;
        let mut x_levels: BTreeMap<usize, Vec<(Word, f64)>> = BTreeMap::new();
        for (w, &c) in &self.coeffs {
            if c != 0.0 {
                x_levels.entry(w.len()).or_default().push((w.clone(), c));
            }
        }
        let mut total = 0.0;
        for (n, xs) in x_levels {
            let ys: BTreeMap<Word, f64> = other
                .coeffs
                .iter()
                .filter(|(w, &c)| w.len() == n && c != 0.0)
                .map(|(w, &c)| (w.clone(), c))
                .collect();
            total += symmetrizer::gram_pairing(q, &xs, &ys);
        }
        Ok(total)
    }

    pub fn q_norm(&self) -> f64 {
        self.q_inner(self)
            .expect("a vector shares its own space")
            .max(0.0)
            .sqrt()
    }

    /// `P y`, the symmetrizer applied level by level.
    pub fn symmetrized(&self) -> FockVector {
        let q = self.space.q;
        let mut levels: BTreeMap<usize, BTreeMap<Word, f64>> = BTreeMap::new();
        for (w, &c) in &self.coeffs {
            if c != 0.0 {
                levels.entry(w.len()).or_default().insert(w.clone(), c);
            }
        }
        let mut out = FockVector::zero(self.space);
        for (_, ys) in levels {
            for (w, c) in symmetrizer::gram_apply(q, &ys) {
                out.add_unchecked(w, c);
            }
        }
        out
    }

    /// The anti-linear order reversal `S` on words.
    pub fn reversed(&self) -> FockVector {
        FockVector {
            space: self.space,
            coeffs: self.coeffs.iter().map(|(w, &c)| (w.reversed(), c)).collect(),
        }
    }

    /// `x ⊗ y`, word by word.
    pub fn tensor(&self, other: &FockVector) -> Result<FockVector> {
        if self.space.dim != other.space.dim || self.space.q != other.space.q {
            return Err(Error::SpaceMismatch);
        }
        let mut out = FockVector::zero(self.space);
        for (u, &a) in &self.coeffs {
            for (v, &b) in &other.coeffs {
                out.add_term(u.concat(v), a * b)?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetrizer::pn_matrix;
    use crate::word::E;

    fn space(q: f64) -> FockSpace {
        FockSpace::new(2, 6, q).unwrap()
    }

    #[test]
    fn basis_sizes() {
        let b = FockSpace::new(3, 3, 0.2).unwrap().basis().unwrap();
        assert_eq!(b.len(), 1 + 3 + 9 + 27);
        assert_eq!(b.level(0), &[Word::empty()]);
        assert_eq!(b.level(2)[1], Word::from_letters(&[0, 1]));
    }

    #[test]
    fn inner_product_examples() {
        let s = space(0.5);
        let omega = FockVector::vacuum(s);
        assert_eq!(omega.q_inner(&omega).unwrap(), 1.0);
        for n in 0..=6 {
            let v = FockVector::word(s, Word::power(E, n)).unwrap();
            let expect = s.q().factorial(n);
            assert!((v.q_inner(&v).unwrap() - expect).abs() < 1e-12 * expect);
        }
        let ef = FockVector::word(s, Word::from_letters(&[0, 1])).unwrap();
        let fe = FockVector::word(s, Word::from_letters(&[1, 0])).unwrap();
        assert!((ef.q_inner(&fe).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inner_product_matches_dense_symmetrizer() {
        for &q in &[-0.9, -0.3, 0.0, 0.6] {
            let s = FockSpace::new(3, 4, q).unwrap();
            for n in 1..=4 {
                let p = pn_matrix(n, 3, q).unwrap();
                let words: Vec<Word> = Word::all_of_length(n, 3).collect();
                // pseudo-random but fixed coefficients
                let xs: Vec<f64> = (0..words.len()).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
                let ys: Vec<f64> = (0..words.len()).map(|i| ((i * 5 + 1) % 13) as f64 - 6.0).collect();
                let x = FockVector::from_terms(s, words.iter().cloned().zip(xs.iter().copied())).unwrap();
                let y = FockVector::from_terms(s, words.iter().cloned().zip(ys.iter().copied())).unwrap();
                let xv = nalgebra::DVector::from_vec(xs);
                let yv = nalgebra::DVector::from_vec(ys);
                let dense = xv.dot(&(p.matrix() * &yv));
                let fast = x.q_inner(&y).unwrap();
                assert!((dense - fast).abs() <= 1e-10 * dense.abs().max(1.0), "q={q} n={n}");
                let sym = y.symmetrized();
                let dense_py = p.matrix() * &yv;
                for (i, w) in words.iter().enumerate() {
                    assert!((sym.get(w) - dense_py[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn q_zero_is_plain_inner_product() {
        let s = space(0.0);
        let x = FockVector::from_terms(
            s,
            vec![
                (Word::from_letters(&[0, 1]), 1.5),
                (Word::from_letters(&[1, 0]), -2.0),
                (Word::from_letters(&[1]), 0.25),
            ],
        )
        .unwrap();
        let y = FockVector::from_terms(
            s,
            vec![(Word::from_letters(&[1, 0]), 3.0), (Word::from_letters(&[1]), 4.0)],
        )
        .unwrap();
        assert_eq!(x.q_inner(&y).unwrap(), x.plain_inner(&y));
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = FockVector::vacuum(space(0.5));
        let b = FockVector::vacuum(space(0.4));
        assert_eq!(a.q_inner(&b), Err(Error::SpaceMismatch));
        let c = FockVector::vacuum(FockSpace::new(3, 6, 0.5).unwrap());
        assert_eq!(a.q_inner(&c), Err(Error::SpaceMismatch));
    }

    #[test]
    fn word_validation() {
        let s = space(0.1);
        assert!(FockVector::word(s, Word::from_letters(&[2])).is_err());
        assert!(FockVector::word(s, Word::power(0, 7)).is_err());
    }

    #[test]
    fn reversal_is_isometric_involution() {
        let s = space(0.45);
        let x = FockVector::from_terms(
            s,
            vec![
                (Word::from_letters(&[0, 1, 1]), 0.7),
                (Word::from_letters(&[1, 0, 0]), -1.1),
                (Word::from_letters(&[0, 0, 1, 0]), 0.3),
                (Word::empty(), 2.0),
            ],
        )
        .unwrap();
        let sx = x.reversed();
        assert_eq!(sx.reversed(), x);
        assert!((sx.q_norm() - x.q_norm()).abs() < 1e-12);
        assert_eq!(
            FockVector::word(s, Word::from_letters(&[0, 1])).unwrap().reversed(),
            FockVector::word(s, Word::from_letters(&[1, 0])).unwrap()
        );
        assert_eq!(FockVector::vacuum(s).reversed(), FockVector::vacuum(s));
    }
}
