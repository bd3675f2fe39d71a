//! First and second quantization, the conditional expectation onto the
//! distinguished letter, the vacuum trace and Gaussian moments.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::combinatorics::{crossings, pair_partitions, QScalar};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::operators::{FockOperator, Side};
use crate::word::{Word, E};

/// A real `d×d` matrix of operator norm at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionMap {
    matrix: DMatrix<f64>,
}

impl ContractionMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "contraction must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("contraction has non-finite entries".into()));
        }
        let norm = matrix.clone().svd(false, false).singular_values.max();
        if norm > 1.0 + 1e-12 {
            return Err(Error::NotContraction(norm));
        }
        Ok(ContractionMap { matrix })
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d))
    }

    /// Orthogonal projection onto the span of `e`.
    pub fn projection_onto_e(d: usize) -> Result<Self> {
        let mut m = DMatrix::zeros(d, d);
        if d > 0 {
            m[(E as usize, E as usize)] = 1.0;
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// `F_q(T)`: the identity on `CΩ` and `T^{⊗n}` on level `n`.
pub fn first_quantization(space: FockSpace, t: &ContractionMap) -> Result<FockOperator> {
    if t.dim() != space.dim() {
        return Err(Error::SpaceMismatch);
    }
    Ok(FockOperator::tensor_power(space, t.matrix.clone(), "F_q(T)".into()))
}

/// The symbol `F_q(T)ξ` of `Γ_q(T)(W(ξ))`.
pub fn second_quantization_vector(t: &ContractionMap, xi: &FockVector) -> Result<FockVector> {
    first_quantization(xi.space(), t)?.apply(xi)
}

/// Keeps the words that are powers of `e`, dropping everything else.
pub fn conditional_expectation_e(xi: &FockVector) -> FockVector {
    let terms = xi.iter().filter(|(w, _)| w.is_power_of(E)).map(|(w, c)| (w.clone(), c));
    FockVector::from_terms(xi.space(), terms).expect("subset of a valid vector")
}

/// `τ(x) = ⟨xΩ, Ω⟩_q`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct TraceValue(pub f64);

pub fn vacuum_trace(x: &FockOperator) -> Result<TraceValue> {
    let omega = FockVector::vacuum(x.space());
    Ok(TraceValue(x.apply(&omega)?.q_inner(&omega)?))
}

/// `τ(W(e)^k)` by `k` applications of `W(e)` on the level-`N` truncation
/// over the single letter `e`.
pub fn gaussian_moment(k: usize, q: f64, max_level: usize) -> Result<f64> {
    if max_level < k {
        return Err(Error::InvalidArgument(format!(
            "moment of order {k} needs truncation level at least {k}, got {max_level}"
        )));
    }
    let space = FockSpace::new(1, max_level.max(1), q)?;
    let w = FockOperator::hermite_series(space, Side::Left, E, vec![0.0, 1.0])?;
    let mut v = FockVector::vacuum(space);
    for _ in 0..k {
        v = w.apply(&v)?;
    }
    Ok(v.get(&Word::empty()))
}

/// `Σ_π q^{cr(π)}` over pair partitions of `k` points; zero for odd `k`.
pub fn gaussian_moment_oracle(k: usize, q: f64) -> Result<f64> {
    let q = QScalar::new(q)?;
    if k % 2 == 1 {
        return Ok(0.0);
    }
    Ok(pair_partitions(k)?.iter().map(|p| q.pow(crossings(p))).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: usize,
    pub q: f64,
    pub matrix: f64,
    pub oracle: f64,
    pub delta: f64,
}

/// Moments `k = 0..=kmax` for each `q`, computed on truncation level `kmax`.
pub fn moment_table(kmax: usize, qs: &[f64]) -> Result<Vec<MomentRow>> {
    let mut rows = Vec::new();
    for &q in qs {
        for k in 0..=kmax {
            let matrix = gaussian_moment(k, q, kmax)?;
            let oracle = gaussian_moment_oracle(k, q)?;
            rows.push(MomentRow {
                k,
                q,
                matrix,
                oracle,
                delta: (matrix - oracle).abs(),
            });
        }
    }
    Ok(rows)
}

pub fn moments_csv(rows: &[MomentRow]) -> String {
    let mut out = String::from("k,q,matrix,oracle,delta\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e},{:.16e}", r.k, r.q, r.matrix, r.oracle, r.delta);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::w_left;

    const F: u8 = 1;
    const Q_GRID: [f64; 5] = [-0.9, -0.5, 0.0, 0.5, 0.9];

    fn wv(s: FockSpace, letters: &[u8]) -> FockVector {
        FockVector::word(s, Word::from_letters(letters)).unwrap()
    }

    #[test]
    fn contraction_validation() {
        assert!(ContractionMap::identity(3).is_ok());
        let big = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(ContractionMap::new(big), Err(Error::NotContraction(_))));
        assert!(ContractionMap::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn first_quantization_examples() {
        let s = FockSpace::new(2, 5, 0.5).unwrap();
        let id = first_quantization(s, &ContractionMap::identity(2).unwrap()).unwrap();
        let x = wv(s, &[E, F, F]).plus(&wv(s, &[F]).scaled(0.3));
        assert_eq!(id.apply(&x).unwrap(), x);

        let zero = first_quantization(s, &ContractionMap::new(DMatrix::zeros(2, 2)).unwrap()).unwrap();
        let y = x.plus(&FockVector::vacuum(s).scaled(2.0));
        assert_eq!(zero.apply(&y).unwrap(), FockVector::vacuum(s).scaled(2.0));

        let p = ContractionMap::projection_onto_e(2).unwrap();
        let fp = first_quantization(s, &p).unwrap();
        assert!(fp.apply(&wv(s, &[E, F])).unwrap().is_zero());
        for n in 0..=5 {
            let en = FockVector::word(s, Word::power(E, n)).unwrap();
            assert_eq!(fp.apply(&en).unwrap(), en);
        }
        assert!(first_quantization(s, &ContractionMap::identity(3).unwrap()).is_err());
    }

    #[test]
    fn second_quantization_examples() {
        let s = FockSpace::new(2, 4, -0.5).unwrap();
        let p = ContractionMap::projection_onto_e(2).unwrap();
        let omega = FockVector::vacuum(s);
        assert_eq!(second_quantization_vector(&p, &omega).unwrap(), omega);
        assert!(second_quantization_vector(&p, &wv(s, &[E, F])).unwrap().is_zero());
        let xi = wv(s, &[E, E]).plus(&wv(s, &[E]).scaled(-2.0));
        assert_eq!(second_quantization_vector(&p, &xi).unwrap(), xi);
    }

    #[test]
    fn rotation_quantization_is_compatible_with_wick() {
        let s = FockSpace::new(2, 6, 0.4).unwrap();
        let (c, sn) = (0.6f64, 0.8f64);
        let t = ContractionMap::new(DMatrix::from_row_slice(2, 2, &[0.5 * c, -0.5 * sn, 0.5 * sn, 0.5 * c])).unwrap();
        for w in (0..=3).flat_map(|n| Word::all_of_length(n, 2)) {
            let x = FockVector::word(s, w.clone()).unwrap();
            let fx = second_quantization_vector(&t, &x).unwrap();
            let lhs = w_left(&fx).unwrap().apply(&FockVector::vacuum(s)).unwrap();
            let rhs = second_quantization_vector(&t, &w_left(&x).unwrap().apply(&FockVector::vacuum(s)).unwrap()).unwrap();
            assert!(lhs.minus(&rhs).max_abs() < 1e-14, "{w}");
        }
    }

    #[test]
    fn first_quantization_is_q_contraction() {
        let t = ContractionMap::new(DMatrix::from_row_slice(2, 2, &[0.6, 0.8, 0.8, -0.6])).unwrap();
        let shrink = ContractionMap::new(DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.0, 0.3])).unwrap();
        for q in Q_GRID {
            let s = FockSpace::new(2, 4, q).unwrap();
            for map in [&t, &shrink] {
                let f = first_quantization(s, map).unwrap();
                for (i, w) in s.basis().unwrap().words().enumerate() {
                    let x = FockVector::word(s, w.clone())
                        .unwrap()
                        .plus(&wv(s, &[F, E]).scaled(0.1 * i as f64));
                    let fx = f.apply(&x).unwrap();
                    assert!(fx.q_norm() <= x.q_norm() + 1e-10, "q={q} w={w}");
                }
            }
        }
    }

    #[test]
    fn conditional_expectation_examples() {
        let s = FockSpace::new(2, 4, 0.7).unwrap();
        let e3 = FockVector::word(s, Word::power(E, 3)).unwrap();
        assert_eq!(conditional_expectation_e(&e3), e3);
        assert!(conditional_expectation_e(&wv(s, &[F, E])).is_zero());
        let e2 = FockVector::word(s, Word::power(E, 2)).unwrap();
        let mixed = e2.plus(&wv(s, &[E, F]).scaled(0.5));
        assert_eq!(conditional_expectation_e(&mixed), e2);
    }

    #[test]
    fn conditional_expectation_is_orthogonal_projection() {
        for q in Q_GRID {
            let s = FockSpace::new(2, 4, q).unwrap();
            let mut xi = FockVector::zero(s);
            for (i, w) in s.basis().unwrap().words().enumerate() {
                xi.add_term(w.clone(), ((i * 7 % 11) as f64 - 5.0) / 5.0).unwrap();
            }
            let p = conditional_expectation_e(&xi);
            assert!(conditional_expectation_e(&p).minus(&p).max_abs() <= 1e-12);
            let rest = xi.minus(&p);
            for n in 0..=4 {
                let en = FockVector::word(s, Word::power(E, n)).unwrap();
                assert!(rest.q_inner(&en).unwrap().abs() <= 1e-12, "q={q} n={n}");
            }
        }
    }

    #[test]
    fn trace_examples() {
        let s = FockSpace::new(2, 8, 0.3).unwrap();
        assert_eq!(vacuum_trace(&FockOperator::identity(s)).unwrap(), TraceValue(1.0));
        let we = w_left(&wv(s, &[E])).unwrap();
        let sq = we.compose(&we).unwrap();
        assert!((vacuum_trace(&sq).unwrap().0 - 1.0).abs() < 1e-15);

        let top = FockSpace::new(1, 1, 0.3).unwrap();
        let l = FockOperator::creation_left(top, E).unwrap();
        assert!(vacuum_trace(&l.compose(&l).unwrap()).is_err());
    }

    #[test]
    fn trace_is_symmetric() {
        for q in [-0.5, 0.5] {
            let s = FockSpace::new(2, 8, q).unwrap();
            let words: Vec<Word> = (0..=3).flat_map(|n| Word::all_of_length(n, 2)).collect();
            let ops: Vec<FockOperator> = words
                .iter()
                .map(|w| w_left(&FockVector::word(s, w.clone()).unwrap()).unwrap())
                .collect();
            for a in &ops {
                for b in &ops {
                    let ab = vacuum_trace(&a.compose(b).unwrap()).unwrap().0;
                    let ba = vacuum_trace(&b.compose(a).unwrap()).unwrap().0;
                    assert!((ab - ba).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn moment_examples() {
        for q in Q_GRID {
            assert!((gaussian_moment(2, q, 2).unwrap() - 1.0).abs() < 1e-15);
            assert_eq!(gaussian_moment_oracle(2, q).unwrap(), 1.0);
            assert!((gaussian_moment(4, q, 4).unwrap() - (2.0 + q)).abs() < 1e-12);
            assert!((gaussian_moment_oracle(4, q).unwrap() - (2.0 + q)).abs() < 1e-15);
            for k in [1, 3, 5, 7] {
                assert_eq!(gaussian_moment(k, q, 8).unwrap(), 0.0);
                assert_eq!(gaussian_moment_oracle(k, q).unwrap(), 0.0);
            }
        }
        assert!(gaussian_moment(5, 0.5, 4).is_err());
    }

    #[test]
    fn moments_match_oracle() {
        let rows = moment_table(10, &Q_GRID).unwrap();
        assert_eq!(rows.len(), 55);
        for r in &rows {
            assert!(r.delta <= 1e-10, "{r:?}");
        }
        // free case: Catalan numbers
        let free: Vec<f64> = rows.iter().filter(|r| r.q == 0.0 && r.k % 2 == 0).map(|r| r.oracle).collect();
        assert_eq!(free, vec![1.0, 1.0, 2.0, 5.0, 14.0, 42.0]);
        let csv = moments_csv(&rows[..2]);
        assert!(csv.starts_with("k,q,matrix,oracle,delta\n0,"));
    }
}
