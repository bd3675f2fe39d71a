//! The symmetrizer `P_n`, the coset operator `R_{n,k}`, and the matrix-free
//! Gram routines behind the q-inner product.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::combinatorics::{permutations, shuffle_representatives, QScalar};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::word::{Letter, Word};

/// Default bound on `d^n` for dense level matrices.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Dense matrices are built only for `n` up to this size (`8! = 40320`
/// permutation applications per word).
pub const MAX_DENSE_LEVEL: usize = 8;

/// Cap on `d^n`, read once from `QFOCK_DIM_CAP`.
pub fn dim_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("QFOCK_DIM_CAP")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&v: &usize| v > 0)
            .unwrap_or(DEFAULT_DIM_CAP)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SymmetrizerKind {
    /// `P_n`
    P,
    /// `R_{n,k}`
    R { k: usize },
}

/// Matrix of `P_n` or `R_{n,k}` on the plain tensor basis of level `n`,
/// words in lexicographic order.
#[derive(Debug, Clone)]
pub struct Symmetrizer {
    kind: SymmetrizerKind,
    n: usize,
    d: usize,
    q: QScalar,
    matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizerExport {
    #[serde(flatten)]
    pub kind: SymmetrizerKind,
    pub n: usize,
    pub d: usize,
    pub q: f64,
    pub words: Vec<Word>,
    /// Row-major.
    pub matrix: Vec<Vec<f64>>,
}

impl Symmetrizer {
    pub fn kind(&self) -> SymmetrizerKind {
        self.kind
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn words(&self) -> Vec<Word> {
        Word::all_of_length(self.n, self.d).collect()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// `(min, max)` eigenvalue of the symmetric part.
    pub fn eigen_extremes(&self) -> (f64, f64) {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym).eigenvalues;
        (eig.min(), eig.max())
    }

    /// Largest singular value (norm w.r.t. the plain inner product).
    pub fn spectral_norm(&self) -> f64 {
        self.matrix.clone().svd(false, false).singular_values.max()
    }

    pub fn export(&self) -> SymmetrizerExport {
        SymmetrizerExport {
            kind: self.kind,
            n: self.n,
            d: self.d,
            q: self.q.value(),
            words: self.words(),
            matrix: self
                .matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

fn level_size(n: usize, d: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidArgument("letter dimension must be positive".into()));
    }
    if n > MAX_DENSE_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "dense symmetrizers are limited to n <= {MAX_DENSE_LEVEL}, got {n}"
        )));
    }
    let cap = dim_cap();
    let size = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::DimensionCap {
            requested: size.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    Ok(size as usize)
}

/// Adds `weight · φ(σ)` to `m`, where `φ(σ)` sends word `w` to the word whose
/// position `i` carries `w[σ(i)]`.
fn add_permutation_action(m: &mut DMatrix<f64>, mapping: &[usize], n: usize, d: usize, weight: f64) {
    let mut letters = vec![0 as Letter; n];
    let mut image = vec![0 as Letter; n];
    for col in 0..m.ncols() {
        let mut idx = col;
        for slot in letters.iter_mut().rev() {
            *slot = (idx % d) as Letter;
            idx /= d;
        }
        for (i, &src) in mapping.iter().enumerate() {
            image[i] = letters[src];
        }
        let row = image.iter().fold(0, |acc, &a| acc * d + a as usize);
        m[(row, col)] += weight;
    }
}

/// `P_n = Σ_{σ ∈ S_n} q^{|σ|} φ(σ)` on level `n` with `d` letters.
pub fn pn_matrix(n: usize, d: usize, q: f64) -> Result<Symmetrizer> {
    let q = QScalar::new(q)?;
    if n == 0 {
        return Err(Error::InvalidArgument("P_n needs n >= 1".into()));
    }
    let size = level_size(n, d)?;
    let mut m = DMatrix::zeros(size, size);
    for p in permutations(n) {
        add_permutation_action(&mut m, p.as_slice(), n, d, q.pow(p.inversions()));
    }
    Ok(Symmetrizer {
        kind: SymmetrizerKind::P,
        n,
        d,
        q,
        matrix: m,
    })
}

/// `R_{n,k} = Σ q^{|σ|} φ(σ^{-1})` over the minimal-inversion representatives
/// of `S_n / (S_{n-k} × S_k)`.
pub fn rnk_matrix(n: usize, k: usize, d: usize, q: f64) -> Result<Symmetrizer> {
    let q = QScalar::new(q)?;
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "R_(n,k) needs 1 <= k <= n-1, got n = {n}, k = {k}"
        )));
    }
    let size = level_size(n, d)?;
    let mut m = DMatrix::zeros(size, size);
    for (p, inv) in shuffle_representatives(n, k)? {
        add_permutation_action(&mut m, p.inverse().as_slice(), n, d, q.pow(inv));
    }
    Ok(Symmetrizer {
        kind: SymmetrizerKind::R { k },
        n,
        d,
        q,
        matrix: m,
    })
}

/// `max |P_n - R_{n,k}(P_{n-k} ⊗ P_k)|` entrywise.
pub fn factorization_residual(n: usize, k: usize, d: usize, q: f64) -> Result<f64> {
    let p = pn_matrix(n, d, q)?;
    let r = rnk_matrix(n, k, d, q)?;
    let left = pn_matrix(n - k, d, q)?;
    let right = pn_matrix(k, d, q)?;
    let product = r.matrix() * left.matrix().kronecker(right.matrix());
    Ok((p.matrix() - product).amax())
}

/// Smallest eigenvalue of `P_n`.
pub fn gram_min_eigenvalue(n: usize, d: usize, q: f64) -> Result<f64> {
    Ok(pn_matrix(n, d, q)?.eigen_extremes().0)
}

/// Norm of `e_1 ⊗ ... ⊗ e_n ⊗ e^{⊗m}` against `C_q^{n/2} sqrt([m]_q!)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbedNorm {
    pub lhs: f64,
    pub rhs: f64,
}

/// `letters` are level-one unit vectors `e_1, .., e_n`; the tail is `e^{⊗m}`
/// for the distinguished letter.
pub fn embed_norm_check(space: FockSpace, m: usize, letters: &[FockVector]) -> Result<EmbedNorm> {
    let mut word = FockVector::vacuum(space);
    for v in letters {
        if v.space().dim() != space.dim() || v.space().q() != space.q() {
            return Err(Error::SpaceMismatch);
        }
        if v.iter().any(|(w, c)| c != 0.0 && w.len() != 1) {
            return Err(Error::InvalidArgument("letters must be vectors of level one".into()));
        }
        let norm = v.plain_norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnit(norm));
        }
        word = word.tensor(v)?;
    }
    let tail = FockVector::word(space, Word::power(crate::word::E, m))?;
    let full = word.tensor(&tail)?;
    let q = space.q();
    let n = letters.len() as i32;
    let rhs = q.c_q(1e-15)?.powf(n as f64 / 2.0) * q.factorial(m).sqrt();
    Ok(EmbedNorm {
        lhs: full.q_norm(),
        rhs,
    })
}

// Matrix-free P_n.
//
// Grouping the permutations of S_n by the source σ(0) of the first position
// gives (P_n y)_{a u} = (P_{n-1} D_a y)_u, where D_a removes one letter `a`
// from each word and weights the occurrence at 0-based position p by q^p
// (its inversions against the positions left of it that stay behind).

/// `D_a` on a single level.
fn take_letter(q: QScalar, a: Letter, ys: &BTreeMap<Word, f64>) -> BTreeMap<Word, f64> {
    let mut out = BTreeMap::new();
    for (w, &c) in ys {
        for (run, letter, start, len) in w.run_positions() {
            if letter == a {
                let weight = q.pow(start) * q.integer(len);
                if weight != 0.0 {
                    *out.entry(w.remove_from_run(run)).or_insert(0.0) += c * weight;
                }
            }
        }
    }
    out
}

/// `Σ x_w (P_n y)_w` for words all of the same length.
pub(crate) fn gram_pairing(q: QScalar, xs: &[(Word, f64)], ys: &BTreeMap<Word, f64>) -> f64 {
    if xs.is_empty() || ys.is_empty() {
        return 0.0;
    }
    if xs[0].0.is_empty() {
        let y0 = ys.get(&Word::empty()).copied().unwrap_or(0.0);
        return xs.iter().map(|(_, c)| c * y0).sum();
    }
    let mut groups: BTreeMap<Letter, Vec<(Word, f64)>> = BTreeMap::new();
    for (w, c) in xs {
        let a = w.first().expect("nonempty word");
        groups.entry(a).or_default().push((w.remove_from_run(0), *c));
    }
    groups
        .into_iter()
        .map(|(a, rest)| {
            let reduced = take_letter(q, a, ys);
            gram_pairing(q, &rest, &reduced)
        })
        .sum()
}

/// `P_n y` for `y` supported on a single level.
pub(crate) fn gram_apply(q: QScalar, ys: &BTreeMap<Word, f64>) -> BTreeMap<Word, f64> {
    let mut out = BTreeMap::new();
    let Some(first) = ys.keys().next() else {
        return out;
    };
    if first.is_empty() {
        out.insert(Word::empty(), ys[first]);
        return out;
    }
    let mut letters: Vec<Letter> = ys.keys().flat_map(|w| w.runs().iter().map(|&(a, _)| a)).collect();
    letters.sort_unstable();
    letters.dedup();
    for a in letters {
        let reduced = take_letter(q, a, ys);
        for (w, c) in gram_apply(q, &reduced) {
            *out.entry(w.prepend(a)).or_insert(0.0) += c;
        }
    }
    out
}
