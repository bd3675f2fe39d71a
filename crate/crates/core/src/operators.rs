//! Creation, annihilation and Wick operators on the truncated Fock space.
//!
//! Operators are kept in structured form and applied matrix-free to sparse
//! vectors. Each operator knows how far it can raise the level of its input;
//! its guard is the highest input level whose image still fits under the
//! truncation, and inputs above the guard are rejected.

use std::collections::BTreeMap;
use rustc_hash::FxHashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::combinatorics::{shuffle_representatives, QScalar};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::word::{Letter, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Elementary {
    /// `l(a)`: prepend `a`.
    Create(Letter),
    /// `l*(a)`: remove an `a`, the `i`-th letter weighted by `q^{i-1}`.
    Annihilate(Letter),
    /// `l_r(a)`: append `a`.
    CreateRight(Letter),
    /// `l_r*(a)`: remove an `a`, the `i`-th of `n` letters weighted by `q^{n-i}`.
    AnnihilateRight(Letter),
}

impl Elementary {
    pub fn adjoint(self) -> Elementary {
        match self {
            Elementary::Create(a) => Elementary::Annihilate(a),
            Elementary::Annihilate(a) => Elementary::Create(a),
            Elementary::CreateRight(a) => Elementary::AnnihilateRight(a),
            Elementary::AnnihilateRight(a) => Elementary::CreateRight(a),
        }
    }

    /// Left/right mirror image, i.e. conjugation by the reversal `S`.
    pub fn mirrored(self) -> Elementary {
        match self {
            Elementary::Create(a) => Elementary::CreateRight(a),
            Elementary::Annihilate(a) => Elementary::AnnihilateRight(a),
            Elementary::CreateRight(a) => Elementary::Create(a),
            Elementary::AnnihilateRight(a) => Elementary::Annihilate(a),
        }
    }

    pub fn letter(self) -> Letter {
        match self {
            Elementary::Create(a)
            | Elementary::Annihilate(a)
            | Elementary::CreateRight(a)
            | Elementary::AnnihilateRight(a) => a,
        }
    }

    fn is_creation(self) -> bool {
        matches!(self, Elementary::Create(_) | Elementary::CreateRight(_))
    }

    fn apply(self, q: QScalar, x: &BTreeMap<Word, f64>) -> BTreeMap<Word, f64> {
        match self {
            Elementary::Create(a) => x.iter().map(|(w, &c)| (w.prepend(a), c)).collect(),
            Elementary::CreateRight(a) => x.iter().map(|(w, &c)| (w.append(a), c)).collect(),
            Elementary::Annihilate(a) => annihilate(q, a, x, false),
            Elementary::AnnihilateRight(a) => annihilate(q, a, x, true),
        }
    }
}

fn annihilate(q: QScalar, a: Letter, x: &BTreeMap<Word, f64>, from_right: bool) -> BTreeMap<Word, f64> {
    let mut out = BTreeMap::new();
    for (w, &c) in x {
        if c == 0.0 {
            continue;
        }
        let n = w.len();
        for (run, letter, start, len) in w.run_positions() {
            if letter != a {
                continue;
            }
            // a run of `len` equal letters contributes the geometric sum of
            // its positional weights
            let offset = if from_right { n - start - len } else { start };
            let weight = q.pow(offset) * q.integer(len);
            if weight != 0.0 {
                *out.entry(w.remove_from_run(run)).or_insert(0.0) += c * weight;
            }
        }
    }
    out
}

fn add_scaled(out: &mut BTreeMap<Word, f64>, alpha: f64, v: &BTreeMap<Word, f64>) {
    if alpha == 0.0 {
        return;
    }
    for (w, &c) in v {
        *out.entry(w.clone()).or_insert(0.0) += alpha * c;
    }
}

/// `coeff · ops[0] ops[1] ... ops[last]`; the last operator acts first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: f64,
    pub ops: Vec<Elementary>,
}

impl Monomial {
    /// Largest level increase at any intermediate step.
    fn raise(&self) -> usize {
        let mut level: i64 = 0;
        let mut max = 0;
        for op in self.ops.iter().rev() {
            level += if op.is_creation() { 1 } else { -1 };
            max = max.max(level);
        }
        max as usize
    }

    fn adjoint(&self) -> Monomial {
        Monomial {
            coeff: self.coeff,
            ops: self.ops.iter().rev().map(|op| op.adjoint()).collect(),
        }
    }

    fn apply(&self, q: QScalar, x: &BTreeMap<Word, f64>) -> BTreeMap<Word, f64> {
        let mut v = x.clone();
        for op in self.ops.iter().rev() {
            v = op.apply(q, &v);
            if v.is_empty() {
                break;
            }
        }
        v
    }
}

/// One term `q^{|σ|} l(c_1)...l(c_{n-m}) l*(a_1)...l*(a_m)` of a Wick expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WickTerm {
    pub coeff: f64,
    pub creations: Vec<Letter>,
    pub annihilations: Vec<Letter>,
}

impl WickTerm {
    pub fn to_monomial(&self, scale: f64) -> Monomial {
        let ops = self
            .creations
            .iter()
            .map(|&a| Elementary::Create(a))
            .chain(self.annihilations.iter().map(|&a| Elementary::Annihilate(a)))
            .collect();
        Monomial {
            coeff: scale * self.coeff,
            ops,
        }
    }
}

/// Wick expansion of `W(e_{w_1} ⊗ ... ⊗ e_{w_n})`: for every `m` and every
/// minimal-inversion shuffle `σ` of `S_n / (S_{n-m} × S_m)`, the letters
/// `w_{σ(1)}..w_{σ(n-m)}` are created and `w_{σ(n-m+1)}..w_{σ(n)}`
/// annihilated. The empty word gives the identity.
pub fn wick_expand(word: &Word, q: QScalar) -> Vec<WickTerm> {
    let letters = word.to_letters();
    let n = letters.len();
    let mut terms = Vec::new();
    for m in 0..=n {
        for (sigma, inv) in shuffle_representatives(n, m).expect("m <= n") {
            let image: Vec<Letter> = sigma.act(&letters);
            terms.push(WickTerm {
                coeff: q.pow(inv),
                creations: image[..n - m].to_vec(),
                annihilations: image[n - m..].to_vec(),
            });
        }
    }
    terms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
enum Body {
    Monomials(Vec<Monomial>),
    /// `Σ_k c_k p_k(W(a))` (or `W_r(a)`), `p_k` the orthonormal q-Hermite
    /// polynomials: `x p_k = sqrt([k+1]) p_{k+1} + sqrt([k]) p_{k-1}`.
    Polynomial {
        side: Side,
        letter: Letter,
        coeffs: Vec<f64>,
    },
    /// `T^{⊗n}` on level `n`.
    Tensor(DMatrix<f64>),
    /// Composition; the last factor acts first.
    Product(Vec<FockOperator>),
    Sum(Vec<(f64, FockOperator)>),
}

#[derive(Debug, Clone)]
pub struct FockOperator {
    space: FockSpace,
    body: Body,
    raise: usize,
    label: String,
}

fn body_raise(body: &Body) -> usize {
    match body {
        Body::Monomials(ms) => ms.iter().map(Monomial::raise).max().unwrap_or(0),
        Body::Polynomial { coeffs, .. } => coeffs.len().saturating_sub(1),
        Body::Tensor(_) => 0,
        Body::Product(factors) => factors.iter().map(|f| f.raise).sum(),
        Body::Sum(terms) => terms.iter().map(|(_, t)| t.raise).max().unwrap_or(0),
    }
}

impl FockOperator {
    fn from_body(space: FockSpace, body: Body, label: impl Into<String>) -> Self {
        let raise = body_raise(&body);
        FockOperator {
            space,
            body,
            raise,
            label: label.into(),
        }
    }

    pub fn from_monomials(space: FockSpace, monomials: Vec<Monomial>, label: impl Into<String>) -> Result<Self> {
        for m in &monomials {
            for op in &m.ops {
                space.check_letter(op.letter())?;
            }
        }
        Ok(Self::from_body(space, Body::Monomials(monomials), label))
    }

    pub fn identity(space: FockSpace) -> Self {
        Self::from_body(
            space,
            Body::Monomials(vec![Monomial {
                coeff: 1.0,
                ops: vec![],
            }]),
            "Id",
        )
    }

    pub fn zero(space: FockSpace) -> Self {
        Self::from_body(space, Body::Monomials(vec![]), "0")
    }

    fn elementary(space: FockSpace, op: Elementary, label: String) -> Result<Self> {
        Self::from_monomials(space, vec![Monomial { coeff: 1.0, ops: vec![op] }], label)
    }

    pub fn creation_left(space: FockSpace, a: Letter) -> Result<Self> {
        Self::elementary(space, Elementary::Create(a), format!("l(e{a})"))
    }

    pub fn creation_right(space: FockSpace, a: Letter) -> Result<Self> {
        Self::elementary(space, Elementary::CreateRight(a), format!("l_r(e{a})"))
    }

    pub fn annihilation_left(space: FockSpace, a: Letter) -> Result<Self> {
        Self::elementary(space, Elementary::Annihilate(a), format!("l*(e{a})"))
    }

    pub fn annihilation_right(space: FockSpace, a: Letter) -> Result<Self> {
        Self::elementary(space, Elementary::AnnihilateRight(a), format!("l_r*(e{a})"))
    }

    /// `Σ_k coeffs[k] p_k(W(a))` with the orthonormal q-Hermite polynomials
    /// `p_k`, so that `p_k(W(a)) Ω = a^{⊗k} / sqrt([k]_q!)`.
    pub fn hermite_series(space: FockSpace, side: Side, a: Letter, coeffs: Vec<f64>) -> Result<Self> {
        space.check_letter(a)?;
        let label = match side {
            Side::Left => format!("f(W(e{a}))"),
            Side::Right => format!("f(W_r(e{a}))"),
        };
        Ok(Self::from_body(
            space,
            Body::Polynomial {
                side,
                letter: a,
                coeffs,
            },
            label,
        ))
    }

    pub(crate) fn tensor_power(space: FockSpace, t: DMatrix<f64>, label: String) -> Self {
        Self::from_body(space, Body::Tensor(t), label)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest level increase this operator can produce.
    pub fn raise(&self) -> usize {
        self.raise
    }

    /// Highest valid input level, `N - raise`; `None` when no input fits.
    pub fn guard(&self) -> Option<usize> {
        self.space.max_level().checked_sub(self.raise)
    }

    pub fn monomials(&self) -> Option<&[Monomial]> {
        match &self.body {
            Body::Monomials(ms) => Some(ms),
            _ => None,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &FockOperator) -> Result<FockOperator> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self::from_body(
            self.space,
            Body::Product(vec![self.clone(), other.clone()]),
            format!("{}·{}", self.label, other.label),
        ))
    }

    pub fn linear_combination(space: FockSpace, terms: Vec<(f64, FockOperator)>) -> Result<FockOperator> {
        if terms.iter().any(|(_, t)| t.space != space) {
            return Err(Error::SpaceMismatch);
        }
        let label = terms
            .iter()
            .map(|(c, t)| format!("{c}·{}", t.label))
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(Self::from_body(space, Body::Sum(terms), label))
    }

    /// Adjoint for the q-inner product, built structurally from `l(a)* = l*(a)`,
    /// `l_r(a)* = l_r*(a)` and self-adjointness of `W(a)`, `W_r(a)`.
    pub fn adjoint(&self) -> FockOperator {
        let body = match &self.body {
            Body::Monomials(ms) => Body::Monomials(ms.iter().map(Monomial::adjoint).collect()),
            Body::Polynomial { .. } => self.body.clone(),
            Body::Tensor(t) => Body::Tensor(t.transpose()),
            Body::Product(fs) => Body::Product(fs.iter().rev().map(FockOperator::adjoint).collect()),
            Body::Sum(ts) => Body::Sum(ts.iter().map(|(c, t)| (*c, t.adjoint())).collect()),
        };
        Self::from_body(self.space, body, format!("({})*", self.label))
    }

    fn check_input(&self, x: &FockVector) -> Result<()> {
        let xs = x.space();
        if xs.dim() != self.space.dim() || xs.q() != self.space.q() {
            return Err(Error::SpaceMismatch);
        }
        if let Some(level) = x.max_level() {
            match self.guard() {
                Some(g) if level <= g => {}
                guard => {
                    return Err(Error::GuardViolation {
                        label: self.label.clone(),
                        level,
                        guard,
                    })
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &FockVector) -> Result<FockVector> {
        self.check_input(x)?;
        Ok(FockVector::from_map_unchecked(self.space, self.apply_map(x.map())))
    }

    fn apply_map(&self, x: &BTreeMap<Word, f64>) -> BTreeMap<Word, f64> {
        let q = self.space.q();
        match &self.body {
            Body::Monomials(ms) => {
                let mut out = BTreeMap::new();
                for m in ms {
                    add_scaled(&mut out, m.coeff, &m.apply(q, x));
                }
                out
            }
            Body::Polynomial { side, letter, coeffs } => hermite_apply(q, *side, *letter, coeffs, x),
            Body::Tensor(t) => tensor_apply(t, x),
            Body::Product(fs) => {
                let mut v = x.clone();
                for f in fs.iter().rev() {
                    v = f.apply_map(&v);
                }
                v
            }
            Body::Sum(ts) => {
                let mut out = BTreeMap::new();
                for (c, t) in ts {
                    add_scaled(&mut out, *c, &t.apply_map(x));
                }
                out
            }
        }
    }

    /// Power iteration on `A*A` over all basis words of level `<= level_cap`.
    pub fn norm_estimate(&self, level_cap: usize) -> Result<NormEstimate> {
        let adjoint = self.adjoint();
        let basis = self.space.basis_up_to(level_cap)?;
        let mut x = FockVector::from_terms(self.space, basis.words().map(|w| (w.clone(), 1.0)))?;
        let x_norm = x.q_norm();
        x = x.scaled(1.0 / x_norm);
        let mut value = 0.0;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < 10_000 {
            iterations += 1;
            let ax = self.apply(&x)?;
            let rayleigh = ax.q_inner(&ax)? / x.q_inner(&x)?;
            let z = adjoint.apply(&ax)?;
            let z_norm = z.q_norm();
            let done = (rayleigh - value).abs() <= 1e-10 * rayleigh.abs();
            value = rayleigh;
            if done || z_norm == 0.0 {
                converged = true;
                break;
            }
            x = z.scaled(1.0 / z_norm);
        }
        Ok(NormEstimate {
            value: value.max(0.0).sqrt(),
            iterations,
            converged,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

type HashSparse = FxHashMap<Word, f64>;

/// Three-term recursion `p_{k+1}(W)x = (W p_k(W)x - sqrt([k]) p_{k-1}(W)x) / sqrt([k+1])`.
///
/// The iterates can hold tens of thousands of words, so they live in a hash
/// map with a fixed hasher and are sorted once at the end.
fn hermite_apply(q: QScalar, side: Side, a: Letter, coeffs: &[f64], x: &BTreeMap<Word, f64>) -> BTreeMap<Word, f64> {
    let from_right = side == Side::Right;
    let Some((&c0, rest)) = coeffs.split_first() else {
        return BTreeMap::new();
    };
    let mut out: HashSparse = HashSparse::default();
    let mut prev: HashSparse = HashSparse::default();
    let mut cur: HashSparse = x.iter().map(|(w, &c)| (w.clone(), c)).collect();
    if c0 != 0.0 {
        out.extend(cur.iter().map(|(w, &c)| (w.clone(), c0 * c)));
    }
    for (k, &ck) in rest.iter().enumerate() {
        let scale = 1.0 / q.integer(k + 1).sqrt();
        let back = q.integer(k).sqrt() * scale;
        let mut next = HashSparse::with_capacity_and_hasher(cur.len() * 2, Default::default());
        for (w, &c) in &cur {
            if c == 0.0 {
                continue;
            }
            let grown = if from_right { w.append(a) } else { w.prepend(a) };
            *next.entry(grown).or_insert(0.0) += scale * c;
            let n = w.len();
            for (run, letter, start, len) in w.run_positions() {
                if letter != a {
                    continue;
                }
                let offset = if from_right { n - start - len } else { start };
                let weight = q.pow(offset) * q.integer(len);
                if weight != 0.0 {
                    *next.entry(w.remove_from_run(run)).or_insert(0.0) += scale * weight * c;
                }
            }
        }
        if back != 0.0 {
            for (w, &c) in &prev {
                *next.entry(w.clone()).or_insert(0.0) -= back * c;
            }
        }
        if ck != 0.0 {
            for (w, &c) in &next {
                *out.entry(w.clone()).or_insert(0.0) += ck * c;
            }
        }
        prev = std::mem::replace(&mut cur, next);
    }
    out.into_iter().collect()
}

fn tensor_apply(t: &DMatrix<f64>, x: &BTreeMap<Word, f64>) -> BTreeMap<Word, f64> {
    let mut out = BTreeMap::new();
    for (w, &c) in x {
        // expand T e_{w_1} ⊗ ... ⊗ T e_{w_n} letter by letter
        let mut partial: Vec<(Vec<Letter>, f64)> = vec![(Vec::with_capacity(w.len()), c)];
        for a in w.letters() {
            let column = t.column(a as usize);
            let mut grown = Vec::with_capacity(partial.len());
            for (prefix, val) in &partial {
                for (b, &tb) in column.iter().enumerate() {
                    if tb != 0.0 {
                        let mut p = prefix.clone();
                        p.push(b as Letter);
                        grown.push((p, val * tb));
                    }
                }
            }
            partial = grown;
        }
        for (letters, val) in partial {
            *out.entry(Word::from_letters(&letters)).or_insert(0.0) += val;
        }
    }
    out
}

/// `W(ξ)`, the left Wick operator with `W(ξ)Ω = ξ`.
pub fn w_left(xi: &FockVector) -> Result<FockOperator> {
    wick_operator(xi, Side::Left)
}

/// `W_r(η) = S W(Sη) S`, the right Wick operator with `W_r(η)Ω = η`.
pub fn w_right(eta: &FockVector) -> Result<FockOperator> {
    wick_operator(eta, Side::Right)
}

fn wick_operator(xi: &FockVector, side: Side) -> Result<FockOperator> {
    let space = xi.space();
    if let Some(level) = xi.max_level() {
        if level >= space.max_level() {
            return Err(Error::GuardViolation {
                label: "Wick operator symbol".into(),
                level,
                guard: space.max_level().checked_sub(1),
            });
        }
    }
    let q = space.q();
    let mut monomials = Vec::new();
    for (w, c) in xi.iter() {
        if c == 0.0 {
            continue;
        }
        match side {
            Side::Left => monomials.extend(wick_expand(w, q).iter().map(|t| t.to_monomial(c))),
            Side::Right => monomials.extend(wick_expand(&w.reversed(), q).iter().map(|t| {
                let m = t.to_monomial(c);
                Monomial {
                    coeff: m.coeff,
                    ops: m.ops.into_iter().map(Elementary::mirrored).collect(),
                }
            })),
        }
    }
    let label = match side {
        Side::Left => "W(ξ)",
        Side::Right => "W_r(η)",
    };
    FockOperator::from_monomials(space, monomials, label)
}

/// `max |⟨Ax, y⟩_q - ⟨x, By⟩_q|` over basis words `x, y` of level `<= cap`.
pub fn adjoint_check(a: &FockOperator, b: &FockOperator, cap: usize) -> Result<f64> {
    if a.space != b.space {
        return Err(Error::SpaceMismatch);
    }
    for op in [a, b] {
        match op.guard() {
            Some(g) if cap <= g => {}
            guard => {
                return Err(Error::GuardViolation {
                    label: op.label.clone(),
                    level: cap,
                    guard,
                })
            }
        }
    }
    let space = a.space;
    let basis = space.basis_up_to(cap)?;
    let words: Vec<Word> = basis.words().cloned().collect();
    // ⟨Ax, y⟩_q = (P·Ax)_y since P is symmetric
    let sym_a: Vec<FockVector> = words
        .iter()
        .map(|w| Ok(a.apply(&FockVector::word(space, w.clone())?)?.symmetrized()))
        .collect::<Result<_>>()?;
    let sym_b: Vec<FockVector> = words
        .iter()
        .map(|w| Ok(b.apply(&FockVector::word(space, w.clone())?)?.symmetrized()))
        .collect::<Result<_>>()?;
    let mut residual: f64 = 0.0;
    for (i, x) in words.iter().enumerate() {
        for (j, y) in words.iter().enumerate() {
            residual = residual.max((sym_a[i].get(y) - sym_b[j].get(x)).abs());
        }
    }
    Ok(residual)
}

/// Max-norm of `(l*(b) l(a) - q l(a) l*(b) - (e_a, e_b) Id) x` over basis
/// words `x` of level `<= N - 1`.
pub fn q_commutation_residual(space: FockSpace, a: Letter, b: Letter) -> Result<f64> {
    let create = FockOperator::creation_left(space, a)?;
    let annihilate = FockOperator::annihilation_left(space, b)?;
    let q = space.q().value();
    let delta = if a == b { 1.0 } else { 0.0 };
    let cap = create.guard().ok_or_else(|| Error::GuardViolation {
        label: create.label().to_string(),
        level: 0,
        guard: None,
    })?;
    let basis = space.basis_up_to(cap)?;
    let mut residual: f64 = 0.0;
    for w in basis.words() {
        let x = FockVector::word(space, w.clone())?;
        let first = annihilate.apply(&create.apply(&x)?)?;
        let second = create.apply(&annihilate.apply(&x)?)?;
        let mut r = first;
        r.axpy(-q, &second);
        r.axpy(-delta, &x);
        residual = residual.max(r.max_abs());
    }
    Ok(residual)
}
