//! Rademacher vectors in the span of the powers of `e`, the commutator-range
//! vectors built from them, the weak-decay pairings and the exponential
//! estimate behind their tails.
//!
//! Functions of `W(e)` are realized through the Jacobi matrix of `W(e)` on
//! `span{e^⊗k : k ≤ M}` in the orthonormal basis `ẽ_k = e^⊗k / sqrt([k]_q!)`.
//! The spectral level `M` is independent of the Fock truncation used for the
//! operators: every vector built from a function of `W(e)` is applied through
//! its q-Hermite expansion, and the Fock truncation is chosen high enough for
//! all applications to be exact.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::QScalar;
use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::operators::{w_left, w_right, FockOperator, Side};
use crate::word::{Letter, Word, E};

/// Values of `|r_i|` below this are treated as zeros of the sine, where the
/// sign convention is `+1`.
const SINE_ZERO: f64 = 1e-12;

/// `|I|` at or below this counts as exactly zero in the decay-ratio check.
pub const PAIRING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct JacobiData {
    q: f64,
    level: usize,
    #[serde(skip)]
    matrix: DMatrix<f64>,
    /// Ascending.
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`, first entry `>= 0`.
    #[serde(skip)]
    vectors: DMatrix<f64>,
}

impl JacobiData {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j).iter().copied().collect()
    }

    /// Orthonormal coefficients of `f(W(e))Ω` for `f` given on the atoms.
    pub fn functional_calculus(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.level + 1];
        for (j, &r) in values.iter().enumerate() {
            let col = self.vectors.column(j);
            let scale = r * col[0];
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += scale * v;
            }
        }
        out
    }
}

/// Jacobi matrix of `W(e)` on levels `0..=level`: zero diagonal,
/// off-diagonal `sqrt([n+1]_q)`.
pub fn build_jacobi(level: usize, q: f64) -> Result<JacobiData> {
    if level < 1 {
        return Err(Error::InvalidArgument("Jacobi level must be at least 1".into()));
    }
    let qs = QScalar::new(q)?;
    let size = level + 1;
    let mut matrix = DMatrix::zeros(size, size);
    for n in 0..level {
        let b = qs.integer(n + 1).sqrt();
        matrix[(n, n + 1)] = b;
        matrix[(n + 1, n)] = b;
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(size, size);
    let mut eigenvalues = Vec::with_capacity(size);
    let mut weights = Vec::with_capacity(size);
    for (j, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        if col[0] < 0.0 {
            col.neg_mut();
        }
        weights.push(col[0] * col[0]);
        eigenvalues.push(eig.eigenvalues[src]);
        vectors.set_column(j, &col);
    }
    Ok(JacobiData {
        q,
        level,
        matrix,
        eigenvalues,
        weights,
        vectors,
    })
}

/// `η_i = r_i(W(e))Ω`, with `r_i` the `i`-th Rademacher function read off
/// the spectral quantiles of the Jacobi matrix.
#[derive(Debug, Clone, Serialize)]
pub struct RademacherVector {
    pub index: u32,
    /// `r_i` on the atoms, ascending eigenvalue order.
    pub signs: Vec<f64>,
    /// Coefficients in the orthonormal basis `ẽ_k`.
    pub orthonormal: Vec<f64>,
    /// q-norm before rescaling to a unit vector.
    pub raw_norm: f64,
}

impl RademacherVector {
    /// Coefficient `a_k` of `e^⊗k`.
    pub fn coefficient(&self, k: usize, q: QScalar) -> f64 {
        self.orthonormal.get(k).map_or(0.0, |b| b / q.factorial(k).sqrt())
    }

    /// `⟨η_i, e^⊗k⟩_q = a_k [k]_q!`.
    pub fn pairing_with_power(&self, k: usize, q: QScalar) -> f64 {
        self.orthonormal.get(k).map_or(0.0, |b| b * q.factorial(k).sqrt())
    }

    /// `⟨η_i, Ω⟩_q`.
    pub fn vacuum_overlap(&self) -> f64 {
        self.orthonormal[0]
    }

    pub fn level(&self) -> usize {
        self.orthonormal.len() - 1
    }

    pub fn to_vector(&self, space: FockSpace) -> Result<FockVector> {
        let q = space.q();
        FockVector::from_terms(
            space,
            self.orthonormal
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(|(k, b)| (Word::power(E, k), b / q.factorial(k).sqrt())),
        )
    }

    /// `W(η_i)` or `W_r(η_i)` through the q-Hermite expansion.
    pub fn operator(&self, space: FockSpace, side: Side) -> Result<FockOperator> {
        FockOperator::hermite_series(space, side, E, self.orthonormal.clone())
    }
}

pub fn rademacher_vector(index: u32, jacobi: &JacobiData) -> Result<RademacherVector> {
    let atoms = jacobi.atoms();
    let needed = 1usize.checked_shl(index).filter(|&n| n <= atoms);
    let Some(_) = needed else {
        return Err(Error::ResolutionExhausted {
            index,
            needed: 1usize.checked_shl(index).unwrap_or(usize::MAX),
            atoms,
        });
    };
    let freq = (1u64 << index) as f64;
    let mut cumulative = 0.0;
    let signs: Vec<f64> = jacobi
        .weights
        .iter()
        .map(|&w| {
            // midpoint of the atom's mass, read from the top of the spectrum
            let u = cumulative + 0.5 * w;
            cumulative += w;
            let s = (freq * std::f64::consts::PI * (1.0 - u)).sin();
            if s.abs() < SINE_ZERO || s > 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let mut orthonormal = jacobi.functional_calculus(&signs);
    let raw_norm = orthonormal.iter().map(|b| b * b).sum::<f64>().sqrt();
    orthonormal.iter_mut().for_each(|b| *b /= raw_norm);
    Ok(RademacherVector {
        index,
        signs,
        orthonormal,
        raw_norm,
    })
}

/// Level needed to apply `W(η)`, `W_r(η)` and `W(η)` again to `z`.
fn commutator_level(eta_level: usize, z_level: usize) -> usize {
    z_level + 3 * eta_level
}

#[derive(Debug, Clone)]
pub struct CommutatorRange {
    /// `(W(η) - W_r(η)) W(η) z`.
    pub z_i: FockVector,
    /// `W_r(η) W(η) z`.
    pub y_i: FockVector,
    /// `‖z_i - (z - y_i)‖_q = ‖W(η)² z - z‖_q`.
    pub spectral_defect: f64,
}

/// `z_i` and `y_i` for the Rademacher vector `eta`, on a Fock space deep
/// enough for three applications of functions of `W(e)`.
pub fn commutator_range_vector(eta: &RademacherVector, z: &FockVector) -> Result<CommutatorRange> {
    let z_level = z.max_level().unwrap_or(0);
    let space = z.space().with_max_level(commutator_level(eta.level(), z_level).max(1));
    let z = z.rehome(space)?;
    let left = eta.operator(space, Side::Left)?;
    let right = eta.operator(space, Side::Right)?;
    let wz = left.apply(&z)?;
    let y_i = right.apply(&wz)?;
    let wwz = left.apply(&wz)?;
    let z_i = wwz.minus(&y_i);
    let spectral_defect = z_i.minus(&z.minus(&y_i)).q_norm();
    Ok(CommutatorRange {
        z_i,
        y_i,
        spectral_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayConfig {
    pub dim: usize,
    pub z: Word,
    pub steps: u32,
    pub cut: Option<usize>,
    /// Number of pairings `⟨η_i, e^⊗k⟩_q` reported per step.
    pub pairings: usize,
}

impl DecayConfig {
    pub fn default_cut(&self, t: &Word) -> usize {
        (2 * (self.z.len() + t.len())).max(8)
    }

    pub fn cut_level(&self, t: &Word) -> usize {
        self.cut.unwrap_or_else(|| self.default_cut(t))
    }
}

/// Spectral level for a decay run: at least `max_level`, four atoms per
/// half-period of the finest Rademacher function, and odd so that the atom
/// count is even and no atom sits at the centre of the spectrum.
pub fn spectral_level(max_level: usize, steps: u32) -> usize {
    let resolution = 1usize.checked_shl(steps + 2).unwrap_or(usize::MAX / 2) - 1;
    let m = max_level.max(resolution).max(1);
    if m % 2 == 0 {
        m + 1
    } else {
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayStep {
    pub i: u32,
    /// `⟨y_i, t⟩_q`.
    pub direct: f64,
    /// `⟨W_r(z)η_i, W(t)η_i⟩_q`.
    pub transposed: f64,
    pub residual: f64,
    /// `Σ_{k < cut} |a_k ⟨W_r(z)e^⊗k, W(t)η_i⟩_q|`.
    pub head: f64,
    /// The same sum over `k >= cut`.
    pub tail: f64,
    /// `tail / |q|^cut`.
    pub tail_constant: Option<f64>,
    pub eta_raw_norm: f64,
    pub eta_vacuum_overlap: f64,
    /// `max_k |a_k| sqrt([k]_q!)`.
    pub coefficient_peak: f64,
    /// `⟨η_i, e^⊗k⟩_q` for small `k`.
    pub pairings: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayChecks {
    pub pairing_identity: bool,
    pub final_ratio: bool,
    pub tail_bound: bool,
    pub trend: bool,
}

impl DecayChecks {
    pub fn all(&self) -> bool {
        self.pairing_identity && self.final_ratio && self.tail_bound && self.trend
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub q: f64,
    pub dim: usize,
    pub z: Word,
    pub t: Word,
    pub steps: u32,
    pub spectral_level: usize,
    pub fock_level: usize,
    pub cut: usize,
    pub atoms: usize,
    /// `C` with `Σ_{k>=N'} |T_i(k)| <= C |q|^{N'}` for every `i` and every
    /// `N'` between the cut and the spectral level.
    pub tail_constant: Option<f64>,
    /// Least-squares slope of `log2 |I_i|` in `i`, over nonzero values.
    pub decay_rate: Option<f64>,
    pub max_residual: f64,
    pub rows: Vec<DecayStep>,
    pub checks: DecayChecks,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.checks.all()
    }

    pub fn csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("i,direct,transposed,residual,head,tail\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.i, r.direct, r.transposed, r.residual, r.head, r.tail
            );
        }
        out
    }
}

fn normalized_power(space: FockSpace, k: usize) -> Result<FockVector> {
    FockVector::from_terms(space, [(Word::power(E, k), 1.0 / space.q().factorial(k).sqrt())])
}

/// Pairings `I_i = ⟨y_i, t⟩_q` for `i = 1..=steps`, computed directly and
/// through `⟨W_r(z)η_i, W(t)η_i⟩_q`, with the head/tail split at the cut.
pub fn weak_decay_experiment(config: &DecayConfig, t: &Word, jacobi: &JacobiData) -> Result<DecayReport> {
    let mut reports = weak_decay_experiments(config, std::slice::from_ref(t), jacobi)?;
    Ok(reports.remove(0))
}

struct Step {
    eta: RademacherVector,
    eta_vec: FockVector,
    /// `W_r(η_i)W(η_i)z`.
    y: FockVector,
    /// `W_r(z)η_i`.
    wr_z_eta: FockVector,
}

/// [`weak_decay_experiment`] for several `t` at once; the Rademacher vectors
/// and the `y_i` are computed once.
pub fn weak_decay_experiments(config: &DecayConfig, ts: &[Word], jacobi: &JacobiData) -> Result<Vec<DecayReport>> {
    if config.z.is_power_of(E) {
        return Err(Error::PureWord(config.z.to_string()));
    }
    let m = jacobi.level();
    let lz = config.z.len();
    let lt = ts.iter().map(Word::len).max().unwrap_or(0);
    let fock_level = (lz + 2 * m).max(m + lt).max(m + lz).max(1);
    let space = FockSpace::new(config.dim, fock_level, jacobi.q())?;
    space.check_word(&config.z)?;
    for t in ts {
        space.check_word(t)?;
    }
    let z = FockVector::word(space, config.z.clone())?;
    let wr_z = w_right(&z)?;
    let powers: Vec<FockVector> = (0..=m).map(|k| normalized_power(space, k)).collect::<Result<_>>()?;
    let wr_z_powers: Vec<FockVector> = powers.par_iter().map(|p| wr_z.apply(p)).collect::<Result<_>>()?;
    let steps: Vec<Step> = (1..=config.steps)
        .into_par_iter()
        .map(|i| {
            let eta = rademacher_vector(i, jacobi)?;
            let eta_vec = eta.to_vector(space)?;
            let left = eta.operator(space, Side::Left)?;
            let right = eta.operator(space, Side::Right)?;
            let y = right.apply(&left.apply(&z)?)?;
            let wr_z_eta = wr_z.apply(&eta_vec)?;
            Ok(Step {
                eta,
                eta_vec,
                y,
                wr_z_eta,
            })
        })
        .collect::<Result<_>>()?;
    let shared = Shared {
        config,
        jacobi,
        space,
        fock_level,
        powers: &powers,
        wr_z_powers: &wr_z_powers,
        steps: &steps,
    };
    ts.iter().map(|t| shared.report(t)).collect()
}

struct Shared<'a> {
    config: &'a DecayConfig,
    jacobi: &'a JacobiData,
    space: FockSpace,
    fock_level: usize,
    powers: &'a [FockVector],
    wr_z_powers: &'a [FockVector],
    steps: &'a [Step],
}

impl Shared<'_> {
    fn report(&self, t_word: &Word) -> Result<DecayReport> {
        let (config, space) = (self.config, self.space);
        let m = self.jacobi.level();
        let q = space.q();
        let qabs = q.value().abs();
        let cut = self.config.cut_level(t_word);
        let t = FockVector::word(space, t_word.clone())?;
        let w_t = w_left(&t)?;
        let w_t_powers: Vec<FockVector> = self.powers.par_iter().map(|p| w_t.apply(p)).collect::<Result<_>>()?;

        // i-independent bound on |T_i(k)|, from |⟨η_i, ẽ_k⟩| <= 1
        let reach = config.z.len() + t_word.len();
        let slack = (1.0 + 1e-6f64).powi(2);
        let beta: Vec<f64> = (0..=m)
            .into_par_iter()
            .map(|k| {
                let lo = k.saturating_sub(reach);
                let hi = (k + reach).min(m);
                let mut s = 0.0;
                for k2 in lo..=hi {
                    s += self.wr_z_powers[k].q_inner(&w_t_powers[k2])?.abs();
                }
                Ok(slack * s)
            })
            .collect::<Result<_>>()?;
        let mut tail_constant: Option<f64> = Some(0.0);
        let mut suffix = 0.0;
        for n in (cut..=m).rev() {
            suffix += beta[n];
            let scale = qabs.powi(n as i32);
            tail_constant = match tail_constant {
                Some(c) if scale > 0.0 => Some(c.max(suffix / scale)),
                Some(c) if suffix == 0.0 => Some(c),
                _ => None,
            };
        }

        let rows: Vec<DecayStep> = self
            .steps
            .par_iter()
            .map(|step| {
                let eta = &step.eta;
                let direct = t.q_inner(&step.y)?;
                let w_t_eta = w_t.apply(&step.eta_vec)?;
                let transposed = step.wr_z_eta.q_inner(&w_t_eta)?;
                let (mut head, mut tail) = (0.0, 0.0);
                for k in 0..=m {
                    let b = eta.orthonormal[k];
                    if b == 0.0 {
                        continue;
                    }
                    let term = (b * self.wr_z_powers[k].q_inner(&w_t_eta)?).abs();
                    if k < cut {
                        head += term;
                    } else {
                        tail += term;
                    }
                }
                let scale = qabs.powi(cut as i32);
                Ok(DecayStep {
                    i: eta.index,
                    direct,
                    transposed,
                    residual: (direct - transposed).abs(),
                    head,
                    tail,
                    tail_constant: (scale > 0.0).then(|| tail / scale),
                    eta_raw_norm: eta.raw_norm,
                    eta_vacuum_overlap: eta.vacuum_overlap(),
                    coefficient_peak: eta.orthonormal.iter().fold(0.0, |a: f64, b| a.max(b.abs())),
                    pairings: (0..config.pairings.min(m + 1)).map(|k| eta.pairing_with_power(k, q)).collect(),
                })
            })
            .collect::<Result<_>>()?;

        let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        let magnitudes: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.direct.abs() > PAIRING_FLOOR)
            .map(|r| (r.i as f64, r.direct.abs().log2()))
            .collect();
        let decay_rate = slope(&magnitudes);
        let final_ratio = match (rows.first(), rows.last()) {
            (Some(first), Some(last)) => last.direct.abs() <= 0.2 * first.direct.abs() + PAIRING_FLOOR,
            _ => true,
        };
        let tail_bound = rows.iter().all(|r| match tail_constant {
            Some(c) => r.tail <= c * qabs.powi(cut as i32) * (1.0 + 1e-9),
            None => false,
        });
        let checks = DecayChecks {
            pairing_identity: max_residual <= 1e-9,
            final_ratio,
            tail_bound,
            trend: decay_rate.is_none_or(|s| s <= 0.0),
        };
        Ok(DecayReport {
            q: q.value(),
            dim: config.dim,
            z: config.z.clone(),
            t: t_word.clone(),
            steps: config.steps,
            spectral_level: m,
            fock_level: self.fock_level,
            cut,
            atoms: self.jacobi.atoms(),
            tail_constant,
            decay_rate,
            max_residual,
            rows,
            checks,
        })
    }
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / (|q|^k sqrt([k]_q!))`, zero when both vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KeyEstimate {
    pub q: f64,
    pub annihilated: Vec<Letter>,
    pub word: Vec<Letter>,
    /// Fitted at the first `k`, including the safety factor.
    pub constant: f64,
    pub safety: f64,
    pub rows: Vec<EstimateRow>,
    /// `lhs(k) <= rhs(k)` on the whole range.
    pub dominated: bool,
    /// Largest `ratio(k+1) / ratio(k)` over the second half of the range.
    pub tail_growth: f64,
    pub eventually_nonincreasing: bool,
}

impl KeyEstimate {
    pub fn passed(&self) -> bool {
        self.dominated && self.eventually_nonincreasing
    }

    pub fn csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("k,lhs,rhs,ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.k, r.lhs, r.rhs, r.ratio);
        }
        out
    }
}

/// `lhs(k) = ‖l_r*(i_v)···l_r*(i_1)(j_1 ⊗ ··· ⊗ j_r ⊗ e^⊗(k-r))‖_q` against
/// `Ĉ |q|^k sqrt([k]_q!)`, `Ĉ` fitted at the first `k` and scaled by `safety`.
///
/// The vectors involved have at most `r` letters other than `e`, so the
/// sparse representation stays polynomial in `k`.
pub fn key_estimate_check(
    annihilated: &[Letter],
    word: &[Letter],
    ks: RangeInclusive<usize>,
    q: f64,
    safety: f64,
) -> Result<KeyEstimate> {
    let qs = QScalar::new(q)?;
    let Some((&last, first)) = annihilated.split_last() else {
        return Err(Error::InvalidArgument("at least one annihilated letter is required".into()));
    };
    if first.iter().any(|&a| a != E) || last == E {
        return Err(Error::InvalidArgument(
            "annihilated letters must be e except the last, which must differ from e".into(),
        ));
    }
    let r = word.len();
    if ks.is_empty() || *ks.start() < r {
        return Err(Error::InvalidArgument(format!(
            "k range {ks:?} must be nonempty and start at or above the word length {r}"
        )));
    }
    let dim = annihilated.iter().chain(word).copied().max().unwrap_or(E) as usize + 1;
    let rows: Vec<(usize, f64, f64)> = ks
        .clone()
        .into_par_iter()
        .map(|k| {
            let space = FockSpace::new(dim, k.max(1), q)?;
            let mut letters = word.to_vec();
            letters.resize(k, E);
            let mut v = FockVector::word(space, Word::from_letters(&letters))?;
            for &a in annihilated {
                v = FockOperator::annihilation_right(space, a)?.apply(&v)?;
            }
            let lhs = v.q_norm();
            let scale = qs.value().abs().powi(k as i32) * qs.factorial(k).sqrt();
            Ok((k, lhs, scale))
        })
        .collect::<Result<_>>()?;
    let ratio = |lhs: f64, scale: f64| if lhs == 0.0 { 0.0 } else { lhs / scale };
    let (_, lhs0, scale0) = rows[0];
    let constant = safety * ratio(lhs0, scale0);
    let rows: Vec<EstimateRow> = rows
        .into_iter()
        .map(|(k, lhs, scale)| EstimateRow {
            k,
            lhs,
            rhs: constant * scale,
            ratio: ratio(lhs, scale),
        })
        .collect();
    let dominated = rows.iter().all(|r| r.lhs <= r.rhs);
    let mid = rows.len() / 2;
    let tail_growth = rows[mid..]
        .windows(2)
        .map(|w| if w[0].ratio == 0.0 { if w[1].ratio == 0.0 { 1.0 } else { f64::INFINITY } } else { w[1].ratio / w[0].ratio })
        .fold(0.0, f64::max);
    Ok(KeyEstimate {
        q,
        annihilated: annihilated.to_vec(),
        word: word.to_vec(),
        constant,
        safety,
        rows,
        dominated,
        tail_growth,
        eventually_nonincreasing: tail_growth <= 1.0 + 1e-9,
    })
}
