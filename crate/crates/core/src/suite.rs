//! The identity checks behind `qfock verify`, grouped by topic.
//!
//! Each group returns one [`CheckResult`] per identity, carrying the largest
//! residual seen over everything that identity was tested on.

use std::time::Instant;

use num_rational::Ratio;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::combinatorics::{exact, QScalar};
use crate::error::Result;
use crate::fock::{FockSpace, FockVector};
use crate::operators::{adjoint_check, q_commutation_residual, w_left, w_right, FockOperator};
use crate::quantization::{gaussian_moment, gaussian_moment_oracle, vacuum_trace};
use crate::symmetrizer::{dim_cap, factorization_residual, pn_matrix, rnk_matrix};
use crate::word::{Letter, Word, E};
use crate::report::CheckResult;

/// Sparse random vector with `terms` words of level `<= max_level`.
pub fn random_vector(space: FockSpace, rng: &mut ChaCha8Rng, max_level: usize, terms: usize) -> FockVector {
    let mut v = FockVector::zero(space);
    for _ in 0..terms {
        let len = rng.gen_range(0..=max_level);
        let letters: Vec<Letter> = (0..len).map(|_| rng.gen_range(0..space.dim()) as Letter).collect();
        v.add_term(Word::from_letters(&letters), rng.gen_range(-1.0..1.0))
            .expect("letters and level drawn inside the space");
    }
    v
}

/// Largest `n <= n_max` whose level fits under the dimension cap.
fn dense_levels(d: usize, n_max: usize) -> usize {
    let cap = dim_cap();
    (1..=n_max).take_while(|&n| d.checked_pow(n as u32).is_some_and(|s| s <= cap)).last().unwrap_or(0)
}

/// Symmetry, positivity and the `R_{n,k}` factorization of `P_n`, the norm
/// bound `‖R_{n,k}‖ <= C_q`, and the pure-`e` diagonal `[n]_q!`.
pub fn symmetrizer_checks(q: f64, d: usize, n_max: usize, tol: f64) -> Result<Vec<CheckResult>> {
    let qs = QScalar::new(q)?;
    let c_q = qs.c_q(1e-15)?;
    let mut out = Vec::new();
    for n in 1..=dense_levels(d, n_max) {
        let t = Instant::now();
        let p = pn_matrix(n, d, q)?;
        let params = json!({"q": q, "d": d, "n": n});
        out.push(CheckResult::new("symmetrizer symmetric", params.clone(), p.asymmetry(), 1e-12, t));

        let t = Instant::now();
        let (lo, hi) = p.eigen_extremes();
        let mut pos_params = params.clone();
        pos_params["min_eigenvalue"] = json!(lo);
        pos_params["max_eigenvalue"] = json!(hi);
        // pass iff lo > 1e-12 hi
        out.push(CheckResult::new("symmetrizer positive", pos_params, -lo / hi, -1e-12, t));

        let t = Instant::now();
        let diag = p.matrix()[(0, 0)];
        out.push(CheckResult::new("pure-e diagonal is [n]_q!", params.clone(), (diag - qs.factorial(n)).abs(), 1e-12, t));

        for k in 1..n {
            let t = Instant::now();
            let r = factorization_residual(n, k, d, q)?;
            out.push(CheckResult::new("P_n = R_{n,k}(P_{n-k} x P_k)", json!({"q": q, "d": d, "n": n, "k": k}), r, tol, t));
            let t = Instant::now();
            let norm = rnk_matrix(n, k, d, q)?.spectral_norm();
            out.push(CheckResult::new("norm R_{n,k} <= C_q", json!({"q": q, "d": d, "n": n, "k": k, "c_q": c_q}), norm, c_q * (1.0 + 1e-12), t));
        }
    }
    Ok(out)
}

/// `Σ_σ q^{inv σ} = [n]_q!` in exact rational arithmetic at `q = 1/2`.
pub fn exact_factorial_checks(n_max: usize) -> Vec<CheckResult> {
    let half = Ratio::new(1i128, 2);
    (0..=n_max)
        .map(|n| {
            let t = Instant::now();
            let lhs = exact::inversion_generating_sum(n, half);
            let rhs = exact::q_factorial(n, half);
            let residual = if lhs == rhs { 0.0 } else { 1.0 };
            CheckResult::new(
                "inversion sum equals [n]_q! exactly",
                json!({"q": "1/2", "n": n, "value": format!("{rhs}")}),
                residual,
                0.0,
                t,
            )
        })
        .collect()
}

fn words_up_to(d: usize, len: usize) -> Vec<Word> {
    (0..=len).flat_map(|n| Word::all_of_length(n, d)).collect()
}

/// Commutation, adjointness, Wick-vacuum, reversal and `W(ξ)η = W_r(η)ξ`.
pub fn relation_checks(space: FockSpace, tol: f64, rng: &mut ChaCha8Rng, samples: usize) -> Result<Vec<CheckResult>> {
    let n = space.max_level();
    let d = space.dim();
    let q = space.q().value();
    let params = json!({"q": q, "d": d, "max_level": n});
    let mut out = Vec::new();
    let letters: Vec<Letter> = (0..d).map(|a| a as Letter).collect();

    let t = Instant::now();
    let mut r: f64 = 0.0;
    for &a in &letters {
        for &b in &letters {
            r = r.max(q_commutation_residual(space, a, b)?);
        }
    }
    out.push(CheckResult::new("q-commutation relation", params.clone(), r, tol, t));

    let cap = n - 1;
    for (name, left) in [("adjoint l / l*", true), ("adjoint l_r / l_r*", false)] {
        let t = Instant::now();
        let mut r: f64 = 0.0;
        for &a in &letters {
            let (c, ann) = if left {
                (FockOperator::creation_left(space, a)?, FockOperator::annihilation_left(space, a)?)
            } else {
                (FockOperator::creation_right(space, a)?, FockOperator::annihilation_right(space, a)?)
            };
            r = r.max(adjoint_check(&c, &ann, cap)?);
        }
        out.push(CheckResult::new(name, params.clone(), r, tol, t));
    }

    let omega = FockVector::vacuum(space);
    let t = Instant::now();
    let mut r: f64 = 0.0;
    for w in words_up_to(d, 5.min(n - 1)) {
        let xi = FockVector::word(space, w)?;
        r = r.max(w_left(&xi)?.apply(&omega)?.minus(&xi).max_abs());
        r = r.max(w_right(&xi)?.apply(&omega)?.minus(&xi).max_abs());
    }
    out.push(CheckResult::new("Wick vacuum W(w)Ω = w", params.clone(), r, tol, t));

    let t = Instant::now();
    let mut r: f64 = 0.0;
    let basis = space.basis()?;
    for x in basis.words() {
        let x = FockVector::word(space, x.clone())?;
        let sx = x.reversed();
        r = r.max((sx.q_norm() - x.q_norm()).abs());
        r = r.max(sx.reversed().minus(&x).max_abs());
    }
    out.push(CheckResult::new("reversal S isometric involution", params.clone(), r, tol, t));

    let t = Instant::now();
    let mut r: f64 = 0.0;
    for w in words_up_to(d, 3.min(n - 1)) {
        let xi = FockVector::word(space, w.clone())?;
        let left = w_left(&xi)?;
        let right = w_right(&xi.reversed())?;
        for x in space.basis_up_to(n - w.len())?.words() {
            let x = FockVector::word(space, x.clone())?;
            let lhs = left.apply(&x.reversed())?.reversed();
            r = r.max(lhs.minus(&right.apply(&x)?).max_abs());
        }
    }
    out.push(CheckResult::new("S W(ξ) S = W_r(Sξ)", params.clone(), r, tol, t));

    let t = Instant::now();
    let mut r: f64 = 0.0;
    for w in words_up_to(d, 2.min(n - 1)) {
        let xi = FockVector::word(space, w.clone())?;
        r = r.max(adjoint_check(&w_left(&xi)?, &w_left(&xi.reversed())?, n - w.len())?);
    }
    out.push(CheckResult::new("W(ξ)* = W(Sξ)", params.clone(), r, tol, t));

    let t = Instant::now();
    let mut r: f64 = 0.0;
    for _ in 0..samples {
        let lxi = rng.gen_range(0..n);
        let leta = rng.gen_range(0..=(n - lxi).min(n - 1));
        let xi = random_vector(space, rng, lxi, 4);
        let eta = random_vector(space, rng, leta, 4);
        let lhs = w_left(&xi)?.apply(&eta)?;
        let rhs = w_right(&eta)?.apply(&xi)?;
        r = r.max(lhs.minus(&rhs).max_abs());
    }
    let mut p = params.clone();
    p["samples"] = json!(samples);
    out.push(CheckResult::new("W(ξ)η = W_r(η)ξ", p, r, tol, t));
    Ok(out)
}

/// `‖[W(ξ), W_r(η)]x‖_q` over random triples with total level `<= N`.
pub fn commutant_check(space: FockSpace, tol: f64, rng: &mut ChaCha8Rng, samples: usize) -> Result<CheckResult> {
    let n = space.max_level();
    let t = Instant::now();
    let mut r: f64 = 0.0;
    for _ in 0..samples {
        let lxi = rng.gen_range(0..n);
        let leta = rng.gen_range(0..=(n - lxi).min(n - 1));
        let lx = n - lxi - leta;
        let xi = random_vector(space, rng, lxi, 4);
        let eta = random_vector(space, rng, leta, 4);
        let x = random_vector(space, rng, lx, 4);
        let a = w_left(&xi)?;
        let b = w_right(&eta)?;
        let ab = a.apply(&b.apply(&x)?)?;
        let ba = b.apply(&a.apply(&x)?)?;
        r = r.max(ab.minus(&ba).q_norm());
    }
    Ok(CheckResult::new(
        "commutator [W(ξ), W_r(η)] vanishes",
        json!({"q": space.q().value(), "d": space.dim(), "max_level": n, "samples": samples}),
        r,
        tol,
        t,
    ))
}

/// `τ(ab) = τ(ba)` for `a, b` Wick operators of words of length `<= 3`
/// (fewer when the truncation is too shallow).
pub fn trace_check(space: FockSpace, tol: f64) -> Result<CheckResult> {
    let len = 3.min(space.max_level() / 2);
    let t = Instant::now();
    let ops: Vec<FockOperator> = words_up_to(space.dim(), len)
        .into_iter()
        .map(|w| w_left(&FockVector::word(space, w)?))
        .collect::<Result<_>>()?;
    let mut r: f64 = 0.0;
    for a in &ops {
        for b in &ops {
            let ab = vacuum_trace(&a.compose(b)?)?.0;
            let ba = vacuum_trace(&b.compose(a)?)?.0;
            r = r.max((ab - ba).abs());
        }
    }
    Ok(CheckResult::new(
        "trace symmetry τ(ab) = τ(ba)",
        json!({"q": space.q().value(), "d": space.dim(), "word_length": len}),
        r,
        tol,
        t,
    ))
}

/// `τ(W(e)^k)` against the pair-partition sum for `k <= k_max`.
pub fn moment_check(q: f64, k_max: usize, tol: f64) -> Result<CheckResult> {
    let t = Instant::now();
    let mut r: f64 = 0.0;
    for k in 0..=k_max {
        r = r.max((gaussian_moment(k, q, k.max(1))? - gaussian_moment_oracle(k, q)?).abs());
    }
    Ok(CheckResult::new("moments match pair partitions", json!({"q": q, "k_max": k_max}), r, tol, t))
}

/// Truncated `‖l(e)‖` on one letter against `max(1, 1/sqrt(1-q))`.
pub fn creation_norm_check(q: f64, max_level: usize) -> Result<CheckResult> {
    let t = Instant::now();
    let space = FockSpace::new(1, max_level, q)?;
    let est = FockOperator::creation_left(space, E)?.norm_estimate(max_level - 1)?;
    let bound = if q > 0.0 { 1.0 / (1.0 - q).sqrt() } else { 1.0 };
    Ok(CheckResult::new(
        "norm of l(e) within max(1, 1/sqrt(1-q))",
        json!({"q": q, "max_level": max_level, "estimate": est.value, "iterations": est.iterations, "converged": est.converged}),
        est.value,
        bound + 1e-9,
        t,
    ))
}

/// The full `verify` suite.
pub fn verify_suite(q: f64, d: usize, max_level: usize, tol: f64, rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let space = FockSpace::new(d, max_level, q)?;
    let mut out = symmetrizer_checks(q, d, max_level.min(6), tol)?;
    out.extend(exact_factorial_checks(7));
    out.extend(relation_checks(space, tol, rng, 100)?);
    out.push(commutant_check(space, tol, rng, 100)?);
    out.push(trace_check(space, tol)?);
    out.push(moment_check(q, 10, tol)?);
    out.push(creation_norm_check(q, max_level)?);
    Ok(out)
}
