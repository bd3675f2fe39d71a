//! Symmetric-group combinatorics and q-number arithmetic.
//!
//! Everything here is a pure function of its inputs. Floating-point q-numbers
//! use the closed forms `[k]_q = (1 - q^k) / (1 - q)`; the [`exact`] submodule
//! repeats the small cases over the rationals.

use serde::Serialize;

use crate::error::{Error, Result};

/// Deformation parameter, validated to lie in `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct QScalar(f64);

impl QScalar {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q > -1.0 && q < 1.0 {
            Ok(QScalar(q))
        } else {
            Err(Error::InvalidQ(q))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `q^k`, with `q^0 = 1` also at `q = 0`.
    #[inline]
    pub fn pow(self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.0.powi(k as i32)
        }
    }

    #[inline]
    pub fn integer(self, k: usize) -> f64 {
        q_int(k, self.0)
    }

    pub fn factorial(self, n: usize) -> f64 {
        (1..=n).map(|k| q_int(k, self.0)).product()
    }

    pub fn c_q(self, tol: f64) -> Result<f64> {
        c_q(self.0, tol)
    }

    /// Cached `[k]_q` and `[k]_q!` for `k = 0..=kmax`.
    pub fn table(self, kmax: usize) -> QTable {
        QTable::new(self, kmax)
    }
}

/// Write-once cache of q-integers and q-factorials.
#[derive(Debug, Clone)]
pub struct QTable {
    q: QScalar,
    integers: Vec<f64>,
    factorials: Vec<f64>,
}

impl QTable {
    fn new(q: QScalar, kmax: usize) -> Self {
        let integers: Vec<f64> = (0..=kmax).map(|k| q.integer(k)).collect();
        let mut factorials = Vec::with_capacity(kmax + 1);
        let mut acc = 1.0;
        factorials.push(acc);
        for &ik in &integers[1..] {
            acc *= ik;
            factorials.push(acc);
        }
        QTable {
            q,
            integers,
            factorials,
        }
    }

    pub fn q(&self) -> QScalar {
        self.q
    }

    pub fn kmax(&self) -> usize {
        self.integers.len() - 1
    }

    pub fn integer(&self, k: usize) -> f64 {
        self.integers[k]
    }

    pub fn factorial(&self, k: usize) -> f64 {
        self.factorials[k]
    }
}

#[inline]
fn q_int(k: usize, q: f64) -> f64 {
    if k == 0 {
        0.0
    } else if q == 0.0 {
        1.0
    } else {
        (1.0 - q.powi(k as i32)) / (1.0 - q)
    }
}

pub fn q_integer(k: usize, q: f64) -> Result<f64> {
    Ok(QScalar::new(q)?.integer(k))
}

pub fn q_factorial(n: usize, q: f64) -> Result<f64> {
    Ok(QScalar::new(q)?.factorial(n))
}

/// Truncated surrogate for `C_q = prod_{i >= 1} (1 - |q|^i)^{-1}`.
///
/// Factors are multiplied until `factor - 1 < tol`; the remaining factors are
/// replaced by the bound `exp(|q|^{i+1} / ((1 - |q|)(1 - |q|^{i+1})))` on their
/// product, so the result never undershoots the infinite product and is
/// nondecreasing in `|q|`.
pub fn c_q(q: f64, tol: f64) -> Result<f64> {
    QScalar::new(q)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let x = q.abs();
    if x == 0.0 {
        return Ok(1.0);
    }
    let mut product = 1.0;
    let mut i = 1;
    loop {
        let y = x.powi(i);
        let factor = 1.0 / (1.0 - y);
        product *= factor;
        if factor - 1.0 < tol {
            break;
        }
        i += 1;
    }
    let next = x.powi(i + 1);
    let tail = next / ((1.0 - x) * (1.0 - next));
    Ok(product * tail.exp())
}

/// Gaussian binomial `[n choose m]_q`.
pub fn gaussian_binomial(n: usize, m: usize, q: f64) -> Result<f64> {
    let q = QScalar::new(q)?;
    if m > n {
        return Ok(0.0);
    }
    Ok(q.factorial(n) / (q.factorial(m) * q.factorial(n - m)))
}

/// A bijection of `{0, .., n-1}`, stored as the image of each index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &image in &mapping {
            if image >= n || seen[image] {
                return Err(Error::InvalidPermutation(format!("{mapping:?}")));
            }
            seen[image] = true;
        }
        Ok(Permutation(mapping))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of pairs `i < j` with `p(i) > p(j)`.
    pub fn inversions(&self) -> usize {
        let p = &self.0;
        let mut count = 0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    count += 1;
                }
            }
        }
        count
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::InvalidPermutation(format!(
                "cannot compose permutations of sizes {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Permutation(other.0.iter().map(|&i| self.0[i]).collect()))
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &image) in self.0.iter().enumerate() {
            inv[image] = i;
        }
        Permutation(inv)
    }

    /// The natural action on tensors: position `i` of the result receives the
    /// entry at position `p(i)` of the input.
    pub fn act<T: Copy>(&self, items: &[T]) -> Vec<T> {
        debug_assert_eq!(items.len(), self.len());
        self.0.iter().map(|&src| items[src]).collect()
    }
}

/// All of `S_n` in lexicographic order.
pub fn permutations(n: usize) -> Permutations {
    Permutations {
        next: Some((0..n).collect()),
    }
}

pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Iterator for Permutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // next permutation in lexicographic order
        let n = succ.len();
        if n > 1 {
            let mut i = n - 1;
            while i > 0 && succ[i - 1] >= succ[i] {
                i -= 1;
            }
            if i > 0 {
                let mut j = n - 1;
                while succ[j] <= succ[i - 1] {
                    j -= 1;
                }
                succ.swap(i - 1, j);
                succ[i..].reverse();
                self.next = Some(succ);
            }
        }
        Some(Permutation(current))
    }
}

/// All `m`-subsets of `{0, .., n-1}` as increasing index vectors, in
/// lexicographic order.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == m {
            out.push(acc.clone());
            return;
        }
        let remaining = m - acc.len();
        for i in start..=n - remaining {
            acc.push(i);
            rec(i + 1, n, m, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if m <= n {
        rec(0, n, m, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// Minimal-inversion representatives of the cosets of `S_{n-m} × S_m` in
/// `S_n`, paired with their inversion counts.
///
/// These are the shuffles: permutations increasing on the first `n - m`
/// positions and on the last `m`. One representative is produced per
/// `m`-subset (the images of the last block), so there are `C(n, m)` of them.
pub fn shuffle_representatives(n: usize, m: usize) -> Result<Vec<(Permutation, usize)>> {
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "shuffle block size {m} exceeds n = {n}"
        )));
    }
    let reps = subsets(n, m)
        .into_iter()
        .map(|tail| {
            let mut in_tail = vec![false; n];
            for &t in &tail {
                in_tail[t] = true;
            }
            let mut mapping: Vec<usize> = (0..n).filter(|&i| !in_tail[i]).collect();
            // inversions: head image a above tail image b
            let inversions = mapping
                .iter()
                .map(|&a| tail.iter().filter(|&&b| b < a).count())
                .sum();
            mapping.extend_from_slice(&tail);
            (Permutation(mapping), inversions)
        })
        .collect();
    Ok(reps)
}

/// A perfect matching of `{0, .., size-1}`; each pair is stored as `(a, b)`
/// with `a < b`, pairs sorted by their first element.
pub type Pairing = Vec<(usize, usize)>;

pub fn pair_partitions(size: usize) -> Result<Vec<Pairing>> {
    if size % 2 != 0 {
        return Err(Error::OddSize(size));
    }
    fn rec(free: &mut Vec<usize>, acc: &mut Pairing, out: &mut Vec<Pairing>) {
        if free.is_empty() {
            out.push(acc.clone());
            return;
        }
        let first = free.remove(0);
        for idx in 0..free.len() {
            let partner = free.remove(idx);
            acc.push((first, partner));
            rec(free, acc, out);
            acc.pop();
            free.insert(idx, partner);
        }
        free.insert(0, first);
    }
    let mut out = Vec::new();
    rec(&mut (0..size).collect(), &mut Vec::new(), &mut out);
    Ok(out)
}

/// Number of pairs `{a < b}`, `{c < d}` with `a < c < b < d`.
pub fn crossings(pairing: &[(usize, usize)]) -> usize {
    let mut count = 0;
    for (i, &(a, b)) in pairing.iter().enumerate() {
        for &(c, d) in &pairing[i + 1..] {
            if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                count += 1;
            }
        }
    }
    count
}

/// Rational-arithmetic cross-checks for small `n`.
pub mod exact {
    use num_rational::Ratio;

    use super::permutations;

    pub type Rational = Ratio<i128>;

    pub fn q_integer(k: usize, q: Rational) -> Rational {
        let mut acc = Rational::from_integer(0);
        let mut power = Rational::from_integer(1);
        for _ in 0..k {
            acc += power;
            power *= q;
        }
        acc
    }

    pub fn q_factorial(n: usize, q: Rational) -> Rational {
        (1..=n).fold(Rational::from_integer(1), |acc, k| acc * q_integer(k, q))
    }

    /// `sum_{σ ∈ S_n} q^{inv(σ)}` by enumeration.
    pub fn inversion_generating_sum(n: usize, q: Rational) -> Rational {
        permutations(n).fold(Rational::from_integer(0), |acc, p| {
            acc + pow(q, p.inversions())
        })
    }

    pub fn pow(q: Rational, k: usize) -> Rational {
        (0..k).fold(Rational::from_integer(1), |acc, _| acc * q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_inversions(p: &[usize]) -> usize {
        let mut c = 0;
        for i in 0..p.len() {
            for j in 0..p.len() {
                if i < j && p[i] > p[j] {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(Permutation::identity(3).inversions(), 0);
        assert_eq!(Permutation::new(vec![1, 0]).unwrap().inversions(), 1);
        let rev = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(rev.inversions(), brute_inversions(&[2, 1, 0]));
        assert_eq!(rev.inversions(), 3);
    }

    #[test]
    fn rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
    }

    #[test]
    fn compose_and_inverse() {
        for p in permutations(4) {
            let id = p.compose(&p.inverse()).unwrap();
            assert_eq!(id, Permutation::identity(4));
            assert_eq!(p.inverse().inversions(), p.inversions());
        }
    }

    #[test]
    fn q_integer_examples() {
        assert_eq!(q_integer(0, 0.3).unwrap(), 0.0);
        assert_eq!(q_integer(3, 0.0).unwrap(), 1.0);
        assert!((q_integer(3, 0.5).unwrap() - (1.0 + 0.5 + 0.25)).abs() < 1e-15);
        assert!(q_integer(2, 1.0).is_err());
        assert!(q_integer(2, -1.0).is_err());
    }

    #[test]
    fn q_factorial_examples() {
        assert_eq!(q_factorial(0, 0.7).unwrap(), 1.0);
        assert_eq!(q_factorial(3, 0.0).unwrap(), 1.0);
        assert!((q_factorial(3, 0.5).unwrap() - 1.0 * 1.5 * 1.75).abs() < 1e-15);
    }

    #[test]
    fn table_matches_direct() {
        for &q in &[-0.9, -0.5, 0.0, 0.5, 0.9] {
            let q = QScalar::new(q).unwrap();
            let t = q.table(30);
            for k in 0..=30 {
                let direct = q.factorial(k);
                assert!((t.factorial(k) - direct).abs() <= 1e-14 * direct.abs());
                assert!((t.integer(k) - q.integer(k)).abs() <= 1e-14 * q.integer(k).abs().max(1.0));
            }
        }
    }

    /// Plain truncated product, run far past any tolerance.
    fn c_q_oracle(q: f64) -> f64 {
        (1..2000).map(|i| 1.0 / (1.0 - q.abs().powi(i))).product()
    }

    #[test]
    fn c_q_examples() {
        assert_eq!(c_q(0.0, 1e-12).unwrap(), 1.0);
        let v = c_q(0.5, 1e-12).unwrap();
        assert!(v > 3.4 && v < 3.5, "{v}");
        let oracle = c_q_oracle(0.5);
        assert!(v >= oracle * (1.0 - 1e-15));
        assert!(v - oracle < 1e-10);
        assert_eq!(c_q(-0.5, 1e-12).unwrap(), v);
        assert!(c_q(1.0, 1e-3).is_err());
        assert!(c_q(0.5, 0.0).is_err());
    }

    #[test]
    fn shuffle_examples() {
        let r = shuffle_representatives(2, 0).unwrap();
        assert_eq!(r, vec![(Permutation::identity(2), 0)]);

        let mut counts: Vec<usize> = shuffle_representatives(2, 1)
            .unwrap()
            .into_iter()
            .map(|(_, c)| c)
            .collect();
        counts.sort();
        assert_eq!(counts, vec![0, 1]);

        let reps = shuffle_representatives(4, 2).unwrap();
        assert_eq!(reps.len(), 6);
        let total: f64 = reps.iter().map(|(_, c)| 0.5f64.powi(*c as i32)).sum();
        let q = 0.5f64;
        assert!((total - (1.0 + q + 2.0 * q * q + q.powi(3) + q.powi(4))).abs() < 1e-15);
        assert!(shuffle_representatives(2, 3).is_err());
    }

    /// Brute force: group S_n into cosets σ(S_{n-m} × S_m) and take the
    /// minimal-inversion element of each.
    fn brute_coset_minima(n: usize, m: usize) -> Vec<(Permutation, usize)> {
        use std::collections::BTreeMap;
        let mut by_coset: BTreeMap<Vec<usize>, Vec<Permutation>> = BTreeMap::new();
        for p in permutations(n) {
            // right multiplication by S_{n-m} × S_m permutes positions within
            // each block, so the coset is determined by the two image sets
            let mut head: Vec<usize> = p.as_slice()[..n - m].to_vec();
            head.sort();
            by_coset.entry(head).or_default().push(p);
        }
        by_coset
            .into_values()
            .map(|members| {
                let min = members.iter().map(|p| p.inversions()).min().unwrap();
                let minimal: Vec<_> = members.into_iter().filter(|p| p.inversions() == min).collect();
                assert_eq!(minimal.len(), 1, "minimal representative must be unique");
                (minimal[0].clone(), min)
            })
            .collect()
    }

    #[test]
    fn shuffles_match_brute_force_cosets() {
        for n in 0..=6 {
            for m in 0..=n {
                let mut fast = shuffle_representatives(n, m).unwrap();
                let mut slow = brute_coset_minima(n, m);
                fast.sort();
                slow.sort();
                assert_eq!(fast, slow, "n={n} m={m}");
                for (p, c) in &fast {
                    assert_eq!(p.inversions(), *c);
                }
            }
        }
    }

    #[test]
    fn pair_partition_examples() {
        let p2 = pair_partitions(2).unwrap();
        assert_eq!(p2.len(), 1);
        assert_eq!(crossings(&p2[0]), 0);

        let mut c4: Vec<usize> = pair_partitions(4).unwrap().iter().map(|p| crossings(p)).collect();
        c4.sort();
        assert_eq!(c4, vec![0, 0, 1]);

        let p6 = pair_partitions(6).unwrap();
        assert_eq!(p6.len(), 15);
        let s: f64 = p6.iter().map(|p| 0.5f64.powi(crossings(p) as i32)).sum();
        // 5 + 6q + 3q^2 + q^3 at q = 1/2, from exhaustive enumeration
        assert!((s - 8.875).abs() < 1e-15, "{s}");

        assert_eq!(pair_partitions(0).unwrap().len(), 1);
        assert_eq!(pair_partitions(10).unwrap().len(), 945);
        assert!(matches!(pair_partitions(3), Err(Error::OddSize(3))));
    }

    #[test]
    fn exact_inversion_sum_is_q_factorial() {
        let half = exact::Rational::new(1, 2);
        for n in 0..=7 {
            assert_eq!(exact::inversion_generating_sum(n, half), exact::q_factorial(n, half));
        }
    }

    #[test]
    fn float_inversion_sum_is_q_factorial() {
        for &q in &[-0.9, -0.5, 0.0, 0.5, 0.9] {
            let qs = QScalar::new(q).unwrap();
            for n in 0..=7 {
                let s: f64 = permutations(n).map(|p| qs.pow(p.inversions())).sum();
                assert!((s - qs.factorial(n)).abs() <= 1e-12 * s.abs().max(1.0), "n={n} q={q}");
            }
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(0).count(), 1);
        assert_eq!(permutations(5).count(), 120);
    }
}
