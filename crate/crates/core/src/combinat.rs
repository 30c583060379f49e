//! Exact binomials (including negative upper index), factorials and
//! small enumeration helpers shared by the algebra modules.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::scalar::Scalar;

/// `C(n, k)` for any integer `n` and `k ≥ 0` via the falling factorial
/// `n (n-1) ... (n-k+1) / k!`. Returns 0 for `k < 0`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for t in 0..k {
        num *= BigInt::from(n - t);
        den *= BigInt::from(t + 1);
    }
    num / den
}

pub fn binomial_s<S: Scalar>(n: i64, k: i64) -> S {
    S::from_bigint(&binomial(n, k))
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Componentwise product of binomials `Π C(n_c, k_c)`.
pub fn multi_binomial(n: &[u32], k: &[u32]) -> BigInt {
    n.iter()
        .zip(k)
        .map(|(&n, &k)| binomial(n as i64, k as i64))
        .product()
}

/// All multi-indices `j` with `0 ≤ j ≤ i` componentwise.
pub fn sub_indices(i: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(i.len())];
    for &bound in i {
        let mut next = Vec::with_capacity(out.len() * (bound as usize + 1));
        for prefix in &out {
            for v in 0..=bound {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// All multi-indices of length `dim` with total degree exactly `deg`.
pub fn indices_of_degree(dim: usize, deg: u32) -> Vec<Vec<u32>> {
    if dim == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    if dim == 1 {
        return vec![vec![deg]];
    }
    let mut out = Vec::new();
    for first in (0..=deg).rev() {
        for mut rest in indices_of_degree(dim - 1, deg - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All multi-indices of length `dim` with total degree at most `cap`.
pub fn indices_up_to(dim: usize, cap: u32) -> Vec<Vec<u32>> {
    (0..=cap).flat_map(|d| indices_of_degree(dim, d)).collect()
}

/// Set partitions of `0..n`, each block sorted, blocks ordered by minimum.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(k: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(k);
            go(k + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![k]);
        go(k + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// Perfect matchings of `0..n` (empty when `n` is odd).
pub fn perfect_matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(rest: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if rest.is_empty() {
            return vec![vec![]];
        }
        let first = rest[0];
        let mut out = Vec::new();
        for k in 1..rest.len() {
            let partner = rest[k];
            let remaining: Vec<usize> = rest[1..]
                .iter()
                .copied()
                .filter(|&x| x != partner)
                .collect();
            for mut m in go(&remaining) {
                m.insert(0, (first, partner));
                out.push(m);
            }
        }
        out
    }
    if n % 2 == 1 {
        return vec![];
    }
    let all: Vec<usize> = (0..n).collect();
    go(&all)
}
