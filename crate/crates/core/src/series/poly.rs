//! Sparse polynomial kernels over exponent vectors. Coefficients are either
//! scalars or elements of a coefficient module; divisors and multipliers are
//! always scalar polynomials.

use std::collections::BTreeMap;

use crate::linear::{Algebra, Module};
use crate::scalar::Scalar;

pub type Exp = Vec<u32>;
pub type Terms<M> = BTreeMap<Exp, M>;

pub fn degree(e: &[u32]) -> u32 {
    e.iter().sum()
}

pub fn add_term<S: Scalar, M: Module<S>>(t: &mut Terms<M>, e: Exp, m: M) {
    if m.is_zero() {
        return;
    }
    match t.get_mut(&e) {
        Some(v) => {
            v.add_assign(&m);
            if v.is_zero() {
                t.remove(&e);
            }
        }
        None => {
            t.insert(e, m);
        }
    }
}

/// Lowest total degree among stored terms.
pub fn min_degree<M>(t: &Terms<M>) -> Option<u32> {
    t.keys().map(|e| degree(e)).min()
}

pub fn max_degree<M>(t: &Terms<M>) -> Option<u32> {
    t.keys().map(|e| degree(e)).max()
}

pub fn truncate<M>(t: &mut Terms<M>, cap: u32) {
    t.retain(|e, _| degree(e) <= cap);
}

fn add_exp(a: &[u32], b: &[u32]) -> Exp {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Module-valued times scalar polynomial, dropping terms above `cap`.
pub fn mul_scalar<S: Scalar, M: Module<S>>(a: &Terms<M>, p: &Terms<S>, cap: u32) -> Terms<M> {
    let mut out = Terms::new();
    for (ea, ma) in a {
        let da = degree(ea);
        for (ep, cp) in p {
            if da + degree(ep) > cap {
                continue;
            }
            add_term(&mut out, add_exp(ea, ep), ma.scale(cp));
        }
    }
    out
}

/// Product of two module-valued polynomials in a commutative algebra.
pub fn mul_algebra<S: Scalar, M: Algebra<S>>(a: &Terms<M>, b: &Terms<M>, cap: u32) -> Terms<M> {
    let mut out = Terms::new();
    for (ea, ma) in a {
        let da = degree(ea);
        for (eb, mb) in b {
            if da + degree(eb) > cap {
                continue;
            }
            add_term(&mut out, add_exp(ea, eb), ma.mul(mb));
        }
    }
    out
}

/// `p^k` for a scalar polynomial.
pub fn pow<S: Scalar>(p: &Terms<S>, k: u32, nvars: usize) -> Terms<S> {
    let mut out = Terms::new();
    out.insert(vec![0; nvars], S::one());
    for _ in 0..k {
        out = mul_scalar(&out, p, u32::MAX);
    }
    out
}

/// Exact quotient `a / p`, or `None` if `p` does not divide `a`.
///
/// Uses the lexicographic leading term of `p`; with a single divisor the
/// remainder is unique, so a nonzero remainder means non-divisibility.
pub fn divide_exact<S: Scalar, M: Module<S>>(a: &Terms<M>, p: &Terms<S>) -> Option<Terms<M>> {
    let (lead_e, lead_c) = p.iter().next_back()?;
    let inv = lead_c.recip()?;
    let mut rem = a.clone();
    let mut quot = Terms::new();
    while let Some((e, m)) = rem.iter().next_back().map(|(e, m)| (e.clone(), m.clone())) {
        if e.iter().zip(lead_e).any(|(x, y)| x < y) {
            return None;
        }
        let qe: Exp = e.iter().zip(lead_e).map(|(x, y)| x - y).collect();
        let qm = m.scale(&inv);
        for (pe, pc) in p {
            let target = add_exp(&qe, pe);
            add_term(&mut rem, target, qm.scale(&-pc.clone()));
        }
        add_term(&mut quot, qe, qm);
    }
    Some(quot)
}

pub fn derivative<S: Scalar, M: Module<S>>(a: &Terms<M>, var: usize) -> Terms<M> {
    let mut out = Terms::new();
    for (e, m) in a {
        if e[var] == 0 {
            continue;
        }
        let mut ne = e.clone();
        ne[var] -= 1;
        add_term(&mut out, ne, m.scale(&S::from_i64(e[var] as i64)));
    }
    out
}

/// Substitute each source variable by a scalar polynomial in the target
/// variables (`images[v]`). Terms of degree above `cap` are dropped, which
/// is exact when every image is homogeneous of degree one.
pub fn substitute<S: Scalar, M: Module<S>>(
    a: &Terms<M>,
    images: &[Terms<S>],
    target_nvars: usize,
    cap: u32,
) -> Terms<M> {
    let mut powers: Vec<Vec<Terms<S>>> = images
        .iter()
        .map(|_| vec![pow(&Terms::new(), 0, target_nvars)])
        .collect();
    let mut out = Terms::new();
    for (e, m) in a {
        let mut acc: Terms<S> = Terms::new();
        acc.insert(vec![0; target_nvars], S::one());
        for (v, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            while powers[v].len() <= k as usize {
                let next = mul_scalar(powers[v].last().unwrap(), &images[v], u32::MAX);
                powers[v].push(next);
            }
            acc = mul_scalar(&acc, &powers[v][k as usize], cap);
        }
        for (te, tc) in acc {
            if degree(&te) <= cap {
                add_term(&mut out, te, m.scale(&tc));
            }
        }
    }
    out
}
