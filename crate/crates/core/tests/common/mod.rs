//! Brute-force reference models shared by the oracle and acceptance targets.
//! Nothing here calls into the library's arithmetic for the quantity being
//! checked; library types appear only at the comparison boundary.
#![allow(dead_code)]

pub mod oracles;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use vertexkit::lattice::{LatticeState, StateVector};
use vertexkit::linear::Lin;
use vertexkit::series::{IteratedLaurent, LocalizedSeries, Localizer};
use vertexkit::Q;

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Generalized binomial `C(n, k)` for integer `n`, `k ≥ 0`, by the falling product.
pub fn binom(n: i64, k: i64) -> Q {
    if k < 0 {
        return Q::zero();
    }
    let mut c = Q::one();
    for i in 0..k {
        c = c * q(n - i) / q(i + 1);
    }
    c
}

pub fn factorial(n: u32) -> Q {
    (1..=n as i64).fold(Q::one(), |a, k| a * q(k))
}

/// Laurent polynomial in several variables with coefficients keyed by `K`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Lp<K: Ord + Clone = ()>(pub BTreeMap<(Vec<i64>, K), Q>);

impl<K: Ord + Clone> Lp<K> {
    pub fn new() -> Self {
        Lp(BTreeMap::new())
    }

    pub fn term(e: Vec<i64>, k: K, c: Q) -> Self {
        let mut p = Self::new();
        p.add(e, k, c);
        p
    }

    pub fn add(&mut self, e: Vec<i64>, k: K, c: Q) {
        if c.is_zero() {
            return;
        }
        let key = (e, k);
        let v = self.0.remove(&key).unwrap_or_else(Q::zero) + c;
        if !v.is_zero() {
            self.0.insert(key, v);
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((e, k), c) in &other.0 {
            out.add(e.clone(), k.clone(), c.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(&-Q::one()))
    }

    pub fn scaled(&self, s: &Q) -> Self {
        let mut out = Self::new();
        for ((e, k), c) in &self.0 {
            out.add(e.clone(), k.clone(), c.clone() * s.clone());
        }
        out
    }

    /// Product with a scalar Laurent polynomial.
    pub fn times(&self, p: &Lp) -> Self {
        let mut out = Self::new();
        for ((e, k), c) in &self.0 {
            for ((f, ()), d) in &p.0 {
                let g = e.iter().zip(f).map(|(a, b)| a + b).collect();
                out.add(g, k.clone(), c.clone() * d.clone());
            }
        }
        out
    }

    pub fn coeff(&self, e: &[i64], k: &K) -> Q {
        self.0.get(&(e.to_vec(), k.clone())).cloned().unwrap_or_else(Q::zero)
    }

    /// Keep the terms whose exponent satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(&[i64]) -> bool) -> Self {
        Lp(self.0.iter().filter(|((e, _), _)| keep(e)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

impl Lp {
    pub fn scalar(e: Vec<i64>, c: Q) -> Self {
        Lp::term(e, (), c)
    }

    pub fn mul(&self, other: &Lp) -> Lp {
        self.times(other)
    }

    /// `x_i - x_j` in `n` variables.
    pub fn difference(n: usize, i: usize, j: usize) -> Lp {
        let mut a = vec![0; n];
        a[i] = 1;
        let mut b = vec![0; n];
        b[j] = 1;
        Lp::scalar(a, Q::one()).plus(&Lp::scalar(b, -Q::one()))
    }

    pub fn pow(&self, k: u32) -> Lp {
        let n = self.0.keys().next().map_or(0, |(e, _)| e.len());
        (0..k).fold(Lp::scalar(vec![0; n], Q::one()), |a, _| a.mul(self))
    }
}

/// A library series whose localizers are all `Point(i)` on the line, as a Laurent polynomial.
pub fn laurent_of<M: vertexkit::linear::Module<Q>, K: Ord + Clone>(
    s: &LocalizedSeries<Q, M>,
    split: impl Fn(&M) -> Vec<(K, Q)>,
) -> Lp<K> {
    let n = s.vars().nvars();
    let mut shift = vec![0i64; n];
    for (l, &e) in s.denominator() {
        match l {
            Localizer::Point(i) => shift[*i] -= e as i64,
            other => panic!("laurent_of: localizer {other:?} is not a point"),
        }
    }
    let mut out = Lp::new();
    for (e, m) in s.numerator() {
        let g: Vec<i64> = e.iter().zip(&shift).map(|(a, b)| *a as i64 + b).collect();
        for (k, c) in split(m) {
            out.add(g.clone(), k, c);
        }
    }
    out
}

pub fn scalar_laurent(s: &LocalizedSeries<Q, Q>) -> Lp {
    laurent_of(s, |c| vec![((), c.clone())])
}

pub fn expansion_of<M: vertexkit::linear::Module<Q>, K: Ord + Clone>(
    s: &IteratedLaurent<Q, M>,
    split: impl Fn(&M) -> Vec<(K, Q)>,
) -> Lp<K> {
    let mut out = Lp::new();
    for (e, m) in s.terms() {
        for (k, c) in split(m) {
            out.add(e.clone(), k, c);
        }
    }
    out
}

/// Rank-one lattice with Gram `[[2]]`: a state `e^{aα} Π α(-n_i)` is `(a, sorted n_i)`.
pub type BKey = (i64, Vec<u32>);
pub type BState = BTreeMap<BKey, Q>;

pub fn b_add(s: &mut BState, k: BKey, c: Q) {
    if c.is_zero() {
        return;
    }
    let v = s.remove(&k).unwrap_or_else(Q::zero) + c;
    if !v.is_zero() {
        s.insert(k, v);
    }
}

pub fn b_exp(a: i64) -> BState {
    BTreeMap::from([((a, vec![]), Q::one())])
}

pub fn b_scale(s: &BState, c: &Q) -> BState {
    let mut out = BState::new();
    for (k, v) in s {
        b_add(&mut out, k.clone(), v.clone() * c.clone());
    }
    out
}

pub fn b_plus(a: &BState, b: &BState) -> BState {
    let mut out = a.clone();
    for (k, v) in b {
        b_add(&mut out, k.clone(), v.clone());
    }
    out
}

pub fn b_mul(a: &BState, b: &BState) -> BState {
    let mut out = BState::new();
    for ((x, hx), c) in a {
        for ((y, hy), d) in b {
            let mut h: Vec<u32> = hx.iter().chain(hy).copied().collect();
            h.sort();
            b_add(&mut out, (x + y, h), c.clone() * d.clone());
        }
    }
    out
}

/// The derivation: `D e^{aα} = a α(-1) e^{aα}`, `D α(-n) = n α(-n-1)`.
pub fn b_d(s: &BState) -> BState {
    let mut out = BState::new();
    for ((a, h), c) in s {
        let mut g = h.clone();
        g.push(1);
        g.sort();
        b_add(&mut out, (*a, g), c.clone() * q(*a));
        for i in 0..h.len() {
            let mut g = h.clone();
            g[i] += 1;
            g.sort();
            b_add(&mut out, (*a, g), c.clone() * q(h[i] as i64));
        }
    }
    out
}

/// `D^k e^{aα} / k!` for `k ≤ n`.
pub fn b_taylor(a: i64, n: usize) -> Vec<BState> {
    let mut out = vec![b_exp(a)];
    let mut cur = b_exp(a);
    for k in 1..=n {
        cur = b_d(&cur);
        out.push(b_scale(&cur, &(Q::one() / factorial(k as u32))));
    }
    out
}

pub fn b_to_lattice(k: &BKey) -> LatticeState {
    let mut heis = BTreeMap::new();
    for &n in &k.1 {
        *heis.entry((0usize, n)).or_insert(0u32) += 1;
    }
    LatticeState::new(&[k.0], heis).unwrap()
}

pub fn b_to_vector(s: &BState) -> StateVector<Q> {
    StateVector(Lin::from_terms(s.iter().map(|(k, c)| (b_to_lattice(k), c.clone()))))
}

pub fn b_to_lin(s: &BState) -> Lin<LatticeState, Q> {
    b_to_vector(s).0
}

/// `θ^{aα}_z` on one basis state, as `z`-exponent ↦ state. `plus` selects
/// `α(-n) ↦ α(-n) + (aα,α)(-1)^{n-1} z^{-n}`; otherwise `α(-n) ↦ α(-n) - (aα,α) z^{-n}`.
pub fn b_theta(a: i64, k: &BKey, plus: bool) -> BTreeMap<i64, BState> {
    let pair = 2 * a;
    let mut acc: BTreeMap<i64, BState> = BTreeMap::from([(2 * a * k.0, b_exp(k.0))]);
    for &n in &k.1 {
        let shift = if plus {
            q(pair) * if n % 2 == 1 { Q::one() } else { -Q::one() }
        } else {
            q(-pair)
        };
        let g: BState = BTreeMap::from([((0, vec![n]), Q::one())]);
        let mut next: BTreeMap<i64, BState> = BTreeMap::new();
        for (e, v) in &acc {
            let slot = next.entry(*e).or_default();
            *slot = b_plus(slot, &b_mul(v, &g));
            let slot = next.entry(e - n as i64).or_default();
            *slot = b_plus(slot, &b_scale(v, &shift));
        }
        acc = next;
    }
    acc.retain(|_, v| !v.is_empty());
    acc
}

/// The residues behind the Borcherds identity for `u, v, w = e^{aα}, e^{bα}, e^{cα}`,
/// from the rational form `F = z^{2ac} w^{2bc} (z-w)^{2ab} e^{zD}e^a e^{wD}e^b e^c`.
/// Returns `(lhs, rhs_zw, rhs_wz)` with `rhs = rhs_zw - rhs_wz`.
pub fn b_borcherds(a: i64, b: i64, c: i64, m: i64, n: i64, qq: i64) -> (BState, BState, BState) {
    let ec = b_exp(c);
    let p = 2 * a * b + qq;
    // largest Taylor index any of the three sums reaches
    let cap = [
        -1 - 2 * a * c - m - p + (-1 - 2 * b * c - n).max(0),
        -1 - 2 * b * c - n,
        -1 - 2 * a * c - m,
        -1 - 2 * b * c - n - p + (-1 - 2 * a * c - m).max(0),
        (-1 - 2 * a * b - qq) + (-1 - m - 2 * a * c - 2 * b * c - n + (-1 - 2 * a * b - qq).max(0)),
        -1 - m - 2 * a * c - 2 * b * c - n + (-1 - 2 * a * b - qq).max(0),
    ]
    .into_iter()
    .max()
    .unwrap()
    .max(0) as usize;
    let ta = b_taylor(a, cap);
    let tb = b_taylor(b, cap);

    // Res_z Res_w z^m w^n ι_{z,w} (z-w)^q F
    let mut zw = BState::new();
    let jmax = -1 - 2 * b * c - n;
    for j in 0..=jmax.max(-1) {
        let l = -1 - 2 * b * c - n - j;
        let k = -1 - 2 * a * c - m - p + j;
        if k < 0 || l < 0 {
            continue;
        }
        let coef = binom(p, j) * if j % 2 == 0 { Q::one() } else { -Q::one() };
        zw = b_plus(&zw, &b_scale(&b_mul(&b_mul(&ta[k as usize], &tb[l as usize]), &ec), &coef));
    }

    // Res_z Res_w z^m w^n ι_{w,z} (z-w)^q F, with (z-w)^p = (-1)^p (w-z)^p
    let mut wz = BState::new();
    let jmax = -1 - 2 * a * c - m;
    for j in 0..=jmax.max(-1) {
        let k = -1 - 2 * a * c - m - j;
        let l = -1 - 2 * b * c - n - p + j;
        if k < 0 || l < 0 {
            continue;
        }
        let sgn = if (p + j).rem_euclid(2) == 0 { Q::one() } else { -Q::one() };
        let coef = binom(p, j) * sgn;
        wz = b_plus(&wz, &b_scale(&b_mul(&b_mul(&ta[k as usize], &tb[l as usize]), &ec), &coef));
    }

    // Res_w Res_t (w+t)^m w^n t^q ι_{w,t} F(w+t, w)
    let mut lhs = BState::new();
    let s = m + 2 * a * c;
    let tt = -1 - 2 * a * b - qq;
    for i in 0..=tt.max(-1) {
        let sigma = tt - i;
        let wi = -1 - s - 2 * b * c - n + i;
        if sigma < 0 || wi < 0 {
            continue;
        }
        for r in 0..=wi {
            let l = wi - r;
            let coef = binom(s, i) * binom(r + sigma, r);
            let t = b_mul(&b_mul(&ta[(r + sigma) as usize], &tb[l as usize]), &ec);
            lhs = b_plus(&lhs, &b_scale(&t, &coef));
        }
    }
    (lhs, zw, wz)
}

/// All perfect matchings of `items`, by first-element recursion.
pub fn matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().enumerate().filter(|(i, _)| i + 1 != k).map(|(_, &x)| x).collect();
        for mut m in matchings(&rest) {
            m.insert(0, (first, items[k]));
            out.push(m);
        }
    }
    out
}
