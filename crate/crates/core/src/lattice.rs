//! The vertex algebra of an even lattice.
//!
//! States are `e^β ⊗ Π γ_k(-n)^c`: the group algebra of `Z^r` tensored with
//! polynomials in generators `γ_k(-n)`, with derivation
//! `D e^β = β(-1) e^β`, `D γ(-n) = n γ(-n-1)`.
//!
//! For `u = e^β Π γ_j(-n_j)` the vertex operator is
//! `Y(u,z)w = Σ_C mult(C) · e^{zD}(e^β Π_{j∈C} γ_j(-n_j)) · θ^β_z(Π_{j∉C} ∂^{(n_j-1)}γ_j^-(z) w)`,
//! a sum over which Heisenberg factors act by creation, where
//! `∂^{(n-1)}γ^-(z) = Σ_{m≥0} C(-m-1, n-1) γ(m) z^{-m-n}` and `θ^β_z` is the
//! algebra map `e^{β'} ↦ z^{(β,β')} e^{β'}`,
//! `γ(-n) ↦ γ(-n) - (β,γ) z^{-n}`, which intertwines `D` with `D - d/dz`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combinat::{binomial, binomial_s};
use crate::error::{Error, Result};
use crate::linear::{Algebra, Lin, Module};
use crate::scalar::{sign, Scalar};
use crate::series::laurent::{
    iota_expand, Constraint, ExpansionOrder, IteratedLaurent, SignedExp, Window,
};
use crate::series::localized::{Denominator, LocalizedSeries, Localizer, Series, VarGroup, EXACT};
use crate::series::poly::{self, Terms};
use crate::sieves::Sieve;
use crate::series::laurent::{clear_and_compare, Comparison};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSpec {
    gram: Vec<Vec<i64>>,
    pub weight_cap: u32,
    pub series_cap: u32,
}

impl LatticeSpec {
    pub fn new(gram: Vec<Vec<i64>>, weight_cap: u32, series_cap: u32) -> Result<Self> {
        let r = gram.len();
        if r == 0 || gram.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidLattice("Gram matrix must be square and nonempty".into()));
        }
        for a in 0..r {
            for b in 0..r {
                if gram[a][b] != gram[b][a] {
                    return Err(Error::InvalidLattice("Gram matrix is not symmetric".into()));
                }
                if gram[a][b] % 2 != 0 {
                    return Err(Error::InvalidLattice(format!(
                        "entry ({a},{b}) = {} is odd",
                        gram[a][b]
                    )));
                }
            }
        }
        Ok(LatticeSpec {
            gram,
            weight_cap,
            series_cap,
        })
    }

    /// Root lattice of `sl_2`: Gram `[[2]]`.
    pub fn a1() -> Self {
        LatticeSpec::new(vec![vec![2]], 3, 8).unwrap()
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    /// `(a, b)`; missing trailing entries count as zero.
    pub fn pair(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut s = 0;
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                s += x * y * self.gram[i][j];
            }
        }
        s
    }

    /// `(β, γ_k)`.
    pub fn pair_gen(&self, beta: &[i64], k: usize) -> i64 {
        beta.iter()
            .enumerate()
            .map(|(l, b)| b * self.gram[l][k])
            .sum()
    }

    fn rational_gram(&self) -> Vec<Vec<BigRational>> {
        self.gram
            .iter()
            .map(|row| row.iter().map(|&v| rat(v)).collect())
            .collect()
    }

    pub fn is_positive_definite(&self) -> bool {
        let g = self.rational_gram();
        (1..=self.rank()).all(|k| {
            let minor: Vec<Vec<BigRational>> =
                g[..k].iter().map(|row| row[..k].to_vec()).collect();
            determinant(minor).is_positive()
        })
    }

    /// Diagonal of the inverse Gram matrix.
    fn inverse_diagonal(&self) -> Vec<BigRational> {
        let r = self.rank();
        let g = self.rational_gram();
        let det = determinant(g.clone());
        (0..r)
            .map(|k| {
                let minor: Vec<Vec<BigRational>> = (0..r)
                    .filter(|&i| i != k)
                    .map(|i| (0..r).filter(|&j| j != k).map(|j| g[i][j].clone()).collect())
                    .collect();
                let m = if minor.is_empty() {
                    <BigRational as One>::one()
                } else {
                    determinant(minor)
                };
                m / det.clone()
            })
            .collect()
    }
}

fn determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = <BigRational as One>::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !Zero::is_zero(&m[r][c])) else {
            return <BigRational as Zero>::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det *= piv.clone();
        for r in c + 1..n {
            let f = m[r][c].clone() / piv.clone();
            if Zero::is_zero(&f) {
                continue;
            }
            for k in c..n {
                let v = m[c][k].clone() * f.clone();
                m[r][k] -= v;
            }
        }
    }
    det
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Basis state `e^α Π γ_k(-n)^c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeState {
    alpha: Vec<i64>,
    heis: BTreeMap<(usize, u32), u32>,
}

fn trim(mut v: Vec<i64>) -> Vec<i64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

impl LatticeState {
    pub fn vacuum() -> Self {
        LatticeState {
            alpha: Vec::new(),
            heis: BTreeMap::new(),
        }
    }

    pub fn exp(alpha: &[i64]) -> Self {
        LatticeState {
            alpha: trim(alpha.to_vec()),
            heis: BTreeMap::new(),
        }
    }

    /// `γ_k(-n)`.
    pub fn generator(k: usize, n: u32) -> Self {
        assert!(n >= 1, "generator depth must be positive");
        LatticeState {
            alpha: Vec::new(),
            heis: BTreeMap::from([((k, n), 1)]),
        }
    }

    pub fn new(alpha: &[i64], heis: BTreeMap<(usize, u32), u32>) -> Result<Self> {
        if heis.keys().any(|&(_, n)| n == 0) {
            return Err(Error::InvalidLattice("generator depths start at 1".into()));
        }
        Ok(LatticeState {
            alpha: trim(alpha.to_vec()),
            heis: heis.into_iter().filter(|(_, c)| *c > 0).collect(),
        })
    }

    pub fn alpha(&self) -> &[i64] {
        &self.alpha
    }

    pub fn heis(&self) -> &BTreeMap<(usize, u32), u32> {
        &self.heis
    }

    pub fn heis_weight(&self) -> u32 {
        self.heis.iter().map(|(&(_, n), &c)| n * c).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let len = self.alpha.len().max(other.alpha.len());
        let alpha = (0..len)
            .map(|i| self.alpha.get(i).unwrap_or(&0) + other.alpha.get(i).unwrap_or(&0))
            .collect();
        let mut heis = self.heis.clone();
        for (k, c) in &other.heis {
            *heis.entry(*k).or_insert(0) += c;
        }
        LatticeState {
            alpha: trim(alpha),
            heis,
        }
    }

    fn with_factor(&self, key: (usize, u32), delta: i64) -> Self {
        let mut heis = self.heis.clone();
        let c = heis.get(&key).copied().unwrap_or(0) as i64 + delta;
        if c <= 0 {
            heis.remove(&key);
        } else {
            heis.insert(key, c as u32);
        }
        LatticeState {
            alpha: self.alpha.clone(),
            heis,
        }
    }

    fn max_depth(&self) -> u32 {
        self.heis.keys().map(|&(_, n)| n).max().unwrap_or(0)
    }
}

impl fmt::Display for LatticeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.alpha.is_empty() {
            let a: Vec<String> = self.alpha.iter().map(|x| x.to_string()).collect();
            parts.push(format!("e^[{}]", a.join(",")));
        }
        for (&(k, n), &c) in &self.heis {
            if c == 1 {
                parts.push(format!("g{k}(-{n})"));
            } else {
                parts.push(format!("g{k}(-{n})^{c}"));
            }
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join(" "))
        }
    }
}

/// Finite combination of basis states; the commutative algebra `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<S: Scalar>(pub Lin<LatticeState, S>);

impl<S: Scalar> StateVector<S> {
    pub fn basis(s: LatticeState) -> Self {
        StateVector(Lin::basis(s))
    }

    pub fn vacuum() -> Self {
        Self::basis(LatticeState::vacuum())
    }

    pub fn term(s: LatticeState, c: S) -> Self {
        StateVector(Lin::term(s, c))
    }

    pub fn coeff(&self, s: &LatticeState) -> S {
        self.0.coeff(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticeState, &S)> {
        self.0.iter()
    }

    pub fn plus(&self, other: &Self) -> Self {
        StateVector(self.0.plus(&other.0))
    }

    pub fn minus(&self, other: &Self) -> Self {
        StateVector(self.0.minus(&other.0))
    }

    pub fn render(&self) -> String {
        if self.0.is_empty() {
            return "0".into();
        }
        self.0
            .iter()
            .map(|(s, c)| format!("({})*{}", c.render(), s))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl<S: Scalar> Module<S> for StateVector<S> {
    fn zero() -> Self {
        StateVector(Lin::new())
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    fn add_assign(&mut self, other: &Self) {
        self.0.add_assign(&other.0);
    }
    fn scale(&self, s: &S) -> Self {
        StateVector(self.0.scaled(s))
    }
}

impl<S: Scalar> Algebra<S> for StateVector<S> {
    fn one() -> Self {
        Self::vacuum()
    }
    fn mul(&self, other: &Self) -> Self {
        StateVector(self.0.bilinear(&other.0, |a, b| Lin::basis(a.mul(b))))
    }
}

/// How `θ^β_z` acts on Heisenberg generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnnihilationRule {
    /// `γ(-n) ↦ γ(-n) - (β,γ) z^{-n}`; intertwines `D` with `D - d/dz`.
    Intertwining,
    /// `γ(-n) ↦ γ(-n) + (β,γ)(-1)^{n-1} z^{-n}`; intertwines `D` with
    /// `D + d/dz`. Kept only to show that it breaks locality.
    PlusDerivative,
}

/// A Laurent polynomial in one variable with state coefficients.
pub type Laurent<S> = BTreeMap<i64, StateVector<S>>;

fn laurent_add<S: Scalar>(t: &mut Laurent<S>, e: i64, v: StateVector<S>) {
    if v.is_zero() {
        return;
    }
    let slot = t.entry(e).or_insert_with(StateVector::zero);
    slot.add_assign(&v);
    if slot.is_zero() {
        t.remove(&e);
    }
}

struct Part<S: Scalar> {
    mult: S,
    creation: LatticeState,
    laurent: Laurent<S>,
}

type SeriesCache<S> = HashMap<(LatticeState, LatticeState), (i64, Arc<Laurent<S>>)>;

pub struct LatticeVA<S: Scalar> {
    spec: LatticeSpec,
    rule: AnnihilationRule,
    taylor: RwLock<HashMap<LatticeState, Arc<Vec<StateVector<S>>>>>,
    series: RwLock<SeriesCache<S>>,
}

impl<S: Scalar> LatticeVA<S> {
    pub fn new(spec: LatticeSpec) -> Self {
        Self::with_rule(spec, AnnihilationRule::Intertwining)
    }

    pub fn with_rule(spec: LatticeSpec, rule: AnnihilationRule) -> Self {
        LatticeVA {
            spec,
            rule,
            taylor: RwLock::new(HashMap::new()),
            series: RwLock::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn rule(&self) -> AnnihilationRule {
        self.rule
    }

    /// `(α,α)/2 + Σ n·c`.
    pub fn weight(&self, s: &LatticeState) -> i64 {
        self.spec.pair(&s.alpha, &s.alpha) / 2 + s.heis_weight() as i64
    }

    /// The derivation `D` on a basis state.
    pub fn derivation_state(&self, s: &LatticeState) -> StateVector<S> {
        let mut out = StateVector::zero();
        for (k, &a) in s.alpha.iter().enumerate() {
            if a != 0 {
                out.add_assign(&StateVector::term(s.with_factor((k, 1), 1), S::from_i64(a)));
            }
        }
        for (&(k, n), &c) in &s.heis {
            let t = s.with_factor((k, n), -1).with_factor((k, n + 1), 1);
            out.add_assign(&StateVector::term(t, S::from_i64((c * n) as i64)));
        }
        out
    }

    pub fn derivation(&self, v: &StateVector<S>) -> StateVector<S> {
        let mut out = StateVector::zero();
        for (s, c) in v.iter() {
            out.add_assign(&self.derivation_state(s).scale(c));
        }
        out
    }

    /// `D^a s / a!` for `a = 0..=upto`.
    pub fn divided_derivatives(&self, s: &LatticeState, upto: usize) -> Arc<Vec<StateVector<S>>> {
        if let Some(v) = self.taylor.read().unwrap().get(s) {
            if v.len() > upto {
                return v.clone();
            }
        }
        let mut list: Vec<StateVector<S>> = self
            .taylor
            .read()
            .unwrap()
            .get(s)
            .map(|v| v.as_ref().clone())
            .unwrap_or_else(|| vec![StateVector::basis(s.clone())]);
        while list.len() <= upto {
            let a = list.len() as i64;
            let next = self
                .derivation(list.last().unwrap())
                .scale(&S::from_ratio(1, a));
            list.push(next);
        }
        let arc = Arc::new(list);
        self.taylor.write().unwrap().insert(s.clone(), arc.clone());
        arc
    }

    /// `γ_k(m)` for `m ≥ 0` on a basis state.
    fn gamma_mode(&self, k: usize, m: u32, s: &LatticeState) -> StateVector<S> {
        if m == 0 {
            let p = self.spec.pair_gen(&s.alpha, k);
            return if p == 0 {
                StateVector::zero()
            } else {
                StateVector::term(s.clone(), S::from_i64(p))
            };
        }
        let mut out = StateVector::zero();
        for (&(l, n), &c) in &s.heis {
            if n != m {
                continue;
            }
            let g = self.spec.gram[k][l];
            if g == 0 {
                continue;
            }
            let w = S::from_i64(c as i64 * m as i64 * g);
            out.add_assign(&StateVector::term(s.with_factor((l, n), -1), w));
        }
        out
    }

    /// `∂^{(n-1)}γ_k^-(z)` applied to a Laurent polynomial.
    fn annihilate(&self, k: usize, n: u32, q: &Laurent<S>) -> Laurent<S> {
        let mut out = Laurent::new();
        for (&e, v) in q {
            let top = v.iter().map(|(s, _)| s.max_depth()).max().unwrap_or(0);
            for m in 0..=top {
                let c = binomial_s::<S>(-(m as i64) - 1, n as i64 - 1);
                let mut image = StateVector::zero();
                for (s, cs) in v.iter() {
                    image.add_assign(&self.gamma_mode(k, m, s).scale(cs));
                }
                laurent_add(&mut out, e - m as i64 - n as i64, image.scale(&c));
            }
        }
        out
    }

    /// `θ^β_z` on a basis state.
    pub fn theta_state(&self, beta: &[i64], s: &LatticeState) -> Laurent<S> {
        let shift = self.spec.pair(beta, &s.alpha);
        let base = LatticeState::exp(&s.alpha);
        let mut acc: Laurent<S> = BTreeMap::from([(shift, StateVector::basis(base))]);
        for (&(k, n), &c) in &s.heis {
            let p = self.spec.pair_gen(beta, k);
            let shiftc = match self.rule {
                AnnihilationRule::Intertwining => S::from_i64(-p),
                AnnihilationRule::PlusDerivative => S::from_i64(p) * sign::<S>(n as i64 - 1),
            };
            for _ in 0..c {
                let g = LatticeState::generator(k, n);
                let mut next = Laurent::new();
                for (&e, v) in &acc {
                    laurent_add(&mut next, e, v.mul(&StateVector::basis(g.clone())));
                    if !shiftc.is_zero() {
                        laurent_add(&mut next, e - n as i64, v.scale(&shiftc));
                    }
                }
                acc = next;
            }
        }
        acc
    }

    pub fn theta(&self, beta: &[i64], q: &Laurent<S>) -> Laurent<S> {
        let mut out = Laurent::new();
        for (&e, v) in q {
            for (s, c) in v.iter() {
                for (de, sv) in self.theta_state(beta, s) {
                    laurent_add(&mut out, e + de, sv.scale(c));
                }
            }
        }
        out
    }

    fn parts(&self, u: &LatticeState, w: &LatticeState) -> Vec<Part<S>> {
        let factors: Vec<((usize, u32), u32)> = u.heis.iter().map(|(k, c)| (*k, *c)).collect();
        let mut choices: Vec<Vec<u32>> = vec![Vec::new()];
        for &(_, c) in &factors {
            choices = choices
                .into_iter()
                .flat_map(|p| {
                    (0..=c).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for choice in choices {
            let mut mult = S::one();
            let mut creation = LatticeState::exp(&u.alpha);
            let mut q: Laurent<S> = BTreeMap::from([(0, StateVector::basis(w.clone()))]);
            for (&((k, n), c), &x) in factors.iter().zip(&choice) {
                mult = mult * S::from_bigint(&binomial(c as i64, x as i64));
                for _ in 0..x {
                    creation = creation.mul(&LatticeState::generator(k, n));
                }
                for _ in 0..c - x {
                    q = self.annihilate(k, n, &q);
                }
            }
            let laurent = self.theta(&u.alpha, &q);
            if !laurent.is_empty() {
                out.push(Part {
                    mult,
                    creation,
                    laurent,
                });
            }
        }
        out
    }

    /// Lowest exponent of `z` in `Y(u,z)w`, if the series is nonzero.
    pub fn lowest_exponent(&self, u: &LatticeState, w: &LatticeState) -> Option<i64> {
        self.parts(u, w)
            .iter()
            .filter_map(|p| p.laurent.keys().next().copied())
            .min()
    }

    /// Coefficients of `Y(u,z)w` up to `z^{zmax}`, exact. Fails when that
    /// needs more than `cap` Taylor terms of the creation part.
    pub fn vertex_series_capped(
        &self,
        u: &LatticeState,
        w: &LatticeState,
        zmax: i64,
        cap: u32,
    ) -> Result<Arc<Laurent<S>>> {
        let key = (u.clone(), w.clone());
        if let Some((z, s)) = self.series.read().unwrap().get(&key) {
            if *z >= zmax {
                return Ok(s.clone());
            }
        }
        let parts = self.parts(u, w);
        let lowest = parts
            .iter()
            .filter_map(|p| p.laurent.keys().next().copied())
            .min();
        let mut out = Laurent::new();
        if let Some(lo) = lowest {
            let need = zmax - lo;
            if need > cap as i64 {
                return Err(Error::CapExhausted(format!(
                    "coefficient z^{zmax} of Y({u},z){w} needs {need} Taylor terms, cap {cap}"
                )));
            }
            for p in &parts {
                let lo_p = *p.laurent.keys().next().unwrap();
                if lo_p > zmax {
                    continue;
                }
                let taylor = self.divided_derivatives(&p.creation, (zmax - lo_p) as usize);
                for (&b, qv) in &p.laurent {
                    if b > zmax {
                        break;
                    }
                    let qv = qv.scale(&p.mult);
                    for a in 0..=(zmax - b) as usize {
                        laurent_add(&mut out, a as i64 + b, taylor[a].mul(&qv));
                    }
                }
            }
        }
        let arc = Arc::new(out);
        self.series
            .write()
            .unwrap()
            .insert(key, (zmax, arc.clone()));
        Ok(arc)
    }

    pub fn vertex_series(&self, u: &LatticeState, w: &LatticeState, zmax: i64) -> Result<Arc<Laurent<S>>> {
        self.vertex_series_capped(u, w, zmax, self.spec.series_cap)
    }

    /// `u_n w`, the coefficient of `z^{-n-1}` in `Y(u,z)w`, within `cap`.
    pub fn mode_capped(
        &self,
        u: &StateVector<S>,
        n: i64,
        w: &StateVector<S>,
        cap: u32,
    ) -> Result<StateVector<S>> {
        let mut out = StateVector::zero();
        for (us, uc) in u.iter() {
            for (ws, wc) in w.iter() {
                let series = self.vertex_series_capped(us, ws, -n - 1, cap)?;
                if let Some(v) = series.get(&(-n - 1)) {
                    out.add_assign(&v.scale(&(uc.clone() * wc.clone())));
                }
            }
        }
        Ok(out)
    }

    pub fn mode(&self, u: &StateVector<S>, n: i64, w: &StateVector<S>) -> Result<StateVector<S>> {
        self.mode_capped(u, n, w, self.spec.series_cap)
    }

    /// `e^{zD}(e^α) · v` as a series in one point, truncated at `cap`.
    pub fn creation_op(&self, alpha: &[i64], v: &StateVector<S>, cap: u32) -> Result<LocalizedSeries<S, StateVector<S>>> {
        let vars = VarGroup::points(1);
        let taylor = self.divided_derivatives(&LatticeState::exp(alpha), cap as usize);
        let mut num = Terms::new();
        for (a, t) in taylor.iter().enumerate().take(cap as usize + 1) {
            poly::add_term(&mut num, vec![a as u32], t.mul(v));
        }
        LocalizedSeries::new(vars, num, Denominator::new(), cap)
    }

    /// `θ^α_z(v)` as an exact series over a power of `z`.
    pub fn annihilation_op(&self, alpha: &[i64], v: &StateVector<S>) -> Result<LocalizedSeries<S, StateVector<S>>> {
        let mut q = Laurent::new();
        for (s, c) in v.iter() {
            for (e, sv) in self.theta_state(alpha, s) {
                laurent_add(&mut q, e, sv.scale(c));
            }
        }
        laurent_to_series(&q)
    }

    /// Basis states of weight at most `w`; needs a positive definite lattice.
    pub fn basis_states(&self, w: u32) -> Result<Vec<LatticeState>> {
        if !self.spec.is_positive_definite() {
            return Err(Error::InvalidLattice(
                "finite weight spaces need a positive definite lattice".into(),
            ));
        }
        let r = self.spec.rank();
        let inv = self.spec.inverse_diagonal();
        let bounds: Vec<i64> = inv
            .iter()
            .map(|d| {
                let lim = d.clone() * rat(2 * w as i64);
                let mut t = 0i64;
                while rat((t + 1) * (t + 1)) <= lim {
                    t += 1;
                }
                t
            })
            .collect();
        let mut alphas: Vec<Vec<i64>> = vec![Vec::new()];
        for k in 0..r {
            alphas = alphas
                .into_iter()
                .flat_map(|p| {
                    (-bounds[k]..=bounds[k]).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for a in alphas {
            let aw = self.spec.pair(&a, &a);
            if aw > 2 * w as i64 {
                continue;
            }
            let rest = w - (aw / 2) as u32;
            for h in heisenberg_monomials(r, rest) {
                out.push(LatticeState {
                    alpha: trim(a.clone()),
                    heis: h,
                });
            }
        }
        out.sort_by_key(|s| (self.weight(s), s.clone()));
        Ok(out)
    }

    /// `Π_{i<j}(z_i - z_j)^{(α_i,α_j)} · Π_i e^{z_i D} e^{α_i} · θ^{α_1}_{z_1}⋯θ^{α_m}_{z_m}(w)`,
    /// the rational form of `e^{α_1}(z_1)⋯e^{α_m}(z_m) w`.
    pub fn common_form(
        &self,
        alphas: &[Vec<i64>],
        w: &StateVector<S>,
        cap: u32,
    ) -> Result<LocalizedSeries<S, StateVector<S>>> {
        if self.rule != AnnihilationRule::Intertwining {
            return Err(Error::UnsupportedExpansion(
                "the rational form exists only for the intertwining rule".into(),
            ));
        }
        let m = alphas.len();
        let vars = VarGroup::points(m);
        let mut acc = LocalizedSeries::<S, StateVector<S>>::one(vars);
        for (i, a) in alphas.iter().enumerate() {
            let taylor = self.divided_derivatives(&LatticeState::exp(a), cap as usize);
            let mut num = Terms::new();
            for (k, t) in taylor.iter().enumerate().take(cap as usize + 1) {
                let mut e = vec![0; m];
                e[i] = k as u32;
                poly::add_term(&mut num, e, t.clone());
            }
            let f = LocalizedSeries::new(vars, num, Denominator::new(), cap)?;
            acc = acc.mul(&f)?;
        }
        for i in 0..m {
            for j in i + 1..m {
                let k = self.spec.pair(&alphas[i], &alphas[j]);
                if k > 0 {
                    let d = Series::<S>::var(vars, i, 0).sub(&Series::var(vars, j, 0))?;
                    acc = acc.mul_series(&d.pow(k as u32)?)?;
                } else if k < 0 {
                    acc = acc.div_localizer(&Localizer::Difference(i, j), (-k) as u32)?;
                }
            }
        }
        let mut q: BTreeMap<Vec<i64>, StateVector<S>> = BTreeMap::new();
        for (s, c) in w.iter() {
            let mut cur: BTreeMap<Vec<i64>, StateVector<S>> =
                BTreeMap::from([(vec![0; m], StateVector::term(s.clone(), c.clone()))]);
            for (i, a) in alphas.iter().enumerate() {
                let mut next = BTreeMap::new();
                for (e, v) in &cur {
                    for (vs, vc) in v.iter() {
                        for (de, sv) in self.theta_state(a, vs) {
                            let mut ne = e.clone();
                            ne[i] += de;
                            let slot = next.entry(ne).or_insert_with(StateVector::zero);
                            slot.add_assign(&sv.scale(vc));
                        }
                    }
                }
                cur = next;
            }
            for (e, v) in cur {
                let slot = q.entry(e).or_insert_with(StateVector::zero);
                slot.add_assign(&v);
            }
        }
        q.retain(|_, v| !v.is_zero());
        let theta = multi_laurent_to_series(vars, &q)?;
        acc.mul(&theta)
    }

    /// `e^{α_1}(z_1)⋯e^{α_m}(z_m) w` expanded along `order`.
    pub fn y_product(
        &self,
        alphas: &[Vec<i64>],
        w: &StateVector<S>,
        order: &Sieve,
        cap: u32,
        grade: i64,
    ) -> Result<IteratedLaurent<S, StateVector<S>>> {
        if order.width() != alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: alphas.len(),
                found: order.width(),
            });
        }
        let f = self.common_form(alphas, w, cap)?;
        iota_expand(&f, &order.expansion_order()?, grade)
    }

    /// The same product by applying `e^{α_m}(z_m)` first and `e^{α_1}(z_1)`
    /// last, each variable exact up to exponent `kmax`.
    pub fn direct_composition(
        &self,
        alphas: &[Vec<i64>],
        w: &StateVector<S>,
        kmax: i64,
    ) -> Result<IteratedLaurent<S, StateVector<S>>> {
        let m = alphas.len();
        let vars = VarGroup::points(m);
        let mut terms: BTreeMap<SignedExp, StateVector<S>> = BTreeMap::from([(vec![0; m], w.clone())]);
        let mut constraints = Vec::new();
        let mut var_floor = vec![Some(0); m];
        for i in (0..m).rev() {
            let u = LatticeState::exp(&alphas[i]);
            let mut next = BTreeMap::new();
            let mut lowest = i64::MAX;
            for (e, v) in &terms {
                for (s, c) in v.iter() {
                    let series = self.vertex_series_capped(&u, s, kmax, u32::MAX)?;
                    for (&k, sv) in series.iter() {
                        if k > kmax {
                            break;
                        }
                        lowest = lowest.min(k);
                        let mut ne = e.clone();
                        ne[i] = k;
                        let slot = next.entry(ne).or_insert_with(StateVector::zero);
                        slot.add_assign(&sv.scale(c));
                    }
                }
            }
            next.retain(|_, v: &mut StateVector<S>| !v.is_zero());
            terms = next;
            let mut wv = vec![0; m];
            wv[i] = 1;
            let floor = (lowest != i64::MAX).then_some(lowest);
            constraints.push(Constraint {
                weights: wv,
                bound: Some(kmax),
                floor,
            });
            var_floor[i] = floor;
        }
        Ok(IteratedLaurent::from_parts(
            vars,
            ExpansionOrder::iterated(m),
            Denominator::new(),
            terms,
            Window {
                constraints,
                var_floor,
            },
        ))
    }
    fn basis_series(&self, u: &StateVector<S>, w: &LatticeState, zmax: i64, cap: u32) -> Result<Laurent<S>> {
        let mut out = Laurent::new();
        for (us, uc) in u.iter() {
            for (&k, v) in self.vertex_series_capped(us, w, zmax, cap)?.iter() {
                if k <= zmax {
                    laurent_add(&mut out, k, v.scale(uc));
                }
            }
        }
        Ok(out)
    }

    /// `θ^α_z(D s) - (D ∓ d/dz) θ^α_z(s)`, the sign matching the rule in use.
    pub fn intertwining_defect(&self, alpha: &[i64], s: &LatticeState) -> Laurent<S> {
        let mut out = Laurent::new();
        for (ds, c) in self.derivation_state(s).iter() {
            for (e, v) in self.theta_state(alpha, ds) {
                laurent_add(&mut out, e, v.scale(c));
            }
        }
        let ddz = match self.rule {
            AnnihilationRule::Intertwining => S::one(),
            AnnihilationRule::PlusDerivative => -S::one(),
        };
        for (e, v) in self.theta_state(alpha, s) {
            laurent_add(&mut out, e, self.derivation(&v).neg());
            if e != 0 {
                laurent_add(&mut out, e - 1, v.scale(&(ddz.clone() * S::from_i64(e))));
            }
        }
        out
    }

    /// `Y(v,z)1` is a power series with constant term `v`, checked up to `z^{cap}`.
    pub fn vacuum_check(&self, v: &LatticeState, cap: u32) -> Result<bool> {
        let s = self.vertex_series_capped(v, &LatticeState::vacuum(), cap as i64, u32::MAX)?;
        Ok(s.keys().all(|&k| k >= 0) && s.get(&0).cloned().unwrap_or_else(StateVector::zero) == StateVector::basis(v.clone()))
    }

    /// `Y(Dv,z)w = d/dz Y(v,z)w` coefficientwise up to `z^{zmax}`.
    pub fn translation_check(&self, v: &LatticeState, w: &LatticeState, zmax: i64) -> Result<bool> {
        let dv = self.derivation_state(v);
        let lhs = self.basis_series(&dv, w, zmax, u32::MAX)?;
        let base = self.vertex_series_capped(v, w, zmax + 1, u32::MAX)?;
        let mut rhs = Laurent::new();
        for (&k, c) in base.iter() {
            if k != 0 && k - 1 <= zmax {
                laurent_add(&mut rhs, k - 1, c.scale(&S::from_i64(k)));
            }
        }
        Ok(lhs == rhs)
    }

    /// `e^α(z)e^β(w)v` against `e^β(w)e^α(z)v` after clearing
    /// `(z-w)^{max(0, -(α,β))}`, both exact up to exponent `kmax` in each variable.
    pub fn commutativity_check(
        &self,
        alpha: &[i64],
        beta: &[i64],
        v: &StateVector<S>,
        kmax: i64,
    ) -> Result<Comparison> {
        let zw = self.direct_composition(&[alpha.to_vec(), beta.to_vec()], v, kmax)?;
        let wz = swap_two(&self.direct_composition(&[beta.to_vec(), alpha.to_vec()], v, kmax)?)?;
        let k = (-self.spec.pair(alpha, beta)).max(0) as u32;
        let den: Denominator = if k > 0 {
            Denominator::from([(Localizer::Difference(0, 1), k)])
        } else {
            Denominator::new()
        };
        clear_and_compare(&zw, &wz, &den)
    }

    /// `θ^α_z(e^{wD}e^β) = (z-w)^{(α,β)} e^{wD}e^β`, expanded in `w`, up to `w^{cap}`.
    pub fn normal_ordering_check(&self, alpha: &[i64], beta: &[i64], cap: u32) -> bool {
        let e = LatticeState::exp(beta);
        let taylor = self.divided_derivatives(&e, cap as usize);
        let k = self.spec.pair(alpha, beta);
        (0..=cap as usize).all(|a| {
            let mut lhs = Laurent::new();
            for (s, c) in taylor[a].iter() {
                for (ez, v) in self.theta_state(alpha, s) {
                    laurent_add(&mut lhs, ez, v.scale(c));
                }
            }
            let mut rhs = Laurent::new();
            for j in 0..=a {
                let c = binomial_s::<S>(k, j as i64) * sign::<S>(j as i64);
                laurent_add(&mut rhs, k - j as i64, taylor[a - j].scale(&c));
            }
            lhs == rhs
        })
    }
}

/// Exchange the two variables of a two-point expansion.
fn swap_two<S: Scalar, M: Module<S>>(f: &IteratedLaurent<S, M>) -> Result<IteratedLaurent<S, M>> {
    if f.vars().count != 2 || !f.kept().is_empty() {
        return Err(Error::UnsupportedExpansion("swap needs two points and no kept factors".into()));
    }
    let sw = |e: &[i64]| vec![e[1], e[0]];
    let rank = f.order().rank();
    let order = ExpansionOrder::new(vec![rank[1], rank[0]], Default::default())?;
    let terms = f.terms().iter().map(|(e, m)| (sw(e), m.clone())).collect();
    let w = f.window();
    let window = Window {
        constraints: w
            .constraints
            .iter()
            .map(|c| Constraint {
                weights: sw(&c.weights),
                bound: c.bound,
                floor: c.floor,
            })
            .collect(),
        var_floor: vec![w.var_floor[1], w.var_floor[0]],
    };
    Ok(IteratedLaurent::from_parts(f.vars(), order, Denominator::new(), terms, window))
}

/// Laurent polynomial in one variable as `N / z^k`.
pub fn laurent_to_series<S: Scalar>(q: &Laurent<S>) -> Result<LocalizedSeries<S, StateVector<S>>> {
    let m: BTreeMap<Vec<i64>, StateVector<S>> = q.iter().map(|(e, v)| (vec![*e], v.clone())).collect();
    multi_laurent_to_series(VarGroup::points(1), &m)
}

fn multi_laurent_to_series<S: Scalar, M: Module<S>>(
    vars: VarGroup,
    q: &BTreeMap<Vec<i64>, M>,
) -> Result<LocalizedSeries<S, M>> {
    let n = vars.count;
    let mut shift = vec![0i64; n];
    for e in q.keys() {
        for i in 0..n {
            shift[i] = shift[i].min(e[i]);
        }
    }
    let mut num = Terms::new();
    for (e, v) in q {
        let ex: Vec<u32> = e.iter().zip(&shift).map(|(a, s)| (a - s) as u32).collect();
        poly::add_term(&mut num, ex, v.clone());
    }
    let den: Denominator = shift
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < 0)
        .map(|(i, s)| (Localizer::Point(i), (-s) as u32))
        .collect();
    LocalizedSeries::new(vars, num, den, EXACT)
}

/// Monomials `Π γ_k(-n)^c` in `r` colours with `Σ n·c ≤ w`.
pub fn heisenberg_monomials(r: usize, w: u32) -> Vec<BTreeMap<(usize, u32), u32>> {
    let keys: Vec<(usize, u32)> = (1..=w).flat_map(|n| (0..r).map(move |k| (k, n))).collect();
    fn go(
        keys: &[(usize, u32)],
        idx: usize,
        left: u32,
        cur: &mut BTreeMap<(usize, u32), u32>,
        out: &mut Vec<BTreeMap<(usize, u32), u32>>,
    ) {
        if idx == keys.len() {
            out.push(cur.clone());
            return;
        }
        let (k, n) = keys[idx];
        let mut c = 0;
        while c * n <= left {
            if c > 0 {
                cur.insert((k, n), c);
            }
            go(keys, idx + 1, left - c * n, cur, out);
            c += 1;
        }
        cur.remove(&(k, n));
    }
    let mut out = Vec::new();
    go(&keys, 0, w, &mut BTreeMap::new(), &mut out);
    out
}

/// Integer value of a scalar known to be an integer, for reports.
pub fn as_integer(q: &BigRational) -> Option<i64> {
    q.is_integer().then(|| q.to_integer().to_i64()).flatten()
}
