//! R-matrices with singular coefficients, twisted products, and the
//! Hochschild complex of singular multilinear maps.
//!
//! An R-matrix acts on `V ⊗ V` with coefficients rational in two points
//! `x, y`. For the lattice, `R(e^a ⊗ e^b) = (x-y)^{(a,b)} e^a ⊗ e^b`, and
//! the rest is forced by multiplicativity in each factor together with
//! `R(Du ⊗ v) = (D⊗1 + ∂_x) R(u ⊗ v)`, `R(u ⊗ Dv) = (1⊗D + ∂_y) R(u ⊗ v)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::RwLock;

use crate::combinat::factorial;
use crate::error::{Error, Result};
use crate::freefield::{FieldState, WickMonomial};
use crate::hopf::HopfElement;
use crate::lattice::{LatticeSpec, LatticeState, LatticeVA, StateVector};
use crate::linear::{Algebra, Lin, Module};
use crate::scalar::Scalar;
use crate::series::localized::{Denominator, LocalizedSeries, Localizer, Series, Side, VarGroup};
use crate::series::poly::{self, Terms};

/// `V^{⊗n}` on lattice basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorState<S: Scalar>(pub Lin<Vec<LatticeState>, S>);

impl<S: Scalar> TensorState<S> {
    pub fn basis(k: Vec<LatticeState>) -> Self {
        TensorState(Lin::basis(k))
    }

    pub fn term(k: Vec<LatticeState>, c: S) -> Self {
        TensorState(Lin::term(k, c))
    }

    fn map_component(&self, i: usize, f: impl Fn(&LatticeState) -> StateVector<S>) -> Self {
        let mut out = Lin::new();
        for (k, c) in self.0.iter() {
            for (p, d) in f(&k[i]).iter() {
                let mut nk = k.clone();
                nk[i] = p.clone();
                out.add_term(nk, c.clone() * d.clone());
            }
        }
        TensorState(out)
    }

    /// Multiply component `j` into component `i < j`.
    fn merge(&self, i: usize, j: usize) -> Self {
        let mut out = Lin::new();
        for (k, c) in self.0.iter() {
            let mut nk = k.clone();
            let q = nk.remove(j);
            nk[i] = nk[i].mul(&q);
            out.add_term(nk, c.clone());
        }
        TensorState(out)
    }

    /// Product of all components.
    pub fn multiply_all(&self) -> StateVector<S> {
        let mut out = StateVector::zero();
        for (k, c) in self.0.iter() {
            let p = k.iter().fold(LatticeState::vacuum(), |a, b| a.mul(b));
            out.add_assign(&StateVector::term(p, c.clone()));
        }
        out
    }
}

impl<S: Scalar> Module<S> for TensorState<S> {
    fn zero() -> Self {
        TensorState(Lin::new())
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    fn add_assign(&mut self, other: &Self) {
        self.0.add_assign(&other.0);
    }
    fn scale(&self, s: &S) -> Self {
        TensorState(self.0.scaled(s))
    }
}

pub type TensorSeries<S> = LocalizedSeries<S, TensorState<S>>;

/// Replace every basis tensor `k` of `f` by the series `g(k)`, linearly.
fn apply_linear<S: Scalar>(
    f: &TensorSeries<S>,
    vars: VarGroup,
    mut g: impl FnMut(&Vec<LatticeState>) -> Result<TensorSeries<S>>,
) -> Result<TensorSeries<S>> {
    let mut acc = TensorSeries::zero(vars);
    for (e, t) in f.numerator() {
        for (k, c) in t.0.iter() {
            acc = acc.add(&g(k)?.mul_monomial(e, c))?;
        }
    }
    for (l, &n) in f.denominator() {
        acc = acc.div_localizer(l, n)?;
    }
    Ok(acc)
}

/// A singular R-matrix on lattice states, with values in two points.
pub trait RMatrix<S: Scalar>: Sync {
    fn apply(&self, p: &LatticeState, q: &LatticeState) -> Result<TensorSeries<S>>;
}

/// `R = 1`.
pub struct IdentityR;

impl<S: Scalar> RMatrix<S> for IdentityR {
    fn apply(&self, p: &LatticeState, q: &LatticeState) -> Result<TensorSeries<S>> {
        Ok(TensorSeries::constant(
            VarGroup::points(2),
            TensorState::basis(vec![p.clone(), q.clone()]),
        ))
    }
}

/// `R + E`, where `E` adds fixed series on listed basis pairs.
pub struct PerturbedR<'a, S: Scalar> {
    pub base: &'a dyn RMatrix<S>,
    pub extra: BTreeMap<(LatticeState, LatticeState), TensorSeries<S>>,
}

impl<S: Scalar> RMatrix<S> for PerturbedR<'_, S> {
    fn apply(&self, p: &LatticeState, q: &LatticeState) -> Result<TensorSeries<S>> {
        let r = self.base.apply(p, q)?;
        match self.extra.get(&(p.clone(), q.clone())) {
            Some(e) => r.add(e),
            None => Ok(r),
        }
    }
}

type Memo<K, S> = RwLock<HashMap<K, TensorSeries<S>>>;

/// The R-matrix of an even lattice, extended from group elements by
/// multiplicativity and memoized per basis pair.
pub struct LatticeR<S: Scalar> {
    va: LatticeVA<S>,
    memo: Memo<(LatticeState, LatticeState), S>,
}

impl<S: Scalar> LatticeR<S> {
    pub fn new(spec: LatticeSpec) -> Self {
        LatticeR {
            va: LatticeVA::new(spec),
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn algebra(&self) -> &LatticeVA<S> {
        &self.va
    }

    fn vars() -> VarGroup {
        VarGroup::points(2)
    }

    fn unit_vector(&self, k: usize) -> Vec<i64> {
        let mut v = vec![0; self.va.spec().rank()];
        v[k] = 1;
        v
    }

    /// `(x-y)^{(a,b)} e^a ⊗ e^b`.
    fn diagonal(&self, a: &[i64], b: &[i64]) -> Result<TensorSeries<S>> {
        let vars = Self::vars();
        let k = self.va.spec().pair(a, b);
        let t = TensorState::basis(vec![LatticeState::exp(a), LatticeState::exp(b)]);
        let c = TensorSeries::constant(vars, t);
        if k >= 0 {
            let d = Series::<S>::var(vars, 0, 0).sub(&Series::var(vars, 1, 0))?;
            c.mul_series(&d.pow(k as u32)?)
        } else {
            c.div_localizer(&Localizer::Difference(0, 1), (-k) as u32)
        }
    }

    /// `(D ⊗ 1 + ∂_x)^{(n)}` (side 0) or `(1 ⊗ D + ∂_y)^{(n)}` (side 1).
    fn shift(&self, f: &TensorSeries<S>, side: usize, n: u32) -> Result<TensorSeries<S>> {
        let mut g = f.clone();
        for _ in 0..n {
            let d = g.map_coeffs(|t| t.map_component(side, |p| self.va.derivation_state(p)));
            g = d.add(&g.derivative(Self::vars().var(side, 0))?)?;
        }
        let inv = S::from_bigint(&factorial(n)).recip().expect("nonzero factorial");
        Ok(g.scale(&inv))
    }

    /// `R(γ_k(-n) ⊗ q)`, from `γ(-1) = D(e^{e_k}) e^{-e_k}`.
    fn gen_left(&self, k: usize, n: u32, q: &LatticeState) -> Result<TensorSeries<S>> {
        let e = self.unit_vector(k);
        let neg: Vec<i64> = e.iter().map(|x| -x).collect();
        let first = self.shift(&self.apply(&LatticeState::exp(&e), q)?, 0, 1)?;
        let one = apply_linear(&first, Self::vars(), |key| {
            let r = self.apply(&LatticeState::exp(&neg), &key[1])?;
            Ok(r.map_coeffs(|t| t.map_component(0, |p| StateVector::basis(key[0].mul(p)))))
        })?;
        self.shift(&one, 0, n - 1)
    }

    /// `R(e^a ⊗ δ_k(-n))`.
    fn gen_right(&self, a: &[i64], k: usize, n: u32) -> Result<TensorSeries<S>> {
        let e = self.unit_vector(k);
        let neg: Vec<i64> = e.iter().map(|x| -x).collect();
        let third = self.diagonal(a, &neg)?;
        let one = apply_linear(&third, Self::vars(), |key| {
            let r = self.shift(&self.diagonal(key[0].alpha(), &e)?, 1, 1)?;
            Ok(r.map_coeffs(|t| t.map_component(1, |p| StateVector::basis(p.mul(&key[1])))))
        })?;
        self.shift(&one, 1, n - 1)
    }

    fn compute(&self, p: &LatticeState, q: &LatticeState) -> Result<TensorSeries<S>> {
        let vars = Self::vars();
        if let Some((&(k, n), _)) = p.heis().iter().next_back() {
            // R(γ u' ⊗ w) = m₁₂ R₂₃ R₁₃ (γ ⊗ u' ⊗ w)
            let rest = LatticeState::new(p.alpha(), {
                let mut h = p.heis().clone();
                let c = h[&(k, n)];
                if c == 1 {
                    h.remove(&(k, n));
                } else {
                    h.insert((k, n), c - 1);
                }
                h
            })?;
            let g = self.gen_left(k, n, q)?;
            return apply_linear(&g, vars, |key| {
                let r = self.apply(&rest, &key[1])?;
                Ok(r.map_coeffs(|t| t.map_component(0, |x| StateVector::basis(key[0].mul(x)))))
            });
        }
        if let Some((&(k, n), _)) = q.heis().iter().next_back() {
            // R(u ⊗ δ w') = m₂₃ R₁₂ R₁₃ (u ⊗ δ ⊗ w')
            let rest = LatticeState::new(q.alpha(), {
                let mut h = q.heis().clone();
                let c = h[&(k, n)];
                if c == 1 {
                    h.remove(&(k, n));
                } else {
                    h.insert((k, n), c - 1);
                }
                h
            })?;
            let r13 = self.apply(p, &rest)?;
            return apply_linear(&r13, vars, |key| {
                if !key[0].heis().is_empty() {
                    return Err(Error::IllFounded("group element acquired generators".into()));
                }
                let r = self.gen_right(key[0].alpha(), k, n)?;
                Ok(r.map_coeffs(|t| t.map_component(1, |x| StateVector::basis(x.mul(&key[1])))))
            });
        }
        self.diagonal(p.alpha(), q.alpha())
    }
}

impl<S: Scalar> RMatrix<S> for LatticeR<S> {
    fn apply(&self, p: &LatticeState, q: &LatticeState) -> Result<TensorSeries<S>> {
        let key = (p.clone(), q.clone());
        if let Some(v) = self.memo.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = self.compute(p, q)?;
        self.memo.write().unwrap().insert(key, v.clone());
        Ok(v)
    }
}

/// `R_{ij}` on a tensor series over `vars`, with the R variables placed
/// at points `pi, pj`.
fn apply_rij<S: Scalar>(
    r: &dyn RMatrix<S>,
    f: &TensorSeries<S>,
    (i, j): (usize, usize),
    (pi, pj): (usize, usize),
) -> Result<TensorSeries<S>> {
    let vars = f.vars();
    apply_linear(f, vars, |key| {
        let v = r.apply(&key[i], &key[j])?;
        let placed = if vars.count == 2 && (pi, pj) == (0, 1) {
            v
        } else {
            v.embed(vars, &[pi, pj])?
        };
        Ok(placed.map_coeffs(|t| {
            let mut out = Lin::new();
            for (k2, c) in t.0.iter() {
                let mut nk = key.clone();
                nk[i] = k2[0].clone();
                nk[j] = k2[1].clone();
                out.add_term(nk, c.clone());
            }
            TensorState(out)
        }))
    })
}

fn tensor3<S: Scalar>(u: &LatticeState, v: &LatticeState, w: &LatticeState) -> TensorSeries<S> {
    TensorSeries::constant(
        VarGroup::points(3),
        TensorState::basis(vec![u.clone(), v.clone(), w.clone()]),
    )
}

/// `R₁₂R₁₃R₂₃` and `R₂₃R₁₃R₁₂` on `u ⊗ v ⊗ w` in three points.
pub fn ybe_sides<S: Scalar>(
    r: &dyn RMatrix<S>,
    u: &LatticeState,
    v: &LatticeState,
    w: &LatticeState,
) -> Result<(TensorSeries<S>, TensorSeries<S>)> {
    let t = tensor3(u, v, w);
    let lhs = apply_rij(r, &t, (1, 2), (1, 2))?;
    let lhs = apply_rij(r, &lhs, (0, 2), (0, 2))?;
    let lhs = apply_rij(r, &lhs, (0, 1), (0, 1))?;
    let rhs = apply_rij(r, &t, (0, 1), (0, 1))?;
    let rhs = apply_rij(r, &rhs, (0, 2), (0, 2))?;
    let rhs = apply_rij(r, &rhs, (1, 2), (1, 2))?;
    Ok((lhs, rhs))
}

/// `None` on success, else the difference of the two sides.
pub fn ybe_check<S: Scalar>(
    r: &dyn RMatrix<S>,
    u: &LatticeState,
    v: &LatticeState,
    w: &LatticeState,
) -> Result<Option<TensorSeries<S>>> {
    let (l, rr) = ybe_sides(r, u, v, w)?;
    let d = l.sub(&rr)?;
    Ok((!d.is_zero()).then_some(d))
}

/// `R(1 ⊗ v) = 1 ⊗ v` and `R(v ⊗ 1) = v ⊗ 1`.
pub fn unit_check<S: Scalar>(r: &dyn RMatrix<S>, v: &LatticeState) -> Result<bool> {
    let one = LatticeState::vacuum();
    let vars = VarGroup::points(2);
    let a = r.apply(&one, v)?;
    let b = r.apply(v, &one)?;
    Ok(a.agrees_with(&TensorSeries::constant(vars, TensorState::basis(vec![one.clone(), v.clone()])))?
        && b.agrees_with(&TensorSeries::constant(vars, TensorState::basis(vec![v.clone(), one])))?)
}

/// `R^{x+t, y+t} = R^{x,y}`.
pub fn translation_check<S: Scalar>(r: &dyn RMatrix<S>, p: &LatticeState, q: &LatticeState) -> Result<bool> {
    let f = r.apply(p, q)?;
    let v3 = VarGroup::points(3);
    let shifted = f.substitute_points(v3, &[vec![(0, S::one()), (2, S::one())], vec![(1, S::one()), (2, S::one())]])?;
    shifted.agrees_with(&f.embed(v3, &[0, 1])?)
}

/// `R(uv ⊗ w) = m₁₂R₂₃R₁₃(u ⊗ v ⊗ w)` with all R in the same two points.
pub fn multiplicativity_left<S: Scalar>(
    r: &dyn RMatrix<S>,
    u: &LatticeState,
    v: &LatticeState,
    w: &LatticeState,
) -> Result<bool> {
    let vars = VarGroup::points(2);
    let t = TensorSeries::constant(vars, TensorState::basis(vec![u.clone(), v.clone(), w.clone()]));
    let t = apply_rij(r, &t, (0, 2), (0, 1))?;
    let t = apply_rij(r, &t, (1, 2), (0, 1))?;
    let rhs = t.map_coeffs(|s| s.merge(0, 1));
    r.apply(&u.mul(v), w)?.agrees_with(&rhs)
}

/// `R(u ⊗ vw) = m₂₃R₁₂R₁₃(u ⊗ v ⊗ w)` with all R in the same two points.
pub fn multiplicativity_right<S: Scalar>(
    r: &dyn RMatrix<S>,
    u: &LatticeState,
    v: &LatticeState,
    w: &LatticeState,
) -> Result<bool> {
    let vars = VarGroup::points(2);
    let t = TensorSeries::constant(vars, TensorState::basis(vec![u.clone(), v.clone(), w.clone()]));
    let t = apply_rij(r, &t, (0, 2), (0, 1))?;
    let t = apply_rij(r, &t, (0, 1), (0, 1))?;
    let rhs = t.map_coeffs(|s| s.merge(1, 2));
    r.apply(u, &v.mul(w))?.agrees_with(&rhs)
}

/// The associativity chain
/// `m₁₂R₁₂m₂₃R₂₃ = m₁₂m₂₃R₁₂R₁₃R₂₃ = m₁₂m₁₂R₂₃R₁₃R₁₂ = m₁₂R₁₂m₁₂R₁₂`, one
/// flag per equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainReport {
    /// `R₁₂m₂₃ = m₂₃R₁₂R₁₃`.
    pub split_right: bool,
    /// Both triple products agree after multiplying out.
    pub middle: bool,
    /// `R₁₂m₁₂ = m₁₂R₂₃R₁₃`.
    pub split_left: bool,
}

impl ChainReport {
    pub fn all(&self) -> bool {
        self.split_right && self.middle && self.split_left
    }
}

pub fn associativity_chain<S: Scalar>(
    r: &dyn RMatrix<S>,
    u: &LatticeState,
    v: &LatticeState,
    w: &LatticeState,
) -> Result<ChainReport> {
    let (l, rr) = ybe_sides(r, u, v, w)?;
    let ml = l.map_coeffs(|t| t.multiply_all());
    let mr = rr.map_coeffs(|t| t.multiply_all());
    Ok(ChainReport {
        split_right: multiplicativity_right(r, u, v, w)?,
        middle: ml.agrees_with(&mr)?,
        split_left: multiplicativity_left(r, u, v, w)?,
    })
}

/// `m R^{x,y}(u ⊗ w)`, the twisted product before translation.
pub fn twisted_product<S: Scalar>(
    r: &dyn RMatrix<S>,
    u: &StateVector<S>,
    w: &StateVector<S>,
) -> Result<LocalizedSeries<S, StateVector<S>>> {
    let vars = VarGroup::points(2);
    let mut acc = LocalizedSeries::zero(vars);
    for (p, a) in u.iter() {
        for (q, b) in w.iter() {
            let f = r.apply(p, q)?.map_coeffs(|t| t.multiply_all());
            acc = acc.add(&f.scale(&(a.clone() * b.clone())))?;
        }
    }
    Ok(acc)
}

/// `m (e^{xD} ⊗ e^{yD}) R^{x,y}(u ⊗ w)`, the rational form of
/// `Y(u,x)Y(w,y)1`, with Taylor factors exact to degree `cap`.
pub fn translated_product<S: Scalar>(
    r: &dyn RMatrix<S>,
    va: &LatticeVA<S>,
    u: &StateVector<S>,
    w: &StateVector<S>,
    cap: u32,
) -> Result<LocalizedSeries<S, StateVector<S>>> {
    let vars = VarGroup::points(2);
    let taylor = |s: &LatticeState, point: usize| -> Result<LocalizedSeries<S, StateVector<S>>> {
        let d = va.divided_derivatives(s, cap as usize);
        let mut num = Terms::new();
        for (i, t) in d.iter().enumerate().take(cap as usize + 1) {
            let mut e = vec![0; 2];
            e[point] = i as u32;
            poly::add_term(&mut num, e, t.clone());
        }
        LocalizedSeries::new(vars, num, Denominator::new(), cap)
    };
    let mut acc = LocalizedSeries::zero(vars);
    for (p, a) in u.iter() {
        for (q, b) in w.iter() {
            let f = r.apply(p, q)?;
            let mut part = LocalizedSeries::<S, StateVector<S>>::zero(vars);
            for (e, t) in f.numerator() {
                for (k, c) in t.0.iter() {
                    let g = taylor(&k[0], 0)?.mul(&taylor(&k[1], 1)?)?;
                    part = part.add(&g.mul_monomial(e, c))?;
                }
            }
            for (l, &n) in f.denominator() {
                part = part.div_localizer(l, n)?;
            }
            acc = acc.add(&part.scale(&(a.clone() * b.clone())))?;
        }
    }
    Ok(acc)
}

/// `u_n w` read off the translated product at `y = 0`.
pub fn mode_from_product<S: Scalar>(
    r: &dyn RMatrix<S>,
    va: &LatticeVA<S>,
    u: &StateVector<S>,
    n: i64,
    w: &StateVector<S>,
    cap: u32,
) -> Result<StateVector<S>> {
    let f = translated_product(r, va, u, w, cap)?;
    let at0 = f.substitute_points(VarGroup::points(1), &[vec![(0, S::one())], vec![]])?;
    let k = at0.denominator().get(&Localizer::Point(0)).copied().unwrap_or(0) as i64;
    let e = -n - 1 + k;
    if e < 0 {
        return Ok(StateVector::zero());
    }
    if e > at0.cap() as i64 {
        return Err(Error::CapExhausted(format!("mode {n} needs degree {e}, cap {}", at0.cap())));
    }
    Ok(at0.coeff(&[e as u32]))
}

/// Commutative algebras with a monomial basis, as cochain arguments.
pub trait StateAlgebra<S: Scalar>: Algebra<S> {
    type Key: Ord + Clone + Debug + Hash + Send + Sync;
    fn from_key(k: &Self::Key) -> Self;
    fn key_terms(&self) -> Vec<(Self::Key, S)>;
    fn unit_key() -> Self::Key;
}

impl<S: Scalar> StateAlgebra<S> for StateVector<S> {
    type Key = LatticeState;
    fn from_key(k: &LatticeState) -> Self {
        StateVector::basis(k.clone())
    }
    fn key_terms(&self) -> Vec<(LatticeState, S)> {
        self.iter().map(|(k, c)| (k.clone(), c.clone())).collect()
    }
    fn unit_key() -> LatticeState {
        LatticeState::vacuum()
    }
}

impl<S: Scalar> StateAlgebra<S> for FieldState<S> {
    type Key = WickMonomial;
    fn from_key(k: &WickMonomial) -> Self {
        FieldState::basis(k.clone())
    }
    fn key_terms(&self) -> Vec<(WickMonomial, S)> {
        self.iter().map(|(k, c)| (k.clone(), c.clone())).collect()
    }
    fn unit_key() -> WickMonomial {
        WickMonomial::unit()
    }
}

/// A singular multilinear map `A^n → A ⊗ K_n`, argument `i` at point `i`.
/// When arguments are merged by a product, the merged argument sits at
/// the point of its first factor.
#[derive(Clone, Debug)]
pub enum Cochain<S: Scalar, A: StateAlgebra<S>> {
    /// Values on basis tuples; zero elsewhere.
    Table {
        arity: usize,
        dim: usize,
        table: BTreeMap<Vec<A::Key>, LocalizedSeries<S, A>>,
    },
    Coboundary(Box<Cochain<S, A>>),
}

impl<S: Scalar, A: StateAlgebra<S>> Cochain<S, A> {
    pub fn table(arity: usize, dim: usize, table: BTreeMap<Vec<A::Key>, LocalizedSeries<S, A>>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let vars = VarGroup::new(arity, dim)?;
        for (k, v) in &table {
            if k.len() != arity || v.vars() != vars {
                return Err(Error::IncompatibleVars("cochain entry has the wrong arity".into()));
            }
            if k.contains(&A::unit_key()) && !v.is_zero() {
                return Err(Error::IncompatibleVars("cochain is not normalized: nonzero on the unit".into()));
            }
        }
        Ok(Cochain::Table { arity, dim, table })
    }

    pub fn arity(&self) -> usize {
        match self {
            Cochain::Table { arity, .. } => *arity,
            Cochain::Coboundary(f) => f.arity() + 1,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Cochain::Table { dim, .. } => *dim,
            Cochain::Coboundary(f) => f.dim(),
        }
    }

    pub fn vars(&self) -> Result<VarGroup> {
        VarGroup::new(self.arity(), self.dim())
    }

    /// Value on a tuple of basis elements.
    pub fn eval(&self, args: &[A::Key]) -> Result<LocalizedSeries<S, A>> {
        let vars = self.vars()?;
        if args.len() != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: self.arity(),
                found: args.len(),
            });
        }
        match self {
            Cochain::Table { table, .. } => Ok(table.get(args).cloned().unwrap_or_else(|| LocalizedSeries::zero(vars))),
            Cochain::Coboundary(f) => coboundary_eval(f, args, vars),
        }
    }

    /// Value on arbitrary elements, by multilinearity.
    pub fn eval_elems(&self, args: &[A]) -> Result<LocalizedSeries<S, A>> {
        let vars = self.vars()?;
        let mut acc = LocalizedSeries::zero(vars);
        let mut tuples: Vec<(Vec<A::Key>, S)> = vec![(Vec::new(), S::one())];
        for a in args {
            let terms = a.key_terms();
            tuples = tuples
                .into_iter()
                .flat_map(|(k, c)| {
                    terms.iter().map(move |(t, d)| {
                        let mut nk = k.clone();
                        nk.push(t.clone());
                        (nk, c.clone() * d.clone())
                    })
                })
                .collect();
        }
        for (k, c) in tuples {
            acc = acc.add(&self.eval(&k)?.scale(&c))?;
        }
        Ok(acc)
    }
}

/// `δf(a_1..a_{n+1}) = a_1 f(a_2..) + Σ_i (-1)^i f(.., a_i a_{i+1}, ..) + (-1)^{n+1} f(..a_n) a_{n+1}`.
pub fn hochschild_delta<S: Scalar, A: StateAlgebra<S>>(f: &Cochain<S, A>) -> Cochain<S, A> {
    Cochain::Coboundary(Box::new(f.clone()))
}

fn coboundary_eval<S: Scalar, A: StateAlgebra<S>>(
    f: &Cochain<S, A>,
    args: &[A::Key],
    vars: VarGroup,
) -> Result<LocalizedSeries<S, A>> {
    let n = f.arity();
    let first = A::from_key(&args[0]);
    let head = f
        .eval(&args[1..])?
        .embed(vars, &(1..=n).collect::<Vec<_>>())?
        .map_coeffs(|m| first.mul(m));
    let mut acc = head;
    for i in 1..=n {
        let prod = A::from_key(&args[i - 1]).mul(&A::from_key(&args[i]));
        let map: Vec<usize> = (0..n).map(|j| if j < i { j } else { j + 1 }).collect();
        let sgn = if i % 2 == 0 { S::one() } else { -S::one() };
        for (k, c) in prod.key_terms() {
            let mut a: Vec<A::Key> = args[..i - 1].to_vec();
            a.push(k);
            a.extend_from_slice(&args[i + 1..]);
            let v = f.eval(&a)?.embed(vars, &map)?;
            acc = acc.add(&v.scale(&(c * sgn.clone())))?;
        }
    }
    let last = A::from_key(&args[n]);
    let sgn = if (n + 1) % 2 == 0 { S::one() } else { -S::one() };
    let tail = f
        .eval(&args[..n])?
        .embed(vars, &(0..n).collect::<Vec<_>>())?
        .map_coeffs(|m| m.mul(&last));
    acc.add(&tail.scale(&sgn))
}

/// A normalized table cochain on `domain^arity` with sparse random entries
/// `c · x_k^e / (x_i - x_j)^s` times a random basis state.
pub fn random_cochain<S: Scalar, R: rand::Rng>(
    rng: &mut R,
    arity: usize,
    domain: &[LatticeState],
) -> Result<Cochain<S, StateVector<S>>> {
    let vars = VarGroup::new(arity, 1)?;
    let mut tuples: Vec<Vec<LatticeState>> = vec![vec![]];
    for _ in 0..arity {
        tuples = tuples
            .into_iter()
            .flat_map(|t| domain.iter().map(move |d| [t.clone(), vec![d.clone()]].concat()))
            .collect();
    }
    let mut table = BTreeMap::new();
    for t in tuples {
        if t.contains(&LatticeState::vacuum()) || rng.gen_bool(0.4) {
            continue;
        }
        let c = S::from_i64(rng.gen_range(-3..=3));
        let state = StateVector::term(domain[rng.gen_range(0..domain.len())].clone(), c);
        let mut e = vec![0u32; arity];
        e[rng.gen_range(0..arity)] = rng.gen_range(0..3);
        let mut v = LocalizedSeries::constant(vars, state).mul_monomial(&e, &S::one());
        if arity > 1 {
            let i = rng.gen_range(0..arity - 1);
            let j = rng.gen_range(i + 1..arity);
            v = v.div_localizer(&Localizer::Difference(i, j), rng.gen_range(0..3))?;
        }
        table.insert(t, v);
    }
    Cochain::table(arity, 1, table)
}

/// A Wick monomial whose factors carry the point where they sit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LocatedMonomial(BTreeMap<(usize, usize, Vec<u32>), u32>);

impl LocatedMonomial {
    /// `m` placed at `point`.
    pub fn at(m: &WickMonomial, point: usize) -> Self {
        LocatedMonomial(
            m.factors()
                .iter()
                .map(|((f, j), c)| ((point, *f, j.clone()), *c))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (k, c) in &other.0 {
            *m.entry(k.clone()).or_insert(0) += c;
        }
        LocatedMonomial(m)
    }

    fn without(&self, k: &(usize, usize, Vec<u32>)) -> Self {
        let mut m = self.0.clone();
        let c = m[k];
        if c == 1 {
            m.remove(k);
        } else {
            m.insert(k.clone(), c - 1);
        }
        LocatedMonomial(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocatedState<S: Scalar>(pub Lin<LocatedMonomial, S>);

impl<S: Scalar> Module<S> for LocatedState<S> {
    fn zero() -> Self {
        LocatedState(Lin::new())
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    fn add_assign(&mut self, other: &Self) {
        self.0.add_assign(&other.0);
    }
    fn scale(&self, s: &S) -> Self {
        LocatedState(self.0.scaled(s))
    }
}

impl<S: Scalar> LocatedState<S> {
    fn times(&self, m: &LocatedMonomial) -> Self {
        LocatedState(self.0.map_linear(|k| Lin::basis(k.mul(m))))
    }
}

/// `f(a, b) = Σ` over single contractions between a factor of `a` and a
/// factor of `b`, each contributing `D^(j)_p D^(j')_{p'} Δ(x_p - x_{p'})`.
pub struct ContractionCochain<S: Scalar> {
    pub propagator: Series<S>,
}

impl<S: Scalar> ContractionCochain<S> {
    pub fn eval(
        &self,
        vars: VarGroup,
        a: &LocatedMonomial,
        b: &LocatedMonomial,
    ) -> Result<LocalizedSeries<S, LocatedState<S>>> {
        let mut acc = LocalizedSeries::zero(vars);
        for (ka, &ca) in &a.0 {
            for (kb, &cb) in &b.0 {
                if ka.0 == kb.0 {
                    return Err(Error::IncompatibleVars("contracted factors share a point".into()));
                }
                let placed = self
                    .propagator
                    .substitute_points(vars, &[vec![(ka.0, S::one()), (kb.0, -S::one())]])?;
                let d = placed
                    .act(&HopfElement::d(&ka.2), ka.0, Side::Left)?
                    .act(&HopfElement::d(&kb.2), kb.0, Side::Left)?;
                let rest = a.without(ka).mul(&b.without(kb));
                let state = LocatedState(Lin::term(rest, S::from_i64((ca * cb) as i64)));
                acc = acc.add(&LocalizedSeries::constant(vars, state).mul_series(&d)?)?;
            }
        }
        Ok(acc)
    }

    /// `a f(b,c) - f(ab,c) + f(a,bc) - f(a,b) c` for `a, b, c` at points 0, 1, 2.
    pub fn delta(&self, a: &WickMonomial, b: &WickMonomial, c: &WickMonomial) -> Result<LocalizedSeries<S, LocatedState<S>>> {
        let vars = VarGroup::new(3, self.propagator.vars().dim)?;
        let (a, b, c) = (LocatedMonomial::at(a, 0), LocatedMonomial::at(b, 1), LocatedMonomial::at(c, 2));
        let t1 = self.eval(vars, &b, &c)?.map_coeffs(|s| s.times(&a));
        let t2 = self.eval(vars, &a.mul(&b), &c)?;
        let t3 = self.eval(vars, &a, &b.mul(&c))?;
        let t4 = self.eval(vars, &a, &b)?.map_coeffs(|s| s.times(&c));
        t1.sub(&t2)?.add(&t3)?.sub(&t4)
    }
}
