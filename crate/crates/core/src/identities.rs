//! Mode identities on graded vertex algebras in one dimension.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::RwLock;

use crate::combinat::binomial_s;
use crate::error::{Error, Result};
use crate::freefield::{FieldState, FreeField, WickMonomial};
use crate::lattice::{LatticeState, LatticeVA, StateVector};
use crate::linear::{Lin, Module};
use crate::scalar::{sign, Scalar};

/// Modes of basis states of a graded vertex algebra.
pub trait VertexAlgebra<S: Scalar>: Sync {
    type Basis: Clone + Ord + Hash + Debug + Send + Sync;

    fn weight(&self, b: &Self::Basis) -> i64;

    /// `u_n w`, failing with `CapExhausted` when the coefficient lies
    /// beyond `cap` Taylor terms.
    fn basis_mode(&self, u: &Self::Basis, n: i64, w: &Self::Basis, cap: u32) -> Result<Lin<Self::Basis, S>>;

    /// Least `N` with `u_n w = 0` for all `n ≥ N`; `None` when every mode vanishes.
    fn vanishing_bound(&self, u: &Self::Basis, w: &Self::Basis) -> Result<Option<i64>>;
}

impl<S: Scalar> VertexAlgebra<S> for LatticeVA<S> {
    type Basis = LatticeState;

    fn weight(&self, b: &LatticeState) -> i64 {
        LatticeVA::weight(self, b)
    }

    fn basis_mode(&self, u: &LatticeState, n: i64, w: &LatticeState, cap: u32) -> Result<Lin<LatticeState, S>> {
        let r = self.mode_capped(&StateVector::basis(u.clone()), n, &StateVector::basis(w.clone()), cap)?;
        Ok(r.0)
    }

    fn vanishing_bound(&self, u: &LatticeState, w: &LatticeState) -> Result<Option<i64>> {
        Ok(self.lowest_exponent(u, w).map(|lo| -lo))
    }
}

impl<S: Scalar> VertexAlgebra<S> for FreeField<S> {
    type Basis = WickMonomial;

    /// `φ` has weight 1 and each derivative adds 1, matching `Δ = x^{-2}`.
    fn weight(&self, b: &WickMonomial) -> i64 {
        b.factors()
            .iter()
            .map(|((_, j), c)| (1 + j.iter().sum::<u32>() as i64) * *c as i64)
            .sum()
    }

    fn basis_mode(&self, u: &WickMonomial, n: i64, w: &WickMonomial, cap: u32) -> Result<Lin<WickMonomial, S>> {
        let r = self.mode_capped(&FieldState::basis(u.clone()), n, &FieldState::basis(w.clone()), cap)?;
        Ok(r.0)
    }

    fn vanishing_bound(&self, u: &WickMonomial, w: &WickMonomial) -> Result<Option<i64>> {
        self.pole_order(u, w)
    }
}

/// Memoized modes over an algebra, shareable across threads.
pub struct ModeTable<'a, S: Scalar, A: VertexAlgebra<S>> {
    alg: &'a A,
    cap: u32,
    memo: RwLock<HashMap<(A::Basis, i64, A::Basis), Lin<A::Basis, S>>>,
    bounds: RwLock<HashMap<(A::Basis, A::Basis), Option<i64>>>,
}

impl<'a, S: Scalar, A: VertexAlgebra<S>> ModeTable<'a, S, A> {
    pub fn new(alg: &'a A, cap: u32) -> Self {
        ModeTable {
            alg,
            cap,
            memo: RwLock::new(HashMap::new()),
            bounds: RwLock::new(HashMap::new()),
        }
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    fn basis_bound(&self, u: &A::Basis, w: &A::Basis) -> Result<Option<i64>> {
        let key = (u.clone(), w.clone());
        if let Some(b) = self.bounds.read().unwrap().get(&key) {
            return Ok(*b);
        }
        let b = self.alg.vanishing_bound(u, w)?;
        self.bounds.write().unwrap().insert(key, b);
        Ok(b)
    }

    /// Least `N` with `u_n w = 0` for `n ≥ N`, over all basis pairs.
    pub fn bound(&self, u: &Lin<A::Basis, S>, w: &Lin<A::Basis, S>) -> Result<Option<i64>> {
        let mut out: Option<i64> = None;
        for us in u.keys() {
            for ws in w.keys() {
                if let Some(b) = self.basis_bound(us, ws)? {
                    out = Some(out.map_or(b, |o| o.max(b)));
                }
            }
        }
        Ok(out)
    }

    pub fn mode(&self, u: &Lin<A::Basis, S>, n: i64, w: &Lin<A::Basis, S>) -> Result<Lin<A::Basis, S>> {
        let mut out = Lin::new();
        for (us, uc) in u.iter() {
            for (ws, wc) in w.iter() {
                if let Some(b) = self.basis_bound(us, ws)? {
                    if n >= b {
                        continue;
                    }
                } else {
                    continue;
                }
                let key = (us.clone(), n, ws.clone());
                let cached = self.memo.read().unwrap().get(&key).cloned();
                let r = match cached {
                    Some(r) => r,
                    None => {
                        let r = self.alg.basis_mode(us, n, ws, self.cap)?;
                        self.memo.write().unwrap().insert(key, r.clone());
                        r
                    }
                };
                out.add_assign(&r.scaled(&(uc.clone() * wc.clone())));
            }
        }
        Ok(out)
    }

    pub fn weight(&self, u: &Lin<A::Basis, S>) -> i64 {
        u.keys().map(|b| self.alg.weight(b)).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct IdentityInstance<B: Ord + Clone, S: Scalar> {
    pub u: Lin<B, S>,
    pub v: Lin<B, S>,
    pub w: Lin<B, S>,
    pub m: i64,
    pub n: i64,
    pub q: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityOutcome<B: Ord + Clone, S: Scalar> {
    pub lhs: Lin<B, S>,
    pub rhs: Lin<B, S>,
}

impl<B: Ord + Clone, S: Scalar> IdentityOutcome<B, S> {
    pub fn passed(&self) -> bool {
        self.lhs == self.rhs
    }

    /// `lhs - rhs`, zero on success.
    pub fn witness(&self) -> Lin<B, S> {
        self.lhs.minus(&self.rhs)
    }
}

/// The cap needed so that no mode in the identity is truncated: the
/// largest weight of any intermediate or final state.
pub fn borcherds_required_cap<S: Scalar, A: VertexAlgebra<S>>(
    t: &ModeTable<S, A>,
    inst: &IdentityInstance<A::Basis, S>,
) -> u32 {
    let (wu, wv, ww) = (t.weight(&inst.u), t.weight(&inst.v), t.weight(&inst.w));
    let (m, n, q) = (inst.m, inst.n, inst.q);
    [
        wu + wv - q - 1,
        wv + ww - n - 1,
        wu + ww - m - 1,
        wu + wv + ww - m - n - q - 2,
        0,
    ]
    .into_iter()
    .max()
    .unwrap() as u32
}

/// `Σ_i C(m,i)(u_{q+i}v)_{m+n-i}w` against
/// `Σ_i (-1)^i C(q,i)(u_{m+q-i}(v_{n+i}w) - (-1)^q v_{n+q-i}(u_{m+i}w))`.
pub fn borcherds_check<S: Scalar, A: VertexAlgebra<S>>(
    t: &ModeTable<S, A>,
    inst: &IdentityInstance<A::Basis, S>,
) -> Result<IdentityOutcome<A::Basis, S>> {
    let need = borcherds_required_cap(t, inst);
    if need > t.cap() {
        return Err(Error::CapExhausted(format!(
            "identity needs cap {need}, have {}",
            t.cap()
        )));
    }
    let IdentityInstance { u, v, w, m, n, q } = inst;
    let (m, n, q) = (*m, *n, *q);
    let upper = |b: Option<i64>, shift: i64| b.map_or(-1, |b| b - shift - 1);

    let mut lhs = Lin::new();
    for i in 0..=upper(t.bound(u, v)?, q) {
        let c: S = binomial_s(m, i);
        if c.is_zero() {
            continue;
        }
        let uv = t.mode(u, q + i, v)?;
        lhs.add_assign(&t.mode(&uv, m + n - i, w)?.scaled(&c));
    }

    let mut rhs = Lin::new();
    for i in 0..=upper(t.bound(v, w)?, n) {
        let c: S = binomial_s::<S>(q, i) * sign::<S>(i);
        if c.is_zero() {
            continue;
        }
        let vw = t.mode(v, n + i, w)?;
        rhs.add_assign(&t.mode(u, m + q - i, &vw)?.scaled(&c));
    }
    for i in 0..=upper(t.bound(u, w)?, m) {
        let c: S = binomial_s::<S>(q, i) * sign::<S>(i + q + 1);
        if c.is_zero() {
            continue;
        }
        let uw = t.mode(u, m + i, w)?;
        rhs.add_assign(&t.mode(v, n + q - i, &uw)?.scaled(&c));
    }
    Ok(IdentityOutcome { lhs, rhs })
}

/// `u_0(v_k w) - v_k(u_0 w) = (u_0 v)_k w` for every `k ≥ kmin` where
/// either side can be nonzero. Returns the first failing `k`, if any.
pub fn zero_mode_order_check<S: Scalar, A: VertexAlgebra<S>>(
    t: &ModeTable<S, A>,
    u: &Lin<A::Basis, S>,
    v: &Lin<A::Basis, S>,
    w: &Lin<A::Basis, S>,
    kmin: i64,
) -> Result<Option<(i64, Lin<A::Basis, S>)>> {
    let u0v = t.mode(u, 0, v)?;
    let u0w = t.mode(u, 0, w)?;
    let kmax = [t.bound(v, w)?, t.bound(v, &u0w)?, t.bound(&u0v, w)?]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(kmin);
    for k in kmin..kmax {
        let vw = t.mode(v, k, w)?;
        let lhs = t.mode(u, 0, &vw)?.minus(&t.mode(v, k, &u0w)?);
        let rhs = t.mode(&u0v, k, w)?;
        if lhs != rhs {
            return Ok(Some((k, lhs.minus(&rhs))));
        }
    }
    Ok(None)
}

/// `(u_0 v)_0 w + (v_0 u)_0 w = 0`, the swap of the `m = n = q = 0` case.
pub fn skew_check<S: Scalar, A: VertexAlgebra<S>>(
    t: &ModeTable<S, A>,
    u: &Lin<A::Basis, S>,
    v: &Lin<A::Basis, S>,
    w: &Lin<A::Basis, S>,
) -> Result<bool> {
    let a = t.mode(&t.mode(u, 0, v)?, 0, w)?;
    let b = t.mode(&t.mode(v, 0, u)?, 0, w)?;
    Ok(a.plus(&b).is_empty())
}
