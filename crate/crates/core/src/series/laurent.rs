//! Region-directed Laurent expansions of localized series.
//!
//! An [`ExpansionOrder`] assigns each point a rank (higher rank = smaller,
//! expanded inside) and a set of difference localizers that stay inverted.
//! Every other difference `(x_o - x_n)^{-e}` with `x_n` inner becomes
//! `Σ_k C(e+k-1, k) x_n^k x_o^{-e-k}`.
//!
//! Truncation is described by a [`Window`]: a list of linear constraints
//! `w·e ≤ bound` on exponents inside which every coefficient is exact, plus
//! lower bounds (`floor`) on `w·e` over all terms, known or not. Products
//! use the floors to decide which part of the result is still exact.

use std::collections::{BTreeMap, BTreeSet};
use std::marker::PhantomData;

use crate::combinat::binomial_s;
use crate::error::{Error, Result};
use crate::linear::{Algebra, Module};
use crate::scalar::{sign, Scalar};
use crate::series::localized::{Denominator, LocalizedSeries, Localizer, VarGroup, EXACT};
use crate::series::poly::{self, Terms};

pub type SignedExp = Vec<i64>;

const INF: i64 = i64::MAX / 4;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExpansionOrder {
    width: usize,
    rank: Vec<u32>,
    kept: BTreeSet<(usize, usize)>,
}

impl ExpansionOrder {
    pub fn new(rank: Vec<u32>, kept: BTreeSet<(usize, usize)>) -> Result<Self> {
        let width = rank.len();
        if width == 0 {
            return Err(Error::UnsupportedExpansion("empty order".into()));
        }
        for &(i, j) in &kept {
            if i >= j || j >= width {
                return Err(Error::UnsupportedExpansion(format!("bad kept pair ({i},{j})")));
            }
        }
        Ok(ExpansionOrder { width, rank, kept })
    }

    /// `x_0` outermost, then `x_1`, and so on; nothing kept.
    pub fn iterated(n: usize) -> Self {
        ExpansionOrder {
            width: n,
            rank: (0..n as u32).collect(),
            kept: BTreeSet::new(),
        }
    }

    /// Every difference kept, nothing expanded.
    pub fn trivial(n: usize) -> Self {
        let kept = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        ExpansionOrder {
            width: n,
            rank: vec![0; n],
            kept,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> &[u32] {
        &self.rank
    }

    pub fn kept(&self) -> &BTreeSet<(usize, usize)> {
        &self.kept
    }

    pub fn keeps(&self, l: &Localizer) -> bool {
        matches!(l, Localizer::Difference(i, j) if self.kept.contains(&(*i, *j)))
    }

    fn weights(&self, vars: &VarGroup) -> Vec<i64> {
        (0..vars.nvars())
            .map(|v| self.rank[v / vars.dim] as i64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub weights: Vec<i64>,
    /// Coefficients are exact where `weights·e ≤ bound`; `None` = no limit.
    pub bound: Option<i64>,
    /// Lower bound of `weights·e` over every term of the full expansion.
    pub floor: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub constraints: Vec<Constraint>,
    /// Per-variable lower bound on exponents, `None` when unbounded.
    pub var_floor: Vec<Option<i64>>,
}

fn dot(w: &[i64], e: &[i64]) -> i64 {
    w.iter().zip(e).map(|(a, b)| a * b).sum()
}

impl Window {
    pub fn contains(&self, e: &[i64]) -> bool {
        self.constraints
            .iter()
            .all(|c| c.bound.map_or(true, |b| dot(&c.weights, e) <= b))
    }

    pub fn is_complete(&self) -> bool {
        self.constraints.iter().all(|c| c.bound.is_none())
    }

    fn find(&self, w: &[i64]) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.weights == w)
    }

    fn find_mut(&mut self, w: &[i64]) -> Option<&mut Constraint> {
        self.constraints.iter_mut().find(|c| c.weights == w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IteratedLaurent<S: Scalar, M: Module<S> = S> {
    vars: VarGroup,
    order: ExpansionOrder,
    kept: Denominator,
    terms: BTreeMap<SignedExp, M>,
    window: Window,
    _s: PhantomData<S>,
}

/// Outcome of [`clear_and_compare`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    Unequal(SignedExp),
}

fn add_signed<S: Scalar, M: Module<S>>(t: &mut BTreeMap<SignedExp, M>, e: SignedExp, m: M) {
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

fn signed(e: &[u32]) -> SignedExp {
    e.iter().map(|&x| x as i64).collect()
}

impl<S: Scalar, M: Module<S>> IteratedLaurent<S, M> {
    pub fn from_parts(
        vars: VarGroup,
        order: ExpansionOrder,
        kept: Denominator,
        terms: BTreeMap<SignedExp, M>,
        window: Window,
    ) -> Self {
        let mut terms = terms;
        terms.retain(|e, m| !m.is_zero() && window.contains(e));
        IteratedLaurent {
            vars,
            order,
            kept,
            terms,
            window,
            _s: PhantomData,
        }
    }

    pub fn vars(&self) -> VarGroup {
        self.vars
    }

    pub fn order(&self) -> &ExpansionOrder {
        &self.order
    }

    pub fn kept(&self) -> &Denominator {
        &self.kept
    }

    pub fn terms(&self) -> &BTreeMap<SignedExp, M> {
        &self.terms
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn coeff(&self, e: &[i64]) -> M {
        self.terms.get(e).cloned().unwrap_or_else(M::zero)
    }

    pub fn is_known(&self, e: &[i64]) -> bool {
        self.window.contains(e)
    }

    /// Lower bound of `w·e` over all terms, if one is available.
    pub fn floor_for(&self, w: &[i64]) -> Option<i64> {
        if w.iter().all(|&x| x == 0) {
            return Some(0);
        }
        let mut best: Option<i64> = None;
        let mut offer = |v: i64| best = Some(best.map_or(v, |b: i64| b.max(v)));
        if self.window.is_complete() {
            offer(self.terms.keys().map(|e| dot(w, e)).min().unwrap_or(INF));
        }
        if let Some(f) = self.window.find(w).and_then(|c| c.floor) {
            offer(f);
        }
        let from_vars: Option<i64> = w
            .iter()
            .zip(&self.window.var_floor)
            .filter(|(wv, _)| **wv != 0)
            .map(|(&wv, f)| match f {
                Some(f) if wv > 0 => Some(wv * f),
                _ => None,
            })
            .sum();
        if let Some(v) = from_vars {
            offer(v);
        }
        best
    }

    fn constant_window(vars: &VarGroup) -> Window {
        Window {
            constraints: Vec::new(),
            var_floor: vec![Some(0); vars.nvars()],
        }
    }

    fn product<B: Module<S>, C: Module<S>>(
        &self,
        other: &IteratedLaurent<S, B>,
        mul: impl Fn(&M, &B) -> C,
    ) -> Result<IteratedLaurent<S, C>> {
        if self.vars != other.vars {
            return Err(Error::IncompatibleVars("iterated expansions in different variables".into()));
        }
        let mut weights: Vec<Vec<i64>> = Vec::new();
        for c in self.window.constraints.iter().chain(&other.window.constraints) {
            if !weights.contains(&c.weights) {
                weights.push(c.weights.clone());
            }
        }
        let mut constraints = Vec::new();
        for w in weights {
            let fa = self.floor_for(&w);
            let fb = other.floor_for(&w);
            let mut bound: Option<i64> = None;
            let sides = [
                (self.window.find(&w).and_then(|c| c.bound), fb),
                (other.window.find(&w).and_then(|c| c.bound), fa),
            ];
            for (b, f) in sides {
                if let Some(b) = b {
                    let f = f.ok_or_else(|| {
                        Error::UnsupportedExpansion(
                            "product needs a lower bound that is not available".into(),
                        )
                    })?;
                    let v = b.saturating_add(f).min(INF);
                    bound = Some(bound.map_or(v, |x| x.min(v)));
                }
            }
            let floor = match (fa, fb) {
                (Some(a), Some(b)) => Some(a.saturating_add(b).min(INF)),
                _ => None,
            };
            constraints.push(Constraint {
                weights: w,
                bound,
                floor,
            });
        }
        let var_floor = self
            .window
            .var_floor
            .iter()
            .zip(&other.window.var_floor)
            .map(|(a, b)| Some((*a)? + (*b)?))
            .collect();
        let window = Window {
            constraints,
            var_floor,
        };
        let mut terms = BTreeMap::new();
        for (ea, ma) in &self.terms {
            for (eb, mb) in &other.terms {
                let e: SignedExp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if window.contains(&e) {
                    add_signed(&mut terms, e, mul(ma, mb));
                }
            }
        }
        let mut kept = self.kept.clone();
        for (l, &e) in &other.kept {
            *kept.entry(l.clone()).or_insert(0) += e;
        }
        Ok(IteratedLaurent {
            vars: self.vars,
            order: self.order.clone(),
            kept,
            terms,
            window,
            _s: PhantomData,
        })
    }

    pub fn mul_scalar(&self, other: &IteratedLaurent<S, S>) -> Result<Self> {
        self.product(other, |m, s| m.scale(s))
    }

    /// Sum; exact where both summands are.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.vars != other.vars || self.kept != other.kept {
            return Err(Error::IncompatibleVars(
                "sum needs equal variables and kept denominators".into(),
            ));
        }
        let mut constraints: Vec<Constraint> = Vec::new();
        for c in self.window.constraints.iter().chain(&other.window.constraints) {
            if constraints.iter().any(|d| d.weights == c.weights) {
                continue;
            }
            let bound = [self.window.find(&c.weights), other.window.find(&c.weights)]
                .into_iter()
                .flatten()
                .filter_map(|d| d.bound)
                .min();
            let floor = match (self.floor_for(&c.weights), other.floor_for(&c.weights)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            };
            constraints.push(Constraint {
                weights: c.weights.clone(),
                bound,
                floor,
            });
        }
        let var_floor = self
            .window
            .var_floor
            .iter()
            .zip(&other.window.var_floor)
            .map(|(a, b)| Some((*a)?.min((*b)?)))
            .collect();
        let window = Window {
            constraints,
            var_floor,
        };
        let mut terms = self.terms.clone();
        for (e, m) in &other.terms {
            add_signed(&mut terms, e.clone(), m.clone());
        }
        terms.retain(|e, _| window.contains(e));
        Ok(IteratedLaurent {
            vars: self.vars,
            order: self.order.clone(),
            kept: self.kept.clone(),
            terms,
            window,
            _s: PhantomData,
        })
    }

    /// Multiply by the localizers needed to bring the kept denominator up
    /// to `den`.
    pub fn clear(&self, den: &Denominator) -> Result<Self> {
        if let Some(l) = self.kept.keys().find(|l| !den.contains_key(l)) {
            return Err(Error::InvalidLocalizer(format!("{l:?} missing from the clearing denominator")));
        }
        let nv = self.vars.nvars();
        let mut p: Terms<S> = Terms::new();
        p.insert(vec![0; nv], S::one());
        for (l, &e) in den {
            let have = self.kept.get(l).copied().unwrap_or(0);
            if have > e {
                return Err(Error::InvalidLocalizer(format!(
                    "{l:?} kept with exponent {have} above {e}"
                )));
            }
            let lp = poly::pow(&l.poly::<S>(&self.vars), e - have, nv);
            p = poly::mul_scalar(&p, &lp, EXACT);
        }
        let factor = IteratedLaurent::<S, S> {
            vars: self.vars,
            order: self.order.clone(),
            kept: Denominator::new(),
            terms: p.iter().map(|(e, c)| (signed(e), c.clone())).collect(),
            window: Self::constant_window(&self.vars),
            _s: PhantomData,
        };
        let mut out = self.mul_scalar(&factor)?;
        out.kept = den.clone();
        Ok(out)
    }

    /// Expand the kept localizers that `order` does not keep, with the ranks
    /// of `order`, keeping exactness up to grade `grade` in those ranks.
    pub fn refine(&self, order: &ExpansionOrder, grade: i64) -> Result<Self> {
        if order.width != self.vars.count {
            return Err(Error::DimensionMismatch {
                expected: self.vars.count,
                found: order.width,
            });
        }
        let w = order.weights(&self.vars);
        let mut extra: Vec<Vec<i64>> = self
            .window
            .constraints
            .iter()
            .map(|c| c.weights.clone())
            .collect();
        extra.push(vec![1; self.vars.nvars()]);
        let mut stay = Denominator::new();
        let mut expand = Vec::new();
        for (l, &e) in &self.kept {
            if order.keeps(l) {
                stay.insert(l.clone(), e);
            } else {
                expand.push(direction(l, e, order)?);
            }
        }
        if expand.is_empty() {
            let mut out = self.clone();
            out.order = order.clone();
            return Ok(out);
        }
        let base_floor = self.floor_for(&w).ok_or_else(|| {
            Error::UnsupportedExpansion("refinement needs exponents bounded below".into())
        })?;
        let total = base_floor + expand.iter().map(|d| d.floor(&w)).sum::<i64>();
        let mut out = self.clone();
        out.kept = stay;
        out.order = order.clone();
        for d in &expand {
            let k = d.terms_needed(&w, grade - total);
            let f = d.factor::<S>(self.vars, order, &w, k, &extra);
            out = out.mul_scalar(&f)?;
        }
        out.order = order.clone();
        out.clamp(&w, grade);
        Ok(out)
    }

    fn clamp(&mut self, w: &[i64], grade: i64) {
        if let Some(c) = self.window.find_mut(w) {
            c.bound = Some(c.bound.map_or(grade, |b| b.min(grade)));
        } else {
            self.window.constraints.push(Constraint {
                weights: w.to_vec(),
                bound: Some(grade),
                floor: None,
            });
        }
        let window = self.window.clone();
        self.terms.retain(|e, _| window.contains(e));
    }
}

impl<S: Scalar, M: Algebra<S>> IteratedLaurent<S, M> {
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.product(other, |a, b| a.mul(b))
    }
}

/// One expanded difference `(x_o - x_n)^{-e}`, times `(-1)^e` when the
/// stored localizer is `x_n - x_o`.
struct Direction {
    outer: usize,
    inner: usize,
    exp: u32,
    flip: bool,
}

fn direction(l: &Localizer, e: u32, order: &ExpansionOrder) -> Result<Direction> {
    let Localizer::Difference(i, j) = l else {
        return Err(Error::UnsupportedExpansion(format!("{l:?} cannot be expanded")));
    };
    let (ri, rj) = (order.rank[*i], order.rank[*j]);
    if ri == rj {
        return Err(Error::UnsupportedExpansion(format!(
            "points {i} and {j} share a rank but their difference is not kept"
        )));
    }
    Ok(if ri < rj {
        Direction {
            outer: *i,
            inner: *j,
            exp: e,
            flip: false,
        }
    } else {
        Direction {
            outer: *j,
            inner: *i,
            exp: e,
            flip: true,
        }
    })
}

impl Direction {
    fn weight_at(&self, w: &[i64], k: i64) -> i64 {
        k * w[self.inner] + (-(self.exp as i64) - k) * w[self.outer]
    }

    fn floor(&self, w: &[i64]) -> i64 {
        self.weight_at(w, 0)
    }

    fn analytic_floor(&self, w: &[i64]) -> Option<i64> {
        (w[self.inner] >= w[self.outer]).then(|| self.floor(w))
    }

    /// Number of terms so that the factor is exact up to `w·e ≤ own_target`
    /// measured relative to its own floor.
    fn terms_needed(&self, w: &[i64], excess: i64) -> u32 {
        let step = w[self.inner] - w[self.outer];
        if excess <= 0 || step <= 0 {
            return 0;
        }
        ((excess + step - 1) / step) as u32
    }

    fn factor<S: Scalar>(
        &self,
        vars: VarGroup,
        order: &ExpansionOrder,
        w: &[i64],
        kmax: u32,
        extra: &[Vec<i64>],
    ) -> IteratedLaurent<S, S> {
        let nv = vars.nvars();
        let e = self.exp as i64;
        let s = if self.flip { sign::<S>(e) } else { S::one() };
        let mut terms = BTreeMap::new();
        for k in 0..=kmax as i64 {
            let mut ex = vec![0i64; nv];
            ex[self.inner] = k;
            ex[self.outer] = -e - k;
            add_signed(&mut terms, ex, binomial_s::<S>(e + k - 1, k) * s.clone());
        }
        let mut constraints = vec![Constraint {
            weights: w.to_vec(),
            bound: Some(self.weight_at(w, kmax as i64)),
            floor: Some(self.floor(w)),
        }];
        for x in extra {
            if x.as_slice() != w {
                constraints.push(Constraint {
                    weights: x.clone(),
                    bound: None,
                    floor: self.analytic_floor(x),
                });
            }
        }
        let mut var_floor = vec![Some(0); nv];
        var_floor[self.outer] = None;
        IteratedLaurent {
            vars,
            order: order.clone(),
            kept: Denominator::new(),
            terms,
            window: Window {
                constraints,
                var_floor,
            },
            _s: PhantomData,
        }
    }
}

/// Expand `f` along `order`, exact for grade `Σ rank·exponent ≤ grade` and
/// within the numerator's degree cap.
pub fn iota_expand<S: Scalar, M: Module<S>>(
    f: &LocalizedSeries<S, M>,
    order: &ExpansionOrder,
    grade: i64,
) -> Result<IteratedLaurent<S, M>> {
    let vars = f.vars();
    if order.width != vars.count {
        return Err(Error::DimensionMismatch {
            expected: vars.count,
            found: order.width,
        });
    }
    if vars.dim != 1 && !f.denominator().is_empty() {
        return Err(Error::UnsupportedExpansion(
            "expansion of localizers needs one-dimensional points".into(),
        ));
    }
    let nv = vars.nvars();
    let w = order.weights(&vars);
    let ones = vec![1i64; nv];

    let mut constraints = Vec::new();
    if f.cap() != EXACT {
        constraints.push(Constraint {
            weights: ones.clone(),
            bound: Some(f.cap() as i64),
            floor: Some(0),
        });
    }
    let mut acc = IteratedLaurent::<S, M> {
        vars,
        order: order.clone(),
        kept: Denominator::new(),
        terms: f
            .numerator()
            .iter()
            .map(|(e, m)| (signed(e), m.clone()))
            .collect(),
        window: Window {
            constraints,
            var_floor: vec![Some(0); nv],
        },
        _s: PhantomData,
    };

    let mut points: Vec<(usize, u32)> = Vec::new();
    let mut expand: Vec<Direction> = Vec::new();
    for (l, &e) in f.denominator() {
        match l {
            Localizer::Point(i) => points.push((*i, e)),
            Localizer::Difference(..) if order.keeps(l) => {
                acc.kept.insert(l.clone(), e);
            }
            Localizer::Difference(..) => expand.push(direction(l, e, order)?),
            Localizer::Quadratic { .. } => {
                return Err(Error::UnsupportedExpansion(
                    "quadratic localizers are not expanded".into(),
                ))
            }
        }
    }

    for &(i, e) in &points {
        let mut ex = vec![0i64; nv];
        ex[i] = -(e as i64);
        let mut var_floor = vec![Some(0); nv];
        var_floor[i] = Some(-(e as i64));
        let factor = IteratedLaurent::<S, S> {
            vars,
            order: order.clone(),
            kept: Denominator::new(),
            terms: BTreeMap::from([(ex, S::one())]),
            window: Window {
                constraints: Vec::new(),
                var_floor,
            },
            _s: PhantomData,
        };
        acc = acc.mul_scalar(&factor)?;
    }

    if expand.is_empty() {
        return Ok(acc);
    }
    let base = acc.floor_for(&w).unwrap_or(0);
    let total = base + expand.iter().map(|d| d.floor(&w)).sum::<i64>();
    let extra = vec![ones];
    for d in &expand {
        let k = d.terms_needed(&w, grade - total);
        acc = acc.mul_scalar(&d.factor::<S>(vars, order, &w, k, &extra))?;
    }
    acc.clamp(&w, grade);
    Ok(acc)
}

/// Multiply both expansions by `den` and compare them where both are exact.
/// The witness is the lexicographically first differing exponent.
pub fn clear_and_compare<S: Scalar, M: Module<S>>(
    a: &IteratedLaurent<S, M>,
    b: &IteratedLaurent<S, M>,
    den: &Denominator,
) -> Result<Comparison> {
    if a.vars != b.vars {
        return Err(Error::IncompatibleVars("comparison across variable groups".into()));
    }
    let ac = a.clear(den)?;
    let bc = b.clear(den)?;
    let inside = |e: &[i64]| ac.window.contains(e) && bc.window.contains(e);
    let keys: BTreeSet<&SignedExp> = ac.terms.keys().chain(bc.terms.keys()).collect();
    let origin = vec![0i64; a.vars.nvars()];
    if !inside(&origin) && !keys.iter().any(|e| inside(e)) {
        return Err(Error::EmptyWindow(
            "the truncation windows share no comparable exponent".into(),
        ));
    }
    for e in keys {
        if inside(e) && ac.coeff(e) != bc.coeff(e) {
            return Ok(Comparison::Unequal(e.clone()));
        }
    }
    Ok(Comparison::Equal)
}

/// Coefficients `C(i,j) = C(-k, i+j) C(i+j, i)` of
/// `(x₁-x₂)^{-k} = Σ C(i,j) (x₁-y₁)^i (y₁-y₂)^{-k-i-j} (y₂-x₂)^j`
/// for `i + j ≤ cap`.
pub fn reexpand_three_point<S: Scalar>(k: u32, cap: u32) -> Result<BTreeMap<(u32, u32), S>> {
    if k == 0 {
        return Err(Error::UnsupportedExpansion("exponent must be positive".into()));
    }
    let mut out = BTreeMap::new();
    for n in 0..=cap {
        let outer = binomial_s::<S>(-(k as i64), n as i64);
        for i in 0..=n {
            let c = outer.clone() * binomial_s::<S>(n as i64, i as i64);
            out.insert((i, n - i), c);
        }
    }
    Ok(out)
}

/// The re-expansion as a series in three points `(u, t, w)` standing for
/// `x₁-y₁`, `y₁-y₂`, `y₂-x₂`, over the denominator `t^{k+cap}`.
pub fn three_point_series<S: Scalar>(k: u32, cap: u32) -> Result<LocalizedSeries<S, S>> {
    let vars = VarGroup::points(3);
    let mut num: Terms<S> = Terms::new();
    for ((i, j), c) in reexpand_three_point::<S>(k, cap)? {
        poly::add_term(&mut num, vec![i, cap - i - j, j], c);
    }
    let den = Denominator::from([(Localizer::Point(1), k + cap)]);
    LocalizedSeries::new(vars, num, den, EXACT)
}
