//! Truncated power series in `n` points of dimension `d`, divided by a
//! monomial in localizers.
//!
//! A value is `N / Π L^e` where `N` is known up to total degree `cap`.
//! Every localizer is homogeneous, so divisibility of the truncated
//! numerator is decided degree by degree.

use std::collections::BTreeMap;
use std::marker::PhantomData;

use crate::combinat::factorial;
use crate::error::{Error, Result};
use crate::hopf::HopfElement;
use crate::linear::{Algebra, Module};
use crate::scalar::Scalar;
use crate::series::poly::{self, Exp, Terms};

/// Cap of a series known exactly (a polynomial numerator).
pub const EXACT: u32 = u32::MAX;

pub(crate) fn cap_add(c: u32, k: u32) -> u32 {
    if c == EXACT {
        EXACT
    } else {
        c.saturating_add(k).min(EXACT - 1)
    }
}

pub(crate) fn cap_sub(c: u32, k: u32) -> Option<u32> {
    if c == EXACT {
        Some(EXACT)
    } else {
        c.checked_sub(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VarGroup {
    pub count: usize,
    pub dim: usize,
}

impl VarGroup {
    pub fn new(count: usize, dim: usize) -> Result<Self> {
        if count == 0 || dim == 0 {
            return Err(Error::IncompatibleVars(format!(
                "need at least one point and one dimension, got {count}x{dim}"
            )));
        }
        Ok(VarGroup { count, dim })
    }

    pub fn points(count: usize) -> Self {
        VarGroup { count, dim: 1 }
    }

    pub fn nvars(&self) -> usize {
        self.count * self.dim
    }

    pub fn var(&self, point: usize, coord: usize) -> usize {
        point * self.dim + coord
    }

    /// Total degree of `e` in the coordinates of `point`.
    pub fn point_degree(&self, e: &[u32], point: usize) -> u32 {
        e[point * self.dim..(point + 1) * self.dim].iter().sum()
    }
}

/// Symmetric integer matrix of a quadratic form on one point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm(pub Vec<Vec<i64>>);

impl QuadForm {
    pub fn new(m: Vec<Vec<i64>>) -> Result<Self> {
        let n = m.len();
        let ok = n > 0
            && m.iter().all(|r| r.len() == n)
            && (0..n).all(|a| (0..n).all(|b| m[a][b] == m[b][a]))
            && m.iter().flatten().any(|&v| v != 0);
        if !ok {
            return Err(Error::InvalidLocalizer(
                "quadratic form must be a nonzero symmetric square matrix".into(),
            ));
        }
        Ok(QuadForm(m))
    }

    /// `-t² + x₁² + … + x_{d-1}²`.
    pub fn minkowski(d: usize) -> Self {
        let mut m = vec![vec![0; d]; d];
        for (a, row) in m.iter_mut().enumerate() {
            row[a] = if a == 0 { -1 } else { 1 };
        }
        QuadForm(m)
    }

    pub fn euclidean(d: usize) -> Self {
        let mut m = vec![vec![0; d]; d];
        for (a, row) in m.iter_mut().enumerate() {
            row[a] = 1;
        }
        QuadForm(m)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Localizer {
    Point(usize),
    /// `x_i - x_j` with `i < j`.
    Difference(usize, usize),
    /// `q(x_i)` or `q(x_i - x_j)` with `i < j`.
    Quadratic {
        i: usize,
        j: Option<usize>,
        form: QuadForm,
    },
}

impl Localizer {
    /// `x_i - x_j` in canonical form, with the sign to absorb.
    pub fn difference(i: usize, j: usize) -> Result<(Self, i64)> {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => Ok((Localizer::Difference(i, j), 1)),
            std::cmp::Ordering::Greater => Ok((Localizer::Difference(j, i), -1)),
            std::cmp::Ordering::Equal => Err(Error::InvalidLocalizer(format!(
                "x_{i} - x_{i} is zero"
            ))),
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            Localizer::Point(_) | Localizer::Difference(..) => 1,
            Localizer::Quadratic { .. } => 2,
        }
    }

    pub fn involves(&self, p: usize) -> bool {
        match self {
            Localizer::Point(i) => *i == p,
            Localizer::Difference(i, j) => *i == p || *j == p,
            Localizer::Quadratic { i, j, .. } => *i == p || *j == Some(p),
        }
    }

    pub fn validate(&self, vars: &VarGroup) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLocalizer(msg));
        match self {
            Localizer::Point(i) => {
                if vars.dim != 1 {
                    return bad("point localizers need one-dimensional points".into());
                }
                if *i >= vars.count {
                    return bad(format!("point {i} out of range"));
                }
            }
            Localizer::Difference(i, j) => {
                if vars.dim != 1 {
                    return bad("difference localizers need one-dimensional points".into());
                }
                if i >= j || *j >= vars.count {
                    return bad(format!("difference ({i},{j}) not canonical or out of range"));
                }
            }
            Localizer::Quadratic { i, j, form } => {
                if form.dim() != vars.dim {
                    return Err(Error::DimensionMismatch {
                        expected: vars.dim,
                        found: form.dim(),
                    });
                }
                if *i >= vars.count || j.map_or(false, |j| j <= *i || j >= vars.count) {
                    return bad(format!("quadratic ({i},{j:?}) not canonical or out of range"));
                }
            }
        }
        Ok(())
    }

    /// The localizer as a polynomial in all variables of `vars`.
    pub fn poly<S: Scalar>(&self, vars: &VarGroup) -> Terms<S> {
        let n = vars.nvars();
        let mono = |v: usize, c: i64| {
            let mut e = vec![0; n];
            e[v] = 1;
            (e, S::from_i64(c))
        };
        let mut t = Terms::new();
        match self {
            Localizer::Point(i) => {
                let (e, c) = mono(vars.var(*i, 0), 1);
                poly::add_term(&mut t, e, c);
            }
            Localizer::Difference(i, j) => {
                for (v, c) in [(vars.var(*i, 0), 1), (vars.var(*j, 0), -1)] {
                    let (e, c) = mono(v, c);
                    poly::add_term(&mut t, e, c);
                }
            }
            Localizer::Quadratic { i, j, form } => {
                let d = vars.dim;
                let images: Vec<Terms<S>> = (0..d)
                    .map(|a| {
                        let mut img = Terms::new();
                        let (e, c) = mono(vars.var(*i, a), 1);
                        poly::add_term(&mut img, e, c);
                        if let Some(j) = j {
                            let (e, c) = mono(vars.var(*j, a), -1);
                            poly::add_term(&mut img, e, c);
                        }
                        img
                    })
                    .collect();
                let base = quad_poly::<S>(form);
                t = poly::substitute(&base, &images, n, EXACT);
            }
        }
        t
    }
}

fn quad_poly<S: Scalar>(form: &QuadForm) -> Terms<S> {
    let d = form.dim();
    let mut t = Terms::new();
    for a in 0..d {
        for b in 0..d {
            if form.0[a][b] == 0 {
                continue;
            }
            let mut e = vec![0; d];
            e[a] += 1;
            e[b] += 1;
            poly::add_term(&mut t, e, S::from_i64(form.0[a][b]));
        }
    }
    t
}

pub type Denominator = BTreeMap<Localizer, u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedSeries<S: Scalar, M: Module<S> = S> {
    vars: VarGroup,
    num: Terms<M>,
    den: Denominator,
    cap: u32,
    _s: PhantomData<S>,
}

pub type Series<S> = LocalizedSeries<S, S>;

impl<S: Scalar, M: Module<S>> LocalizedSeries<S, M> {
    pub fn new(vars: VarGroup, num: Terms<M>, den: Denominator, cap: u32) -> Result<Self> {
        let n = vars.nvars();
        if let Some(e) = num.keys().find(|e| e.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: e.len(),
            });
        }
        for l in den.keys() {
            l.validate(&vars)?;
        }
        let mut num = num;
        num.retain(|_, m| !m.is_zero());
        let den = den.into_iter().filter(|(_, e)| *e > 0).collect();
        let mut out = LocalizedSeries {
            vars,
            num,
            den,
            cap,
            _s: PhantomData,
        };
        out.normalize();
        Ok(out)
    }

    fn raw(vars: VarGroup, num: Terms<M>, den: Denominator, cap: u32) -> Self {
        let mut out = LocalizedSeries {
            vars,
            num,
            den,
            cap,
            _s: PhantomData,
        };
        out.normalize();
        out
    }

    pub fn zero(vars: VarGroup) -> Self {
        Self::raw(vars, Terms::new(), Denominator::new(), EXACT)
    }

    /// Constant series with value `m`.
    pub fn constant(vars: VarGroup, m: M) -> Self {
        let mut num = Terms::new();
        poly::add_term(&mut num, vec![0; vars.nvars()], m);
        Self::raw(vars, num, Denominator::new(), EXACT)
    }

    pub fn monomial(vars: VarGroup, e: Exp, m: M) -> Result<Self> {
        let mut num = Terms::new();
        poly::add_term(&mut num, e, m);
        Self::new(vars, num, Denominator::new(), EXACT)
    }

    pub fn vars(&self) -> VarGroup {
        self.vars
    }

    pub fn numerator(&self) -> &Terms<M> {
        &self.num
    }

    pub fn denominator(&self) -> &Denominator {
        &self.den
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.cap == EXACT
    }

    pub fn coeff(&self, e: &[u32]) -> M {
        self.num.get(e).cloned().unwrap_or_else(M::zero)
    }

    /// Lower the cap, dropping numerator terms above it.
    pub fn truncated(&self, cap: u32) -> Self {
        let cap = cap.min(self.cap);
        let mut num = self.num.clone();
        poly::truncate(&mut num, cap);
        Self::raw(self.vars, num, self.den.clone(), cap)
    }

    /// Cancel localizers dividing the numerator; each cancellation lowers
    /// the cap by the localizer's degree.
    fn normalize(&mut self) {
        if self.cap != EXACT {
            poly::truncate(&mut self.num, self.cap);
        }
        if self.num.is_empty() && self.cap == EXACT {
            self.den.clear();
            return;
        }
        loop {
            let mut progressed = false;
            let keys: Vec<Localizer> = self.den.keys().cloned().collect();
            for l in keys {
                let Some(cap) = cap_sub(self.cap, l.degree()) else {
                    continue;
                };
                let p = l.poly::<S>(&self.vars);
                if let Some(q) = poly::divide_exact(&self.num, &p) {
                    self.num = q;
                    self.cap = cap;
                    let e = self.den.get_mut(&l).unwrap();
                    *e -= 1;
                    if *e == 0 {
                        self.den.remove(&l);
                    }
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
    }

    fn check_vars(&self, other: &VarGroup) -> Result<()> {
        if self.vars != *other {
            return Err(Error::IncompatibleVars(format!(
                "{}x{} vs {}x{}",
                self.vars.count, self.vars.dim, other.count, other.dim
            )));
        }
        Ok(())
    }

    /// Numerator rewritten over `den`, which must contain `self.den`.
    /// Returns the lifted numerator and its cap.
    pub fn numerator_over(&self, den: &Denominator) -> Result<(Terms<M>, u32)> {
        let mut num = self.num.clone();
        let mut cap = self.cap;
        for (l, &e) in den {
            let have = self.den.get(l).copied().unwrap_or(0);
            if have > e {
                return Err(Error::InvalidLocalizer(format!(
                    "{l:?} has exponent {have} above the target {e}"
                )));
            }
            if have == e {
                continue;
            }
            let p = poly::pow(&l.poly::<S>(&self.vars), e - have, self.vars.nvars());
            cap = cap_add(cap, l.degree() * (e - have));
            num = poly::mul_scalar(&num, &p, cap);
        }
        if let Some(l) = self.den.keys().find(|l| !den.contains_key(l)) {
            return Err(Error::InvalidLocalizer(format!("{l:?} missing from target")));
        }
        Ok((num, cap))
    }

    fn common_den(a: &Denominator, b: &Denominator) -> Denominator {
        let mut out = a.clone();
        for (l, &e) in b {
            let v = out.entry(l.clone()).or_insert(0);
            *v = (*v).max(e);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_vars(&other.vars)?;
        let den = Self::common_den(&self.den, &other.den);
        let (mut a, ca) = self.numerator_over(&den)?;
        let (b, cb) = other.numerator_over(&den)?;
        for (e, m) in b {
            poly::add_term(&mut a, e, m);
        }
        Ok(Self::raw(self.vars, a, den, ca.min(cb)))
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &S) -> Self {
        let num = self
            .num
            .iter()
            .map(|(e, m)| (e.clone(), m.scale(s)))
            .filter(|(_, m)| !m.is_zero())
            .collect();
        Self::raw(self.vars, num, self.den.clone(), self.cap)
    }

    /// Apply a linear map to every coefficient.
    pub fn map_coeffs<M2: Module<S>>(&self, f: impl Fn(&M) -> M2) -> LocalizedSeries<S, M2> {
        let mut num = Terms::new();
        for (e, m) in &self.num {
            poly::add_term(&mut num, e.clone(), f(m));
        }
        LocalizedSeries::raw(self.vars, num, self.den.clone(), self.cap)
    }

    fn order(&self) -> u32 {
        let lowest = poly::min_degree(&self.num);
        let bound = cap_add(self.cap, 1);
        lowest.map_or(bound, |d| d.min(bound))
    }

    fn product_cap(ca: u32, ord_a: u32, cb: u32, ord_b: u32) -> u32 {
        cap_add(ca, ord_b).min(cap_add(cb, ord_a))
    }

    fn sum_den(&self, other: &Denominator) -> Denominator {
        let mut den = self.den.clone();
        for (l, &e) in other {
            *den.entry(l.clone()).or_insert(0) += e;
        }
        den
    }

    /// Product with a scalar-valued series.
    pub fn mul_series(&self, other: &Series<S>) -> Result<Self> {
        self.check_vars(&other.vars)?;
        let cap = Self::product_cap(self.cap, self.order(), other.cap, other.order());
        let num = poly::mul_scalar(&self.num, &other.num, cap);
        Ok(Self::raw(self.vars, num, self.sum_den(&other.den), cap))
    }

    /// Multiply by `c · x^e`.
    pub fn mul_monomial(&self, e: &[u32], c: &S) -> Self {
        let mut p = Terms::new();
        poly::add_term(&mut p, e.to_vec(), c.clone());
        let cap = cap_add(self.cap, poly::degree(e));
        let num = poly::mul_scalar(&self.num, &p, cap);
        Self::raw(self.vars, num, self.den.clone(), cap)
    }

    /// Divide by `L^e`.
    pub fn div_localizer(&self, l: &Localizer, e: u32) -> Result<Self> {
        l.validate(&self.vars)?;
        let mut den = self.den.clone();
        if e > 0 {
            *den.entry(l.clone()).or_insert(0) += e;
        }
        Ok(Self::raw(self.vars, self.num.clone(), den, self.cap))
    }

    /// `∂/∂v` for the global variable index `v`.
    pub fn derivative(&self, v: usize) -> Result<Self> {
        if v >= self.vars.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.nvars(),
                found: v + 1,
            });
        }
        let cap1 = cap_sub(self.cap, 1)
            .ok_or_else(|| Error::CapExhausted("derivative of a cap-0 series".into()))?;
        let locs: Vec<(Localizer, u32, Terms<S>)> = self
            .den
            .iter()
            .map(|(l, &e)| (l.clone(), e, l.poly::<S>(&self.vars)))
            .collect();
        let extra: u32 = locs.iter().map(|(l, _, _)| l.degree()).sum();
        let cap = cap_add(cap1, extra);

        let mut num = poly::derivative(&self.num, v);
        for (_, _, p) in &locs {
            num = poly::mul_scalar(&num, p, cap);
        }
        for (k, (_, e, p)) in locs.iter().enumerate() {
            let dp = poly::derivative(p, v);
            if dp.is_empty() {
                continue;
            }
            let mut term = poly::mul_scalar(&self.num, &dp, cap);
            for (m, (_, _, q)) in locs.iter().enumerate() {
                if m != k {
                    term = poly::mul_scalar(&term, q, cap);
                }
            }
            let w = S::from_i64(-(*e as i64));
            for (ex, m) in term {
                poly::add_term(&mut num, ex, m.scale(&w));
            }
        }
        let den = self.den.iter().map(|(l, &e)| (l.clone(), e + 1)).collect();
        Ok(Self::raw(self.vars, num, den, cap))
    }

    /// Action of `h` at `point`: `D^(i)` acts as `Π ∂^{i_c} / i_c!` on the
    /// coordinates of that point. The right action is the left action
    /// composed with the antipode.
    pub fn act(&self, h: &HopfElement<S>, point: usize, side: Side) -> Result<Self> {
        if h.dim() != self.vars.dim {
            return Err(Error::DimensionMismatch {
                expected: self.vars.dim,
                found: h.dim(),
            });
        }
        if point >= self.vars.count {
            return Err(Error::IncompatibleVars(format!("point {point} out of range")));
        }
        let h = match side {
            Side::Left => h.clone(),
            Side::Right => h.antipode(),
        };
        let mut acc: Option<Self> = None;
        for (i, c) in h.terms().iter() {
            let mut g = self.clone();
            let mut fact = S::one();
            for (a, &k) in i.0.iter().enumerate() {
                for _ in 0..k {
                    g = g.derivative(self.vars.var(point, a))?;
                }
                fact = fact * S::from_bigint(&factorial(k));
            }
            let w = c.clone()
                * fact
                    .recip()
                    .ok_or_else(|| Error::CapExhausted("factorial not invertible".into()))?;
            let g = g.scale(&w);
            acc = Some(match acc {
                None => g,
                Some(a) => a.add(&g)?,
            });
        }
        Ok(acc.unwrap_or_else(|| Self::zero(self.vars).truncated(self.cap)))
    }

    /// `f(x_i - x_j)` as the Taylor polynomial `Σ_{|k|≤order} (-x_j)^k D^(k) f`
    /// in the fresh point `j`.
    pub fn taylor_shift(&self, i: usize, j: usize, order: u32) -> Result<Self> {
        let vars = self.vars;
        if i >= vars.count || j >= vars.count || i == j {
            return Err(Error::IncompatibleVars(format!("bad shift points ({i},{j})")));
        }
        let fresh = self.num.keys().all(|e| vars.point_degree(e, j) == 0)
            && self.den.keys().all(|l| !l.involves(j));
        if !fresh {
            return Err(Error::IncompatibleVars(format!("point {j} is not fresh")));
        }
        let mut acc = Self::zero(vars).truncated(self.cap);
        for k in crate::combinat::indices_up_to(vars.dim, order) {
            let h = HopfElement::<S>::d(&k);
            let g = self.act(&h, i, Side::Left)?;
            if g.is_zero() {
                continue;
            }
            let mut e = vec![0; vars.nvars()];
            for (a, &ka) in k.iter().enumerate() {
                e[vars.var(j, a)] = ka;
            }
            let sign = crate::scalar::sign::<S>(poly::degree(&k) as i64);
            acc = acc.add(&g.mul_monomial(&e, &sign))?;
        }
        Ok(acc)
    }

    /// Substitute each source point by a linear combination of target points,
    /// `x_i ↦ Σ c·x_t` coordinatewise. Every localizer must map to a nonzero
    /// multiple of a localizer.
    pub fn substitute_points(&self, target: VarGroup, images: &[Vec<(usize, S)>]) -> Result<Self> {
        if target.dim != self.vars.dim {
            return Err(Error::DimensionMismatch {
                expected: self.vars.dim,
                found: target.dim,
            });
        }
        if images.len() != self.vars.count {
            return Err(Error::DimensionMismatch {
                expected: self.vars.count,
                found: images.len(),
            });
        }
        if images.iter().flatten().any(|(t, _)| *t >= target.count) {
            return Err(Error::IncompatibleVars("image point out of range".into()));
        }
        let n = target.nvars();
        let var_images: Vec<Terms<S>> = (0..self.vars.count)
            .flat_map(|p| (0..self.vars.dim).map(move |a| (p, a)))
            .map(|(p, a)| {
                let mut img = Terms::new();
                for (t, c) in &images[p] {
                    let mut e = vec![0; n];
                    e[target.var(*t, a)] = 1;
                    poly::add_term(&mut img, e, c.clone());
                }
                img
            })
            .collect();
        let mut num = poly::substitute(&self.num, &var_images, n, self.cap);
        let mut den = Denominator::new();
        let mut factor = S::one();
        for (l, &e) in &self.den {
            let (nl, c) = image_localizer(l, images)?;
            nl.validate(&target)?;
            *den.entry(nl).or_insert(0) += e;
            for _ in 0..e {
                factor = factor * c.clone();
            }
        }
        let inv = factor
            .recip()
            .ok_or_else(|| Error::InvalidLocalizer("localizer image not invertible".into()))?;
        if inv != S::one() {
            num = num.into_iter().map(|(e, m)| (e, m.scale(&inv))).collect();
        }
        Ok(Self::raw(target, num, den, self.cap))
    }

    /// `x ↦ -x` at every point.
    pub fn antipode(&self) -> Result<Self> {
        let images: Vec<Vec<(usize, S)>> =
            (0..self.vars.count).map(|p| vec![(p, -S::one())]).collect();
        self.substitute_points(self.vars, &images)
    }

    /// Relabel points into a larger group: point `p` becomes `map[p]`.
    pub fn embed(&self, target: VarGroup, map: &[usize]) -> Result<Self> {
        let images: Vec<Vec<(usize, S)>> = map.iter().map(|&t| vec![(t, S::one())]).collect();
        self.substitute_points(target, &images)
    }

    /// Whether `self - other` vanishes on the common truncation range.
    pub fn agrees_with(&self, other: &Self) -> Result<bool> {
        Ok(self.sub(other)?.is_zero())
    }
}

impl<S: Scalar, M: Algebra<S>> LocalizedSeries<S, M> {
    pub fn one(vars: VarGroup) -> Self {
        Self::constant(vars, M::one())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_vars(&other.vars)?;
        let cap = Self::product_cap(self.cap, self.order(), other.cap, other.order());
        let num = poly::mul_algebra(&self.num, &other.num, cap);
        Ok(Self::raw(self.vars, num, self.sum_den(&other.den), cap))
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut out = Self::one(self.vars);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }
}

impl<S: Scalar> Series<S> {
    /// The single variable `x_{point,coord}`.
    pub fn var(vars: VarGroup, point: usize, coord: usize) -> Self {
        let mut e = vec![0; vars.nvars()];
        e[vars.var(point, coord)] = 1;
        Self::monomial(vars, e, S::one()).expect("valid monomial")
    }

    /// `L^{-e}`.
    pub fn localizer_power(vars: VarGroup, l: &Localizer, e: u32) -> Result<Self> {
        Self::one(vars).div_localizer(l, e)
    }

    /// `(x_i - x_j)^{-e}` for one-dimensional points, any order of `i, j`.
    pub fn inverse_difference(vars: VarGroup, i: usize, j: usize, e: u32) -> Result<Self> {
        let (l, s) = Localizer::difference(i, j)?;
        let out = Self::localizer_power(vars, &l, e)?;
        Ok(if s < 0 && e % 2 == 1 { out.neg() } else { out })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn combine<S: Scalar>(parts: &[&[(usize, S)]], signs: &[i64]) -> Vec<(usize, S)> {
    let mut acc: BTreeMap<usize, S> = BTreeMap::new();
    for (part, &s) in parts.iter().zip(signs) {
        for (t, c) in part.iter() {
            let v = acc.entry(*t).or_insert_with(S::zero);
            *v = v.clone() + c.clone() * S::from_i64(s);
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Image of a localizer under a point substitution, as `(L', c)` with
/// `image(L) = c · L'`.
fn image_localizer<S: Scalar>(l: &Localizer, images: &[Vec<(usize, S)>]) -> Result<(Localizer, S)> {
    let arg = match l {
        Localizer::Point(i) => combine(&[&images[*i]], &[1]),
        Localizer::Difference(i, j) => combine(&[&images[*i], &images[*j]], &[1, -1]),
        Localizer::Quadratic { i, j: None, .. } => combine(&[&images[*i]], &[1]),
        Localizer::Quadratic { i, j: Some(j), .. } => {
            combine(&[&images[*i], &images[*j]], &[1, -1])
        }
    };
    let fail = || Error::InvalidLocalizer(format!("{l:?} has no localizer image"));
    let (kind_i, kind_j, c) = match arg.as_slice() {
        [(a, c)] => (*a, None, c.clone()),
        [(a, c1), (b, c2)] if c2.clone() == -c1.clone() => (*a, Some(*b), c1.clone()),
        _ => return Err(fail()),
    };
    Ok(match l {
        Localizer::Point(_) | Localizer::Difference(..) => match kind_j {
            None => (Localizer::Point(kind_i), c),
            Some(b) => (Localizer::Difference(kind_i, b), c),
        },
        Localizer::Quadratic { form, .. } => (
            Localizer::Quadratic {
                i: kind_i,
                j: kind_j,
                form: form.clone(),
            },
            c.clone() * c,
        ),
    })
}
