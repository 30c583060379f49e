//! Free fields: the symmetric algebra on derivatives `D^(j)φ` of a set of
//! fields, with vertex operators `φ(x) = φ⁻(x) + φ⁺(x)`.
//!
//! `φ⁺(x)` multiplies by `Σ_j x^j D^(j)φ`; `φ⁻(x)` is the derivation with
//! `φ⁻(x)(D^(j)ψ) = (-1)^|j| (D^(j)Δ_φψ)(x)`. Products of fields are sums
//! over generalized contractions: pairs give propagators, larger blocks give
//! the irreducible functions `Δ_n` when supplied.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::combinat::{indices_up_to, multi_binomial};
use crate::error::{Error, Result};
use crate::hopf::HopfElement;
use crate::linear::{Algebra, Lin, Module};
use crate::scalar::{sign, Scalar};
use crate::series::localized::{
    Denominator, LocalizedSeries, Localizer, QuadForm, Series, Side, VarGroup, EXACT,
};
use crate::series::poly::{self, Terms};

#[derive(Clone, Debug, PartialEq)]
pub struct FieldTheorySpec<S: Scalar> {
    dim: usize,
    form: QuadForm,
    fields: Vec<String>,
    /// Propagators keyed by an ordered field pair, each a one-point series.
    propagators: BTreeMap<(usize, usize), Series<S>>,
    /// Irreducible `n`-point functions, nonsingular series in `n` points.
    irreducible: BTreeMap<usize, Series<S>>,
    pub cap: u32,
}

impl<S: Scalar> FieldTheorySpec<S> {
    pub fn new(
        form: QuadForm,
        fields: Vec<String>,
        propagators: BTreeMap<(usize, usize), Series<S>>,
        irreducible: BTreeMap<usize, Series<S>>,
        cap: u32,
    ) -> Result<Self> {
        let spec = Self::new_unchecked_parity(form, fields, propagators, irreducible, cap)?;
        for ((a, b), p) in &spec.propagators {
            if !p.agrees_with(&p.antipode()?)? {
                return Err(Error::InvalidLocalizer(format!(
                    "propagator ({}, {}) is not even",
                    spec.fields[*a], spec.fields[*b]
                )));
            }
        }
        Ok(spec)
    }

    /// As [`FieldTheorySpec::new`] but accepting odd propagators, to
    /// exhibit what fails without evenness.
    pub fn new_unchecked_parity(
        form: QuadForm,
        fields: Vec<String>,
        propagators: BTreeMap<(usize, usize), Series<S>>,
        irreducible: BTreeMap<usize, Series<S>>,
        cap: u32,
    ) -> Result<Self> {
        let dim = form.dim();
        let one = VarGroup::new(1, dim)?;
        for ((a, b), p) in &propagators {
            if *a >= fields.len() || *b >= fields.len() {
                return Err(Error::UnknownField(format!("propagator index ({a},{b})")));
            }
            if p.vars() != one {
                return Err(Error::IncompatibleVars("propagators live on one point".into()));
            }
        }
        for (n, d) in &irreducible {
            if *n < 3 || d.vars() != VarGroup::new(*n, dim)? {
                return Err(Error::IncompatibleVars(format!("irreducible {n}-point function")));
            }
            if !d.denominator().is_empty() {
                return Err(Error::InvalidLocalizer(format!(
                    "irreducible {n}-point function must be nonsingular"
                )));
            }
        }
        Ok(FieldTheorySpec {
            dim,
            form,
            fields,
            propagators,
            irreducible,
            cap,
        })
    }

    /// One scalar field `φ` with `Δ = 1/q(x)`.
    pub fn free_scalar(form: QuadForm, cap: u32) -> Result<Self> {
        let vars = VarGroup::new(1, form.dim())?;
        let l = Localizer::Quadratic {
            i: 0,
            j: None,
            form: form.clone(),
        };
        let delta = Series::localizer_power(vars, &l, 1)?;
        Self::new(
            form,
            vec!["phi".into()],
            BTreeMap::from([((0, 0), delta)]),
            BTreeMap::new(),
            cap,
        )
    }

    /// One scalar field on the line with `Δ = x^{-2}`.
    pub fn free_scalar_1d(cap: u32) -> Result<Self> {
        let vars = VarGroup::points(1);
        let delta = Series::localizer_power(vars, &Localizer::Point(0), 2)?;
        Self::new(
            QuadForm::euclidean(1),
            vec!["phi".into()],
            BTreeMap::from([((0, 0), delta)]),
            BTreeMap::new(),
            cap,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &QuadForm {
        &self.form
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn field_index(&self, name: &str) -> Result<usize> {
        self.fields
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::UnknownField(name.into()))
    }

    pub fn with_irreducible(mut self, n: usize, f: Series<S>) -> Result<Self> {
        self.irreducible.insert(n, f);
        Self::new_unchecked_parity(self.form, self.fields, self.propagators, self.irreducible, self.cap)
    }

    /// `Δ_{ab}(x)`, using `Δ_{ab}(x) = Δ_{ba}(-x)` when only one order is given.
    pub fn propagator(&self, a: usize, b: usize) -> Result<Series<S>> {
        let vars = VarGroup::new(1, self.dim)?;
        if let Some(p) = self.propagators.get(&(a, b)) {
            return Ok(p.clone());
        }
        if let Some(p) = self.propagators.get(&(b, a)) {
            return p.antipode();
        }
        Ok(Series::zero(vars))
    }

    fn check_field(&self, f: usize) -> Result<()> {
        if f < self.fields.len() {
            Ok(())
        } else {
            Err(Error::UnknownField(format!("field index {f}")))
        }
    }
}

/// A monomial `Π (D^(j) φ_f)^c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WickMonomial(BTreeMap<(usize, Vec<u32>), u32>);

impl WickMonomial {
    pub fn unit() -> Self {
        WickMonomial::default()
    }

    /// `D^(j) φ_f`.
    pub fn generator(f: usize, j: Vec<u32>) -> Self {
        WickMonomial(BTreeMap::from([((f, j), 1)]))
    }

    pub fn field(f: usize, dim: usize) -> Self {
        Self::generator(f, vec![0; dim])
    }

    pub fn from_factors(factors: impl IntoIterator<Item = ((usize, Vec<u32>), u32)>) -> Self {
        let mut m = BTreeMap::new();
        for (k, c) in factors {
            if c > 0 {
                *m.entry(k).or_insert(0) += c;
            }
        }
        WickMonomial(m)
    }

    pub fn factors(&self) -> &BTreeMap<(usize, Vec<u32>), u32> {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (k, c) in &other.0 {
            *m.entry(k.clone()).or_insert(0) += c;
        }
        WickMonomial(m)
    }

    /// Remove one factor, returning its multiplicity, or `None` when absent.
    fn without(&self, key: &(usize, Vec<u32>)) -> Option<(u32, Self)> {
        let c = *self.0.get(key)?;
        let mut m = self.0.clone();
        if c == 1 {
            m.remove(key);
        } else {
            m.insert(key.clone(), c - 1);
        }
        Some((c, WickMonomial(m)))
    }

    fn legs(&self) -> Vec<(usize, Vec<u32>)> {
        self.0
            .iter()
            .flat_map(|(k, &c)| std::iter::repeat(k.clone()).take(c as usize))
            .collect()
    }
}

impl fmt::Display for WickMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|((k, j), c)| {
                let base = if j.iter().all(|&x| x == 0) {
                    format!("f{k}")
                } else {
                    let idx: Vec<String> = j.iter().map(|x| x.to_string()).collect();
                    format!("D({})f{k}", idx.join(","))
                };
                if *c == 1 {
                    base
                } else {
                    format!("{base}^{c}")
                }
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Element of the symmetric algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState<S: Scalar>(pub Lin<WickMonomial, S>);

impl<S: Scalar> FieldState<S> {
    pub fn basis(m: WickMonomial) -> Self {
        FieldState(Lin::basis(m))
    }

    pub fn term(m: WickMonomial, c: S) -> Self {
        FieldState(Lin::term(m, c))
    }

    pub fn coeff(&self, m: &WickMonomial) -> S {
        self.0.coeff(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WickMonomial, &S)> {
        self.0.iter()
    }

    pub fn plus(&self, other: &Self) -> Self {
        FieldState(self.0.plus(&other.0))
    }

    pub fn minus(&self, other: &Self) -> Self {
        FieldState(self.0.minus(&other.0))
    }

    /// `∂/∂(D^(j)φ_f)`.
    pub fn partial(&self, key: &(usize, Vec<u32>)) -> Self {
        let mut out = Lin::new();
        for (m, c) in self.0.iter() {
            if let Some((k, rest)) = m.without(key) {
                out.add_term(rest, c.clone() * S::from_i64(k as i64));
            }
        }
        FieldState(out)
    }

    fn generators(&self) -> BTreeSet<(usize, Vec<u32>)> {
        self.0.keys().flat_map(|m| m.0.keys().cloned()).collect()
    }

    pub fn render(&self) -> String {
        if self.0.is_empty() {
            return "0".into();
        }
        self.0
            .iter()
            .map(|(m, c)| format!("({})*{}", c.render(), m))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl<S: Scalar> Module<S> for FieldState<S> {
    fn zero() -> Self {
        FieldState(Lin::new())
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    fn add_assign(&mut self, other: &Self) {
        self.0.add_assign(&other.0);
    }
    fn scale(&self, s: &S) -> Self {
        FieldState(self.0.scaled(s))
    }
}

impl<S: Scalar> Algebra<S> for FieldState<S> {
    fn one() -> Self {
        Self::basis(WickMonomial::unit())
    }
    fn mul(&self, other: &Self) -> Self {
        FieldState(self.0.bilinear(&other.0, |a, b| Lin::basis(a.mul(b))))
    }
}

/// Series with state coefficients.
pub type FieldSeries<S> = LocalizedSeries<S, FieldState<S>>;

/// A normally ordered monomial inserted at a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Insertion {
    pub monomial: WickMonomial,
    pub point: usize,
}

impl Insertion {
    pub fn field(f: usize, dim: usize, point: usize) -> Self {
        Insertion {
            monomial: WickMonomial::field(f, dim),
            point,
        }
    }
}

#[derive(Clone, Debug)]
struct Leg {
    /// Position in the insertion list, `None` for a factor of the state.
    slot: Option<usize>,
    point: usize,
    field: usize,
    index: Vec<u32>,
}

/// Sums of rational terms grouped by exact denominator, without lifting to
/// a common denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedSum<S: Scalar, M: Module<S> = S> {
    vars: VarGroup,
    groups: BTreeMap<Denominator, LocalizedSeries<S, M>>,
}

impl<S: Scalar, M: Module<S>> GroupedSum<S, M> {
    pub fn new(vars: VarGroup) -> Self {
        GroupedSum {
            vars,
            groups: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, f: LocalizedSeries<S, M>) -> Result<()> {
        if f.is_zero() {
            return Ok(());
        }
        let key = f.denominator().clone();
        let next = match self.groups.remove(&key) {
            Some(g) => g.add(&f)?,
            None => f,
        };
        if !next.is_zero() {
            self.groups.insert(key, next);
        }
        Ok(())
    }

    pub fn groups(&self) -> &BTreeMap<Denominator, LocalizedSeries<S, M>> {
        &self.groups
    }

    /// The single series over a common denominator.
    pub fn total(&self) -> Result<LocalizedSeries<S, M>> {
        let mut acc = LocalizedSeries::zero(self.vars);
        for g in self.groups.values() {
            acc = acc.add(g)?;
        }
        Ok(acc)
    }

    /// Equal as rational functions: grouped forms agree, or else the totals do.
    pub fn equals(&self, other: &Self) -> Result<bool> {
        if self.groups == other.groups {
            return Ok(true);
        }
        self.total()?.agrees_with(&other.total()?)
    }
}

/// Vertex operators of a free field theory.
pub struct FreeField<S: Scalar> {
    spec: FieldTheorySpec<S>,
}

impl<S: Scalar> FreeField<S> {
    pub fn new(spec: FieldTheorySpec<S>) -> Self {
        FreeField { spec }
    }

    pub fn spec(&self) -> &FieldTheorySpec<S> {
        &self.spec
    }

    pub fn vars(&self, points: usize) -> Result<VarGroup> {
        VarGroup::new(points, self.spec.dim)
    }

    /// `Σ_{|b| ≤ cap} x_p^b C(b+j, j) D^(b+j)φ_f`, the creation series of `D^(j)φ_f` at `p`.
    pub fn creation_series(&self, vars: VarGroup, p: usize, f: usize, j: &[u32]) -> Result<FieldSeries<S>> {
        self.spec.check_field(f)?;
        let cap = self.spec.cap;
        let mut num = Terms::new();
        for b in indices_up_to(self.spec.dim, cap) {
            let idx: Vec<u32> = b.iter().zip(j).map(|(x, y)| x + y).collect();
            let c = S::from_bigint(&multi_binomial(&idx, j));
            let mut e = vec![0; vars.nvars()];
            for (a, &bx) in b.iter().enumerate() {
                e[vars.var(p, a)] = bx;
            }
            poly::add_term(&mut num, e, FieldState::term(WickMonomial::generator(f, idx), c));
        }
        LocalizedSeries::new(vars, num, Denominator::new(), cap)
    }

    /// `φ⁺_f(x_p)` applied to a series.
    pub fn phi_plus(&self, f: usize, p: usize, s: &FieldSeries<S>) -> Result<FieldSeries<S>> {
        let zero = vec![0; self.spec.dim];
        self.creation_series(s.vars(), p, f, &zero)?.mul(s)
    }

    /// `(-1)^|b| (D^(b) Δ_fg)(x_p)` in `vars`.
    fn state_contraction(&self, vars: VarGroup, p: usize, f: usize, g: usize, b: &[u32]) -> Result<Series<S>> {
        let delta = self.spec.propagator(f, g)?;
        let mut map = vec![Vec::new()];
        map[0].push((p, S::one()));
        let placed = delta.substitute_points(vars, &map)?;
        let d = placed.act(&HopfElement::d(b), p, Side::Left)?;
        Ok(d.scale(&sign::<S>(b.iter().sum::<u32>() as i64)))
    }

    /// `φ⁻_f(x_p)` applied to a series, as a derivation on every coefficient.
    pub fn phi_minus(&self, f: usize, p: usize, s: &FieldSeries<S>) -> Result<FieldSeries<S>> {
        self.spec.check_field(f)?;
        let vars = s.vars();
        let gens: BTreeSet<(usize, Vec<u32>)> = s
            .numerator()
            .values()
            .flat_map(|st| st.generators())
            .collect();
        let mut acc = FieldSeries::zero(vars).truncated(s.cap());
        for key in gens {
            let c = self.state_contraction(vars, p, f, key.0, &key.1)?;
            if c.is_zero() {
                continue;
            }
            let part = s.map_coeffs(|st| st.partial(&key));
            acc = acc.add(&part.mul_series(&c)?)?;
        }
        Ok(acc)
    }

    /// `φ_f(x_p) = φ⁻ + φ⁺`.
    pub fn phi(&self, f: usize, p: usize, s: &FieldSeries<S>) -> Result<FieldSeries<S>> {
        self.phi_minus(f, p, s)?.add(&self.phi_plus(f, p, s)?)
    }

    /// `φ⁻(x)(v)` as a series in one point.
    pub fn apply_annihilator(&self, f: usize, state: &FieldState<S>) -> Result<FieldSeries<S>> {
        let vars = self.vars(1)?;
        self.phi_minus(f, 0, &FieldSeries::constant(vars, state.clone()))
    }

    fn pair_value(&self, vars: VarGroup, a: &Leg, b: &Leg) -> Result<Series<S>> {
        match (a.slot, b.slot) {
            (Some(_), Some(_)) => {
                let delta = self.spec.propagator(a.field, b.field)?;
                let map = vec![vec![(a.point, S::one()), (b.point, -S::one())]];
                let placed = delta.substitute_points(vars, &map)?;
                placed
                    .act(&HopfElement::d(&a.index), a.point, Side::Left)?
                    .act(&HopfElement::d(&b.index), b.point, Side::Left)
            }
            (Some(_), None) => self
                .state_contraction(vars, a.point, a.field, b.field, &b.index)?
                .act(&HopfElement::d(&a.index), a.point, Side::Left),
            _ => Err(Error::UnsupportedExpansion("contraction between two state factors".into())),
        }
    }

    fn block_value(&self, vars: VarGroup, legs: &[&Leg]) -> Result<Series<S>> {
        if legs.len() == 2 {
            return self.pair_value(vars, legs[0], legs[1]);
        }
        let f = &self.spec.irreducible[&legs.len()];
        let map: Vec<usize> = legs.iter().map(|l| l.point).collect();
        let mut g = f.embed(vars, &map)?;
        for l in legs {
            g = g.act(&HopfElement::d(&l.index), l.point, Side::Left)?;
        }
        Ok(g)
    }

    fn block_allowed(&self, legs: &[&Leg]) -> bool {
        let state_legs = legs.iter().filter(|l| l.slot.is_none()).count();
        let slots: BTreeSet<usize> = legs.iter().filter_map(|l| l.slot).collect();
        if slots.len() + state_legs != legs.len() {
            return false;
        }
        if legs.len() == 2 {
            return state_legs <= 1;
        }
        state_legs == 0 && self.spec.irreducible.contains_key(&legs.len())
    }

    /// Every generalized contraction as (blocks, uncontracted legs).
    fn contractions(&self, legs: &[Leg]) -> Vec<(Vec<Vec<usize>>, Vec<usize>)> {
        let max_block = self.spec.irreducible.keys().copied().max().unwrap_or(2).max(2);
        let mut out = Vec::new();
        let mut used = vec![false; legs.len()];
        self.enumerate(legs, 0, max_block, &mut used, &mut Vec::new(), &mut Vec::new(), &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &self,
        legs: &[Leg],
        i: usize,
        max_block: usize,
        used: &mut Vec<bool>,
        blocks: &mut Vec<Vec<usize>>,
        free: &mut Vec<usize>,
        out: &mut Vec<(Vec<Vec<usize>>, Vec<usize>)>,
    ) {
        if i == legs.len() {
            out.push((blocks.clone(), free.clone()));
            return;
        }
        if used[i] {
            self.enumerate(legs, i + 1, max_block, used, blocks, free, out);
            return;
        }
        free.push(i);
        self.enumerate(legs, i + 1, max_block, used, blocks, free, out);
        free.pop();
        let rest: Vec<usize> = (i + 1..legs.len()).filter(|&k| !used[k]).collect();
        let mut partners: Vec<Vec<usize>> = vec![Vec::new()];
        for &k in &rest {
            let mut more = Vec::new();
            for p in &partners {
                if p.len() + 1 < max_block {
                    let mut q = p.clone();
                    q.push(k);
                    more.push(q);
                }
            }
            partners.extend(more);
        }
        for p in partners.into_iter().filter(|p| !p.is_empty()) {
            let mut block = vec![i];
            block.extend(&p);
            let refs: Vec<&Leg> = block.iter().map(|&k| &legs[k]).collect();
            if !self.block_allowed(&refs) {
                continue;
            }
            for &k in &block {
                used[k] = true;
            }
            blocks.push(block.clone());
            self.enumerate(legs, i + 1, max_block, used, blocks, free, out);
            blocks.pop();
            for &k in &block {
                used[k] = false;
            }
        }
    }

    fn validate_insertions(&self, insertions: &[Insertion], points: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for ins in insertions {
            if ins.point >= points || !seen.insert(ins.point) {
                return Err(Error::IncompatibleVars(format!(
                    "insertion points must be distinct and below {points}"
                )));
            }
            for (f, j) in ins.monomial.factors().keys() {
                self.spec.check_field(*f)?;
                if j.len() != self.spec.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.spec.dim,
                        found: j.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Rational form of `Y(m_1, x_{p_1}) ⋯ Y(m_k, x_{p_k}) v`, the first
    /// insertion outermost, as a sum over generalized contractions grouped
    /// by denominator.
    pub fn field_product_grouped(
        &self,
        insertions: &[Insertion],
        state: &FieldState<S>,
        points: usize,
    ) -> Result<GroupedSum<S, FieldState<S>>> {
        self.validate_insertions(insertions, points)?;
        let vars = self.vars(points)?;
        let mut base = Vec::new();
        for (slot, ins) in insertions.iter().enumerate() {
            for (f, j) in ins.monomial.legs() {
                base.push(Leg {
                    slot: Some(slot),
                    point: ins.point,
                    field: f,
                    index: j,
                });
            }
        }
        let mut out = GroupedSum::new(vars);
        let mut creations: HashMap<Vec<usize>, FieldSeries<S>> = HashMap::new();
        for (m, c) in state.iter() {
            let mut legs = base.clone();
            for (f, j) in m.legs() {
                legs.push(Leg {
                    slot: None,
                    point: 0,
                    field: f,
                    index: j,
                });
            }
            for (blocks, free) in self.contractions(&legs) {
                let mut scalar = Series::<S>::one(vars);
                for b in &blocks {
                    let refs: Vec<&Leg> = b.iter().map(|&k| &legs[k]).collect();
                    scalar = scalar.mul(&self.block_value(vars, &refs)?)?;
                    if scalar.is_zero() {
                        break;
                    }
                }
                if scalar.is_zero() {
                    continue;
                }
                let free_ins: Vec<usize> = free.iter().copied().filter(|&k| k < base.len()).collect();
                let rest = WickMonomial::from_factors(
                    free.iter()
                        .filter(|&&k| k >= base.len())
                        .map(|&k| ((legs[k].field, legs[k].index.clone()), 1)),
                );
                if !creations.contains_key(&free_ins) {
                    let mut cr = FieldSeries::one(vars);
                    for &k in &free_ins {
                        let l = &legs[k];
                        cr = cr.mul(&self.creation_series(vars, l.point, l.field, &l.index)?)?;
                    }
                    creations.insert(free_ins.clone(), cr);
                }
                let cr = &creations[&free_ins];
                let rest_series = FieldSeries::constant(vars, FieldState::term(rest, c.clone()));
                out.push(cr.mul(&rest_series)?.mul_series(&scalar)?)?;
            }
        }
        Ok(out)
    }

    pub fn field_product(
        &self,
        insertions: &[Insertion],
        state: &FieldState<S>,
        points: usize,
    ) -> Result<FieldSeries<S>> {
        self.field_product_grouped(insertions, state, points)?.total()
    }

    /// `⟨φ_{f_1}(x_1) ⋯ φ_{f_k}(x_k)⟩`, the unit component applied to `1`, grouped.
    pub fn n_point_grouped(&self, fields: &[usize]) -> Result<GroupedSum<S>> {
        let dim = self.spec.dim;
        let ins: Vec<Insertion> = fields
            .iter()
            .enumerate()
            .map(|(p, &f)| Insertion::field(f, dim, p))
            .collect();
        let g = self.field_product_grouped(&ins, &FieldState::one(), fields.len())?;
        let unit = WickMonomial::unit();
        let mut out = GroupedSum::new(self.vars(fields.len())?);
        for s in g.groups().values() {
            let scalar = s.map_coeffs(|st| st.coeff(&unit));
            out.push(LocalizedSeries::new(
                scalar.vars(),
                scalar.numerator().clone(),
                scalar.denominator().clone(),
                EXACT.min(scalar.cap()),
            )?)?;
        }
        Ok(out)
    }

    pub fn n_point(&self, fields: &[usize]) -> Result<Series<S>> {
        self.n_point_grouped(fields)?.total()
    }

    /// Lift the product of `k` propagators `Δ(x_a - x_b)` along a matching,
    /// the Gaussian reference value of one term.
    pub fn matching_value(&self, fields: &[usize], matching: &[(usize, usize)]) -> Result<Series<S>> {
        let vars = self.vars(fields.len())?;
        let zero = vec![0; self.spec.dim];
        let mut acc = Series::one(vars);
        for &(a, b) in matching {
            let la = Leg {
                slot: Some(a),
                point: a,
                field: fields[a],
                index: zero.clone(),
            };
            let lb = Leg {
                slot: Some(b),
                point: b,
                field: fields[b],
                index: zero.clone(),
            };
            acc = acc.mul(&self.pair_value(vars, &la, &lb)?)?;
        }
        Ok(acc)
    }

    fn require_line(&self) -> Result<()> {
        if self.spec.dim == 1 {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: 1,
                found: self.spec.dim,
            })
        }
    }

    /// `Y(m, z) w` on the line as `N(z) / z^k`.
    pub fn vertex_series(&self, m: &WickMonomial, w: &FieldState<S>) -> Result<FieldSeries<S>> {
        self.require_line()?;
        let ins = [Insertion {
            monomial: m.clone(),
            point: 0,
        }];
        self.field_product(&ins, w, 1)
    }

    /// Least `N` with `m_n w = 0` for `n ≥ N`.
    pub fn pole_order(&self, m: &WickMonomial, w: &WickMonomial) -> Result<Option<i64>> {
        let y = self.vertex_series(m, &FieldState::basis(w.clone()))?;
        let k = y.denominator().get(&Localizer::Point(0)).copied().unwrap_or(0) as i64;
        Ok(poly::min_degree(y.numerator()).map(|d| k - d as i64))
    }

    /// Coefficient of `z^{-n-1}` in `Y(u,z)w` on the line.
    pub fn mode(&self, u: &FieldState<S>, n: i64, w: &FieldState<S>) -> Result<FieldState<S>> {
        self.mode_capped(u, n, w, self.spec.cap)
    }

    /// As [`FreeField::mode`] with creation series exact up to degree `cap`.
    pub fn mode_capped(&self, u: &FieldState<S>, n: i64, w: &FieldState<S>, cap: u32) -> Result<FieldState<S>> {
        self.require_line()?;
        let resized;
        let ff = if cap == self.spec.cap {
            self
        } else {
            let mut spec = self.spec.clone();
            spec.cap = cap;
            resized = FreeField::new(spec);
            &resized
        };
        let mut out = FieldState::zero();
        for (m, c) in u.iter() {
            let y = ff.vertex_series(m, w)?;
            let k = y
                .denominator()
                .get(&Localizer::Point(0))
                .copied()
                .unwrap_or(0) as i64;
            let e = -n - 1 + k;
            if e < 0 {
                continue;
            }
            if e > y.cap() as i64 {
                return Err(Error::CapExhausted(format!(
                    "mode {n} needs z-degree {e}, cap {}",
                    y.cap()
                )));
            }
            out.add_assign(&y.coeff(&[e as u32]).scale(c));
        }
        Ok(out)
    }

    /// Rewrite derivative indices modulo `h φ_f = 0` for every field.
    pub fn reduce_by_field_equation(&self, h: &HopfElement<S>, state: &FieldState<S>) -> Result<FieldState<S>> {
        let Some(rule) = RewriteRule::new(h)? else {
            return Ok(state.clone());
        };
        let mut memo = HashMap::new();
        let mut out = FieldState::zero();
        for (m, c) in state.iter() {
            let mut acc = FieldState::term(WickMonomial::unit(), c.clone());
            for ((f, j), k) in m.factors() {
                let img = rule.reduce(j, &mut memo);
                let gen = FieldState(Lin::from_terms(
                    img.iter().map(|(i, s)| (WickMonomial::generator(*f, i.clone()), s.clone())),
                ));
                for _ in 0..*k {
                    acc = acc.mul(&gen);
                }
            }
            out.add_assign(&acc);
        }
        Ok(out)
    }

    /// Whether `h` annihilates the propagator `Δ_fg`.
    pub fn annihilates_propagator(&self, h: &HopfElement<S>, f: usize, g: usize) -> Result<bool> {
        Ok(self.spec.propagator(f, g)?.act(h, 0, Side::Left)?.is_zero())
    }
}

/// Outcome of the four commutator relations on one state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommutatorReport {
    /// `[φ⁺(x), φ⁺(y)] = 0`.
    pub plus_plus: bool,
    /// `[φ⁻(x), φ⁺(y)] = Δ(x-y)`.
    pub minus_plus: bool,
    /// `[φ⁻(x), φ⁻(y)] = 0`.
    pub minus_minus: bool,
    /// `[φ(x), φ(y)] = 0`: the commutator is the difference of two
    /// expansions of one rational function.
    pub full: bool,
}

impl CommutatorReport {
    pub fn all(&self) -> bool {
        self.plus_plus && self.minus_plus && self.minus_minus && self.full
    }
}

impl<S: Scalar> FreeField<S> {
    /// Check the commutator relations of `φ_f` at `x = x_0`, `y = x_1` on `v`,
    /// coefficientwise up to the theory cap.
    pub fn commutator_checks(&self, f: usize, v: &FieldState<S>) -> Result<CommutatorReport> {
        let vars = self.vars(2)?;
        let cap = self.spec.cap;
        let vs = FieldSeries::constant(vars, v.clone());
        let comm = |a: &dyn Fn(&FieldSeries<S>) -> Result<FieldSeries<S>>,
                    b: &dyn Fn(&FieldSeries<S>) -> Result<FieldSeries<S>>|
         -> Result<FieldSeries<S>> { a(&b(&vs)?)?.sub(&b(&a(&vs)?)?) };

        let pp = comm(&|s| self.phi_plus(f, 0, s), &|s| self.phi_plus(f, 1, s))?;
        let mm = comm(&|s| self.phi_minus(f, 0, s), &|s| self.phi_minus(f, 1, s))?;
        let mp = comm(&|s| self.phi_minus(f, 0, s), &|s| self.phi_plus(f, 1, s))?;
        let full = comm(&|s| self.phi(f, 0, s), &|s| self.phi(f, 1, s))?;

        let delta = self.spec.propagator(f, f)?;
        let at_x = delta.embed(vars, &[0])?.taylor_shift(0, 1, cap)?;
        let at_y = delta.embed(vars, &[1])?.taylor_shift(1, 0, cap)?;
        let times_v = |g: &Series<S>| vs.mul_series(g);
        let minus_plus = mp.agrees_with(&times_v(&at_x)?)?;
        let expansions = full.agrees_with(&times_v(&at_x.sub(&at_y)?)?)?;
        let xy = delta.substitute_points(vars, &[vec![(0, S::one()), (1, -S::one())]])?;
        let yx = delta.substitute_points(vars, &[vec![(1, S::one()), (0, -S::one())]])?;
        Ok(CommutatorReport {
            plus_plus: pp.is_zero(),
            minus_plus,
            minus_minus: mm.is_zero(),
            full: expansions && xy.agrees_with(&yx)?,
        })
    }
}

/// Rewriting `D^(k e_c)` into lower powers of coordinate `c`.
struct RewriteRule<S: Scalar> {
    coord: usize,
    lead: u32,
    /// `D^(k e_c) = Σ s · D^(i)` with `i_c < k`.
    tail: Vec<(Vec<u32>, S)>,
}

impl<S: Scalar> RewriteRule<S> {
    fn new(h: &HopfElement<S>) -> Result<Option<Self>> {
        if h.is_zero() {
            return Ok(None);
        }
        let dim = h.dim();
        for c in 0..dim {
            let k = h.terms().keys().map(|i| i.0[c]).max().unwrap_or(0);
            if k == 0 {
                continue;
            }
            let tops: Vec<_> = h.terms().iter().filter(|(i, _)| i.0[c] == k).collect();
            let pure = tops.len() == 1 && tops[0].0 .0.iter().enumerate().all(|(a, &x)| a == c || x == 0);
            if !pure {
                continue;
            }
            let Some(inv) = tops[0].1.recip() else { continue };
            let tail = h
                .terms()
                .iter()
                .filter(|(i, _)| i.0[c] < k)
                .map(|(i, s)| (i.0.clone(), -(s.clone() * inv.clone())))
                .collect();
            return Ok(Some(RewriteRule {
                coord: c,
                lead: k,
                tail,
            }));
        }
        Err(Error::IllFounded(
            "no coordinate has a single invertible leading term".into(),
        ))
    }

    fn reduce(&self, j: &[u32], memo: &mut HashMap<Vec<u32>, Vec<(Vec<u32>, S)>>) -> Vec<(Vec<u32>, S)> {
        if j[self.coord] < self.lead {
            return vec![(j.to_vec(), S::one())];
        }
        if let Some(v) = memo.get(j) {
            return v.clone();
        }
        // D^(j) = D^(j - k e_c) D^(k e_c) / C(j_c, k)
        let mut rest = j.to_vec();
        rest[self.coord] -= self.lead;
        let mut lead_idx = vec![0; j.len()];
        lead_idx[self.coord] = self.lead;
        let inv = S::from_bigint(&multi_binomial(j, &lead_idx)).recip().expect("nonzero binomial");
        let mut acc: BTreeMap<Vec<u32>, S> = BTreeMap::new();
        for (i, s) in &self.tail {
            let sum: Vec<u32> = rest.iter().zip(i).map(|(a, b)| a + b).collect();
            let c = S::from_bigint(&multi_binomial(&sum, i)) * s.clone() * inv.clone();
            for (r, t) in self.reduce(&sum, memo) {
                let slot = acc.entry(r).or_insert_with(S::zero);
                *slot = slot.clone() + c.clone() * t;
            }
        }
        let v: Vec<(Vec<u32>, S)> = acc.into_iter().filter(|(_, s)| !Module::is_zero(s)).collect();
        memo.insert(j.to_vec(), v.clone());
        v
    }
}

/// The wave operator `-∂₀² + ∂₁² + ⋯` for a form, in divided powers
/// (`∂_c² = 2 D^(2 e_c)`), i.e. `Σ_{ab} q_ab ∂_a ∂_b`.
pub fn box_operator<S: Scalar>(form: &QuadForm) -> Result<HopfElement<S>> {
    let d = form.dim();
    let mut terms = Vec::new();
    for a in 0..d {
        for b in 0..d {
            let q = form.0[a][b];
            if q == 0 {
                continue;
            }
            let mut i = vec![0; d];
            i[a] += 1;
            i[b] += 1;
            let c = if a == b { 2 * q } else { q };
            terms.push((i, S::from_i64(c)));
        }
    }
    HopfElement::from_terms(d, terms)
}
