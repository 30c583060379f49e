//! Finite linear combinations and the coefficient-module abstraction used
//! by the series engine.

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::scalar::Scalar;

/// A coefficient module over `S`: what a series numerator may hold.
pub trait Module<S: Scalar>: Clone + Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn scale(&self, s: &S) -> Self;

    fn neg(&self) -> Self {
        self.scale(&-S::one())
    }
}

/// A commutative algebra over `S`.
pub trait Algebra<S: Scalar>: Module<S> {
    fn one() -> Self;
    fn mul(&self, other: &Self) -> Self;
}

impl<S: Scalar> Module<S> for S {
    fn zero() -> Self {
        <S as num_traits::Zero>::zero()
    }
    fn is_zero(&self) -> bool {
        <S as num_traits::Zero>::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self = self.clone() + other.clone();
    }
    fn scale(&self, s: &S) -> Self {
        self.clone() * s.clone()
    }
}

impl<S: Scalar> Algebra<S> for S {
    fn one() -> Self {
        <S as num_traits::One>::one()
    }
    fn mul(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }
}

/// Sparse `Σ c_k · k` with no stored zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lin<K: Ord, S> {
    terms: BTreeMap<K, S>,
}

impl<K: Ord + Clone, S: Scalar> Default for Lin<K, S> {
    fn default() -> Self {
        Lin {
            terms: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone, S: Scalar> Lin<K, S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn basis(k: K) -> Self {
        Self::term(k, S::one())
    }

    pub fn term(k: K, c: S) -> Self {
        let mut out = Self::new();
        out.add_term(k, c);
        out
    }

    pub fn from_terms<I: IntoIterator<Item = (K, S)>>(it: I) -> Self {
        let mut out = Self::new();
        for (k, c) in it {
            out.add_term(k, c);
        }
        out
    }

    pub fn add_term(&mut self, k: K, c: S) {
        if num_traits::Zero::is_zero(&c) {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(v) => {
                let sum = v.clone() + c;
                if num_traits::Zero::is_zero(&sum) {
                    self.terms.remove(&k);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.terms.insert(k, c);
            }
        }
    }

    pub fn coeff(&self, k: &K) -> S {
        self.terms
            .get(k)
            .cloned()
            .unwrap_or_else(<S as num_traits::Zero>::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    /// Apply a linear map given on basis elements.
    pub fn map_linear<K2: Ord + Clone, F>(&self, mut f: F) -> Lin<K2, S>
    where
        F: FnMut(&K) -> Lin<K2, S>,
    {
        let mut out = Lin::new();
        for (k, c) in &self.terms {
            for (k2, c2) in f(k).terms {
                out.add_term(k2, c2 * c.clone());
            }
        }
        out
    }

    /// Bilinear extension of a product given on basis pairs.
    pub fn bilinear<K2: Ord + Clone, K3: Ord + Clone, F>(
        &self,
        other: &Lin<K2, S>,
        mut f: F,
    ) -> Lin<K3, S>
    where
        F: FnMut(&K, &K2) -> Lin<K3, S>,
    {
        let mut out = Lin::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let w = ca.clone() * cb.clone();
                for (k, c) in f(a, b).terms {
                    out.add_term(k, c * w.clone());
                }
            }
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), -c.clone());
        }
        out
    }

    pub fn scaled(&self, s: &S) -> Self {
        Lin::from_terms(self.terms.iter().map(|(k, c)| (k.clone(), c.clone() * s.clone())))
    }
}

impl<K, S> Module<S> for Lin<K, S>
where
    K: Ord + Clone + Debug + Send + Sync,
    S: Scalar,
{
    fn zero() -> Self {
        Lin::new()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c.clone());
        }
    }
    fn scale(&self, s: &S) -> Self {
        self.scaled(s)
    }
}

impl<K: Ord + Clone, S: Scalar> FromIterator<(K, S)> for Lin<K, S> {
    fn from_iter<I: IntoIterator<Item = (K, S)>>(iter: I) -> Self {
        Lin::from_terms(iter)
    }
}
