//! The divided-power Hopf algebra of the d-dimensional additive formal
//! group: basis `D^(i)` for multi-indices `i`, with
//! `D^(i) D^(j) = C(i+j, i) D^(i+j)`, `Δ D^(i) = Σ_j D^(j) ⊗ D^(i-j)` and
//! `S D^(i) = (-1)^|i| D^(i)`.

use crate::combinat::{multi_binomial, sub_indices};
use crate::error::{Error, Result};
use crate::linear::Lin;
use crate::scalar::{sign, Scalar};

/// Multi-index of a divided power `D^(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DividedPower(pub Vec<u32>);

impl DividedPower {
    pub fn new(index: Vec<u32>) -> Result<Self> {
        if index.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(DividedPower(index))
    }

    pub fn unit(dim: usize) -> Self {
        DividedPower(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn add(&self, other: &Self) -> Self {
        DividedPower(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn sub(&self, other: &Self) -> Self {
        DividedPower(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HopfElement<S: Scalar> {
    dim: usize,
    terms: Lin<DividedPower, S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorElement<S: Scalar> {
    dim: usize,
    terms: Lin<(DividedPower, DividedPower), S>,
}

/// Triple tensors, used for coassociativity.
pub type Tensor3<S> = Lin<(DividedPower, DividedPower, DividedPower), S>;

impl<S: Scalar> HopfElement<S> {
    pub fn zero(dim: usize) -> Self {
        HopfElement {
            dim,
            terms: Lin::new(),
        }
    }

    pub fn one(dim: usize) -> Self {
        Self::basis(DividedPower::unit(dim))
    }

    pub fn basis(i: DividedPower) -> Self {
        HopfElement {
            dim: i.dim(),
            terms: Lin::basis(i),
        }
    }

    /// `D^(i)` from a raw index.
    pub fn d(index: &[u32]) -> Self {
        Self::basis(DividedPower(index.to_vec()))
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, S)>) -> Result<Self> {
        let mut lin = Lin::new();
        for (i, c) in terms {
            if i.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i.len(),
                });
            }
            lin.add_term(DividedPower(i), c);
        }
        Ok(HopfElement { dim, terms: lin })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &Lin<DividedPower, S> {
        &self.terms
    }

    pub fn coeff(&self, index: &[u32]) -> S {
        self.terms.coeff(&DividedPower(index.to_vec()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(HopfElement {
            dim: self.dim,
            terms: self.terms.plus(&other.terms),
        })
    }

    pub fn scaled(&self, s: &S) -> Self {
        HopfElement {
            dim: self.dim,
            terms: self.terms.scaled(s),
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let terms = self.terms.bilinear(&other.terms, |a, b| basis_product(a, b));
        Ok(HopfElement {
            dim: self.dim,
            terms,
        })
    }

    pub fn comul(&self) -> TensorElement<S> {
        let terms = self.terms.map_linear(|i| {
            sub_indices(&i.0)
                .into_iter()
                .map(|j| {
                    let j = DividedPower(j);
                    let rest = i.sub(&j);
                    ((j, rest), S::one())
                })
                .collect()
        });
        TensorElement {
            dim: self.dim,
            terms,
        }
    }

    pub fn antipode(&self) -> Self {
        let terms = self
            .terms
            .map_linear(|i| Lin::term(i.clone(), sign::<S>(i.degree() as i64)));
        HopfElement {
            dim: self.dim,
            terms,
        }
    }

    /// Coefficient of `D^(0)`.
    pub fn counit(&self) -> S {
        self.terms.coeff(&DividedPower::unit(self.dim))
    }
}

fn basis_product<S: Scalar>(a: &DividedPower, b: &DividedPower) -> Lin<DividedPower, S> {
    let sum = a.add(b);
    let c = multi_binomial(&sum.0, &a.0);
    Lin::term(sum, S::from_bigint(&c))
}

impl<S: Scalar> TensorElement<S> {
    pub fn terms(&self) -> &Lin<(DividedPower, DividedPower), S> {
        &self.terms
    }

    pub fn from_lin(dim: usize, terms: Lin<(DividedPower, DividedPower), S>) -> Self {
        TensorElement { dim, terms }
    }

    /// Multiplication `μ: H ⊗ H → H`.
    pub fn multiply(&self) -> HopfElement<S> {
        let terms = self.terms.map_linear(|(a, b)| basis_product(a, b));
        HopfElement {
            dim: self.dim,
            terms,
        }
    }

    pub fn swap(&self) -> Self {
        let terms = self
            .terms
            .map_linear(|(a, b)| Lin::basis((b.clone(), a.clone())));
        TensorElement {
            dim: self.dim,
            terms,
        }
    }

    /// `(ε ⊗ 1)`.
    pub fn counit_left(&self) -> HopfElement<S> {
        let unit = DividedPower::unit(self.dim);
        let terms = self.terms.map_linear(|(a, b)| {
            if *a == unit {
                Lin::basis(b.clone())
            } else {
                Lin::new()
            }
        });
        HopfElement {
            dim: self.dim,
            terms,
        }
    }

    /// `(1 ⊗ ε)`.
    pub fn counit_right(&self) -> HopfElement<S> {
        self.swap().counit_left()
    }

    /// `(S ⊗ 1)`.
    pub fn antipode_left(&self) -> Self {
        let terms = self
            .terms
            .map_linear(|(a, b)| Lin::term((a.clone(), b.clone()), sign::<S>(a.degree() as i64)));
        TensorElement {
            dim: self.dim,
            terms,
        }
    }

    /// Product in `H ⊗ H`, factorwise.
    pub fn mul(&self, other: &Self) -> Self {
        let terms = self.terms.bilinear(&other.terms, |(a1, b1), (a2, b2)| {
            let left: Lin<DividedPower, S> = basis_product(a1, a2);
            let right: Lin<DividedPower, S> = basis_product(b1, b2);
            left.bilinear(&right, |a, b| Lin::basis((a.clone(), b.clone())))
        });
        TensorElement {
            dim: self.dim,
            terms,
        }
    }

    /// `(Δ ⊗ 1)`.
    pub fn comul_left(&self) -> Tensor3<S> {
        self.terms.map_linear(|(a, b)| {
            sub_indices(&a.0)
                .into_iter()
                .map(|j| {
                    let j = DividedPower(j);
                    ((j.clone(), a.sub(&j), b.clone()), S::one())
                })
                .collect()
        })
    }

    /// `(1 ⊗ Δ)`.
    pub fn comul_right(&self) -> Tensor3<S> {
        self.terms.map_linear(|(a, b)| {
            sub_indices(&b.0)
                .into_iter()
                .map(|j| {
                    let j = DividedPower(j);
                    ((a.clone(), j.clone(), b.sub(&j)), S::one())
                })
                .collect()
        })
    }
}
