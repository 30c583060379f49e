//! Coefficient rings.
//!
//! Everything in the crate is generic over [`Scalar`], a commutative ring
//! with exact division by nonzero integers. The intended instance is
//! [`BigRational`]; `Ratio<i64>` and `f64` are supported for quick
//! experiments, and [`Dual`] adjoins a square-zero element for first-order
//! deformations.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_i64(n: i64) -> Self;

    fn from_bigint(n: &BigInt) -> Self;

    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) * Self::from_i64(den).recip().expect("zero denominator")
    }

    /// Multiplicative inverse, `None` when the element is not a unit.
    fn recip(&self) -> Option<Self>;

    fn is_unit(&self) -> bool {
        self.recip().is_some()
    }

    /// Human-readable exact form, used by reports.
    fn render(&self) -> String;
}

impl Scalar for BigRational {
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_bigint(n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Ratio::recip(self))
        }
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

impl Scalar for Ratio<i64> {
    fn from_i64(n: i64) -> Self {
        Ratio::from_integer(n)
    }

    fn from_bigint(n: &BigInt) -> Self {
        Ratio::from_integer(n.to_i64().expect("integer does not fit in i64"))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Ratio::recip(self))
        }
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn from_bigint(n: &BigInt) -> Self {
        n.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn recip(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

/// `re + eps * ε` with `ε² = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, eps: S) -> Self {
        Dual { re, eps }
    }

    pub fn real(re: S) -> Self {
        Dual { re, eps: S::zero() }
    }

    /// The infinitesimal `ε` itself.
    pub fn epsilon() -> Self {
        Dual {
            re: S::zero(),
            eps: S::one(),
        }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let eps = self.re.clone() * rhs.eps + self.eps * rhs.re.clone();
        Dual::new(self.re * rhs.re, eps)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<S: Scalar> Zero for Dual<S> {
    fn zero() -> Self {
        Dual::new(S::zero(), S::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
}

impl<S: Scalar> One for Dual<S> {
    fn one() -> Self {
        Dual::real(S::one())
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_i64(n: i64) -> Self {
        Dual::real(S::from_i64(n))
    }

    fn from_bigint(n: &BigInt) -> Self {
        Dual::real(S::from_bigint(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Dual::real(S::from_ratio(num, den))
    }

    fn recip(&self) -> Option<Self> {
        // (a + bε)⁻¹ = a⁻¹ − b a⁻² ε
        let inv = self.re.recip()?;
        let eps = -(self.eps.clone() * inv.clone() * inv.clone());
        Some(Dual::new(inv, eps))
    }

    fn render(&self) -> String {
        if self.eps.is_zero() {
            self.re.render()
        } else {
            format!("{} + ({})ε", self.re.render(), self.eps.render())
        }
    }
}

impl<S: Scalar> Display for Dual<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Parse `"p"` or `"p/q"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => text.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Sign helper: `(-1)^k`.
pub fn sign<S: Scalar>(k: i64) -> S {
    if k.rem_euclid(2) == 0 {
        S::one()
    } else {
        -S::one()
    }
}
