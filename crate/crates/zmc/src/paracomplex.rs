//! Split-complex (paracomplex) scalars `a + jb` with `j^2 = +1`.
//!
//! The square norm `a^2 - b^2` is indefinite, so a nonzero number can be
//! null. Causal classification of near-null values is tolerance-based and
//! lives here and nowhere else; every downstream "zero or null" verdict
//! funnels through [`Paracomplex::classify`].

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Default absolute threshold below which a value counts as zero.
pub const EPS_ZERO: f64 = 1e-10;
/// Default relative threshold on `|a^2 - b^2| / (a^2 + b^2)` for nullity.
pub const EPS_NULL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Paracomplex {
    pub re: f64,
    pub im: f64,
}

/// Causal class of a split-complex value under given tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    Zero,
    NullNonzero,
    Positive,
    Negative,
}

impl Paracomplex {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub const ZERO: Self = Self::new(0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0);
    /// The paraimaginary unit.
    pub const J: Self = Self::new(0.0, 1.0);

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    /// Indefinite square norm `re^2 - im^2`; this is `z * conj(z)` on the
    /// real axis and may be negative or zero for nonzero `z`.
    pub fn sq_norm(self) -> f64 {
        self.re * self.re - self.im * self.im
    }

    /// Largest component magnitude, used for scale-relative tolerances.
    pub fn max_abs(self) -> f64 {
        self.re.abs().max(self.im.abs())
    }

    /// Tolerance-based causal classification.
    ///
    /// `eps_zero` is absolute; `eps_null` is relative to `re^2 + im^2`, so
    /// the class of a value is invariant under positive rescaling (away
    /// from the zero threshold).
    pub fn classify(self, eps_zero: f64, eps_null: f64) -> CausalClass {
        debug_assert!(eps_zero > 0.0 && eps_null > 0.0);
        if self.max_abs() <= eps_zero {
            return CausalClass::Zero;
        }
        let sq = self.sq_norm();
        let scale = self.re * self.re + self.im * self.im;
        if sq.abs() <= eps_null * scale {
            CausalClass::NullNonzero
        } else if sq > 0.0 {
            CausalClass::Positive
        } else {
            CausalClass::Negative
        }
    }

    /// [`Self::classify`] with the crate-default tolerances.
    pub fn classify_default(self) -> CausalClass {
        self.classify(EPS_ZERO, EPS_NULL)
    }
}

impl Add for Paracomplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Paracomplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Paracomplex {
    type Output = Self;
    /// `(a+jb)(c+jd) = (ac + bd) + j(ad + bc)` since `j^2 = +1`.
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re + self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Mul<f64> for Paracomplex {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.re * rhs, self.im * rhs)
    }
}

impl Neg for Paracomplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}
