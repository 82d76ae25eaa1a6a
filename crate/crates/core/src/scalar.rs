//! The scalar abstraction shared by plain floats and jets.
//!
//! Geometry and expression evaluation are written once against [`Scalar`];
//! instantiating with `f64` gives point values, instantiating with a
//! first-order [`Jet`](crate::jet::Jet) gives derivatives along the surface.

use num_traits::Float;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Primal value, used for domain checks and branching.
    fn value(&self) -> f64;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn recip(&self) -> Self;

    fn asinh(&self) -> Self {
        // odd symmetry avoids cancellation in x + √(x²+1) for negative x
        if self.value() < 0.0 {
            return -(-self.clone()).asinh();
        }
        let x = self.clone();
        (x.clone() + (x.clone() * x + Self::one()).sqrt()).ln()
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn scale(&self, k: f64) -> Self {
        self.clone() * Self::from_f64(k)
    }
}

macro_rules! impl_scalar_float {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn value(&self) -> f64 {
                *self as f64
            }
            fn exp(&self) -> Self {
                Float::exp(*self)
            }
            fn ln(&self) -> Self {
                Float::ln(*self)
            }
            fn sqrt(&self) -> Self {
                Float::sqrt(*self)
            }
            fn sin(&self) -> Self {
                Float::sin(*self)
            }
            fn cos(&self) -> Self {
                Float::cos(*self)
            }
            fn sinh(&self) -> Self {
                Float::sinh(*self)
            }
            fn cosh(&self) -> Self {
                Float::cosh(*self)
            }
            fn asinh(&self) -> Self {
                Float::asinh(*self)
            }
            fn powi(&self, n: i32) -> Self {
                Float::powi(*self, n)
            }
            fn powf(&self, p: f64) -> Self {
                Float::powf(*self, p as $t)
            }
            fn recip(&self) -> Self {
                Float::recip(*self)
            }
        }
    };
}

impl_scalar_float!(f32);
impl_scalar_float!(f64);
