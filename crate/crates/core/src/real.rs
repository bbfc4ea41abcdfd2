//! Scalar abstraction shared by plain evaluation and forward-mode duals.
//!
//! Everything that needs derivatives (metrics, Jacobians, projector fields)
//! is written once against [`Real`] and instantiated with `f64`, [`Dual`],
//! nested `Dual<Dual<_>>`, or [`crate::jet::Jet2`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Primal value with all infinitesimal parts dropped.
    fn value(&self) -> f64;
    /// True when every component (primal and derivative) is finite.
    fn is_finite(&self) -> bool;
    /// True when the primal and every infinitesimal part are exactly zero.
    fn is_zero(&self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;

    /// Dual nesting depth: 0 for `f64`, 1 for `Dual<f64>`. Types that are
    /// not plain dual towers report `usize::MAX`.
    const ORDER: usize = 0;

    /// First infinitesimal part, meaningful when `ORDER == 1`.
    fn tangent_value(&self) -> f64 {
        0.0
    }

    /// Builds `re + eps·ε`; the tangent is dropped when `ORDER == 0`.
    fn from_parts(re: f64, _eps: f64) -> Self {
        Self::from_f64(re)
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn scale(self, s: f64) -> Self {
        self * Self::from_f64(s)
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// First-order dual number over an arbitrary [`Real`] carrying one
/// directional derivative. Nesting `Dual<Dual<f64>>` yields mixed second
/// directional derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Real> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Self { re, eps: T::zero() }
    }

    /// Seeds `point + ε·direction`.
    pub fn seed(point: &[T], direction: &[T]) -> Vec<Self> {
        point.iter().zip(direction).map(|(&p, &d)| Self::new(p, d)).collect()
    }

    fn chain(self, f: T, df: T) -> Self {
        Self::new(f, df * self.eps)
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        let re = self.re * inv;
        Self::new(re, (self.eps - re * o.eps) * inv)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl<T: Real> Real for Dual<T> {
    const ORDER: usize = if T::ORDER == usize::MAX {
        usize::MAX
    } else {
        T::ORDER + 1
    };

    fn tangent_value(&self) -> f64 {
        self.eps.value()
    }
    fn from_parts(re: f64, eps: f64) -> Self {
        Self::new(T::from_f64(re), T::from_f64(eps))
    }
    fn from_f64(v: f64) -> Self {
        Self::constant(T::from_f64(v))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, T::one() + t * t)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::one() / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::from_f64(0.5) / s)
    }
    fn abs(self) -> Self {
        let sign = if self.re.value() < 0.0 {
            -1.0
        } else if self.re.value() > 0.0 {
            1.0
        } else {
            0.0
        };
        self.chain(self.re.abs(), T::from_f64(sign))
    }
}

/// Lifts a slice of primal values into constants of a dual type.
pub fn lift<T: Real>(values: &[T]) -> Vec<Dual<T>> {
    values.iter().map(|&v| Dual::constant(v)).collect()
}

pub fn primal<T: Real>(values: &[Dual<T>]) -> Vec<T> {
    values.iter().map(|d| d.re).collect()
}

pub fn tangent<T: Real>(values: &[Dual<T>]) -> Vec<T> {
    values.iter().map(|d| d.eps).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_rule() {
        let x = Dual::new(3.0, 1.0);
        let y = x * x * x;
        assert_eq!(y.re, 27.0);
        assert_eq!(y.eps, 27.0);
    }

    #[test]
    fn nested_dual_gives_second_derivative() {
        // d²/dx² sin(x) = -sin(x)
        let x = 0.7;
        let d = Dual::new(Dual::new(x, 1.0), Dual::new(1.0, 0.0));
        let s = d.sin();
        assert!((s.eps.eps + x.sin()).abs() < 1e-15);
    }

    #[test]
    fn powi_negative_exponent() {
        let x = Dual::new(2.0, 1.0);
        let y = x.powi(-2);
        assert!((y.re - 0.25).abs() < 1e-15);
        assert!((y.eps + 0.25).abs() < 1e-15);
    }
}
