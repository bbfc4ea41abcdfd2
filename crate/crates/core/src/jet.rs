//! Second-order multivariate jets: value, full gradient and full Hessian
//! propagated together through arithmetic.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::real::Real;

/// Maximum number of active variables a [`Jet2`] can carry.
pub const MAX_VARS: usize = 16;
const PACKED: usize = MAX_VARS * (MAX_VARS + 1) / 2;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (a, b) = if i >= j { (i, j) } else { (j, i) };
    a * (a + 1) / 2 + b
}

/// Value with gradient and symmetric Hessian. The Hessian is stored packed,
/// so symmetry holds by construction.
#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    n: usize,
    value: f64,
    grad: [f64; MAX_VARS],
    hess: [f64; PACKED],
}

impl Jet2 {
    pub fn constant(n: usize, value: f64) -> Self {
        assert!(n <= MAX_VARS, "jet supports at most {MAX_VARS} variables");
        Self {
            n,
            value,
            grad: [0.0; MAX_VARS],
            hess: [0.0; PACKED],
        }
    }

    /// The `index`-th coordinate function evaluated at `value`.
    pub fn variable(n: usize, index: usize, value: f64) -> Self {
        let mut j = Self::constant(n, value);
        j.grad[index] = 1.0;
        j
    }

    /// Seeds every coordinate of `point` as an active variable.
    pub fn seed(point: &[f64]) -> Vec<Self> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Self::variable(n, i, v))
            .collect()
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn val(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.grad[..self.n].to_vec()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.hess[packed(i, j)]).collect())
            .collect()
    }

    pub fn d(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn dd(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(i, j)]
    }

    fn width(&self, other: &Self) -> usize {
        self.n.max(other.n)
    }

    /// Applies a scalar function given f(v), f'(v), f''(v).
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(self.n, f0);
        for i in 0..self.n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..self.n {
            for j in 0..=i {
                let k = packed(i, j);
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let n = self.width(&o);
        let mut out = Self::constant(n, self.value + o.value);
        for i in 0..n {
            out.grad[i] = self.grad[i] + o.grad[i];
        }
        for k in 0..n * (n + 1) / 2 {
            out.hess[k] = self.hess[k] + o.hess[k];
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        let mut out = self;
        out.value = -out.value;
        for g in out.grad.iter_mut().take(self.n) {
            *g = -*g;
        }
        for h in out.hess.iter_mut().take(self.n * (self.n + 1) / 2) {
            *h = -*h;
        }
        out
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let n = self.width(&o);
        let mut out = Self::constant(n, self.value * o.value);
        for i in 0..n {
            out.grad[i] = self.value * o.grad[i] + o.value * self.grad[i];
        }
        for i in 0..n {
            for j in 0..=i {
                let k = packed(i, j);
                out.hess[k] = self.value * o.hess[k]
                    + o.value * self.hess[k]
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let v = o.value;
        self * o.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}

impl Real for Jet2 {
    const ORDER: usize = usize::MAX;

    fn from_f64(v: f64) -> Self {
        Self::constant(0, v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad[..self.n].iter().all(|g| g.is_finite())
            && self.hess[..self.n * (self.n + 1) / 2].iter().all(|h| h.is_finite())
    }
    fn is_zero(&self) -> bool {
        self.value == 0.0
            && self.grad[..self.n].iter().all(|&g| g == 0.0)
            && self.hess[..self.n * (self.n + 1) / 2].iter().all(|&h| h == 0.0)
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }
    fn abs(self) -> Self {
        let sign = if self.value < 0.0 {
            -1.0
        } else if self.value > 0.0 {
            1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), sign, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_constant_hessian() {
        let x = Jet2::seed(&[3.0]);
        let y = x[0] * x[0];
        assert_eq!(y.val(), 9.0);
        assert_eq!(y.gradient(), vec![6.0]);
        assert_eq!(y.hessian(), vec![vec![2.0]]);
    }

    #[test]
    fn mixed_partials() {
        let x = Jet2::seed(&[0.5, 2.0]);
        let y = x[0] * x[1].sin();
        assert!((y.dd(0, 1) - 2.0f64.cos()).abs() < 1e-15);
        assert!((y.dd(1, 1) + 0.5 * 2.0f64.sin()).abs() < 1e-15);
        assert_eq!(y.dd(0, 0), 0.0);
    }

    #[test]
    fn constants_have_zero_derivatives() {
        let c = Jet2::constant(3, 4.2).exp();
        assert!(c.gradient().iter().all(|&g| g == 0.0));
        assert!(c.hessian().iter().flatten().all(|&h| h == 0.0));
    }

    #[test]
    fn quotient_rule_second_order() {
        // f = 1/x, f'' = 2/x^3
        let x = Jet2::seed(&[2.0]);
        let f = Jet2::from_f64(1.0) / x[0];
        assert!((f.dd(0, 0) - 0.25).abs() < 1e-15);
    }
}
