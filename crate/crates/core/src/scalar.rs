//! Minimal scalar abstraction so closed-form coefficients can be evaluated
//! either as plain `f64` or as forward-mode duals carrying exact gradients.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn sqrt(self) -> Self;
    fn value(self) -> f64;

    fn sq(self) -> Self {
        self * self
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn value(self) -> f64 {
        self
    }
    fn sq(self) -> Self {
        self * self
    }
    fn powi(self, n: u32) -> Self {
        f64::powi(self, n as i32)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Value plus gradient with respect to `N` independent variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; N] }
    }

    /// The `i`-th independent variable with value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Dual { v, d }
    }

    fn map(self, f0: f64, df: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= df;
        }
        Dual { v: f0, d }
    }

    pub fn sin(self) -> Self {
        self.map(self.v.sin(), self.v.cos())
    }

    pub fn cos(self) -> Self {
        self.map(self.v.cos(), -self.v.sin())
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - v * o.d[i]) * inv;
        }
        Dual { v, d }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for x in self.d.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn cst(x: f64) -> Self {
        Dual::constant(x)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.map(r, 0.5 / r)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn scale(mut self, k: f64) -> Self {
        self.v *= k;
        for x in self.d.iter_mut() {
            *x *= k;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::<2>::var(3.0, 0);
        let y = Dual::<2>::var(2.0, 1);
        let f = x * x * y / (x + y);
        // f = x^2 y / (x + y)
        let (xv, yv) = (3.0, 2.0);
        let s = xv + yv;
        assert!((f.v - xv * xv * yv / s).abs() < 1e-15);
        assert!((f.d[0] - (2.0 * xv * yv * s - xv * xv * yv) / (s * s)).abs() < 1e-14);
        assert!((f.d[1] - (xv * xv * s - xv * xv * yv) / (s * s)).abs() < 1e-14);
    }

    #[test]
    fn sqrt_and_trig() {
        let x = Dual::<1>::var(0.7, 0);
        assert!((x.sqrt().d[0] - 0.5 / 0.7f64.sqrt()).abs() < 1e-15);
        assert!((x.sin().d[0] - 0.7f64.cos()).abs() < 1e-15);
        assert!((x.cos().d[0] + 0.7f64.sin()).abs() < 1e-15);
        assert!((x.powi(3).d[0] - 3.0 * 0.49).abs() < 1e-14);
    }
}
