//! Forward-mode jets used for exact derivative evaluation.
//!
//! `Jet2` carries a value, gradient and Hessian in the four coordinates
//! `(r, theta, phi, psi)`; all closed-form fields in the crate are evaluated
//! through it, so first and second derivatives are exact to rounding.
//! `CJet1` is the complex first-order variant used when integrating the
//! transport ODE with sensitivities to the base point.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub const DIM: usize = 4;

/// Second-order real jet in four variables.
#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; DIM],
    pub h: [[f64; DIM]; DIM],
}

impl Jet2 {
    pub fn c(v: f64) -> Self {
        Jet2 { v, g: [0.0; DIM], h: [[0.0; DIM]; DIM] }
    }

    /// Coordinate jet: value `v`, unit derivative in slot `i`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut j = Jet2::c(v);
        j.g[i] = 1.0;
        j
    }

    /// Chain rule through a scalar function with derivatives `f1 = f'(v)`,
    /// `f2 = f''(v)`.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut h = [[0.0; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                h[i][j] = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
            }
        }
        let mut g = [0.0; DIM];
        for i in 0..DIM {
            g[i] = f1 * self.g[i];
        }
        Jet2 { v: f0, g, h }
    }

    pub fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }
    pub fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet2::c(1.0),
            1 => self,
            _ => {
                let f0 = self.v.powi(n);
                let f1 = f64::from(n) * self.v.powi(n - 1);
                let f2 = f64::from(n) * f64::from(n - 1) * self.v.powi(n - 2);
                self.chain(f0, f1, f2)
            }
        }
    }
    /// `self^(half/2)` for positive values; `half` counts half-integer steps.
    pub fn pow_half(self, half: i32) -> Self {
        if half % 2 == 0 {
            self.powi(half / 2)
        } else {
            let p = 0.5 * f64::from(half);
            let f0 = self.v.powf(p);
            let f1 = p * self.v.powf(p - 1.0);
            let f2 = p * (p - 1.0) * self.v.powf(p - 2.0);
            self.chain(f0, f1, f2)
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        let mut r = self;
        r.v += o.v;
        for i in 0..DIM {
            r.g[i] += o.g[i];
            for j in 0..DIM {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        let mut r = self;
        r.v = -r.v;
        for i in 0..DIM {
            r.g[i] = -r.g[i];
            for j in 0..DIM {
                r.h[i][j] = -r.h[i][j];
            }
        }
        r
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut h = [[0.0; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                h[i][j] = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        let mut g = [0.0; DIM];
        for i in 0..DIM {
            g[i] = self.g[i] * o.v + self.v * o.g[i];
        }
        Jet2 { v: self.v * o.v, g, h }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        self.chain(self.v * s, s, 0.0)
    }
}

/// First-order complex jet in four variables.
#[derive(Clone, Copy, Debug)]
pub struct CJet1 {
    pub v: Complex64,
    pub d: [Complex64; DIM],
}

impl CJet1 {
    pub fn zero() -> Self {
        CJet1 { v: Complex64::new(0.0, 0.0), d: [Complex64::new(0.0, 0.0); DIM] }
    }
    pub fn c(v: Complex64) -> Self {
        CJet1 { v, d: [Complex64::new(0.0, 0.0); DIM] }
    }
    pub fn from_jet(j: Jet2) -> Self {
        CJet1 {
            v: Complex64::new(j.v, 0.0),
            d: [
                Complex64::new(j.g[0], 0.0),
                Complex64::new(j.g[1], 0.0),
                Complex64::new(j.g[2], 0.0),
                Complex64::new(j.g[3], 0.0),
            ],
        }
    }
    pub fn scale(self, s: Complex64) -> Self {
        CJet1 { v: self.v * s, d: [self.d[0] * s, self.d[1] * s, self.d[2] * s, self.d[3] * s] }
    }
}

impl Add for CJet1 {
    type Output = CJet1;
    fn add(self, o: CJet1) -> CJet1 {
        CJet1 {
            v: self.v + o.v,
            d: [
                self.d[0] + o.d[0],
                self.d[1] + o.d[1],
                self.d[2] + o.d[2],
                self.d[3] + o.d[3],
            ],
        }
    }
}

impl Mul for CJet1 {
    type Output = CJet1;
    fn mul(self, o: CJet1) -> CJet1 {
        let mut d = [Complex64::new(0.0, 0.0); DIM];
        for i in 0..DIM {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        CJet1 { v: self.v * o.v, d }
    }
}

/// Complex pair over a generic ring; used when building coframes from the
/// stereographic construction with jet-valued components.
#[derive(Clone, Copy, Debug)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T> Cx<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    pub fn new(re: T, im: T) -> Self {
        Cx { re, im }
    }
    pub fn conj(self) -> Self {
        Cx { re: self.re, im: -self.im }
    }
    pub fn add(self, o: Self) -> Self {
        Cx { re: self.re + o.re, im: self.im + o.im }
    }
    pub fn sub(self, o: Self) -> Self {
        Cx { re: self.re - o.re, im: self.im - o.im }
    }
    pub fn mul(self, o: Self) -> Self {
        Cx { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
    pub fn scale(self, s: T) -> Self {
        Cx { re: self.re * s, im: self.im * s }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_reproduces_derivatives_of_product() {
        // f(r, th) = r^2 sin(th); check grad and hess entries exactly.
        let r = Jet2::var(1.7, 0);
        let th = Jet2::var(0.6, 1);
        let f = r * r * th.sin();
        assert!((f.v - 1.7f64.powi(2) * 0.6f64.sin()).abs() < 1e-15);
        assert!((f.g[0] - 2.0 * 1.7 * 0.6f64.sin()).abs() < 1e-15);
        assert!((f.g[1] - 1.7f64.powi(2) * 0.6f64.cos()).abs() < 1e-15);
        assert!((f.h[0][1] - 2.0 * 1.7 * 0.6f64.cos()).abs() < 1e-14);
        assert!((f.h[0][0] - 2.0 * 0.6f64.sin()).abs() < 1e-15);
        assert!((f.h[1][1] + 1.7f64.powi(2) * 0.6f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn jet_pow_half_matches_sqrt() {
        let x = Jet2::var(2.3, 0);
        let a = x.pow_half(1);
        let b = x.sqrt();
        assert!((a.v - b.v).abs() < 1e-15);
        assert!((a.g[0] - b.g[0]).abs() < 1e-15);
        assert!((a.h[0][0] - b.h[0][0]).abs() < 1e-15);
    }

    #[test]
    fn cjet_product_rule() {
        let a = CJet1 { v: Complex64::new(1.0, 2.0), d: [Complex64::new(0.5, 0.0); 4] };
        let b = CJet1 { v: Complex64::new(-1.0, 1.0), d: [Complex64::new(0.0, 1.0); 4] };
        let p = a * b;
        assert!((p.v - Complex64::new(1.0, 2.0) * Complex64::new(-1.0, 1.0)).norm() < 1e-15);
        let expect = Complex64::new(0.5, 0.0) * Complex64::new(-1.0, 1.0)
            + Complex64::new(1.0, 2.0) * Complex64::new(0.0, 1.0);
        assert!((p.d[0] - expect).norm() < 1e-15);
    }
}
