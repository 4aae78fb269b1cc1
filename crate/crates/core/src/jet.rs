//! Second-order truncated Taylor arithmetic in three variables.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to three independent coordinates. Arithmetic propagates all three
//! orders exactly (up to rounding), so derivatives of closed-form chart
//! expressions come out at machine precision without any differencing.
//!
//! The Hessian is stored as its six upper-triangular entries, which makes
//! symmetry of mixed partials hold bit-for-bit.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Index of `(i, j)` in the packed upper-triangular Hessian.
#[inline(always)]
pub const fn packed(i: usize, j: usize) -> usize {
    const MAP: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    MAP[i][j]
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub val: f64,
    pub grad: [f64; 3],
    hess: [f64; 6],
}

impl Jet {
    pub const fn constant(val: f64) -> Self {
        Self { val, grad: [0.0; 3], hess: [0.0; 6] }
    }

    /// Independent variable number `k` (0, 1 or 2) evaluated at `val`.
    pub fn variable(val: f64, k: usize) -> Self {
        let mut grad = [0.0; 3];
        grad[k] = 1.0;
        Self { val, grad, hess: [0.0; 6] }
    }

    /// Seeds all three coordinates at once.
    pub fn seed(y: [f64; 3]) -> [Jet; 3] {
        [Jet::variable(y[0], 0), Jet::variable(y[1], 1), Jet::variable(y[2], 2)]
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(i, j)]
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.val` (chain rule to second order).
    #[inline]
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let g = self.grad;
        let mut hess = [0.0; 6];
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            hess[slot] = df * self.hess[slot] + d2f * (g[i] * g[j]);
        }
        Self { val: f, grad: [df * g[0], df * g[1], df * g[2]], hess }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.val.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.val))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.val;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                self.chain(
                    self.val.powi(n),
                    nf * self.val.powi(n - 1),
                    nf * (nf - 1.0) * self.val.powi(n - 2),
                )
            }
        }
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.val;
        self.chain(self.val.ln(), r, -r * r)
    }

    /// Two-argument arctangent, expanded around the principal value.
    pub fn atan2(self, x: Jet) -> Jet {
        let theta0 = self.val.atan2(x.val);
        let (s0, c0) = theta0.sin_cos();
        // rotate by -theta0 so that the residual angle is ~0
        let t = (self * c0 - x * s0) / (x * c0 + self * s0);
        let tv = t.val;
        let d = 1.0 / (1.0 + tv * tv);
        t.chain(tv.atan(), d, -2.0 * tv * d * d) + theta0
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        let mut hess = [0.0; 6];
        for k in 0..6 {
            hess[k] = self.hess[k] + o.hess[k];
        }
        Jet {
            val: self.val + o.val,
            grad: [self.grad[0] + o.grad[0], self.grad[1] + o.grad[1], self.grad[2] + o.grad[2]],
            hess,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        let mut hess = [0.0; 6];
        for k in 0..6 {
            hess[k] = self.hess[k] - o.hess[k];
        }
        Jet {
            val: self.val - o.val,
            grad: [self.grad[0] - o.grad[0], self.grad[1] - o.grad[1], self.grad[2] - o.grad[2]],
            hess,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        let mut hess = [0.0; 6];
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            let cross = a.grad[i] * b.grad[j] + a.grad[j] * b.grad[i];
            hess[slot] = a.hess[slot] * b.val + b.hess[slot] * a.val + cross;
        }
        Jet {
            val: a.val * b.val,
            grad: [
                a.grad[0] * b.val + b.grad[0] * a.val,
                a.grad[1] * b.val + b.grad[1] * a.val,
                a.grad[2] * b.val + b.grad[2] * a.val,
            ],
            hess,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: Jet) -> Jet {
        #[allow(clippy::suspicious_arithmetic_impl)]
        let q = self * o.recip();
        q
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        let mut hess = self.hess;
        hess.iter_mut().for_each(|h| *h = -*h);
        Jet { val: -self.val, grad: [-self.grad[0], -self.grad[1], -self.grad[2]], hess }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, o: f64) -> Jet {
        self.val += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, o: f64) -> Jet {
        self.val -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: f64) -> Jet {
        let mut hess = self.hess;
        hess.iter_mut().for_each(|h| *h *= o);
        Jet { val: self.val * o, grad: [self.grad[0] * o, self.grad[1] * o, self.grad[2] * o], hess }
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: f64) -> Jet {
        self * (1.0 / o)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = *self - o;
    }
}

/// Scalar arithmetic shared by plain `f64` and [`Jet`], so that closed-form
/// expressions are written once and evaluated either way.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
}

impl Real for f64 {
    #[inline(always)]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn value(&self) -> f64 {
        *self
    }
    #[inline(always)]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline(always)]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Real for Jet {
    #[inline(always)]
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }
    #[inline(always)]
    fn value(&self) -> f64 {
        self.val
    }
    #[inline(always)]
    fn sin(self) -> Self {
        Jet::sin(self)
    }
    #[inline(always)]
    fn cos(self) -> Self {
        Jet::cos(self)
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        Jet::sqrt(self)
    }
}
