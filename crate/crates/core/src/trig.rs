//! Finite Fourier series and the perturbation generators built from them.
//!
//! Every periodic ingredient of the chart families (the toroidal profile
//! `f(ζ)`, the axis displacements `δx, δy`, the poloidal pair `δz, g`) is a
//! trigonometric polynomial, so antiderivatives and derivatives are exact
//! coefficient manipulations.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::jet::Real;
use crate::Error;

/// `Σ_n cos[n]·cos(n t) + sin[n]·sin(n t)`, with `n` starting at zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let mut p = Self { cos, sin };
        p.normalize();
        p
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len()).saturating_sub(1)
    }

    fn normalize(&mut self) {
        let n = self.cos.len().max(self.sin.len());
        self.cos.resize(n, 0.0);
        self.sin.resize(n, 0.0);
        if let Some(s) = self.sin.first_mut() {
            // sin(0 t) vanishes identically
            *s = 0.0;
        }
        while self.cos.last() == Some(&0.0) && self.sin.last() == Some(&0.0) {
            self.cos.pop();
            self.sin.pop();
        }
    }

    fn with_len(n: usize) -> Self {
        Self { cos: vec![0.0; n], sin: vec![0.0; n] }
    }

    /// Adds `c·cos(m t)` for a possibly negative harmonic `m`.
    fn add_cos(&mut self, m: i64, c: f64) {
        self.cos[m.unsigned_abs() as usize] += c;
    }

    /// Adds `c·sin(m t)` for a possibly negative harmonic `m`.
    fn add_sin(&mut self, m: i64, c: f64) {
        if m != 0 {
            self.sin[m.unsigned_abs() as usize] += c * (m.signum() as f64);
        }
    }

    pub fn eval<T: Real>(&self, t: T) -> T {
        let mut acc = T::cst(self.cos.first().copied().unwrap_or(0.0));
        for n in 1..self.cos.len() {
            let (a, b) = (self.cos[n], self.sin[n]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let nt = t * n as f64;
            if a != 0.0 {
                acc = acc + nt.cos() * a;
            }
            if b != 0.0 {
                acc = acc + nt.sin() * b;
            }
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let mut d = Self::with_len(self.cos.len());
        for n in 1..self.cos.len() {
            let nf = n as f64;
            d.cos[n] = nf * self.sin[n];
            d.sin[n] = -nf * self.cos[n];
        }
        d.normalize();
        d
    }

    /// Term-by-term antiderivative with zero constant term.
    ///
    /// Fails when the series has a nonzero mean, since the antiderivative
    /// would then contain a secular (non-periodic) term.
    pub fn antiderivative(&self) -> Result<Self, Error> {
        if let Some(&c0) = self.cos.first() {
            if c0.abs() > 1e-15 {
                return Err(Error::InvalidChart(format!(
                    "perturbation integrand has mean {c0:e}; its antiderivative is not periodic"
                )));
            }
        }
        let mut a = Self::with_len(self.cos.len());
        for n in 1..self.cos.len() {
            let nf = n as f64;
            a.cos[n] = -self.sin[n] / nf;
            a.sin[n] = self.cos[n] / nf;
        }
        a.normalize();
        Ok(a)
    }

    /// Product with `cos t`.
    pub fn mul_cos(&self) -> Self {
        let mut out = Self::with_len(self.cos.len() + 1);
        for n in 0..self.cos.len() {
            let m = n as i64;
            out.add_cos(m + 1, 0.5 * self.cos[n]);
            out.add_cos(m - 1, 0.5 * self.cos[n]);
            out.add_sin(m + 1, 0.5 * self.sin[n]);
            out.add_sin(m - 1, 0.5 * self.sin[n]);
        }
        out.normalize();
        out
    }

    /// Product with `sin t`.
    pub fn mul_sin(&self) -> Self {
        let mut out = Self::with_len(self.cos.len() + 1);
        for n in 0..self.cos.len() {
            let m = n as i64;
            out.add_sin(m + 1, 0.5 * self.cos[n]);
            out.add_sin(m - 1, -0.5 * self.cos[n]);
            out.add_cos(m - 1, 0.5 * self.sin[n]);
            out.add_cos(m + 1, -0.5 * self.sin[n]);
        }
        out.normalize();
        out
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(
            self.cos.iter().map(|c| c * k).collect(),
            self.sin.iter().map(|c| c * k).collect(),
        )
    }

    /// Upper bound on `max |p(t)|`: the dense-sample maximum plus the largest
    /// possible excursion between samples (derivative bound times half-spacing).
    pub fn max_abs_bound(&self) -> f64 {
        const N: usize = 4096;
        let h = 2.0 * PI / N as f64;
        let sampled = (0..N).map(|k| self.eval(k as f64 * h).abs()).fold(0.0, f64::max);
        let dbound: f64 = (1..self.cos.len())
            .map(|n| n as f64 * (self.cos[n].abs() + self.sin[n].abs()))
            .sum();
        sampled + 0.5 * h * dbound
    }

    /// Largest positive value, bounded above as in [`Self::max_abs_bound`].
    pub fn max_bound(&self) -> f64 {
        const N: usize = 4096;
        let h = 2.0 * PI / N as f64;
        let sampled = (0..N).map(|k| self.eval(k as f64 * h)).fold(f64::NEG_INFINITY, f64::max);
        let dbound: f64 = (1..self.cos.len())
            .map(|n| n as f64 * (self.cos[n].abs() + self.sin[n].abs()))
            .sum();
        sampled + 0.5 * h * dbound
    }
}

/// Toroidal profile `f(ζ)` driving the axis displacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum FSpec {
    /// `sin²ζ`
    Sin2,
    /// `sin²(3ζ)`
    Sin2Of3,
    /// `sin⁴(2ζ) + cos²(3ζ)`
    Mix,
    /// Finite cosine/sine coefficient lists, harmonic index starting at zero.
    FourierCustom { cos: Vec<f64>, sin: Vec<f64> },
}

impl FSpec {
    pub fn poly(&self) -> TrigPoly {
        match self {
            FSpec::Sin2 => TrigPoly::new(vec![0.5, 0.0, -0.5], vec![]),
            FSpec::Sin2Of3 => TrigPoly::new(vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, -0.5], vec![]),
            // sin⁴u = 3/8 - cos(2u)/2 + cos(4u)/8, cos²v = 1/2 + cos(2v)/2
            FSpec::Mix => {
                let mut c = vec![0.0; 9];
                c[0] = 3.0 / 8.0 + 0.5;
                c[4] = -0.5;
                c[6] = 0.5;
                c[8] = 1.0 / 8.0;
                TrigPoly::new(c, vec![])
            }
            FSpec::FourierCustom { cos, sin } => TrigPoly::new(cos.clone(), sin.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FSpec::Sin2 => "sin2",
            FSpec::Sin2Of3 => "sin2of3",
            FSpec::Mix => "mix",
            FSpec::FourierCustom { .. } => "fourier",
        }
    }
}

/// Axis displacement `(δx, δy)` with `δx' = f sinζ`, `δy' = −f cosζ` and
/// zero-mean integration constants.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisShift {
    pub f: TrigPoly,
    pub dx: TrigPoly,
    pub dy: TrigPoly,
}

pub fn delta_xy_from_f(f: &FSpec) -> Result<AxisShift, Error> {
    let fp = f.poly();
    let dx = fp.mul_sin().antiderivative()?;
    let dy = fp.mul_cos().scaled(-1.0).antiderivative()?;
    Ok(AxisShift { f: fp, dx, dy })
}

impl AxisShift {
    /// Bounds `(max|δx|, max|δy|, max f)` used by the image-domain estimate.
    pub fn bounds(&self, f: &FSpec) -> (f64, f64, f64) {
        match f {
            // exact values for sin²ζ: |δx| ≤ 2/3, |δy| ≤ 1/3, f ≤ 1
            FSpec::Sin2 => (2.0 / 3.0, 1.0 / 3.0, 1.0),
            _ => (self.dx.max_abs_bound(), self.dy.max_abs_bound(), self.f.max_bound()),
        }
    }

    /// Constant `K` such that `r > ε K` guarantees the perturbed polar radius
    /// exceeds `ε·max f`, generalising `1 + √2` for the `sin²ζ` profile.
    pub fn radius_factor(&self, f: &FSpec) -> f64 {
        let (bx, by, fmax) = self.bounds(f);
        let d = bx + by;
        d + (d * d + fmax.max(0.0).powi(2)).sqrt()
    }
}

/// Poloidal pair `(δz, g)` for the general family, related by
/// `sinΘ (g' − δz'') + cosΘ (δz' + g'') = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DzGPair {
    pub dz: TrigPoly,
    pub g: TrigPoly,
}

impl DzGPair {
    /// `δz = −sin4Θ − 10 sin2Θ`, `g = cos4Θ − 10 cos2Θ`.
    pub fn example() -> Self {
        Self {
            dz: TrigPoly::new(vec![], vec![0.0, 0.0, -10.0, 0.0, -1.0]),
            g: TrigPoly::new(vec![0.0, 0.0, -10.0, 0.0, 1.0], vec![]),
        }
    }

    pub fn ode_residual(&self, theta: f64) -> f64 {
        let dz1 = self.dz.derivative();
        let dz2 = dz1.derivative();
        let g1 = self.g.derivative();
        let g2 = g1.derivative();
        theta.sin() * (g1.eval(theta) - dz2.eval(theta))
            + theta.cos() * (dz1.eval(theta) + g2.eval(theta))
    }

    /// Maximum ODE residual over `n` equispaced samples.
    pub fn max_ode_residual(&self, n: usize) -> f64 {
        (0..n)
            .map(|k| self.ode_residual(2.0 * PI * k as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let r = self.max_ode_residual(1000);
        let scale = 1.0 + self.dz.max_abs_bound() + self.g.max_abs_bound();
        if r > 1e-12 * scale {
            return Err(Error::InvalidChart(format!(
                "(δz, g) pair violates its compatibility ODE: max residual {r:e}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_scalar;
    use approx::assert_abs_diff_eq;

    /// Composite Gauss-Legendre (5-point) integral of `f` on `[a, b]`.
    /// Quadrature oracle: δx(ζ) = δx(0) + ∫₀^ζ f sin, with δx(0) fixed by the
    /// zero-mean condition (mean of the running integral subtracted).
    fn quad_delta(f: &dyn Fn(f64) -> f64, zeta: f64) -> f64 {
        let q = |g: &dyn Fn(f64) -> f64, a: f64, b: f64| integrate_scalar(g, a, b, 1e-14).unwrap();
        let running = |t: f64| q(f, 0.0, t);
        let mean = q(&running, 0.0, 2.0 * PI) / (2.0 * PI);
        running(zeta) - mean
    }

    #[test]
    fn sin2_matches_printed_closed_form() {
        let s = delta_xy_from_f(&FSpec::Sin2).unwrap();
        for k in 0..1000 {
            let z = 2.0 * PI * k as f64 / 1000.0 + 0.123;
            let dx = -z.cos() * (1.0 - z.cos().powi(2) / 3.0);
            let dy = -z.sin().powi(3) / 3.0;
            assert_abs_diff_eq!(s.dx.eval(z), dx, epsilon = 1e-14);
            assert_abs_diff_eq!(s.dy.eval(z), dy, epsilon = 1e-14);
        }
    }

    #[test]
    fn sin2of3_value_at_zero() {
        let s = delta_xy_from_f(&FSpec::Sin2Of3).unwrap();
        assert_abs_diff_eq!(s.dx.eval(0.0), -18.0 / 35.0, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_oracle_agrees_for_mix() {
        let s = delta_xy_from_f(&FSpec::Mix).unwrap();
        let f = |z: f64| (2.0 * z).sin().powi(4) + (3.0 * z).cos().powi(2);
        for &z in &[0.0, 0.4, 1.3, 2.9, 4.4, 6.0] {
            let qx = quad_delta(&|t| f(t) * t.sin(), z);
            let qy = quad_delta(&|t| -f(t) * t.cos(), z);
            assert_abs_diff_eq!(s.dx.eval(z), qx, epsilon = 1e-12);
            assert_abs_diff_eq!(s.dy.eval(z), qy, epsilon = 1e-12);
        }
    }

    #[test]
    fn printed_forms_for_sin2of3_and_mix() {
        let a = delta_xy_from_f(&FSpec::Sin2Of3).unwrap();
        let b = delta_xy_from_f(&FSpec::Mix).unwrap();
        for k in 0..1000 {
            let z = 2.0 * PI * k as f64 / 1000.0;
            let c = |n: f64| (n * z).cos();
            let s = |n: f64| (n * z).sin();
            assert_abs_diff_eq!(a.dx.eval(z), -c(1.0) / 2.0 - c(5.0) / 20.0 + c(7.0) / 28.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.dy.eval(z), -s(1.0) / 2.0 + s(5.0) / 20.0 + s(7.0) / 28.0, epsilon = 1e-12);
            let bx = -7.0 / 8.0 * c(1.0) - c(3.0) / 12.0 + c(5.0) / 10.0 - 3.0 / 112.0 * c(7.0) - c(9.0) / 144.0;
            let by = -7.0 / 8.0 * s(1.0) + s(3.0) / 12.0 - 5.0 / 112.0 * s(7.0) - s(9.0) / 144.0;
            assert_abs_diff_eq!(b.dx.eval(z), bx, epsilon = 1e-12);
            assert_abs_diff_eq!(b.dy.eval(z), by, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_of_f_times_cos_must_vanish() {
        // f = cos ζ gives δy' = −cos²ζ with mean −1/2
        let f = FSpec::FourierCustom { cos: vec![0.0, 1.0], sin: vec![] };
        assert!(delta_xy_from_f(&f).is_err());
    }

    #[test]
    fn example_pair_solves_ode() {
        let p = DzGPair::example();
        assert!(p.max_ode_residual(1000) < 1e-12);
        p.validate().unwrap();
        let bad = DzGPair { dz: p.dz.clone(), g: p.g.scaled(2.0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sin2_radius_factor_is_one_plus_sqrt2() {
        let s = delta_xy_from_f(&FSpec::Sin2).unwrap();
        assert_abs_diff_eq!(s.radius_factor(&FSpec::Sin2), 1.0 + 2f64.sqrt(), epsilon = 1e-15);
    }
}
