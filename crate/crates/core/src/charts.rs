//! The three chart families and everything needed to move between chart
//! coordinates and Cartesian space.
//!
//! All families share one closed form,
//!
//! ```text
//! R = r0 + s cosΘ + ε2 sinΘ − ε3 g(Θ),          s = √(Ψ0 − Ψ)
//! x = R cosζ + ε1 δx(ζ)
//! y = R sinζ + ε1 δy(ζ)
//! z = s sinΘ + ε2 cosΘ + ε3 δz(Θ)
//! ```
//!
//! with the axisymmetric torus at `ε1 = ε2 = ε3 = 0`, the f-perturbed
//! family at `ε2 = ε3 = 0`, and the general family otherwise.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::diffgeo::{angle_diff, Coords, Jet2, JetSource, MetricAtPoint, MetricSource};
use crate::jet::{Jet, Real};
use crate::trig::{delta_xy_from_f, AxisShift, DzGPair, FSpec, TrigPoly};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartKind {
    Axisymmetric,
    FPerturbed,
    GeneralCC1,
}

#[derive(Clone, Debug)]
struct PoloidalPair {
    pair: DzGPair,
    dz1: TrigPoly,
    g1: TrigPoly,
    gmax: f64,
}

#[derive(Clone, Debug)]
pub struct ChartFamily {
    kind: ChartKind,
    psi0: f64,
    r0: f64,
    eps1: f64,
    eps2: f64,
    eps3: f64,
    fspec: Option<FSpec>,
    shift: Option<AxisShift>,
    poloidal: Option<PoloidalPair>,
    radius_factor: f64,
    fmax: f64,
}

/// Iteration counts reported by [`ChartFamily::inverse_with_stats`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InverseStats {
    pub fixed_point_iterations: usize,
    pub newton_iterations: usize,
    pub fallback: bool,
}

const MAX_ITER: usize = 100;
const FP_STALL_AFTER: usize = 60;

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidChart(format!("{name} must be finite, got {v}")))
    }
}

impl ChartFamily {
    pub fn axisymmetric(psi0: f64, r0: f64) -> Result<Self> {
        Self::build(ChartKind::Axisymmetric, psi0, r0, [0.0; 3], None, None)
    }

    pub fn f_perturbed(psi0: f64, r0: f64, eps: f64, f: FSpec) -> Result<Self> {
        Self::build(ChartKind::FPerturbed, psi0, r0, [eps, 0.0, 0.0], Some(f), None)
    }

    pub fn general_cc1(
        psi0: f64,
        r0: f64,
        eps: [f64; 3],
        f: FSpec,
        pair: DzGPair,
    ) -> Result<Self> {
        Self::build(ChartKind::GeneralCC1, psi0, r0, eps, Some(f), Some(pair))
    }

    fn build(
        kind: ChartKind,
        psi0: f64,
        r0: f64,
        eps: [f64; 3],
        fspec: Option<FSpec>,
        pair: Option<DzGPair>,
    ) -> Result<Self> {
        check_finite("Ψ0", psi0)?;
        check_finite("r0", r0)?;
        for (k, e) in eps.iter().enumerate() {
            check_finite(["ε1", "ε2", "ε3"][k], *e)?;
            if *e < 0.0 {
                return Err(Error::InvalidChart(format!("ε{} must be non-negative, got {e}", k + 1)));
            }
        }
        if psi0 <= 0.0 || r0 <= 0.0 {
            return Err(Error::InvalidChart(format!("Ψ0 and r0 must be positive (Ψ0 = {psi0}, r0 = {r0})")));
        }
        let shift = fspec.as_ref().map(delta_xy_from_f).transpose()?;
        let (radius_factor, fmax) = match (&fspec, &shift) {
            (Some(f), Some(s)) => (s.radius_factor(f), s.bounds(f).2),
            _ => (0.0, 0.0),
        };
        let poloidal = match pair {
            Some(p) => {
                p.validate()?;
                Some(PoloidalPair {
                    dz1: p.dz.derivative(),
                    g1: p.g.derivative(),
                    gmax: p.g.max_abs_bound(),
                    pair: p,
                })
            }
            None => None,
        };
        Ok(Self { kind, psi0, r0, eps1: eps[0], eps2: eps[1], eps3: eps[2], fspec, shift, poloidal, radius_factor, fmax })
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }
    pub fn psi0(&self) -> f64 {
        self.psi0
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    /// Axis-displacement amplitude (`ε`, or `ε1` for the general family).
    pub fn eps(&self) -> f64 {
        self.eps1
    }
    pub fn eps2(&self) -> f64 {
        self.eps2
    }
    pub fn eps3(&self) -> f64 {
        self.eps3
    }
    pub fn fspec(&self) -> Option<&FSpec> {
        self.fspec.as_ref()
    }
    pub fn axis_shift(&self) -> Option<&AxisShift> {
        self.shift.as_ref()
    }
    pub fn dz_g(&self) -> Option<&DzGPair> {
        self.poloidal.as_ref().map(|p| &p.pair)
    }

    /// True when the poloidal cross-section is the exact circle of radius
    /// `√(Ψ0−Ψ)`, so `(Ψ, Θ)` follow from `(ρ, z)` in closed form.
    fn circular_section(&self) -> bool {
        self.eps2 == 0.0 && (self.eps3 == 0.0 || self.poloidal.is_none())
    }

    pub fn short_name(&self) -> String {
        match self.kind {
            ChartKind::Axisymmetric => "axisymmetric".into(),
            ChartKind::FPerturbed => format!(
                "{}(eps={})",
                self.fspec.as_ref().map(FSpec::name).unwrap_or("?"),
                self.eps1
            ),
            ChartKind::GeneralCC1 => format!(
                "cc1-{}(eps1={},eps2={},eps3={})",
                self.fspec.as_ref().map(FSpec::name).unwrap_or("?"),
                self.eps1,
                self.eps2,
                self.eps3
            ),
        }
    }

    pub fn f_value(&self, zeta: f64) -> f64 {
        self.shift.as_ref().map_or(0.0, |s| s.f.eval(zeta))
    }

    pub fn delta_xy(&self, zeta: f64) -> (f64, f64) {
        self.shift.as_ref().map_or((0.0, 0.0), |s| (s.dx.eval(zeta), s.dy.eval(zeta)))
    }

    /// Closed-form position, generic over plain values and jets.
    pub fn position<T: Real>(&self, psi: T, theta: T, zeta: T) -> [T; 3] {
        let s = (T::cst(self.psi0) - psi).sqrt();
        let (ct, st) = (theta.cos(), theta.sin());
        let mut radial = s * ct + self.r0;
        let mut z = s * st;
        if self.eps2 != 0.0 {
            radial = radial + st * self.eps2;
            z = z + ct * self.eps2;
        }
        if let (Some(p), true) = (&self.poloidal, self.eps3 != 0.0) {
            radial = radial - p.pair.g.eval(theta) * self.eps3;
            z = z + p.pair.dz.eval(theta) * self.eps3;
        }
        let (cz, sz) = (zeta.cos(), zeta.sin());
        let mut x = radial * cz;
        let mut y = radial * sz;
        if let (Some(sh), true) = (&self.shift, self.eps1 != 0.0) {
            x = x + sh.dx.eval(zeta) * self.eps1;
            y = y + sh.dy.eval(zeta) * self.eps1;
        }
        [x, y, z]
    }

    /// Radial factor `R(Ψ, Θ)` of the closed form.
    pub fn radial_factor(&self, psi: f64, theta: f64) -> f64 {
        let s = (self.psi0 - psi).sqrt();
        let mut r = self.r0 + s * theta.cos() + self.eps2 * theta.sin();
        if let (Some(p), true) = (&self.poloidal, self.eps3 != 0.0) {
            r -= self.eps3 * p.pair.g.eval(theta);
        }
        r
    }

    fn check_psi(&self, psi: f64, allow_axis: bool) -> Result<()> {
        let ok = if allow_axis { psi <= self.psi0 } else { psi < self.psi0 };
        if !ok || !psi.is_finite() {
            return Err(Error::Domain(format!(
                "Ψ = {psi} must be {} Ψ0 = {}",
                if allow_axis { "at most" } else { "below" },
                self.psi0
            )));
        }
        Ok(())
    }

    /// Cartesian position. `Ψ = Ψ0` is accepted and lands on the magnetic axis.
    pub fn forward(&self, c: Coords) -> Result<Vector3<f64>> {
        self.check_psi(c.psi, true)?;
        let [x, y, z] = self.position(c.psi, c.theta, c.zeta);
        Ok(Vector3::new(x, y, z))
    }

    /// Position with exact first and second partials from jet propagation.
    pub fn jet_eval(&self, c: Coords) -> Result<Jet2> {
        self.check_psi(c.psi, false)?;
        let [p, t, z] = Jet::seed(c.to_array());
        Ok(Jet2::from_components(self.position(p, t, z)))
    }

    pub fn metric_at(&self, c: Coords) -> Result<MetricAtPoint> {
        Ok(MetricAtPoint::from_jet(&self.jet_eval(c)?))
    }

    /// Closed-form Jacobian determinant `∂_Ψ·∂_Θ×∂_ζ`.
    ///
    /// For the f-perturbed family this is `½(R − ε f(ζ))`; the general family
    /// picks up a poloidal factor `1 + (−ε2 sin2Θ + ε3(sinΘ g' + cosΘ δz'))/s`.
    pub fn jacobian_closed_form(&self, c: Coords) -> f64 {
        self.jacobian_expr(c.psi, c.theta, c.zeta)
    }

    /// The closed-form Jacobian, generic so that jets give its derivatives.
    pub fn jacobian_expr<T: Real>(&self, psi: T, theta: T, zeta: T) -> T {
        let s = (T::cst(self.psi0) - psi).sqrt();
        let (st, ct) = (theta.sin(), theta.cos());
        let mut toroidal = s * ct + self.r0 + st * self.eps2;
        if let (Some(p), true) = (&self.poloidal, self.eps3 != 0.0) {
            toroidal = toroidal - p.pair.g.eval(theta) * self.eps3;
        }
        if let (Some(sh), true) = (&self.shift, self.eps1 != 0.0) {
            toroidal = toroidal - sh.f.eval(zeta) * self.eps1;
        }
        if self.circular_section() {
            return toroidal * 0.5;
        }
        let mut poloidal = (theta * 2.0).sin() * (-self.eps2);
        if let Some(p) = &self.poloidal {
            poloidal = poloidal + (st * p.g1.eval(theta) + ct * p.dz1.eval(theta)) * self.eps3;
        }
        toroidal * 0.5 * (poloidal / s + 1.0)
    }

    /// `∂_Θ ln` of the closed-form Jacobian, i.e. `−∇·u`.
    pub fn dlog_jacobian_dtheta(&self, c: Coords) -> f64 {
        let [p, t, z] = Jet::seed(c.to_array());
        let j = self.jacobian_expr(p, t, z);
        j.grad[1] / j.val
    }

    /// Numeric determinant of the jet's first-derivative matrix, for `c` in
    /// the chart parameter set (nonvanishing closed-form Jacobian).
    pub fn jacobian_det(&self, c: Coords) -> Result<f64> {
        if !self.in_domain_coords(c) {
            return Err(Error::Domain(format!(
                "({}, {}, {}) is outside the chart parameter set (closed-form Jacobian {:e})",
                c.psi,
                c.theta,
                c.zeta,
                self.jacobian_closed_form(c)
            )));
        }
        let det = self.jet_eval(c)?.det();
        debug_assert!(
            (det - self.jacobian_closed_form(c)).abs() <= 1e-9 * det.abs().max(1e-3),
            "numeric and closed-form Jacobians disagree"
        );
        Ok(det)
    }

    /// Coordinate-side membership: `Ψ ≤ Ψ0` and a positive Jacobian.
    pub fn in_domain_coords(&self, c: Coords) -> bool {
        if !(c.psi <= self.psi0) {
            return false;
        }
        let toroidal = self.radial_factor(c.psi, c.theta) - self.eps1 * self.f_value(c.zeta);
        if c.psi == self.psi0 || self.circular_section() {
            toroidal > 0.0
        } else {
            toroidal > 0.0 && self.jacobian_closed_form(c) > 0.0
        }
    }

    /// Constant `K` of the Cartesian-side bound `r > ε K`
    /// (`K = 1 + √2` for the `sin²ζ` profile).
    pub fn radius_factor(&self) -> f64 {
        self.radius_factor
    }

    pub fn n_prime_bound(&self) -> f64 {
        self.eps1 * self.radius_factor
    }

    /// Cartesian-side membership `r > ε K` (only the z-axis is excluded at ε = 0).
    pub fn in_domain_cartesian(&self, p: &Vector3<f64>) -> bool {
        let r = p.x.hypot(p.y);
        r > self.n_prime_bound() && r > 0.0
    }

    /// Requires the standard torus neighbourhood `r0 > ε K` to exist.
    pub fn check_n_prime(&self) -> Result<()> {
        let bound = self.n_prime_bound();
        if self.r0 > bound {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "r0 = {} must exceed ε·{:.6} = {:.6} (r > ε(1+√2) for the sin² profile)",
                self.r0, self.radius_factor, bound
            )))
        }
    }

    /// Solves `ζ = atan2(y − ε δy(ζ), x − ε δx(ζ))` by fixed-point iteration
    /// seeded at the cylindrical angle, halving steps that overshoot.
    /// Returns `(ζ, iterations, converged)`.
    pub fn solve_zeta(&self, p: &Vector3<f64>) -> (f64, usize, bool) {
        let seed = p.y.atan2(p.x);
        let Some(sh) = self.shift.as_ref().filter(|_| self.eps1 != 0.0) else {
            return (seed, 0, true);
        };
        let mut zeta = seed;
        let mut prev = f64::INFINITY;
        for it in 1..=FP_STALL_AFTER {
            let target = (p.y - self.eps1 * sh.dy.eval(zeta)).atan2(p.x - self.eps1 * sh.dx.eval(zeta));
            let mut step = angle_diff(target, zeta);
            if step.abs() > prev.abs() {
                step *= 0.5;
            }
            zeta += step;
            if step.abs() <= 1e-14 * (1.0 + zeta.abs()) {
                return (zeta, it, true);
            }
            prev = step;
        }
        (zeta, FP_STALL_AFTER, false)
    }

    /// Perturbed polar radius `ρ` and the residual of the ζ-equation for a
    /// given toroidal angle.
    pub fn rho_on_branch(&self, p: &Vector3<f64>, zeta: f64) -> (f64, f64) {
        let (dx, dy) = self.delta_xy(zeta);
        let (a, b) = (p.x - self.eps1 * dx, p.y - self.eps1 * dy);
        let (sz, cz) = zeta.sin_cos();
        (a.hypot(b), a * sz - b * cz)
    }

    /// One-dimensional Newton polish of the ζ-equation
    /// `F(ζ) = (x−εδx) sinζ − (y−εδy) cosζ`, with `F' = ρ − ε f(ζ)` at a root.
    fn polish_zeta(&self, p: &Vector3<f64>, mut zeta: f64) -> f64 {
        if self.eps1 == 0.0 {
            return zeta;
        }
        for _ in 0..3 {
            let (dx, dy) = self.delta_xy(zeta);
            let (a, b) = (p.x - self.eps1 * dx, p.y - self.eps1 * dy);
            let (sz, cz) = zeta.sin_cos();
            let f = a * sz - b * cz;
            let df = a * cz + b * sz - self.eps1 * self.f_value(zeta);
            if df == 0.0 {
                break;
            }
            let step = f / df;
            zeta -= step;
            if step.abs() < 1e-16 * (1.0 + zeta.abs()) {
                break;
            }
        }
        zeta
    }

    /// `(Ψ, Θ)` from the poloidal-plane point `(ρ, z)`.
    fn poloidal_recover(&self, rho: f64, z: f64) -> Result<(f64, f64)> {
        let dr = rho - self.r0;
        let theta0 = z.atan2(dr);
        if self.circular_section() {
            return Ok((self.psi0 - dr * dr - z * z, theta0));
        }
        let p = self.poloidal.as_ref();
        let mut s = dr.hypot(z);
        let mut theta = theta0;
        let mut last = f64::INFINITY;
        for _ in 0..MAX_ITER {
            let (st, ct) = theta.sin_cos();
            let (g, g1, dz, dz1) = match p {
                Some(p) if self.eps3 != 0.0 => {
                    (p.pair.g.eval(theta), p.g1.eval(theta), p.pair.dz.eval(theta), p.dz1.eval(theta))
                }
                _ => (0.0, 0.0, 0.0, 0.0),
            };
            let f = Vector2::new(
                self.r0 + s * ct + self.eps2 * st - self.eps3 * g - rho,
                s * st + self.eps2 * ct + self.eps3 * dz - z,
            );
            last = f.norm();
            if last < 1e-15 * (1.0 + rho.abs() + z.abs()) {
                return Ok((self.psi0 - s * s, theta));
            }
            let jac = Matrix2::new(
                ct,
                -s * st + self.eps2 * ct - self.eps3 * g1,
                st,
                s * ct - self.eps2 * st + self.eps3 * dz1,
            );
            let Some(inv) = jac.try_inverse() else { break };
            let d = inv * f;
            s -= d.x;
            theta -= d.y;
            if d.norm() < 1e-16 * (1.0 + s.abs()) {
                return Ok((self.psi0 - s * s, theta));
            }
        }
        Err(Error::NonConvergence { iterations: MAX_ITER, residual: last })
    }

    /// Full Newton on all three coordinates. Returns the final residual norm.
    fn newton3(&self, p: &Vector3<f64>, c: &mut Coords, max_iter: usize, stats: &mut InverseStats) -> Result<f64> {
        let tol = 1e-13 * (1.0 + p.norm());
        let mut res = f64::INFINITY;
        for _ in 0..max_iter {
            let jet = self.jet_eval(*c)?;
            let r = p - jet.x;
            res = r.norm();
            if res <= tol {
                break;
            }
            let Some(inv) = jet.d1.try_inverse() else {
                return Err(Error::SingularJacobian { det: jet.det() });
            };
            let mut d = inv * r;
            // keep Ψ below the axis value
            let mut lambda = 1.0;
            while c.psi + lambda * d.x >= self.psi0 && lambda > 1e-6 {
                lambda *= 0.5;
            }
            d *= lambda;
            c.psi += d.x;
            c.theta += d.y;
            c.zeta += d.z;
            stats.newton_iterations += 1;
        }
        Ok(res)
    }

    pub fn inverse(&self, p: &Vector3<f64>) -> Result<Coords> {
        self.inverse_with_stats(p).map(|(c, _)| c)
    }

    /// Chart coordinates of a Cartesian point, angles reduced to `[0, 2π)`.
    ///
    /// The toroidal angle comes from a damped fixed point on the ζ-equation,
    /// `(Ψ, Θ)` from the poloidal cross-section, followed by Newton polishing
    /// on all three coordinates. If the fixed point stalls, Newton takes over
    /// from the current estimate.
    pub fn inverse_with_stats(&self, p: &Vector3<f64>) -> Result<(Coords, InverseStats)> {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("non-finite Cartesian point".into()));
        }
        if p.x.hypot(p.y) == 0.0 {
            return Err(Error::Domain("point on the vertical axis r = 0".into()));
        }
        let mut stats = InverseStats::default();
        let (zeta, fp_iters, converged) = self.solve_zeta(p);
        stats.fixed_point_iterations = fp_iters;
        let zeta = if converged { self.polish_zeta(p, zeta) } else { zeta };
        let (rho, _) = self.rho_on_branch(p, zeta);
        let (psi, theta) = match self.poloidal_recover(rho, p.z) {
            Ok(v) => v,
            Err(_) => {
                stats.fallback = true;
                let dr = rho - self.r0;
                (self.psi0 - dr * dr - p.z * p.z, p.z.atan2(dr))
            }
        };
        if !converged {
            stats.fallback = true;
        }
        if psi >= self.psi0 {
            return Err(Error::Domain(format!("point lies on or beyond the magnetic axis (Ψ = {psi})")));
        }
        let mut c = Coords::new(psi, theta, zeta);
        let tol = 1e-12 * (1.0 + p.norm());
        let budget = if stats.fallback { MAX_ITER } else { 4 };
        let res = self.newton3(p, &mut c, budget, &mut stats)?;
        if !(res <= tol) {
            return Err(Error::NonConvergence { iterations: fp_iters + stats.newton_iterations, residual: res });
        }
        if !self.in_domain_coords(c) {
            return Err(Error::Domain(format!(
                "point maps outside the chart parameter set (Jacobian {:e})",
                self.jacobian_closed_form(c)
            )));
        }
        Ok((c.reduced(), stats))
    }

    /// Local inverse on the sheet through `seed`: Newton from the seed
    /// coordinates without the global ζ search. Where several sheets of the
    /// chart overlap this selects the one containing `seed`.
    pub fn inverse_near(&self, p: &Vector3<f64>, seed: Coords) -> Result<Coords> {
        let mut c = seed;
        let mut stats = InverseStats::default();
        let res = self.newton3(p, &mut c, MAX_ITER, &mut stats)?;
        if !(res <= 1e-12 * (1.0 + p.norm())) {
            return Err(Error::NonConvergence { iterations: stats.newton_iterations, residual: res });
        }
        Ok(c.reduced())
    }

    /// Ψ evaluated directly from a Cartesian point.
    ///
    /// For circular cross-sections this is `Ψ0 − (ρ − r0)² − z²` with the
    /// perturbed polar radius from the ζ-equation; otherwise the full inverse.
    pub fn psi_cartesian(&self, p: &Vector3<f64>) -> Result<f64> {
        if !self.circular_section() {
            return Ok(self.inverse(p)?.psi);
        }
        if p.x.hypot(p.y) == 0.0 {
            return Err(Error::Domain("point on the vertical axis r = 0".into()));
        }
        let (zeta, iters, converged) = self.solve_zeta(p);
        if !converged {
            return Ok(self.inverse(p)?.psi);
        }
        let _ = iters;
        let zeta = self.polish_zeta(p, zeta);
        let (rho, _) = self.rho_on_branch(p, zeta);
        Ok(self.psi0 - (rho - self.r0).powi(2) - p.z * p.z)
    }

    /// Level-set value at `p` on the branch of the ζ-equation through the
    /// given toroidal angle. Returns `(Ψ, ζ-equation residual)`.
    pub fn psi_on_branch(&self, p: &Vector3<f64>, zeta: f64) -> Result<(f64, f64)> {
        let (rho, res) = self.rho_on_branch(p, zeta);
        let (psi, _) = self.poloidal_recover(rho, p.z)?;
        Ok((psi, res))
    }

    /// `∇Ψ` in Cartesian components, from the jet's dual basis.
    pub fn grad_psi(&self, c: Coords) -> Result<Vector3<f64>> {
        let g = self.jet_eval(c)?.gradients()?;
        Ok(g.row(0).transpose())
    }

    /// Lower bound of the image radius `r` over the closed shell, from the
    /// triangle inequality `r ≥ ρ − ε max|δ|`.
    fn image_radius_lower_bound(&self, psi_min: f64) -> f64 {
        let s = (self.psi0 - psi_min).sqrt();
        let shift = self.shift.as_ref().map_or(0.0, |sh| {
            let n = 2048;
            (0..n)
                .map(|k| {
                    let z = TAU * k as f64 / n as f64;
                    sh.dx.eval(z).hypot(sh.dy.eval(z))
                })
                .fold(0.0, f64::max)
        });
        let poloidal = self.eps2 + self.poloidal.as_ref().map_or(0.0, |p| self.eps3 * p.gmax);
        self.r0 - s - poloidal - self.eps1 * shift
    }
}

impl JetSource for ChartFamily {
    fn jet(&self, c: Coords) -> Result<Jet2> {
        self.jet_eval(c)
    }
}

impl MetricSource for ChartFamily {
    fn metric_at(&self, c: Coords) -> Result<MetricAtPoint> {
        ChartFamily::metric_at(self, c)
    }
}

/// The closed shell `psi_min ≤ Ψ ≤ psi_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub psi_min: f64,
    pub psi_max: f64,
}

/// Outcome of [`DomainSpec::validate_for`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainReport {
    /// Smallest closed-form Jacobian over a dense shell grid.
    pub min_jacobian: f64,
    /// Smallest cylindrical radius of the sampled image.
    pub min_radius: f64,
    /// `ε K`, the Cartesian-side bound.
    pub n_prime_bound: f64,
    /// `min_radius − n_prime_bound`; negative when the shell leaves `r > εK`.
    pub n_prime_slack: f64,
    /// General family only: `min R − (ε1 max f + ε2 + ε3 max|g|)`.
    pub radial_margin: Option<f64>,
    /// True when a conservative bound is violated (the shell is still usable
    /// as long as the Jacobian stays positive).
    pub binding: bool,
}

impl DomainSpec {
    pub fn new(psi_min: f64, psi_max: f64) -> Result<Self> {
        if !(psi_min.is_finite() && psi_max.is_finite() && psi_min < psi_max) {
            return Err(Error::Domain(format!("invalid Ψ range [{psi_min}, {psi_max}]")));
        }
        Ok(Self { psi_min, psi_max })
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.psi_min + self.psi_max)
    }

    pub fn contains_psi(&self, psi: f64) -> bool {
        psi >= self.psi_min && psi <= self.psi_max
    }

    /// Scans the shell for Jacobian positivity and reports the slack of the
    /// conservative image bounds.
    pub fn validate_for(&self, chart: &ChartFamily) -> Result<DomainReport> {
        if self.psi_max >= chart.psi0() {
            return Err(Error::Domain(format!(
                "Ψ range [{}, {}] must lie below Ψ0 = {}",
                self.psi_min,
                self.psi_max,
                chart.psi0()
            )));
        }
        let (np, nt, nz) = (9, 96, 96);
        let mut min_jac = f64::INFINITY;
        let mut min_r = f64::INFINITY;
        let mut min_radial = f64::INFINITY;
        for i in 0..np {
            let psi = self.psi_min + (self.psi_max - self.psi_min) * i as f64 / (np - 1) as f64;
            for j in 0..nt {
                let theta = TAU * j as f64 / nt as f64;
                min_radial = min_radial.min(chart.radial_factor(psi, theta));
                for k in 0..nz {
                    let c = Coords::new(psi, theta, TAU * k as f64 / nz as f64);
                    min_jac = min_jac.min(chart.jacobian_closed_form(c));
                    let [x, y, _] = chart.position(c.psi, c.theta, c.zeta);
                    min_r = min_r.min(x.hypot(y));
                }
            }
        }
        let bound = chart.n_prime_bound();
        let radial_margin = (chart.kind() == ChartKind::GeneralCC1).then(|| {
            let gmax = chart.poloidal.as_ref().map_or(0.0, |p| p.gmax);
            min_radial - (chart.eps1 * chart.fmax + chart.eps2 + chart.eps3 * gmax)
        });
        let report = DomainReport {
            min_jacobian: min_jac,
            min_radius: min_r.min(chart.image_radius_lower_bound(self.psi_min).max(min_r)),
            n_prime_bound: bound,
            n_prime_slack: min_r - bound,
            radial_margin,
            binding: min_r <= bound || radial_margin.is_some_and(|m| m <= 0.0),
        };
        if !(min_jac > 0.0) {
            return Err(Error::Domain(format!(
                "Jacobian vanishes on the shell [{}, {}] (min {:e})",
                self.psi_min, self.psi_max, min_jac
            )));
        }
        Ok(report)
    }
}

/// Parameter sets used by the figures and the acceptance suite
/// (`r0 = 1`, `Ψ0 = 1` throughout).
pub mod presets {
    use super::*;

    /// Level-set panels (a)–(f).
    pub fn figure1(panel: char) -> Result<ChartFamily> {
        match panel {
            'a' => ChartFamily::axisymmetric(1.0, 1.0),
            'b' => ChartFamily::f_perturbed(1.0, 1.0, 0.8, FSpec::Sin2),
            'c' => ChartFamily::f_perturbed(1.0, 1.0, 0.7, FSpec::Sin2Of3),
            'd' => ChartFamily::f_perturbed(1.0, 1.0, 0.7, FSpec::Mix),
            'e' => ChartFamily::general_cc1(1.0, 1.0, [0.5, 0.1, 0.0], FSpec::Sin2Of3, DzGPair::example()),
            'f' => ChartFamily::general_cc1(1.0, 1.0, [0.5, 0.05, 0.005], FSpec::Sin2Of3, DzGPair::example()),
            other => Err(Error::InvalidChart(format!("unknown figure panel '{other}'"))),
        }
    }

    pub fn sin2(eps: f64) -> ChartFamily {
        ChartFamily::f_perturbed(1.0, 1.0, eps, FSpec::Sin2).expect("valid preset")
    }

    /// The five configurations the identity checks are run on.
    pub fn builtin() -> Vec<ChartFamily> {
        vec![
            ChartFamily::axisymmetric(1.0, 1.0).expect("valid preset"),
            sin2(0.3),
            sin2(0.8),
            ChartFamily::f_perturbed(1.0, 1.0, 0.7, FSpec::Sin2Of3).expect("valid preset"),
            ChartFamily::f_perturbed(1.0, 1.0, 0.7, FSpec::Mix).expect("valid preset"),
            figure1('f').expect("valid preset"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn axi() -> ChartFamily {
        ChartFamily::axisymmetric(1.0, 1.0).unwrap()
    }

    #[test]
    fn axis_circle_position() {
        let p = axi().forward(Coords::new(1.0, 0.7, 0.0)).unwrap();
        assert_eq!(p, Vector3::new(1.0, 0.0, 0.0));
        let q = presets::sin2(0.8).forward(Coords::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(q.x, 7.0 / 15.0, epsilon = 1e-15);
        assert_eq!((q.y, q.z), (0.0, 0.0));
        // the jet is singular on the axis
        assert!(matches!(axi().jet_eval(Coords::new(1.0, 0.0, 0.0)), Err(Error::Domain(_))));
        assert!(axi().forward(Coords::new(1.01, 0.0, 0.0)).is_err());
    }

    #[test]
    fn forward_examples() {
        let s = 0.05f64.sqrt();
        let p = axi().forward(Coords::new(0.95, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.x, 1.0 + s, epsilon = 1e-15);
        let q = presets::sin2(0.8).forward(Coords::new(0.95, 0.0, FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(q.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.y, 1.0 + s - 0.8 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn general_family_matches_independent_evaluation() {
        let chart = presets::figure1('f').unwrap();
        let c = Coords::new(0.95, FRAC_PI_2, 0.0);
        let p = chart.forward(c).unwrap();
        // hand evaluation at Θ = π/2, ζ = 0
        let s = 0.05f64.sqrt();
        let g = (4.0 * FRAC_PI_2).cos() - 10.0 * (2.0 * FRAC_PI_2).cos(); // 1 + 10
        let dz = -(4.0 * FRAC_PI_2).sin() - 10.0 * (2.0 * FRAC_PI_2).sin();
        let dx0 = -0.5 - 1.0 / 20.0 + 1.0 / 28.0;
        let radial = 1.0 + 0.0 + 0.05 - 0.005 * g;
        assert_abs_diff_eq!(p.x, radial + 0.5 * dx0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.z, s + 0.0 + 0.005 * dz, epsilon = 1e-14);
    }

    #[test]
    fn jet_theta_column_matches_hand_coded_tangent() {
        let chart = presets::sin2(0.8);
        let c = Coords::new(0.95, FRAC_PI_4, FRAC_PI_3);
        let jet = chart.jet_eval(c).unwrap();
        let s = (1.0f64 - 0.95).sqrt();
        let (st, ct) = c.theta.sin_cos();
        let (sz, cz) = c.zeta.sin_cos();
        let expected = [-cz * st * s, -sz * st * s, ct * s];
        for a in 0..3 {
            assert_relative_eq!(jet.d1[(a, 1)], expected[a], epsilon = 1e-15, max_relative = 1e-14);
        }
        let rr = 1.0 - 0.8 * sz * sz + s * ct;
        let dzeta = [-sz * rr, cz * rr, 0.0];
        for a in 0..3 {
            assert_abs_diff_eq!(jet.d1[(a, 2)], dzeta[a], epsilon = 1e-14);
        }
    }

    #[test]
    fn jacobian_examples() {
        let chart = presets::sin2(0.8);
        let c = Coords::new(0.95, 0.0, FRAC_PI_2);
        let expected = 0.5 * (1.0 + 0.05f64.sqrt() - 0.8);
        assert_abs_diff_eq!(chart.jacobian_closed_form(c), expected, epsilon = 1e-15);
        assert_relative_eq!(chart.jacobian_det(c).unwrap(), expected, max_relative = 1e-12);
        assert_abs_diff_eq!(expected, 0.2118034, epsilon = 1e-7);
        // ε = 0: J⁻¹ = r/2
        let c = Coords::new(0.9, 2.0, 1.0);
        let p = axi().forward(c).unwrap();
        assert_relative_eq!(axi().jacobian_det(c).unwrap(), 0.5 * p.x.hypot(p.y), max_relative = 1e-13);
    }

    #[test]
    fn general_family_jacobian_closed_form() {
        for panel in ['e', 'f'] {
            let chart = presets::figure1(panel).unwrap();
            for k in 0..50 {
                let c = Coords::new(0.9 + 0.001 * k as f64, 0.37 * k as f64, 0.91 * k as f64);
                let det = chart.jet_eval(c).unwrap().det();
                assert_relative_eq!(det, chart.jacobian_closed_form(c), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn axisymmetric_inverse_closed_form() {
        let c = axi().inverse(&Vector3::new(1.2, 0.0, 0.1)).unwrap();
        assert_abs_diff_eq!(c.psi, 0.95, epsilon = 1e-14);
        assert_abs_diff_eq!(c.theta, 0.1f64.atan2(0.2), epsilon = 1e-14);
        assert_abs_diff_eq!(c.zeta, 0.0, epsilon = 1e-15);
        assert!(axi().inverse(&Vector3::new(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn perturbed_inverse_fixed_point_count() {
        let chart = presets::sin2(0.3);
        let c = Coords::new(0.9, 1.0, 2.0);
        let p = chart.forward(c).unwrap();
        let (back, stats) = chart.inverse_with_stats(&p).unwrap();
        assert!(!stats.fallback);
        // measured: 14 iterations to reach 1e-14
        assert!(stats.fixed_point_iterations <= 30, "{stats:?}");
        assert_abs_diff_eq!(back.psi, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(back.theta, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.zeta, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn domain_predicates() {
        let chart = presets::sin2(0.8);
        let b = 0.8 * (1.0 + 2f64.sqrt());
        assert!(chart.in_domain_cartesian(&Vector3::new(b + 0.01, 0.0, 0.0)));
        assert!(!chart.in_domain_cartesian(&Vector3::new(b - 0.01, 0.0, 0.0)));
        assert!(axi().in_domain_cartesian(&Vector3::new(1e-9, 0.0, 0.0)));
        assert!(!axi().in_domain_cartesian(&Vector3::new(0.0, 0.0, 3.0)));
        assert!(presets::sin2(0.1).in_domain_coords(Coords::new(1.0, 0.3, 1.0)));
        assert!(chart.check_n_prime().is_err());
        assert!(presets::sin2(0.3).check_n_prime().is_ok());
    }

    #[test]
    fn psi_cartesian_examples() {
        assert_abs_diff_eq!(axi().psi_cartesian(&Vector3::new(1.2, 0.0, 0.1)).unwrap(), 0.95, epsilon = 1e-14);
        let chart = presets::sin2(0.3);
        let p = chart.forward(Coords::new(0.95, 2.5, 4.0)).unwrap();
        assert_abs_diff_eq!(chart.psi_cartesian(&p).unwrap(), 0.95, epsilon = 1e-12);
    }

    #[test]
    fn periodicity_is_exact_in_closed_forms() {
        let chart = presets::figure1('f').unwrap();
        let c = Coords::new(0.93, 0.4, 1.1);
        let p = chart.forward(c).unwrap();
        let q = chart.forward(Coords::new(0.93, 0.4 + 2.0 * PI, 1.1 + 2.0 * PI)).unwrap();
        assert_abs_diff_eq!((p - q).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn domain_spec_reports() {
        let d = DomainSpec::new(0.9, 0.99).unwrap();
        let rep = d.validate_for(&presets::sin2(0.3)).unwrap();
        assert!(rep.min_jacobian > 0.0);
        assert!(rep.binding, "image leaves r > εK on this shell: {rep:?}");
        // the general family folds near the axis; stay at Ψ ≤ 0.95
        let rep = DomainSpec::new(0.85, 0.95).unwrap().validate_for(&presets::figure1('f').unwrap()).unwrap();
        assert!(rep.radial_margin.unwrap() > 0.0);
        // ε = 0.8 folds the chart near Θ = π, ζ = π/2 on Ψ = 0.95
        assert!(DomainSpec::new(0.9, 0.99).unwrap().validate_for(&presets::sin2(0.8)).is_err());
        assert!(DomainSpec::new(0.9, 1.0).unwrap().validate_for(&axi()).is_err());
        assert!(DomainSpec::new(0.99, 0.9).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(ChartFamily::axisymmetric(-1.0, 1.0).is_err());
        assert!(ChartFamily::f_perturbed(1.0, 1.0, -0.1, FSpec::Sin2).is_err());
        assert!(ChartFamily::f_perturbed(1.0, f64::NAN, 0.1, FSpec::Sin2).is_err());
    }
}
