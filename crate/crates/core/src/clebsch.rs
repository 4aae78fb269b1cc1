//! Clebsch potentials `u = ∇Φ + Ψ∇Θ + α∇ζ` for the constructed flows.
//!
//! With `χ_Ψ = −g_ΨΘ(Ψ, 0, ζ)` and `χ = ∫_{Ψref}^{Ψ} χ_Ψ`,
//!
//! ```text
//! Φ = −ΨΘ − ∫₀^Θ g_ΘΘ dΘ' + χ(Ψ, ζ)
//! α = −χ_ζ − g_Θζ(Ψ, 0, ζ)
//! ```
//!
//! Partials of Φ are taken under the integral sign using the metric's
//! coordinate derivatives. Φ carries the secular term `−ΨΘ`, so it lives on
//! the universal cover in Θ; a [`Clebsch`] value fixes the branch.

use nalgebra::Vector3;
use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::charts::{ChartFamily, DomainSpec};
use crate::diffgeo::{Coords, MetricAtPoint, PSI, THETA, ZETA};
use crate::quadrature::integrate;
use crate::{Error, Result};

pub const QUAD_TOL: f64 = 1e-11;
const THETA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Tangent,
    Covariant,
    Clebsch,
}

/// Φ and its three coordinate partials at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiParts {
    pub phi: f64,
    pub phi_psi: f64,
    pub phi_theta: f64,
    pub phi_zeta: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Clebsch<'a> {
    chart: &'a ChartFamily,
    psi_ref: f64,
    branch: i64,
}

/// Integrates a metric-derived vector over one coordinate, surfacing chart
/// errors raised inside the integrand.
fn integrate_metric<const N: usize>(
    f: impl Fn(f64) -> Result<[f64; N]>,
    a: f64,
    b: f64,
) -> Result<[f64; N]> {
    let failure: Cell<Option<Error>> = Cell::new(None);
    let out = integrate(
        |t| match f(t) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                [f64::NAN; N]
            }
        },
        a,
        b,
        QUAD_TOL,
    );
    match (failure.into_inner(), out) {
        (Some(e), _) => Err(e),
        (None, r) => r,
    }
}

impl<'a> Clebsch<'a> {
    /// Potentials with `χ(Ψref, ζ) = 0` at the shell midpoint, branch 0.
    pub fn new(chart: &'a ChartFamily, domain: &DomainSpec) -> Self {
        Self { chart, psi_ref: domain.midpoint(), branch: 0 }
    }

    pub fn with_branch(self, branch: i64) -> Self {
        Self { branch, ..self }
    }

    pub fn branch(&self) -> i64 {
        self.branch
    }

    pub fn psi_ref(&self) -> f64 {
        self.psi_ref
    }

    fn lift(&self, theta: f64) -> f64 {
        theta + TAU * self.branch as f64
    }

    fn metric(&self, psi: f64, theta: f64, zeta: f64) -> Result<MetricAtPoint> {
        self.chart.metric_at(Coords::new(psi, theta, zeta))
    }

    /// `χ_Ψ = −g_ΨΘ(Ψ, 0, ζ)` without the Θ-independence check.
    pub fn chi_psi_at_zero(&self, psi: f64, zeta: f64) -> Result<f64> {
        Ok(-self.metric(psi, 0.0, zeta)?.g[(PSI, THETA)])
    }

    /// `Θ + ∫₀^Θ ∂_Ψ g_ΘΘ − g_ΨΘ`, which must not depend on Θ.
    pub fn chi_psi_expr(&self, psi: f64, theta: f64, zeta: f64) -> Result<f64> {
        let [i] = integrate_metric(|t| Ok([self.metric(psi, t, zeta)?.dg[THETA][THETA][PSI]]), 0.0, theta)?;
        Ok(theta + i - self.metric(psi, theta, zeta)?.g[(PSI, THETA)])
    }

    /// `χ_Ψ(Ψ, ζ)`, checked for Θ-independence at Θ ∈ {π/2, π, 3π/2}.
    pub fn chi_psi(&self, psi: f64, zeta: f64) -> Result<f64> {
        let v = self.chi_psi_at_zero(psi, zeta)?;
        let mut spread = 0.0f64;
        for theta in [FRAC_PI_2, PI, 3.0 * FRAC_PI_2] {
            spread = spread.max((self.chi_psi_expr(psi, theta, zeta)? - v).abs());
        }
        if spread > THETA_TOL {
            return Err(Error::ThetaDependence { what: "chi_psi", spread });
        }
        Ok(v)
    }

    /// `(χ, χ_ζ)` at `(Ψ, ζ)`.
    pub fn chi(&self, psi: f64, zeta: f64) -> Result<(f64, f64)> {
        let [c, cz] = integrate_metric(
            |s| {
                let m = self.metric(s, 0.0, zeta)?;
                Ok([-m.g[(PSI, THETA)], -m.dg[PSI][THETA][ZETA]])
            },
            self.psi_ref,
            psi,
        )?;
        Ok((c, cz))
    }

    /// Φ with all partials, on this value's branch.
    pub fn phi_parts(&self, c: Coords) -> Result<PhiParts> {
        let theta = self.lift(c.theta);
        let [i0, i_psi, i_zeta] = integrate_metric(
            |t| {
                let m = self.metric(c.psi, t, c.zeta)?;
                Ok([m.g[(THETA, THETA)], m.dg[THETA][THETA][PSI], m.dg[THETA][THETA][ZETA]])
            },
            0.0,
            theta,
        )?;
        let (chi, chi_zeta) = self.chi(c.psi, c.zeta)?;
        let here = self.metric(c.psi, theta, c.zeta)?;
        Ok(PhiParts {
            phi: -c.psi * theta - i0 + chi,
            phi_psi: -theta - i_psi + self.chi_psi_at_zero(c.psi, c.zeta)?,
            phi_theta: -c.psi - here.g[(THETA, THETA)],
            phi_zeta: -i_zeta + chi_zeta,
        })
    }

    pub fn phi(&self, c: Coords) -> Result<f64> {
        Ok(self.phi_parts(c)?.phi)
    }

    /// `α = −Φ_ζ − g_Θζ` at Θ = 0.
    pub fn alpha_at_zero(&self, psi: f64, zeta: f64) -> Result<f64> {
        let (_, chi_zeta) = self.chi(psi, zeta)?;
        Ok(-chi_zeta - self.metric(psi, 0.0, zeta)?.g[(THETA, ZETA)])
    }

    /// `−Φ_ζ − g_Θζ` evaluated at an arbitrary point; equals α when the
    /// chart satisfies the map identities.
    pub fn alpha_expr(&self, c: Coords) -> Result<f64> {
        let parts = self.phi_parts(c)?;
        Ok(-parts.phi_zeta - self.metric(c.psi, self.lift(c.theta), c.zeta)?.g[(THETA, ZETA)])
    }

    /// α, checked for Θ-independence at Θ ∈ {π/2, π, 3π/2}.
    pub fn alpha(&self, psi: f64, zeta: f64) -> Result<f64> {
        let v = self.alpha_at_zero(psi, zeta)?;
        let base = Self { branch: 0, ..*self };
        let mut spread = 0.0f64;
        for theta in [FRAC_PI_2, PI, 3.0 * FRAC_PI_2] {
            spread = spread.max((base.alpha_expr(Coords::new(psi, theta, zeta))? - v).abs());
        }
        if spread > THETA_TOL {
            return Err(Error::ThetaDependence { what: "alpha", spread });
        }
        Ok(v)
    }

    /// Residuals of the four reduced equations, in order:
    /// `α_Θ`, `α + Φ_ζ + g_Θζ`, `Φ_Ψ + g_ΨΘ`, `Φ_Θ + Ψ + g_ΘΘ`.
    ///
    /// `α_Θ` is evaluated as `∂_Θ(−Φ_ζ − g_Θζ) = ∂_ζ g_ΘΘ − ∂_Θ g_Θζ`.
    pub fn system_residuals(&self, c: Coords) -> Result<[f64; 4]> {
        let theta = self.lift(c.theta);
        let m = self.metric(c.psi, theta, c.zeta)?;
        let parts = self.phi_parts(c)?;
        let alpha = self.alpha_at_zero(c.psi, c.zeta)?;
        Ok([
            m.dg[THETA][THETA][ZETA] - m.dg[THETA][ZETA][THETA],
            alpha + parts.phi_zeta + m.g[(THETA, ZETA)],
            parts.phi_psi + m.g[(PSI, THETA)],
            parts.phi_theta + c.psi + m.g[(THETA, THETA)],
        ])
    }

    pub fn velocity(&self, c: Coords, repr: Representation) -> Result<Vector3<f64>> {
        let jet = self.chart.jet_eval(c)?;
        match repr {
            Representation::Tangent => Ok(-jet.tangent(THETA)),
            Representation::Covariant => {
                let grads = jet.gradients()?;
                let m = MetricAtPoint::from_jet(&jet);
                let mut u = Vector3::zeros();
                for i in 0..3 {
                    u -= m.g[(i, THETA)] * grads.row(i).transpose();
                }
                Ok(u)
            }
            Representation::Clebsch => {
                let grads = jet.gradients()?;
                let p = self.phi_parts(c)?;
                let alpha = self.alpha_at_zero(c.psi, c.zeta)?;
                let w = [p.phi_psi, p.phi_theta + c.psi, p.phi_zeta + alpha];
                let mut u = Vector3::zeros();
                for i in 0..3 {
                    u += w[i] * grads.row(i).transpose();
                }
                Ok(u)
            }
        }
    }
}

/// Velocity of the f-perturbed family directly in Cartesian form,
/// `(z/ρ)(x − εδx)∇x + (z/ρ)(y − εδy)∇y − (ρ − r0)∇z`, with ζ from the
/// ζ-equation on the branch through `zeta`.
pub fn velocity_closed_form(chart: &ChartFamily, p: &Vector3<f64>, zeta: f64) -> Vector3<f64> {
    let (dx, dy) = chart.delta_xy(zeta);
    let e = chart.eps();
    let (a, b) = (p.x - e * dx, p.y - e * dy);
    let rho = a.hypot(b);
    Vector3::new(p.z / rho * a, p.z / rho * b, -(rho - chart.r0()))
}
