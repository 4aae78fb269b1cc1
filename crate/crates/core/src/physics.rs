//! Thermodynamic bookkeeping: density from the Bernoulli relation
//! `h(ϱ) = −P − |u|²/2`, the continuity source `S = ∇·(ϱu)` and the
//! external potential `V = −P − |u|²/2 − h(ϱ)`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::charts::{ChartFamily, DomainSpec};
use crate::diffgeo::{Coords, THETA};
use crate::sampling::par_map;
use crate::stats::pairwise_sum;
use crate::verify::{fd_gradient, fd_jacobian, velocity_at};
use crate::{Error, Result};

/// Barotropic closure with enthalpy `h`, `∇P′ = ϱ∇h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law")]
pub enum BarotropicLaw {
    /// `P′ = κϱ^γ`, `h = κγ/(γ−1) ϱ^{γ−1}`.
    Polytropic { kappa: f64, gamma: f64 },
    /// `P′ = c²ϱ`, `h = c² ln ϱ`.
    Isothermal { c2: f64 },
}

impl BarotropicLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Polytropic { kappa, gamma } => kappa > 0.0 && gamma > 1.0 && kappa.is_finite() && gamma.is_finite(),
            Self::Isothermal { c2 } => c2 > 0.0 && c2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidChart(format!("invalid barotropic law {self:?}")))
        }
    }

    pub fn enthalpy(&self, rho: f64) -> f64 {
        match *self {
            Self::Polytropic { kappa, gamma } => kappa * gamma / (gamma - 1.0) * rho.powf(gamma - 1.0),
            Self::Isothermal { c2 } => c2 * rho.ln(),
        }
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        match *self {
            Self::Polytropic { kappa, gamma } => kappa * rho.powf(gamma),
            Self::Isothermal { c2 } => c2 * rho,
        }
    }

    /// `h⁻¹(v)`; the polytropic enthalpy only takes positive values.
    pub fn density_from_enthalpy(&self, v: f64) -> Result<f64> {
        match *self {
            Self::Polytropic { kappa, gamma } => {
                if !(v > 0.0) {
                    return Err(Error::Range { value: v });
                }
                Ok((v * (gamma - 1.0) / (kappa * gamma)).powf(1.0 / (gamma - 1.0)))
            }
            Self::Isothermal { c2 } => {
                let rho = (v / c2).exp();
                if rho > 0.0 && rho.is_finite() {
                    Ok(rho)
                } else {
                    Err(Error::Range { value: v })
                }
            }
        }
    }
}

/// `−Ψ − |u|²/2` at a Cartesian point.
pub fn bernoulli(chart: &ChartFamily, p: &Vector3<f64>) -> Result<f64> {
    let c = chart.inverse(p)?;
    let u = chart.jet_eval(c)?.tangent(THETA);
    Ok(-c.psi - 0.5 * u.norm_squared())
}

pub fn density(law: &BarotropicLaw, chart: &ChartFamily, p: &Vector3<f64>) -> Result<f64> {
    law.density_from_enthalpy(bernoulli(chart, p)?)
}

/// `∇·(ϱu)` by five-point differences of the composed Cartesian field.
pub fn source(law: &BarotropicLaw, chart: &ChartFamily, p: &Vector3<f64>, h: f64) -> Result<f64> {
    let flux = |q: &Vector3<f64>| -> Result<Vector3<f64>> { Ok(density(law, chart, q)? * velocity_at(chart, q)?) };
    Ok(fd_jacobian(&flux, p, h)?.trace())
}

/// Constant-density source `ϱ₀ ∇·u` from the closed-form Jacobian.
pub fn source_constant_density(rho0: f64, chart: &ChartFamily, c: Coords) -> f64 {
    -rho0 * chart.dlog_jacobian_dtheta(c)
}

/// `V = −Ψ − |u|²/2 − h(ϱ)` for a given density value.
pub fn potential(law: &BarotropicLaw, chart: &ChartFamily, p: &Vector3<f64>, rho: f64) -> Result<f64> {
    Ok(bernoulli(chart, p)? - law.enthalpy(rho))
}

/// `|−ϱ(u·∇)u − ∇P′ − ϱ∇V|` for a user density field, with V from
/// [`potential`]; vanishes for any positive ϱ when the flow balances.
pub fn momentum_residual<R>(law: &BarotropicLaw, chart: &ChartFamily, p: &Vector3<f64>, rho: R, h: f64) -> Result<f64>
where
    R: Fn(&Vector3<f64>) -> Result<f64>,
{
    let u = velocity_at(chart, p)?;
    let grad_u = fd_jacobian(&|q: &Vector3<f64>| velocity_at(chart, q), p, h)?;
    let advect = grad_u * u;
    let grad_p = fd_gradient(&|q: &Vector3<f64>| Ok(law.pressure(rho(q)?)), p, h)?;
    let grad_v = fd_gradient(&|q: &Vector3<f64>| potential(law, chart, q, rho(q)?), p, h)?;
    let r = rho(p)?;
    Ok((-r * advect - grad_p - r * grad_v).norm())
}

/// Midpoint-rule volume integral over the shell in chart coordinates,
/// `Σ f |J⁻¹| ΔΨΔΘΔζ`. Returns `(∫f, ∫|f|)`.
pub fn shell_integral<F>(chart: &ChartFamily, domain: &DomainSpec, n: [usize; 3], f: F) -> Result<(f64, f64)>
where
    F: Fn(Coords, &Vector3<f64>) -> Result<f64> + Sync,
{
    let [np, nt, nz] = n;
    let dp = (domain.psi_max - domain.psi_min) / np as f64;
    let (dt, dz) = (std::f64::consts::TAU / nt as f64, std::f64::consts::TAU / nz as f64);
    let mut cells = Vec::with_capacity(np * nt * nz);
    for i in 0..np {
        for j in 0..nt {
            for k in 0..nz {
                cells.push(Coords::new(
                    domain.psi_min + (i as f64 + 0.5) * dp,
                    (j as f64 + 0.5) * dt,
                    (k as f64 + 0.5) * dz,
                ));
            }
        }
    }
    let vals = par_map(&cells, |c| -> Result<f64> {
        let p = chart.forward(*c)?;
        Ok(f(*c, &p)? * chart.jacobian_closed_form(*c).abs() * dp * dt * dz)
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    let abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    Ok((pairwise_sum(&vals), pairwise_sum(&abs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::presets;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_inversions() {
        let iso = BarotropicLaw::Isothermal { c2: 1.0 };
        assert_eq!(iso.density_from_enthalpy(0.0).unwrap(), 1.0);
        let poly = BarotropicLaw::Polytropic { kappa: 1.0, gamma: 2.0 };
        assert_abs_diff_eq!(poly.density_from_enthalpy(0.6).unwrap(), 0.3, epsilon = 1e-15);
        assert!(matches!(poly.density_from_enthalpy(-0.1), Err(Error::Range { .. })));
    }

    #[test]
    fn enthalpy_round_trip() {
        for law in [BarotropicLaw::Isothermal { c2: 2.5 }, BarotropicLaw::Polytropic { kappa: 0.7, gamma: 1.4 }] {
            for k in 1..100 {
                let v = 0.05 * k as f64;
                let back = law.enthalpy(law.density_from_enthalpy(v).unwrap());
                assert_abs_diff_eq!(back, v, epsilon = 1e-14 * v.max(1.0));
            }
        }
    }

    #[test]
    fn constant_density_source_limit() {
        let chart = ChartFamily::axisymmetric(1.0, 1.0).unwrap();
        let c = Coords::new(0.93, 0.8, 0.4);
        let p = chart.forward(c).unwrap();
        assert_abs_diff_eq!(source_constant_density(2.0, &chart, c), 2.0 * p.z / p.x.hypot(p.y), epsilon = 1e-14);
    }

    #[test]
    fn potential_vanishes_with_bernoulli_density() {
        let chart = presets::sin2(0.3);
        let law = BarotropicLaw::Isothermal { c2: 1.0 };
        let p = chart.forward(Coords::new(0.9, 1.0, 2.0)).unwrap();
        let rho = density(&law, &chart, &p).unwrap();
        assert_abs_diff_eq!(potential(&law, &chart, &p, rho).unwrap(), 0.0, epsilon = 1e-14);
    }
}
