//! Residual checks for the structural identities of the constructed flows.
//!
//! Identity-class checks evaluate exact algebraic relations from jets and are
//! limited by roundoff. Discretization-class checks differentiate Cartesian
//! fields (obtained through the inverse map) with five-point stencils.

use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::Serialize;
use std::f64::consts::TAU;

use crate::charts::{ChartFamily, DomainSpec};
use crate::clebsch::{velocity_closed_form, Clebsch, Representation};
use crate::diffgeo::{christoffel, Coords, JetSource, MetricSource, PSI, THETA, ZETA};
use crate::sampling::{level_set_in_domain, par_map};
use crate::stats::ResidualReport;
use crate::{Error, Result};

// ---------------------------------------------------------------- identities

/// Residuals of the two map equations
/// `x_Ψ·x_ΘΘ − 1 − x_Θ·x_ΨΘ` and `x_Θ·x_Θζ − x_ζ·x_ΘΘ`.
pub fn map_pde_residuals<S: JetSource + ?Sized>(src: &S, c: Coords) -> Result<[f64; 2]> {
    let j = src.jet(c)?;
    let (xp, xt, xz) = (j.tangent(PSI), j.tangent(THETA), j.tangent(ZETA));
    let xtt = j.d2[THETA][THETA];
    Ok([
        xp.dot(&xtt) - 1.0 - xt.dot(&j.d2[PSI][THETA]),
        xt.dot(&j.d2[THETA][ZETA]) - xz.dot(&xtt),
    ])
}

pub fn check_map_pdes<S: JetSource>(src: &S, grid: &[Coords], tol: f64) -> [ResidualReport; 2] {
    let r = par_map(grid, |c| map_pde_residuals(src, *c));
    [0, 1].map(|k| {
        let v: Vec<Result<f64>> = r.iter().map(|x| x.as_ref().map(|a| a[k]).map_err(Clone::clone)).collect();
        ResidualReport::from_results(format!("map_pde_{}", k + 1), &v, tol)
    })
}

/// `Γ_ΨΘΘ − 1 − Γ_ΘΨΘ`, `Γ_ΘζΘ − Γ_ζΘΘ` and the trace `Γ^Ψ_ΨΘ + Γ^Θ_ΘΘ + Γ^ζ_ζΘ`.
pub fn christoffel_residuals<M: MetricSource + ?Sized>(src: &M, c: Coords) -> Result<[f64; 3]> {
    let m = src.metric_at(c)?;
    let (g1, g2) = christoffel(&m)?;
    Ok([
        g1.get(PSI, THETA, THETA) - 1.0 - g1.get(THETA, PSI, THETA),
        g1.get(THETA, ZETA, THETA) - g1.get(ZETA, THETA, THETA),
        g2.get(PSI, PSI, THETA) + g2.get(THETA, THETA, THETA) + g2.get(ZETA, ZETA, THETA),
    ])
}

/// The first two are asserted; the trace (incompressibility) is reported only.
pub fn check_christoffel_form<M: MetricSource>(src: &M, grid: &[Coords], tol: f64) -> [ResidualReport; 3] {
    let r = par_map(grid, |c| christoffel_residuals(src, *c));
    let col = |k: usize| -> Vec<Result<f64>> { r.iter().map(|x| x.as_ref().map(|a| a[k]).map_err(Clone::clone)).collect() };
    [
        ResidualReport::from_results("christoffel_1", &col(0), tol),
        ResidualReport::from_results("christoffel_2", &col(1), tol),
        ResidualReport::from_results("christoffel_trace", &col(2), tol).informational(),
    ]
}

/// Relative deviation of `Γ_kij` from `x_ij · x_k`, maximised over indices.
pub fn embedding_identity_residual(chart: &ChartFamily, c: Coords) -> Result<f64> {
    let jet = chart.jet_eval(c)?;
    let m = crate::MetricAtPoint::from_jet(&jet);
    let g1 = crate::diffgeo::ChristoffelFirst::from_metric(&m);
    let mut worst = 0.0f64;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let direct = jet.d2[i][j].dot(&jet.tangent(k));
                let d = (g1.get(k, i, j) - direct).abs() / direct.abs().max(1.0);
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

/// The two metric conditions `∂_Θ g_ΨΘ − 1 − ∂_Ψ g_ΘΘ`, `∂_ζ g_ΘΘ − ∂_Θ g_Θζ`
/// and `∂_Θ |det g|` (reported, not asserted).
pub fn generalized_metric_residuals<M: MetricSource + ?Sized>(src: &M, c: Coords) -> Result<[f64; 3]> {
    let m = src.metric_at(c)?;
    let dg = &m.dg;
    let e1 = dg[PSI][THETA][THETA] - 1.0 - dg[THETA][THETA][PSI];
    let e2 = dg[THETA][THETA][ZETA] - dg[THETA][ZETA][THETA];
    let det = m.g.determinant();
    let e3 = det.signum() * m.ddet(THETA)?;
    Ok([e1, e2, e3])
}

pub fn check_generalized_metric<M: MetricSource>(src: &M, grid: &[Coords], tol: f64) -> [ResidualReport; 3] {
    let r = par_map(grid, |c| generalized_metric_residuals(src, *c));
    let col = |k: usize| -> Vec<Result<f64>> { r.iter().map(|x| x.as_ref().map(|a| a[k]).map_err(Clone::clone)).collect() };
    [
        ResidualReport::from_results("metric_condition_1", &col(0), tol),
        ResidualReport::from_results("metric_condition_2", &col(1), tol),
        ResidualReport::from_results("metric_det_theta", &col(2), tol).informational(),
    ]
}

/// Relative error of the closed-form Jacobian against `det(d1)`.
pub fn check_jacobian(chart: &ChartFamily, grid: &[Coords], tol: f64) -> ResidualReport {
    let r = par_map(grid, |c| {
        let det = chart.jet_eval(*c)?.det();
        let closed = chart.jacobian_closed_form(*c);
        Ok::<f64, Error>((det - closed).abs() / closed.abs())
    });
    ResidualReport::from_results("jacobian_closed_form", &r, tol)
}

/// Pairwise agreement of the three velocity representations and the four
/// reduced Clebsch equations.
pub fn check_clebsch(chart: &ChartFamily, domain: &DomainSpec, grid: &[Coords], tol: f64) -> Vec<ResidualReport> {
    let cl = Clebsch::new(chart, domain);
    let r = par_map(grid, |c| -> Result<[f64; 7]> {
        let t = cl.velocity(*c, Representation::Tangent)?;
        let v = cl.velocity(*c, Representation::Covariant)?;
        let k = cl.velocity(*c, Representation::Clebsch)?;
        let s = cl.system_residuals(*c)?;
        Ok([(t - v).norm(), (t - k).norm(), (v - k).norm(), s[0], s[1], s[2], s[3]])
    });
    let names = [
        "velocity_tangent_vs_covariant",
        "velocity_tangent_vs_clebsch",
        "velocity_covariant_vs_clebsch",
        "clebsch_alpha_theta",
        "clebsch_alpha_eq",
        "clebsch_phi_psi_eq",
        "clebsch_phi_theta_eq",
    ];
    names
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let v: Vec<Result<f64>> = r.iter().map(|x| x.as_ref().map(|a| a[k]).map_err(Clone::clone)).collect();
            ResidualReport::from_results(*n, &v, tol)
        })
        .collect()
}

// ---------------------------------------------------------- finite differences

const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// Five-point central gradient of a scalar field.
pub fn fd_gradient(f: &(impl Fn(&Vector3<f64>) -> Result<f64> + ?Sized), p: &Vector3<f64>, h: f64) -> Result<Vector3<f64>> {
    let mut g = Vector3::zeros();
    for k in 0..3 {
        let mut acc = 0.0;
        for (off, w) in STENCIL {
            let mut q = *p;
            q[k] += off * h;
            acc += w * f(&q)?;
        }
        g[k] = acc / (12.0 * h);
    }
    Ok(g)
}

/// Five-point central Jacobian of a vector field; `J[(a, k)] = ∂_k u_a`.
pub fn fd_jacobian(
    u: &(impl Fn(&Vector3<f64>) -> Result<Vector3<f64>> + ?Sized),
    p: &Vector3<f64>,
    h: f64,
) -> Result<Matrix3<f64>> {
    let mut jac = Matrix3::zeros();
    for k in 0..3 {
        let mut acc = Vector3::zeros();
        for (off, w) in STENCIL {
            let mut q = *p;
            q[k] += off * h;
            acc += w * u(&q)?;
        }
        jac.set_column(k, &(acc / (12.0 * h)));
    }
    Ok(jac)
}

pub fn curl_of(jac: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(jac[(2, 1)] - jac[(1, 2)], jac[(0, 2)] - jac[(2, 0)], jac[(1, 0)] - jac[(0, 1)])
}

/// `u(x) = −∂x/∂Θ` at the chart coordinates of a Cartesian point.
pub fn velocity_at(chart: &ChartFamily, p: &Vector3<f64>) -> Result<Vector3<f64>> {
    let c = chart.inverse(p)?;
    Ok(-chart.jet_eval(c)?.tangent(THETA))
}

/// `u` on the chart sheet through `seed`, for stencils around a known point.
pub fn velocity_near(chart: &ChartFamily, p: &Vector3<f64>, seed: Coords) -> Result<Vector3<f64>> {
    let c = chart.inverse_near(p, seed)?;
    Ok(-chart.jet_eval(c)?.tangent(THETA))
}

/// Rough diameter of the image of the shell, from a coarse angle grid on its
/// outer surface.
pub fn domain_diameter(chart: &ChartFamily, domain: &DomainSpec) -> f64 {
    let mut rmax = 0.0f64;
    let mut zmax = 0.0f64;
    for i in 0..32 {
        for j in 0..32 {
            let [x, y, z] = chart.position(domain.psi_min, TAU * i as f64 / 32.0, TAU * j as f64 / 32.0);
            rmax = rmax.max(x.hypot(y));
            zmax = zmax.max(z.abs());
        }
    }
    2.0 * rmax.max(zmax)
}

/// The standard step `1e-4 ×` domain diameter.
pub fn fd_step(chart: &ChartFamily, domain: &DomainSpec) -> f64 {
    1e-4 * domain_diameter(chart, domain)
}

/// `|(∇×u)×u − ∇Ψ|` for arbitrary Cartesian fields.
pub fn force_balance_residual(
    u: &(impl Fn(&Vector3<f64>) -> Result<Vector3<f64>> + ?Sized),
    psi: &(impl Fn(&Vector3<f64>) -> Result<f64> + ?Sized),
    p: &Vector3<f64>,
    h: f64,
) -> Result<f64> {
    let curl = curl_of(&fd_jacobian(u, p, h)?);
    let gp = fd_gradient(psi, p, h)?;
    Ok((curl.cross(&u(p)?) - gp).norm())
}

pub fn force_balance_fields<U, P>(name: &str, u: U, psi: P, points: &[Vector3<f64>], h: f64, tol: f64) -> ResidualReport
where
    U: Fn(&Vector3<f64>) -> Result<Vector3<f64>> + Sync,
    P: Fn(&Vector3<f64>) -> Result<f64> + Sync,
{
    let r = par_map(points, |p| force_balance_residual(&u, &psi, p, h));
    ResidualReport::from_results(name, &r, tol)
}

pub fn force_balance(chart: &ChartFamily, points: &[Vector3<f64>], h: f64, tol: f64) -> ResidualReport {
    force_balance_fields(
        "force_balance",
        |p: &Vector3<f64>| velocity_at(chart, p),
        |p: &Vector3<f64>| chart.psi_cartesian(p),
        points,
        h,
        tol,
    )
}

/// Triple-product form of `∂_Θ(x_Ψ·x_Θ×x_ζ)` from jets.
pub fn triple_product_dtheta(chart: &ChartFamily, c: Coords) -> Result<(f64, f64)> {
    let j = chart.jet_eval(c)?;
    let (xp, xt, xz) = (j.tangent(PSI), j.tangent(THETA), j.tangent(ZETA));
    let t = j.d2[THETA][PSI].dot(&xt.cross(&xz))
        + xp.dot(&j.d2[THETA][THETA].cross(&xz))
        + xp.dot(&xt.cross(&j.d2[THETA][ZETA]));
    Ok((t, j.det()))
}

/// FD divergence against `−∂_Θ ln J⁻¹` from the closed form, the jet
/// triple-product form against the same, and the divergence magnitude.
/// The FD stencil follows the chart sheet of each sample point.
pub fn divergence_check(chart: &ChartFamily, grid: &[Coords], h: f64, fd_tol: f64, identity_tol: f64) -> [ResidualReport; 3] {
    let r = par_map(grid, |c| -> Result<[f64; 3]> {
        let analytic = -chart.dlog_jacobian_dtheta(*c);
        let (t, det) = triple_product_dtheta(chart, *c)?;
        let p = chart.forward(*c)?;
        let fd = fd_jacobian(&|q: &Vector3<f64>| velocity_near(chart, q, *c), &p, h)?.trace();
        Ok([fd - analytic, -t / det - analytic, analytic])
    });
    let col = |k: usize| -> Vec<Result<f64>> { r.iter().map(|x| x.as_ref().map(|a| a[k]).map_err(Clone::clone)).collect() };
    [
        ResidualReport::from_results("divergence_fd", &col(0), fd_tol),
        ResidualReport::from_results("divergence_triple_product", &col(1), identity_tol),
        ResidualReport::from_results("divergence_magnitude", &col(2), identity_tol).informational(),
    ]
}

// ------------------------------------------------------------------ symmetry

/// Euclidean Killing field `ξ(x) = a + b × x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsometryGenerator {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl IsometryGenerator {
    pub fn translation(a: [f64; 3]) -> Self {
        Self { a, b: [0.0; 3] }
    }
    pub fn rotation(b: [f64; 3]) -> Self {
        Self { a: [0.0; 3], b }
    }
    pub fn at(&self, x: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from(self.a) + Vector3::from(self.b).cross(x)
    }
    fn normalized(self) -> Self {
        let n = (Vector3::from(self.a).norm_squared() + Vector3::from(self.b).norm_squared()).sqrt();
        Self { a: self.a.map(|v| v / n), b: self.b.map(|v| v / n) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryScan {
    /// Smallest singular value of the column-normalised matrix.
    pub sigma_min: f64,
    /// Smallest singular value of the raw matrix divided by `√n`; unlike the
    /// normalised value it scales with the size of the perturbation.
    pub rms_sigma_min: f64,
    pub singular_values: Vec<f64>,
    pub generator: IsometryGenerator,
    pub samples: usize,
}

/// `ξ·∇Ψ` at chart coordinates `c`.
pub fn lie_derivative(chart: &ChartFamily, c: Coords, gen: &IsometryGenerator) -> Result<f64> {
    let x = chart.forward(c)?;
    Ok(gen.at(&x).dot(&chart.grad_psi(c)?))
}

fn basis(k: usize) -> IsometryGenerator {
    let mut e = [0.0; 3];
    e[k % 3] = 1.0;
    if k < 3 {
        IsometryGenerator::translation(e)
    } else {
        IsometryGenerator::rotation(e)
    }
}

/// Smallest singular value of the column-normalised `n × 6` matrix of
/// `ξ_k·∇Ψ` over the six basis generators, sampled on the level set
/// `Ψ = psi`, with the minimising unit generator.
pub fn symmetry_scan(chart: &ChartFamily, psi: f64, n: usize, seed: u64) -> Result<SymmetryScan> {
    if n < 6 {
        return Err(Error::DegenerateSampling(format!("need at least 6 samples, got {n}")));
    }
    let coords = level_set_in_domain(chart, psi, n, seed)?;
    let rows = par_map(&coords, |c| -> Result<(Vector3<f64>, [f64; 6])> {
        let x = chart.forward(*c)?;
        let g = chart.grad_psi(*c)?;
        Ok((x, std::array::from_fn(|k| basis(k).at(&x).dot(&g))))
    });
    let rows: Vec<(Vector3<f64>, [f64; 6])> = rows.into_iter().collect::<Result<_>>()?;

    // the sampled positions must span space
    let mean = rows.iter().fold(Vector3::zeros(), |acc, (x, _)| acc + x) / n as f64;
    let pos = nalgebra::DMatrix::from_fn(n, 3, |i, k| rows[i].0[k] - mean[k]);
    let sv = pos.singular_values();
    if sv.min() <= 1e-9 * sv.max() {
        return Err(Error::DegenerateSampling("sample positions span fewer than 3 dimensions".into()));
    }

    let mut mat = nalgebra::DMatrix::from_fn(n, 6, |i, k| rows[i].1[k]);
    let rms_sigma_min = mat.singular_values().min() / (n as f64).sqrt();
    let norms: Vec<f64> = (0..6).map(|k| mat.column(k).norm()).collect();
    let nmax = norms.iter().copied().fold(0.0, f64::max);
    // an identically vanishing column is an exact symmetry
    if let Some(k) = (0..6).find(|&k| norms[k] <= 1e-12 * nmax) {
        let mut svals = vec![0.0];
        svals.extend(std::iter::repeat_n(f64::NAN, 5));
        return Ok(SymmetryScan {
            sigma_min: norms[k] / nmax.max(f64::MIN_POSITIVE),
            rms_sigma_min,
            singular_values: svals,
            generator: basis(k),
            samples: n,
        });
    }
    for k in 0..6 {
        let nk = norms[k];
        mat.column_mut(k).iter_mut().for_each(|v| *v /= nk);
    }
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let (imin, &sigma_min) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("six singular values");
    let w: SMatrix<f64, 1, 6> = SMatrix::from_fn(|_, k| v_t[(imin, k)] / norms[k]);
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(f64::total_cmp);
    let gen = IsometryGenerator { a: [w[0], w[1], w[2]], b: [w[3], w[4], w[5]] }.normalized();
    // fix the overall sign: largest component positive
    let flat = [gen.a, gen.b].concat();
    let big = flat.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
    let gen = if big < 0.0 {
        IsometryGenerator { a: gen.a.map(|v| -v), b: gen.b.map(|v| -v) }
    } else {
        gen
    };
    Ok(SymmetryScan { sigma_min, rms_sigma_min, singular_values, generator: gen, samples: n })
}

// ------------------------------------------------------------ first order

/// First-order approximations `(u₁, Ψ₁)` at a Cartesian point for the
/// f-perturbed family: with `φ` the cylindrical angle, `δx0 = δx(φ)`,
/// `δy0 = δy(φ)` and `δr0 = −(cosφ δx0 + sinφ δy0)`,
///
/// ```text
/// u₁ = (z/r)[x − ε(x δr0/r + δx0)]∇x + (z/r)[y − ε(y δr0/r + δy0)]∇y − (r − r0 + ε δr0)∇z
/// Ψ₁ = Ψ0 − (r − r0)² − z² − 2ε(r − r0)δr0
/// ```
pub fn first_order(chart: &ChartFamily, eps: f64, p: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let r = p.x.hypot(p.y);
    let phi = p.y.atan2(p.x);
    let (dx0, dy0) = chart.delta_xy(phi);
    let (sp, cp) = phi.sin_cos();
    let dr0 = -(cp * dx0 + sp * dy0);
    let u = Vector3::new(
        p.z / r * (p.x - eps * (p.x * dr0 / r + dx0)),
        p.z / r * (p.y - eps * (p.y * dr0 / r + dy0)),
        -((r - chart.r0()) + eps * dr0),
    );
    let psi1 = (chart.psi0() - (r - chart.r0()).powi(2) - p.z * p.z) - 2.0 * eps * (r - chart.r0()) * dr0;
    (u, psi1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorRow {
    pub eps: f64,
    pub u_error: f64,
    pub psi_error: f64,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorTable {
    pub rows: Vec<TaylorRow>,
    /// Least-squares slope of `ln e_u` against `ln ε` over rows with `ε > 0`.
    pub order: f64,
}

/// Fixed comparison points: the axisymmetric level set `Ψ = psi` on an
/// `ntheta × nzeta` angle grid.
pub fn taylor_grid(psi0: f64, r0: f64, psi: f64, ntheta: usize, nzeta: usize) -> Vec<Vector3<f64>> {
    let s = (psi0 - psi).sqrt();
    let mut out = Vec::with_capacity(ntheta * nzeta);
    for i in 0..ntheta {
        let th = TAU * (i as f64 + 0.5) / ntheta as f64;
        for j in 0..nzeta {
            let ze = TAU * (j as f64 + 0.5) / nzeta as f64;
            let rr = r0 + s * th.cos();
            out.push(Vector3::new(rr * ze.cos(), rr * ze.sin(), s * th.sin()));
        }
    }
    out
}

/// Sup-norm errors of the first-order formulas against the exact flow of the
/// f-perturbed chart with the base chart's profile, for each ε.
pub fn taylor_compare(base: &ChartFamily, eps_list: &[f64], points: &[Vector3<f64>]) -> Result<TaylorTable> {
    let fspec = base.fspec().cloned().unwrap_or(crate::FSpec::Sin2);
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let chart = ChartFamily::f_perturbed(base.psi0(), base.r0(), eps, fspec.clone())?;
        let errs = par_map(points, |p| -> Result<(f64, f64)> {
            let c = chart.inverse(p)?;
            let u = velocity_closed_form(&chart, p, c.zeta);
            let (dx, dy) = chart.delta_xy(c.zeta);
            let rho = (p.x - eps * dx).hypot(p.y - eps * dy);
            let psi = chart.psi0() - (rho - chart.r0()).powi(2) - p.z * p.z;
            let (u1, psi1) = first_order(&chart, eps, p);
            Ok(((u - u1).norm(), (psi - psi1).abs()))
        });
        let ok: Vec<(f64, f64)> = errs.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        if ok.is_empty() {
            return Err(Error::DegenerateSampling(format!("no comparison point is inside the chart for ε = {eps}")));
        }
        rows.push(TaylorRow {
            eps,
            u_error: ok.iter().map(|e| e.0).fold(0.0, f64::max),
            psi_error: ok.iter().map(|e| e.1).fold(0.0, f64::max),
            excluded: errs.len() - ok.len(),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.eps > 0.0 && r.u_error > 0.0)
        .map(|r| (r.eps.ln(), r.u_error.ln()))
        .collect();
    let order = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(TaylorTable { rows, order })
}

// ------------------------------------------------------------------ boundary

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub tangency: ResidualReport,
    /// `max |P − P_b|` over the level-set samples (P = Ψ by construction).
    pub pressure_offset: f64,
    /// `min |∇Ψ|` over the shell grid.
    pub min_grad_psi: f64,
}

/// Normalised tangency `|u·∇Ψ|/(|u||∇Ψ|)` on `Ψ = psi_b`, and the regularity
/// of the Ψ-foliation over the shell.
pub fn boundary_report(
    chart: &ChartFamily,
    psi_b: f64,
    ntheta: usize,
    nzeta: usize,
    shell: &DomainSpec,
    tol: f64,
) -> Result<BoundaryReport> {
    let level = crate::sampling::angle_grid(psi_b, ntheta, nzeta);
    let r = par_map(&level, |c| -> Result<f64> {
        if !chart.in_domain_coords(*c) {
            return Err(Error::Domain("outside chart parameter set".into()));
        }
        let jet = chart.jet_eval(*c)?;
        let u = -jet.tangent(THETA);
        let g = jet.gradients()?.row(0).transpose();
        Ok(u.dot(&g).abs() / (u.norm() * g.norm()))
    });
    let tangency = ResidualReport::from_results("boundary_tangency", &r, tol);
    let pressure_offset = level.iter().map(|c| (c.psi - psi_b).abs()).fold(0.0, f64::max);

    let nps = 6;
    let mut shell_pts = Vec::new();
    for k in 0..nps {
        let psi = shell.psi_min + (shell.psi_max - shell.psi_min) * k as f64 / (nps - 1) as f64;
        shell_pts.extend(crate::sampling::angle_grid(psi, ntheta, nzeta));
    }
    let grads = par_map(&shell_pts, |c| -> Option<f64> {
        if !chart.in_domain_coords(*c) {
            return None;
        }
        chart.grad_psi(*c).ok().map(|g| g.norm())
    });
    let min_grad_psi = grads.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    if !(min_grad_psi > 1e-12) {
        return Err(Error::CriticalPoint { min_grad: min_grad_psi });
    }
    Ok(BoundaryReport { tangency, pressure_offset, min_grad_psi })
}

// ------------------------------------------------------------------ suite

/// Jacobian floor, relative to the shell maximum, for finite-difference samples.
pub const FD_INTERIOR_FRACTION: f64 = 0.15;

/// Sample sizes and tolerances for [`run_suite`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub identity_samples: usize,
    pub clebsch_samples: usize,
    pub fd_samples: usize,
    pub symmetry_samples: usize,
    pub identity_tol: f64,
    pub clebsch_tol: f64,
    pub fd_tol: f64,
    pub seed: u64,
    /// Level set used for the boundary and symmetry checks.
    pub psi_level: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            identity_samples: 10_000,
            clebsch_samples: 200,
            fd_samples: 1_000,
            symmetry_samples: 200,
            identity_tol: 1e-11,
            clebsch_tol: 1e-9,
            fd_tol: 1e-7,
            seed: 1,
            psi_level: 0.95,
        }
    }
}

/// Runs every check on one chart and shell. Informational records are
/// included with `asserted = false`.
pub fn run_suite(chart: &ChartFamily, domain: &DomainSpec, cfg: &SuiteConfig) -> Result<Vec<ResidualReport>> {
    use crate::sampling::{shell_in_domain, shell_uniform};
    domain.validate_for(chart)?;
    let mut out = Vec::new();
    let full = shell_uniform(domain, cfg.identity_samples, cfg.seed);
    let inside = shell_in_domain(chart, domain, cfg.identity_samples, cfg.seed ^ 0x5a5a, 1e-6)?;

    out.extend(check_map_pdes(chart, &full, cfg.identity_tol));
    out.extend(check_christoffel_form(chart, &inside, cfg.identity_tol));
    let emb = par_map(&full, |c| embedding_identity_residual(chart, *c));
    out.push(ResidualReport::from_results("embedding_identity", &emb, 1e-10));
    out.extend(check_generalized_metric(chart, &inside, cfg.identity_tol));
    out.push(check_jacobian(chart, &inside, 1e-12));

    let few = &inside[..cfg.clebsch_samples.min(inside.len())];
    out.extend(check_clebsch(chart, domain, few, cfg.clebsch_tol));

    let h = fd_step(chart, domain);
    let interior = crate::sampling::shell_interior(chart, domain, cfg.fd_samples, cfg.seed ^ 0xa5a5, FD_INTERIOR_FRACTION)?;
    let fd_coords = &interior[..];
    let pts: Vec<Vector3<f64>> = fd_coords.iter().map(|c| chart.forward(*c)).collect::<Result<_>>()?;
    out.push(force_balance(chart, &pts, h, cfg.fd_tol));
    out.extend(divergence_check(chart, fd_coords, h, cfg.fd_tol, cfg.identity_tol));

    let b = boundary_report(chart, cfg.psi_level, 64, 64, domain, 1e-10)?;
    out.push(b.tangency);
    let mut g = ResidualReport::from_values("min_grad_psi", &[b.min_grad_psi], f64::INFINITY);
    g.asserted = false;
    out.push(g);

    let scan = symmetry_scan(chart, cfg.psi_level, cfg.symmetry_samples, cfg.seed)?;
    out.push(ResidualReport::from_values("symmetry_sigma_min", &[scan.sigma_min], f64::INFINITY).informational());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::presets;
    use crate::diffgeo::{euclidean_metric, AbstractMetric, JetMap, MetricAtPoint};
    use crate::jet::Jet;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    struct Identity;
    impl MetricSource for Identity {
        fn metric_at(&self, _c: Coords) -> Result<MetricAtPoint> {
            Ok(euclidean_metric())
        }
    }

    #[test]
    fn identity_metric_control() {
        let r = christoffel_residuals(&Identity, Coords::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(r, [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn axisymmetric_christoffel_value() {
        let chart = ChartFamily::axisymmetric(1.0, 1.0).unwrap();
        let m = chart.metric_at(Coords::new(0.95, 0.0, 0.0)).unwrap();
        let (g1, _) = christoffel(&m).unwrap();
        assert_abs_diff_eq!(g1.get(PSI, THETA, THETA) - g1.get(THETA, PSI, THETA), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn broken_map_fails_map_pdes() {
        // δx' = f cosζ instead of f sinζ
        let broken = JetMap(|[p, t, z]: [Jet; 3]| {
            let s = (Jet::constant(1.0) - p).sqrt();
            let rr = s * t.cos() + 1.0;
            let dx = z.sin() * (-0.5) + (z * 3.0).sin() * (1.0 / 6.0);
            [rr * z.cos() + dx * 0.5, rr * z.sin(), s * t.sin()]
        });
        let grid: Vec<Coords> = (0..50).map(|k| Coords::new(0.9, 0.3 * k as f64, 0.17 * k as f64)).collect();
        let [a, b] = check_map_pdes(&broken, &grid, 1e-11);
        assert!(a.max_abs.max(b.max_abs) > 1e-3);
    }

    #[test]
    fn abstract_metric_first_condition() {
        let m = AbstractMetric::new(|[_p, t, _z]: [Jet; 3]| {
            let one = Jet::constant(1.0);
            let zero = Jet::constant(0.0);
            [one, t, zero, one, zero, one]
        });
        let r = generalized_metric_residuals(&m, Coords::new(0.3, 0.2, 0.1)).unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn translation_probe() {
        let chart = presets::sin2(0.3);
        let c = Coords::new(0.95, 0.0, FRAC_PI_2);
        let v = lie_derivative(&chart, c, &IsometryGenerator::translation([0.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(v, -2.0 * 0.05f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn axisymmetric_scan_finds_rotation() {
        let chart = ChartFamily::axisymmetric(1.0, 1.0).unwrap();
        let s = symmetry_scan(&chart, 0.95, 60, 3).unwrap();
        assert!(s.sigma_min < 1e-10);
        assert_abs_diff_eq!(s.generator.b[2].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn first_order_is_exact_at_zero() {
        let chart = presets::sin2(0.0);
        let t = taylor_compare(&chart, &[0.0], &taylor_grid(1.0, 1.0, 0.95, 8, 8)).unwrap();
        assert_eq!(t.rows[0].u_error, 0.0);
        assert_eq!(t.rows[0].psi_error, 0.0);
    }

    #[test]
    fn delta_r0_matches_closed_form() {
        let chart = presets::sin2(0.3);
        for k in 0..20 {
            let phi = 0.3 * k as f64;
            let (dx, dy) = chart.delta_xy(phi);
            let dr0 = -(phi.cos() * dx + phi.sin() * dy);
            assert_abs_diff_eq!(dr0, (1.0 + phi.cos().powi(2)) / 3.0, epsilon = 1e-15);
        }
    }
}
