//! Configuration and subcommands of the `toroflow` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::Vector3;
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use toroflow::charts::ChartFamily;
use toroflow::diffgeo::Coords;
use toroflow::sampling::{angle_grid, par_map};
use toroflow::stats::ResidualReport;
use toroflow::verify::{self, SuiteConfig};
use toroflow::{DomainSpec, DzGPair, FSpec, TrigPoly};

pub const WORKERS_ENV: &str = "TOROFLOW_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] toroflow::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// Config, domain and I/O problems all map to exit code 2.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Axisymmetric,
    FPerturbed,
    GeneralCc1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Sin2,
    Sin2of3,
    Mix,
    Fourier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoloidalChoice {
    Example,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartConfig {
    pub family: Family,
    pub psi0: f64,
    pub r0: f64,
    /// Perturbation amplitude of the f-perturbed family.
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub f: Profile,
    pub f_cos: Vec<f64>,
    pub f_sin: Vec<f64>,
    pub dz_g: PoloidalChoice,
    pub dz_cos: Vec<f64>,
    pub dz_sin: Vec<f64>,
    pub g_cos: Vec<f64>,
    pub g_sin: Vec<f64>,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self {
            family: Family::FPerturbed,
            psi0: 1.0,
            r0: 1.0,
            eps: 0.3,
            eps1: 0.0,
            eps2: 0.0,
            eps3: 0.0,
            f: Profile::Sin2,
            f_cos: Vec::new(),
            f_sin: Vec::new(),
            dz_g: PoloidalChoice::Example,
            dz_cos: Vec::new(),
            dz_sin: Vec::new(),
            g_cos: Vec::new(),
            g_sin: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub npsi: usize,
    pub ntheta: usize,
    pub nzeta: usize,
    pub psi_min: f64,
    pub psi_max: f64,
    /// Level set exported by `surface` and `field` and probed by `verify`.
    pub psi_level: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { npsi: 8, ntheta: 64, nzeta: 128, psi_min: 0.9, psi_max: 0.97, psi_level: 0.95 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity_tol: f64,
    pub fd_tol: f64,
    pub clebsch_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity_tol: 1e-11, fd_tol: 1e-7, clebsch_tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    pub identity: usize,
    pub clebsch: usize,
    pub fd: usize,
    pub symmetry: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self { identity: 10_000, clebsch: 200, fd: 1_000, symmetry: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub eps_list: Vec<f64>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self { eps_list: vec![0.0, 0.1, 0.3, 0.6] }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub surface: PathBuf,
    pub field: PathBuf,
    pub report: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { surface: "surface.csv".into(), field: "field.csv".into(), report: "report.jsonl".into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub chart: ChartConfig,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub samples: Samples,
    pub field: FieldConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => {
                let cfg = RunConfig::default();
                cfg.validate()?;
                Ok(cfg)
            }
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| CliError::Io { path: p.into(), source })?;
                Self::from_toml(&text)
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let g = &self.grid;
        if g.npsi < 2 || g.ntheta < 2 || g.nzeta < 2 {
            return Err(CliError::Config(format!(
                "grid counts must be at least 2 (npsi = {}, ntheta = {}, nzeta = {})",
                g.npsi, g.ntheta, g.nzeta
            )));
        }
        if !(g.psi_min < g.psi_max && g.psi_max < self.chart.psi0) {
            return Err(CliError::Config(format!(
                "Ψ range [{}, {}] must be non-empty and below Ψ0 = {}",
                g.psi_min, g.psi_max, self.chart.psi0
            )));
        }
        if !(g.psi_level < self.chart.psi0) {
            return Err(CliError::Config(format!("psi_level = {} must be below Ψ0 = {}", g.psi_level, self.chart.psi0)));
        }
        let t = &self.tolerances;
        for (name, v) in [("identity_tol", t.identity_tol), ("fd_tol", t.fd_tol), ("clebsch_tol", t.clebsch_tol)] {
            if !(v > 0.0) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.samples.symmetry < 6 {
            return Err(CliError::Config("samples.symmetry must be at least 6".into()));
        }
        Ok(())
    }

    pub fn fspec(&self) -> FSpec {
        match self.chart.f {
            Profile::Sin2 => FSpec::Sin2,
            Profile::Sin2of3 => FSpec::Sin2Of3,
            Profile::Mix => FSpec::Mix,
            Profile::Fourier => FSpec::FourierCustom { cos: self.chart.f_cos.clone(), sin: self.chart.f_sin.clone() },
        }
    }

    pub fn chart(&self) -> CliResult<ChartFamily> {
        let c = &self.chart;
        Ok(match c.family {
            Family::Axisymmetric => ChartFamily::axisymmetric(c.psi0, c.r0)?,
            Family::FPerturbed => ChartFamily::f_perturbed(c.psi0, c.r0, c.eps, self.fspec())?,
            Family::GeneralCc1 => {
                let pair = match c.dz_g {
                    PoloidalChoice::Example => DzGPair::example(),
                    PoloidalChoice::Custom => DzGPair {
                        dz: TrigPoly::new(c.dz_cos.clone(), c.dz_sin.clone()),
                        g: TrigPoly::new(c.g_cos.clone(), c.g_sin.clone()),
                    },
                };
                ChartFamily::general_cc1(c.psi0, c.r0, [c.eps1, c.eps2, c.eps3], self.fspec(), pair)?
            }
        })
    }

    pub fn domain(&self) -> CliResult<DomainSpec> {
        Ok(DomainSpec::new(self.grid.psi_min, self.grid.psi_max)?)
    }
}

/// Worker count from the environment; `None` means all cores.
pub fn workers_from_env() -> CliResult<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{s}'"))),
        },
    }
}

/// Fixed 17-significant-digit formatting.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Summary of an exported surface mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSummary {
    pub rows: usize,
    /// Largest `|Ψ − Ψ_c|` of the vertices, evaluated on each row's own
    /// ζ-branch of the defining equation.
    pub max_level_error: f64,
}

/// Structured mesh `theta,zeta,x,y,z` of `x(Ψ_c, Θ_i, ζ_j)` for
/// `i = 0..=nθ`, `j = 0..=nζ`, the last row/column duplicating the first.
pub fn surface_csv(chart: &ChartFamily, psi: f64, ntheta: usize, nzeta: usize) -> CliResult<(String, SurfaceSummary)> {
    let grid = angle_grid(psi, ntheta, nzeta);
    let pos = par_map(&grid, |c| chart.forward(*c));
    let pos: Vec<_> = pos.into_iter().collect::<Result<_, _>>()?;
    let level = par_map(&grid, |c| -> toroflow::Result<f64> {
        let p = chart.forward(*c)?;
        let (v, _) = chart.psi_on_branch(&p, c.zeta)?;
        Ok((v - psi).abs())
    });
    let max_level_error = level.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);

    let mut out = String::from("theta,zeta,x,y,z\n");
    let tau = std::f64::consts::TAU;
    for i in 0..=ntheta {
        for j in 0..=nzeta {
            let p = pos[(i % ntheta) * nzeta + (j % nzeta)];
            let th = tau * i as f64 / ntheta as f64;
            let ze = tau * j as f64 / nzeta as f64;
            let _ = writeln!(out, "{},{},{},{},{}", fmt17(th), fmt17(ze), fmt17(p.x), fmt17(p.y), fmt17(p.z));
        }
    }
    let rows = (ntheta + 1) * (nzeta + 1);
    Ok((out, SurfaceSummary { rows, max_level_error }))
}

pub fn cmd_surface(cfg: &RunConfig, psi: f64, ntheta: usize, nzeta: usize, out: &Path) -> CliResult<SurfaceSummary> {
    if ntheta < 2 || nzeta < 2 {
        return Err(CliError::Config("ntheta and nzeta must be at least 2".into()));
    }
    let chart = cfg.chart()?;
    if !(psi < chart.psi0()) {
        return Err(CliError::Core(toroflow::Error::Domain(format!("Ψ_c = {psi} must be below Ψ0 = {}", chart.psi0()))));
    }
    let (text, summary) = surface_csv(&chart, psi, ntheta, nzeta)?;
    write_file(out, &text)?;
    Ok(summary)
}

/// Per-ε statistics written alongside a field file.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSummary {
    pub eps: f64,
    pub path: PathBuf,
    pub rows: usize,
    /// Max normalised `|u₁·∇Ψ₁|/(|u₁||∇Ψ₁|)` over the rows.
    pub tangency_first_order: f64,
    /// The same for the exact pair `(u, Ψ)`.
    pub tangency_exact: f64,
}

/// File name for one ε: `{stem}_eps{ε}.{ext}`.
pub fn field_path(base: &Path, eps: f64) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_eps{eps}.{ext}"))
}

/// Rows `x,y,z,ux,uy,uz,u1x,u1y,u1z,psi,psi1` on the exact level set
/// `Ψ = psi` of the ε chart; points outside the chart parameter set are skipped.
pub fn field_csv(base: &ChartFamily, eps: f64, psi: f64, ntheta: usize, nzeta: usize) -> CliResult<(String, usize, f64, f64)> {
    let fspec = base.fspec().cloned().unwrap_or(FSpec::Sin2);
    let chart = ChartFamily::f_perturbed(base.psi0(), base.r0(), eps, fspec)?;
    let grid: Vec<Coords> = angle_grid(psi, ntheta, nzeta).into_iter().filter(|c| chart.in_domain_coords(*c)).collect();
    let h = 1e-6;
    let rows = par_map(&grid, |c| -> toroflow::Result<(String, f64, f64)> {
        let jet = chart.jet_eval(*c)?;
        let p = jet.x;
        let u = -jet.tangent(1);
        let grad = jet.gradients()?.row(0).transpose();
        let (u1, psi1) = verify::first_order(&chart, eps, &p);
        let g1 = verify::fd_gradient(&|q: &Vector3<f64>| Ok(verify::first_order(&chart, eps, q).1), &p, h)?;
        let t1 = u1.dot(&g1).abs() / (u1.norm() * g1.norm());
        let t0 = u.dot(&grad).abs() / (u.norm() * grad.norm());
        let vals = [p.x, p.y, p.z, u.x, u.y, u.z, u1.x, u1.y, u1.z, c.psi, psi1];
        let line = vals.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(",");
        Ok((line, t1, t0))
    });
    let rows: Vec<_> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut out = String::from("x,y,z,ux,uy,uz,u1x,u1y,u1z,psi,psi1\n");
    let (mut t1, mut t0) = (0.0f64, 0.0f64);
    for (line, a, b) in &rows {
        out.push_str(line);
        out.push('\n');
        t1 = t1.max(*a);
        t0 = t0.max(*b);
    }
    Ok((out, rows.len(), t1, t0))
}

pub fn cmd_field(cfg: &RunConfig, psi: f64, eps_list: &[f64], ntheta: usize, nzeta: usize, out: &Path) -> CliResult<Vec<FieldSummary>> {
    let base = cfg.chart()?;
    if base.fspec().is_none() {
        return Err(CliError::Config("field export needs a perturbation profile (f_perturbed family)".into()));
    }
    if !(psi < base.psi0()) {
        return Err(CliError::Core(toroflow::Error::Domain(format!("Ψ_c = {psi} must be below Ψ0 = {}", base.psi0()))));
    }
    let mut summaries = Vec::new();
    for &eps in eps_list {
        let (text, rows, t1, t0) = field_csv(&base, eps, psi, ntheta, nzeta)?;
        let path = field_path(out, eps);
        write_file(&path, &text)?;
        summaries.push(FieldSummary { eps, path, rows, tangency_first_order: t1, tangency_exact: t0 });
    }
    Ok(summaries)
}

/// Outcome of the verification suite.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOutcome {
    pub reports: Vec<ResidualReport>,
    pub failed: Vec<String>,
}

impl VerifyOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed.is_empty() {
            0
        } else {
            1
        }
    }
}

pub fn suite_config(cfg: &RunConfig) -> SuiteConfig {
    SuiteConfig {
        identity_samples: cfg.samples.identity,
        clebsch_samples: cfg.samples.clebsch,
        fd_samples: cfg.samples.fd,
        symmetry_samples: cfg.samples.symmetry,
        identity_tol: cfg.tolerances.identity_tol,
        clebsch_tol: cfg.tolerances.clebsch_tol,
        fd_tol: cfg.tolerances.fd_tol,
        seed: cfg.seed,
        psi_level: cfg.grid.psi_level,
    }
}

/// Runs the suite, writes one JSON record per report to `out` and returns
/// the outcome together with a human-readable summary.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> CliResult<(VerifyOutcome, String)> {
    let chart = cfg.chart()?;
    chart.check_n_prime()?;
    let domain = cfg.domain()?;
    let reports = verify::run_suite(&chart, &domain, &suite_config(cfg))?;
    let mut jsonl = String::new();
    let mut human = format!("chart {} on Ψ ∈ [{}, {}]\n", chart.short_name(), domain.psi_min, domain.psi_max);
    for r in &reports {
        jsonl.push_str(&serde_json::to_string(r).expect("report serialises"));
        jsonl.push('\n');
        let _ = writeln!(human, "{r}");
    }
    write_file(out, &jsonl)?;
    let failed: Vec<String> = reports.iter().filter(|r| !r.ok()).map(|r| r.name.clone()).collect();
    if failed.is_empty() {
        let _ = writeln!(human, "all asserted checks passed");
    } else {
        let _ = writeln!(human, "FAILED: {}", failed.join(", "));
    }
    Ok((VerifyOutcome { reports, failed }, human))
}

/// Prints to stdout, ignoring broken pipes.
pub fn emit(text: &str) {
    let _ = io::stdout().write_all(text.as_bytes());
}
