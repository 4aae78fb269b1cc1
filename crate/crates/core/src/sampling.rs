//! Seeded sample grids and order-preserving parallel evaluation.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::charts::{ChartFamily, DomainSpec};
use crate::diffgeo::Coords;
use crate::{Error, Result};

/// Maps `f` over `items` in parallel; output order matches input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// Runs `op` on a dedicated pool with `workers` threads.
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(op)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples of the shell, without any membership filter.
pub fn shell_uniform(domain: &DomainSpec, n: usize, seed: u64) -> Vec<Coords> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            Coords::new(
                r.gen_range(domain.psi_min..=domain.psi_max),
                r.gen_range(0.0..TAU),
                r.gen_range(0.0..TAU),
            )
        })
        .collect()
}

/// Uniform shell samples restricted to the chart parameter set, with the
/// closed-form Jacobian at least `min_jacobian`.
pub fn shell_in_domain(
    chart: &ChartFamily,
    domain: &DomainSpec,
    n: usize,
    seed: u64,
    min_jacobian: f64,
) -> Result<Vec<Coords>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(Error::DegenerateSampling(format!(
                "only {} of {n} samples landed in the chart parameter set",
                out.len()
            )));
        }
        let c = Coords::new(
            r.gen_range(domain.psi_min..=domain.psi_max),
            r.gen_range(0.0..TAU),
            r.gen_range(0.0..TAU),
        );
        if chart.in_domain_coords(c) && chart.jacobian_closed_form(c) >= min_jacobian {
            out.push(c);
        }
    }
    Ok(out)
}

/// Shell samples whose Jacobian is at least `fraction` of its largest value
/// on the shell, keeping finite-difference stencils away from folds.
pub fn shell_interior(chart: &ChartFamily, domain: &DomainSpec, n: usize, seed: u64, fraction: f64) -> Result<Vec<Coords>> {
    let mut jmax = 0.0f64;
    for i in 0..9 {
        let psi = domain.psi_min + (domain.psi_max - domain.psi_min) * i as f64 / 8.0;
        for c in angle_grid(psi, 32, 32) {
            jmax = jmax.max(chart.jacobian_closed_form(c));
        }
    }
    shell_in_domain(chart, domain, n, seed, fraction * jmax)
}

/// Random angles on a single level set, restricted to the chart parameter set.
pub fn level_set_in_domain(chart: &ChartFamily, psi: f64, n: usize, seed: u64) -> Result<Vec<Coords>> {
    let d = DomainSpec { psi_min: psi, psi_max: psi };
    shell_in_domain(chart, &d, n, seed, 0.0)
}

/// Tensor grid `Θ_i = 2πi/nθ`, `ζ_j = 2πj/nζ` on one level set.
pub fn angle_grid(psi: f64, ntheta: usize, nzeta: usize) -> Vec<Coords> {
    let mut out = Vec::with_capacity(ntheta * nzeta);
    for i in 0..ntheta {
        for j in 0..nzeta {
            out.push(Coords::new(psi, TAU * i as f64 / ntheta as f64, TAU * j as f64 / nzeta as f64));
        }
    }
    out
}

/// Cartesian images of shell samples, for checks on Cartesian fields.
pub fn cartesian_points(chart: &ChartFamily, coords: &[Coords]) -> Result<Vec<Vector3<f64>>> {
    coords.iter().map(|c| chart.forward(*c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::presets;

    #[test]
    fn sampling_is_seeded() {
        let d = DomainSpec::new(0.9, 0.99).unwrap();
        assert_eq!(shell_uniform(&d, 10, 7), shell_uniform(&d, 10, 7));
        assert_ne!(shell_uniform(&d, 10, 7), shell_uniform(&d, 10, 8));
    }

    #[test]
    fn rejection_keeps_jacobian_positive() {
        let chart = presets::sin2(0.8);
        let d = DomainSpec::new(0.9, 0.99).unwrap();
        let pts = shell_in_domain(&chart, &d, 500, 1, 0.0).unwrap();
        assert!(pts.iter().all(|c| chart.jacobian_closed_form(*c) > 0.0));
    }

    #[test]
    fn par_map_preserves_order_across_pools() {
        let v: Vec<u64> = (0..1000).collect();
        let a = with_workers(1, || par_map(&v, |x| x * x));
        let b = with_workers(4, || par_map(&v, |x| x * x));
        assert_eq!(a, b);
        assert_eq!(a[999], 999 * 999);
    }
}
