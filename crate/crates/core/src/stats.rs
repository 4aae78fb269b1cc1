//! Deterministic residual statistics.

use serde::Serialize;
use std::fmt;

/// Aggregated statistics of a named residual over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub samples: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub p99_abs: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Informational records (e.g. conditions the flows are known to violate)
    /// carry `asserted = false` and never fail a run.
    pub asserted: bool,
    /// Samples dropped because the quantity could not be evaluated there.
    pub excluded: usize,
}

/// Sum in index order by recursive halving.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

impl ResidualReport {
    /// Builds a report from signed or unsigned residuals. NaN counts as an
    /// infinite residual.
    pub fn from_values(name: impl Into<String>, values: &[f64], tolerance: f64) -> Self {
        let abs: Vec<f64> = values.iter().map(|v| if v.is_nan() { f64::INFINITY } else { v.abs() }).collect();
        let n = abs.len();
        let max_abs = abs.iter().copied().fold(0.0, f64::max);
        let mean_abs = if n == 0 { 0.0 } else { pairwise_sum(&abs) / n as f64 };
        let p99_abs = if n == 0 {
            0.0
        } else {
            let mut sorted = abs.clone();
            sorted.sort_by(f64::total_cmp);
            let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
            sorted[rank - 1]
        };
        Self {
            name: name.into(),
            samples: n,
            max_abs,
            mean_abs,
            p99_abs,
            tolerance,
            pass: n > 0 && max_abs < tolerance,
            asserted: true,
            excluded: 0,
        }
    }

    /// Splits evaluation results into values and an exclusion count.
    pub fn from_results<E>(name: impl Into<String>, values: &[Result<f64, E>], tolerance: f64) -> Self {
        let ok: Vec<f64> = values.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let mut r = Self::from_values(name, &ok, tolerance);
        r.excluded = values.len() - ok.len();
        r
    }

    pub fn informational(mut self) -> Self {
        self.asserted = false;
        self
    }

    /// True unless the report is asserted and failed.
    pub fn ok(&self) -> bool {
        self.pass || !self.asserted
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.asserted, self.pass) {
            (false, _) => "info",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        write!(
            f,
            "[{status}] {:<40} n={:<6} max={:.3e} mean={:.3e} p99={:.3e} tol={:.1e}",
            self.name, self.samples, self.max_abs, self.mean_abs, self.p99_abs, self.tolerance
        )?;
        if self.excluded > 0 {
            write!(f, " excluded={}", self.excluded)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_statistics() {
        let v: Vec<f64> = (1..=100).map(|k| -(k as f64)).collect();
        let r = ResidualReport::from_values("x", &v, 200.0);
        assert_eq!(r.max_abs, 100.0);
        assert_eq!(r.mean_abs, 50.5);
        assert_eq!(r.p99_abs, 99.0);
        assert!(r.pass);
    }

    #[test]
    fn nan_fails_and_empty_fails() {
        assert!(!ResidualReport::from_values("x", &[0.0, f64::NAN], 1.0).pass);
        assert!(!ResidualReport::from_values("x", &[], 1.0).pass);
    }

    #[test]
    fn exclusions_counted() {
        let v: Vec<Result<f64, ()>> = vec![Ok(1e-3), Err(()), Ok(2e-3)];
        let r = ResidualReport::from_results("x", &v, 1.0);
        assert_eq!((r.samples, r.excluded), (2, 1));
    }
}
