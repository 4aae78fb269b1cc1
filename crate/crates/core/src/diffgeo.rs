//! Chart jets, induced metric and Christoffel symbols.
//!
//! Coordinate index convention throughout: `0 = Ψ`, `1 = Θ`, `2 = ζ`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::jet::Jet;
use crate::{Error, Result};

pub const PSI: usize = 0;
pub const THETA: usize = 1;
pub const ZETA: usize = 2;

/// A point `(Ψ, Θ, ζ)` in chart coordinates. Angles live on the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coords {
    pub psi: f64,
    pub theta: f64,
    pub zeta: f64,
}

impl Coords {
    pub const fn new(psi: f64, theta: f64, zeta: f64) -> Self {
        Self { psi, theta, zeta }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.psi, self.theta, self.zeta]
    }

    pub fn from_array(y: [f64; 3]) -> Self {
        Self::new(y[0], y[1], y[2])
    }

    /// Both angles reduced to `[0, 2π)`.
    pub fn reduced(self) -> Self {
        Self::new(self.psi, reduce_angle(self.theta), reduce_angle(self.zeta))
    }
}

pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(std::f64::consts::TAU);
    if r >= std::f64::consts::TAU {
        0.0
    } else {
        r
    }
}

/// Signed angular distance `a − b` folded into `(−π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d - std::f64::consts::TAU
    } else {
        d
    }
}

/// Position and its first and second coordinate partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub x: Vector3<f64>,
    /// `d1[(a, i)] = ∂x^a/∂y^i`; column `i` is the tangent vector `∂_i`.
    pub d1: Matrix3<f64>,
    /// `d2[i][j] = ∂²x/∂y^i∂y^j`.
    pub d2: [[Vector3<f64>; 3]; 3],
}

impl Jet2 {
    pub fn from_components(comp: [Jet; 3]) -> Self {
        let x = Vector3::new(comp[0].val, comp[1].val, comp[2].val);
        let d1 = Matrix3::from_fn(|a, i| comp[a].grad[i]);
        let mut d2 = [[Vector3::zeros(); 3]; 3];
        for (i, row) in d2.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = Vector3::new(comp[0].hess(i, j), comp[1].hess(i, j), comp[2].hess(i, j));
            }
        }
        Self { x, d1, d2 }
    }

    pub fn tangent(&self, i: usize) -> Vector3<f64> {
        self.d1.column(i).into_owned()
    }

    pub fn det(&self) -> f64 {
        self.d1.determinant()
    }

    /// Dual basis: row `i` of the result is `∇y^i`.
    pub fn gradients(&self) -> Result<Matrix3<f64>> {
        let det = self.det();
        self.d1
            .try_inverse()
            .filter(|_| det != 0.0 && det.is_finite())
            .ok_or(Error::SingularJacobian { det })
    }
}

/// Metric coefficients `g_ij = ∂_i·∂_j` and their partials `dg[i][j][k] = ∂g_ij/∂y^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricAtPoint {
    pub g: Matrix3<f64>,
    pub dg: [[[f64; 3]; 3]; 3],
}

impl MetricAtPoint {
    pub fn from_jet(jet: &Jet2) -> Self {
        let mut g = Matrix3::zeros();
        let mut dg = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            let ti = jet.tangent(i);
            for j in i..3 {
                let tj = jet.tangent(j);
                let gij = ti.dot(&tj);
                g[(i, j)] = gij;
                g[(j, i)] = gij;
                for k in 0..3 {
                    let d = jet.d2[i][k].dot(&tj) + ti.dot(&jet.d2[j][k]);
                    dg[i][j][k] = d;
                    dg[j][i][k] = d;
                }
            }
        }
        Self { g, dg }
    }

    /// Metric from six jet-valued coefficients in the order
    /// `g_ΨΨ, g_ΨΘ, g_Ψζ, g_ΘΘ, g_Θζ, g_ζζ`.
    pub fn from_coefficients(c: [Jet; 6]) -> Self {
        const IDX: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let mut g = Matrix3::zeros();
        let mut dg = [[[0.0; 3]; 3]; 3];
        for (slot, &(i, j)) in IDX.iter().enumerate() {
            g[(i, j)] = c[slot].val;
            g[(j, i)] = c[slot].val;
            dg[i][j] = c[slot].grad;
            dg[j][i] = c[slot].grad;
        }
        Self { g, dg }
    }

    /// Cholesky factorisation with pivot tolerance `1e-13` relative to the
    /// largest diagonal entry. Returns `det g` on success.
    pub fn check_positive_definite(&self) -> Result<f64> {
        let g = &self.g;
        let scale = g[(0, 0)].abs().max(g[(1, 1)].abs()).max(g[(2, 2)].abs()).max(f64::MIN_POSITIVE);
        let tol = 1e-13 * scale;
        let mut l = [[0.0f64; 3]; 3];
        let mut det = 1.0;
        for j in 0..3 {
            let mut d = g[(j, j)];
            for k in 0..j {
                d -= l[j][k] * l[j][k];
            }
            if !(d > tol) {
                return Err(Error::SingularMetric { det: self.g.determinant() });
            }
            let ljj = d.sqrt();
            l[j][j] = ljj;
            det *= d;
            for i in (j + 1)..3 {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / ljj;
            }
        }
        Ok(det)
    }

    pub fn inverse(&self) -> Result<Matrix3<f64>> {
        let det = self.check_positive_definite()?;
        self.g.try_inverse().ok_or(Error::SingularMetric { det })
    }

    /// `∂(det g)/∂y^k` by Jacobi's formula.
    pub fn ddet(&self, k: usize) -> Result<f64> {
        let inv = self.inverse()?;
        let det = self.g.determinant();
        let mut tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tr += inv[(j, i)] * self.dg[i][j][k];
            }
        }
        Ok(det * tr)
    }
}

/// `Γ_ijk = ½(∂_k g_ij + ∂_j g_ik − ∂_i g_jk)`, indexed `[i][j][k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChristoffelFirst(pub [[[f64; 3]; 3]; 3]);

/// `Γ^i_jk = g^{im} Γ_mjk`, indexed `[i][j][k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChristoffelSecond(pub [[[f64; 3]; 3]; 3]);

impl ChristoffelFirst {
    pub fn from_metric(m: &MetricAtPoint) -> Self {
        let dg = &m.dg;
        let mut out = [[[0.0; 3]; 3]; 3];
        for (i, oi) in out.iter_mut().enumerate() {
            for j in 0..3 {
                for k in j..3 {
                    let v = 0.5 * ((dg[i][j][k] + dg[i][k][j]) - dg[j][k][i]);
                    oi[j][k] = v;
                    oi[k][j] = v;
                }
            }
        }
        Self(out)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[i][j][k]
    }
}

impl ChristoffelSecond {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[i][j][k]
    }
}

pub fn christoffel(m: &MetricAtPoint) -> Result<(ChristoffelFirst, ChristoffelSecond)> {
    let first = ChristoffelFirst::from_metric(m);
    let inv = m.inverse()?;
    let mut second = [[[0.0; 3]; 3]; 3];
    for (i, si) in second.iter_mut().enumerate() {
        for j in 0..3 {
            for k in j..3 {
                let v = (0..3).map(|mm| inv[(i, mm)] * first.0[mm][j][k]).sum::<f64>();
                si[j][k] = v;
                si[k][j] = v;
            }
        }
    }
    Ok((first, ChristoffelSecond(second)))
}

/// Anything that yields a position jet at chart coordinates.
pub trait JetSource: Sync {
    fn jet(&self, c: Coords) -> Result<Jet2>;
}

/// A map given by a closure over seeded coordinate jets.
pub struct JetMap<F>(pub F);

impl<F> JetSource for JetMap<F>
where
    F: Fn([Jet; 3]) -> [Jet; 3] + Sync,
{
    fn jet(&self, c: Coords) -> Result<Jet2> {
        Ok(Jet2::from_components((self.0)(Jet::seed(c.to_array()))))
    }
}

/// Anything that yields a metric and its first partials at chart coordinates.
pub trait MetricSource: Sync {
    fn metric_at(&self, c: Coords) -> Result<MetricAtPoint>;
}

/// A metric given directly by six coefficient functions, with no embedding.
/// The closure receives seeded coordinate jets and returns
/// `[g_ΨΨ, g_ΨΘ, g_Ψζ, g_ΘΘ, g_Θζ, g_ζζ]`.
pub struct AbstractMetric<F> {
    coeffs: F,
}

impl<F> AbstractMetric<F>
where
    F: Fn([Jet; 3]) -> [Jet; 6] + Sync,
{
    pub fn new(coeffs: F) -> Self {
        Self { coeffs }
    }
}

impl<F> MetricSource for AbstractMetric<F>
where
    F: Fn([Jet; 3]) -> [Jet; 6] + Sync,
{
    fn metric_at(&self, c: Coords) -> Result<MetricAtPoint> {
        Ok(MetricAtPoint::from_coefficients((self.coeffs)(Jet::seed(c.to_array()))))
    }
}

/// The identity metric with vanishing derivatives.
pub fn euclidean_metric() -> MetricAtPoint {
    MetricAtPoint { g: Matrix3::identity(), dg: [[[0.0; 3]; 3]; 3] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_christoffels_vanish() {
        let (a, b) = christoffel(&euclidean_metric()).unwrap();
        assert!(a.0.iter().flatten().flatten().all(|&v| v == 0.0));
        assert!(b.0.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn singular_metric_rejected() {
        let mut m = euclidean_metric();
        m.g[(2, 2)] = 0.0;
        assert!(matches!(christoffel(&m), Err(Error::SingularMetric { .. })));
        m.g[(2, 2)] = -1.0;
        assert!(m.check_positive_definite().is_err());
    }

    #[test]
    fn abstract_metric_derivatives_from_jets() {
        // g_ΨΘ = Θ, g_ΘΘ = Ψ², otherwise identity
        let m = AbstractMetric::new(|[p, t, _z]: [Jet; 3]| {
            let one = Jet::constant(1.0);
            let zero = Jet::constant(0.0);
            [one, t * 0.1, zero, p * p + 1.0, zero, one]
        });
        let g = m.metric_at(Coords::new(0.5, 2.0, 0.0)).unwrap();
        assert_eq!(g.g[(0, 1)], 0.2);
        assert_eq!(g.dg[0][1][THETA], 0.1);
        assert_eq!(g.dg[1][1][PSI], 1.0);
    }

    #[test]
    fn angle_helpers() {
        assert_eq!(reduce_angle(-1e-18), 0.0);
        assert!((angle_diff(0.1, std::f64::consts::TAU - 0.1) - 0.2).abs() < 1e-15);
    }
}
