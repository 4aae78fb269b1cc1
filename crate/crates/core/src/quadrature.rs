//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights at the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

fn kronrod<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for n in 0..N {
        k[n] = WGK[7] * fc[n];
        g[n] = WG[3] * fc[n];
    }
    for (j, &x) in XGK[..7].iter().enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        for n in 0..N {
            let s = f1[n] + f2[n];
            k[n] += WGK[j] * s;
            if j % 2 == 1 {
                g[n] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for n in 0..N {
        k[n] *= h;
        err = err.max((k[n] - g[n] * h).abs());
    }
    (k, err)
}

fn recurse<const N: usize>(
    f: &impl Fn(f64) -> [f64; N],
    a: f64,
    b: f64,
    whole: ([f64; N], f64),
    tol: f64,
    depth: u32,
) -> Result<[f64; N]> {
    let (val, err) = whole;
    if !err.is_finite() || !val.iter().all(|v| v.is_finite()) {
        return Err(Error::Quadrature { error: err });
    }
    if err <= tol {
        return Ok(val);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature { error: err });
    }
    let m = 0.5 * (a + b);
    let left = kronrod(f, a, m);
    let right = kronrod(f, m, b);
    let l = recurse(f, a, m, left, 0.5 * tol, depth + 1)?;
    let r = recurse(f, m, b, right, 0.5 * tol, depth + 1)?;
    let mut out = [0.0; N];
    for n in 0..N {
        out[n] = l[n] + r[n];
    }
    Ok(out)
}

/// `∫_a^b f`, componentwise, to absolute tolerance `tol` (max over components).
/// Reversed limits give the negated integral.
pub fn integrate<const N: usize>(f: impl Fn(f64) -> [f64; N], a: f64, b: f64, tol: f64) -> Result<[f64; N]> {
    if a == b {
        return Ok([0.0; N]);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let whole = kronrod(&f, lo, hi);
    let mut v = recurse(&f, lo, hi, whole, tol, 0)?;
    v.iter_mut().for_each(|x| *x *= sign);
    Ok(v)
}

pub fn integrate_scalar(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate(|x| [f(x)], a, b, tol).map(|v| v[0])
}
