//! Reference computations used only by tests.
//!
//! Everything here is deliberately written along a different numerical path
//! than the production code in `scpw-core`: quadrature instead of the AGM,
//! exponentials instead of `tanh`, exhaustive search instead of normal
//! equations. Nothing in this crate depends on `scpw-core`.

use std::f64::consts::FRAC_PI_2;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod 7/15 quadrature.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut pieces = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2 .0).sum();
        let err: f64 = pieces.iter().map(|p| p.2 .1).sum();
        if err <= rel_tol * total.abs() {
            return total;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        pieces.push((lo, mid, gk15(&f, lo, mid)));
        pieces.push((mid, hi, gk15(&f, mid, hi)));
    }
    pieces.iter().map(|p| p.2 .0).sum()
}

/// K(k) in the modulus convention by direct quadrature of its defining integral.
pub fn elliptic_k_quadrature(k: f64) -> f64 {
    let k2 = k * k;
    integrate(
        |theta: f64| {
            let s = theta.sin();
            1.0 / (1.0 - k2 * s * s).sqrt()
        },
        0.0,
        FRAC_PI_2,
        1e-15,
    )
}

/// coth through the exponential definition.
pub fn coth_exp(x: f64) -> f64 {
    let e = (2.0 * x).exp();
    if e.is_infinite() {
        return 1.0;
    }
    (e + 1.0) / (e - 1.0)
}

/// Independent transcription of the thin-film CPW geometric factor, using the
/// quadrature K. Inputs in any consistent length unit.
pub fn geometric_factor_transcription(s: f64, w: f64, d: f64) -> f64 {
    let total = w + 2.0 * s;
    let k = w / total;
    let kk = elliptic_k_quadrature(k);
    let first = (4.0 * w / d).ln();
    let second = (w / total) * (4.0 * total / d).ln();
    let third = 2.0 * (w + s) / total * (s / (w + s)).ln();
    (first + second + third) / (2.0 * k * k * kk * kk)
}

/// Minimum mean squared residual of a line through `(i, y[i])`, found by
/// coarse-to-fine exhaustive search over slope and intercept.
///
/// Returns `(slope, intercept, mse)`.
pub fn ols_brute_force(y: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let mse = |m: f64, c: f64| {
        y.iter()
            .enumerate()
            .map(|(i, v)| {
                let r = v - (m * i as f64 + c);
                r * r
            })
            .sum::<f64>()
            / n
    };
    let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = y.iter().sum::<f64>() / n;
    let mut center = (0.0, mean);
    let mut half = (spread.max(1.0), 2.0 * spread.max(1.0) + mean.abs());
    let steps = 100;
    for _ in 0..40 {
        let mut best = (f64::INFINITY, center.0, center.1);
        for a in -steps..=steps {
            let m = center.0 + half.0 * a as f64 / steps as f64;
            for b in -steps..=steps {
                let c = center.1 + half.1 * b as f64 / steps as f64;
                let e = mse(m, c);
                if e < best.0 {
                    best = (e, m, c);
                }
            }
        }
        center = (best.1, best.2);
        half = (half.0 * 4.0 / steps as f64, half.1 * 4.0 / steps as f64);
    }
    (center.0, center.1, mse(center.0, center.1))
}

/// Five-point central-difference derivative.
pub fn five_point_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}
