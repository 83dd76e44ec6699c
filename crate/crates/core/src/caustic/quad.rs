#![allow(clippy::excessive_precision)]

//! Adaptive Gauss–Kronrod (7, 15) quadrature of complex integrands on real intervals.

use crate::error::{Error, Result};
use crate::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn segment(f: &mut dyn FnMut(f64) -> Result<C64>, a: f64, b: f64) -> Result<(C64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    Ok((kron * h, ((kron - gauss) * h).norm()))
}

/// `∫_a^b f`, bisecting until each piece's Kronrod–Gauss difference is below its share of `tol`.
///
/// Pieces at depth 20 or more are accepted once their error is below `tol / 1000` (roundoff floor).
pub fn integrate(f: &mut dyn FnMut(f64) -> Result<C64>, a: f64, b: f64, tol: f64) -> Result<C64> {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = C64::new(0.0, 0.0);
    let width = b - a;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = segment(f, lo, hi)?;
        let share = tol * (hi - lo) / width;
        if err <= share.max(1e-15 * val.norm()) || (depth >= 20 && err <= 1e-3 * tol) {
            total += val;
        } else if depth >= 40 {
            return Err(Error::Numeric(format!("quadrature did not converge on [{lo}, {hi}] (error {err:e})")));
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}
