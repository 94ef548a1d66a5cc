//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Result, SolgasError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// `∫_a^b f` to absolute-or-relative tolerance `tol`. Reversed limits give
/// the negated integral.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let mut budget = 20_000;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        if !val.is_finite() {
            return Err(SolgasError::Numerical(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        let local_tol = tol * ((hi - lo) / (b - a)) * val.abs().max(1.0);
        if err <= local_tol || depth >= 40 {
            total += val;
            continue;
        }
        budget -= 1;
        if budget == 0 {
            return Err(SolgasError::Numerical("quadrature did not converge".into()));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, depth + 1));
        stack.push((mid, hi, depth + 1));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-13).unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn smooth_integrands() {
        let v = integrate(f64::exp, 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
        let v = integrate(|x| 1.0 / (1.0 + x * x), 0.0, 10.0, 1e-13).unwrap();
        assert!((v - 10f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_negate() {
        let a = integrate(f64::cos, 0.0, 2.0, 1e-13).unwrap();
        let b = integrate(f64::cos, 2.0, 0.0, 1e-13).unwrap();
        assert_eq!(a, -b);
        assert_eq!(integrate(f64::cos, 1.0, 1.0, 1e-13).unwrap(), 0.0);
    }

    #[test]
    fn peaked_integrand_refines() {
        let v = integrate(|x| 1e-2 / (1e-4 + x * x), -1.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 * (100f64).atan()).abs() < 1e-10);
    }
}
