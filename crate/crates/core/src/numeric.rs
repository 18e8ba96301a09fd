//! Small numerical kernels: adaptive quadrature, bracketed root finding and
//! polynomial extrapolation.

use crate::scalar::Scalar;

// 15-point Gauss-Kronrod nodes and weights, kept at full published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<S: Scalar, F: FnMut(S) -> S>(f: &mut F, a: S, b: S) -> (S, S) {
    let half = S::lit(0.5);
    let center = half * (a + b);
    let h = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * S::lit(WGK[7]);
    let mut gauss = fc * S::lit(WG[3]);
    for j in 0..7 {
        let dx = h * S::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + S::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + S::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Subdivides by bisection until each panel's Kronrod–Gauss difference is
/// below its share of `abs_tol`, or the depth limit is reached.
pub fn integrate<S: Scalar, F: FnMut(S) -> S>(mut f: F, a: S, b: S, abs_tol: S) -> S {
    if a == b {
        return S::zero();
    }
    let (whole, err) = gk15(&mut f, a, b);
    if err <= abs_tol {
        return whole;
    }
    let mut total = S::zero();
    let mut stack = vec![(a, b, whole, err, 0u32)];
    let length = (b - a).abs();
    while let Some((lo, hi, value, err, depth)) = stack.pop() {
        let share = abs_tol * ((hi - lo).abs() / length).max(S::lit(1e-3));
        if err <= share || depth >= 48 {
            total = total + value;
            continue;
        }
        let mid = S::lit(0.5) * (lo + hi);
        let (left, el) = gk15(&mut f, lo, mid);
        let (right, er) = gk15(&mut f, mid, hi);
        stack.push((lo, mid, left, el, depth + 1));
        stack.push((mid, hi, right, er, depth + 1));
    }
    total
}

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f(lo)` and `f(hi)`
/// have opposite signs. Stops when the bracket is narrower than `xtol`.
pub fn bisect<S: Scalar, F: FnMut(S) -> S>(mut f: F, mut lo: S, mut hi: S, xtol: S) -> S {
    let f_lo = f(lo);
    let lo_negative = f_lo < S::zero();
    for _ in 0..400 {
        let mid = S::lit(0.5) * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return mid;
        }
        let fm = f(mid);
        if fm == S::zero() {
            return mid;
        }
        if (fm < S::zero()) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    S::lit(0.5) * (lo + hi)
}

/// Safeguarded Newton iteration for a root inside the bracket `[lo, hi]`.
///
/// `fdf` returns the function value and derivative. Newton steps that leave
/// the current bracket are replaced by bisection steps.
pub fn newton_bracketed<S: Scalar, F: FnMut(S) -> (S, S)>(mut fdf: F, mut lo: S, mut hi: S, xtol: S) -> S {
    let (f_lo, _) = fdf(lo);
    let lo_negative = f_lo < S::zero();
    let mut x = S::lit(0.5) * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = fdf(x);
        if fx == S::zero() {
            return x;
        }
        if (fx < S::zero()) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { S::lit(0.5) * (lo + hi) };
        if (next - x).abs() <= xtol || (hi - lo).abs() <= xtol {
            return next;
        }
        x = next;
    }
    x
}

/// Neville extrapolation to `h = 0` of samples `values[i] = f(steps[i])`.
pub fn extrapolate_to_zero<S: Scalar>(steps: &[S], values: &[S]) -> S {
    assert_eq!(steps.len(), values.len());
    let mut p = values.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let hi = steps[i];
            let hj = steps[i + level];
            p[i] = (hj * p[i] - hi * p[i + 1]) / (hj - hi);
        }
    }
    p[0]
}

/// Sum with Neumaier compensation.
pub fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    let mut sum = S::zero();
    let mut carry = S::zero();
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry = carry + ((sum - t) + x);
        } else {
            carry = carry + ((x - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

/// Natural log of the mean of `exp(values)`, computed stably.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NEG_INFINITY;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (s / values.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_sqrt() {
        let v: f64 = integrate(|x: f64| x * x, 0.0, 3.0, 1e-13);
        assert!((v - 9.0).abs() < 1e-12);
        let v: f64 = integrate(|x: f64| (1.0 - x * x).max(0.0).sqrt(), -1.0, 1.0, 1e-10);
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn root_finders_agree() {
        let r1: f64 = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-15);
        let r2: f64 = newton_bracketed(|x: f64| (x * x - 2.0, 2.0 * x), 0.0, 2.0, 1e-15);
        assert!((r1 - 2f64.sqrt()).abs() < 1e-14);
        assert!((r2 - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn neville_recovers_quadratic_limit() {
        let steps = [1e-2, 1e-3, 1e-4];
        let values: Vec<f64> = steps.iter().map(|h| 3.0 + 2.0 * h - 5.0 * h * h).collect();
        assert!((extrapolate_to_zero(&steps, &values) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_mean_exp_is_stable() {
        let v = log_mean_exp(&[1000.0, 1000.0]);
        assert!((v - 1000.0).abs() < 1e-12);
    }
}
