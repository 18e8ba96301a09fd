//! Densities vanishing quadratically at one end of their support.
//!
//! With these, `∫ μ(dt)/(𝚛 − t)²` can be finite, which no atom, linear piece
//! or semicircle allows.

use num_complex::Complex;

use super::transform::complex_log1p;
use crate::scalar::Scalar;

const SERIES_RATIO: f64 = 0.1;
const SERIES_TERMS: usize = 30;
const LOG_SERIES_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VanishingSide {
    Left,
    Right,
}

/// `weight · 3(t − point)²/width³` on the interval of length `width` that ends
/// at `point` (side `Right`) or starts there (side `Left`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticEdge<S> {
    pub point: S,
    pub width: S,
    pub weight: S,
    pub side: VanishingSide,
}

/// `F_m(v) = ∫_0^v s^m log s ds`.
fn log_moment<S: Scalar>(m: i32, v: S) -> S {
    if v == S::zero() {
        return S::zero();
    }
    let p = S::from_i32(m + 1).expect("small integer");
    v.powi(m + 1) * (v.ln() / p - S::one() / (p * p))
}

impl<S: Scalar> QuadraticEdge<S> {
    fn coefficient(&self) -> S {
        self.weight * S::lit(3.0) / self.width.powi(3)
    }

    pub fn left(&self) -> S {
        match self.side {
            VanishingSide::Right => self.point - self.width,
            VanishingSide::Left => self.point,
        }
    }

    pub fn right(&self) -> S {
        match self.side {
            VanishingSide::Right => self.point,
            VanishingSide::Left => self.point + self.width,
        }
    }

    pub(crate) fn reflect(&self) -> Self {
        let side = match self.side {
            VanishingSide::Right => VanishingSide::Left,
            VanishingSide::Left => VanishingSide::Right,
        };
        Self { point: -self.point, side, ..*self }
    }

    /// Distance from the vanishing point, measured towards the support.
    fn depth(&self, t: S) -> S {
        match self.side {
            VanishingSide::Right => self.point - t,
            VanishingSide::Left => t - self.point,
        }
    }

    pub fn density_at(&self, t: S) -> S {
        let u = self.depth(t);
        if u < S::zero() || u > self.width {
            return S::zero();
        }
        self.coefficient() * u * u
    }

    pub(crate) fn cdf(&self, x: S) -> S {
        let u = self.depth(x).max(S::zero()).min(self.width);
        let frac = (u / self.width).powi(3);
        match self.side {
            VanishingSide::Right => self.weight * (S::one() - frac),
            VanishingSide::Left => self.weight * frac,
        }
    }

    pub(crate) fn first_moment_cdf(&self, x: S) -> S {
        let k = self.coefficient();
        let (three, four) = (S::lit(3.0), S::lit(4.0));
        let u = self.depth(x).max(S::zero()).min(self.width);
        let h = self.width;
        let v = self.point;
        match self.side {
            VanishingSide::Right => k * (v * (h.powi(3) - u.powi(3)) / three - (h.powi(4) - u.powi(4)) / four),
            VanishingSide::Left => k * (v * u.powi(3) / three + u.powi(4) / four),
        }
    }

    /// `∫ (t − mean)² p(t) dt`.
    pub(crate) fn central_second_moment(&self, mean: S) -> S {
        let k = self.coefficient();
        let h = self.width;
        let offset = self.point - mean;
        let cross = S::lit(0.5) * offset * h.powi(4);
        let signed = match self.side {
            VanishingSide::Right => -cross,
            VanishingSide::Left => cross,
        };
        k * (offset * offset * h.powi(3) / S::lit(3.0) + signed + h.powi(5) / S::lit(5.0))
    }

    /// `∫_0^h k u²/(ζ + u) du`.
    fn core_stieltjes(&self, zeta: Complex<S>) -> Complex<S> {
        let k = self.coefficient();
        let h = self.width;
        if zeta.norm() == S::zero() {
            return Complex::new(k * h * h / S::lit(2.0), S::zero());
        }
        let ratio = Complex::new(h, S::zero()) / zeta;
        if ratio.norm() < S::lit(SERIES_RATIO) {
            let mut sum = Complex::new(S::zero(), S::zero());
            let mut power = ratio * ratio;
            for n in 3..SERIES_TERMS + 3 {
                power = power * ratio;
                let term = power / S::from_usize(n).expect("n");
                sum = if n % 2 == 1 { sum + term } else { sum - term };
            }
            return zeta * zeta * sum * k;
        }
        (zeta * zeta * complex_log1p(ratio) - zeta * h + h * h / S::lit(2.0)) * k
    }

    /// `∫_0^h k u²/(ζ + u)² du`.
    fn core_inverse_square(&self, zeta: Complex<S>) -> Complex<S> {
        let k = self.coefficient();
        let h = self.width;
        if zeta.norm() == S::zero() {
            return Complex::new(k * h, S::zero());
        }
        let ratio = Complex::new(h, S::zero()) / zeta;
        if ratio.norm() < S::lit(SERIES_RATIO) {
            let mut sum = Complex::new(S::zero(), S::zero());
            let mut power = ratio * ratio;
            for n in 3..SERIES_TERMS + 3 {
                power = power * ratio;
                let term = power * (S::from_usize(n - 2).expect("n") / S::from_usize(n).expect("n"));
                sum = if n % 2 == 1 { sum + term } else { sum - term };
            }
            return zeta * sum * k;
        }
        (-zeta * complex_log1p(ratio) * S::lit(2.0) + zeta * h / (zeta + h) + h) * k
    }

    pub(crate) fn stieltjes(&self, z: Complex<S>) -> Complex<S> {
        match self.side {
            VanishingSide::Right => self.core_stieltjes(z - self.point),
            VanishingSide::Left => -self.core_stieltjes(-z + self.point),
        }
    }

    pub(crate) fn inverse_square(&self, z: Complex<S>) -> Complex<S> {
        match self.side {
            VanishingSide::Right => self.core_inverse_square(z - self.point),
            VanishingSide::Left => self.core_inverse_square(-z + self.point),
        }
    }

    /// Transform at the right end of this component.
    pub(crate) fn right_end_values(&self) -> (S, S) {
        match self.side {
            VanishingSide::Right => {
                let k = self.coefficient();
                (k * self.width * self.width / S::lit(2.0), k * self.width)
            }
            VanishingSide::Left => (S::infinity(), S::infinity()),
        }
    }

    /// `∫ log(x − t) p(t) dt` for `x` at or right of the support.
    pub(crate) fn log_potential(&self, x: S) -> S {
        let k = self.coefficient();
        let h = self.width;
        let two = S::lit(2.0);
        let terms = |n: usize| S::from_usize(n).expect("n");
        match self.side {
            VanishingSide::Right => {
                let zeta = x - self.point;
                if zeta > h / S::lit(LOG_SERIES_RATIO) {
                    // ∫ u² [log ζ + log(1 + u/ζ)] du
                    let mut sum = S::zero();
                    for n in 1..=SERIES_TERMS {
                        let term = h.powi(n as i32 + 3) / (terms(n) * zeta.powi(n as i32) * terms(n + 3));
                        sum = if n % 2 == 1 { sum + term } else { sum - term };
                    }
                    return k * (h.powi(3) / S::lit(3.0) * zeta.ln() + sum);
                }
                let primitive = |v: S| log_moment(2, v) - two * zeta * log_moment(1, v) + zeta * zeta * log_moment(0, v);
                k * (primitive(zeta + h) - primitive(zeta))
            }
            VanishingSide::Left => {
                let reach = x - self.point;
                if reach > h / S::lit(LOG_SERIES_RATIO) {
                    // ∫ u² [log A + log(1 − u/A)] du
                    let mut sum = S::zero();
                    for n in 1..=SERIES_TERMS {
                        sum = sum + h.powi(n as i32 + 3) / (terms(n) * reach.powi(n as i32) * terms(n + 3));
                    }
                    return k * (h.powi(3) / S::lit(3.0) * reach.ln() - sum);
                }
                let primitive = |v: S| log_moment(2, v) - two * reach * log_moment(1, v) + reach * reach * log_moment(0, v);
                k * (primitive(reach) - primitive(reach - h))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate;

    fn pieces() -> [QuadraticEdge<f64>; 2] {
        [
            QuadraticEdge { point: 1.0, width: 2.0, weight: 0.6, side: VanishingSide::Right },
            QuadraticEdge { point: -0.5, width: 1.5, weight: 0.4, side: VanishingSide::Left },
        ]
    }

    #[test]
    fn transforms_match_quadrature() {
        for q in pieces() {
            let (a, b) = (q.left(), q.right());
            let mass = integrate(|t| q.density_at(t), a, b, 1e-14);
            assert!((mass - q.weight).abs() < 1e-13);
            for x in [b + 0.01, b + 0.7, b + 30.0, a - 0.3, a - 40.0] {
                let g = q.stieltjes(Complex::new(x, 0.0)).re;
                let oracle = integrate(|t| q.density_at(t) / (x - t), a, b, 1e-14);
                assert!((g - oracle).abs() < 1e-12 * (1.0 + oracle.abs()), "x={x} {g} {oracle}");
                let d = q.inverse_square(Complex::new(x, 0.0)).re;
                let oracle = integrate(|t| q.density_at(t) / (x - t).powi(2), a, b, 1e-14);
                assert!((d - oracle).abs() < 1e-11 * (1.0 + oracle.abs()), "x={x} {d} {oracle}");
            }
            for x in [b, b + 0.3, b + 5.0, b + 100.0] {
                let lp = q.log_potential(x);
                let oracle = integrate(|t| q.density_at(t) * (x - t).max(1e-300).ln(), a, b, 1e-14);
                assert!((lp - oracle).abs() < 1e-11, "x={x} {lp} {oracle}");
            }
            let z = Complex::new(0.5 * (a + b), 0.2);
            let g = q.stieltjes(z);
            let re = integrate(|t| (q.density_at(t) / (z - t)).re, a, b, 1e-14);
            let im = integrate(|t| (q.density_at(t) / (z - t)).im, a, b, 1e-14);
            assert!((g - Complex::new(re, im)).norm() < 1e-11);
            assert!(g.im < 0.0);
        }
    }

    #[test]
    fn cdf_moments_and_reflection() {
        for q in pieces() {
            let (a, b) = (q.left(), q.right());
            let x = a + 0.3 * (b - a);
            let oracle = integrate(|t| q.density_at(t), a, x, 1e-14);
            assert!((q.cdf(x) - oracle).abs() < 1e-13);
            let oracle = integrate(|t| t * q.density_at(t), a, x, 1e-14);
            assert!((q.first_moment_cdf(x) - oracle).abs() < 1e-13);
            let oracle = integrate(|t| (t - 0.2).powi(2) * q.density_at(t), a, b, 1e-14);
            assert!((q.central_second_moment(0.2) - oracle).abs() < 1e-13);
            let r = q.reflect();
            assert!((r.left() + b).abs() < 1e-15 && (r.right() + a).abs() < 1e-15);
            assert!((r.density_at(-x) - q.density_at(x)).abs() < 1e-15);
        }
    }
}
