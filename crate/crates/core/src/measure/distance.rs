//! Dudley (bounded-Lipschitz) and Lévy distances.
//!
//! The Dudley distance is the value of the grid linear program
//!
//! ```text
//! maximize  Σ_i f_i (μ_i − ν_i)
//! subject to |f_i| ≤ C,  |f_{i+1} − f_i| ≤ L Δ,  C + L ≤ 1
//! ```
//!
//! where `μ_i`, `ν_i` are the masses of the two measures assigned to grid node
//! `i` by linear (hat-function) interpolation. For fixed `C` the program is a
//! chain, solved exactly by dynamic programming over concave piecewise-linear
//! value functions; the optimal value is concave in `C`, which is then found by
//! golden-section search.

use super::Measure;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const GRID_DIVISIONS: f64 = 2000.0;
const MAX_NODES: usize = 20_000_000;

/// Dudley distance with the default grid step `span / 2000`.
pub fn dudley_distance_default<S: Scalar>(mu: &Measure<S>, nu: &Measure<S>) -> Result<S> {
    let span = mu.right_edge().max(nu.right_edge()) - mu.left_edge().min(nu.left_edge());
    if span == S::zero() {
        return Ok(S::zero());
    }
    dudley_distance(mu, nu, span / S::lit(GRID_DIVISIONS))
}

/// Dudley distance via the grid linear program with step `grid_step`.
pub fn dudley_distance<S: Scalar>(mu: &Measure<S>, nu: &Measure<S>, grid_step: S) -> Result<S> {
    if !(grid_step > S::zero()) || !grid_step.is_finite() {
        return Err(Error::Domain(format!("grid step must be positive, got {grid_step}")));
    }
    let lo = mu.left_edge().min(nu.left_edge()) - grid_step;
    let hi = mu.right_edge().max(nu.right_edge()) + grid_step;
    let cells = ((hi - lo) / grid_step).ceil().to_usize().unwrap_or(usize::MAX);
    if cells >= MAX_NODES {
        return Err(Error::Domain(format!("grid step {grid_step} needs more than {MAX_NODES} nodes")));
    }
    let nodes: Vec<S> = (0..=cells).map(|k| lo + grid_step * S::from_usize(k).expect("node index")).collect();
    let a = hat_masses(mu, &nodes);
    let b = hat_masses(nu, &nodes);
    let diff: Vec<S> = a.iter().zip(&b).map(|(x, y)| *x - *y).collect();
    Ok(solve_grid_program(&diff, grid_step))
}

/// Masses of `mu` on the nodes under linear interpolation between neighbours.
pub(crate) fn hat_masses<S: Scalar>(mu: &Measure<S>, nodes: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); nodes.len()];
    let mut prev_cdf = mu.cdf(nodes[0]);
    let mut prev_moment = mu.first_moment_cdf(nodes[0]);
    out[0] = prev_cdf;
    for k in 0..nodes.len() - 1 {
        let (left, right) = (nodes[k], nodes[k + 1]);
        let cdf = mu.cdf(right);
        let moment = mu.first_moment_cdf(right);
        let mass = cdf - prev_cdf;
        // ∫_(left, right] (t − left) μ(dt)
        let offset = (moment - prev_moment) - left * mass;
        let to_right = (offset / (right - left)).max(S::zero()).min(mass.max(S::zero()));
        out[k] = out[k] + (mass - to_right);
        out[k + 1] = to_right;
        prev_cdf = cdf;
        prev_moment = moment;
    }
    out
}

/// Concave piecewise-linear function on `[-c, c]`, as breakpoints sorted by abscissa.
struct Concave<S> {
    points: Vec<(S, S)>,
}

impl<S: Scalar> Concave<S> {
    fn add_linear(&mut self, slope: S) {
        for p in self.points.iter_mut() {
            p.1 = p.1 + slope * p.0;
        }
    }

    fn max(&self) -> S {
        self.points.iter().fold(S::neg_infinity(), |m, p| m.max(p.1))
    }

    /// `f ↦ max_{|g − f| ≤ delta} h(g)`, restricted back to `[-c, c]`.
    fn window_max(&mut self, delta: S, c: S) {
        if delta == S::zero() {
            return;
        }
        let peak = self.max();
        let first = self.points.iter().position(|p| p.1 == peak).expect("non-empty");
        let last = self.points.iter().rposition(|p| p.1 == peak).expect("non-empty");
        let mut shifted = Vec::with_capacity(self.points.len() + 2);
        for p in &self.points[..=first] {
            shifted.push((p.0 - delta, p.1));
        }
        for p in &self.points[last..] {
            shifted.push((p.0 + delta, p.1));
        }
        self.points = clip(&shifted, -c, c);
    }
}

fn interpolate<S: Scalar>(p: (S, S), q: (S, S), x: S) -> S {
    if q.0 == p.0 {
        return p.1.max(q.1);
    }
    p.1 + (q.1 - p.1) * (x - p.0) / (q.0 - p.0)
}

fn clip<S: Scalar>(points: &[(S, S)], lo: S, hi: S) -> Vec<(S, S)> {
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q.0 < lo || p.0 > hi {
            continue;
        }
        if out.is_empty() {
            let x = p.0.max(lo);
            out.push((x, interpolate(p, q, x)));
        }
        if q.0 <= hi {
            out.push(q);
        } else {
            out.push((hi, interpolate(p, q, hi)));
            break;
        }
    }
    out
}

/// Value of the chain program for fixed `c` (and Lipschitz budget `1 − c`).
fn chain_value<S: Scalar>(diff: &[(S, usize)], step: S, c: S) -> S {
    if c <= S::zero() {
        return S::zero();
    }
    let lip = (S::one() - c).max(S::zero());
    let mut value = Concave { points: vec![(-c, S::zero()), (c, S::zero())] };
    let mut first = true;
    for &(mass, gap) in diff {
        if !first {
            value.window_max(lip * step * S::from_usize(gap).expect("gap"), c);
        }
        first = false;
        value.add_linear(mass);
    }
    value.max()
}

/// Golden-section maximization of the concave map `c ↦ chain_value(c)` on `[0, 1]`.
fn solve_grid_program<S: Scalar>(masses: &[S], step: S) -> S {
    // nodes with zero net mass only widen the Lipschitz window
    let mut compact: Vec<(S, usize)> = Vec::new();
    let mut gap = 0usize;
    for &m in masses {
        gap += 1;
        if m != S::zero() {
            compact.push((m, gap));
            gap = 0;
        }
    }
    if compact.is_empty() {
        return S::zero();
    }
    let ratio = S::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (S::zero(), S::one());
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = chain_value(&compact, step, x1);
    let mut f2 = chain_value(&compact, step, x2);
    let mut best = f1.max(f2).max(chain_value(&compact, step, S::one()));
    while b - a > S::tol(1e-12) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = chain_value(&compact, step, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = chain_value(&compact, step, x1);
        }
        best = best.max(f1).max(f2);
    }
    best.max(S::zero())
}

/// Lévy distance `inf{ε : F_μ(x−ε) − ε ≤ F_ν(x) ≤ F_μ(x+ε) + ε for all x}`.
///
/// The band condition is checked exactly at every atom and density breakpoint
/// (including left limits) and, for non-atomic inputs, on 4001 uniform points
/// across the joint support hull.
pub fn levy_distance<S: Scalar>(mu: &Measure<S>, nu: &Measure<S>) -> S {
    let mut anchors: Vec<S> = Vec::new();
    let mut push_measure = |m: &Measure<S>| {
        anchors.extend(m.atoms().iter().map(|a| a.location));
        for p in m.pieces() {
            anchors.extend_from_slice(p.grid());
        }
        for s in m.semicircles() {
            anchors.push(s.center - s.radius);
            anchors.push(s.center + s.radius);
        }
        for q in m.quadratic_edges() {
            anchors.push(q.left());
            anchors.push(q.right());
        }
    };
    push_measure(mu);
    push_measure(nu);
    let lo = mu.left_edge().min(nu.left_edge());
    let hi = mu.right_edge().max(nu.right_edge());
    let fine = 4000usize;
    let continuous = !(mu.is_atomic() && nu.is_atomic());
    if continuous {
        for k in 0..=fine {
            anchors.push(lo + (hi - lo) * S::from_usize(k).unwrap() / S::from_usize(fine).unwrap());
        }
    }
    anchors.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    anchors.dedup();

    let within = |eps: S| -> bool {
        let slack = S::lit(1e-13);
        for &anchor in &anchors {
            for x in [anchor, anchor - eps, anchor + eps] {
                // right values
                let f_nu = nu.cdf(x);
                if mu.cdf(x - eps) - eps > f_nu + slack || f_nu > mu.cdf(x + eps) + eps + slack {
                    return false;
                }
                // left limits
                let f_nu = nu.cdf_left(x);
                if mu.cdf_left(x - eps) - eps > f_nu + slack || f_nu > mu.cdf_left(x + eps) + eps + slack {
                    return false;
                }
            }
        }
        true
    };
    let (mut below, mut above) = (S::zero(), S::one());
    if within(below) {
        return S::zero();
    }
    while above - below > S::tol(1e-12) {
        let mid = S::lit(0.5) * (below + above);
        if within(mid) {
            above = mid;
        } else {
            below = mid;
        }
    }
    above
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let tp = Measure::<f64>::two_point(1.0).unwrap();
        assert!(dudley_distance_default(&tp, &tp).unwrap().abs() < 1e-12);
        assert!(levy_distance(&tp, &tp) < 1e-12);
    }

    #[test]
    fn two_atoms() {
        let a = Measure::<f64>::point_mass(0.0);
        let b = Measure::<f64>::point_mass(2.0);
        assert!((dudley_distance(&a, &b, 0.001).unwrap() - 1.0).abs() < 1e-6);
        let b = Measure::<f64>::point_mass(0.3);
        // analytic value 2t/(2+t)
        assert!((dudley_distance(&a, &b, 0.001).unwrap() - 0.6 / 2.3).abs() < 1e-6);
        assert!((levy_distance(&a, &b) - 0.3).abs() < 1e-10);
    }

    #[test]
    fn hat_masses_conserve_mass_and_mean() {
        let m = Measure::<f64>::semicircle(1.0).unwrap();
        let nodes: Vec<f64> = (0..=500).map(|k| -2.5 + k as f64 * 0.01).collect();
        let masses = hat_masses(&m, &nodes);
        let total: f64 = masses.iter().sum();
        let mean: f64 = masses.iter().zip(&nodes).map(|(w, x)| w * x).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn window_max_matches_brute_force() {
        let mut h = Concave { points: vec![(-1.0, -1.0), (-0.2, 0.5), (0.3, 0.4), (1.0, -2.0)] };
        let eval = |pts: &[(f64, f64)], x: f64| {
            for w in pts.windows(2) {
                if x >= w[0].0 && x <= w[1].0 {
                    return interpolate(w[0], w[1], x);
                }
            }
            f64::NEG_INFINITY
        };
        let original = h.points.clone();
        h.window_max(0.25, 1.0);
        for k in 0..=200 {
            let f = -1.0 + k as f64 * 0.01;
            let mut brute = f64::NEG_INFINITY;
            for j in 0..=2000 {
                let g = -1.0 + j as f64 * 0.001;
                if (g - f).abs() <= 0.25 + 1e-12 {
                    brute = brute.max(eval(&original, g));
                }
            }
            assert!((eval(&h.points, f) - brute).abs() < 5e-3, "f={f}");
        }
    }
}
