use super::Measure;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// CDF slack when locating a level set, so that rounding in accumulated
/// atom weights does not push a quantile past the atom that reaches it.
const LEVEL_SLACK: f64 = 1e-13;

impl<S: Scalar> Measure<S> {
    /// Generalized inverse `inf{x : F(x) ≥ p}` for `p ∈ (0, 1]`.
    pub fn quantile(&self, p: S) -> S {
        let (lo, hi) = (self.left_edge, self.right_edge);
        if p >= S::one() {
            return hi;
        }
        let level = p - S::lit(LEVEL_SLACK);
        if self.cdf(lo) >= level {
            return lo;
        }
        let (mut below, mut above) = (lo, hi);
        let xtol = S::epsilon() * S::lit(4.0) * (S::one() + lo.abs().max(hi.abs()));
        while above - below > xtol {
            let mid = S::lit(0.5) * (below + above);
            if mid <= below || mid >= above {
                break;
            }
            if self.cdf(mid) >= level {
                above = mid;
            } else {
                below = mid;
            }
        }
        let scale = S::one() + above.abs();
        match self.nearest_atom_distance(above) {
            Some(d) if d <= S::lit(1e-12) * scale => self.snap_to_atom(above),
            _ => above,
        }
    }

    fn snap_to_atom(&self, x: S) -> S {
        self.atoms.iter().map(|a| a.location).min_by(|a, b| (*a - x).abs().partial_cmp(&(*b - x).abs()).expect("finite")).unwrap_or(x)
    }
}

/// The `1/n` quantiles `γ_j = inf{x : μ((−∞, x]) ≥ j/n}`, `j = 1..=n`.
///
/// With `top_override = Some(x)` the last quantile is replaced by `x`.
pub fn quantile_discretize<S: Scalar>(mu: &Measure<S>, n: usize, top_override: Option<S>) -> Result<Vec<S>> {
    if n == 0 {
        return Err(Error::Domain("quantile discretization needs n ≥ 1".into()));
    }
    if let Some(top) = top_override {
        if !(top >= mu.right_edge()) {
            return Err(Error::Domain(format!("top override {top} is below the right edge {}", mu.right_edge())));
        }
    }
    let count = S::from_usize(n).expect("count");
    let mut out: Vec<S> = (1..=n).map(|j| mu.quantile(S::from_usize(j).expect("index") / count)).collect();
    if let Some(top) = top_override {
        out[n - 1] = top;
    }
    Ok(out)
}
