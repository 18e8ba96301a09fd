//! Rate functions `I^(β)(x)` for the largest eigenvalue.
//!
//! Write `y = 2θ/β`. For `𝚛_fc < x < x_c` the optimal tilt solves
//! `s + G_D(s) = x` with `s` between `𝚛(μ_D)` and the subordination point
//! `w*`, and then `y = G_D(s)`. Beyond `x_c` the tilt is `y = x − 𝚛(μ_D)`.
//! Every quantity below scales linearly in `β`, so a single unit-`β`
//! evaluation serves both ensembles.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freeconv::FreeConvolution;
use crate::measure::Measure;
use crate::numeric::newton_bracketed;
use crate::output::format_number;
use crate::scalar::Scalar;

/// Relative distance to the edge within which a point counts as the edge.
const EDGE_SNAP: f64 = 1e-13;

fn beta_half<S: Scalar>(beta: u8) -> Result<S> {
    match beta {
        1 | 2 => Ok(S::from_u8(beta).expect("beta") / S::lit(2.0)),
        other => Err(Error::Domain(format!("beta must be 1 or 2, got {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateBranch {
    BelowEdge,
    AtEdge,
    Subcritical,
    Supercritical,
}

impl fmt::Display for RateBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateBranch::BelowEdge => "below-edge",
            RateBranch::AtEdge => "at-edge",
            RateBranch::Subcritical => "subcritical",
            RateBranch::Supercritical => "supercritical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint<S> {
    pub x: S,
    /// Optimal tilt for the context's `β`; `NaN` below the edge.
    pub theta_x: S,
    pub value_beta1: S,
    pub value_beta2: S,
    pub branch: RateBranch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile<S> {
    pub rows: Vec<RatePoint<S>>,
}

impl<S: Scalar> RateProfile<S> {
    /// Writes `x, theta_x, I_beta1, I_beta2, branch`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x,theta_x,I_beta1,I_beta2,branch")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                format_number(row.x.as_f64()),
                format_number(row.theta_x.as_f64()),
                format_number(row.value_beta1.as_f64()),
                format_number(row.value_beta2.as_f64()),
                row.branch
            )?;
        }
        Ok(())
    }
}

/// Thresholds and cached edge data for rate evaluations.
#[derive(Debug, Clone)]
pub struct RateContext<S> {
    fc: FreeConvolution<S>,
    beta: u8,
    g_mud_at_edge: S,
    theta_c: S,
    x_c: S,
    /// `∫ log(𝚛(μ_D) − t) μ_D(dt)`, needed only when `x_c` is finite.
    base_log_at_edge: Option<S>,
}

/// Builds the rate context: `θ_c = (β/2) G_D(𝚛(μ_D))` and `x_c = 𝚛(μ_D) + G_D(𝚛(μ_D))`.
pub fn thresholds<S: Scalar>(fc: FreeConvolution<S>, beta: u8) -> Result<RateContext<S>> {
    RateContext::new(fc, beta)
}

impl<S: Scalar> RateContext<S> {
    pub fn new(fc: FreeConvolution<S>, beta: u8) -> Result<Self> {
        let half = beta_half::<S>(beta)?;
        let base = fc.base();
        let g = base.right_edge_stieltjes();
        let r = base.right_edge();
        let (theta_c, x_c) = if g.is_finite() { (half * g, r + g) } else { (S::infinity(), S::infinity()) };
        let base_log_at_edge = if x_c.is_finite() {
            match base.log_potential(r) {
                Ok(v) => Some(v),
                Err(e) => {
                    return Err(Error::Consistency(format!("finite critical threshold with divergent log potential at the edge: {e}")))
                }
            }
        } else {
            None
        };
        Ok(Self { fc, beta, g_mud_at_edge: g, theta_c, x_c, base_log_at_edge })
    }

    pub fn from_measure(mu_d: Measure<S>, beta: u8) -> Result<Self> {
        Self::new(FreeConvolution::new(mu_d)?, beta)
    }

    /// The same context for the other `β`, sharing the free convolution.
    pub fn with_beta(&self, beta: u8) -> Result<Self> {
        beta_half::<S>(beta)?;
        let half = S::from_u8(beta).expect("beta") / S::lit(2.0);
        let theta_c = if self.g_mud_at_edge.is_finite() { half * self.g_mud_at_edge } else { S::infinity() };
        Ok(Self { beta, theta_c, ..self.clone() })
    }

    pub fn fc(&self) -> &FreeConvolution<S> {
        &self.fc
    }

    pub fn mu_d(&self) -> &Measure<S> {
        self.fc.base()
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    /// `G_D(𝚛(μ_D))`, possibly `+∞`.
    pub fn g_mud_at_edge(&self) -> S {
        self.g_mud_at_edge
    }

    pub fn theta_c(&self) -> S {
        self.theta_c
    }

    pub fn x_c(&self) -> S {
        self.x_c
    }

    fn half(&self) -> S {
        S::from_u8(self.beta).expect("beta") / S::lit(2.0)
    }

    fn classify(&self, x: S) -> RateBranch {
        let edge = self.fc.right_edge();
        let snap = S::lit(EDGE_SNAP) * S::one().max(edge.abs());
        if x < edge - snap {
            RateBranch::BelowEdge
        } else if x <= edge + snap {
            RateBranch::AtEdge
        } else if x < self.x_c {
            RateBranch::Subcritical
        } else {
            RateBranch::Supercritical
        }
    }

    /// Root `s ∈ (𝚛(μ_D), w*)` of `s + G_D(s) = x`, for `𝚛_fc < x < x_c`.
    fn constrained_point(&self, x: S) -> S {
        let base = self.fc.base();
        let r = base.right_edge();
        let upper = self.fc.subordination_point().expect("subcritical points need a non-degenerate edge");
        let excess = self.x_c - x;
        newton_bracketed(
            |s| {
                // A probe within rounding of a top atom counts as the left end.
                match (base.stieltjes_real(s), base.inverse_square_real(s)) {
                    (Ok(g), Ok(d)) if s > r => (s + g - x, S::one() - d),
                    _ => (excess, S::neg_infinity()),
                }
            },
            r,
            upper,
            S::epsilon() * S::lit(2.0) * (S::one() + upper.abs()),
        )
    }

    /// Unit-`β` tilt `y = 2θ_x/β`.
    fn unit_tilt(&self, x: S, branch: RateBranch) -> S {
        match branch {
            RateBranch::BelowEdge => S::nan(),
            RateBranch::AtEdge => self.fc.edge_stieltjes(),
            RateBranch::Subcritical => {
                let s = self.constrained_point(x);
                x - s
            }
            RateBranch::Supercritical => x - self.fc.base().right_edge(),
        }
    }

    /// The optimal tilt `θ_x`.
    pub fn theta_x(&self, x: S) -> Result<S> {
        let branch = self.classify(x);
        if branch == RateBranch::BelowEdge {
            return Err(Error::Domain(format!("x = {x} is below the edge {}", self.fc.right_edge())));
        }
        Ok(self.half() * self.unit_tilt(x, branch))
    }

    /// `I^(β)(x)` for both `β`, with the tilt for this context's `β`.
    pub fn rate(&self, x: S) -> Result<RatePoint<S>> {
        let branch = self.classify(x);
        let tilt = self.unit_tilt(x, branch);
        let unit = match branch {
            RateBranch::BelowEdge => S::infinity(),
            RateBranch::AtEdge => S::zero(),
            RateBranch::Subcritical => {
                let base = self.fc.base();
                let s = x - tilt;
                let log_fc = self.fc.log_potential(x)?;
                tilt * tilt / S::lit(4.0) + S::lit(0.5) * (base.log_potential(s)? - log_fc)
            }
            RateBranch::Supercritical => {
                let r = self.fc.base().right_edge();
                let log_fc = self.fc.log_potential(x)?;
                let log_base = self.base_log_at_edge.expect("finite x_c");
                S::lit(0.5) * ((x - r) * (x - r) / S::lit(2.0) - log_fc + log_base)
            }
        };
        let unit = unit.max(S::zero());
        Ok(RatePoint { x, theta_x: self.half() * tilt, value_beta1: unit, value_beta2: unit * S::lit(2.0), branch })
    }

    /// `∂_θ I(x, θ)`, piecewise over the three phases of `y = 2θ/β`.
    pub fn d_dtheta_i(&self, x: S, theta: S) -> Result<S> {
        if self.classify(x) == RateBranch::BelowEdge {
            return Err(Error::Domain(format!("x = {x} is below the edge {}", self.fc.right_edge())));
        }
        if theta < S::zero() {
            return Err(Error::Domain(format!("theta must be nonnegative, got {theta}")));
        }
        let y = theta / self.half();
        let g_fc = if self.classify(x) == RateBranch::AtEdge { self.fc.edge_stieltjes() } else { self.fc.stieltjes_real(x)? };
        if y <= g_fc {
            return Ok(S::zero());
        }
        let base = self.fc.base();
        if y < self.g_mud_at_edge {
            return Ok(x - y - base.inverse_stieltjes(y)?);
        }
        Ok(x - y - base.right_edge())
    }

    /// Rates on `n` equally spaced points of `[lo, hi]`.
    pub fn rate_profile(&self, lo: S, hi: S, n: usize) -> Result<RateProfile<S>> {
        if n < 2 {
            return Err(Error::Domain("a profile needs at least two points".into()));
        }
        let step = (hi - lo) / S::from_usize(n - 1).expect("n");
        let xs: Vec<S> = (0..n).map(|k| if k == n - 1 { hi } else { lo + step * S::from_usize(k).expect("k") }).collect();
        self.rate_at(&xs)
    }

    /// Rates at arbitrary points, in order.
    pub fn rate_at(&self, xs: &[S]) -> Result<RateProfile<S>> {
        let rows = xs.par_iter().map(|&x| self.rate(x)).collect::<Result<Vec<_>>>()?;
        Ok(RateProfile { rows })
    }
}

/// Limit `J(ν, θ, M)` of the normalized rank-one spherical integral.
///
/// With `y = 2θ/β`: if `y ≤ G_ν(M)` it equals
/// `θ R_ν(y) − (β/2)[log y + ∫ log(K_ν(y) − t) ν(dt)]`; otherwise
/// `θ M − (β/2)[1 + log y] − (β/2) ∫ log(M − t) ν(dt)`.
pub fn spherical_j<S: Scalar>(nu: &Measure<S>, theta: S, m: S, beta: u8) -> Result<S> {
    let half = beta_half::<S>(beta)?;
    if theta < S::zero() {
        return Err(Error::Domain(format!("theta must be nonnegative, got {theta}")));
    }
    if m < nu.right_edge() {
        return Err(Error::Domain(format!("M = {m} is below the right edge {}", nu.right_edge())));
    }
    if theta == S::zero() {
        return Ok(S::zero());
    }
    let y = theta / half;
    let g_at_m = if m == nu.right_edge() { nu.right_edge_stieltjes() } else { nu.stieltjes_real(m)? };
    if y <= g_at_m {
        let k = nu.inverse_stieltjes(y)?;
        let r = k - y.recip();
        return Ok(theta * r - half * (y.ln() + nu.log_potential(k)?));
    }
    Ok(theta * m - half * (S::one() + y.ln()) - half * nu.log_potential(m)?)
}
