//! Stieltjes transform `G(z) = ∫ μ(dt)/(z − t)`, its functional inverse, the
//! R-transform and the logarithmic potential.

use num_complex::Complex;

use super::{DensityPiece, Measure, Semicircle};

use crate::error::{Error, Result};
use crate::numeric::newton_bracketed;
use crate::scalar::Scalar;

/// Distance below which a real argument is treated as sitting on an atom.
const ATOM_GUARD: f64 = 1e-12;

/// Where a transform was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Argument<S> {
    Real(S),
    Complex(Complex<S>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    OutsideSupport,
    UpperHalfPlane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue<S> {
    pub argument: Argument<S>,
    pub value: Complex<S>,
    pub branch: Branch,
}

/// `log(1 + w)` on the principal branch, accurate for small `|w|`.
pub(super) fn complex_log1p<S: Scalar>(w: Complex<S>) -> Complex<S> {
    let two = S::lit(2.0);
    let modulus = S::lit(0.5) * (two * w.re + w.norm_sqr()).ln_1p();
    Complex::new(modulus, w.im.atan2(S::one() + w.re))
}

fn semicircle_sqrt<S: Scalar>(zeta: Complex<S>, radius: S) -> Complex<S> {
    (zeta - radius).sqrt() * (zeta + radius).sqrt()
}

impl<S: Scalar> Semicircle<S> {
    fn stieltjes(&self, z: Complex<S>) -> Complex<S> {
        let zeta = z - self.center;
        let r = self.radius;
        (zeta - semicircle_sqrt(zeta, r)) * (self.weight * S::lit(2.0) / (r * r))
    }

    /// `∫ ρ(dt)/(z − t)²`.
    fn inverse_square(&self, z: Complex<S>) -> Complex<S> {
        let zeta = z - self.center;
        let r = self.radius;
        (zeta / semicircle_sqrt(zeta, r) - S::one()) * (self.weight * S::lit(2.0) / (r * r))
    }

    fn stieltjes_real(&self, x: S) -> S {
        let zeta = x - self.center;
        let r = self.radius;
        let root = ((zeta - r) * (zeta + r)).max(S::zero()).sqrt();
        let scale = self.weight * S::lit(2.0) / (r * r);
        // rationalized to avoid cancellation far from the support
        if zeta > S::zero() {
            scale * r * r / (zeta + root)
        } else {
            scale * (-r * r) / (-zeta + root)
        }
    }

    fn inverse_square_real(&self, x: S) -> S {
        let zeta = x - self.center;
        let r = self.radius;
        let root = ((zeta - r) * (zeta + r)).max(S::zero()).sqrt();
        if root == S::zero() {
            return S::infinity();
        }
        // the unit-weight transform g satisfies |g'| = |g| / root off the support
        self.stieltjes_real(x).abs() / root
    }

    /// `∫ log(x − t) ρ(dt)` for `x ≥ center + radius`.
    fn log_potential(&self, x: S) -> S {
        let u = S::lit(2.0) * (x - self.center) / self.radius;
        let root = (u * u - S::lit(4.0)).max(S::zero()).sqrt();
        let unit = u * (u - root) / S::lit(4.0) + ((u + root) / S::lit(2.0)).ln() - S::lit(0.5);
        self.weight * ((self.radius / S::lit(2.0)).ln() + unit)
    }
}

impl<S: Scalar> DensityPiece<S> {
    fn segments(&self) -> impl Iterator<Item = (S, S, S, S)> + '_ {
        (0..self.grid.len() - 1).map(move |i| (self.grid[i], self.grid[i + 1], self.values[i], self.values[i + 1]))
    }

    fn stieltjes(&self, z: Complex<S>) -> Complex<S> {
        let mut total = Complex::new(S::zero(), S::zero());
        for (a, b, pa, pb) in self.segments() {
            let h = b - a;
            let slope = (pb - pa) / h;
            let at_z = (z - a) * slope + pa;
            let log_ratio = complex_log1p(Complex::new(h, S::zero()) / (z - b));
            total = total + at_z * log_ratio - slope * h;
        }
        total
    }

    fn inverse_square(&self, z: Complex<S>) -> Complex<S> {
        let mut total = Complex::new(S::zero(), S::zero());
        for (a, b, pa, pb) in self.segments() {
            let h = b - a;
            let slope = (pb - pa) / h;
            let at_z = (z - a) * slope + pa;
            let log_ratio = complex_log1p(Complex::new(h, S::zero()) / (z - b));
            let inv = (z - b).inv() - (z - a).inv();
            total = total + at_z * inv - log_ratio * slope;
        }
        total
    }

    /// Real transform outside the piece, or at an endpoint of the piece when
    /// the density vanishes there.
    fn stieltjes_real(&self, x: S) -> S {
        let mut total = S::zero();
        for (a, b, pa, pb) in self.segments() {
            let h = b - a;
            let slope = (pb - pa) / h;
            if x == b {
                total = total + if pb == S::zero() { pa } else { S::infinity() };
                continue;
            }
            if x == a {
                total = total - if pa == S::zero() { pb } else { S::infinity() };
                continue;
            }
            let at_x = pa + slope * (x - a);
            let log_ratio = if x > b { (h / (x - b)).ln_1p() } else { -(h / (a - x)).ln_1p() };
            total = total + at_x * log_ratio - slope * h;
        }
        total
    }

    fn inverse_square_real(&self, x: S) -> S {
        let mut total = S::zero();
        for (a, b, pa, pb) in self.segments() {
            if (x == b || x == a) && (pa > S::zero() || pb > S::zero()) {
                return S::infinity();
            }
            let h = b - a;
            let slope = (pb - pa) / h;
            let at_x = pa + slope * (x - a);
            let log_ratio = if x > b { (h / (x - b)).ln_1p() } else { -(h / (a - x)).ln_1p() };
            total = total + at_x * ((x - b).recip() - (x - a).recip()) - slope * log_ratio;
        }
        total
    }

    /// `∫ log(x − t) p(t) dt` for `x` at or right of the piece.
    fn log_potential(&self, x: S) -> S {
        let half = S::lit(0.5);
        let quarter = S::lit(0.25);
        // antiderivative in u = x - t of (A - slope u) log u
        let primitive = |amp: S, slope: S, u: S| -> S {
            if u == S::zero() {
                return S::zero();
            }
            let lu = u.ln();
            amp * (u * lu - u) - slope * (half * u * u * lu - quarter * u * u)
        };
        let mut total = S::zero();
        for (a, b, pa, pb) in self.segments() {
            let slope = (pb - pa) / (b - a);
            let amp = pa + slope * (x - a);
            total = total + primitive(amp, slope, x - a) - primitive(amp, slope, x - b);
        }
        total
    }
}

impl<S: Scalar> Measure<S> {
    /// `G(z)` for `Im z > 0`, or for real `z` outside the support.
    pub fn stieltjes(&self, argument: Argument<S>) -> Result<TransformValue<S>> {
        match argument {
            Argument::Real(x) => {
                Ok(TransformValue { argument, value: Complex::new(self.stieltjes_real(x)?, S::zero()), branch: Branch::OutsideSupport })
            }
            Argument::Complex(z) if z.im == S::zero() => {
                let value = self.stieltjes_real(z.re)?;
                Ok(TransformValue { argument, value: Complex::new(value, S::zero()), branch: Branch::OutsideSupport })
            }
            Argument::Complex(z) if z.im > S::zero() => {
                Ok(TransformValue { argument, value: self.stieltjes_complex(z), branch: Branch::UpperHalfPlane })
            }
            Argument::Complex(z) => Err(Error::Domain(format!("Stieltjes argument {z} is in the lower half-plane"))),
        }
    }

    /// `G(z)` with no domain checks; `z` must avoid the support.
    pub fn stieltjes_complex(&self, z: Complex<S>) -> Complex<S> {
        let mut total = Complex::new(S::zero(), S::zero());
        for a in &self.atoms {
            total = total + (z - a.location).inv() * a.weight;
        }
        for p in &self.pieces {
            total = total + p.stieltjes(z);
        }
        for s in &self.semicircles {
            total = total + s.stieltjes(z);
        }
        for q in &self.quadratic_edges {
            total = total + q.stieltjes(z);
        }
        total
    }

    /// `∫ μ(dt)/(z − t)² = −G'(z)` with no domain checks.
    pub fn inverse_square_complex(&self, z: Complex<S>) -> Complex<S> {
        let mut total = Complex::new(S::zero(), S::zero());
        for a in &self.atoms {
            let d = z - a.location;
            total = total + (d * d).inv() * a.weight;
        }
        for p in &self.pieces {
            total = total + p.inverse_square(z);
        }
        for s in &self.semicircles {
            total = total + s.inverse_square(z);
        }
        for q in &self.quadratic_edges {
            total = total + q.inverse_square(z);
        }
        total
    }

    fn check_real_argument(&self, x: S) -> Result<()> {
        if let Some(distance) = self.nearest_atom_distance(x) {
            if distance <= S::lit(ATOM_GUARD) {
                return Err(Error::Singularity { argument: x.as_f64(), distance: distance.as_f64() });
            }
        }
        if x >= self.left_edge && x <= self.right_edge {
            return Err(Error::Domain(format!("real argument {x} lies in the support hull [{}, {}]", self.left_edge, self.right_edge)));
        }
        Ok(())
    }

    /// `G(x)` for real `x` outside `[𝚕(μ), 𝚛(μ)]`.
    pub fn stieltjes_real(&self, x: S) -> Result<S> {
        self.check_real_argument(x)?;
        Ok(self.stieltjes_real_unchecked(x))
    }

    fn stieltjes_real_unchecked(&self, x: S) -> S {
        let mut total = S::zero();
        for a in &self.atoms {
            total = total + a.weight / (x - a.location);
        }
        for p in &self.pieces {
            total = total + p.stieltjes_real(x);
        }
        for s in &self.semicircles {
            total = total + s.stieltjes_real(x);
        }
        for q in &self.quadratic_edges {
            total = total + q.stieltjes(Complex::new(x, S::zero())).re;
        }
        total
    }

    /// `∫ μ(dt)/(x − t)²` for real `x` outside the support hull.
    pub fn inverse_square_real(&self, x: S) -> Result<S> {
        self.check_real_argument(x)?;
        Ok(self.inverse_square_unchecked(x))
    }

    fn inverse_square_unchecked(&self, x: S) -> S {
        let mut total = S::zero();
        for a in &self.atoms {
            let d = x - a.location;
            total = total + a.weight / (d * d);
        }
        for p in &self.pieces {
            total = total + p.inverse_square_real(x);
        }
        for s in &self.semicircles {
            total = total + s.inverse_square_real(x);
        }
        for q in &self.quadratic_edges {
            total = total + q.inverse_square(Complex::new(x, S::zero())).re;
        }
        total
    }

    /// `lim_{x↓𝚛(μ)} G(x)`, possibly `+∞`.
    pub fn right_edge_stieltjes(&self) -> S {
        let r = self.right_edge;
        let mut total = S::zero();
        for a in &self.atoms {
            if a.location == r {
                return S::infinity();
            }
            total = total + a.weight / (r - a.location);
        }
        for p in &self.pieces {
            total = total + p.stieltjes_real(r);
        }
        for s in &self.semicircles {
            total = total + if s.right() == r { s.weight * S::lit(2.0) / s.radius } else { s.stieltjes_real(r) };
        }
        for q in &self.quadratic_edges {
            total = total + if q.right() == r { q.right_end_values().0 } else { q.stieltjes(Complex::new(r, S::zero())).re };
        }
        total
    }

    /// `lim_{x↓𝚛(μ)} ∫ μ(dt)/(x − t)²`, possibly `+∞`.
    pub fn right_edge_inverse_square(&self) -> S {
        let r = self.right_edge;
        if self.atoms.last().is_some_and(|a| a.location == r) || self.semicircles.iter().any(|s| s.right() == r) {
            return S::infinity();
        }
        let mut total = S::zero();
        for a in &self.atoms {
            total = total + a.weight / (r - a.location).powi(2);
        }
        for p in &self.pieces {
            total = total + p.inverse_square_real(r);
        }
        for s in &self.semicircles {
            total = total + s.inverse_square_real(r);
        }
        for q in &self.quadratic_edges {
            total = total + if q.right() == r { q.right_end_values().1 } else { q.inverse_square(Complex::new(r, S::zero())).re };
        }
        total
    }

    /// `lim_{x↑𝚕(μ)} G(x)`, possibly `−∞`.
    pub fn left_edge_stieltjes(&self) -> S {
        -self.reflect().right_edge_stieltjes()
    }

    /// Functional inverse `K(y)` of `G` on the real line outside the support.
    pub fn inverse_stieltjes(&self, y: S) -> Result<S> {
        if y == S::zero() || !y.is_finite() {
            return Err(Error::Domain(format!("K is undefined at y = {y}")));
        }
        if y < S::zero() {
            return Ok(-self.reflect().inverse_stieltjes(-y)?);
        }
        let edge_value = self.right_edge_stieltjes();
        let r = self.right_edge;
        if y == edge_value {
            return Ok(r);
        }
        if !(y < edge_value) {
            return Err(Error::Domain(format!("y = {y} exceeds the edge value G(𝚛) = {edge_value}")));
        }
        let lo = r.max(self.left_edge + y.recip());
        let hi = r + y.recip();
        if hi <= lo {
            return Ok(hi);
        }
        let edge_slope = self.right_edge_inverse_square();
        let x = newton_bracketed(
            |x| {
                if x <= r {
                    (edge_value - y, -edge_slope)
                } else {
                    (self.stieltjes_real_unchecked(x) - y, -self.inverse_square_unchecked(x))
                }
            },
            lo,
            hi,
            S::tol(1e-15) * (S::one() + hi.abs()),
        );
        Ok(x)
    }

    /// `R(y) = K(y) − 1/y`.
    pub fn r_transform(&self, y: S) -> Result<S> {
        Ok(self.inverse_stieltjes(y)? - y.recip())
    }

    /// `∫ log(x − t) μ(dt)` for `x ≥ 𝚛(μ)`.
    pub fn log_potential(&self, x: S) -> Result<S> {
        if x < self.right_edge {
            return Err(Error::Domain(format!("log potential needs x ≥ 𝚛 = {}, got {x}", self.right_edge)));
        }
        let mut total = S::zero();
        for a in &self.atoms {
            if a.location == x {
                return Err(Error::Divergence(format!("atom at {x} makes the log potential -∞")));
            }
            total = total + a.weight * (x - a.location).ln();
        }
        for p in &self.pieces {
            total = total + p.log_potential(x);
        }
        for s in &self.semicircles {
            total = total + s.log_potential(x);
        }
        for q in &self.quadratic_edges {
            total = total + q.log_potential(x);
        }
        Ok(total)
    }
}
