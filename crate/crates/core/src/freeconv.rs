//! The free convolution `ρ_sc ⊞ μ_D` of the unit semicircle with a measure.
//!
//! Its Stieltjes transform solves the Pastur equation `G(z) = G_D(z − G(z))`.
//! Equivalently the subordination point `ω(z) = z − G(z)` solves
//! `ω + G_D(ω) = z`, which on the real axis above the support is a strictly
//! increasing scalar equation.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::numeric::{extrapolate_to_zero, integrate, newton_bracketed};
use crate::output::format_number;
use crate::scalar::Scalar;

/// Default density-grid size.
pub const DEFAULT_POINTS: usize = 4001;
/// Default imaginary parts for density inversion, extrapolated to zero.
pub const DEFAULT_ETAS: [f64; 3] = [1e-7, 1e-8, 1e-9];

const DEGENERACY_SLACK: f64 = 1e-10;
const ROUTE_AGREEMENT: f64 = 1e-4;
const MAX_STAGE_ITERATIONS: usize = 500;
const REFINE_ROUNDS: usize = 40;
const REFINE_CELL_TOL: f64 = 1e-11;
const REFINE_MIN_WIDTH: f64 = 1e-12;

/// One edge of the free convolution and the quantities that characterize it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeInfo<S> {
    pub edge: S,
    /// `G_fc` at the edge.
    pub stieltjes: S,
    /// Solution `w*` of `∫ μ_D(dt)/(w − t)² = 1` outside the support, if any.
    pub subordination_point: Option<S>,
    pub degenerate: bool,
}

impl<S: Scalar> EdgeInfo<S> {
    fn mirrored(self) -> Self {
        Self {
            edge: -self.edge,
            stieltjes: -self.stieltjes,
            subordination_point: self.subordination_point.map(|w| -w),
            degenerate: self.degenerate,
        }
    }
}

/// Right edge of `ρ_sc ⊞ base`.
pub fn right_edge<S: Scalar>(base: &Measure<S>) -> EdgeInfo<S> {
    let r = base.right_edge();
    let limit = base.right_edge_inverse_square();
    if limit <= S::one() + S::lit(DEGENERACY_SLACK) {
        let c = base.right_edge_stieltjes();
        return EdgeInfo { edge: r + c, stieltjes: c, subordination_point: None, degenerate: true };
    }
    // ∫ μ(dt)/(w − t)² ≤ (w − r)^{-2}, so the root lies below r + 1
    let lo = r.max(base.left_edge() + S::one());
    let hi = r + S::one();
    let w = crate::numeric::bisect(
        |w| {
            if w <= r {
                S::one()
            } else {
                base.inverse_square_real(w).unwrap_or(S::infinity()) - S::one()
            }
        },
        lo,
        hi,
        S::epsilon() * (S::one() + hi.abs()),
    );
    let c = base.stieltjes_real(w).expect("w* lies above the support");
    EdgeInfo { edge: w + c, stieltjes: c, subordination_point: Some(w), degenerate: false }
}

/// Left edge of `ρ_sc ⊞ base`, by mirroring.
pub fn left_edge<S: Scalar>(base: &Measure<S>) -> EdgeInfo<S> {
    right_edge(&base.reflect()).mirrored()
}

/// Solution of the Pastur equation with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PasturSolution<S> {
    pub value: Complex<S>,
    pub residual: S,
    pub iterations: usize,
}

/// Subordination point `ω(x) > w*` with `ω + G_D(ω) = x`, for real `x ≥ edge`.
fn real_subordination<S: Scalar>(base: &Measure<S>, info: &EdgeInfo<S>, x: S) -> S {
    if x == info.edge {
        return info.edge - info.stieltjes;
    }
    let r = base.right_edge();
    let lo = info.subordination_point.unwrap_or(r);
    let edge_value = base.right_edge_stieltjes();
    let edge_slope = base.right_edge_inverse_square();
    newton_bracketed(
        |w| {
            if w <= r {
                (r + edge_value - x, S::one() - edge_slope)
            } else {
                let g = base.stieltjes_real(w).expect("above support");
                let d = base.inverse_square_real(w).expect("above support");
                (w + g - x, S::one() - d)
            }
        },
        lo,
        x,
        S::epsilon() * S::lit(2.0) * (S::one() + x.abs()),
    )
}

fn residual<S: Scalar>(base: &Measure<S>, z: Complex<S>, g: Complex<S>) -> S {
    (g - base.stieltjes_complex(z - g)).norm()
}

/// Newton iteration on `g ↦ g − G_D(z − g)` with damped fixed-point fallback.
fn refine<S: Scalar>(base: &Measure<S>, z: Complex<S>, start: Complex<S>, tol: S) -> (Complex<S>, S, usize, bool) {
    let half = S::lit(0.5);
    let mut g = start;
    if g.im > S::zero() {
        g.im = -g.im;
    }
    let mut gd = base.stieltjes_complex(z - g);
    let mut res = (g - gd).norm();
    for it in 0..MAX_STAGE_ITERATIONS {
        if res < tol {
            return (g, res, it, true);
        }
        let slope = Complex::new(S::one(), S::zero()) - base.inverse_square_complex(z - g);
        let newton = g - (g - gd) / slope;
        let mut accepted = false;
        if newton.re.is_finite() && newton.im.is_finite() && newton.im <= S::zero() {
            let gd_new = base.stieltjes_complex(z - newton);
            let res_new = (newton - gd_new).norm();
            if res_new < res {
                g = newton;
                gd = gd_new;
                res = res_new;
                accepted = true;
            }
        }
        if !accepted {
            g = (g + gd) * half;
            gd = base.stieltjes_complex(z - g);
            res = (g - gd).norm();
        }
    }
    (g, res, MAX_STAGE_ITERATIONS, res < tol)
}

/// `G_{ρ_sc ⊞ base}(z)` for `Im z > 0` or real `z` outside the support.
///
/// Complex arguments are reached by continuation down a ladder of imaginary
/// parts, starting from the large-`|z|` asymptote `1/z`.
pub fn pastur_stieltjes<S: Scalar>(base: &Measure<S>, z: Complex<S>, tol: S) -> Result<PasturSolution<S>> {
    if z.im < S::zero() {
        return Err(Error::Domain(format!("Pastur argument {z} is in the lower half-plane")));
    }
    if z.im == S::zero() {
        return pastur_real(base, z.re);
    }
    let top = S::lit(2.0);
    let mut eta = z.im.max(top);
    let mut g = Complex::new(z.re, eta).inv();
    let mut iterations = 0;
    let loose = S::tol(1e-8).max(tol);
    loop {
        let stage = Complex::new(z.re, eta);
        let last = eta <= z.im;
        let (next, res, its, ok) = refine(base, stage, g, if last { tol } else { loose });
        iterations += its;
        g = next;
        if last {
            if !ok {
                return Err(Error::IterationFailure { context: format!("Pastur equation at z = {z}"), iterations, residual: res.as_f64() });
            }
            return Ok(PasturSolution { value: g, residual: res, iterations });
        }
        eta = (eta * S::lit(0.25)).max(z.im);
    }
}

/// Same as [`pastur_stieltjes`] but iterating directly from `start`.
pub fn pastur_stieltjes_from<S: Scalar>(base: &Measure<S>, z: Complex<S>, tol: S, start: Complex<S>) -> Result<PasturSolution<S>> {
    if !(z.im > S::zero()) {
        return Err(Error::Domain(format!("continuation start needs Im z > 0, got {z}")));
    }
    let (g, res, iterations, ok) = refine(base, z, start, tol);
    if !ok {
        return Err(Error::IterationFailure { context: format!("Pastur equation at z = {z}"), iterations, residual: res.as_f64() });
    }
    Ok(PasturSolution { value: g, residual: res, iterations })
}

fn pastur_real<S: Scalar>(base: &Measure<S>, x: S) -> Result<PasturSolution<S>> {
    let right = right_edge(base);
    if x >= right.edge {
        let w = real_subordination(base, &right, x);
        let g = x - w;
        let res = residual(base, Complex::new(x, S::zero()), Complex::new(g, S::zero()));
        return Ok(PasturSolution { value: Complex::new(g, S::zero()), residual: res, iterations: 0 });
    }
    let reflected = base.reflect();
    let left = right_edge(&reflected);
    if -x >= left.edge {
        let w = real_subordination(&reflected, &left, -x);
        let g = w + x;
        let res = residual(base, Complex::new(x, S::zero()), Complex::new(g, S::zero()));
        return Ok(PasturSolution { value: Complex::new(g, S::zero()), residual: res, iterations: 0 });
    }
    Err(Error::Domain(format!("real argument {x} lies in the support hull [{}, {}]", -left.edge, right.edge)))
}

/// Density of `ρ_sc ⊞ base` on a grid clustered towards both edges.
///
/// Each value is `−Im G(E + iη)/π`, extrapolated to `η = 0` across `etas`.
/// Cells are then bisected until linear interpolation is accurate.
pub fn density_grid<S: Scalar>(base: &Measure<S>, n_points: usize, etas: &[S]) -> Result<Measure<S>> {
    let right = right_edge(base);
    let left = left_edge(base);
    density_grid_between(base, &left, &right, n_points, etas)
}

fn density_grid_between<S: Scalar>(
    base: &Measure<S>,
    left: &EdgeInfo<S>,
    right: &EdgeInfo<S>,
    n_points: usize,
    etas: &[S],
) -> Result<Measure<S>> {
    if n_points < 100 {
        return Err(Error::Domain(format!("density grid needs at least 100 points, got {n_points}")));
    }
    if etas.is_empty() || etas.iter().any(|e| !(*e > S::zero())) {
        return Err(Error::Domain("eta sequence must be non-empty and positive".into()));
    }
    let mid = S::lit(0.5) * (left.edge + right.edge);
    let half = S::lit(0.5) * (right.edge - left.edge);
    let last = S::from_usize(n_points - 1).expect("grid size");
    let mut grid: Vec<S> = (0..n_points)
        .map(|k| {
            if k == 0 {
                left.edge
            } else if k == n_points - 1 {
                right.edge
            } else {
                let angle = S::PI() * S::from_usize(k).expect("index") / last;
                mid - half * angle.cos()
            }
        })
        .collect();
    // Points clustered at an edge can coincide in low precision.
    grid.dedup_by(|later, earlier| *later <= *earlier);
    let count = grid.len();
    let tol = S::tol(1e-13);
    let mut values = grid
        .par_iter()
        .enumerate()
        .map(|(k, &e)| {
            if (k == 0 && !left.degenerate) || (k == count - 1 && !right.degenerate) {
                Ok(S::zero())
            } else {
                inverted_density(base, e, etas, tol)
            }
        })
        .collect::<Result<Vec<S>>>()?;
    // bisect cells whose midpoint departs from linear interpolation, which
    // resolves interior edges and cusps the cosine clustering misses
    let cell_tol = S::lit(REFINE_CELL_TOL);
    let min_width = S::lit(REFINE_MIN_WIDTH) * (S::one() + half);
    for _ in 0..REFINE_ROUNDS {
        let candidates: Vec<usize> = (0..grid.len() - 1)
            .filter(|&i| {
                let e = S::lit(0.5) * (grid[i] + grid[i + 1]);
                grid[i + 1] - grid[i] > min_width && e > grid[i] && e < grid[i + 1]
            })
            .collect();
        let mids = candidates
            .par_iter()
            .map(|&i| {
                let e = S::lit(0.5) * (grid[i] + grid[i + 1]);
                inverted_density(base, e, etas, tol).map(|v| (i, e, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut inserts = Vec::new();
        for (i, e, v) in mids {
            let linear = S::lit(0.5) * (values[i] + values[i + 1]);
            if (v - linear).abs() * (grid[i + 1] - grid[i]) > cell_tol {
                inserts.push((i, e, v));
            }
        }
        if inserts.is_empty() {
            break;
        }
        let mut new_grid = Vec::with_capacity(grid.len() + inserts.len());
        let mut new_values = Vec::with_capacity(grid.len() + inserts.len());
        let mut next = inserts.iter().peekable();
        for i in 0..grid.len() {
            new_grid.push(grid[i]);
            new_values.push(values[i]);
            if let Some(&&(j, e, v)) = next.peek() {
                if j == i {
                    new_grid.push(e);
                    new_values.push(v);
                    next.next();
                }
            }
        }
        grid = new_grid;
        values = new_values;
    }
    Measure::from_density(grid, values)
}

fn inverted_density<S: Scalar>(base: &Measure<S>, e: S, etas: &[S], tol: S) -> Result<S> {
    let mut samples = Vec::with_capacity(etas.len());
    let mut previous: Option<Complex<S>> = None;
    for &eta in etas {
        let z = Complex::new(e, eta);
        let sol = match previous {
            Some(start) => pastur_stieltjes_from(base, z, tol, start).or_else(|_| pastur_stieltjes(base, z, tol))?,
            None => pastur_stieltjes(base, z, tol)?,
        };
        previous = Some(sol.value);
        samples.push(-sol.value.im / S::PI());
    }
    Ok(extrapolate_to_zero(etas, &samples).max(S::zero()))
}

/// `ρ_sc ⊞ μ_D` with its edges and a tabulated density.
#[derive(Debug, Clone)]
pub struct FreeConvolution<S> {
    base: Measure<S>,
    density: Measure<S>,
    right: EdgeInfo<S>,
    left: EdgeInfo<S>,
}

impl<S: Scalar> FreeConvolution<S> {
    pub fn new(base: Measure<S>) -> Result<Self> {
        let etas: Vec<S> = DEFAULT_ETAS.iter().map(|e| S::lit(*e)).collect();
        Self::with_grid(base, DEFAULT_POINTS, &etas)
    }

    pub fn with_grid(base: Measure<S>, n_points: usize, etas: &[S]) -> Result<Self> {
        let right = right_edge(&base);
        let left = left_edge(&base);
        let density = density_grid_between(&base, &left, &right, n_points, etas)?;
        Ok(Self { base, density, right, left })
    }

    pub fn base(&self) -> &Measure<S> {
        &self.base
    }

    pub fn density(&self) -> &Measure<S> {
        &self.density
    }

    pub fn right_edge(&self) -> S {
        self.right.edge
    }

    pub fn left_edge(&self) -> S {
        self.left.edge
    }

    pub fn right_edge_info(&self) -> &EdgeInfo<S> {
        &self.right
    }

    pub fn left_edge_info(&self) -> &EdgeInfo<S> {
        &self.left
    }

    /// `G_fc(𝚛)`; the constant `c` of the edge identity.
    pub fn edge_stieltjes(&self) -> S {
        self.right.stieltjes
    }

    pub fn subordination_point(&self) -> Option<S> {
        self.right.subordination_point
    }

    pub fn degenerate(&self) -> bool {
        self.right.degenerate
    }

    fn check_right(&self, x: S) -> Result<()> {
        if x < self.right.edge {
            return Err(Error::Domain(format!("argument {x} is below the right edge {}", self.right.edge)));
        }
        Ok(())
    }

    /// Subordination point `ω(x) = x − G_fc(x)` for `x ≥ 𝚛`.
    pub fn subordination(&self, x: S) -> Result<S> {
        self.check_right(x)?;
        Ok(real_subordination(&self.base, &self.right, x))
    }

    /// `G_fc(x)` for real `x ≥ 𝚛`.
    pub fn stieltjes_real(&self, x: S) -> Result<S> {
        Ok(x - self.subordination(x)?)
    }

    pub fn stieltjes(&self, z: Complex<S>, tol: S) -> Result<PasturSolution<S>> {
        pastur_stieltjes(&self.base, z, tol)
    }

    /// `∫ log(x − y) ρ_fc(dy)` by both routes: `(density quadrature, edge integral)`.
    pub fn log_potential_routes(&self, x: S) -> Result<(S, S)> {
        self.check_right(x)?;
        let by_density = self.density.log_potential(x)?;
        let edge = self.right.edge;
        let c = self.right.stieltjes;
        let anchor = S::lit(0.5) * c * c + self.base.log_potential(edge - c)?;
        // t = edge + u² removes the square-root behaviour of G_fc at the edge
        let span = (x - edge).sqrt();
        let integral = integrate(
            |u: S| {
                let t = edge + u * u;
                S::lit(2.0) * u * (t - real_subordination(&self.base, &self.right, t))
            },
            S::zero(),
            span,
            S::tol(1e-13),
        );
        Ok((by_density, anchor + integral))
    }

    /// `∫ log(x − y) ρ_fc(dy)` for `x ≥ 𝚛`, cross-checked against the density grid.
    pub fn log_potential(&self, x: S) -> Result<S> {
        let (by_density, by_edge) = self.log_potential_routes(x)?;
        // The quadrature route accumulates rounding over the whole grid.
        let agreement = S::lit(ROUTE_AGREEMENT).max(S::epsilon() * S::lit(1e5));
        if (by_density - by_edge).abs() > agreement {
            return Err(Error::Consistency(format!("log potential routes disagree at x = {x}: {by_density} vs {by_edge}")));
        }
        Ok(by_edge)
    }

    /// Writes `E, density, G_real, G_imag` at height `eta` over the density grid.
    pub fn write_csv<W: Write>(&self, out: &mut W, eta: S) -> Result<()> {
        let tol = S::tol(1e-13);
        let grid = self.density.pieces().first().map(|p| p.grid().to_vec()).unwrap_or_default();
        let rows = grid
            .par_iter()
            .map(|&e| pastur_stieltjes(&self.base, Complex::new(e, eta), tol).map(|s| (e, s.value)))
            .collect::<Result<Vec<_>>>()?;
        let io = |e: std::io::Error| Error::Config(format!("write failed: {e}"));
        writeln!(out, "E,density,G_real,G_imag").map_err(io)?;
        for (e, g) in rows {
            writeln!(
                out,
                "{},{},{},{}",
                format_number(e.as_f64()),
                format_number((-g.im / S::PI()).as_f64()),
                format_number(g.re.as_f64()),
                format_number(g.im.as_f64())
            )
            .map_err(io)?;
        }
        Ok(())
    }
}
