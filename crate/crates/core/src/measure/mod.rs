//! Compactly supported probability measures on the real line.
//!
//! A [`Measure`] is a finite mixture of four component kinds:
//!
//! * weighted atoms,
//! * piecewise-linear densities on a strictly increasing grid,
//! * semicircle laws with explicit center and radius,
//! * densities vanishing quadratically at one end ([`QuadraticEdge`]).
//!
//! Every integral transform used downstream (Stieltjes transform, its
//! derivative, log potential, CDF, first moment) has a closed form on each
//! component, so no quadrature error enters the core transforms.

mod distance;
mod quadratic;
mod quantile;
pub mod spec;
mod transform;

pub use distance::{dudley_distance, dudley_distance_default, levy_distance};
pub use quadratic::{QuadraticEdge, VanishingSide};
pub use quantile::quantile_discretize;
pub use transform::{Argument, Branch, TransformValue};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point mass `weight * δ_location`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<S> {
    pub location: S,
    pub weight: S,
}

/// A density interpolated linearly between grid samples and zero outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPiece<S> {
    grid: Vec<S>,
    values: Vec<S>,
    /// Mass accumulated from `grid[0]` up to `grid[i]`.
    cumulative: Vec<S>,
}

/// `weight` times the semicircle law of the given center and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Semicircle<S> {
    pub center: S,
    pub radius: S,
    pub weight: S,
}

/// Component lists accepted by [`Measure::from_components`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Components<S> {
    pub atoms: Vec<Atom<S>>,
    pub pieces: Vec<DensityPiece<S>>,
    pub semicircles: Vec<Semicircle<S>>,
    pub quadratic_edges: Vec<QuadraticEdge<S>>,
}

/// A compactly supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure<S> {
    atoms: Vec<Atom<S>>,
    atom_cumulative: Vec<S>,
    atom_moment: Vec<S>,
    pieces: Vec<DensityPiece<S>>,
    semicircles: Vec<Semicircle<S>>,
    quadratic_edges: Vec<QuadraticEdge<S>>,
    left_edge: S,
    right_edge: S,
}

const MASS_REJECT: f64 = 1e-8;

impl<S: Scalar> DensityPiece<S> {
    /// Builds a piece, dropping leading and trailing zero segments.
    pub fn new(grid: Vec<S>, values: Vec<S>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidMeasure(format!("density grid has {} points but {} values", grid.len(), values.len())));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidMeasure("density grid needs at least two points".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMeasure("density grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= S::zero()) || !v.is_finite()) {
            return Err(Error::InvalidMeasure("density values must be finite and nonnegative".into()));
        }
        let mut start = 0;
        while start + 1 < values.len() && values[start] == S::zero() && values[start + 1] == S::zero() {
            start += 1;
        }
        let mut end = values.len();
        while end > start + 2 && values[end - 1] == S::zero() && values[end - 2] == S::zero() {
            end -= 1;
        }
        let grid = grid[start..end].to_vec();
        let values = values[start..end].to_vec();
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = S::zero();
        cumulative.push(acc);
        for i in 1..grid.len() {
            acc = acc + S::lit(0.5) * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
            cumulative.push(acc);
        }
        Ok(Self { grid, values, cumulative })
    }

    pub fn grid(&self) -> &[S] {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn mass(&self) -> S {
        *self.cumulative.last().expect("non-empty grid")
    }

    fn scaled(&self, factor: S) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| *v * factor).collect(),
            cumulative: self.cumulative.iter().map(|v| *v * factor).collect(),
        }
    }

    fn left(&self) -> S {
        self.grid[0]
    }

    fn right(&self) -> S {
        self.grid[self.grid.len() - 1]
    }

    /// Linear interpolation of the density (zero outside the grid).
    pub fn density_at(&self, x: S) -> S {
        if x < self.left() || x > self.right() {
            return S::zero();
        }
        let i = segment_index(&self.grid, x);
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        let t = (x - a) / (b - a);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    fn cdf(&self, x: S) -> S {
        if x <= self.left() {
            return S::zero();
        }
        if x >= self.right() {
            return self.mass();
        }
        let i = segment_index(&self.grid, x);
        let a = self.grid[i];
        self.cumulative[i] + S::lit(0.5) * (x - a) * (self.values[i] + self.density_at(x))
    }

    /// `∫_{-∞}^{x} t p(t) dt`.
    fn first_moment_cdf(&self, x: S) -> S {
        let upper = x.min(self.right());
        if upper <= self.left() {
            return S::zero();
        }
        let mut total = S::zero();
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            if a >= upper {
                break;
            }
            let hi = b.min(upper);
            let pa = self.values[i];
            let slope = (self.values[i + 1] - pa) / (b - a);
            // p(t) = pa + slope (t - a); integrate t p(t) over [a, hi]
            let h = hi - a;
            let half = S::lit(0.5);
            let third = S::one() / S::lit(3.0);
            // t = a + s, s in [0, h]: (a + s)(pa + slope s)
            let term = a * pa * h + (a * slope + pa) * half * h * h + slope * third * h * h * h;
            total = total + term;
        }
        total
    }
}

/// Index `i` with `grid[i] <= x <= grid[i + 1]`; `x` must lie within the grid.
fn segment_index<S: Scalar>(grid: &[S], x: S) -> usize {
    let n = grid.len();
    match grid.binary_search_by(|g| g.partial_cmp(&x).expect("finite grid")) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

impl<S: Scalar> Semicircle<S> {
    fn left(&self) -> S {
        self.center - self.radius
    }

    fn right(&self) -> S {
        self.center + self.radius
    }

    fn cdf(&self, x: S) -> S {
        let u = ((x - self.center) / self.radius).max(-S::one()).min(S::one());
        let core = (u * (S::one() - u * u).sqrt() + u.asin()) / S::PI();
        self.weight * (S::lit(0.5) + core)
    }

    fn first_moment_cdf(&self, x: S) -> S {
        let r = self.radius;
        let zeta = (x - self.center).max(-r).min(r);
        let tail = (r * r - zeta * zeta).max(S::zero());
        let centered = -S::lit(2.0) / (S::PI() * r * r) * tail * tail.sqrt() / S::lit(3.0);
        self.weight * centered + self.center * self.cdf(x)
    }

    pub fn density_at(&self, x: S) -> S {
        let zeta = x - self.center;
        let r = self.radius;
        if zeta.abs() >= r {
            return S::zero();
        }
        self.weight * S::lit(2.0) / (S::PI() * r * r) * (r * r - zeta * zeta).sqrt()
    }
}

impl<S: Scalar> Measure<S> {
    /// Assembles a measure from its components.
    ///
    /// The total mass must equal one within `1e-8`; the components are then
    /// rescaled so that it does to working precision.
    pub fn new(atoms: Vec<Atom<S>>, pieces: Vec<DensityPiece<S>>, semicircles: Vec<Semicircle<S>>) -> Result<Self> {
        Self::from_components(Components { atoms, pieces, semicircles, quadratic_edges: Vec::new() })
    }

    /// As [`Measure::new`], from a full component list.
    pub fn from_components(components: Components<S>) -> Result<Self> {
        let Components { mut atoms, pieces, semicircles, quadratic_edges } = components;
        for a in &atoms {
            if !(a.weight > S::zero()) || !a.location.is_finite() || !a.weight.is_finite() {
                return Err(Error::InvalidMeasure("atom weights must be positive and finite".into()));
            }
        }
        for s in &semicircles {
            if !(s.radius > S::zero()) || !(s.weight > S::zero()) || !s.center.is_finite() {
                return Err(Error::InvalidMeasure("semicircle needs positive radius and weight".into()));
            }
        }
        for q in &quadratic_edges {
            if !(q.width > S::zero()) || !(q.weight > S::zero()) || !q.point.is_finite() || !q.width.is_finite() {
                return Err(Error::InvalidMeasure("quadratic edge needs positive width and weight".into()));
            }
        }
        let pieces: Vec<DensityPiece<S>> = pieces.into_iter().filter(|p| p.mass() > S::zero()).collect();
        let mass = atoms.iter().fold(S::zero(), |acc, a| acc + a.weight)
            + pieces.iter().fold(S::zero(), |acc, p| acc + p.mass())
            + semicircles.iter().fold(S::zero(), |acc, s| acc + s.weight)
            + quadratic_edges.iter().fold(S::zero(), |acc, q| acc + q.weight);
        if !((mass - S::one()).abs() <= S::lit(MASS_REJECT)) {
            return Err(Error::InvalidMeasure(format!("total mass {mass} differs from 1")));
        }
        let scale = S::one() / mass;
        for a in atoms.iter_mut() {
            a.weight = a.weight * scale;
        }
        let pieces: Vec<_> = pieces.iter().map(|p| p.scaled(scale)).collect();
        let semicircles: Vec<_> = semicircles.into_iter().map(|s| Semicircle { weight: s.weight * scale, ..s }).collect();
        let quadratic_edges: Vec<_> = quadratic_edges.into_iter().map(|q| QuadraticEdge { weight: q.weight * scale, ..q }).collect();
        atoms.sort_by(|a, b| a.location.partial_cmp(&b.location).expect("finite atoms"));

        let mut left = S::infinity();
        let mut right = S::neg_infinity();
        for a in &atoms {
            left = left.min(a.location);
            right = right.max(a.location);
        }
        for p in &pieces {
            left = left.min(p.left());
            right = right.max(p.right());
        }
        for s in &semicircles {
            left = left.min(s.left());
            right = right.max(s.right());
        }
        for q in &quadratic_edges {
            left = left.min(q.left());
            right = right.max(q.right());
        }
        if !(left <= right) {
            return Err(Error::InvalidMeasure("measure has no components".into()));
        }
        let mut atom_cumulative = Vec::with_capacity(atoms.len());
        let mut atom_moment = Vec::with_capacity(atoms.len());
        let (mut c, mut m) = (S::zero(), S::zero());
        for a in &atoms {
            c = c + a.weight;
            m = m + a.weight * a.location;
            atom_cumulative.push(c);
            atom_moment.push(m);
        }
        Ok(Self { atoms, atom_cumulative, atom_moment, pieces, semicircles, quadratic_edges, left_edge: left, right_edge: right })
    }

    /// Purely atomic measure from `(location, weight)` pairs.
    pub fn from_atoms(pairs: &[(S, S)]) -> Result<Self> {
        let atoms = pairs.iter().map(|&(location, weight)| Atom { location, weight }).collect();
        Self::new(atoms, Vec::new(), Vec::new())
    }

    /// Empirical measure placing mass `1/n` on each sample.
    pub fn empirical(samples: &[S]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidMeasure("empirical measure of an empty sample".into()));
        }
        let w = S::one() / S::from_usize(samples.len()).expect("sample count");
        let atoms = samples.iter().map(|&location| Atom { location, weight: w }).collect();
        Self::new(atoms, Vec::new(), Vec::new())
    }

    /// Piecewise-linear density on a single grid; values are normalized to unit mass.
    pub fn from_density(grid: Vec<S>, values: Vec<S>) -> Result<Self> {
        let piece = DensityPiece::new(grid, values)?;
        let mass = piece.mass();
        if !(mass > S::zero()) {
            return Err(Error::InvalidMeasure("density has zero mass".into()));
        }
        Self::new(Vec::new(), vec![piece.scaled(S::one() / mass)], Vec::new())
    }

    pub fn point_mass(location: S) -> Self {
        Self::from_atoms(&[(location, S::one())]).expect("valid point mass")
    }

    /// `½(δ_{-a} + δ_{+a})`.
    pub fn two_point(a: S) -> Result<Self> {
        if !(a > S::zero()) {
            return Err(Error::InvalidMeasure("two-point parameter must be positive".into()));
        }
        let half = S::lit(0.5);
        Self::from_atoms(&[(-a, half), (a, half)])
    }

    /// Uniform law on `[lo, hi]`.
    pub fn uniform(lo: S, hi: S) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidMeasure("uniform law needs lo < hi".into()));
        }
        let h = S::one() / (hi - lo);
        Self::from_density(vec![lo, hi], vec![h, h])
    }

    /// Centered semicircle law of variance `sigma²`, supported on `[-2σ, 2σ]`.
    pub fn semicircle(sigma: S) -> Result<Self> {
        if !(sigma > S::zero()) {
            return Err(Error::InvalidMeasure("semicircle sigma must be positive".into()));
        }
        Self::new(Vec::new(), Vec::new(), vec![Semicircle { center: S::zero(), radius: S::lit(2.0) * sigma, weight: S::one() }])
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[DensityPiece<S>] {
        &self.pieces
    }

    pub fn semicircles(&self) -> &[Semicircle<S>] {
        &self.semicircles
    }

    pub fn quadratic_edges(&self) -> &[QuadraticEdge<S>] {
        &self.quadratic_edges
    }

    /// Left end `𝚕(μ)` of the convex hull of the support.
    pub fn left_edge(&self) -> S {
        self.left_edge
    }

    /// Right end `𝚛(μ)` of the convex hull of the support.
    pub fn right_edge(&self) -> S {
        self.right_edge
    }

    pub fn span(&self) -> S {
        self.right_edge - self.left_edge
    }

    pub fn is_atomic(&self) -> bool {
        self.pieces.is_empty() && self.semicircles.is_empty() && self.quadratic_edges.is_empty()
    }

    pub fn total_mass(&self) -> S {
        self.atoms.iter().fold(S::zero(), |acc, a| acc + a.weight)
            + self.pieces.iter().fold(S::zero(), |acc, p| acc + p.mass())
            + self.semicircles.iter().fold(S::zero(), |acc, s| acc + s.weight)
            + self.quadratic_edges.iter().fold(S::zero(), |acc, q| acc + q.weight)
    }

    /// The image of the measure under `t ↦ -t`.
    pub fn reflect(&self) -> Self {
        let atoms = self.atoms.iter().map(|a| Atom { location: -a.location, weight: a.weight }).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let grid = p.grid.iter().rev().map(|g| -*g).collect();
                let values = p.values.iter().rev().copied().collect();
                DensityPiece::new(grid, values).expect("reflected piece")
            })
            .collect();
        let semicircles = self.semicircles.iter().map(|s| Semicircle { center: -s.center, ..*s }).collect();
        let quadratic_edges = self.quadratic_edges.iter().map(|q| q.reflect()).collect();
        Self::from_components(Components { atoms, pieces, semicircles, quadratic_edges }).expect("reflection preserves validity")
    }

    /// `μ((-∞, x])`.
    pub fn cdf(&self, x: S) -> S {
        let k = self.atoms.partition_point(|a| a.location <= x);
        let atomic = if k == 0 { S::zero() } else { self.atom_cumulative[k - 1] };
        atomic + self.continuous_cdf(x)
    }

    /// `μ((-∞, x))`.
    pub fn cdf_left(&self, x: S) -> S {
        let k = self.atoms.partition_point(|a| a.location < x);
        let atomic = if k == 0 { S::zero() } else { self.atom_cumulative[k - 1] };
        atomic + self.continuous_cdf(x)
    }

    fn continuous_cdf(&self, x: S) -> S {
        self.pieces.iter().fold(S::zero(), |acc, p| acc + p.cdf(x))
            + self.semicircles.iter().fold(S::zero(), |acc, s| acc + s.cdf(x))
            + self.quadratic_edges.iter().fold(S::zero(), |acc, q| acc + q.cdf(x))
    }

    /// `∫_{(-∞, x]} t μ(dt)`.
    pub fn first_moment_cdf(&self, x: S) -> S {
        let k = self.atoms.partition_point(|a| a.location <= x);
        let atomic = if k == 0 { S::zero() } else { self.atom_moment[k - 1] };
        atomic
            + self.pieces.iter().fold(S::zero(), |acc, p| acc + p.first_moment_cdf(x))
            + self.semicircles.iter().fold(S::zero(), |acc, s| acc + s.first_moment_cdf(x))
            + self.quadratic_edges.iter().fold(S::zero(), |acc, q| acc + q.first_moment_cdf(x))
    }

    /// Density of the absolutely continuous part at `x`.
    pub fn density_at(&self, x: S) -> S {
        self.pieces.iter().fold(S::zero(), |acc, p| acc + p.density_at(x))
            + self.semicircles.iter().fold(S::zero(), |acc, s| acc + s.density_at(x))
            + self.quadratic_edges.iter().fold(S::zero(), |acc, q| acc + q.density_at(x))
    }

    pub fn mean(&self) -> S {
        self.first_moment_cdf(self.right_edge)
    }

    /// Variance, by quadrature-free closed forms on each component.
    pub fn variance(&self) -> S {
        let mean = self.mean();
        let mut second = S::zero();
        for a in &self.atoms {
            second = second + a.weight * (a.location - mean).powi(2);
        }
        for p in &self.pieces {
            for i in 0..p.grid.len() - 1 {
                let (a, b) = (p.grid[i] - mean, p.grid[i + 1] - mean);
                let (pa, pb) = (p.values[i], p.values[i + 1]);
                // Simpson is exact for the cubic (t - mean)^2 p(t).
                let mid = S::lit(0.5) * (a + b);
                let pm = S::lit(0.5) * (pa + pb);
                let h = b - a;
                second = second + h / S::lit(6.0) * (a * a * pa + S::lit(4.0) * mid * mid * pm + b * b * pb);
            }
        }
        for s in &self.semicircles {
            let shift = s.center - mean;
            second = second + s.weight * (s.radius * s.radius / S::lit(4.0) + shift * shift);
        }
        for q in &self.quadratic_edges {
            second = second + q.central_second_moment(mean);
        }
        second
    }

    /// Distance from `x` to the nearest atom, if any.
    pub(crate) fn nearest_atom_distance(&self, x: S) -> Option<S> {
        if self.atoms.is_empty() {
            return None;
        }
        let k = self.atoms.partition_point(|a| a.location < x);
        let mut best = S::infinity();
        if k < self.atoms.len() {
            best = best.min((self.atoms[k].location - x).abs());
        }
        if k > 0 {
            best = best.min((self.atoms[k - 1].location - x).abs());
        }
        Some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_unit_mass_and_edges() {
        let sc = Measure::<f64>::semicircle(1.5).unwrap();
        assert!((sc.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!((sc.left_edge(), sc.right_edge()), (-3.0, 3.0));
        assert!((sc.variance() - 2.25).abs() < 1e-12);

        let tp = Measure::<f64>::two_point(0.7).unwrap();
        assert_eq!((tp.left_edge(), tp.right_edge()), (-0.7, 0.7));
        assert!((tp.variance() - 0.49).abs() < 1e-15);

        let u = Measure::<f64>::uniform(0.0, 1.0).unwrap();
        assert!((u.total_mass() - 1.0).abs() < 1e-14);
        assert!((u.variance() - 1.0 / 12.0).abs() < 1e-14);
        assert!((u.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_mass_and_grids() {
        assert!(Measure::<f64>::from_atoms(&[(0.0, 0.5)]).is_err());
        assert!(DensityPiece::<f64>::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(DensityPiece::<f64>::new(vec![0.0, 1.0], vec![-1.0, 1.0]).is_err());
        assert!(Measure::<f64>::from_atoms(&[(0.0, 0.5), (1.0, 0.5 + 1e-10)]).is_ok());
    }

    #[test]
    fn trailing_zero_segments_are_trimmed() {
        let m = Measure::<f64>::from_density(vec![-1.0, 0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.left_edge(), 0.0);
        assert_eq!(m.right_edge(), 2.0);
    }

    #[test]
    fn cdf_handles_atoms_and_densities() {
        let tp = Measure::<f64>::two_point(1.0).unwrap();
        assert_eq!(tp.cdf(-1.0), 0.5);
        assert_eq!(tp.cdf_left(-1.0), 0.0);
        assert_eq!(tp.cdf(0.3), 0.5);
        assert_eq!(tp.cdf(1.0), 1.0);

        let sc = Measure::<f64>::semicircle(1.0).unwrap();
        assert!((sc.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((sc.cdf(2.0) - 1.0).abs() < 1e-15);
        assert!(sc.first_moment_cdf(2.0).abs() < 1e-15);
    }

    #[test]
    fn reflection_swaps_edges() {
        let m = Measure::<f64>::from_atoms(&[(-0.5, 0.25), (2.0, 0.75)]).unwrap();
        let r = m.reflect();
        assert_eq!((r.left_edge(), r.right_edge()), (-2.0, 0.5));
        assert!((r.mean() + m.mean()).abs() < 1e-15);
    }
}
