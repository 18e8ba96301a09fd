//! Matrix Dyson equation `0 = 1 + (z − D + S[M]) M` for diagonal `D`.
//!
//! Both self-energy operators keep diagonal matrices diagonal, so a solution
//! is stored as its `N` diagonal entries. The solver uses the local-law sign
//! convention `Im m_i > 0`, under which `(1/N) tr M ≈ −G`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::freeconv::pastur_stieltjes;
use crate::measure::Measure;
use crate::numeric::compensated_sum;
use crate::scalar::Scalar;

pub const MAX_ITERATIONS: usize = 10_000;
const DAMPING: f64 = 0.5;
/// Residual target of the solves behind [`wig_pastur_check`] and [`mde_wig_gap`].
pub const CHECK_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdeKind {
    /// `S[M] = (1/N) tr M + M/N`, the exact Wigner self-energy for `β = 1`.
    Mde,
    /// `S[M] = (1/N) tr M`.
    Wig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdeProblem<S> {
    pub d: Vec<S>,
    pub z: Complex<S>,
    pub kind: MdeKind,
    pub tol: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdeSolution<S> {
    pub m: Vec<Complex<S>>,
    pub residual: S,
    pub iterations: usize,
    pub normalized_trace: Complex<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceGap<S> {
    pub gap: S,
    /// `1/(N η²)`.
    pub budget: S,
}

impl<S: Scalar> MdeProblem<S> {
    pub fn new(d: Vec<S>, z: Complex<S>, kind: MdeKind, tol: S) -> Result<Self> {
        let problem = Self { d, z, kind, tol };
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<()> {
        if self.d.is_empty() {
            return Err(Error::Domain("the diagonal must be nonempty".into()));
        }
        if !(self.z.im > S::zero()) {
            return Err(Error::Domain(format!("Im z must be positive, got {}", self.z.im)));
        }
        if !(self.tol > S::zero()) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Per-entry denominators `z − d_i + s + extra_i`.
    fn denominators(&self, m: &[Complex<S>], out: &mut [Complex<S>]) {
        let n = S::from_usize(m.len()).expect("n");
        let s = Complex::new(compensated_sum(m.iter().map(|v| v.re)) / n, compensated_sum(m.iter().map(|v| v.im)) / n);
        for ((slot, &mi), &di) in out.iter_mut().zip(m).zip(&self.d) {
            let extra = match self.kind {
                MdeKind::Mde => mi / n,
                MdeKind::Wig => Complex::new(S::zero(), S::zero()),
            };
            *slot = self.z - di + s + extra;
        }
    }
}

fn residual<S: Scalar>(m: &[Complex<S>], denominators: &[Complex<S>]) -> S {
    m.iter().zip(denominators).map(|(&mi, &den)| (Complex::new(S::one(), S::zero()) + den * mi).norm()).fold(S::zero(), S::max)
}

/// Solves from the standard start `m_i = −1/z`.
pub fn solve_mde<S: Scalar>(problem: &MdeProblem<S>) -> Result<MdeSolution<S>> {
    let start = vec![-problem.z.inv(); problem.d.len()];
    solve_mde_from(problem, &start)
}

/// Damped fixed-point iteration from an arbitrary start with `Im m_i > 0`.
pub fn solve_mde_from<S: Scalar>(problem: &MdeProblem<S>, start: &[Complex<S>]) -> Result<MdeSolution<S>> {
    problem.validate()?;
    if start.len() != problem.d.len() {
        return Err(Error::Domain(format!("start has {} entries, expected {}", start.len(), problem.d.len())));
    }
    if start.iter().any(|v| !(v.im > S::zero())) {
        return Err(Error::Domain("starting point must have positive imaginary parts".into()));
    }
    let damping = S::lit(DAMPING);
    let mut m = start.to_vec();
    let mut den = vec![Complex::new(S::zero(), S::zero()); m.len()];
    let mut res = S::infinity();
    for iteration in 0..=MAX_ITERATIONS {
        problem.denominators(&m, &mut den);
        res = residual(&m, &den);
        if res <= problem.tol {
            let n = S::from_usize(m.len()).expect("n");
            let normalized_trace = Complex::new(compensated_sum(m.iter().map(|v| v.re)) / n, compensated_sum(m.iter().map(|v| v.im)) / n);
            return Ok(MdeSolution { m, residual: res, iterations: iteration, normalized_trace });
        }
        for (mi, &dn) in m.iter_mut().zip(&den) {
            *mi = *mi * (S::one() - damping) - dn.inv() * damping;
        }
    }
    Err(Error::IterationFailure {
        context: format!("matrix Dyson equation at z = {}", problem.z),
        iterations: MAX_ITERATIONS,
        residual: res.as_f64(),
    })
}

/// `|−(1/N) tr M_Wig(z) − G_{ρ_sc ⊞ μ̂_D}(z)|`.
pub fn wig_pastur_check<S: Scalar>(d: &[S], z: Complex<S>) -> Result<S> {
    let tol = S::lit(CHECK_TOL);
    let solution = solve_mde(&MdeProblem::new(d.to_vec(), z, MdeKind::Wig, tol)?)?;
    let empirical = Measure::empirical(d)?;
    let pastur = pastur_stieltjes(&empirical, z, tol)?;
    Ok((-solution.normalized_trace - pastur.value).norm())
}

/// Trace gap between the two self-energies, with the `1/(N η²)` budget.
pub fn mde_wig_gap<S: Scalar>(d: &[S], z: Complex<S>) -> Result<TraceGap<S>> {
    let tol = S::lit(CHECK_TOL);
    let exact = solve_mde(&MdeProblem::new(d.to_vec(), z, MdeKind::Mde, tol)?)?;
    let wig = solve_mde(&MdeProblem::new(d.to_vec(), z, MdeKind::Wig, tol)?)?;
    let n = S::from_usize(d.len()).expect("n");
    Ok(TraceGap { gap: (exact.normalized_trace - wig.normalized_trace).norm(), budget: (n * z.im * z.im).recip() })
}
