//! Sampling of deformed Wigner ensembles and typical-behaviour studies.
//!
//! Large-deviation probabilities decay like `e^{−cN}` and are out of reach of
//! direct sampling except barely above the edge at small `N`;
//! [`tail_probability_naive`] is provided only for that order-of-magnitude
//! comparison.

mod ensemble;

use faer::Side;
use rayon::prelude::*;
use serde::Serialize;

pub use ensemble::{sample_matrix, sample_trial, trial_seed, Deformation, EnsembleSpec, EntryLaw, SampledMatrix, MAX_DIMENSION};

use crate::error::{Error, Result};
use crate::freeconv::FreeConvolution;
use crate::measure::{dudley_distance_default, Measure};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub esd: Measure<f64>,
}

pub fn spectrum(matrix: &SampledMatrix) -> Result<SpectrumSample> {
    let eigenvalues = match matrix {
        SampledMatrix::Real(m) => m.self_adjoint_eigenvalues(Side::Lower),
        SampledMatrix::Complex(m) => m.self_adjoint_eigenvalues(Side::Lower),
    }
    .map_err(|e| Error::IterationFailure { context: format!("self-adjoint eigensolver: {e:?}"), iterations: 0, residual: f64::NAN })?;
    let mut eigenvalues = eigenvalues;
    eigenvalues.sort_by(f64::total_cmp);
    let esd = Measure::empirical(&eigenvalues)?;
    Ok(SpectrumSample { lambda_max: *eigenvalues.last().expect("nonempty"), lambda_min: eigenvalues[0], eigenvalues, esd })
}

/// Per-trial record of [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub dudley_to_fc: f64,
}

/// Dudley distance between the ESD of trial `trial` and the limiting density.
pub fn esd_concentration_trial(spec: &EnsembleSpec, fc: &FreeConvolution<f64>, trial: u64) -> Result<f64> {
    Ok(run_trial(spec, &spec.diagonal()?, fc, trial)?.dudley_to_fc)
}

fn run_trial(spec: &EnsembleSpec, diagonal: &[f64], fc: &FreeConvolution<f64>, trial: u64) -> Result<TrialRecord> {
    let sample = spectrum(&sample_trial(spec, diagonal, trial)?)?;
    Ok(TrialRecord {
        trial,
        lambda_min: sample.lambda_min,
        lambda_max: sample.lambda_max,
        dudley_to_fc: dudley_distance_default(&sample.esd, fc.density())?,
    })
}

/// Runs `trials` independent samples, in trial order.
pub fn simulate(spec: &EnsembleSpec, fc: &FreeConvolution<f64>, trials: u64) -> Result<Vec<TrialRecord>> {
    let diagonal = spec.diagonal()?;
    (0..trials).into_par_iter().map(|t| run_trial(spec, &diagonal, fc, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeSummary {
    pub edge: f64,
    pub mean_offset: f64,
    pub std_offset: f64,
    pub median_offset: f64,
    pub offsets: Vec<f64>,
}

/// Statistics of `λ_max − 𝚛(ρ_sc ⊞ μ_D)` over seeded trials.
pub fn edge_convergence_study(spec: &EnsembleSpec, fc: &FreeConvolution<f64>, trials: u64) -> Result<EdgeSummary> {
    if trials == 0 {
        return Err(Error::Domain("edge study needs at least one trial".into()));
    }
    let diagonal = spec.diagonal()?;
    let edge = fc.right_edge();
    let offsets = (0..trials)
        .into_par_iter()
        .map(|t| Ok(spectrum(&sample_trial(spec, &diagonal, t)?)?.lambda_max - edge))
        .collect::<Result<Vec<f64>>>()?;
    let count = offsets.len() as f64;
    let mean = offsets.iter().sum::<f64>() / count;
    let var = if offsets.len() > 1 { offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (count - 1.0) } else { 0.0 };
    Ok(EdgeSummary { edge, mean_offset: mean, std_offset: var.sqrt(), median_offset: median(&offsets), offsets })
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub exceedances: u64,
    pub trials: u64,
}

/// Fraction of trials with `λ_max ≥ x`, with its binomial standard error.
///
/// Only meaningful where the probability is at least of order `1/trials`,
/// which at speed `N` restricts `x` to a thin window above the edge for
/// small `N`.
pub fn tail_probability_naive(spec: &EnsembleSpec, x: f64, trials: u64) -> Result<TailEstimate> {
    if trials < 100 {
        return Err(Error::Domain(format!("tail estimation needs at least 100 trials, got {trials}")));
    }
    let diagonal = spec.diagonal()?;
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let matrix = sample_trial(spec, &diagonal, t)?;
            if matrix.gershgorin_bound() < x {
                return Ok(0u64);
            }
            Ok(u64::from(spectrum(&matrix)?.lambda_max >= x))
        })
        .collect::<Result<Vec<u64>>>()?;
    let exceedances: u64 = hits.iter().sum();
    let p = exceedances as f64 / trials as f64;
    Ok(TailEstimate { estimate: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), exceedances, trials })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBoundCheck {
    /// `4 exp(n (5 − K/(8√2)))`.
    pub bound: f64,
    pub exceedances: u64,
    pub trials: u64,
    pub passed: bool,
}

pub fn tail_bound(n: usize, k: f64) -> f64 {
    4.0 * (n as f64 * (5.0 - k / (8.0 * std::f64::consts::SQRT_2))).exp()
}

/// Checks that the observed frequency of `λ_max > K` is compatible with the
/// bound, allowing three binomial standard deviations.
pub fn tail_bound_check(spec: &EnsembleSpec, k: f64, trials: u64) -> Result<TailBoundCheck> {
    let diagonal = spec.diagonal()?;
    let d_max = diagonal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(k > 2.0 * d_max) {
        return Err(Error::Domain(format!("K = {k} must exceed 2 max|d_i| = {}", 2.0 * d_max)));
    }
    let bound = tail_bound(spec.n, k);
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let matrix = sample_trial(spec, &diagonal, t)?;
            if matrix.gershgorin_bound() <= k {
                return Ok(0u64);
            }
            Ok(u64::from(spectrum(&matrix)?.lambda_max > k))
        })
        .collect::<Result<Vec<u64>>>()?;
    let exceedances: u64 = hits.iter().sum();
    let frequency = exceedances as f64 / trials.max(1) as f64;
    let capped = bound.min(1.0);
    let slack = 3.0 * (capped * (1.0 - capped) / trials.max(1) as f64).sqrt();
    Ok(TailBoundCheck { bound, exceedances, trials, passed: bound >= 1.0 || frequency <= capped + slack })
}
