//! Monte Carlo for the rank-one spherical integral
//! `I_N(X, θ) = E_e[exp(Nθ⟨e, Xe⟩)]` and for annealed free energies.
//!
//! A uniform unit vector is `e = g/‖g‖` with `g` standard Gaussian (real for
//! `β = 1`, complex for `β = 2`). The tilted estimator draws `g_i` with
//! precision `a_i = 1 + (2θ/β)(v − λ_i)`, where `v` makes `E‖g‖² = N`, and
//! reweights by the exact likelihood ratio. All sums of weights are taken in
//! log space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::{erf, erf_inv};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::numeric::{bisect, log_mean_exp};
use crate::rate::spherical_j;
use crate::sim::{sample_trial, spectrum, trial_seed, EnsembleSpec, EntryLaw};

pub const JACKKNIFE_BLOCKS: usize = 20;
/// `‖e‖_∞ ≤ N^{−3/8}` defines a delocalized unit vector.
pub const DELOCALIZATION_EXPONENT: f64 = 3.0 / 8.0;
const TILT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphIntEstimate {
    /// `J_N = (1/N) log I_N`.
    pub value_log: f64,
    pub stderr_log: f64,
    pub samples: usize,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltCenter {
    pub v: f64,
    pub theta: f64,
    pub beta: u8,
    pub d: Vec<f64>,
    /// `a_i = 1 + (2θ/β)(v − d_i)`.
    pub precisions: Vec<f64>,
    pub residual: f64,
}

fn check_beta(beta: u8) -> Result<()> {
    if beta == 1 || beta == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be 1 or 2, got {beta}")))
    }
}

fn mean_inverse(d: &[f64], scale: f64, v: f64) -> f64 {
    d.iter().map(|&di| 1.0 / (1.0 + scale * (v - di))).sum::<f64>() / d.len() as f64
}

/// Root `v ∈ (d_max − β/(2θ), d_max]` of `(1/N) Σ 1/(1 + (2θ/β)(v − d_i)) = 1`.
pub fn solve_tilt_center(d: &[f64], theta: f64, beta: u8) -> Result<TiltCenter> {
    check_beta(beta)?;
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Domain(format!("tilt center needs θ > 0, got {theta}")));
    }
    if d.is_empty() {
        return Err(Error::Domain("empty spectrum".into()));
    }
    let scale = 2.0 * theta / f64::from(beta);
    let top = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = top - 1.0 / scale;
    let v = if mean_inverse(d, scale, top) >= 1.0 {
        top
    } else {
        // The excess is decreasing in v and blows up at the lower end.
        bisect(|v| if v <= lo { f64::INFINITY } else { mean_inverse(d, scale, v) - 1.0 }, lo, top, f64::EPSILON * (1.0 + top.abs()))
    };
    let precisions: Vec<f64> = d.iter().map(|&di| 1.0 + scale * (v - di)).collect();
    if precisions.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::TiltInfeasible(format!("non-positive precision at θ = {theta}")));
    }
    let residual = (mean_inverse(d, scale, v) - 1.0).abs();
    if residual > TILT_RESIDUAL {
        return Err(Error::TiltInfeasible(format!("tilt equation residual {residual:e} at θ = {theta}; the proposal is too concentrated")));
    }
    Ok(TiltCenter { v, theta, beta, d: d.to_vec(), precisions, residual })
}

/// Draws log weights and delocalization flags for one block.
struct Sampler<'a> {
    eigs: &'a [f64],
    theta: f64,
    beta: u8,
    /// `None` for the naive method.
    precisions: Option<&'a [f64]>,
    log_norm: f64,
}

impl Sampler<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng, moduli: &mut [f64]) -> f64 {
        let n = self.eigs.len() as f64;
        let components = usize::from(self.beta);
        let part_var = 1.0 / f64::from(self.beta);
        for (i, slot) in moduli.iter_mut().enumerate() {
            let precision = self.precisions.map_or(1.0, |p| p[i]);
            let mut sq = 0.0;
            for _ in 0..components {
                let g: f64 = StandardNormal.sample(rng);
                sq += g * g;
            }
            *slot = sq * part_var / precision;
        }
        let norm: f64 = moduli.iter().sum();
        let quad: f64 = moduli.iter().zip(self.eigs).map(|(m, l)| m * l).sum();
        let mut log_weight = n * self.theta * quad / norm;
        if let Some(p) = self.precisions {
            let half_beta = 0.5 * f64::from(self.beta);
            log_weight += self.log_norm + half_beta * moduli.iter().zip(p).map(|(m, a)| (a - 1.0) * m).sum::<f64>();
        }
        log_weight
    }
}

/// Log-sum-exp of a block's weights.
#[derive(Clone, Copy)]
struct BlockSums {
    all: f64,
    count: usize,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.map(|v| (v - top).exp()).sum::<f64>().ln()
}

fn run_blocks(eigs: &[f64], theta: f64, beta: u8, samples: usize, seed: u64, method: Method) -> Result<Vec<BlockSums>> {
    check_beta(beta)?;
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    if eigs.is_empty() || eigs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("eigenvalues must be finite and nonempty".into()));
    }
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("θ must be nonnegative, got {theta}")));
    }
    let center = match method {
        Method::Tilted if theta > 0.0 => Some(solve_tilt_center(eigs, theta, beta)?),
        _ => None,
    };
    let precisions = center.as_ref().map(|c| c.precisions.as_slice());
    let log_norm = precisions.map_or(0.0, |p| -0.5 * f64::from(beta) * p.iter().map(|a| a.ln()).sum::<f64>());
    let sampler = Sampler { eigs, theta, beta, precisions, log_norm };
    let blocks = JACKKNIFE_BLOCKS.min(samples);
    Ok((0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = samples / blocks + usize::from(b < samples % blocks);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, b as u64));
            let mut moduli = vec![0.0; eigs.len()];
            let draws: Vec<f64> = (0..count).map(|_| sampler.draw(&mut rng, &mut moduli)).collect();
            BlockSums { all: log_sum_exp(draws.iter().copied()), count }
        })
        .collect())
}

/// Delete-one-block jackknife of `statistic(Σ_{kept} sums)`.
fn jackknife(blocks: &[BlockSums], statistic: impl Fn(&[BlockSums]) -> f64) -> (f64, f64) {
    let full = statistic(blocks);
    let k = blocks.len();
    if k < 2 {
        return (full, 0.0);
    }
    let leave_out: Vec<f64> = (0..k)
        .map(|skip| {
            let kept: Vec<BlockSums> = blocks.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, b)| *b).collect();
            statistic(&kept)
        })
        .collect();
    if leave_out.iter().any(|v| !v.is_finite()) {
        return (full, f64::INFINITY);
    }
    let mean = leave_out.iter().sum::<f64>() / k as f64;
    let var = (k as f64 - 1.0) / k as f64 * leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

fn log_mean(blocks: &[BlockSums]) -> f64 {
    let total: usize = blocks.iter().map(|b| b.count).sum();
    log_sum_exp(blocks.iter().map(|b| b.all)) - (total as f64).ln()
}

/// Estimates `J_N(θ) = (1/N) log E_e[exp(Nθ⟨e, diag(eigs) e⟩)]`.
pub fn spherical_integral_mc(eigs: &[f64], theta: f64, beta: u8, samples: usize, seed: u64, method: Method) -> Result<SphIntEstimate> {
    if theta == 0.0 {
        check_beta(beta)?;
        return Ok(SphIntEstimate { value_log: 0.0, stderr_log: 0.0, samples, method });
    }
    let blocks = run_blocks(eigs, theta, beta, samples, seed, method)?;
    let n = eigs.len() as f64;
    let (value, stderr) = jackknife(&blocks, log_mean);
    Ok(SphIntEstimate { value_log: value / n, stderr_log: stderr / n, samples, method })
}

/// `θ²/β + J(μ_D, θ, 𝚛(μ_D))`, the limit of `(1/N) log E_X[I_N(X, θ)]` below `θ_c`.
pub fn free_energy_limit(mu_d: &Measure<f64>, theta: f64, beta: u8) -> Result<f64> {
    Ok(theta * theta / f64::from(beta) + spherical_j(mu_d, theta, mu_d.right_edge(), beta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergyEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub matrix_trials: usize,
    pub sphere_samples: usize,
}

/// Per-matrix `log I_N(X_t, θ)` estimates, in trial order.
fn matrix_log_integrals(spec: &EnsembleSpec, theta: f64, matrix_trials: usize, sphere_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let diagonal = spec.diagonal()?;
    let n = spec.n as f64;
    let per_trial = |t: usize| -> Result<f64> {
        let eigs = spectrum(&sample_trial(spec, &diagonal, t as u64)?)?.eigenvalues;
        let inner = spherical_integral_mc(&eigs, theta, spec.beta, sphere_samples, trial_seed(seed, t as u64), Method::Tilted)?;
        Ok(inner.value_log * n)
    };
    // Inner estimates already fan out over blocks; the outer loop stays in order.
    (0..matrix_trials).map(per_trial).collect()
}

/// `(1/N) log` of the mean of `exp(values)`, with a delete-one jackknife error.
fn log_mean_with_error(values: &[f64], n: f64) -> (f64, f64) {
    let full = log_mean_exp(values) / n;
    let k = values.len();
    if k < 2 {
        return (full, 0.0);
    }
    let leave_out: Vec<f64> = (0..k)
        .map(|skip| {
            let kept: Vec<f64> = values.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
            log_mean_exp(&kept) / n
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / k as f64;
    let var = (k as f64 - 1.0) / k as f64 * leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// Nested estimate of `(1/N) log E_X[I_N(X, θ)]`.
///
/// Outside the Gaussian law the limit is only known below `θ_c`, so larger
/// tilts are refused.
pub fn tilted_free_energy_mc(
    spec: &EnsembleSpec,
    theta: f64,
    matrix_trials: usize,
    sphere_samples: usize,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    spec.validate()?;
    if matrix_trials == 0 || sphere_samples == 0 {
        return Err(Error::Domain("trial and sample counts must be positive".into()));
    }
    if spec.entry_law != EntryLaw::Gaussian {
        let mu_d = spec.limiting_measure()?;
        let theta_c = 0.5 * f64::from(spec.beta) * mu_d.right_edge_stieltjes();
        if theta >= theta_c {
            return Err(Error::Refused(format!(
                "θ = {theta} is not below θ_c = {theta_c}; for {:?} entries the annealed limit is only established below θ_c",
                spec.entry_law
            )));
        }
    }
    let logs = matrix_log_integrals(spec, theta, matrix_trials, sphere_samples, seed)?;
    let (estimate, stderr) = log_mean_with_error(&logs, spec.n as f64);
    Ok(FreeEnergyEstimate { estimate, stderr, matrix_trials, sphere_samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    /// `(1/N) log E_X[I_N(X, θ)]`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `θ² + (1/N) log I_N(D, θ)`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub z_score: f64,
}

/// Monte Carlo check of `E_X[I_N(X, θ)] = e^{Nθ²} I_N(D, θ)` for the real Gaussian ensemble.
pub fn gaussian_identity_check(d: &[f64], theta: f64, matrix_trials: usize, sphere_samples: usize, seed: u64) -> Result<IdentityCheck> {
    let spec = EnsembleSpec {
        beta: 1,
        entry_law: EntryLaw::Gaussian,
        n: d.len(),
        deformation: crate::sim::Deformation::Diagonal(d.to_vec()),
        seed,
    };
    if theta == 0.0 {
        return Ok(IdentityCheck { lhs: 0.0, lhs_stderr: 0.0, rhs: 0.0, rhs_stderr: 0.0, z_score: 0.0 });
    }
    let lhs = tilted_free_energy_mc(&spec, theta, matrix_trials, sphere_samples, seed)?;
    let total = matrix_trials.saturating_mul(sphere_samples);
    let rhs = spherical_integral_mc(d, theta, 1, total, trial_seed(seed, u64::MAX), Method::Tilted)?;
    let rhs_value = theta * theta + rhs.value_log;
    let spread = lhs.stderr.hypot(rhs.stderr_log);
    let z_score = if spread > 0.0 { (lhs.estimate - rhs_value) / spread } else { 0.0 };
    Ok(IdentityCheck { lhs: lhs.estimate, lhs_stderr: lhs.stderr, rhs: rhs_value, rhs_stderr: rhs.stderr_log, z_score })
}

/// Tilted proposal truncated to the box `|g_i| ≤ bound`.
///
/// A draw is weighted by the exact density of its direction `g/‖g‖`
/// relative to the uniform sphere, so samples outside the delocalized set
/// are simply discarded.
struct BoxProposal<'a> {
    eigs: &'a [f64],
    theta: f64,
    precisions: &'a [f64],
    /// `erf(bound √(a_i/2))`; unused without truncation.
    masses: Vec<f64>,
    bound: f64,
    /// `Σ log masses − ½ Σ log a_i`.
    log_const: f64,
    cutoff: f64,
}

/// Variance of `N(0, 1/a)` conditioned on `|x| ≤ bound`.
fn truncated_variance(precision: f64, bound: f64) -> f64 {
    let c = bound * precision.sqrt();
    let density = (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (1.0 - 2.0 * c * density / erf(c / std::f64::consts::SQRT_2)).max(0.0) / precision
}

impl<'a> BoxProposal<'a> {
    fn new(eigs: &'a [f64], theta: f64, precisions: &'a [f64], cutoff: f64) -> Self {
        let n = eigs.len() as f64;
        // Near zero the box is a cube and the spread tends to √(3/N); boxes
        // are only useful when the cutoff clears that limit.
        let cube = (3.0 / n).sqrt();
        let bound = if cutoff > 1.01 * cube {
            // Leave room for the fluctuation of ‖g‖, of relative size (2N)^{−1/2}.
            let target = (cutoff * (1.0 - 2.0 / (2.0 * n).sqrt())).max(0.5 * (cube + cutoff));
            let spread = |b: f64| b / precisions.iter().map(|&a| truncated_variance(a, b)).sum::<f64>().sqrt();
            // Smaller boxes lose the truncated variance to cancellation.
            let widest = precisions.iter().cloned().fold(0.0, f64::max);
            let lo = 0.02 / widest.sqrt();
            let hi = 4.0 * target * n.sqrt() + 10.0;
            bisect(|b| spread(b) - target, lo, hi, 1e-12)
        } else {
            f64::INFINITY
        };
        let masses: Vec<f64> =
            if bound.is_finite() { precisions.iter().map(|&a| erf(bound * (0.5 * a).sqrt())).collect() } else { vec![1.0; eigs.len()] };
        let log_const = masses.iter().map(|m| m.ln()).sum::<f64>() - 0.5 * precisions.iter().map(|a| a.ln()).sum::<f64>();
        Self { eigs, theta, precisions, masses, bound, log_const, cutoff }
    }

    /// Log weight of one draw, `None` outside the delocalized set.
    fn draw(&self, rng: &mut ChaCha8Rng, g: &mut [f64]) -> Option<f64> {
        for ((slot, &a), &mass) in g.iter_mut().zip(self.precisions).zip(&self.masses) {
            let unit = if self.bound.is_finite() {
                std::f64::consts::SQRT_2 * erf_inv(rng.random_range(-mass..mass))
            } else {
                StandardNormal.sample(rng)
            };
            *slot = unit / a.sqrt();
        }
        let norm_sq: f64 = g.iter().map(|x| x * x).sum();
        let max_sq = g.iter().map(|x| x * x).fold(0.0, f64::max);
        if max_sq > self.cutoff * self.cutoff * norm_sq {
            return None;
        }
        let n = self.eigs.len() as f64;
        let quad = g.iter().zip(self.eigs).map(|(x, l)| x * x * l).sum::<f64>() / norm_sq;
        let spread = g.iter().zip(self.precisions).map(|(x, a)| a * x * x).sum::<f64>() / norm_sq;
        let mut log_weight = n * self.theta * quad + self.log_const + 0.5 * n * spread.ln();
        if self.bound.is_finite() {
            // Share of the radial law of the proposal that stays inside the box.
            let edge = spread * self.bound * self.bound * norm_sq / (2.0 * max_sq);
            log_weight -= gamma_lr(0.5 * n, edge).ln();
        }
        Some(log_weight)
    }
}

/// `(1/N) log` of the share of `I_N(D, θ)` carried by delocalized unit vectors.
///
/// Returns `−∞` when no sample is delocalized.
pub fn delocalized_ratio_mc(d: &[f64], theta: f64, samples: usize, seed: u64) -> Result<f64> {
    let blocks = run_blocks(d, theta, 1, samples, seed, Method::Tilted)?;
    let all = log_sum_exp(blocks.iter().map(|b| b.all)) - (samples as f64).ln();
    if theta == 0.0 {
        return Ok(0.0);
    }
    let center = solve_tilt_center(d, theta, 1)?;
    let cutoff = (d.len() as f64).powf(-DELOCALIZATION_EXPONENT);
    let proposal = BoxProposal::new(d, theta, &center.precisions, cutoff);
    let blocks = JACKKNIFE_BLOCKS.min(samples);
    let hits: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let count = samples / blocks + usize::from(b < samples % blocks);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, (blocks + b) as u64));
            let mut g = vec![0.0; d.len()];
            (0..count).filter_map(|_| proposal.draw(&mut rng, &mut g)).collect::<Vec<_>>()
        })
        .collect();
    let delocalized = log_sum_exp(hits.iter().copied()) - (samples as f64).ln();
    Ok((delocalized - all) / d.len() as f64)
}
