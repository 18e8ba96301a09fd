use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::spec::MeasureSpec;
use crate::measure::{quantile_discretize, Measure};

/// Largest dimension accepted by [`EnsembleSpec::validate`].
pub const MAX_DIMENSION: usize = 4096;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryLaw {
    Gaussian,
    Rademacher,
    Uniform,
}

impl EntryLaw {
    /// Unit-variance centered draw.
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            EntryLaw::Gaussian => StandardNormal.sample(rng),
            EntryLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::Uniform => rng.random_range(-SQRT_3..SQRT_3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deformation {
    /// Discretized by its `1/n` quantiles.
    Measure(MeasureSpec),
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub beta: u8,
    pub entry_law: EntryLaw,
    pub n: usize,
    pub deformation: Deformation,
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("ensemble spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta != 1 && self.beta != 2 {
            return Err(Error::Config(format!("beta must be 1 or 2, got {}", self.beta)));
        }
        if self.n == 0 || self.n > MAX_DIMENSION {
            return Err(Error::Config(format!("n must lie in 1..={MAX_DIMENSION}, got {}", self.n)));
        }
        if let Deformation::Diagonal(d) = &self.deformation {
            if d.len() != self.n {
                return Err(Error::Config(format!("diagonal has {} entries but n = {}", d.len(), self.n)));
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("diagonal entries must be finite".into()));
            }
        }
        Ok(())
    }

    /// The limiting deformation measure; for an explicit diagonal, its empirical measure.
    pub fn limiting_measure(&self) -> Result<Measure<f64>> {
        match &self.deformation {
            Deformation::Measure(spec) => spec.build(),
            Deformation::Diagonal(d) => Measure::empirical(d),
        }
    }

    /// The diagonal `D_N`, ascending for measure deformations.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        match &self.deformation {
            Deformation::Measure(spec) => quantile_discretize(&spec.build()?, self.n, None),
            Deformation::Diagonal(d) => Ok(d.clone()),
        }
    }
}

/// Per-trial seed, decorrelated from neighbouring trials.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for row `row` of trial `trial`.
pub(crate) fn row_rng(seed: u64, trial: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
    rng.set_stream(row as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampledMatrix {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

impl SampledMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SampledMatrix::Real(m) => m.nrows(),
            SampledMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn trace(&self) -> f64 {
        let n = self.dim();
        match self {
            SampledMatrix::Real(m) => (0..n).map(|i| m[(i, i)]).sum(),
            SampledMatrix::Complex(m) => (0..n).map(|i| m[(i, i)].re).sum(),
        }
    }

    /// `(1/n) tr X²`.
    pub fn normalized_trace_square(&self) -> f64 {
        let n = self.dim();
        let total: f64 = match self {
            SampledMatrix::Real(m) => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum(),
            SampledMatrix::Complex(m) => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].norm_sqr()).sum(),
        };
        total / n as f64
    }

    /// Largest absolute row sum, an upper bound for every `|λ|`.
    pub fn gershgorin_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| match self {
                SampledMatrix::Real(m) => (0..n).map(|j| m[(i, j)].abs()).sum::<f64>(),
                SampledMatrix::Complex(m) => (0..n).map(|j| m[(i, j)].norm()).sum::<f64>(),
            })
            .fold(0.0, f64::max)
    }
}

/// `X = W/√n + diag(d)` for trial `trial`.
///
/// Row `i` of the upper triangle comes from its own stream, so the result
/// depends only on `(spec.seed, trial)`.
pub fn sample_trial(spec: &EnsembleSpec, diagonal: &[f64], trial: u64) -> Result<SampledMatrix> {
    spec.validate()?;
    let n = spec.n;
    if diagonal.len() != n {
        return Err(Error::Domain(format!("diagonal has {} entries, expected {n}", diagonal.len())));
    }
    let scale = (n as f64).sqrt().recip();
    let law = spec.entry_law;
    match spec.beta {
        1 => {
            let mut m = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                let mut rng = row_rng(spec.seed, trial, i);
                m[(i, i)] = law.draw(&mut rng) * std::f64::consts::SQRT_2 * scale + diagonal[i];
                for j in i + 1..n {
                    let v = law.draw(&mut rng) * scale;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Ok(SampledMatrix::Real(m))
        }
        _ => {
            let mut m = Mat::<c64>::zeros(n, n);
            let half = std::f64::consts::FRAC_1_SQRT_2 * scale;
            for i in 0..n {
                let mut rng = row_rng(spec.seed, trial, i);
                m[(i, i)] = c64::new(law.draw(&mut rng) * scale + diagonal[i], 0.0);
                for j in i + 1..n {
                    let v = c64::new(law.draw(&mut rng) * half, law.draw(&mut rng) * half);
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
            Ok(SampledMatrix::Complex(m))
        }
    }
}

/// Trial 0 of the ensemble.
pub fn sample_matrix(spec: &EnsembleSpec) -> Result<SampledMatrix> {
    sample_trial(spec, &spec.diagonal()?, 0)
}
