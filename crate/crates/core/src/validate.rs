//! End-to-end validation suite behind `wigner-ldp validate`.
//!
//! Each criterion returns a [`CriterionReport`]; numerical failures inside a
//! criterion are reported as failures with the error message as detail.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::mde::{mde_wig_gap, wig_pastur_check};
use crate::measure::quantile_discretize;
use crate::measure::spec::MeasureSpec;
use crate::rate::spherical_j;
use crate::sim::{median, simulate, tail_probability_naive, Deformation, EnsembleSpec, EntryLaw};
use crate::sphint::{free_energy_limit, gaussian_identity_check, spherical_integral_mc, tilted_free_energy_mc, Method};
use crate::{FreeConvolution, Measure, RateContext};

/// Plotted `(x, I^(1)(x))` pairs for `μ_D = ½(δ_{−1} + δ_{+1})`.
pub const FIGURE2_CSV: &str = include_str!("../data/fig2.csv");

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "two-point rate function reproduces the plotted curve"),
    (2, "semicircle deformation matches the closed-form rate"),
    (3, "right edge formula"),
    (4, "beta scaling"),
    (5, "zero deformation regression"),
    (6, "edge identity on random discrete deformations"),
    (7, "matrix Dyson equation versus Pastur equation"),
    (8, "spherical integral limit"),
    (9, "annealed free energy"),
    (10, "ESD concentration"),
    (11, "naive tail probabilities at speed N"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!("{} [{:>2}] {} ({:.1} s): {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title, self.seconds, self.detail)
    }
}

pub fn figure2_points() -> Vec<(f64, f64)> {
    FIGURE2_CSV
        .lines()
        .skip(1)
        .filter_map(|line| {
            let (x, y) = line.split_once(',')?;
            Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
        })
        .collect()
}

/// `𝚛(ρ_sc ⊞ ½(δ_{−a} + δ_a))`.
pub fn two_point_edge(a: f64) -> f64 {
    let root = (8.0 * a * a + 1.0).sqrt();
    (4.0 * a * a - 1.0 + root).powf(1.5) / (2.0 * std::f64::consts::SQRT_2 * a * (root - 1.0))
}

/// Unit-`β` rate for a semicircle deformation of variance `σ²`.
pub fn semicircle_rate(sigma: f64, x: f64) -> f64 {
    let total = 1.0 + sigma * sigma;
    let root = (x * x - 4.0 * total).max(0.0).sqrt();
    if x < 2.0 * sigma + 1.0 / sigma {
        x * root / (4.0 * total) + (2.0 * total.sqrt() / (x + root)).ln()
    } else {
        (x - 2.0 * sigma).powi(2) / 4.0 + (x * root - x * x) / (8.0 * total) + 0.5 * (2.0 * sigma / (x + root)).ln() + 0.5
    }
}

/// `½ ∫_2^x √(t² − 4) dt`.
pub fn zero_deformation_rate(x: f64) -> f64 {
    let primitive = |t: f64| {
        let root = (t * t - 4.0).max(0.0).sqrt();
        0.5 * t * root - 2.0 * (t + root).ln()
    };
    0.5 * (primitive(x) - primitive(2.0))
}

fn verdict(ok: bool, detail: String) -> Result<(bool, String)> {
    Ok((ok, detail))
}

fn figure2() -> Result<(bool, String)> {
    let start = Instant::now();
    let ctx = RateContext::from_measure(Measure::two_point(1.0)?, 1)?;
    let points = figure2_points();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let profile = ctx.rate_at(&xs)?;
    let worst = profile.rows.iter().zip(&points).map(|(r, p)| (r.value_beta1 - p.1).abs()).fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        worst <= 5e-4 && elapsed < 10.0 && points.len() == 111,
        format!("{} points, max deviation {worst:.2e} (tol 5e-4), {elapsed:.2} s", points.len()),
    )
}

fn semicircle_closed_form() -> Result<(bool, String)> {
    let start = Instant::now();
    let ctx = RateContext::from_measure(Measure::semicircle(1.0)?, 1)?;
    let lo = 8f64.sqrt();
    let profile = ctx.rate_profile(lo, 4.1, 100)?;
    let worst = profile.rows.iter().map(|r| (r.value_beta1 - semicircle_rate(1.0, r.x)).abs()).fold(0.0, f64::max);
    let at_xc = ctx.rate(3.0)?.value_beta1;
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-6 && (ctx.x_c() - 3.0).abs() <= 1e-10 && (0.027..=0.030).contains(&at_xc) && elapsed < 10.0,
        format!("max deviation {worst:.2e} (tol 1e-6), x_c = {:.12}, I(x_c) = {at_xc:.5}, {elapsed:.2} s", ctx.x_c()),
    )
}

fn edge_formula() -> Result<(bool, String)> {
    let mut worst_tp = 0.0f64;
    for a in [0.3, 0.5, 1.0, 1.5, 3.0] {
        let fc = FreeConvolution::new(Measure::two_point(a)?)?;
        worst_tp = worst_tp.max((fc.right_edge() - two_point_edge(a)).abs());
    }
    let exact = (1.5 * 3f64.sqrt() - two_point_edge(1.0)).abs();
    let mut worst_sc = 0.0f64;
    for sigma in [0.25, 0.5, 1.0, 2.0] {
        let fc = FreeConvolution::new(Measure::semicircle(sigma)?)?;
        worst_sc = worst_sc.max((fc.right_edge() - 2.0 * (1.0 + sigma * sigma).sqrt()).abs());
    }
    verdict(
        worst_tp <= 1e-8 && worst_sc <= 1e-10 && exact <= 1e-12,
        format!("two-point deviation {worst_tp:.2e}, semicircle deviation {worst_sc:.2e}"),
    )
}

fn beta_scaling() -> Result<(bool, String)> {
    let mut shared = 0.0f64;
    let mut separate = 0.0f64;
    for measure in [Measure::two_point(1.0)?, Measure::semicircle(1.0)?] {
        let one = RateContext::from_measure(measure.clone(), 1)?;
        let two = RateContext::from_measure(measure, 2)?;
        let lo = one.fc().right_edge() - 0.1;
        let hi = one.fc().right_edge() + 1.5;
        let p1 = one.rate_profile(lo, hi, 60)?;
        let p2 = two.rate_profile(lo, hi, 60)?;
        for (a, b) in p1.rows.iter().zip(&p2.rows) {
            if a.value_beta1.is_finite() {
                shared = shared.max((a.value_beta2 - 2.0 * a.value_beta1).abs());
                separate = separate.max((b.value_beta2 / 2.0 - a.value_beta1).abs());
            } else if a.value_beta2.is_finite() || b.value_beta2.is_finite() {
                shared = f64::INFINITY;
            }
        }
    }
    verdict(shared == 0.0 && separate <= 1e-10, format!("shared-computation deviation {shared:e}, separate-run deviation {separate:.2e}"))
}

fn zero_deformation() -> Result<(bool, String)> {
    let ctx = RateContext::from_measure(Measure::point_mass(0.0), 1)?;
    let mut worst = 0.0f64;
    for k in 0..=60 {
        let x = 2.0 + 3.0 * f64::from(k) / 60.0;
        let p = ctx.rate(x)?;
        worst = worst.max((p.value_beta1 - zero_deformation_rate(x)).abs());
        worst = worst.max((p.value_beta2 - 2.0 * zero_deformation_rate(x)).abs());
    }
    verdict(worst <= 1e-8, format!("max deviation {worst:.2e} over 61 points of [2, 5]"))
}

fn random_discrete(rng: &mut ChaCha8Rng) -> Result<Measure> {
    let count = rng.random_range(2..=8);
    let atoms: Vec<(f64, f64)> = (0..count).map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.1..1.0))).collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    Measure::from_atoms(&atoms.iter().map(|&(l, w)| (l, w / total)).collect::<Vec<_>>())
}

fn edge_identity() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mu = random_discrete(&mut rng)?;
        let fc = FreeConvolution::new(mu.clone())?;
        let w = fc.right_edge() - fc.edge_stieltjes();
        let sum: f64 = mu.atoms().iter().map(|a| a.weight / (w - a.location).powi(2)).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    verdict(worst <= 1e-8, format!("max |∫μ_D(dt)/(edge − c − t)² − 1| = {worst:.2e} over 10 measures"))
}

fn mde_pastur() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(5..=80);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let z = Complex::new(rng.random_range(-3.0..3.0), rng.random_range(0.05..2.0));
        worst = worst.max(wig_pastur_check(&d, z)?);
    }
    let mut ratio = 0.0f64;
    let tp = Measure::two_point(1.0)?;
    for n in [50, 100, 200, 400] {
        let d = quantile_discretize(&tp, n, None)?;
        for e in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let gap = mde_wig_gap(&d, Complex::new(e, 1.0))?;
            ratio = ratio.max(gap.gap / gap.budget);
        }
    }
    verdict(worst <= 1e-8 && ratio <= 10.0, format!("max Pastur discrepancy {worst:.2e}, max gap/budget {ratio:.3}"))
}

fn spherical_limit() -> Result<(bool, String)> {
    let start = Instant::now();
    let tp = Measure::two_point(1.0)?;
    let theta = 0.3;
    let target = spherical_j(&tp, theta, 1.0, 1)?;
    let mut biases = Vec::new();
    for (k, n) in [100usize, 400, 1600].into_iter().enumerate() {
        let d = quantile_discretize(&tp, n, None)?;
        let estimate = spherical_integral_mc(&d, theta, 1, 100_000, 80 + k as u64, Method::Tilted)?;
        biases.push((estimate.value_log - target).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let decreasing = biases.windows(2).all(|w| w[1] < w[0]);
    verdict(
        biases[2] <= 0.02 && decreasing && elapsed < 120.0,
        format!("|J_N − J| at N = 100, 400, 1600: {:.2e}, {:.2e}, {:.2e}; {elapsed:.1} s", biases[0], biases[1], biases[2]),
    )
}

fn free_energy() -> Result<(bool, String)> {
    let start = Instant::now();
    let theta = 0.2;
    let mut ok = true;
    let mut parts = Vec::new();
    let presets = [
        ("delta", MeasureSpec::preset("point-mass", &[("location", 0.0)])),
        ("semicircle", MeasureSpec::preset("semicircle", &[("sigma", 1.0)])),
    ];
    for (k, (name, preset)) in presets.into_iter().enumerate() {
        let mu = preset.build()?;
        let spec =
            EnsembleSpec { beta: 1, entry_law: EntryLaw::Gaussian, n: 200, deformation: Deformation::Measure(preset), seed: 90 + k as u64 };
        let limit = free_energy_limit(&mu, theta, 1)?;
        let estimate = tilted_free_energy_mc(&spec, theta, 200, 2000, spec.seed)?;
        let identity = gaussian_identity_check(&spec.diagonal()?, theta, 200, 2000, spec.seed + 10)?;
        ok &= (estimate.estimate - limit).abs() <= 0.03 && identity.z_score.abs() <= 3.0;
        parts.push(format!("{name}: {:.4} vs {limit:.4}, z = {:.2}", estimate.estimate, identity.z_score));
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(ok && elapsed < 300.0, format!("{}; {elapsed:.1} s", parts.join("; ")))
}

fn concentration() -> Result<(bool, String)> {
    let preset = MeasureSpec::preset("two-point", &[("a", 1.0)]);
    let fc = FreeConvolution::new(preset.build()?)?;
    let spec = |law, n, seed| EnsembleSpec { beta: 1, entry_law: law, n, deformation: Deformation::Measure(preset.clone()), seed };
    let mut worst = 0.0f64;
    for law in [EntryLaw::Gaussian, EntryLaw::Rademacher] {
        let records = simulate(&spec(law, 1000, 100), &fc, 20)?;
        worst = records.iter().map(|r| r.dudley_to_fc).fold(worst, f64::max);
    }
    let mut medians = Vec::new();
    for n in [250, 500, 1000] {
        let records = simulate(&spec(EntryLaw::Gaussian, n, 101), &fc, 20)?;
        medians.push(median(&records.iter().map(|r| r.dudley_to_fc).collect::<Vec<_>>()));
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    verdict(
        worst <= 0.02 && decreasing,
        format!(
            "max distance at n = 1000: {worst:.4}; medians at n = 250, 500, 1000: {:.4}, {:.4}, {:.4}",
            medians[0], medians[1], medians[2]
        ),
    )
}

fn naive_tail() -> Result<(bool, String)> {
    let n = 40;
    // Far enough above the edge that the speed-N term outweighs the finite-n
    // prefactor, close enough that naive sampling still sees ~80 exceedances.
    let x = 2.3;
    let spec = EnsembleSpec { beta: 1, entry_law: EntryLaw::Gaussian, n, deformation: Deformation::Diagonal(vec![0.0; n]), seed: 111 };
    let tail = tail_probability_naive(&spec, x, 200_000)?;
    let empirical = -tail.estimate.ln() / n as f64;
    let rate = RateContext::from_measure(Measure::point_mass(0.0), 1)?.rate(x)?.value_beta1;
    let ratio = empirical / rate;
    verdict(
        (0.5..=2.0).contains(&ratio),
        format!(
            "speed-N tail probabilities are not reachable by naive sampling; small-n check at n = {n}, x = {x}: \
             P = {:.2e} ± {:.1e}, −log(P)/n = {empirical:.4}, I = {rate:.4}, ratio {ratio:.2} (allowed 0.5 to 2)",
            tail.estimate, tail.stderr
        ),
    )
}

/// Runs one criterion by number.
pub fn run_criterion(id: u8) -> Option<CriterionReport> {
    let &(_, title) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = match id {
        1 => figure2(),
        2 => semicircle_closed_form(),
        3 => edge_formula(),
        4 => beta_scaling(),
        5 => zero_deformation(),
        6 => edge_identity(),
        7 => mde_pastur(),
        8 => spherical_limit(),
        9 => free_energy(),
        10 => concentration(),
        _ => naive_tail(),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Some(CriterionReport { id, title, passed, detail, seconds: start.elapsed().as_secs_f64() })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.0)).collect()
}
