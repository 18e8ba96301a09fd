use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use num_complex::Complex;
use serde_json::json;
use wigner_ldp::mde::{mde_wig_gap, solve_mde, MdeKind};
use wigner_ldp::measure::quantile_discretize;
use wigner_ldp::measure::spec::MeasureSpec;
use wigner_ldp::output::{format_number, json_number};
use wigner_ldp::rate::{spherical_j, RateBranch};
use wigner_ldp::sim::{median, simulate, EnsembleSpec};
use wigner_ldp::sphint::{spherical_integral_mc, Method};
use wigner_ldp::validate::{figure2_points, run_all, run_criterion, CRITERIA};
use wigner_ldp::{Error, FreeConvolution, MdeProblem, Measure, RateContext};

use super::{Command, KindArg, MethodArg};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    Validation(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Validation(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration: {m}"),
            Failure::Numeric(m) => write!(f, "numerical failure: {m}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidMeasure(_) | Error::Domain(_) | Error::Refused(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

/// File-system problems are configuration errors.
fn io(e: anyhow::Error) -> Failure {
    Failure::Config(format!("{e:#}"))
}

type Outcome = Result<(), Failure>;

fn load_measure(path: &Path) -> Result<Measure, Failure> {
    Ok(MeasureSpec::from_path(path)?.build()?)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).with_context(|| format!("cannot create {}", path.display())).map_err(io)
}

fn read_numbers(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(io)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Failure::Config(format!("{}: {t:?}: {e}", path.display()))))
        .collect()
}

/// Shortest round-trip decimal, with `+inf` for infinity.
fn show(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else {
        format!("{x}")
    }
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::Config(format!("grid must be lo:hi:n, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo = parts[0].parse().map_err(|_| bad())?;
    let hi = parts[1].parse().map_err(|_| bad())?;
    let n = parts[2].parse().map_err(|_| bad())?;
    Ok((lo, hi, n))
}

fn parse_z(text: &str) -> Result<Complex<f64>, Failure> {
    let bad = || Failure::Config(format!("z must be E,eta, got {text:?}"));
    let (re, im) = text.split_once(',').ok_or_else(bad)?;
    Ok(Complex::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?))
}

/// Diagonal from a file or from the quantiles of a measure.
fn diagonal(file: Option<PathBuf>, measure: Option<PathBuf>, n: Option<usize>) -> Result<Vec<f64>, Failure> {
    match (file, measure, n) {
        (Some(path), _, _) => read_numbers(&path),
        (None, Some(path), Some(n)) => Ok(quantile_discretize(&load_measure(&path)?, n, None)?),
        _ => Err(Failure::Config("either a file or --measure with --n is required".into())),
    }
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Edge { measure, beta } => edge(&measure.measure, beta),
        Command::Freeconv { measure, out, eta } => freeconv(&measure.measure, &out, eta),
        Command::Ratefn { measure, beta, x, grid, out } => ratefn(&measure.measure, beta, x, grid, out),
        Command::Profile { out_dir, points } => profile(&out_dir, points),
        Command::Mde { d_file, measure, n, z, kind, tol, out } => mde(diagonal(d_file, measure, n)?, parse_z(&z)?, kind, tol, out),
        Command::Simulate { spec, trials, out, summary } => simulate_cmd(&spec, trials, &out, summary),
        Command::Sphint { eigs_file, measure, n, theta, beta, samples, method, seed } => {
            let limit = match (&eigs_file, &measure) {
                (None, Some(path)) => Some(load_measure(path)?),
                _ => None,
            };
            sphint(diagonal(eigs_file, measure, n)?, limit, theta, beta, samples, method, seed)
        }
        Command::Validate { criteria, json } => validate(&criteria, json),
    }
}

fn edge(path: &Path, beta: u8) -> Outcome {
    let ctx = RateContext::from_measure(load_measure(path)?, beta)?;
    let fc = ctx.fc();
    println!("right_edge = {}", show(fc.right_edge()));
    println!("left_edge = {}", show(fc.left_edge()));
    println!("edge_stieltjes = {}", show(fc.edge_stieltjes()));
    match fc.subordination_point() {
        Some(w) => println!("subordination_point = {}", show(w)),
        None => println!("subordination_point = none (degenerate edge)"),
    }
    println!("theta_c = {} (beta = {beta})", show(ctx.theta_c()));
    println!("x_c = {}", show(ctx.x_c()));
    Ok(())
}

fn freeconv(path: &Path, out: &Path, eta: f64) -> Outcome {
    let fc = FreeConvolution::new(load_measure(path)?)?;
    let mut file = create(out)?;
    fc.write_csv(&mut file, eta)?;
    file.flush().map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;
    println!("right_edge = {}", show(fc.right_edge()));
    println!("left_edge = {}", show(fc.left_edge()));
    Ok(())
}

fn ratefn(path: &Path, beta: u8, x: Option<f64>, grid: Option<String>, out: Option<PathBuf>) -> Outcome {
    let ctx = RateContext::from_measure(load_measure(path)?, beta)?;
    if let Some(x) = x {
        let point = ctx.rate(x)?;
        let value = if beta == 1 { point.value_beta1 } else { point.value_beta2 };
        if point.branch == RateBranch::BelowEdge {
            println!("+inf (below edge {})", show(ctx.fc().right_edge()));
        } else {
            println!("{}", show(value));
            println!("theta_x = {}", show(point.theta_x));
            println!("branch = {}", point.branch);
        }
        return Ok(());
    }
    let (lo, hi, n) = parse_grid(grid.as_deref().unwrap_or_default())?;
    let profile = ctx.rate_profile(lo, hi, n)?;
    match out {
        Some(path) => {
            let mut file = create(&path)?;
            profile.write_csv(&mut file).and_then(|_| file.flush()).map_err(|e| Failure::Config(e.to_string()))?;
        }
        None => profile.write_csv(&mut std::io::stdout().lock()).map_err(|e| Failure::Config(e.to_string()))?,
    }
    Ok(())
}

fn profile(dir: &Path, points: usize) -> Outcome {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).map_err(io)?;
    let semicircle = RateContext::from_measure(Measure::semicircle(1.0)?, 1)?;
    let fig1 = semicircle.rate_profile(8f64.sqrt(), 4.1, points)?;
    let two_point = RateContext::from_measure(Measure::two_point(1.0)?, 1)?;
    let xs: Vec<f64> = figure2_points().iter().map(|p| p.0).collect();
    let fig2 = two_point.rate_at(&xs)?;
    for (name, table) in [("fig1.csv", fig1), ("fig2.csv", fig2)] {
        let path = dir.join(name);
        let mut file = create(&path)?;
        table.write_csv(&mut file).and_then(|_| file.flush()).map_err(|e| Failure::Config(e.to_string()))?;
        println!("wrote {} ({} rows)", path.display(), table.rows.len());
    }
    Ok(())
}

fn mde(d: Vec<f64>, z: Complex<f64>, kind: KindArg, tol: f64, out: Option<PathBuf>) -> Outcome {
    let kind = match kind {
        KindArg::Mde => MdeKind::Mde,
        KindArg::Wig => MdeKind::Wig,
    };
    let solution = solve_mde(&MdeProblem::new(d.clone(), z, kind, tol)?)?;
    if let Some(path) = out {
        let mut file = create(&path)?;
        let write = |file: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(file, "index,m_real,m_imag")?;
            for (i, m) in solution.m.iter().enumerate() {
                writeln!(file, "{i},{},{}", format_number(m.re), format_number(m.im))?;
            }
            file.flush()
        };
        write(&mut file).map_err(|e| Failure::Config(e.to_string()))?;
    }
    let gap = mde_wig_gap(&d, z)?;
    println!(
        "residual = {:e}, iterations = {}, trace = {} + {}i, gap = {:e}, budget = {:e}",
        solution.residual, solution.iterations, solution.normalized_trace.re, solution.normalized_trace.im, gap.gap, gap.budget
    );
    Ok(())
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let position = p * (sorted.len() - 1) as f64;
    let low = position.floor() as usize;
    let high = position.ceil() as usize;
    sorted[low] + (sorted[high] - sorted[low]) * (position - low as f64)
}

fn column_summary(values: Vec<f64>) -> serde_json::Value {
    let mut sorted = values;
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    json!({
        "mean": json_number(mean),
        "q05": json_number(quantile(&sorted, 0.05)),
        "median": json_number(median(&sorted)),
        "q95": json_number(quantile(&sorted, 0.95)),
    })
}

fn simulate_cmd(spec_path: &Path, trials: u64, out: &Path, summary: Option<PathBuf>) -> Outcome {
    if trials == 0 {
        return Err(Failure::Config("--trials must be positive".into()));
    }
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("cannot read {}", spec_path.display())).map_err(io)?;
    let spec = EnsembleSpec::from_json(&text)?;
    let fc = FreeConvolution::new(spec.limiting_measure()?)?;
    let records = simulate(&spec, &fc, trials)?;
    let mut file = create(out)?;
    let write = |file: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(file, "trial,lambda_min,lambda_max,dudley_to_fc")?;
        for r in &records {
            writeln!(
                file,
                "{},{},{},{}",
                r.trial,
                format_number(r.lambda_min),
                format_number(r.lambda_max),
                format_number(r.dudley_to_fc)
            )?;
        }
        file.flush()
    };
    write(&mut file).map_err(|e| Failure::Config(e.to_string()))?;
    let report = json!({
        "n": spec.n,
        "beta": spec.beta,
        "trials": trials,
        "right_edge": json_number(fc.right_edge()),
        "lambda_min": column_summary(records.iter().map(|r| r.lambda_min).collect()),
        "lambda_max": column_summary(records.iter().map(|r| r.lambda_max).collect()),
        "dudley_to_fc": column_summary(records.iter().map(|r| r.dudley_to_fc).collect()),
    });
    let text = serde_json::to_string_pretty(&report).expect("serializable");
    match summary {
        Some(path) => std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display())).map_err(io)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn sphint(eigs: Vec<f64>, limit: Option<Measure>, theta: f64, beta: u8, samples: usize, method: MethodArg, seed: u64) -> Outcome {
    let method = match method {
        MethodArg::Naive => Method::Naive,
        MethodArg::Tilted => Method::Tilted,
    };
    let estimate = spherical_integral_mc(&eigs, theta, beta, samples, seed, method)?;
    let nu = match limit {
        Some(mu) => mu,
        None => Measure::empirical(&eigs)?,
    };
    let analytic = spherical_j(&nu, theta, nu.right_edge(), beta)?;
    println!("J_N = {}", show(estimate.value_log));
    println!("stderr = {:e}", estimate.stderr_log);
    println!("J = {}", show(analytic));
    Ok(())
}

fn validate(criteria: &[u8], json_path: Option<PathBuf>) -> Outcome {
    for id in criteria {
        if !CRITERIA.iter().any(|c| c.0 == *id) {
            return Err(Failure::Config(format!("unknown criterion {id}")));
        }
    }
    let reports = if criteria.is_empty() { run_all() } else { criteria.iter().filter_map(|&id| run_criterion(id)).collect() };
    for report in &reports {
        println!("{}", report.line());
    }
    if let Some(path) = json_path {
        let text = serde_json::to_string_pretty(&reports).expect("serializable");
        std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display())).map_err(io)?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("criteria {}", failed.join(", "))))
    }
}
