//! The four subcommands. Each returns an [`Outcome`]; I/O problems are
//! ordinary errors.

use anyhow::Result;
use log::info;
use rayon::prelude::*;

use matrix_olo::learners::{Adversary, Learner, LearnerConfig};
use matrix_olo::linalg::{
    inv_sqrt_coupled_ns, inv_sqrt_exact, polar_augmented_ns, polar_exact, polar_ns, sqrt_psd, DenseMatrix,
    KernelReport, SymPsdMatrix,
};
use matrix_olo::optimizers::{matrix_sensing_objective, o2nc_run, Mode, OptimizerConfig, RunTrace};
use matrix_olo::potentials::{
    check_admissibility, wishart_inverse_check, AdmissibilityReport, PotentialFamily, PotentialKind,
};
use matrix_olo::rng::{derive_seed, gaussian_matrix, stream_rng};

use crate::output::{header, num, out_path, write_atomic, Table};
use crate::spec::{Command, ExperimentSpec, KernelName};
use crate::svg::{render, Chart, Series};

/// Relative slack on `regret ≤ bound` and on feasibility.
const CHECK_SLACK: f64 = 1e-8;
const WISHART_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    /// A checked condition failed, or a solver/kernel gave up.
    Violation(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Violation(_) => 2,
        }
    }
}

pub fn run_command(spec: &ExperimentSpec) -> Result<Outcome> {
    match spec.command {
        Command::Regret => cmd_regret(spec),
        Command::Admissibility => cmd_admissibility(spec),
        Command::Optimize => cmd_optimize(spec),
        Command::Kernels => cmd_kernels(spec),
    }
}

fn opt(x: Option<f64>) -> Result<String> {
    x.map_or_else(|| Ok(String::new()), num)
}

pub fn regret_file_stem(spec: &ExperimentSpec) -> String {
    format!("regret_{}_{}", spec.regret.learner.name(), spec.regret.adversary.name())
}

pub fn cmd_regret(spec: &ExperimentSpec) -> Result<Outcome> {
    let r = &spec.regret;
    let config = LearnerConfig {
        d: r.d,
        g: r.g,
        eta: r.eta,
        discount: r.discount,
        mc_samples: r.mc_samples,
        seed: spec.seed,
        faml_path: r.faml_path,
        auto_g: r.auto_g,
        ..LearnerConfig::new(r.learner)
    };
    let mut learner = match Learner::new(config, r.m, r.n) {
        Ok(l) => l,
        Err(e) => return Ok(Outcome::Violation(format!("{e}"))),
    };
    let adversary = Adversary::new(r.adversary, r.m, r.n, r.g, spec.seed);
    let mut table = Table::new(&[
        "t",
        "learner",
        "inst_loss",
        "cum_loss",
        "nuclear_S",
        "regret",
        "bound",
        "feas_margin",
        "solver_iters",
    ]);
    let mut failures = Vec::new();
    let (mut regret_pts, mut bound_pts) = (Vec::new(), Vec::new());
    for t in 1..=r.horizon {
        let rec = match learner.advance(&adversary.gradient(t)) {
            Ok(rec) => rec,
            Err(e) => {
                failures.push(format!("solver failure at round {t}: {e}"));
                break;
            }
        };
        if !(rec.feas_margin >= -CHECK_SLACK * r.d.max(1.0)) && failures.len() < 10 {
            failures.push(format!("round {t}: infeasible action, margin {:e}", rec.feas_margin));
        }
        if let Some(b) = rec.bound {
            if !(rec.regret <= b + CHECK_SLACK * (1.0 + b.abs())) && failures.len() < 10 {
                failures.push(format!("round {t}: regret {} exceeds bound {b}", rec.regret));
            }
            bound_pts.push((t as f64, b));
        }
        if t == r.horizon {
            info!("{}: final regret {} bound {:?}", r.learner.name(), rec.regret, rec.bound);
        }
        regret_pts.push((t as f64, rec.regret));
        table.push(vec![
            rec.t.to_string(),
            r.learner.name().to_string(),
            num(rec.inst_loss)?,
            num(rec.cum_loss)?,
            num(rec.nuclear_s)?,
            num(rec.regret)?,
            opt(rec.bound)?,
            num(rec.feas_margin)?,
            rec.solver_iters.to_string(),
        ]);
    }
    let stem = regret_file_stem(spec);
    let eta = learner.eta();
    table.write(&out_path(spec, &format!("{stem}.csv")), &header(spec, &[("eta", eta.to_string())]))?;
    if spec.emit_plot {
        let mut chart = Chart::new(format!("{} vs {}", r.learner.name(), r.adversary.name()), "t", "regret");
        chart.series.push(Series::new("regret", regret_pts));
        if !bound_pts.is_empty() {
            chart.series.push(Series::new("bound", bound_pts).dashed());
        }
        write_atomic(&out_path(spec, &format!("{stem}.svg")), render(&[chart]).as_bytes())?;
    }
    Ok(if failures.is_empty() { Outcome::Pass } else { Outcome::Violation(failures.join("\n")) })
}

pub fn cmd_admissibility(spec: &ExperimentSpec) -> Result<Outcome> {
    let a = &spec.admissibility;
    if a.family == PotentialKind::Stochastic && a.n < a.m + 2 {
        return Ok(Outcome::Violation(format!("stochastic family requires n ≥ m+2 (got m = {}, n = {})", a.m, a.n)));
    }
    let family = match a.family {
        PotentialKind::Hyperbolic => PotentialFamily::hyperbolic(),
        PotentialKind::Regularized => PotentialFamily::regularized(),
        PotentialKind::Stochastic => PotentialFamily::stochastic(a.mc_samples, derive_seed(spec.seed, 0x5eed, 0)),
    };
    let report = match check_admissibility(&family, a.m, a.n, a.trials, spec.seed) {
        Ok(rep) => rep,
        Err(e) => return Ok(Outcome::Violation(format!("admissibility check failed: {e}"))),
    };
    let mut problems: Vec<String> = report.violations().iter().map(|v| v.to_string()).collect();

    let columns: Vec<&'static str> = AdmissibilityReport::csv_header().split(',').collect();
    let mut table = Table::new(&columns);
    table.push(report.csv_row().split(',').map(str::to_string).collect());
    let (alpha, beta) = report.theoretical_constants();
    let extra = [("alpha", alpha.to_string()), ("beta", beta.map_or_else(|| "none".into(), |b| b.to_string()))];
    table.write(&out_path(spec, &format!("admissibility_{}.csv", a.family.name())), &header(spec, &extra))?;

    if a.family == PotentialKind::Stochastic {
        let mut w =
            Table::new(&["y", "m", "n", "samples", "top_eigenvalue", "sample_std", "bound", "threshold", "within"]);
        let shifted = gaussian_matrix(&mut stream_rng(derive_seed(spec.seed, 0x5eed, 1), 0), a.m, a.n);
        for (label, y) in [("central", DenseMatrix::zeros(a.m, a.n)), ("shifted", shifted)] {
            let est = match wishart_inverse_check(a.m, a.n, &y, a.wishart_samples, spec.seed) {
                Ok(est) => est,
                Err(e) => return Ok(Outcome::Violation(format!("wishart check failed: {e}"))),
            };
            if !est.within(WISHART_SIGMAS) {
                problems.push(format!(
                    "inverse Wishart ({label}): top eigenvalue {} above {}",
                    est.top_eigenvalue,
                    est.threshold(WISHART_SIGMAS)
                ));
            }
            w.push(vec![
                label.into(),
                a.m.to_string(),
                a.n.to_string(),
                est.samples.to_string(),
                num(est.top_eigenvalue)?,
                num(est.sample_std)?,
                num(est.bound)?,
                num(est.threshold(WISHART_SIGMAS))?,
                est.within(WISHART_SIGMAS).to_string(),
            ]);
        }
        w.write(&out_path(spec, "wishart.csv"), &header(spec, &[]))?;
    }
    info!("{} alpha_hat {} beta_hat {}", a.family.name(), report.alpha_hat, report.beta_hat);
    Ok(if problems.is_empty() { Outcome::Pass } else { Outcome::Violation(problems.join("\n")) })
}

fn optimizer_configs(spec: &ExperimentSpec) -> Vec<OptimizerConfig> {
    let o = &spec.optimize;
    // Theory mode has a single radius; the lr list only applies in practice.
    let rates: Vec<f64> = match o.mode {
        Mode::Practical => o.lrs.clone(),
        Mode::Theory => vec![o.radius],
    };
    let mut jobs = Vec::new();
    for &kind in &o.optimizers {
        for &rate in &rates {
            for seed in spec.seed..spec.seed + o.seeds as u64 {
                let mut cfg = OptimizerConfig::new(kind, o.mode);
                cfg.beta1 = o.beta1;
                cfg.beta2 = o.beta2;
                cfg.g = o.g;
                cfg.k = o.k;
                cfg.seed = seed;
                cfg.steps = o.steps;
                cfg.init_scale = o.init_scale;
                match o.mode {
                    Mode::Practical => cfg.lr = rate,
                    Mode::Theory => cfg.d = rate,
                }
                jobs.push(cfg);
            }
        }
    }
    jobs
}

pub fn optimize_trace_name(cfg: &OptimizerConfig) -> String {
    format!("optimize_{}_lr{}_seed{}.csv", cfg.kind.name(), cfg.lr_or_d(), cfg.seed)
}

fn write_optimizer_trace(spec: &ExperimentSpec, cfg: &OptimizerConfig, trace: &RunTrace) -> Result<()> {
    let mut table = Table::new(&[
        "step",
        "optimizer",
        "lr_or_D",
        "loss",
        "grad_ema_nuc",
        "direction_opnorm",
        "osc_partial",
        "seed",
    ]);
    for r in &trace.records {
        table.push(vec![
            r.step.to_string(),
            cfg.kind.name().into(),
            num(trace.lr_or_d)?,
            num(r.loss)?,
            num(r.grad_ema_nuc)?,
            num(r.direction_opnorm)?,
            num(r.osc_partial)?,
            cfg.seed.to_string(),
        ]);
    }
    let extra = [
        ("initial_loss", num(trace.initial_loss)?),
        ("tau", trace.tau.map_or_else(|| "none".into(), |t| t.to_string())),
        ("run_seed", cfg.seed.to_string()),
    ];
    table.write(&out_path(spec, &optimize_trace_name(cfg)), &header(spec, &extra))
}

pub fn cmd_optimize(spec: &ExperimentSpec) -> Result<Outcome> {
    let o = &spec.optimize;
    let jobs = optimizer_configs(spec);
    for cfg in &jobs {
        if let Err(e) = cfg.validate() {
            return Ok(Outcome::Violation(format!("{e}")));
        }
    }
    let results: Vec<Result<std::result::Result<RunTrace, String>>> = jobs
        .par_iter()
        .map(|cfg| {
            let mut objective = matrix_sensing_objective(o.dim, o.measurements, cfg.seed);
            objective.batch = o.batch;
            match o2nc_run(&objective, cfg) {
                Ok(trace) => {
                    write_optimizer_trace(spec, cfg, &trace)?;
                    Ok(Ok(trace))
                }
                Err(e) => Ok(Err(format!("{} lr {} seed {}: {e}", cfg.kind.name(), cfg.lr_or_d(), cfg.seed))),
            }
        })
        .collect();

    let mut traces = Vec::with_capacity(jobs.len());
    let mut failures = Vec::new();
    for r in results {
        match r? {
            Ok(t) => traces.push(t),
            Err(msg) => failures.push(msg),
        }
    }

    let mut table = Table::new(&["optimizer", "seed", "lr", "final_loss", "osc_total", "proxy_stationarity"]);
    for t in &traces {
        let rep = t.report();
        table.push(vec![
            rep.optimizer,
            rep.seed.to_string(),
            num(rep.lr)?,
            num(rep.final_loss)?,
            num(rep.osc_total)?,
            num(rep.proxy_stationarity)?,
        ]);
    }
    table.write(&out_path(spec, "final_report.csv"), &header(spec, &[]))?;

    if spec.emit_plot {
        // One panel per optimizer, one path per rate, first seed only.
        let charts: Vec<Chart> = o
            .optimizers
            .iter()
            .map(|&kind| {
                let mut c = Chart::new(kind.name(), "step", "loss");
                for t in traces.iter().filter(|t| t.optimizer == kind && t.seed == spec.seed) {
                    let mut pts = vec![(0.0, t.initial_loss)];
                    pts.extend(t.records.iter().map(|r| (r.step as f64, r.loss)));
                    c.series.push(Series::new(format!("lr={}", t.lr_or_d), pts));
                }
                c
            })
            .collect();
        write_atomic(&out_path(spec, "optimize_paths.svg"), render(&charts).as_bytes())?;
    }
    Ok(if failures.is_empty() { Outcome::Pass } else { Outcome::Violation(failures.join("\n")) })
}

/// Leading-order cost per kernel, written out here rather than taken from the
/// library so the CSV can be used to cross-check `flops_estimate`.
fn closed_form(kernel: KernelName, iters: usize, m: usize, n: usize) -> u64 {
    let (k, m, n) = (iters as u64, m as u64, n as u64);
    match kernel {
        KernelName::Polar => 4 * k * m * m * n,
        KernelName::InvSqrt => 6 * k * m * m * m,
        KernelName::AugPolar => 4 * m * m * n + k * (2 * m * m * n + 4 * m * m * m),
    }
}

struct KernelRow {
    kernel: &'static str,
    m: usize,
    n: usize,
    instance: String,
    report: KernelReport,
    error: f64,
    closed_form: u64,
}

fn kernel_error(kernel: &'static str, m: usize, n: usize, instance: String, e: matrix_olo::Error) -> String {
    format!("{kernel} {m}x{n} instance {instance}: {e}")
}

fn rel_err(a: &DenseMatrix, oracle: &DenseMatrix) -> f64 {
    (a - oracle).frobenius_norm() / oracle.frobenius_norm().max(1.0)
}

fn run_kernel(
    kernel: KernelName,
    m: usize,
    n: usize,
    idx: usize,
    spec: &ExperimentSpec,
) -> std::result::Result<KernelRow, String> {
    let k = &spec.kernels;
    // The iteration stops well inside the tolerance checked against the oracle.
    let ns_tol = k.tol * 1e-3;
    let mut rng = stream_rng(derive_seed(spec.seed, 0xcafe, (m * 1000 + n) as u64), idx as u64);
    let name = kernel.name();
    let err = |e| kernel_error(name, m, n, idx.to_string(), e);
    let row = |report: KernelReport, error: f64, closed: u64| KernelRow {
        kernel: name,
        m,
        n,
        instance: idx.to_string(),
        report,
        error,
        closed_form: closed,
    };
    match kernel {
        KernelName::Polar => {
            let a = gaussian_matrix(&mut rng, m, n);
            let oracle = polar_exact(&a).map_err(err)?;
            let (q, rep) = polar_ns(&a, k.max_iters, ns_tol).map_err(err)?;
            Ok(row(rep, rel_err(&q, &oracle), closed_form(kernel, rep.iterations, m, n)))
        }
        KernelName::InvSqrt => {
            let a = gaussian_matrix(&mut rng, m, m + 2).gram().add_diag(0.1);
            let oracle = inv_sqrt_exact(&a).map_err(err)?;
            let (z, rep) = inv_sqrt_coupled_ns(&a, k.max_iters, ns_tol).map_err(err)?;
            Ok(row(rep, rel_err(&z, oracle.as_matrix()), closed_form(kernel, rep.iterations, m, m)))
        }
        KernelName::AugPolar => {
            let s = gaussian_matrix(&mut rng, m, n);
            let llt: SymPsdMatrix = gaussian_matrix(&mut rng, m, m).gram().add_diag(0.5);
            let l = sqrt_psd(&llt);
            let full = polar_exact(&s.hcat(l.as_matrix())).map_err(err)?;
            let oracle = full.block(0, 0, m, n);
            let (x, rep) = polar_augmented_ns(&s, &llt, k.max_iters, ns_tol).map_err(err)?;
            Ok(row(rep, rel_err(&x, &oracle), closed_form(kernel, rep.iterations, m, n)))
        }
    }
}

pub fn cmd_kernels(spec: &ExperimentSpec) -> Result<Outcome> {
    let k = &spec.kernels;
    let mut jobs = Vec::new();
    for &kernel in &k.kernels {
        for &m in &k.sizes {
            for &n in &k.sizes {
                // invsqrt is square; the polar kernels need m ≤ n.
                let wanted = match kernel {
                    KernelName::InvSqrt => m == n,
                    _ => m <= n,
                };
                if wanted {
                    jobs.extend((0..k.instances).map(|i| (kernel, m, n, i)));
                }
            }
        }
    }
    let results: Vec<_> = jobs.par_iter().map(|&(kernel, m, n, i)| run_kernel(kernel, m, n, i, spec)).collect();
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(msg) => problems.push(msg),
        }
    }
    if k.kernels.contains(&KernelName::InvSqrt) {
        let a = SymPsdMatrix::from_diag(&[4.0, 9.0]);
        let oracle = DenseMatrix::from_diag(&[0.5, 1.0 / 3.0]);
        match inv_sqrt_coupled_ns(&a, k.max_iters, k.tol * 1e-3) {
            Ok((z, rep)) => rows.push(KernelRow {
                kernel: "invsqrt",
                m: 2,
                n: 2,
                instance: "diag(4;9)".into(),
                report: rep,
                error: rel_err(&z, &oracle),
                closed_form: closed_form(KernelName::InvSqrt, rep.iterations, 2, 2),
            }),
            Err(e) => problems.push(kernel_error("invsqrt", 2, 2, "diag(4;9)".into(), e)),
        }
    }

    let mut table = Table::new(&[
        "kernel",
        "m",
        "n",
        "instance",
        "iterations",
        "ns_residual",
        "residual",
        "flops_estimate",
        "closed_form",
        "converged",
    ]);
    for r in &rows {
        if !(r.error <= k.tol) {
            problems.push(format!(
                "{} {}x{} instance {}: residual {:e} above {:e}",
                r.kernel, r.m, r.n, r.instance, r.error, k.tol
            ));
        }
        table.push(vec![
            r.kernel.into(),
            r.m.to_string(),
            r.n.to_string(),
            r.instance.clone(),
            r.report.iterations.to_string(),
            num(r.report.residual)?,
            num(r.error)?,
            r.report.flops_estimate.to_string(),
            r.closed_form.to_string(),
            r.report.converged.to_string(),
        ]);
    }
    table.write(&out_path(spec, "kernels.csv"), &header(spec, &[]))?;
    Ok(if problems.is_empty() { Outcome::Pass } else { Outcome::Violation(problems.join("\n")) })
}
