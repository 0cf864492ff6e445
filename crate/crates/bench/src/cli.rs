//! Command-line flags. Every flag is optional and overrides the value from
//! `--config` (or the built-in default).

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use matrix_olo::learners::{AdversaryKind, FamlPath, LearnerKind};
use matrix_olo::optimizers::{Mode, OptimizerKind};
use matrix_olo::potentials::PotentialKind;

use crate::spec::{Command, ExperimentSpec, KernelName, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "olo-bench", version, about = "Matrix online linear optimization experiments")]
pub struct Cli {
    /// INI-style config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Skip SVG output.
    #[arg(long, global = true)]
    pub no_plot: bool,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Run a learner against an adversary and compare regret with its bound.
    Regret(RegretArgs),
    /// Empirically check the admissibility conditions of a potential family.
    Admissibility(AdmissibilityArgs),
    /// Run the optimizers on the robust matrix sensing objective.
    Optimize(OptimizeArgs),
    /// Compare the Newton–Schulz kernels with their SVD oracles.
    Kernels(KernelArgs),
}

#[derive(Debug, Args)]
pub struct RegretArgs {
    #[arg(long, value_parser = named(LearnerKind::parse))]
    pub learner: Option<LearnerKind>,
    #[arg(long, value_parser = named(AdversaryKind::parse))]
    pub adversary: Option<AdversaryKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long = "G")]
    pub g: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub discount: Option<f64>,
    /// Monte Carlo samples per round (ftpl).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_parser = named(FamlPath::parse))]
    pub faml_path: Option<FamlPath>,
    #[arg(long)]
    pub auto_g: bool,
}

#[derive(Debug, Args)]
pub struct AdmissibilityArgs {
    #[arg(long, value_parser = named(PotentialKind::parse))]
    pub family: Option<PotentialKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Monte Carlo samples per stochastic evaluation.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub wishart_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// One or more of muon, pion, leon (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = named(OptimizerKind::parse))]
    pub optimizer: Option<Vec<OptimizerKind>>,
    /// Matrix side length.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub measurements: Option<usize>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Number of consecutive seeds, starting at --seed.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lrs: Option<Vec<f64>>,
    #[arg(long, value_parser = named(Mode::parse))]
    pub mode: Option<Mode>,
    /// Radius in theory mode.
    #[arg(long = "D")]
    pub radius: Option<f64>,
    #[arg(long = "G")]
    pub g: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Minibatch size, or "full".
    #[arg(long)]
    pub batch: Option<String>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_delimiter = ',', value_parser = named(KernelName::parse))]
    pub kernel: Option<Vec<KernelName>>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

fn named<T: Clone + Send + Sync + 'static>(
    parse: fn(&str) -> Option<T>,
) -> impl Fn(&str) -> std::result::Result<T, String> + Clone {
    move |s| parse(s).ok_or_else(|| format!("unknown value {s:?}"))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Cli {
    pub fn command(&self) -> Command {
        match self.command {
            Sub::Regret(_) => Command::Regret,
            Sub::Admissibility(_) => Command::Admissibility,
            Sub::Optimize(_) => Command::Optimize,
            Sub::Kernels(_) => Command::Kernels,
        }
    }

    /// Defaults, then the config file, then flags.
    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(self.command());
        if let Some(path) = &self.config {
            spec.load_file(path)?;
        }
        spec.command = self.command();
        set(&mut spec.out_dir, self.out_dir);
        set(&mut spec.seed, self.seed);
        if self.no_plot {
            spec.emit_plot = false;
        }
        match self.command {
            Sub::Regret(a) => {
                let r = &mut spec.regret;
                set(&mut r.learner, a.learner);
                set(&mut r.adversary, a.adversary);
                set(&mut r.m, a.m);
                set(&mut r.n, a.n);
                set(&mut r.horizon, a.horizon);
                set(&mut r.d, a.d);
                set(&mut r.g, a.g);
                if a.eta.is_some() {
                    r.eta = a.eta;
                }
                set(&mut r.discount, a.discount);
                set(&mut r.mc_samples, a.k);
                set(&mut r.faml_path, a.faml_path);
                r.auto_g |= a.auto_g;
            }
            Sub::Admissibility(a) => {
                let s = &mut spec.admissibility;
                set(&mut s.family, a.family);
                set(&mut s.m, a.m);
                set(&mut s.n, a.n);
                set(&mut s.trials, a.trials);
                set(&mut s.mc_samples, a.k);
                set(&mut s.wishart_samples, a.wishart_samples);
            }
            Sub::Optimize(a) => {
                let o = &mut spec.optimize;
                set(&mut o.optimizers, a.optimizer);
                set(&mut o.dim, a.d);
                set(&mut o.measurements, a.measurements);
                set(&mut o.beta1, a.beta1);
                set(&mut o.beta2, a.beta2);
                set(&mut o.steps, a.steps);
                set(&mut o.seeds, a.seeds);
                set(&mut o.lrs, a.lrs);
                set(&mut o.mode, a.mode);
                set(&mut o.radius, a.radius);
                set(&mut o.g, a.g);
                set(&mut o.k, a.k);
                set(&mut o.init_scale, a.init_scale);
                if let Some(b) = a.batch {
                    o.batch = match b.as_str() {
                        "full" => None,
                        s => Some(s.parse().map_err(|e| anyhow!("--batch {s:?}: {e}"))?),
                    };
                }
            }
            Sub::Kernels(a) => {
                let k = &mut spec.kernels;
                set(&mut k.kernels, a.kernel);
                set(&mut k.sizes, a.sizes);
                set(&mut k.instances, a.instances);
                set(&mut k.tol, a.tol);
                set(&mut k.max_iters, a.max_iters);
            }
        }
        Ok(spec)
    }
}
