//! Experiment specification: defaults, INI-style config files, and the
//! canonical text that is hashed into every output header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;
use matrix_olo::learners::{AdversaryKind, FamlPath, LearnerKind};
use matrix_olo::optimizers::{Mode, OptimizerKind};
use matrix_olo::potentials::PotentialKind;
use sha2::{Digest, Sha256};

/// Environment variable supplying the default output directory.
pub const OUT_DIR_ENV: &str = "OLO_BENCH_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "olo-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Regret,
    Admissibility,
    Optimize,
    Kernels,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Regret => "regret",
            Command::Admissibility => "admissibility",
            Command::Optimize => "optimize",
            Command::Kernels => "kernels",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Command::Regret, Command::Admissibility, Command::Optimize, Command::Kernels]
            .into_iter()
            .find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelName {
    Polar,
    InvSqrt,
    AugPolar,
}

impl KernelName {
    pub const ALL: [KernelName; 3] = [KernelName::Polar, KernelName::InvSqrt, KernelName::AugPolar];

    pub fn name(self) -> &'static str {
        match self {
            KernelName::Polar => "polar",
            KernelName::InvSqrt => "invsqrt",
            KernelName::AugPolar => "augpolar",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSpec {
    pub learner: LearnerKind,
    pub adversary: AdversaryKind,
    pub m: usize,
    pub n: usize,
    pub horizon: usize,
    pub d: f64,
    pub g: f64,
    pub eta: Option<f64>,
    pub discount: f64,
    pub mc_samples: usize,
    pub faml_path: FamlPath,
    pub auto_g: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilitySpec {
    pub family: PotentialKind,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub mc_samples: usize,
    pub wishart_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSpec {
    pub optimizers: Vec<OptimizerKind>,
    pub dim: usize,
    pub measurements: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub steps: usize,
    /// Number of consecutive seeds starting at the run seed.
    pub seeds: usize,
    pub lrs: Vec<f64>,
    pub mode: Mode,
    /// Learner radius in theory mode.
    pub radius: f64,
    pub g: f64,
    pub k: usize,
    pub init_scale: f64,
    /// Minibatch size; `None` is the full batch.
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kernels: Vec<KernelName>,
    pub sizes: Vec<usize>,
    pub instances: usize,
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub emit_plot: bool,
    pub regret: RegretSpec,
    pub admissibility: AdmissibilitySpec,
    pub optimize: OptimizeSpec,
    pub kernels: KernelSpec,
}

impl ExperimentSpec {
    pub fn new(command: Command) -> Self {
        let out_dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from);
        Self {
            command,
            seed: 0,
            out_dir,
            emit_plot: true,
            regret: RegretSpec {
                learner: LearnerKind::Faml,
                adversary: AdversaryKind::Gaussian,
                m: 4,
                n: 8,
                horizon: 200,
                d: 1.0,
                g: 1.0,
                eta: None,
                discount: 1.0,
                mc_samples: 256,
                faml_path: FamlPath::Exact,
                auto_g: false,
            },
            admissibility: AdmissibilitySpec {
                family: PotentialKind::Hyperbolic,
                m: 3,
                n: 5,
                trials: 500,
                mc_samples: 10_000,
                wishart_samples: 100_000,
            },
            optimize: OptimizeSpec {
                optimizers: OptimizerKind::ALL.to_vec(),
                dim: 20,
                measurements: 100,
                beta1: 0.9,
                beta2: 0.9,
                steps: 2000,
                seeds: 1,
                lrs: vec![0.3, 0.1, 0.03, 0.01],
                mode: Mode::Practical,
                radius: 0.01,
                g: 1.0,
                k: 8,
                init_scale: 1.0,
                batch: None,
            },
            kernels: KernelSpec {
                kernels: KernelName::ALL.to_vec(),
                sizes: vec![2, 4, 8, 16],
                instances: 20,
                tol: 1e-6,
                max_iters: 200,
            },
        }
    }

    /// Serialises every field except `out_dir` (which does not affect
    /// results). Parsing this text with [`ExperimentSpec::apply_ini`] over
    /// any spec reproduces `self` up to `out_dir`.
    pub fn canonical_ini(&self) -> String {
        let mut out = String::new();
        let r = &self.regret;
        let a = &self.admissibility;
        let o = &self.optimize;
        let k = &self.kernels;
        let _ = write!(
            out,
            "[run]\ncommand = {}\nseed = {}\nemit_plot = {}\n\n",
            self.command.name(),
            self.seed,
            self.emit_plot
        );
        let _ = write!(
            out,
            "[regret]\nlearner = {}\nadversary = {}\nm = {}\nn = {}\nT = {}\nD = {}\nG = {}\neta = {}\ndiscount = {}\nmc_samples = {}\nfaml_path = {}\nauto_g = {}\n\n",
            r.learner.name(),
            r.adversary.name(),
            r.m,
            r.n,
            r.horizon,
            r.d,
            r.g,
            r.eta.map_or_else(|| "auto".to_string(), |e| e.to_string()),
            r.discount,
            r.mc_samples,
            r.faml_path.name(),
            r.auto_g
        );
        let _ = write!(
            out,
            "[admissibility]\nfamily = {}\nm = {}\nn = {}\ntrials = {}\nmc_samples = {}\nwishart_samples = {}\n\n",
            a.family.name(),
            a.m,
            a.n,
            a.trials,
            a.mc_samples,
            a.wishart_samples
        );
        let _ = write!(
            out,
            "[optimize]\noptimizers = {}\nd = {}\nmeasurements = {}\nbeta1 = {}\nbeta2 = {}\nsteps = {}\nseeds = {}\nlrs = {}\nmode = {}\nD = {}\nG = {}\nk = {}\ninit_scale = {}\nbatch = {}\n\n",
            join(o.optimizers.iter().map(|k| k.name())),
            o.dim,
            o.measurements,
            o.beta1,
            o.beta2,
            o.steps,
            o.seeds,
            join(o.lrs.iter()),
            o.mode.name(),
            o.radius,
            o.g,
            o.k,
            o.init_scale,
            o.batch.map_or_else(|| "full".to_string(), |b| b.to_string())
        );
        let _ = write!(
            out,
            "[kernels]\nkernels = {}\nsizes = {}\ninstances = {}\ntol = {}\nmax_iters = {}\n",
            join(k.kernels.iter().map(|k| k.name())),
            join(k.sizes.iter()),
            k.instances,
            k.tol,
            k.max_iters
        );
        out
    }

    /// Hex SHA-256 of [`ExperimentSpec::canonical_ini`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_ini().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_ini(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Overrides fields with the keys present in `text`. Unknown sections or
    /// keys are errors.
    pub fn apply_ini(&mut self, text: &str) -> Result<()> {
        let ini = Ini::load_from_str(text).map_err(|e| anyhow!("config syntax: {e}"))?;
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("run");
            for (key, value) in props.iter() {
                self.set(section, key, value.trim()).with_context(|| format!("[{section}] {key} = {value}"))?;
            }
        }
        Ok(())
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        match (section, key) {
            ("run", "command") => self.command = parse_named(v, Command::parse)?,
            ("run", "seed") => self.seed = num(v)?,
            ("run", "out_dir") => self.out_dir = PathBuf::from(v),
            ("run", "emit_plot") => self.emit_plot = num(v)?,

            ("regret", "learner") => self.regret.learner = parse_named(v, LearnerKind::parse)?,
            ("regret", "adversary") => self.regret.adversary = parse_named(v, AdversaryKind::parse)?,
            ("regret", "m") => self.regret.m = num(v)?,
            ("regret", "n") => self.regret.n = num(v)?,
            ("regret", "T") => self.regret.horizon = num(v)?,
            ("regret", "D") => self.regret.d = num(v)?,
            ("regret", "G") => self.regret.g = num(v)?,
            ("regret", "eta") => self.regret.eta = if v == "auto" { None } else { Some(num(v)?) },
            ("regret", "discount") => self.regret.discount = num(v)?,
            ("regret", "mc_samples") => self.regret.mc_samples = num(v)?,
            ("regret", "faml_path") => self.regret.faml_path = parse_named(v, FamlPath::parse)?,
            ("regret", "auto_g") => self.regret.auto_g = num(v)?,

            ("admissibility", "family") => self.admissibility.family = parse_named(v, PotentialKind::parse)?,
            ("admissibility", "m") => self.admissibility.m = num(v)?,
            ("admissibility", "n") => self.admissibility.n = num(v)?,
            ("admissibility", "trials") => self.admissibility.trials = num(v)?,
            ("admissibility", "mc_samples") => self.admissibility.mc_samples = num(v)?,
            ("admissibility", "wishart_samples") => self.admissibility.wishart_samples = num(v)?,

            ("optimize", "optimizers") => self.optimize.optimizers = list(v, |s| parse_named(s, OptimizerKind::parse))?,
            ("optimize", "d") => self.optimize.dim = num(v)?,
            ("optimize", "measurements") => self.optimize.measurements = num(v)?,
            ("optimize", "beta1") => self.optimize.beta1 = num(v)?,
            ("optimize", "beta2") => self.optimize.beta2 = num(v)?,
            ("optimize", "steps") => self.optimize.steps = num(v)?,
            ("optimize", "seeds") => self.optimize.seeds = num(v)?,
            ("optimize", "lrs") => self.optimize.lrs = list(v, num)?,
            ("optimize", "mode") => self.optimize.mode = parse_named(v, Mode::parse)?,
            ("optimize", "D") => self.optimize.radius = num(v)?,
            ("optimize", "G") => self.optimize.g = num(v)?,
            ("optimize", "k") => self.optimize.k = num(v)?,
            ("optimize", "init_scale") => self.optimize.init_scale = num(v)?,
            ("optimize", "batch") => self.optimize.batch = if v == "full" { None } else { Some(num(v)?) },

            ("kernels", "kernels") => self.kernels.kernels = list(v, |s| parse_named(s, KernelName::parse))?,
            ("kernels", "sizes") => self.kernels.sizes = list(v, num)?,
            ("kernels", "instances") => self.kernels.instances = num(v)?,
            ("kernels", "tol") => self.kernels.tol = num(v)?,
            ("kernels", "max_iters") => self.kernels.max_iters = num(v)?,
            _ => bail!("unknown key"),
        }
        Ok(())
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn num<T: FromStr>(v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow!("cannot parse {v:?}: {e}"))
}

fn parse_named<T>(v: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T> {
    parse(v).ok_or_else(|| anyhow!("unknown name {v:?}"))
}

fn list<T>(v: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(item).collect()
}
