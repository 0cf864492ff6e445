//! Muon, Pion and Leon as online learners inside the online-to-nonconvex
//! reduction.
//!
//! Each step evaluates `G_t` at `W_t`, updates the EMA state
//! `Ĝ ← β₁Ĝ + G_t`, `M̂ ← β₂M̂ + G_tG_tᵀ`, asks the learner for `X_{t+1}` and
//! moves `W_{t+1} = W_t + s X_{t+1}`. In theory mode `s ~ Exp(1)` and the
//! output is the exponentially weighted average `W̄_τ` at a random index; in
//! practical mode `s` is the learning rate and the output is the last iterate.

mod o2nc;
mod sensing;

pub use o2nc::{o2nc_run, sample_tau, stability_sweep, tau_weights, Ewa, FinalReport, OptimizerRecord, RunTrace};
pub use sensing::{matrix_sensing_objective, ripple, ripple_derivative, MatrixSensing, Objective};

use crate::error::{Error, Result};
use crate::learners::{faml_direction, ftl_direction, ftpl_direction, Direction, FamlPath, PolarMethod};
use crate::linalg::{DenseMatrix, NsOptions, SymPsdMatrix};
use crate::rng::{derive_seed, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Muon,
    Pion,
    Leon,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Muon, OptimizerKind::Pion, OptimizerKind::Leon];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Muon => "muon",
            OptimizerKind::Pion => "pion",
            OptimizerKind::Leon => "leon",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exp(1) step sizes, radius `D`, EWA output at a random index.
    Theory,
    /// Constant learning rate, last-iterate output.
    Practical,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Theory => "theory",
            Mode::Practical => "practical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Mode::Theory, Mode::Practical].into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub mode: Mode,
    /// Radius of the learner's decision set (theory mode).
    pub d: f64,
    /// Constant learning rate (practical mode).
    pub lr: f64,
    /// Gradient bound in the theory-mode preconditioner `G²β₁⁻²I + M̂`.
    pub g: f64,
    /// `None`: 1, except theory-mode Pion on shapes with `n ≥ m + 2`, which
    /// uses the stochastic potential's `√((√m+√n)√(n−m−1))`.
    pub eta: Option<f64>,
    /// Monte Carlo samples for Pion.
    pub k: usize,
    pub seed: u64,
    pub steps: usize,
    /// Polar method for Muon.
    pub polar: PolarMethod,
    /// Inverse-square-root path for Leon.
    pub leon_path: FamlPath,
    pub ns: NsOptions,
    /// `‖W_1‖_F` of the Gaussian initial point; 0 starts at the origin.
    pub init_scale: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, mode: Mode) -> Self {
        Self {
            kind,
            beta1: 0.9,
            beta2: 0.9,
            mode,
            d: 1.0,
            lr: 0.01,
            g: 1.0,
            eta: None,
            k: 16,
            seed: 0,
            steps: 1000,
            polar: PolarMethod::NewtonSchulz(NsOptions::default()),
            leon_path: FamlPath::CoupledNs,
            ns: NsOptions::default(),
            init_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(Error::InvalidConfig(alloc::format!(
                "beta1, beta2 must lie in (0, 1) (got {}, {})",
                self.beta1,
                self.beta2
            )));
        }
        match self.mode {
            Mode::Theory if !(self.d > 0.0) => return Err(Error::InvalidConfig("theory mode needs D > 0".into())),
            Mode::Practical if !(self.lr > 0.0) => {
                return Err(Error::InvalidConfig("practical mode needs lr > 0".into()))
            }
            _ => {}
        }
        if self.kind == OptimizerKind::Pion && self.k == 0 {
            return Err(Error::InvalidConfig("pion needs k >= 1".into()));
        }
        if !(self.g >= 0.0) || !(self.init_scale >= 0.0) || self.eta.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::InvalidConfig("G, init_scale must be >= 0 and eta > 0".into()));
        }
        Ok(())
    }

    pub fn eta_for(&self, m: usize, n: usize) -> f64 {
        if let Some(e) = self.eta {
            return e;
        }
        let (m, n) = (m.min(n), m.max(n));
        if self.mode == Mode::Theory && self.kind == OptimizerKind::Pion && n >= m + 2 {
            libm::sqrt((libm::sqrt(m as f64) + libm::sqrt(n as f64)) * libm::sqrt((n - m - 1) as f64))
        } else {
            1.0
        }
    }

    /// `D` in theory mode, the learning rate in practical mode.
    pub fn lr_or_d(&self) -> f64 {
        match self.mode {
            Mode::Theory => self.d,
            Mode::Practical => self.lr,
        }
    }

    /// Radius passed to the direction operators, and the gradient bound
    /// entering their preconditioner (0 in practical mode, which leaves only
    /// the ridge).
    fn radius_and_bound(&self) -> (f64, f64) {
        match self.mode {
            Mode::Theory => (self.d, self.g),
            Mode::Practical => (1.0, 0.0),
        }
    }
}

/// EMA state shared by the three optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub w: DenseMatrix,
    /// `Ĝ_t = β₁ Ĝ_{t−1} + G_t`.
    pub g_ema: DenseMatrix,
    /// `M̂_t = β₂ M̂_{t−1} + G_t G_tᵀ`.
    pub m_ema: SymPsdMatrix,
    pub t: usize,
}

impl OptimizerState {
    pub fn new(w: DenseMatrix) -> Self {
        let (m, n) = w.shape();
        Self { w, g_ema: DenseMatrix::zeros(m, n), m_ema: SymPsdMatrix::zeros(m), t: 0 }
    }

    pub fn absorb(&mut self, g: &DenseMatrix, beta1: f64, beta2: f64) {
        self.g_ema.scale_mut(beta1);
        self.g_ema += g;
        self.m_ema.decay_and_add_gram(beta2, g);
        self.t += 1;
    }
}

/// `−D polar(Ĝ)`; zero when `Ĝ = 0`. Identical to the follow-the-leader map.
pub fn muon_direction(state: &OptimizerState, config: &OptimizerConfig) -> Direction {
    let (d, _) = config.radius_and_bound();
    ftl_direction(&state.g_ema, d, config.polar)
}

/// `−(D/k) Σᵢ polar(Ĝ + η⁻¹ L̃ Z⁽ⁱ⁾)` with `L̃L̃ᵀ = G²β₁⁻²I + M̂` (theory) or
/// `M̂ + ridge` (practical). Identical to the perturbed-leader map with
/// sample seed derived from `(seed, t)`.
pub fn pion_direction(state: &OptimizerState, config: &OptimizerConfig) -> Result<Direction> {
    let (d, g) = config.radius_and_bound();
    let (m, n) = state.g_ema.shape();
    let seed = derive_seed(config.seed, domain::FTPL_ROUND, state.t as u64);
    ftpl_direction(&state.g_ema, &state.m_ema, d, g, config.eta_for(m, n), config.beta1, config.k, seed)
}

/// `−D (ĜĜᵀ + η⁻²(G²β₁⁻²I + M̂))^{−1/2} Ĝ` (theory) or
/// `−(ĜĜᵀ + M̂ + ridge)^{−1/2} Ĝ` (practical). Identical to the augmented
/// leader map. A Newton–Schulz path that fails to converge falls back to the
/// eigendecomposition.
pub fn leon_direction(state: &OptimizerState, config: &OptimizerConfig) -> Result<Direction> {
    let (d, g) = config.radius_and_bound();
    let (m, n) = state.g_ema.shape();
    let eta = config.eta_for(m, n);
    let run = |path| faml_direction(&state.g_ema, &state.m_ema, d, g, eta, config.beta1, path, &config.ns);
    match run(config.leon_path) {
        Err(Error::NotConverged(rep)) => {
            log::debug!(
                "leon {} path did not converge ({rep:?}); using the eigendecomposition",
                config.leon_path.name()
            );
            run(FamlPath::Exact)
        }
        other => other,
    }
}

/// Direction of `config.kind` at `state`.
pub fn direction(state: &OptimizerState, config: &OptimizerConfig) -> Result<Direction> {
    match config.kind {
        OptimizerKind::Muon => Ok(muon_direction(state, config)),
        OptimizerKind::Pion => pion_direction(state, config),
        OptimizerKind::Leon => leon_direction(state, config),
    }
}
