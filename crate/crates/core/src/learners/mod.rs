//! Online learners over `{X : ‖X‖_op ≤ D}` with adaptive preconditioning.
//!
//! Protocol per round: play `X_t`, receive `G_t`, suffer `⟨G_t, X_t⟩`, update
//! `S ← βS + G_t`, `M ← β²M + G_t G_tᵀ`, compute `X_{t+1}`. `X_1 = 0`.

mod adversary;
mod checks;
mod directions;
mod learner;
mod shampoo;

pub use adversary::{Adversary, AdversaryKind, BURST_PERIOD};
pub use checks::{gbpa_decomposition_check, trace_potential_check, GbpaCheck, TracePotentialCheck};
pub use directions::{
    faml_direction, ftl_direction, ftpl_direction, ftrl_direction, polar_with, preconditioner, preconditioner_gram,
    Direction, FamlPath, PolarMethod,
};
pub use learner::{regret_bound, regret_of_run, run_learner, Learner, LearnerRun, LearnerState, RegretRecord};
pub use shampoo::{shampoo_step, ShampooVariant, SHAMPOO_RIDGE};

use crate::linalg::NsOptions;
use crate::potentials::QpOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Ftl,
    Ftrl,
    Ftpl,
    Faml,
    Shampoo,
    OneSidedShampoo,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 6] = [
        LearnerKind::Ftl,
        LearnerKind::Ftrl,
        LearnerKind::Ftpl,
        LearnerKind::Faml,
        LearnerKind::Shampoo,
        LearnerKind::OneSidedShampoo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Ftl => "ftl",
            LearnerKind::Ftrl => "ftrl",
            LearnerKind::Ftpl => "ftpl",
            LearnerKind::Faml => "faml",
            LearnerKind::Shampoo => "shampoo",
            LearnerKind::OneSidedShampoo => "one_sided_shampoo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Operator-norm radius of the decision set.
    pub d: f64,
    /// Assumed bound on `‖G_t‖_op`.
    pub g: f64,
    /// `None` selects the kind's default (see [`LearnerConfig::default_eta`]).
    pub eta: Option<f64>,
    /// `β ∈ (0, 1]`; 1 is the undiscounted protocol.
    pub discount: f64,
    /// Monte Carlo samples per round (ftpl).
    pub mc_samples: usize,
    pub seed: u64,
    pub qp: QpOptions,
    pub ns: NsOptions,
    pub faml_path: FamlPath,
    pub polar: PolarMethod,
    /// Replace `G` by the running maximum of `‖G_t‖_op` when exceeded.
    pub auto_g: bool,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            kind,
            d: 1.0,
            g: 1.0,
            eta: None,
            discount: 1.0,
            mc_samples: 256,
            seed: 0,
            qp: QpOptions::default(),
            ns: NsOptions::default(),
            faml_path: FamlPath::Exact,
            polar: PolarMethod::Exact,
            auto_g: false,
        }
    }

    /// `η = √(α/β)` for the kind's potential at shape `m ≤ n`: 1 (faml),
    /// `1/√2` (ftrl), `√((√m+√n)√(n−m−1))` (ftpl, falling back to 1 when
    /// `n < m + 2`), `√2·D` (Shampoo variants), 1 (ftl, unused).
    pub fn default_eta(&self, m: usize, n: usize) -> f64 {
        let (m, n) = (m.min(n), m.max(n));
        match self.kind {
            LearnerKind::Faml | LearnerKind::Ftl => 1.0,
            LearnerKind::Ftrl => core::f64::consts::FRAC_1_SQRT_2,
            LearnerKind::Ftpl => {
                if n >= m + 2 {
                    libm::sqrt((libm::sqrt(m as f64) + libm::sqrt(n as f64)) * libm::sqrt((n - m - 1) as f64))
                } else {
                    1.0
                }
            }
            LearnerKind::Shampoo | LearnerKind::OneSidedShampoo => core::f64::consts::SQRT_2 * self.d,
        }
    }

    pub fn eta_for(&self, m: usize, n: usize) -> f64 {
        self.eta.unwrap_or_else(|| self.default_eta(m, n))
    }
}
