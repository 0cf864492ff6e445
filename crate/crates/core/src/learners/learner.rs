use alloc::vec::Vec;

use super::directions::{faml_direction, ftl_direction, ftpl_direction, ftrl_direction, preconditioner, Direction};
use super::shampoo::{shampoo_step, ShampooVariant, SHAMPOO_RIDGE};
use super::{Adversary, LearnerConfig, LearnerKind};
use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, operator_norm, trace_power, DenseMatrix, SymPsdMatrix};
use crate::rng::{derive_seed, domain};

/// Running sums in the learner's internal orientation (`rows ≤ cols`).
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub t: usize,
    /// `S = Σ β^{t−s} G_s`.
    pub s: DenseMatrix,
    /// `M = Σ β^{2(t−s)} G_s G_sᵀ`.
    pub m: SymPsdMatrix,
    /// `N = Σ β^{2(t−s)} G_sᵀ G_s` (full Shampoo only).
    pub n: Option<SymPsdMatrix>,
    /// Action to be played next round.
    pub x_next: DenseMatrix,
    pub cumulative_loss: f64,
    /// `G₁`, kept for the first-round bound term.
    pub first_gradient_nuclear: f64,
    /// Running maximum of `‖G_t‖_op`.
    pub g_max: f64,
    /// Effective gradient bound (differs from the config under `auto_g`).
    pub g: f64,
}

/// One round of accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRecord {
    pub t: usize,
    /// `⟨G_t, X_t⟩`.
    pub inst_loss: f64,
    pub cum_loss: f64,
    /// `‖S_t‖_*`.
    pub nuclear_s: f64,
    /// `−D ‖S_t‖_*`.
    pub comparator_value: f64,
    /// `cum_loss − comparator_value`.
    pub regret: f64,
    /// Theoretical regret bound at `t`, when one applies.
    pub bound: Option<f64>,
    /// `D − ‖X_{t+1}‖_op`.
    pub feas_margin: f64,
    pub solver_iters: usize,
}

/// A learner instance for `m × n` gradients. Tall problems are solved on the
/// transpose.
#[derive(Debug, Clone)]
pub struct Learner {
    pub config: LearnerConfig,
    pub state: LearnerState,
    rows: usize,
    cols: usize,
    transposed: bool,
    eta: f64,
}

impl Learner {
    pub fn new(config: LearnerConfig, m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidConfig("learner needs m, n >= 1".into()));
        }
        if !(config.d > 0.0) || !(config.g >= 0.0) || !(config.discount > 0.0 && config.discount <= 1.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "need D > 0, G >= 0, discount in (0, 1] (got D = {}, G = {}, discount = {})",
                config.d,
                config.g,
                config.discount
            )));
        }
        if config.kind == LearnerKind::Ftpl && config.mc_samples == 0 {
            return Err(Error::InvalidConfig("ftpl needs mc_samples >= 1".into()));
        }
        let transposed = m > n;
        let (r, c) = if transposed { (n, m) } else { (m, n) };
        if config.kind == LearnerKind::Ftpl && c < r + 2 && config.eta.is_none() {
            log::warn!("ftpl at shape {m}×{n} violates n >= m + 2; using eta = 1 and no bound");
        }
        let eta = config.eta_for(r, c);
        if let Some(e) = config.eta {
            if !(e > 0.0) {
                return Err(Error::InvalidConfig("eta must be positive".into()));
            }
        }
        let state = LearnerState {
            t: 0,
            s: DenseMatrix::zeros(r, c),
            m: SymPsdMatrix::zeros(r),
            n: (config.kind == LearnerKind::Shampoo).then(|| SymPsdMatrix::zeros(c)),
            x_next: DenseMatrix::zeros(r, c),
            cumulative_loss: 0.0,
            first_gradient_nuclear: 0.0,
            g_max: 0.0,
            g: config.g,
        };
        Ok(Self { config, state, rows: m, cols: n, transposed, eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Shape the learner works in (`rows ≤ cols`).
    pub fn internal_shape(&self) -> (usize, usize) {
        self.state.s.shape()
    }

    /// The action `X_t` to be played this round, in the caller's orientation.
    pub fn action(&self) -> DenseMatrix {
        self.orient(&self.state.x_next)
    }

    fn orient(&self, x: &DenseMatrix) -> DenseMatrix {
        if self.transposed {
            x.transpose()
        } else {
            x.clone()
        }
    }

    /// Plays the current action against `g`, updates the sums and computes
    /// the next action.
    pub fn advance(&mut self, g: &DenseMatrix) -> Result<RegretRecord> {
        if g.shape() != (self.rows, self.cols) {
            return Err(Error::DimensionMismatch(alloc::format!(
                "gradient is {}×{}, learner expects {}×{}",
                g.rows(),
                g.cols(),
                self.rows,
                self.cols
            )));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite);
        }
        let g = if self.transposed { g.transpose() } else { g.clone() };
        let cfg = self.config;
        let st = &mut self.state;
        let inst_loss = g.inner(&st.x_next);
        let gop = operator_norm(&g);
        st.g_max = st.g_max.max(gop);
        if gop > st.g * (1.0 + 1e-6) {
            if cfg.auto_g {
                st.g = gop;
            } else {
                log::warn!("round {}: ‖G_t‖_op = {gop} exceeds G = {}", st.t + 1, st.g);
            }
        }
        let x_prev = st.x_next.clone();
        st.t += 1;
        if st.t == 1 {
            st.first_gradient_nuclear = nuclear_norm(&g);
        }
        st.s.scale_mut(cfg.discount);
        st.s += &g;
        st.m.decay_and_add_gram(cfg.discount * cfg.discount, &g);
        if let Some(n) = st.n.as_mut() {
            n.decay_and_add_gram(cfg.discount * cfg.discount, &g.transpose());
        }
        st.cumulative_loss += inst_loss;

        let dir = self.next_action(&g, &x_prev)?;
        let st = &mut self.state;
        let feas_margin = cfg.d - operator_norm(&dir.x);
        st.x_next = dir.x;
        let nuclear_s = nuclear_norm(&st.s);
        let comparator_value = -cfg.d * nuclear_s;
        let (r, c) = st.s.shape();
        let bound = if cfg.discount == 1.0 { regret_bound(cfg.kind, st, cfg.d, r, c) } else { None };
        Ok(RegretRecord {
            t: st.t,
            inst_loss,
            cum_loss: st.cumulative_loss,
            nuclear_s,
            comparator_value,
            regret: st.cumulative_loss - comparator_value,
            bound,
            feas_margin,
            solver_iters: dir.iterations,
        })
    }

    fn next_action(&self, g: &DenseMatrix, x_prev: &DenseMatrix) -> Result<Direction> {
        let cfg = &self.config;
        let st = &self.state;
        match cfg.kind {
            LearnerKind::Ftl => Ok(ftl_direction(&st.s, cfg.d, cfg.polar)),
            LearnerKind::Faml => {
                faml_direction(&st.s, &st.m, cfg.d, st.g, self.eta, cfg.discount, cfg.faml_path, &cfg.ns)
            }
            LearnerKind::Ftpl => {
                let seed = derive_seed(cfg.seed, domain::FTPL_ROUND, st.t as u64);
                ftpl_direction(&st.s, &st.m, cfg.d, st.g, self.eta, cfg.discount, cfg.mc_samples, seed)
            }
            LearnerKind::Ftrl => {
                let l = preconditioner(&st.m, st.g, cfg.discount);
                ftrl_direction(&st.s, &l, cfg.d, self.eta, &cfg.qp)
            }
            LearnerKind::OneSidedShampoo => {
                shampoo_step(ShampooVariant::OneSided, x_prev, g, &st.m, None, cfg.d, self.eta, &cfg.qp)
            }
            LearnerKind::Shampoo => {
                shampoo_step(ShampooVariant::Full, x_prev, g, &st.m, st.n.as_ref(), cfg.d, self.eta, &cfg.qp)
            }
        }
    }
}

/// Regret bound of `kind` given the current (undiscounted) state:
///
/// * faml: `2D (tr M^{1/2} + mG)`
/// * ftrl: `√2 D tr √(G²I + M) + (1 − 1/√2) D ‖G₁‖_*`
/// * ftpl: `2√2 D (n/(n−m−1))^{1/4} (tr M^{1/2} + mG)` (in expectation; needs `n ≥ m+2`)
/// * one-sided Shampoo: `2 · 2D · tr M^{1/2}`
/// * Shampoo: `4 · 2D · max{√(tr M^{1/2} tr N^{1/2}), ‖M‖^{1/4} tr N^{1/4}, tr M^{1/4} ‖N‖^{1/4}}`
/// * ftl: none.
pub fn regret_bound(kind: LearnerKind, st: &LearnerState, d: f64, m: usize, n: usize) -> Option<f64> {
    let (mf, g) = (m as f64, st.g);
    let tr_half = || trace_power(&st.m, 0.5);
    match kind {
        LearnerKind::Ftl => None,
        LearnerKind::Faml => Some(2.0 * d * (tr_half() + mf * g)),
        LearnerKind::Ftrl => {
            let tr = trace_power(&st.m.add_diag(g * g), 0.5);
            let c = core::f64::consts::FRAC_1_SQRT_2;
            Some(2.0 * c * d * tr + (1.0 - c) * d * st.first_gradient_nuclear)
        }
        LearnerKind::Ftpl => (n >= m + 2).then(|| {
            let ratio = libm::pow(n as f64 / (n - m - 1) as f64, 0.25);
            2.0 * core::f64::consts::SQRT_2 * d * ratio * (tr_half() + mf * g)
        }),
        LearnerKind::OneSidedShampoo => Some(2.0 * (2.0 * d) * tr_half()),
        LearnerKind::Shampoo => {
            let nm = st.n.as_ref()?;
            let m_ridge = st.m.add_diag(SHAMPOO_RIDGE);
            let n_ridge = nm.add_diag(SHAMPOO_RIDGE);
            let a = libm::sqrt(trace_power(&st.m, 0.5) * trace_power(nm, 0.5));
            let b = libm::pow(m_ridge.max_eigenvalue().max(0.0), 0.25) * trace_power(nm, 0.25);
            let c = trace_power(&st.m, 0.25) * libm::pow(n_ridge.max_eigenvalue().max(0.0), 0.25);
            Some(4.0 * (2.0 * d) * a.max(b).max(c))
        }
    }
}

/// `Σ inst_loss + D ‖S_T‖_*` from a run's records.
pub fn regret_of_run(records: &[RegretRecord], d: f64) -> f64 {
    let Some(last) = records.last() else { return 0.0 };
    records.iter().map(|r| r.inst_loss).sum::<f64>() + d * last.nuclear_s
}

#[derive(Debug, Clone)]
pub struct LearnerRun {
    pub records: Vec<RegretRecord>,
    /// Actions `X_1, …, X_{T+1}` in the caller's orientation.
    pub actions: Vec<DenseMatrix>,
    pub learner: Learner,
}

impl LearnerRun {
    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.regret)
    }

    pub fn final_bound(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.bound)
    }
}

/// Runs `config` against `T` rounds of `adversary`.
pub fn run_learner(config: LearnerConfig, adversary: &Adversary, horizon: usize) -> Result<LearnerRun> {
    let grads = adversary.sequence(horizon);
    run_on_sequence(config, &grads)
}

pub(crate) fn run_on_sequence(config: LearnerConfig, grads: &[DenseMatrix]) -> Result<LearnerRun> {
    let (m, n) =
        grads.first().map(|g| g.shape()).ok_or_else(|| Error::InvalidConfig("empty gradient sequence".into()))?;
    let mut learner = Learner::new(config, m, n)?;
    let mut records = Vec::with_capacity(grads.len());
    let mut actions = Vec::with_capacity(grads.len() + 1);
    actions.push(learner.action());
    for g in grads {
        records.push(learner.advance(g)?);
        actions.push(learner.action());
    }
    Ok(LearnerRun { records, actions, learner })
}

impl LearnerRun {
    /// Runs on an explicit gradient sequence.
    pub fn on_sequence(config: LearnerConfig, grads: &[DenseMatrix]) -> Result<Self> {
        run_on_sequence(config, grads)
    }
}
