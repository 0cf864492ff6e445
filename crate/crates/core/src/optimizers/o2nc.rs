use alloc::string::String;
use alloc::vec::Vec;

use super::{direction, Mode, Objective, OptimizerConfig, OptimizerKind, OptimizerState};
use crate::error::Result;
use crate::linalg::{nuclear_norm, operator_norm, DenseMatrix};
use crate::rng::{derive_seed, domain, exp1, gaussian_matrix, stream_rng, uniform};

/// `W̄_t = Σ_s β^{t−s} W_s / Σ_s β^{t−s}`, kept as a numerator/denominator
/// pair so that no `1 − β^t` cancellation occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct Ewa {
    pub beta: f64,
    num: DenseMatrix,
    den: f64,
}

impl Ewa {
    pub fn new(beta: f64, rows: usize, cols: usize) -> Self {
        Self { beta, num: DenseMatrix::zeros(rows, cols), den: 0.0 }
    }

    pub fn push(&mut self, w: &DenseMatrix) {
        self.num.scale_mut(self.beta);
        self.num += w;
        self.den = self.beta * self.den + 1.0;
    }

    pub fn value(&self) -> DenseMatrix {
        if self.den == 0.0 {
            return self.num.clone();
        }
        self.num.scale(1.0 / self.den)
    }
}

/// `Pr(τ = t)` for `t = 1..=T`: `(1 − β^t)/T` for `t < T` and
/// `(1 − β^T)/((1 − β)T)` for `t = T`.
pub fn tau_weights(beta: f64, horizon: usize) -> Vec<f64> {
    let tf = horizon as f64;
    (1..=horizon)
        .map(|t| {
            let bt = libm::pow(beta, t as f64);
            if t < horizon {
                -libm::expm1(t as f64 * libm::log(beta)) / tf
            } else {
                (1.0 - bt) / ((1.0 - beta) * tf)
            }
        })
        .collect()
}

/// Inverse-CDF draw of `τ ∈ 1..=T`.
pub fn sample_tau(beta: f64, horizon: usize, seed: u64) -> usize {
    let u = uniform(&mut stream_rng(derive_seed(seed, domain::TAU, 0), 0));
    let mut acc = 0.0;
    for (i, w) in tau_weights(beta, horizon).into_iter().enumerate() {
        acc += w;
        if u < acc {
            return i + 1;
        }
    }
    horizon
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerRecord {
    pub step: usize,
    /// `f(W_{t+1})`.
    pub loss: f64,
    pub grad_ema_nuc: f64,
    pub direction_opnorm: f64,
    /// Step size actually taken (`s_{t+1}` or the learning rate).
    pub step_size: f64,
    pub osc_partial: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub optimizer: OptimizerKind,
    pub mode: Mode,
    pub seed: u64,
    pub lr_or_d: f64,
    pub initial_loss: f64,
    pub records: Vec<OptimizerRecord>,
    pub final_w: DenseMatrix,
    /// `W̄_τ` (theory) or the last iterate (practical).
    pub output: DenseMatrix,
    pub tau: Option<usize>,
    pub osc_total: f64,
    /// `‖∇f(output)‖_*`, a proxy for the stationarity measure.
    pub proxy_stationarity: f64,
    /// `‖Ĝ‖_op` at the end of the run, a second proxy.
    pub proxy_grad_ema_op: f64,
}

impl RunTrace {
    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(self.initial_loss, |r| r.loss)
    }

    pub fn report(&self) -> FinalReport {
        FinalReport {
            optimizer: String::from(self.optimizer.name()),
            seed: self.seed,
            lr: self.lr_or_d,
            final_loss: self.final_loss(),
            osc_total: self.osc_total,
            proxy_stationarity: self.proxy_stationarity,
        }
    }
}

/// One row of the final-report table.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalReport {
    pub optimizer: String,
    pub seed: u64,
    pub lr: f64,
    pub final_loss: f64,
    pub osc_total: f64,
    pub proxy_stationarity: f64,
}

/// Initial point: Gaussian with `‖W_1‖_F ≈ init_scale`, from the run seed.
fn initial_point(shape: (usize, usize), config: &OptimizerConfig) -> DenseMatrix {
    let (m, n) = shape;
    if config.init_scale == 0.0 {
        return DenseMatrix::zeros(m, n);
    }
    let z = gaussian_matrix(&mut stream_rng(derive_seed(config.seed, domain::INIT, 0), 0), m, n);
    z.scale(config.init_scale / libm::sqrt((m * n) as f64))
}

/// Runs `config.steps` steps of the reduction on `objective`.
pub fn o2nc_run<O: Objective + ?Sized>(objective: &O, config: &OptimizerConfig) -> Result<RunTrace> {
    config.validate()?;
    let shape = objective.shape();
    let mut state = OptimizerState::new(initial_point(shape, config));
    let mut ewa = Ewa::new(config.beta1, shape.0, shape.1);
    let tau =
        (config.mode == Mode::Theory && config.steps > 0).then(|| sample_tau(config.beta1, config.steps, config.seed));
    let mut step_rng = stream_rng(derive_seed(config.seed, domain::STEP_SIZE, 0), 0);
    let mut output = None;

    let initial_loss = objective.loss(&state.w);
    let mut prev = initial_loss;
    let mut osc = 0.0;
    let mut records = Vec::with_capacity(config.steps);
    for t in 1..=config.steps {
        let g = objective.gradient(&state.w, derive_seed(config.seed, domain::GRADIENT_SAMPLE, t as u64));
        state.absorb(&g, config.beta1, config.beta2);
        ewa.push(&state.w);
        if tau == Some(t) {
            output = Some(ewa.value());
        }
        let dir = direction(&state, config)?;
        let s = match config.mode {
            Mode::Theory => exp1(&mut step_rng),
            Mode::Practical => config.lr,
        };
        state.w.axpy(s, &dir.x);
        let loss = objective.loss(&state.w);
        osc += (loss - prev).max(0.0);
        prev = loss;
        records.push(OptimizerRecord {
            step: t,
            loss,
            grad_ema_nuc: nuclear_norm(&state.g_ema),
            direction_opnorm: operator_norm(&dir.x),
            step_size: s,
            osc_partial: osc,
        });
    }
    let output = output.unwrap_or_else(|| state.w.clone());
    let proxy_stationarity =
        nuclear_norm(&objective.gradient(&output, derive_seed(config.seed, domain::GRADIENT_SAMPLE, 0)));
    Ok(RunTrace {
        optimizer: config.kind,
        mode: config.mode,
        seed: config.seed,
        lr_or_d: config.lr_or_d(),
        initial_loss,
        records,
        proxy_grad_ema_op: operator_norm(&state.g_ema),
        final_w: state.w,
        output,
        tau,
        osc_total: osc,
        proxy_stationarity,
    })
}

/// Runs every `(kind, lr, seed)` combination in practical mode on the
/// sensing objective built from each seed. Rows are ordered by kind, then
/// learning rate, then seed.
pub fn stability_sweep(
    base: &OptimizerConfig,
    kinds: &[OptimizerKind],
    lrs: &[f64],
    seeds: &[u64],
    d: usize,
    m_meas: usize,
) -> Result<Vec<RunTrace>> {
    let mut jobs = Vec::new();
    for &kind in kinds {
        for &lr in lrs {
            for &seed in seeds {
                jobs.push(OptimizerConfig { kind, lr, seed, mode: Mode::Practical, ..*base });
            }
        }
    }
    let run = |cfg: &OptimizerConfig| o2nc_run(&super::matrix_sensing_objective(d, m_meas, cfg.seed), cfg);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(run).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::matrix_sensing_objective;

    #[test]
    fn tau_weights_are_a_distribution() {
        for beta in [0.9, 0.99] {
            for horizon in [1, 10, 100, 1000] {
                let w = tau_weights(beta, horizon);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(w.iter().all(|&p| p > 0.0));
            }
        }
        let t = sample_tau(0.9, 50, 3);
        assert!((1..=50).contains(&t));
        assert_eq!(t, sample_tau(0.9, 50, 3));
    }

    #[test]
    fn ewa_matches_direct_sum() {
        let ws: Vec<_> = (0..200).map(|i| gaussian_matrix(&mut stream_rng(93, i), 2, 3)).collect();
        let beta = 0.99;
        let mut ewa = Ewa::new(beta, 2, 3);
        for (t, w) in ws.iter().enumerate() {
            ewa.push(w);
            let mut direct = DenseMatrix::zeros(2, 3);
            for (s, ws) in ws[..=t].iter().enumerate() {
                direct.axpy(libm::pow(beta, (t - s) as f64), ws);
            }
            direct.scale_mut((1.0 - beta) / (1.0 - libm::pow(beta, (t + 1) as f64)));
            assert!((&ewa.value() - &direct).frobenius_norm() <= 1e-9 * direct.frobenius_norm());
        }
    }

    #[test]
    fn ewa_near_one_is_arithmetic_mean() {
        let ws: Vec<_> = (0..20).map(|i| gaussian_matrix(&mut stream_rng(94, i), 2, 2)).collect();
        let mut ewa = Ewa::new(1.0 - 1e-8, 2, 2);
        let mut mean = DenseMatrix::zeros(2, 2);
        for w in &ws {
            ewa.push(w);
            mean += w;
        }
        mean.scale_mut(1.0 / 20.0);
        assert!((&ewa.value() - &mean).max_abs() < 1e-6);
    }

    #[test]
    fn theory_displacement_bounded_by_step() {
        let obj = matrix_sensing_objective(4, 12, 1);
        for kind in OptimizerKind::ALL {
            let cfg = OptimizerConfig { steps: 30, d: 0.3, k: 4, ..OptimizerConfig::new(kind, Mode::Theory) };
            let tr = o2nc_run(&obj, &cfg).unwrap();
            for r in &tr.records {
                assert!(r.direction_opnorm <= 0.3 * (1.0 + 1e-9));
            }
            assert!(tr.tau.is_some());
            assert!(tr.output.is_finite());
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let obj = matrix_sensing_objective(4, 12, 2);
        let cfg = OptimizerConfig { steps: 20, k: 4, ..OptimizerConfig::new(OptimizerKind::Pion, Mode::Theory) };
        let a = o2nc_run(&obj, &cfg).unwrap();
        let b = o2nc_run(&obj, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.output, b.output);
    }

    #[test]
    fn origin_start_stays_at_half() {
        let obj = matrix_sensing_objective(3, 10, 0);
        let cfg =
            OptimizerConfig { steps: 5, init_scale: 0.0, ..OptimizerConfig::new(OptimizerKind::Muon, Mode::Practical) };
        let tr = o2nc_run(&obj, &cfg).unwrap();
        assert_eq!(tr.initial_loss, 0.5);
        assert_eq!(tr.final_loss(), 0.5);
    }

    #[test]
    fn exp1_mean_is_one() {
        let mut rng = stream_rng(95, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| exp1(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / libm::sqrt(n as f64));
    }
}
