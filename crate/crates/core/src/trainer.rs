//! Training loop: exact (optionally batched) epochs, Adam, projection.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::exec::Executor;
use crate::gradients::{self, Evaluation, GradientError, GradientSet, ParamCoord};
use crate::likelihood::Backend;
use crate::math;
use crate::model::{EventSequence, HawkesParams, ModelError, RegConfig, MU_FLOOR};

/// Peak transient state in a batched epoch is at most
/// `STATE_MEMORY_CONSTANT · K · M · batch_size` elements.
pub const STATE_MEMORY_CONSTANT: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite gradient at {coord} in epoch {epoch}")]
    NonFiniteGradient { epoch: usize, coord: ParamCoord },
    #[error("optimizer step produced invalid parameters: {0}")]
    Projection(#[from] ModelError),
    #[error(transparent)]
    Gradient(#[from] GradientError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// `None` runs unbatched.
    pub batch_size: Option<usize>,
    pub reg: RegConfig,
    pub param_floor_mu: f64,
    pub param_floor_gamma: f64,
    /// Reserved for stochastic extensions; fitting itself is deterministic.
    pub seed: u64,
    pub backend: Backend,
    pub freeze_mu: bool,
    pub freeze_alpha: bool,
    pub freeze_gamma: bool,
    /// Stop once the gradient max-norm falls below this. Off by default.
    pub grad_tol: Option<f64>,
    pub positivity: Positivity,
}

/// How the optimizer keeps parameters feasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Positivity {
    /// Adam in natural parameters, then clamp to the floors.
    #[default]
    Projection,
    /// Adam on `θ` with each parameter `softplus(θ)` (floors still apply).
    /// Gradients are chained exactly through the map.
    Softplus,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            learning_rate: 0.05,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: None,
            reg: RegConfig::default(),
            param_floor_mu: MU_FLOOR,
            param_floor_gamma: 1e-10,
            seed: 0,
            backend: Backend::Scan,
            freeze_mu: false,
            freeze_alpha: false,
            freeze_gamma: false,
            grad_tol: None,
            positivity: Positivity::Projection,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(TrainError::InvalidConfig("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(TrainError::InvalidConfig("Adam betas must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(TrainError::InvalidConfig("Adam epsilon must be positive"));
        }
        if matches!(self.batch_size, Some(b) if b < 2) {
            return Err(TrainError::InvalidConfig("batch size must be at least 2"));
        }
        if !(self.param_floor_mu > 0.0) || !(self.param_floor_gamma > 0.0) {
            return Err(TrainError::InvalidConfig("parameter floors must be positive"));
        }
        Ok(())
    }
}

/// One unbatched epoch: penalized NLL and its full gradient.
pub fn epoch_unbatched<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    reg: &RegConfig,
    backend: Backend,
    exec: &E,
) -> Result<Evaluation, TrainError> {
    Ok(gradients::evaluate(seq, params, reg, backend, None, exec)?)
}

/// One epoch over contiguous batches, carrying states across boundaries.
pub fn epoch_batched<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    reg: &RegConfig,
    batch_size: usize,
    backend: Backend,
    exec: &E,
) -> Result<Evaluation, TrainError> {
    if batch_size < 2 {
        return Err(TrainError::InvalidConfig("batch size must be at least 2"));
    }
    Ok(gradients::evaluate(seq, params, reg, backend, Some(batch_size), exec)?)
}

/// First and second moment estimates over the flat `[μ, α, γ]` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1_pow: f64,
    beta2_pow: f64,
    steps: u64,
    /// Unconstrained coordinates in softplus mode.
    raw: Option<Vec<f64>>,
}

impl AdamState {
    pub fn new(dimension: usize) -> Self {
        Self {
            m: vec![0.0; dimension],
            v: vec![0.0; dimension],
            beta1_pow: 1.0,
            beta2_pow: 1.0,
            steps: 0,
            raw: None,
        }
    }

    /// Advances the moments with gradient `g` and returns the Adam
    /// displacement (to be subtracted).
    fn advance(&mut self, g: &[f64], config: &TrainConfig) -> Vec<f64> {
        let (b1, b2) = (config.adam_beta1, config.adam_beta2);
        self.steps += 1;
        self.beta1_pow *= b1;
        self.beta2_pow *= b2;
        let c1 = 1.0 - self.beta1_pow;
        let c2 = 1.0 - self.beta2_pow;
        g.iter()
            .enumerate()
            .map(|(i, &gi)| {
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * gi;
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * gi * gi;
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                config.learning_rate * m_hat / (math::sqrt(v_hat) + config.adam_eps)
            })
            .collect()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// Adam update on the flat vector followed by projection onto the feasible set.
pub fn optimizer_step(
    params: &HawkesParams,
    grads: &GradientSet,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<HawkesParams, TrainError> {
    let g = grads.to_flat();
    check_step(params, &g, state)?;
    let mut x = params.to_flat();
    let m = params.num_nodes();
    let kk = params.num_kernels();
    let step = state.advance(&g, config);
    for (xi, d) in x.iter_mut().zip(step) {
        *xi -= d;
    }
    project(&mut x, m, kk, config);
    Ok(params.from_flat(&x)?)
}

fn project(x: &mut [f64], m: usize, kk: usize, config: &TrainConfig) {
    let a_end = m + kk * m * m;
    for (i, xi) in x.iter_mut().enumerate() {
        let floor = if i < m {
            config.param_floor_mu
        } else if i < a_end {
            0.0
        } else {
            config.param_floor_gamma
        };
        if *xi < floor {
            *xi = floor;
        }
    }
}

fn check_step(params: &HawkesParams, g: &[f64], state: &AdamState) -> Result<(), TrainError> {
    if g.len() != params.dimension() || state.m.len() != g.len() {
        return Err(ModelError::Shape {
            what: "gradient",
            expected: params.dimension(),
            found: g.len(),
        }
        .into());
    }
    if let Some(idx) = g.iter().position(|v| !v.is_finite()) {
        return Err(TrainError::NonFiniteGradient {
            epoch: state.steps as usize,
            coord: ParamCoord::from_flat(idx, params.num_nodes(), params.num_kernels()),
        });
    }
    Ok(())
}

/// Adam on unconstrained coordinates `θ` with parameters `softplus(θ)`;
/// the gradient is chained as `∂/∂θ = ∂/∂x · σ(θ)`.
pub fn softplus_step(
    params: &HawkesParams,
    grads: &GradientSet,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<HawkesParams, TrainError> {
    let g = grads.to_flat();
    check_step(params, &g, state)?;
    let raw = state
        .raw
        .get_or_insert_with(|| params.to_flat().iter().map(|&x| math::softplus_inv(x.max(SOFTPLUS_MIN))).collect());
    let chained: Vec<f64> = g.iter().zip(raw.iter()).map(|(gi, &t)| gi * math::sigmoid(t)).collect();
    let mut raw = state.raw.take().expect("initialized above");
    let step = state.advance(&chained, config);
    // Untouched coordinates (frozen or never excited) keep their exact value.
    let mut x = params.to_flat();
    for ((t, d), xi) in raw.iter_mut().zip(step).zip(x.iter_mut()) {
        if d != 0.0 {
            *t -= d;
            *xi = math::softplus(*t);
        }
    }
    state.raw = Some(raw);
    project(&mut x, params.num_nodes(), params.num_kernels(), config);
    Ok(params.from_flat(&x)?)
}

/// Smallest value mapped back to `θ` when softplus mode starts; keeps `θ` finite
/// for parameters that start at zero.
const SOFTPLUS_MIN: f64 = 1e-12;

/// Wall-clock source; the core crate has no clock of its own.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Penalized NLL evaluated at the parameters entering each epoch.
    pub nll: Vec<f64>,
    pub loglik_per_event: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub seconds: Vec<f64>,
    pub peak_state_bytes: Vec<usize>,
    pub params: HawkesParams,
    pub epochs_run: usize,
    /// Set when training stopped early on an error.
    pub aborted: Option<TrainError>,
}

impl FitReport {
    fn new(params: HawkesParams, capacity: usize) -> Self {
        Self {
            nll: Vec::with_capacity(capacity),
            loglik_per_event: Vec::with_capacity(capacity),
            grad_norm: Vec::with_capacity(capacity),
            seconds: Vec::with_capacity(capacity),
            peak_state_bytes: Vec::with_capacity(capacity),
            params,
            epochs_run: 0,
            aborted: None,
        }
    }
}

/// Runs `config.epochs` epochs of projected Adam from `init`.
///
/// Errors before the first epoch are returned directly; later failures stop
/// training and are recorded in [`FitReport::aborted`] with the epochs that
/// completed.
pub fn fit<E: Executor, C: Clock>(
    seq: &EventSequence,
    init: &HawkesParams,
    config: &TrainConfig,
    exec: &E,
    clock: &C,
) -> Result<FitReport, TrainError> {
    config.validate()?;
    if seq.num_nodes() != init.num_nodes() {
        return Err(GradientError::from(crate::likelihood::LikelihoodError::NodeMismatch {
            seq: seq.num_nodes(),
            params: init.num_nodes(),
        })
        .into());
    }
    if seq.is_empty() {
        return Err(GradientError::from(crate::likelihood::LikelihoodError::NoEvents).into());
    }
    let n = seq.len() as f64;
    let mut report = FitReport::new(init.clone(), config.epochs);
    let mut adam = AdamState::new(init.dimension());
    for epoch in 0..config.epochs {
        let start = clock.seconds();
        let eval = match gradients::evaluate(seq, &report.params, &config.reg, config.backend, config.batch_size, exec) {
            Ok(e) => e,
            Err(e) => {
                report.aborted = Some(e.into());
                break;
            }
        };
        let mut grads = eval.gradient;
        if config.freeze_mu {
            grads.d_mu.iter_mut().for_each(|g| *g = 0.0);
        }
        if config.freeze_alpha {
            grads.d_alpha.iter_mut().for_each(|g| *g = 0.0);
        }
        if config.freeze_gamma {
            grads.d_gamma.iter_mut().for_each(|g| *g = 0.0);
        }
        let norm = grads.max_abs();
        let stepped = match config.positivity {
            Positivity::Projection => optimizer_step(&report.params, &grads, &mut adam, config),
            Positivity::Softplus => softplus_step(&report.params, &grads, &mut adam, config),
        };
        let next = match stepped {
            Ok(p) => p,
            Err(TrainError::NonFiniteGradient { coord, .. }) => {
                report.aborted = Some(TrainError::NonFiniteGradient { epoch, coord });
                break;
            }
            Err(e) => {
                report.aborted = Some(e);
                break;
            }
        };
        report.params = next;
        report.nll.push(eval.nll);
        report.loglik_per_event.push(eval.log_likelihood / n);
        report.grad_norm.push(norm);
        report.seconds.push(clock.seconds() - start);
        report.peak_state_bytes.push(eval.meter.peak_bytes());
        report.epochs_run += 1;
        if matches!(config.grad_tol, Some(tol) if norm < tol) {
            break;
        }
    }
    debug_assert_eq!(report.nll.len(), report.epochs_run);
    Ok(report)
}
