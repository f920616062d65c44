//! Excitation states, intensities, compensator and the (penalized)
//! log-likelihood, each available through three interchangeable back-ends.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use thiserror::Error;

use crate::exec::Executor;
use crate::math;
use crate::model::{EventSequence, HawkesParams, RegConfig};
use crate::pass::{self, Model};
use crate::scan::{apply_prefix_into, scan_parallel, ElementSeq};

/// How per-event states are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Direct double sum over the history, `O(N²)`.
    Naive,
    /// The affine recurrence folded event by event.
    Sequential,
    /// Prefix scan over compressed transition matrices.
    Scan,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Naive, Backend::Sequential, Backend::Scan];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Naive => "naive",
            Backend::Sequential => "sequential",
            Backend::Scan => "scan",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown backend `{0}` (expected naive, sequential or scan)")]
pub struct UnknownBackend(pub alloc::string::String);

impl FromStr for Backend {
    type Err = UnknownBackend;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Backend::Naive),
            "sequential" => Ok(Backend::Sequential),
            "scan" => Ok(Backend::Scan),
            other => Err(UnknownBackend(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LikelihoodError {
    #[error("event {0} has a non-finite or non-positive intensity")]
    NonFiniteIntensity(usize),
    #[error("sequence has {seq} nodes but parameters have {params}")]
    NodeMismatch { seq: usize, params: usize },
    #[error("the per-event objective needs at least one event")]
    NoEvents,
}

/// Which recurrence a [`StateSeq`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    /// `R^k_p(t_i) = Σ_{j<i} α[k][p][m_j] e^{-γ_k (t_i - t_j)}`.
    Excitation,
    /// `K^k_q(t_i) = Σ_{j<i} [m_j = q] e^{-γ_k (t_i - t_j)}`.
    Count,
    /// `L^k_p(t_i) = Σ_{j<i} α[k][p][m_j] t_j e^{-γ_k (t_i - t_j)}`.
    TimeWeighted,
}

/// Per-event, per-kernel state vectors, laid out `[i][k][p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSeq {
    pub kind: StateKind,
    pub num_events: usize,
    pub num_kernels: usize,
    pub num_nodes: usize,
    pub values: Vec<f64>,
}

impl StateSeq {
    fn zeros(kind: StateKind, n: usize, kk: usize, m: usize) -> Self {
        Self {
            kind,
            num_events: n,
            num_kernels: kk,
            num_nodes: m,
            values: vec![0.0; n * kk * m],
        }
    }

    /// State vector of kernel `k` at event `i`.
    pub fn at(&self, i: usize, k: usize) -> &[f64] {
        let m = self.num_nodes;
        let base = (i * self.num_kernels + k) * m;
        &self.values[base..base + m]
    }

    fn at_mut(&mut self, i: usize, k: usize) -> &mut [f64] {
        let m = self.num_nodes;
        let base = (i * self.num_kernels + k) * m;
        &mut self.values[base..base + m]
    }
}

fn check_nodes(seq: &EventSequence, params: &HawkesParams) -> Result<(), LikelihoodError> {
    if seq.num_nodes() != params.num_nodes() {
        return Err(LikelihoodError::NodeMismatch {
            seq: seq.num_nodes(),
            params: params.num_nodes(),
        });
    }
    Ok(())
}

/// Full `N × K × M` state arrays of the given kind.
///
/// `Count` states depend on `params` only through `γ`.
pub fn states<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    kind: StateKind,
    backend: Backend,
    exec: &E,
) -> Result<StateSeq, LikelihoodError> {
    check_nodes(seq, params)?;
    let n = seq.len();
    let m = params.num_nodes();
    let kk = params.num_kernels();
    let mut out = StateSeq::zeros(kind, n, kk, m);
    if n == 0 {
        return Ok(out);
    }
    let times = seq.times();
    let marks = seq.marks();
    // Transition source vector for event i > 0, written into `v` (unscaled).
    let source = |k: usize, i: usize, v: &mut [f64]| {
        let q = marks[i - 1];
        match kind {
            StateKind::Count => {
                v.fill(0.0);
                v[q] = 1.0;
            }
            StateKind::Excitation | StateKind::TimeWeighted => {
                let a = params.alpha_kernel(k);
                let c = if kind == StateKind::TimeWeighted { times[i - 1] } else { 1.0 };
                for (p, vp) in v.iter_mut().enumerate() {
                    *vp = c * a[p * m + q];
                }
            }
        }
    };
    match backend {
        Backend::Naive => {
            for i in 1..n {
                for k in 0..kk {
                    let g = params.gamma()[k];
                    let a = params.alpha_kernel(k);
                    let row = out.at_mut(i, k);
                    for j in 0..i {
                        let w = math::exp(-g * (times[i] - times[j]));
                        let q = marks[j];
                        match kind {
                            StateKind::Count => row[q] += w,
                            StateKind::Excitation => {
                                for (p, x) in row.iter_mut().enumerate() {
                                    *x += a[p * m + q] * w;
                                }
                            }
                            StateKind::TimeWeighted => {
                                for (p, x) in row.iter_mut().enumerate() {
                                    *x += a[p * m + q] * times[j] * w;
                                }
                            }
                        }
                    }
                }
            }
        }
        Backend::Sequential => {
            let mut v = vec![0.0; m];
            for k in 0..kk {
                let g = params.gamma()[k];
                for i in 1..n {
                    let s = math::exp(-g * (times[i] - times[i - 1]));
                    source(k, i, &mut v);
                    let prev = out.at(i - 1, k).to_vec();
                    for ((x, pv), vp) in out.at_mut(i, k).iter_mut().zip(&prev).zip(&v) {
                        *x = s * pv + s * vp;
                    }
                }
            }
        }
        Backend::Scan => {
            let mut v = vec![0.0; m];
            let zero = vec![0.0; m];
            for k in 0..kk {
                let g = params.gamma()[k];
                let mut elements = ElementSeq::with_capacity(m, n);
                elements.push(1.0, &zero).expect("dimension M");
                for i in 1..n {
                    let s = math::exp(-g * (times[i] - times[i - 1]));
                    source(k, i, &mut v);
                    for x in v.iter_mut() {
                        *x *= s;
                    }
                    elements.push(s, &v).expect("dimension M");
                }
                let prefixes = scan_parallel(&elements, exec).expect("non-empty");
                for i in 0..n {
                    apply_prefix_into(prefixes.scalar(i), prefixes.vector(i), &zero, out.at_mut(i, k));
                }
            }
        }
    }
    Ok(out)
}

/// Excitation states `R^k_p(t_i)` for every event, kernel and node.
pub fn excitation_states<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    backend: Backend,
    exec: &E,
) -> Result<StateSeq, LikelihoodError> {
    states(seq, params, StateKind::Excitation, backend, exec)
}

/// Intensities at the events, optionally for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySeq {
    /// `λ_{m_i}(t_i)`.
    pub at_event: Vec<f64>,
    /// `λ_p(t_i)` laid out `[i][p]`, when requested.
    pub all_nodes: Option<Vec<f64>>,
}

/// `λ_{m_i}(t_i) = μ_{m_i} + Σ_k γ_k R^k_{m_i}(t_i)`.
pub fn intensities(states: &StateSeq, seq: &EventSequence, params: &HawkesParams, all_nodes: bool) -> IntensitySeq {
    let m = params.num_nodes();
    let n = seq.len();
    let gamma = params.gamma();
    let mu = params.mu();
    let node_intensity = |i: usize, p: usize| {
        let mut lam = mu[p];
        for (k, g) in gamma.iter().enumerate() {
            lam += g * states.at(i, k)[p];
        }
        lam
    };
    let at_event = (0..n).map(|i| node_intensity(i, seq.marks()[i])).collect();
    let all = all_nodes.then(|| {
        let mut full = Vec::with_capacity(n * m);
        for i in 0..n {
            for p in 0..m {
                full.push(node_intensity(i, p));
            }
        }
        full
    });
    IntensitySeq {
        at_event,
        all_nodes: all,
    }
}

/// `Σ_m ∫_0^T λ_m(t) dt` in closed form:
/// `T Σ_m μ_m + Σ_i Σ_k Σ_m α[k][m][m_i] (1 - e^{-γ_k (T - t_i)})`.
pub fn compensator(seq: &EventSequence, params: &HawkesParams) -> f64 {
    let m = params.num_nodes();
    let horizon = seq.horizon();
    let mut total: f64 = params.mu().iter().map(|mu| mu * horizon).sum();
    let colsums: Vec<Vec<f64>> = (0..params.num_kernels())
        .map(|k| {
            let a = params.alpha_kernel(k);
            (0..m).map(|q| (0..m).map(|p| a[p * m + q]).sum()).collect()
        })
        .collect();
    for (&t, &q) in seq.times().iter().zip(seq.marks()) {
        for (k, g) in params.gamma().iter().enumerate() {
            total += colsums[k][q] * math::one_minus_exp_neg(g * (horizon - t));
        }
    }
    total
}

/// Exact log-likelihood `Σ_i log λ_{m_i}(t_i) - Σ_m ∫_0^T λ_m dt`.
pub fn log_likelihood<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    backend: Backend,
    exec: &E,
) -> Result<f64, LikelihoodError> {
    check_nodes(seq, params)?;
    let model = Model::new(seq, params);
    let totals = pass::run(&model, backend, None, false, exec);
    if !(totals.min_lambda > 0.0) || !totals.log_sum.is_finite() {
        let bad = first_bad_event(seq, params, exec);
        return Err(LikelihoodError::NonFiniteIntensity(bad));
    }
    Ok(totals.log_sum - totals.compensator)
}

fn first_bad_event<E: Executor>(seq: &EventSequence, params: &HawkesParams, exec: &E) -> usize {
    states(seq, params, StateKind::Excitation, Backend::Sequential, exec)
        .map(|r| {
            let lam = intensities(&r, seq, params, false).at_event;
            lam.iter().position(|l| !(*l > 0.0) || !l.is_finite()).unwrap_or(0)
        })
        .unwrap_or(0)
}

/// Hinged ℓ₁ penalty `λ₁ Σ_{k, p≠q} α[k][p][q] · [α[k][p][q] < h]`.
pub fn penalty(params: &HawkesParams, reg: &RegConfig) -> f64 {
    if reg.lambda1 == 0.0 {
        return 0.0;
    }
    let m = params.num_nodes();
    let mut total = 0.0;
    for k in 0..params.num_kernels() {
        let a = params.alpha_kernel(k);
        for p in 0..m {
            for q in 0..m {
                let x = a[p * m + q];
                if p != q && x < reg.hinge {
                    total += x;
                }
            }
        }
    }
    reg.lambda1 * total
}

/// Training objective `-𝓛/N + penalty`.
pub fn penalized_nll<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    reg: &RegConfig,
    backend: Backend,
    exec: &E,
) -> Result<f64, LikelihoodError> {
    if seq.is_empty() {
        return Err(LikelihoodError::NoEvents);
    }
    let ll = log_likelihood(seq, params, backend, exec)?;
    Ok(-ll / seq.len() as f64 + penalty(params, reg))
}
