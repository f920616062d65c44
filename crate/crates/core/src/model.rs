//! Domain types shared by every other module.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math;

/// Smallest base rate a [`HawkesParams`] will hold; keeps `log λ` finite.
pub const MU_FLOOR: f64 = 1e-10;

/// Validation failures for raw event data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("times and marks differ in length ({times} vs {marks})")]
    LengthMismatch { times: usize, marks: usize },
    #[error("event {0} is earlier than the event before it")]
    UnsortedTimes(usize),
    #[error("event {0} has a mark outside 0..M")]
    MarkOutOfRange(usize),
    #[error("horizon precedes the last event")]
    HorizonBeforeLastEvent,
    #[error("event {0} has a negative or non-finite time")]
    NegativeTime(usize),
    #[error("the number of nodes must be positive")]
    NoNodes,
}

/// Validation failures for parameters and regularization settings.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("expected {expected} {what} values, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("mu[{0}] must be finite and non-negative")]
    InvalidMu(usize),
    #[error("alpha[{k}][{p}][{q}] must be finite and non-negative")]
    InvalidAlpha { k: usize, p: usize, q: usize },
    #[error("gamma[{0}] must be finite and positive")]
    InvalidGamma(usize),
    #[error("lambda1 must be finite and non-negative")]
    InvalidLambda1,
    #[error("hinge threshold must be finite and positive")]
    InvalidHinge,
    #[error("at least one node and one kernel are required")]
    Empty,
}

/// A validated, time-ordered sequence of marked events on `[0, T]`.
///
/// Marks are 0-based node indices. Ties in time are allowed and keep their
/// input order.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    times: Vec<f64>,
    marks: Vec<usize>,
    horizon: f64,
    num_nodes: usize,
}

impl EventSequence {
    /// Validates raw arrays; errors name the first offending index.
    pub fn new(
        times: Vec<f64>,
        marks: Vec<usize>,
        horizon: f64,
        num_nodes: usize,
    ) -> Result<Self, SequenceError> {
        if times.len() != marks.len() {
            return Err(SequenceError::LengthMismatch {
                times: times.len(),
                marks: marks.len(),
            });
        }
        if num_nodes == 0 {
            return Err(SequenceError::NoNodes);
        }
        for (i, (&t, &m)) in times.iter().zip(&marks).enumerate() {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(SequenceError::NegativeTime(i));
            }
            if i > 0 && t < times[i - 1] {
                return Err(SequenceError::UnsortedTimes(i));
            }
            if m >= num_nodes {
                return Err(SequenceError::MarkOutOfRange(i));
            }
        }
        let last = times.last().copied().unwrap_or(0.0);
        if !horizon.is_finite() || horizon < last || horizon < 0.0 {
            return Err(SequenceError::HorizonBeforeLastEvent);
        }
        Ok(Self {
            times,
            marks,
            horizon,
            num_nodes,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn marks(&self) -> &[usize] {
        &self.marks
    }

    /// Observation horizon `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Event counts per node.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_nodes];
        for &m in &self.marks {
            counts[m] += 1;
        }
        counts
    }

    /// The first `n` events, keeping the horizon.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            times: self.times[..n].to_vec(),
            marks: self.marks[..n].to_vec(),
            horizon: self.horizon,
            num_nodes: self.num_nodes,
        }
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<usize>, f64, usize) {
        (self.times, self.marks, self.horizon, self.num_nodes)
    }
}

/// Validates raw event arrays into an [`EventSequence`].
pub fn validate_sequence(
    times: Vec<f64>,
    marks: Vec<usize>,
    horizon: f64,
    num_nodes: usize,
) -> Result<EventSequence, SequenceError> {
    EventSequence::new(times, marks, horizon, num_nodes)
}

/// Parameters of a linear exponential Hawkes process with `K` kernels:
///
/// `λ_p(t) = μ_p + Σ_{j: t_j < t} Σ_k α[k][p][m_j] γ_k e^{-γ_k (t - t_j)}`.
///
/// `alpha` is stored flat, kernel-major then row-major: `alpha[k][p][q]` is
/// the excitation of node `p` caused by an event on node `q` under kernel `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesParams {
    mu: Vec<f64>,
    alpha: Vec<f64>,
    gamma: Vec<f64>,
}

impl HawkesParams {
    /// Validates shapes and signs. Base rates below [`MU_FLOOR`] are raised
    /// to it.
    pub fn new(mu: Vec<f64>, alpha: Vec<f64>, gamma: Vec<f64>) -> Result<Self, ModelError> {
        let m = mu.len();
        let k = gamma.len();
        if m == 0 || k == 0 {
            return Err(ModelError::Empty);
        }
        if alpha.len() != k * m * m {
            return Err(ModelError::Shape {
                what: "alpha",
                expected: k * m * m,
                found: alpha.len(),
            });
        }
        let mut mu = mu;
        for (p, x) in mu.iter_mut().enumerate() {
            if !x.is_finite() || *x < 0.0 {
                return Err(ModelError::InvalidMu(p));
            }
            if *x < MU_FLOOR {
                *x = MU_FLOOR;
            }
        }
        for (idx, a) in alpha.iter().enumerate() {
            if !a.is_finite() || *a < 0.0 {
                return Err(ModelError::InvalidAlpha {
                    k: idx / (m * m),
                    p: (idx / m) % m,
                    q: idx % m,
                });
            }
        }
        for (j, g) in gamma.iter().enumerate() {
            if !g.is_finite() || *g <= 0.0 {
                return Err(ModelError::InvalidGamma(j));
            }
        }
        Ok(Self { mu, alpha, gamma })
    }

    /// Pure multivariate Poisson parameters (all interactions zero).
    pub fn poisson(mu: Vec<f64>, gamma: Vec<f64>) -> Result<Self, ModelError> {
        let m = mu.len();
        let k = gamma.len();
        Self::new(mu, vec![0.0; k * m * m], gamma)
    }

    /// Default starting point for fitting: `μ = N/(M·T)`, `α = 0.01`
    /// everywhere, `γ` log-spaced over `[0.1, 10]`.
    pub fn initial_guess(seq: &EventSequence, num_kernels: usize) -> Result<Self, ModelError> {
        let m = seq.num_nodes();
        if num_kernels == 0 {
            return Err(ModelError::Empty);
        }
        let rate = if seq.horizon() > 0.0 {
            seq.len() as f64 / (m as f64 * seq.horizon())
        } else {
            1.0
        };
        let gamma = (0..num_kernels)
            .map(|j| {
                let frac = if num_kernels == 1 {
                    0.0
                } else {
                    j as f64 / (num_kernels - 1) as f64
                };
                libm::pow(10.0, -1.0 + 2.0 * frac)
            })
            .collect();
        Self::new(vec![rate; m], vec![0.01; num_kernels * m * m], gamma)
    }

    pub fn num_nodes(&self) -> usize {
        self.mu.len()
    }

    pub fn num_kernels(&self) -> usize {
        self.gamma.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Flat `K × M × M` interaction tensor.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// The `M × M` interaction matrix of kernel `k`, row-major.
    pub fn alpha_kernel(&self, k: usize) -> &[f64] {
        let mm = self.mu.len() * self.mu.len();
        &self.alpha[k * mm..(k + 1) * mm]
    }

    pub fn alpha_at(&self, k: usize, p: usize, q: usize) -> f64 {
        let m = self.mu.len();
        self.alpha[(k * m + p) * m + q]
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Number of free parameters, `M + K·M² + K`.
    pub fn dimension(&self) -> usize {
        self.mu.len() + self.alpha.len() + self.gamma.len()
    }

    /// Flat view `[μ, α, γ]`, the layout used by the optimizer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.dimension());
        flat.extend_from_slice(&self.mu);
        flat.extend_from_slice(&self.alpha);
        flat.extend_from_slice(&self.gamma);
        flat
    }

    /// Inverse of [`to_flat`](Self::to_flat) for the same shape.
    pub fn from_flat(&self, flat: &[f64]) -> Result<Self, ModelError> {
        if flat.len() != self.dimension() {
            return Err(ModelError::Shape {
                what: "flat parameter",
                expected: self.dimension(),
                found: flat.len(),
            });
        }
        let m = self.mu.len();
        let a = self.alpha.len();
        Self::new(
            flat[..m].to_vec(),
            flat[m..m + a].to_vec(),
            flat[m + a..].to_vec(),
        )
    }

    /// Expected-offspring matrix and its spectral radius.
    pub fn branching_matrix(&self) -> BranchingMatrix {
        branching_matrix(self)
    }
}

/// `B[p][q] = Σ_k α[k][p][q]` with a spectral-radius estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingMatrix {
    pub num_nodes: usize,
    pub entries: Vec<f64>,
    pub spectral_radius: f64,
}

pub fn branching_matrix(params: &HawkesParams) -> BranchingMatrix {
    let m = params.num_nodes();
    let mut entries = vec![0.0; m * m];
    for k in 0..params.num_kernels() {
        for (b, a) in entries.iter_mut().zip(params.alpha_kernel(k)) {
            *b += a;
        }
    }
    let spectral_radius = spectral_radius(&entries, m);
    BranchingMatrix {
        num_nodes: m,
        entries,
        spectral_radius,
    }
}

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

/// Spectral radius of a non-negative `m × m` matrix.
///
/// The radius is the largest over the strongly connected components of the
/// support graph. A singleton component contributes its diagonal entry; a
/// larger one is irreducible and handled by power iteration on `B + I`,
/// which is primitive with Perron root `ρ + 1`, so the Collatz–Wielandt
/// bracket closes even for periodic blocks.
pub fn spectral_radius(matrix: &[f64], m: usize) -> f64 {
    debug_assert_eq!(matrix.len(), m * m);
    if matrix.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    strongly_connected_components(matrix, m)
        .iter()
        .map(|c| match c.as_slice() {
            [p] => matrix[p * m + p],
            _ => irreducible_radius(matrix, m, c),
        })
        .fold(0.0, f64::max)
}

fn irreducible_radius(matrix: &[f64], m: usize, nodes: &[usize]) -> f64 {
    let n = nodes.len();
    let mut x = vec![1.0 / math::sqrt(n as f64); n];
    let mut y = vec![0.0; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..POWER_MAX_ITER {
        lo = f64::INFINITY;
        hi = 0.0f64;
        let mut norm_sq = 0.0;
        for (a, &p) in nodes.iter().enumerate() {
            let mut acc = x[a];
            for (b, &q) in nodes.iter().enumerate() {
                acc += matrix[p * m + q] * x[b];
            }
            y[a] = acc;
            norm_sq += acc * acc;
            let ratio = acc / x[a];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        if hi - lo <= POWER_TOL * hi {
            break;
        }
        let norm = math::sqrt(norm_sq);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    (0.5 * (hi + lo) - 1.0).max(0.0)
}

/// Tarjan's algorithm over edges `p → q` with `B[p][q] > 0`, iterative.
fn strongly_connected_components(matrix: &[f64], m: usize) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; m];
    let mut low = vec![0usize; m];
    let mut on_stack = vec![false; m];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0;
    // (node, next neighbour to look at)
    let mut work: Vec<(usize, usize)> = Vec::new();
    for root in 0..m {
        if index[root] != UNSEEN {
            continue;
        }
        work.push((root, 0));
        while let Some(&mut (v, ref mut next)) = work.last_mut() {
            if *next == 0 && index[v] == UNSEEN {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            let mut descended = false;
            while *next < m {
                let w = *next;
                *next += 1;
                if w == v || matrix[v * m + w] == 0.0 {
                    continue;
                }
                if index[w] == UNSEEN {
                    work.push((w, 0));
                    descended = true;
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            if descended {
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components
}

/// Hinged ℓ₁ penalty settings: weight `λ₁` applies to off-diagonal
/// interactions strictly below `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegConfig {
    pub lambda1: f64,
    pub hinge: f64,
}

impl RegConfig {
    pub fn new(lambda1: f64, hinge: f64) -> Result<Self, ModelError> {
        if !lambda1.is_finite() || lambda1 < 0.0 {
            return Err(ModelError::InvalidLambda1);
        }
        if !hinge.is_finite() || hinge <= 0.0 {
            return Err(ModelError::InvalidHinge);
        }
        Ok(Self { lambda1, hinge })
    }

    /// No penalty.
    pub fn none() -> Self {
        Self {
            lambda1: 0.0,
            hinge: 1.0,
        }
    }
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            hinge: 0.05,
        }
    }
}
