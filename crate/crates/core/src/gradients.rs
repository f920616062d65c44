//! Closed-form gradients of the penalized per-event NLL.
//!
//! With `λ_i = λ_{m_i}(t_i)`:
//!
//! ```text
//! ∂𝓛/∂μ_p        = Σ_{i: m_i=p} 1/λ_i − T
//! ∂𝓛/∂α[k][p][q] = Σ_{i: m_i=p} γ_k K^k_q(t_i)/λ_i − Σ_{i: m_i=q} (1 − e^{−γ_k (T−t_i)})
//! ∂𝓛/∂γ_k        = Σ_i [(1 − γ_k t_i) R^k_{m_i}(t_i) + γ_k L^k_{m_i}(t_i)]/λ_i
//!                  − Σ_i Σ_m α[k][m][m_i] (T−t_i) e^{−γ_k (T−t_i)}
//! ```
//!
//! `K` and `L` obey the same kind of affine recurrence as `R` and are scanned
//! the same way. Exposed gradients are of `−𝓛/N + penalty` (minimized).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::exec::Executor;
use crate::likelihood::{self, Backend, LikelihoodError, StateKind, StateSeq};
use crate::math;
use crate::model::{EventSequence, HawkesParams, RegConfig};
use crate::pass::{self, Model, StateMeter};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradientError {
    #[error("precomputed {what} has shape inconsistent with the sequence/parameters")]
    InconsistentStateShapes { what: &'static str },
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
}

/// Gradients of the penalized NLL, shaped like [`HawkesParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub d_mu: Vec<f64>,
    /// `K × M × M`, same layout as [`HawkesParams::alpha`].
    pub d_alpha: Vec<f64>,
    pub d_gamma: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(m: usize, kk: usize) -> Self {
        Self {
            d_mu: vec![0.0; m],
            d_alpha: vec![0.0; kk * m * m],
            d_gamma: vec![0.0; kk],
        }
    }

    /// `[d_mu, d_alpha, d_gamma]`, matching [`HawkesParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.d_mu.len() + self.d_alpha.len() + self.d_gamma.len());
        flat.extend_from_slice(&self.d_mu);
        flat.extend_from_slice(&self.d_alpha);
        flat.extend_from_slice(&self.d_gamma);
        flat
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.d_mu
            .iter()
            .chain(&self.d_alpha)
            .chain(&self.d_gamma)
            .fold(0.0f64, |acc, g| acc.max(g.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.d_mu.iter().chain(&self.d_alpha).chain(&self.d_gamma).all(|g| g.is_finite())
    }
}

/// A single coordinate of the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamCoord {
    Mu(usize),
    Alpha { k: usize, p: usize, q: usize },
    Gamma(usize),
}

impl ParamCoord {
    /// Maps an index into the flat `[μ, α, γ]` layout.
    pub fn from_flat(index: usize, m: usize, kk: usize) -> Self {
        let mm = m * m;
        if index < m {
            ParamCoord::Mu(index)
        } else if index < m + kk * mm {
            let a = index - m;
            ParamCoord::Alpha {
                k: a / mm,
                p: (a / m) % m,
                q: a % m,
            }
        } else {
            ParamCoord::Gamma(index - m - kk * mm)
        }
    }
}

impl fmt::Display for ParamCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamCoord::Mu(p) => write!(f, "mu[{p}]"),
            ParamCoord::Alpha { k, p, q } => write!(f, "alpha[{k}][{p}][{q}]"),
            ParamCoord::Gamma(k) => write!(f, "gamma[{k}]"),
        }
    }
}

/// Count states `K^k_q(t_i)`; independent of α.
pub fn grad_states_k<E: Executor>(
    seq: &EventSequence,
    gamma: &[f64],
    backend: Backend,
    exec: &E,
) -> Result<StateSeq, GradientError> {
    let m = seq.num_nodes();
    let shell = HawkesParams::poisson(vec![1.0; m], gamma.to_vec())
        .map_err(|_| GradientError::InconsistentStateShapes { what: "gamma" })?;
    Ok(likelihood::states(seq, &shell, StateKind::Count, backend, exec)?)
}

/// Time-weighted states `L^k_p(t_i)`.
pub fn grad_states_l<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    backend: Backend,
    exec: &E,
) -> Result<StateSeq, GradientError> {
    Ok(likelihood::states(seq, params, StateKind::TimeWeighted, backend, exec)?)
}

/// Everything [`gradient`] consumes, computed ahead of time.
#[derive(Debug, Clone, PartialEq)]
pub struct Precomputed {
    pub lambda_at_event: Vec<f64>,
    pub r: StateSeq,
    pub k: StateSeq,
    pub l: StateSeq,
}

impl Precomputed {
    pub fn new<E: Executor>(
        seq: &EventSequence,
        params: &HawkesParams,
        backend: Backend,
        exec: &E,
    ) -> Result<Self, GradientError> {
        let r = likelihood::excitation_states(seq, params, backend, exec)?;
        let lambda_at_event = likelihood::intensities(&r, seq, params, false).at_event;
        let k = grad_states_k(seq, params.gamma(), backend, exec)?;
        let l = grad_states_l(seq, params, backend, exec)?;
        Ok(Self {
            lambda_at_event,
            r,
            k,
            l,
        })
    }
}

/// Assembles the gradient from full precomputed states.
///
/// `d_alpha` is accumulated grouped by target mark: each event adds
/// `γ_k K^k(t_i)/λ_i` to row `m_i`, so assembly costs `O(N·M·K)`.
pub fn gradient(
    seq: &EventSequence,
    params: &HawkesParams,
    reg: &RegConfig,
    pre: &Precomputed,
) -> Result<GradientSet, GradientError> {
    let n = seq.len();
    let m = params.num_nodes();
    let kk = params.num_kernels();
    let shape_ok = |s: &StateSeq, kind| s.kind == kind && s.num_events == n && s.num_kernels == kk && s.num_nodes == m;
    if pre.lambda_at_event.len() != n {
        return Err(GradientError::InconsistentStateShapes { what: "lambda" });
    }
    if !shape_ok(&pre.r, StateKind::Excitation) {
        return Err(GradientError::InconsistentStateShapes { what: "R states" });
    }
    if !shape_ok(&pre.k, StateKind::Count) {
        return Err(GradientError::InconsistentStateShapes { what: "K states" });
    }
    if !shape_ok(&pre.l, StateKind::TimeWeighted) {
        return Err(GradientError::InconsistentStateShapes { what: "L states" });
    }
    if n == 0 {
        return Err(LikelihoodError::NoEvents.into());
    }
    let horizon = seq.horizon();
    let gamma = params.gamma();
    let mut ll = GradientSet::zeros(m, kk);
    for p in 0..m {
        ll.d_mu[p] = -horizon;
    }
    for (i, (&t, &p)) in seq.times().iter().zip(seq.marks()).enumerate() {
        let lam = pre.lambda_at_event[i];
        ll.d_mu[p] += 1.0 / lam;
        let rest = horizon - t;
        for k in 0..kk {
            let g = gamma[k];
            let row = &mut ll.d_alpha[(k * m + p) * m..(k * m + p + 1) * m];
            for (a, kq) in row.iter_mut().zip(pre.k.at(i, k)) {
                *a += g * kq / lam;
            }
            let tail = math::one_minus_exp_neg(g * rest);
            let decay = math::exp(-g * rest);
            for target in 0..m {
                // Compensator: every node's integral depends on α[k][target][p].
                ll.d_alpha[(k * m + target) * m + p] -= tail;
                ll.d_gamma[k] -= params.alpha_at(k, target, p) * rest * decay;
            }
            ll.d_gamma[k] += ((1.0 - g * t) * pre.r.at(i, k)[p] + g * pre.l.at(i, k)[p]) / lam;
        }
    }
    Ok(finish(ll, params, reg, n))
}

/// Converts log-likelihood gradients into penalized-NLL gradients.
fn finish(ll: GradientSet, params: &HawkesParams, reg: &RegConfig, n: usize) -> GradientSet {
    let scale = -1.0 / n as f64;
    let m = params.num_nodes();
    let mut out = ll;
    for g in out.d_mu.iter_mut().chain(out.d_alpha.iter_mut()).chain(out.d_gamma.iter_mut()) {
        *g *= scale;
    }
    if reg.lambda1 > 0.0 {
        for (idx, (g, &a)) in out.d_alpha.iter_mut().zip(params.alpha()).enumerate() {
            let p = (idx / m) % m;
            let q = idx % m;
            if p != q && a > 0.0 && a < reg.hinge {
                *g += reg.lambda1;
            }
        }
    }
    out
}

/// Penalized NLL and its gradient from one fused forward/backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub nll: f64,
    pub log_likelihood: f64,
    pub gradient: GradientSet,
    pub meter: StateMeter,
}

/// Runs the forward and backward passes batch by batch (`None` = one batch).
pub fn evaluate<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    reg: &RegConfig,
    backend: Backend,
    batch_size: Option<usize>,
    exec: &E,
) -> Result<Evaluation, GradientError> {
    if seq.num_nodes() != params.num_nodes() {
        return Err(LikelihoodError::NodeMismatch {
            seq: seq.num_nodes(),
            params: params.num_nodes(),
        }
        .into());
    }
    let n = seq.len();
    if n == 0 {
        return Err(LikelihoodError::NoEvents.into());
    }
    let model = Model::new(seq, params);
    let totals = pass::run(&model, backend, batch_size, true, exec);
    if !(totals.min_lambda > 0.0) || !totals.log_sum.is_finite() {
        return Err(LikelihoodError::NonFiniteIntensity(0).into());
    }
    let m = params.num_nodes();
    let kk = params.num_kernels();
    let horizon = seq.horizon();
    let mut ll = GradientSet::zeros(m, kk);
    for p in 0..m {
        ll.d_mu[p] = totals.inv_lambda[p] - horizon;
    }
    for k in 0..kk {
        for p in 0..m {
            for q in 0..m {
                let idx = (k * m + p) * m + q;
                ll.d_alpha[idx] = totals.alpha_events[idx] - totals.alpha_comp[k * m + q];
            }
        }
        ll.d_gamma[k] = totals.gamma_events[k] - totals.gamma_comp[k];
    }
    let log_likelihood = totals.log_sum - totals.compensator;
    Ok(Evaluation {
        nll: -log_likelihood / n as f64 + likelihood::penalty(params, reg),
        log_likelihood,
        gradient: finish(ll, params, reg, n),
        meter: totals.meter,
    })
}

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h` for every coordinate.
pub fn central_difference<F>(mut f: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Why a coordinate was left out of a finite-difference check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// Within one step of the penalty hinge `h`.
    Kink,
    /// Within one step of the feasible-set boundary.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordCheck {
    pub coord: ParamCoord,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl CoordCheck {
    /// Passes when either the absolute or the relative error is within tolerance.
    pub fn within(&self, abs_tol: f64, rel_tol: f64) -> bool {
        self.abs_err <= abs_tol || self.rel_err <= rel_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    /// Coordinate with the largest absolute error.
    pub worst_coordinate: Option<ParamCoord>,
    pub checks: Vec<CoordCheck>,
    pub excluded: Vec<(ParamCoord, Exclusion)>,
}

impl FdReport {
    pub fn all_within(&self, abs_tol: f64, rel_tol: f64) -> bool {
        self.checks.iter().all(|c| c.within(abs_tol, rel_tol))
    }
}

/// Compares [`evaluate`]'s gradient against central differences of the
/// penalized NLL. Coordinates on a kink or the constraint boundary are
/// reported as excluded rather than checked.
pub fn finite_difference_check<E: Executor>(
    seq: &EventSequence,
    params: &HawkesParams,
    reg: &RegConfig,
    step: f64,
    backend: Backend,
    exec: &E,
) -> Result<FdReport, GradientError> {
    let analytic = evaluate(seq, params, reg, backend, None, exec)?.gradient.to_flat();
    let m = params.num_nodes();
    let kk = params.num_kernels();
    let x = params.to_flat();
    let mut report = FdReport {
        max_abs_err: 0.0,
        max_rel_err: 0.0,
        worst_coordinate: None,
        checks: Vec::new(),
        excluded: Vec::new(),
    };
    let objective = |flat: &[f64]| -> Result<f64, GradientError> {
        let p = params
            .from_flat(flat)
            .map_err(|_| GradientError::InconsistentStateShapes { what: "perturbed parameters" })?;
        Ok(likelihood::penalized_nll(seq, &p, reg, backend, exec)?)
    };
    let mut probe = x.clone();
    for (idx, (&value, &grad)) in x.iter().zip(&analytic).enumerate() {
        let coord = ParamCoord::from_flat(idx, m, kk);
        let exclusion = match coord {
            ParamCoord::Mu(_) | ParamCoord::Gamma(_) if value - step <= crate::model::MU_FLOOR => Some(Exclusion::Boundary),
            ParamCoord::Alpha { .. } if value < step => Some(Exclusion::Boundary),
            ParamCoord::Alpha { p, q, .. } if p != q && reg.lambda1 > 0.0 && (value - reg.hinge).abs() <= step => {
                Some(Exclusion::Kink)
            }
            _ => None,
        };
        if let Some(reason) = exclusion {
            report.excluded.push((coord, reason));
            continue;
        }
        probe[idx] = value + step;
        let up = objective(&probe)?;
        probe[idx] = value - step;
        let down = objective(&probe)?;
        probe[idx] = value;
        let numeric = (up - down) / (2.0 * step);
        let abs_err = (grad - numeric).abs();
        let rel_err = if abs_err == 0.0 {
            0.0
        } else {
            abs_err / numeric.abs().max(grad.abs()).max(f64::MIN_POSITIVE)
        };
        if abs_err > report.max_abs_err || report.worst_coordinate.is_none() {
            report.max_abs_err = report.max_abs_err.max(abs_err);
            report.worst_coordinate = Some(coord);
        }
        report.max_rel_err = report.max_rel_err.max(rel_err);
        report.checks.push(CoordCheck {
            coord,
            analytic: grad,
            numeric,
            abs_err,
            rel_err,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::model::validate_sequence;
    use approx::assert_relative_eq;

    fn toy() -> (EventSequence, HawkesParams) {
        let seq = validate_sequence(vec![0.0, 1.0, 2.0], vec![0, 0, 0], 2.0, 1).unwrap();
        let params = HawkesParams::new(vec![0.1], vec![0.5], vec![1.0]).unwrap();
        (seq, params)
    }

    #[test]
    fn count_states_examples() {
        let seq = validate_sequence(vec![0.0, 1.0], vec![0, 0], 1.0, 1).unwrap();
        for backend in Backend::ALL {
            let k = grad_states_k(&seq, &[1.0], backend, &Serial).unwrap();
            assert_eq!(k.at(0, 0), &[0.0]);
            assert_relative_eq!(k.at(1, 0)[0], (-1.0f64).exp(), max_relative = 1e-15);
            assert_relative_eq!(k.at(1, 0)[0], 0.367879, epsilon = 1e-6);
        }
    }

    #[test]
    fn time_weighted_states_examples() {
        let (seq, params) = toy();
        for backend in Backend::ALL {
            let l = grad_states_l(&seq, &params, backend, &Serial).unwrap();
            assert_eq!(l.at(0, 0), &[0.0]);
            assert_eq!(l.at(1, 0), &[0.0]);
            assert_relative_eq!(l.at(2, 0)[0], 0.5 * (-1.0f64).exp(), max_relative = 1e-15);
            assert_relative_eq!(l.at(2, 0)[0], 0.183940, epsilon = 1e-6);
        }
        let zeros = validate_sequence(vec![0.0; 4], vec![0; 4], 1.0, 1).unwrap();
        let l = grad_states_l(&zeros, &params, Backend::Scan, &Serial).unwrap();
        assert!(l.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn poisson_mu_gradient_closed_form() {
        let seq = validate_sequence(vec![0.2, 0.9, 1.5, 3.0], vec![0; 4], 4.0, 1).unwrap();
        let mu = 0.7;
        let params = HawkesParams::poisson(vec![mu], vec![1.0]).unwrap();
        let n = 4.0;
        let expected = -(1.0 / n) * (n / mu - 4.0);
        let pre = Precomputed::new(&seq, &params, Backend::Sequential, &Serial).unwrap();
        let g = gradient(&seq, &params, &RegConfig::none(), &pre).unwrap();
        assert_relative_eq!(g.d_mu[0], expected, max_relative = 1e-14);
        let e = evaluate(&seq, &params, &RegConfig::none(), Backend::Scan, None, &Serial).unwrap();
        assert_relative_eq!(e.gradient.d_mu[0], expected, max_relative = 1e-14);
        assert_eq!(e.gradient.d_gamma[0], 0.0);
    }

    #[test]
    fn toy_gradient_matches_central_differences() {
        let (seq, params) = toy();
        let report = finite_difference_check(&seq, &params, &RegConfig::default(), 1e-6, Backend::Scan, &Serial).unwrap();
        assert_eq!(report.checks.len(), 3);
        assert!(report.max_abs_err <= 1e-6, "{report:?}");
    }

    #[test]
    fn precomputed_and_fused_gradients_agree() {
        let seq = validate_sequence(
            vec![0.0, 0.3, 0.35, 1.2, 1.2, 2.5, 3.1],
            vec![0, 1, 2, 1, 0, 2, 2],
            4.0,
            3,
        )
        .unwrap();
        let alpha: Vec<f64> = (0..18).map(|i| 0.02 + 0.013 * i as f64).collect();
        let params = HawkesParams::new(vec![0.2, 0.1, 0.3], alpha, vec![0.7, 2.0]).unwrap();
        let reg = RegConfig::default();
        let pre = Precomputed::new(&seq, &params, Backend::Naive, &Serial).unwrap();
        let direct = gradient(&seq, &params, &reg, &pre).unwrap();
        for backend in Backend::ALL {
            let fused = evaluate(&seq, &params, &reg, backend, None, &Serial).unwrap().gradient;
            for (a, b) in direct.to_flat().iter().zip(fused.to_flat()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn inconsistent_shapes_are_rejected() {
        let (seq, params) = toy();
        let mut pre = Precomputed::new(&seq, &params, Backend::Sequential, &Serial).unwrap();
        pre.lambda_at_event.pop();
        assert!(matches!(
            gradient(&seq, &params, &RegConfig::none(), &pre),
            Err(GradientError::InconsistentStateShapes { .. })
        ));
        let mut pre = Precomputed::new(&seq, &params, Backend::Sequential, &Serial).unwrap();
        core::mem::swap(&mut pre.k, &mut pre.l);
        assert!(gradient(&seq, &params, &RegConfig::none(), &pre).is_err());
    }

    #[test]
    fn central_difference_on_quadratic_is_exact_to_rounding() {
        // f(x) = Σ c_i x_i² + x_0 x_1; second-order scheme is exact for quadratics.
        let f = |x: &[f64]| 3.0 * x[0] * x[0] + 0.5 * x[1] * x[1] + x[0] * x[1];
        let x = [0.7, -1.3];
        let step = 1e-3;
        let fd = central_difference(f, &x, step);
        let exact = [6.0 * x[0] + x[1], x[1] + x[0]];
        for (a, b) in fd.iter().zip(exact) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        // A cubic term adds an O(step²) bias: f''' / 6 · step².
        let g = |x: &[f64]| x[0] * x[0] * x[0];
        let err = (central_difference(g, &[1.0], step)[0] - 3.0).abs();
        assert_relative_eq!(err, step * step, max_relative = 1e-3);
    }

    #[test]
    fn alpha_at_hinge_is_reported_as_kink() {
        let seq = validate_sequence(vec![0.0, 0.5, 1.0, 1.7], vec![0, 1, 0, 1], 2.0, 2).unwrap();
        let params = HawkesParams::new(vec![0.3, 0.3], vec![0.2, 0.05, 0.1, 0.2], vec![1.0]).unwrap();
        let report = finite_difference_check(&seq, &params, &RegConfig::default(), 1e-6, Backend::Sequential, &Serial).unwrap();
        assert!(report
            .excluded
            .contains(&(ParamCoord::Alpha { k: 0, p: 0, q: 1 }, Exclusion::Kink)));
        assert!(report.all_within(1e-5, 1e-4), "{report:?}");
    }

    #[test]
    fn zero_penalty_alpha_gradient_is_unpenalized() {
        let seq = validate_sequence(vec![0.0, 0.5, 1.0, 1.7], vec![0, 1, 0, 1], 2.0, 2).unwrap();
        let params = HawkesParams::new(vec![0.3, 0.3], vec![0.2, 0.01, 0.02, 0.2], vec![1.0]).unwrap();
        let plain = evaluate(&seq, &params, &RegConfig::new(0.0, 0.05).unwrap(), Backend::Scan, None, &Serial).unwrap();
        let pre = Precomputed::new(&seq, &params, Backend::Scan, &Serial).unwrap();
        let direct = gradient(&seq, &params, &RegConfig::none(), &pre).unwrap();
        assert_eq!(plain.gradient.d_alpha.len(), direct.d_alpha.len());
        let penalized = evaluate(&seq, &params, &RegConfig::default(), Backend::Scan, None, &Serial).unwrap();
        // Off-diagonals below h pick up exactly +λ₁; diagonals do not.
        assert_eq!(penalized.gradient.d_alpha[1], plain.gradient.d_alpha[1] + 0.1);
        assert_eq!(penalized.gradient.d_alpha[2], plain.gradient.d_alpha[2] + 0.1);
        assert_eq!(penalized.gradient.d_alpha[0], plain.gradient.d_alpha[0]);
    }

    #[test]
    fn count_states_ignore_alpha() {
        let seq = validate_sequence(vec![0.0, 0.5, 1.0, 1.7], vec![0, 1, 0, 1], 2.0, 2).unwrap();
        let a = grad_states_k(&seq, &[0.4, 3.0], Backend::Scan, &Serial).unwrap();
        let b = grad_states_k(&seq, &[0.4, 3.0], Backend::Scan, &Serial).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn coord_round_trip() {
        let (m, kk) = (3, 2);
        assert_eq!(ParamCoord::from_flat(2, m, kk), ParamCoord::Mu(2));
        assert_eq!(ParamCoord::from_flat(3 + 9 + 4, m, kk), ParamCoord::Alpha { k: 1, p: 1, q: 1 });
        assert_eq!(ParamCoord::from_flat(3 + 18 + 1, m, kk), ParamCoord::Gamma(1));
        assert_eq!(alloc::format!("{}", ParamCoord::Alpha { k: 0, p: 1, q: 2 }), "alpha[0][1][2]");
    }
}
