//! Ogata thinning and synthetic parameter generators.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math;
use crate::model::{spectral_radius, EventSequence, HawkesParams, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("branching spectral radius {radius} is not below 1")]
    UnstableParams { radius: f64 },
    #[error("more than {max_events} events generated")]
    ExplosionGuard { max_events: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: HawkesParams,
    /// Simulate on `[0, horizon]`.
    pub horizon: Option<f64>,
    /// Stop after this many events; the horizon becomes the last event time.
    pub target_events: Option<usize>,
    pub max_events: usize,
    pub seed: u64,
    /// Skip the stability check.
    pub allow_unstable: bool,
}

impl SimConfig {
    pub fn with_horizon(params: HawkesParams, horizon: f64, seed: u64) -> Self {
        Self {
            params,
            horizon: Some(horizon),
            target_events: None,
            max_events: 100_000_000,
            seed,
            allow_unstable: false,
        }
    }

    pub fn with_target(params: HawkesParams, target_events: usize, seed: u64) -> Self {
        Self {
            params,
            horizon: None,
            target_events: Some(target_events),
            max_events: 100_000_000,
            seed,
            allow_unstable: false,
        }
    }
}

/// Exact simulation by thinning.
///
/// Between events every intensity decays, so the total intensity just after
/// the current candidate bounds it until the next one.
pub fn simulate_thinning(config: &SimConfig) -> Result<EventSequence, SimError> {
    let params = &config.params;
    match (config.horizon, config.target_events) {
        (None, None) => return Err(SimError::InvalidConfig("need a horizon or a target event count")),
        (Some(t), _) if !(t > 0.0) || !t.is_finite() => return Err(SimError::InvalidConfig("horizon must be positive")),
        (_, Some(0)) => return Err(SimError::InvalidConfig("target event count must be positive")),
        _ => {}
    }
    if !config.allow_unstable {
        let radius = params.branching_matrix().spectral_radius;
        if !(radius < 1.0) {
            return Err(SimError::UnstableParams { radius });
        }
    }
    let m = params.num_nodes();
    let kk = params.num_kernels();
    let gamma = params.gamma();
    let mu = params.mu();
    let horizon = config.horizon.unwrap_or(f64::INFINITY);
    let target = config.target_events.unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // r[k][p] = Σ_j α[k][p][m_j] e^{-γ_k (t - t_j)} at the current time t.
    let mut r = vec![0.0; kk * m];
    let mut lambda = vec![0.0; m];
    let intensities = |r: &[f64], lambda: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for p in 0..m {
            let mut l = mu[p];
            for k in 0..kk {
                l += gamma[k] * r[k * m + p];
            }
            lambda[p] = l;
            total += l;
        }
        total
    };

    let mut times = Vec::new();
    let mut marks = Vec::new();
    let mut t = 0.0;
    let mut bound = intensities(&r, &mut lambda);
    loop {
        let u: f64 = rng.gen();
        let wait = -math::ln(1.0 - u) / bound;
        let candidate = t + wait;
        if candidate > horizon {
            break;
        }
        for k in 0..kk {
            let d = math::exp(-gamma[k] * wait);
            for x in &mut r[k * m..(k + 1) * m] {
                *x *= d;
            }
        }
        t = candidate;
        let total = intensities(&r, &mut lambda);
        let accept: f64 = rng.gen();
        if accept * bound <= total {
            let pick = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut mark = m - 1;
            for (p, l) in lambda.iter().enumerate() {
                acc += l;
                if pick < acc {
                    mark = p;
                    break;
                }
            }
            if times.len() >= config.max_events {
                return Err(SimError::ExplosionGuard {
                    max_events: config.max_events,
                });
            }
            times.push(t);
            marks.push(mark);
            for k in 0..kk {
                for p in 0..m {
                    r[k * m + p] += params.alpha_at(k, p, mark);
                }
            }
            if times.len() >= target {
                break;
            }
            bound = intensities(&r, &mut lambda);
        } else {
            bound = total;
        }
    }
    let end = if config.horizon.is_some() && times.len() < target {
        horizon
    } else {
        t
    };
    EventSequence::new(times, marks, end, m).map_err(|_| SimError::InvalidConfig("simulated sequence failed validation"))
}

/// Hub-and-spoke parameters: every kernel's interaction matrix has a single
/// non-zero row (the hub's).
#[derive(Debug, Clone, PartialEq)]
pub struct HubSpoke {
    pub num_nodes: usize,
    pub hub: usize,
    pub hub_row_value: f64,
    pub hub_mu: f64,
    pub other_mu: f64,
    pub gamma: Vec<f64>,
}

impl HubSpoke {
    pub fn new(num_nodes: usize, gamma: Vec<f64>) -> Self {
        Self {
            num_nodes,
            hub: 0,
            hub_row_value: 0.1,
            hub_mu: 0.1,
            other_mu: 1e-3,
            gamma,
        }
    }
}

pub fn gen_hub_spoke(config: &HubSpoke) -> Result<HawkesParams, SimError> {
    let m = config.num_nodes;
    if m < 2 {
        return Err(SimError::InvalidConfig("hub-and-spoke needs at least 2 nodes"));
    }
    if config.hub >= m {
        return Err(SimError::InvalidConfig("hub index out of range"));
    }
    let kk = config.gamma.len();
    let mut alpha = vec![0.0; kk * m * m];
    for k in 0..kk {
        let row = (k * m + config.hub) * m;
        alpha[row..row + m].iter_mut().for_each(|a| *a = config.hub_row_value);
    }
    let mut mu = vec![config.other_mu; m];
    mu[config.hub] = config.hub_mu;
    Ok(HawkesParams::new(mu, alpha, config.gamma.clone())?)
}

const SF_ALPHA: f64 = 0.41;
const SF_BETA: f64 = 0.54;
const SF_DELTA_IN: f64 = 0.2;
const SF_DELTA_OUT: f64 = 0.0;

/// Directed preferential-attachment graph on `m` nodes (Bollobás et al.),
/// grown from a 2-cycle. Returns distinct edges `(source, target)` with
/// self-loops removed, sorted.
pub fn scale_free_edges(m: usize, seed: u64) -> Result<Vec<(usize, usize)>, SimError> {
    if m < 2 {
        return Err(SimError::InvalidConfig("scale-free graph needs at least 2 nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_deg = vec![0usize; m];
    let mut out_deg = vec![0usize; m];
    let mut edges = vec![(0usize, 1usize), (1, 0)];
    in_deg[0] = 1;
    in_deg[1] = 1;
    out_deg[0] = 1;
    out_deg[1] = 1;
    let mut nodes = 2;

    fn choose(rng: &mut ChaCha8Rng, deg: &[usize], delta: f64) -> usize {
        let total: f64 = deg.iter().map(|&d| d as f64 + delta).sum();
        let mut x = rng.gen::<f64>() * total;
        for (i, &d) in deg.iter().enumerate() {
            x -= d as f64 + delta;
            if x < 0.0 {
                return i;
            }
        }
        deg.len() - 1
    }

    while nodes < m {
        let r: f64 = rng.gen();
        let (v, w) = if r < SF_ALPHA {
            let w = choose(&mut rng, &in_deg[..nodes], SF_DELTA_IN);
            nodes += 1;
            (nodes - 1, w)
        } else if r < SF_ALPHA + SF_BETA {
            let v = choose(&mut rng, &out_deg[..nodes], SF_DELTA_OUT);
            let w = choose(&mut rng, &in_deg[..nodes], SF_DELTA_IN);
            (v, w)
        } else {
            let v = choose(&mut rng, &out_deg[..nodes], SF_DELTA_OUT);
            nodes += 1;
            (v, nodes - 1)
        };
        out_deg[v] += 1;
        in_deg[w] += 1;
        edges.push((v, w));
    }
    edges.retain(|(v, w)| v != w);
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Single-kernel interaction matrix on a scale-free graph: an edge `u → v`
/// sets `α[v][u]`, all edges share one weight, rescaled so the spectral
/// radius equals `target_radius`.
pub fn gen_scale_free(m: usize, seed: u64, target_radius: f64) -> Result<Vec<f64>, SimError> {
    if !(target_radius > 0.0) || !target_radius.is_finite() {
        return Err(SimError::InvalidConfig("target radius must be positive"));
    }
    let mut alpha = vec![0.0; m * m];
    for (u, v) in scale_free_edges(m, seed)? {
        alpha[v * m + u] = 1.0;
    }
    let radius = spectral_radius(&alpha, m);
    let scale = target_radius / radius;
    alpha.iter_mut().for_each(|a| *a *= scale);
    // Guard against the estimate landing a hair above the target.
    loop {
        let after = spectral_radius(&alpha, m);
        if after <= target_radius {
            break;
        }
        let shrink = target_radius / after * (1.0 - f64::EPSILON);
        alpha.iter_mut().for_each(|a| *a *= shrink);
    }
    Ok(alpha)
}

/// Compensator increments of the ground process between successive events,
/// `Λ(t_{i-1}, t_i]` with `t_0 = 0`. Under the true parameters these are
/// i.i.d. Exp(1).
pub fn time_rescaled_residuals(seq: &EventSequence, params: &HawkesParams) -> Vec<f64> {
    let m = params.num_nodes();
    let kk = params.num_kernels();
    let gamma = params.gamma();
    let base: f64 = params.mu().iter().sum();
    let colsum: Vec<f64> = (0..kk)
        .flat_map(|k| (0..m).map(move |q| (0..m).map(|p| params.alpha_at(k, p, q)).sum::<f64>()))
        .collect();
    // s[k] = Σ_p R^k_p just after the previous event.
    let mut s = vec![0.0; kk];
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(seq.len());
    for (&t, &q) in seq.times().iter().zip(seq.marks()) {
        let dt = t - prev;
        let mut inc = base * dt;
        for k in 0..kk {
            inc += s[k] * math::one_minus_exp_neg(gamma[k] * dt);
            s[k] = s[k] * math::exp(-gamma[k] * dt) + colsum[k * m + q];
        }
        out.push(inc);
        prev = t;
    }
    out
}

/// Kolmogorov–Smirnov distance between the sample and Exp(1).
pub fn ks_statistic_exp1(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = math::one_minus_exp_neg(x.max(0.0));
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / math::sqrt(n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood;
    use crate::model::validate_sequence;
    use approx::assert_relative_eq;

    fn toy_params() -> HawkesParams {
        HawkesParams::new(vec![0.1], vec![0.5], vec![1.0]).unwrap()
    }

    #[test]
    fn poisson_count_matches_rate() {
        let params = HawkesParams::poisson(vec![2.0], vec![1.0]).unwrap();
        let total: usize = (0..200)
            .map(|seed| simulate_thinning(&SimConfig::with_horizon(params.clone(), 100.0, seed)).unwrap().len())
            .sum();
        let mean = total as f64 / 200.0;
        // Var(count) = 200 per replication; σ of the mean is 1.
        assert!((mean - 200.0).abs() <= 3.0, "mean {mean}");
    }

    #[test]
    fn stationary_rate() {
        let mut events = 0usize;
        let mut time = 0.0;
        for seed in 0..4 {
            let seq = simulate_thinning(&SimConfig::with_horizon(toy_params(), 50_000.0, seed)).unwrap();
            events += seq.len();
            time += seq.horizon();
        }
        let rate = events as f64 / time;
        assert!((rate - 0.2).abs() / 0.2 < 0.05, "rate {rate}");
    }

    #[test]
    fn output_is_valid_and_deterministic() {
        let params = HawkesParams::new(vec![0.2, 0.1, 0.3], (0..9).map(|i| 0.03 * i as f64).collect(), vec![1.3]).unwrap();
        let config = SimConfig::with_horizon(params, 200.0, 42);
        let a = simulate_thinning(&config).unwrap();
        let b = simulate_thinning(&config).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        let (times, marks, horizon, m) = a.into_parts();
        assert!(times.iter().all(|&t| t <= horizon));
        assert!(marks.iter().all(|&p| p < m));
        assert!(validate_sequence(times, marks, horizon, m).is_ok());
    }

    #[test]
    fn target_count_sets_horizon_to_last_event() {
        let seq = simulate_thinning(&SimConfig::with_target(toy_params(), 500, 1)).unwrap();
        assert_eq!(seq.len(), 500);
        assert_eq!(seq.horizon(), *seq.times().last().unwrap());
    }

    #[test]
    fn guards() {
        let unstable = HawkesParams::new(vec![0.1], vec![1.2], vec![1.0]).unwrap();
        let err = simulate_thinning(&SimConfig::with_horizon(unstable.clone(), 10.0, 0)).unwrap_err();
        assert!(matches!(err, SimError::UnstableParams { radius } if (radius - 1.2).abs() < 1e-9));
        let mut config = SimConfig::with_horizon(unstable, 1e6, 0);
        config.allow_unstable = true;
        config.max_events = 1000;
        assert_eq!(
            simulate_thinning(&config).unwrap_err(),
            SimError::ExplosionGuard { max_events: 1000 }
        );
        let mut none = SimConfig::with_horizon(toy_params(), 1.0, 0);
        none.horizon = None;
        assert!(matches!(simulate_thinning(&none), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn hub_spoke_examples() {
        let p = gen_hub_spoke(&HubSpoke::new(2, vec![1.0])).unwrap();
        assert_eq!(p.alpha(), &[0.1, 0.1, 0.0, 0.0]);
        assert_eq!(p.mu(), &[0.1, 1e-3]);

        let big = gen_hub_spoke(&HubSpoke::new(125, vec![1.0])).unwrap();
        let radius = big.branching_matrix().spectral_radius;
        // Only one non-zero row, so the radius is its diagonal entry.
        assert_relative_eq!(radius, 0.1, max_relative = 1e-8);

        let mut zero = HubSpoke::new(5, vec![0.5, 2.0]);
        zero.hub_row_value = 0.0;
        let p = gen_hub_spoke(&zero).unwrap();
        assert!(p.alpha().iter().all(|&a| a == 0.0));
        assert!(gen_hub_spoke(&HubSpoke::new(1, vec![1.0])).is_err());
    }

    #[test]
    fn scale_free_small_and_radius() {
        let edges = scale_free_edges(2, 7).unwrap();
        assert!(edges.len() <= 2);
        let a = gen_scale_free(2, 7, 0.8).unwrap();
        assert!(a.iter().all(|&x| x >= 0.0));
        for m in [2usize, 5, 10, 50, 200] {
            for seed in 0..3 {
                let a = gen_scale_free(m, seed, 0.8).unwrap();
                let r = spectral_radius(&a, m);
                assert!(r <= 0.8 && r > 0.8 - 1e-8, "m={m} radius {r}");
                assert!((0..m).all(|p| a[p * m + p] == 0.0));
            }
        }
    }

    #[test]
    fn scale_free_in_degree_is_heavy_tailed() {
        let m = 1000;
        let mut ratios = Vec::new();
        for seed in 0..10 {
            let mut in_deg = vec![0usize; m];
            for (_, w) in scale_free_edges(m, seed).unwrap() {
                in_deg[w] += 1;
            }
            let max = *in_deg.iter().max().unwrap();
            in_deg.sort_unstable();
            let median = in_deg[m / 2].max(1);
            ratios.push(max as f64 / median as f64);
        }
        assert!(ratios.iter().all(|&r| r >= 20.0), "{ratios:?}");
    }

    #[test]
    fn residuals_sum_to_compensator() {
        let params = HawkesParams::new(vec![0.2, 0.1], vec![0.1, 0.3, 0.2, 0.0, 0.05, 0.0, 0.1, 0.2], vec![0.5, 3.0]).unwrap();
        let seq = simulate_thinning(&SimConfig::with_horizon(params.clone(), 100.0, 3)).unwrap();
        let res = time_rescaled_residuals(&seq, &params);
        let last = *seq.times().last().unwrap();
        let full = likelihood::compensator(&seq, &params);
        let up_to_last = {
            let (t, mk, _, m) = seq.clone().into_parts();
            likelihood::compensator(&validate_sequence(t, mk, last, m).unwrap(), &params)
        };
        let sum: f64 = res.iter().sum();
        assert_relative_eq!(sum, up_to_last, max_relative = 1e-11);
        assert!(full >= up_to_last);
    }

    #[test]
    fn ks_accepts_true_model() {
        let params = HawkesParams::new(vec![0.3, 0.2], vec![0.2, 0.1, 0.3, 0.1], vec![1.0]).unwrap();
        let seq = simulate_thinning(&SimConfig::with_target(params.clone(), 10_000, 9)).unwrap();
        let res = time_rescaled_residuals(&seq, &params);
        let d = ks_statistic_exp1(&res);
        assert!(d < ks_critical_1pct(res.len()), "D = {d}");
        // A wrong model is rejected.
        let wrong = HawkesParams::poisson(vec![0.3, 0.2], vec![1.0]).unwrap();
        let d = ks_statistic_exp1(&time_rescaled_residuals(&seq, &wrong));
        assert!(d > ks_critical_1pct(res.len()));
    }

    #[test]
    fn ks_statistic_small_sample() {
        // One sample at the median: F = 1/2, D = max(1/2 - 0, 1 - 1/2).
        assert_relative_eq!(ks_statistic_exp1(&[core::f64::consts::LN_2]), 0.5, max_relative = 1e-15);
    }
}
