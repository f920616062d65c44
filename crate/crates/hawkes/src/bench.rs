//! Per-epoch timing and state memory of the three back-ends over a grid of
//! sequence lengths, on simulated hub-and-spoke data.

use std::fmt::Write as _;
use std::time::Instant;

use hawkes_core::gradients::evaluate;
use hawkes_core::likelihood::log_likelihood;
use hawkes_core::model::validate_sequence;
use hawkes_core::simulator::{gen_hub_spoke, simulate_thinning, HubSpoke, SimConfig, SimError};
use hawkes_core::{Backend, EventSequence, Executor, HawkesParams, RegConfig};

use crate::files::format_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub nodes: Vec<usize>,
    pub kernels: usize,
    pub backends: Vec<Backend>,
    pub repeats: usize,
    /// Seconds; a cell whose warm-up run exceeds this is skipped, as are
    /// larger sizes for the same back-end.
    pub time_limit: f64,
    /// Largest `N` the naive back-end is run at.
    pub naive_cap: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: (10..=20).map(|e| 1 << e).collect(),
            nodes: vec![125],
            kernels: 3,
            backends: Backend::ALL.to_vec(),
            repeats: 3,
            time_limit: 600.0,
            naive_cap: 1 << 15,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub backend: Backend,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Fastest of the timed repeats.
    pub epoch_time_seconds: Option<f64>,
    pub peak_state_bytes: Option<usize>,
    /// `ok` or `skipped(reason)`.
    pub status: String,
    /// Scan rows only: whether scan and sequential NLL agree to rel 1e-9.
    pub crosscheck: Option<bool>,
}

/// Parses `2^15` or `32768`.
pub fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: usize = base.trim().parse().map_err(|_| format!("invalid size `{s}`"))?;
        let exp: u32 = exp.trim().parse().map_err(|_| format!("invalid size `{s}`"))?;
        base.checked_pow(exp).ok_or_else(|| format!("size `{s}` overflows"))
    } else {
        s.parse().map_err(|_| format!("invalid size `{s}`"))
    }
}

/// Parses `N=2^10..2^20` (every power of two in range) or `N=1000,2000`.
/// The `N=` prefix is optional.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, String> {
    let body = s.trim().strip_prefix("N=").unwrap_or(s.trim());
    let sizes = if let Some((lo, hi)) = body.split_once("..") {
        let (lo, hi) = (parse_size(lo)?, parse_size(hi)?);
        if lo == 0 || hi < lo {
            return Err(format!("empty grid `{s}`"));
        }
        let mut out = Vec::new();
        let mut n = lo;
        while n <= hi {
            out.push(n);
            n = n.checked_mul(2).ok_or("grid overflows")?;
        }
        out
    } else {
        body.split(',').map(parse_size).collect::<Result<Vec<_>, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(format!("empty grid `{s}`"));
    }
    Ok(sizes)
}

/// `K` decay rates log-spaced over `[0.1, 10]` (just `1.0` when `K = 1`).
pub fn default_gammas(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    (0..k).map(|j| 10f64.powf(-1.0 + 2.0 * j as f64 / (k - 1) as f64)).collect()
}

/// Hub-and-spoke parameters and a simulated sequence of `n` events.
pub fn hub_spoke_data(m: usize, k: usize, n: usize, seed: u64) -> Result<(EventSequence, HawkesParams), SimError> {
    let params = gen_hub_spoke(&HubSpoke::new(m, default_gammas(k)))?;
    let seq = simulate_thinning(&SimConfig::with_target(params.clone(), n, seed))?;
    Ok((seq, params))
}

/// The first `n` events with the horizon at the last of them.
pub fn leading(seq: &EventSequence, n: usize) -> EventSequence {
    let n = n.min(seq.len());
    let t = if n == 0 { 0.0 } else { seq.times()[n - 1] };
    validate_sequence(seq.times()[..n].to_vec(), seq.marks()[..n].to_vec(), t, seq.num_nodes())
        .expect("prefix of a valid sequence is valid")
}

/// Runs the grid. `progress` sees each row as it completes.
pub fn run_bench<E: Executor>(
    config: &BenchConfig,
    exec: &E,
    mut progress: impl FnMut(&BenchRow),
) -> Result<Vec<BenchRow>, SimError> {
    let reg = RegConfig::default();
    let mut rows = Vec::new();
    let n_max = config.sizes.iter().copied().max().unwrap_or(0);
    for &m in &config.nodes {
        let (full, params) = hub_spoke_data(m, config.kernels, n_max, config.seed)?;
        let mut timed_out = vec![false; config.backends.len()];
        for &n in &config.sizes {
            let seq = leading(&full, n);
            for (b, &backend) in config.backends.iter().enumerate() {
                let mut row = BenchRow {
                    backend,
                    n,
                    m,
                    k: config.kernels,
                    epoch_time_seconds: None,
                    peak_state_bytes: None,
                    status: String::new(),
                    crosscheck: None,
                };
                if backend == Backend::Naive && n > config.naive_cap {
                    row.status = "skipped(quadratic)".into();
                } else if timed_out[b] {
                    row.status = "skipped(timeout)".into();
                } else {
                    let start = Instant::now();
                    let warm = evaluate(&seq, &params, &reg, backend, None, exec);
                    let warm_secs = start.elapsed().as_secs_f64();
                    match warm {
                        Err(e) => row.status = format!("skipped(error: {e})"),
                        Ok(_) if warm_secs > config.time_limit => {
                            timed_out[b] = true;
                            row.status = "skipped(timeout)".into();
                        }
                        Ok(first) => {
                            let repeats = config.repeats.max(1);
                            let mut best = f64::INFINITY;
                            for _ in 0..repeats {
                                let start = Instant::now();
                                let _ = evaluate(&seq, &params, &reg, backend, None, exec);
                                best = best.min(start.elapsed().as_secs_f64());
                            }
                            row.epoch_time_seconds = Some(best);
                            row.peak_state_bytes = Some(first.meter.peak_bytes());
                            row.status = "ok".into();
                            if backend == Backend::Scan {
                                let reference = log_likelihood(&seq, &params, Backend::Sequential, exec);
                                row.crosscheck = Some(matches!(reference, Ok(r) if (r - first.log_likelihood).abs() <= 1e-9 * r.abs()));
                            }
                        }
                    }
                }
                progress(&row);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub fn format_bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("backend,N,M,K,epoch_time_seconds,peak_state_bytes,status,crosscheck\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.backend,
            r.n,
            r.m,
            r.k,
            r.epoch_time_seconds.map(format_f64).unwrap_or_default(),
            r.peak_state_bytes.map(|b| b.to_string()).unwrap_or_default(),
            r.status,
            match r.crosscheck {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            }
        );
    }
    out
}

/// Successive epoch-time ratios `t(N_{i+1}) / t(N_i)` for one back-end and
/// node count, over consecutive measured cells.
pub fn time_ratios(rows: &[BenchRow], backend: Backend, m: usize) -> Vec<(usize, f64)> {
    let cells: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.backend == backend && r.m == m)
        .filter_map(|r| r.epoch_time_seconds.map(|t| (r.n, t)))
        .collect();
    cells.windows(2).map(|w| (w[1].0, w[1].1 / w[0].1)).collect()
}
