//! Fused forward/backward passes over an event sequence.
//!
//! Only the per-event scalars the likelihood and gradients need are kept:
//! `λ_{m_i}(t_i)`, `R^k_{m_i}(t_i)`, `L^k_{m_i}(t_i)` and the grouped sums
//! `Σ_{i: m_i = p} γ_k K^k(t_i) / λ_i`. Full `N × K × M` state arrays are
//! never materialized.
//!
//! The scan back-end splits each batch into contiguous blocks (count fixed by
//! the batch length). Each block folds its own transitions from the identity,
//! the block totals are combined with [`scan_parallel`], and each block is
//! then corrected with its carried-in state:
//! `x_i = local_i + S_i · carry`, where `S_i` is the block's running decay.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::exec::Executor;
use crate::likelihood::Backend;
use crate::math;
use crate::model::{EventSequence, HawkesParams};
use crate::scan::{apply_prefix_into, scan_parallel, ElementSeq};

const MIN_BLOCK: usize = 256;
const MAX_BLOCKS: usize = 64;

/// Block length used to split `n` events; depends on `n` only.
pub(crate) fn block_len(n: usize) -> usize {
    let blocks = n.div_ceil(MIN_BLOCK).clamp(1, MAX_BLOCKS);
    n.div_ceil(blocks).max(1)
}

/// Which transition source feeds a state recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Source {
    /// `v = s · α[k][:, m_{i-1}]` (excitation state R).
    Alpha,
    /// `v = s · e_{m_{i-1}}` (count state K).
    Indicator,
    /// `v = s · t_{i-1} · α[k][:, m_{i-1}]` (time-weighted state L).
    TimeAlpha,
}

/// Tracks element counts of transient state buffers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StateMeter {
    current: usize,
    peak: usize,
}

impl StateMeter {
    pub(crate) fn take(&mut self, elements: usize) {
        self.current += elements;
        self.peak = self.peak.max(self.current);
    }

    pub(crate) fn release(&mut self, elements: usize) {
        self.current -= elements;
    }

    /// Peak number of `f64` state elements held at once.
    pub fn peak_elements(&self) -> usize {
        self.peak
    }

    pub fn peak_bytes(&self) -> usize {
        self.peak * core::mem::size_of::<f64>()
    }
}

/// Read-only view of a model evaluation point.
pub(crate) struct Model<'a> {
    pub seq: &'a EventSequence,
    pub params: &'a HawkesParams,
    pub m: usize,
    pub k: usize,
    /// `cols[(k·M + q)·M + p] = α[k][p][q]`: source columns contiguous.
    cols: Vec<f64>,
    /// `colsum[k·M + q] = Σ_p α[k][p][q]`.
    colsum: Vec<f64>,
}

impl<'a> Model<'a> {
    pub fn new(seq: &'a EventSequence, params: &'a HawkesParams) -> Self {
        let m = params.num_nodes();
        let kk = params.num_kernels();
        debug_assert_eq!(seq.num_nodes(), m);
        let mut cols = vec![0.0; kk * m * m];
        let mut colsum = vec![0.0; kk * m];
        for k in 0..kk {
            let a = params.alpha_kernel(k);
            for p in 0..m {
                for q in 0..m {
                    cols[(k * m + q) * m + p] = a[p * m + q];
                    colsum[k * m + q] += a[p * m + q];
                }
            }
        }
        Self {
            seq,
            params,
            m,
            k: kk,
            cols,
            colsum,
        }
    }

    #[inline]
    pub fn col(&self, k: usize, q: usize) -> &[f64] {
        &self.cols[(k * self.m + q) * self.m..(k * self.m + q + 1) * self.m]
    }

    #[inline]
    pub fn colsum(&self, k: usize, q: usize) -> f64 {
        self.colsum[k * self.m + q]
    }
}

/// Epoch-level sums produced by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Totals {
    /// `Σ_i log λ_{m_i}(t_i)`.
    pub log_sum: f64,
    /// `Σ_m ∫_0^T λ_m(t) dt`.
    pub compensator: f64,
    /// `[p]`: `Σ_{i: m_i = p} 1/λ_i`.
    pub inv_lambda: Vec<f64>,
    /// `[k][p][q]`: `Σ_{i: m_i = p} γ_k K^k_q(t_i) / λ_i`.
    pub alpha_events: Vec<f64>,
    /// `[k][q]`: `Σ_{i: m_i = q} (1 - e^{-γ_k (T - t_i)})`.
    pub alpha_comp: Vec<f64>,
    /// `[k]`: `Σ_i [(1 - γ_k t_i) R^k + γ_k L^k] / λ_i`.
    pub gamma_events: Vec<f64>,
    /// `[k]`: `Σ_i Σ_m α[k][m][m_i] (T - t_i) e^{-γ_k (T - t_i)}`.
    pub gamma_comp: Vec<f64>,
    /// Smallest event intensity seen (`+∞` without events).
    pub min_lambda: f64,
    pub meter: StateMeter,
}

impl Totals {
    fn new(m: usize, k: usize) -> Self {
        Self {
            log_sum: 0.0,
            compensator: 0.0,
            inv_lambda: vec![0.0; m],
            alpha_events: vec![0.0; k * m * m],
            alpha_comp: vec![0.0; k * m],
            gamma_events: vec![0.0; k],
            gamma_comp: vec![0.0; k],
            min_lambda: f64::INFINITY,
            meter: StateMeter::default(),
        }
    }
}

/// Per-event λ and closed-form compensator terms for one block.
struct EventPartial {
    log_sum: f64,
    compensator: f64,
    inv_lambda: Vec<f64>,
    alpha_comp: Vec<f64>,
    gamma_comp: Vec<f64>,
    min_lambda: f64,
}

/// Runs a forward pass (and the backward pass when `grad` is set) over the
/// whole sequence, one contiguous batch at a time.
pub(crate) fn run<E: Executor>(
    model: &Model<'_>,
    backend: Backend,
    batch_size: Option<usize>,
    grad: bool,
    exec: &E,
) -> Totals {
    let m = model.m;
    let kk = model.k;
    let n_total = model.seq.len();
    let horizon = model.seq.horizon();
    let mut totals = Totals::new(m, kk);

    // Base-rate part of the compensator.
    totals.compensator = model.params.mu().iter().map(|mu| mu * horizon).sum();
    if n_total == 0 {
        return totals;
    }

    let batch = batch_size.unwrap_or(n_total).clamp(1, n_total);
    let mut meter = StateMeter::default();

    // Carried states at the last event of the previous batch, `[k][p]`.
    let mut carry_r = vec![0.0; kk * m];
    let mut carry_k = vec![0.0; kk * m];
    let mut carry_l = vec![0.0; kk * m];
    meter.take(3 * kk * m);

    let mut start = 0;
    while start < n_total {
        let range = start..(start + batch).min(n_total);
        let n = range.len();
        let times = model.seq.times();

        // Decay factors e^{-γ_k Δt_i}; the first event's element is the identity.
        let mut decay = vec![1.0; kk * n];
        meter.take(kk * n);
        for k in 0..kk {
            let g = model.params.gamma()[k];
            for (j, i) in range.clone().enumerate() {
                if i > 0 {
                    decay[k * n + j] = math::exp(-g * (times[i] - times[i - 1]));
                }
            }
        }

        // Forward: R at the event's own mark, per kernel.
        let mut r = vec![0.0; kk * n];
        meter.take(kk * n);
        for k in 0..kk {
            let out = &mut r[k * n..(k + 1) * n];
            let carry = &mut carry_r[k * m..(k + 1) * m];
            pick_states(model, k, Source::Alpha, range.clone(), &decay[k * n..(k + 1) * n], carry, out, backend, exec, &mut meter);
        }

        let mut lambda = vec![0.0; n];
        meter.take(n);
        event_terms(model, range.clone(), &r, &mut lambda, &mut totals, exec);

        if grad {
            let mut l = vec![0.0; n];
            meter.take(n);
            for k in 0..kk {
                let g = model.params.gamma()[k];
                let dk = &decay[k * n..(k + 1) * n];
                accumulate_counts(
                    model,
                    k,
                    range.clone(),
                    dk,
                    &mut carry_k[k * m..(k + 1) * m],
                    &lambda,
                    &mut totals.alpha_events[k * m * m..(k + 1) * m * m],
                    backend,
                    exec,
                    &mut meter,
                );
                pick_states(model, k, Source::TimeAlpha, range.clone(), dk, &mut carry_l[k * m..(k + 1) * m], &mut l, backend, exec, &mut meter);
                let rk = &r[k * n..(k + 1) * n];
                let parts = reduce_blocks(exec, n, |b| {
                    let mut acc = 0.0;
                    for j in b {
                        let t = times[range.start + j];
                        acc += ((1.0 - g * t) * rk[j] + g * l[j]) / lambda[j];
                    }
                    acc
                });
                for p in parts {
                    totals.gamma_events[k] += p;
                }
            }
            meter.release(n);
        }

        meter.release(kk * n + kk * n + n);
        start = range.end;
    }
    meter.release(3 * kk * m);
    totals.meter = meter;
    totals
}

/// Fills `lambda` for the batch and adds the event-indexed sums to `totals`.
fn event_terms<E: Executor>(
    model: &Model<'_>,
    range: Range<usize>,
    r: &[f64],
    lambda: &mut [f64],
    totals: &mut Totals,
    exec: &E,
) {
    let m = model.m;
    let kk = model.k;
    let n = range.len();
    let times = model.seq.times();
    let marks = model.seq.marks();
    let horizon = model.seq.horizon();
    let mu = model.params.mu();
    let gamma = model.params.gamma();
    let len = block_len(n);

    let mut items: Vec<(usize, &mut [f64], Option<EventPartial>)> = lambda
        .chunks_mut(len)
        .enumerate()
        .map(|(b, chunk)| (b * len, chunk, None))
        .collect();
    exec.for_each(&mut items, |(offset, lam, out)| {
        let mut part = EventPartial {
            log_sum: 0.0,
            compensator: 0.0,
            inv_lambda: vec![0.0; m],
            alpha_comp: vec![0.0; kk * m],
            gamma_comp: vec![0.0; kk],
            min_lambda: f64::INFINITY,
        };
        for (jj, slot) in lam.iter_mut().enumerate() {
            let j = *offset + jj;
            let i = range.start + j;
            let p = marks[i];
            let mut value = mu[p];
            for k in 0..kk {
                value += gamma[k] * r[k * n + j];
            }
            *slot = value;
            part.min_lambda = part.min_lambda.min(value);
            part.log_sum += math::ln(value);
            part.inv_lambda[p] += 1.0 / value;
            let rest = horizon - times[i];
            for k in 0..kk {
                let tail = math::one_minus_exp_neg(gamma[k] * rest);
                let cs = model.colsum(k, p);
                part.compensator += cs * tail;
                part.alpha_comp[k * m + p] += tail;
                part.gamma_comp[k] += cs * rest * math::exp(-gamma[k] * rest);
            }
        }
        *out = Some(part);
    });
    for (_, _, part) in items {
        let part = part.expect("every block is visited");
        totals.log_sum += part.log_sum;
        totals.compensator += part.compensator;
        totals.min_lambda = totals.min_lambda.min(part.min_lambda);
        add_into(&mut totals.inv_lambda, &part.inv_lambda);
        add_into(&mut totals.alpha_comp, &part.alpha_comp);
        add_into(&mut totals.gamma_comp, &part.gamma_comp);
    }
}

#[inline]
fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Runs `f` on each block of `0..n` and returns the results in block order.
fn reduce_blocks<E, T, F>(exec: &E, n: usize, f: F) -> Vec<T>
where
    E: Executor,
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let len = block_len(n);
    let mut items: Vec<(Range<usize>, Option<T>)> = (0..n.div_ceil(len))
        .map(|b| (b * len..((b + 1) * len).min(n), None))
        .collect();
    exec.for_each(&mut items, |(r, out)| *out = Some(f(r.clone())));
    items.into_iter().map(|(_, t)| t.expect("every block is visited")).collect()
}

/// One recurrence step `x ← s·x + v_i` for event `i > 0`.
#[inline]
fn step(model: &Model<'_>, k: usize, source: Source, i: usize, s: f64, x: &mut [f64]) {
    let q = model.seq.marks()[i - 1];
    match source {
        Source::Alpha => {
            for (xp, a) in x.iter_mut().zip(model.col(k, q)) {
                *xp = s * *xp + s * a;
            }
        }
        Source::TimeAlpha => {
            let c = s * model.seq.times()[i - 1];
            for (xp, a) in x.iter_mut().zip(model.col(k, q)) {
                *xp = s * *xp + c * a;
            }
        }
        Source::Indicator => {
            for xp in x.iter_mut() {
                *xp *= s;
            }
            x[q] += s;
        }
    }
}

/// Direct sum `Σ_{j<i} v_j(p) e^{-γ (t_i - t_j)}` for one component.
#[inline]
fn naive_component(model: &Model<'_>, k: usize, source: Source, i: usize, p: usize) -> f64 {
    let times = model.seq.times();
    let marks = model.seq.marks();
    let g = model.params.gamma()[k];
    let a = model.params.alpha_kernel(k);
    let m = model.m;
    let ti = times[i];
    let mut acc = 0.0;
    for j in 0..i {
        let w = math::exp(-g * (ti - times[j]));
        acc += match source {
            Source::Alpha => a[p * m + marks[j]] * w,
            Source::TimeAlpha => a[p * m + marks[j]] * times[j] * w,
            Source::Indicator => {
                if marks[j] == p {
                    w
                } else {
                    0.0
                }
            }
        };
    }
    acc
}

/// Writes `x_{m_i}(t_i)` for every event in `range` into `out` and advances
/// `carry` to the state at the batch's last event.
#[allow(clippy::too_many_arguments)]
fn pick_states<E: Executor>(
    model: &Model<'_>,
    k: usize,
    source: Source,
    range: Range<usize>,
    decay: &[f64],
    carry: &mut [f64],
    out: &mut [f64],
    backend: Backend,
    exec: &E,
    meter: &mut StateMeter,
) {
    let marks = model.seq.marks();
    let m = model.m;
    let n = range.len();
    match backend {
        Backend::Naive => {
            let len = block_len(n);
            let mut items: Vec<(usize, &mut [f64])> =
                out.chunks_mut(len).enumerate().map(|(b, c)| (b * len, c)).collect();
            exec.for_each(&mut items, |(offset, chunk)| {
                for (jj, o) in chunk.iter_mut().enumerate() {
                    let i = range.start + *offset + jj;
                    *o = naive_component(model, k, source, i, marks[i]);
                }
            });
        }
        Backend::Sequential => {
            let mut x = carry.to_vec();
            meter.take(m);
            for (j, i) in range.clone().enumerate() {
                if i > 0 {
                    step(model, k, source, i, decay[j], &mut x);
                }
                out[j] = x[marks[i]];
            }
            carry.copy_from_slice(&x);
            meter.release(m);
        }
        Backend::Scan => {
            let len = block_len(n);
            let blocks = n.div_ceil(len);
            let mut cum = vec![1.0; n];
            let mut totals_s = vec![1.0; blocks];
            let mut totals_v = vec![0.0; blocks * m];
            meter.take(n + blocks * (m + 1));
            {
                let mut items: Vec<_> = out
                    .chunks_mut(len)
                    .zip(cum.chunks_mut(len))
                    .zip(totals_s.iter_mut().zip(totals_v.chunks_mut(m)))
                    .enumerate()
                    .map(|(b, ((o, c), (ts, tv)))| (b * len, o, c, ts, tv))
                    .collect();
                exec.for_each(&mut items, |(offset, o, c, ts, tv)| {
                    let mut running = 1.0;
                    for jj in 0..o.len() {
                        let j = *offset + jj;
                        let i = range.start + j;
                        if i > 0 {
                            let s = decay[j];
                            step(model, k, source, i, s, tv);
                            running *= s;
                        }
                        o[jj] = tv[marks[i]];
                        c[jj] = running;
                    }
                    **ts = running;
                });
            }
            let carries = block_carries(totals_s, totals_v, m, carry, exec, meter);
            let mut items: Vec<_> = out
                .chunks_mut(len)
                .zip(cum.chunks(len))
                .zip(carries.chunks(m))
                .enumerate()
                .map(|(b, ((o, c), cin))| (b * len, o, c, cin))
                .collect();
            exec.for_each(&mut items, |(offset, o, c, cin)| {
                for jj in 0..o.len() {
                    let i = range.start + *offset + jj;
                    o[jj] += c[jj] * cin[marks[i]];
                }
            });
            meter.release(n + blocks * (m + 1) + blocks * m);
        }
    }
}

/// Scans block totals and returns each block's carried-in state `[b][p]`.
/// Advances `carry` past the whole batch. The returned buffer is metered and
/// must be released by the caller (`blocks · M` elements).
fn block_carries<E: Executor>(
    totals_s: Vec<f64>,
    totals_v: Vec<f64>,
    m: usize,
    carry: &mut [f64],
    exec: &E,
    meter: &mut StateMeter,
) -> Vec<f64> {
    let blocks = totals_s.len();
    let elements = ElementSeq::from_parts(m, totals_s, totals_v).expect("block totals are well-formed");
    let prefixes = scan_parallel(&elements, exec).expect("at least one block");
    let mut carries = vec![0.0; blocks * m];
    meter.take(blocks * m);
    carries[..m].copy_from_slice(carry);
    for b in 1..blocks {
        let (done, rest) = carries.split_at_mut(b * m);
        apply_prefix_into(prefixes.scalar(b - 1), prefixes.vector(b - 1), &done[..m], &mut rest[..m]);
    }
    let init = carry.to_vec();
    apply_prefix_into(prefixes.scalar(blocks - 1), prefixes.vector(blocks - 1), &init, carry);
    carries
}

/// Adds `Σ_{i: m_i = p} (γ_k/λ_i) K^k_q(t_i)` into `acc[p][q]` for the
/// batch and advances the count-state `carry`.
#[allow(clippy::too_many_arguments)]
fn accumulate_counts<E: Executor>(
    model: &Model<'_>,
    k: usize,
    range: Range<usize>,
    decay: &[f64],
    carry: &mut [f64],
    lambda: &[f64],
    acc: &mut [f64],
    backend: Backend,
    exec: &E,
    meter: &mut StateMeter,
) {
    let marks = model.seq.marks();
    let times = model.seq.times();
    let m = model.m;
    let n = range.len();
    let g = model.params.gamma()[k];
    match backend {
        Backend::Naive => {
            let parts = reduce_blocks(exec, n, |b| {
                let mut part = vec![0.0; m * m];
                for j in b {
                    let i = range.start + j;
                    let w = g / lambda[j];
                    let row = &mut part[marks[i] * m..(marks[i] + 1) * m];
                    for jp in 0..i {
                        row[marks[jp]] += w * math::exp(-g * (times[i] - times[jp]));
                    }
                }
                part
            });
            for part in parts {
                add_into(acc, &part);
            }
        }
        Backend::Sequential => {
            let mut x = carry.to_vec();
            meter.take(m);
            for (j, i) in range.clone().enumerate() {
                if i > 0 {
                    step(model, k, Source::Indicator, i, decay[j], &mut x);
                }
                let w = g / lambda[j];
                let row = &mut acc[marks[i] * m..(marks[i] + 1) * m];
                for (a, xq) in row.iter_mut().zip(&x) {
                    *a += w * xq;
                }
            }
            carry.copy_from_slice(&x);
            meter.release(m);
        }
        Backend::Scan => {
            let len = block_len(n);
            let blocks = n.div_ceil(len);
            let mut totals_s = vec![1.0; blocks];
            let mut totals_v = vec![0.0; blocks * m];
            // Per-block gradient partials: `part[p][q]` and the carry weights
            // `Σ_{i in b, m_i = p} w_i S_i`.
            let mut parts = vec![0.0; blocks * m * m];
            let mut weights = vec![0.0; blocks * m];
            meter.take(blocks * (m + 1));
            {
                let mut items: Vec<_> = totals_s
                    .iter_mut()
                    .zip(totals_v.chunks_mut(m))
                    .zip(parts.chunks_mut(m * m).zip(weights.chunks_mut(m)))
                    .enumerate()
                    .map(|(b, ((ts, tv), (part, wsum)))| (b * len, ts, tv, part, wsum))
                    .collect();
                exec.for_each(&mut items, |(offset, ts, tv, part, wsum)| {
                    let mut running = 1.0;
                    let end = (*offset + len).min(n);
                    for j in *offset..end {
                        let i = range.start + j;
                        if i > 0 {
                            let s = decay[j];
                            step(model, k, Source::Indicator, i, s, tv);
                            running *= s;
                        }
                        let w = g / lambda[j];
                        let p = marks[i];
                        let row = &mut part[p * m..(p + 1) * m];
                        for (a, xq) in row.iter_mut().zip(tv.iter()) {
                            *a += w * xq;
                        }
                        wsum[p] += w * running;
                    }
                    **ts = running;
                });
            }
            let carries = block_carries(totals_s, totals_v, m, carry, exec, meter);
            for b in 0..blocks {
                let cin = &carries[b * m..(b + 1) * m];
                for p in 0..m {
                    let w = weights[b * m + p];
                    let part = &parts[(b * m + p) * m..(b * m + p + 1) * m];
                    let row = &mut acc[p * m..(p + 1) * m];
                    for q in 0..m {
                        row[q] += part[q] + w * cin[q];
                    }
                }
            }
            meter.release(blocks * (m + 1) + blocks * m);
        }
    }
}
