//! Compressed transition matrices and prefix scans over them.
//!
//! A transition `[[s·I, v], [0ᵀ, 1]]` of size `(M+1) × (M+1)` is stored as
//! the pair `(s, v)`. The product of two such matrices keeps the structure:
//!
//! ```text
//! (s_a, v_a) ⊙ (s_b, v_b) = (s_a·s_b, s_a·v_b + v_a)
//! ```
//!
//! where `a` is the chronologically later factor (left in the matrix
//! product). The operator is associative but not commutative.
//!
//! Sequences are kept as structure-of-arrays ([`ElementSeq`]): all `s`
//! contiguous, all `v` contiguous row-major `[N][M]`.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::exec::Executor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("vector length {found} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("scan input is empty")]
    EmptyInput,
}

/// One compressed transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanElement {
    pub s: f64,
    pub v: Vec<f64>,
}

impl ScanElement {
    pub fn new(s: f64, v: Vec<f64>) -> Self {
        Self { s, v }
    }

    /// The monoid identity `(1, 0)`.
    pub fn identity(dim: usize) -> Self {
        Self {
            s: 1.0,
            v: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }
}

/// `later ⊙ earlier`.
pub fn combine(later: &ScanElement, earlier: &ScanElement) -> Result<ScanElement, ScanError> {
    if later.dim() != earlier.dim() {
        return Err(ScanError::DimensionMismatch {
            expected: later.dim(),
            found: earlier.dim(),
        });
    }
    let mut v = later.v.clone();
    let s = combine_onto_later(later.s, &mut v, earlier.s, &earlier.v);
    Ok(ScanElement { s, v })
}

/// In-place `later ⊙ earlier`: overwrites `later_v`, returns the new scalar.
/// `O(M)` and allocation-free.
#[inline]
pub fn combine_onto_later(later_s: f64, later_v: &mut [f64], earlier_s: f64, earlier_v: &[f64]) -> f64 {
    debug_assert_eq!(later_v.len(), earlier_v.len());
    for (l, e) in later_v.iter_mut().zip(earlier_v) {
        *l += later_s * e;
    }
    later_s * earlier_s
}

/// In-place `later ⊙ earlier`: overwrites `earlier_v`, returns the new scalar.
#[inline]
pub fn combine_onto_earlier(later_s: f64, later_v: &[f64], earlier_s: f64, earlier_v: &mut [f64]) -> f64 {
    debug_assert_eq!(later_v.len(), earlier_v.len());
    for (e, l) in earlier_v.iter_mut().zip(later_v) {
        *e = later_s * *e + l;
    }
    later_s * earlier_s
}

/// Applies a prefix to an initial state: `s·init + v`.
pub fn apply_prefix(prefix: &ScanElement, init: &[f64]) -> Result<Vec<f64>, ScanError> {
    if prefix.dim() != init.len() {
        return Err(ScanError::DimensionMismatch {
            expected: prefix.dim(),
            found: init.len(),
        });
    }
    let mut out = vec![0.0; init.len()];
    apply_prefix_into(prefix.s, &prefix.v, init, &mut out);
    Ok(out)
}

#[inline]
pub fn apply_prefix_into(s: f64, v: &[f64], init: &[f64], out: &mut [f64]) {
    for ((o, x), b) in out.iter_mut().zip(init).zip(v) {
        *o = s * x + b;
    }
}

/// A sequence of compressed elements, structure-of-arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSeq {
    dim: usize,
    s: Vec<f64>,
    v: Vec<f64>,
}

/// Inclusive prefixes `P_i = E_i ⊙ E_{i-1} ⊙ … ⊙ E_0`, same layout as the input.
pub type PrefixSeq = ElementSeq;

impl ElementSeq {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            s: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self {
            dim,
            s: Vec::with_capacity(n),
            v: Vec::with_capacity(n * dim),
        }
    }

    /// Builds from raw parts; `v.len()` must equal `s.len() * dim`.
    pub fn from_parts(dim: usize, s: Vec<f64>, v: Vec<f64>) -> Result<Self, ScanError> {
        if v.len() != s.len() * dim {
            return Err(ScanError::DimensionMismatch {
                expected: s.len() * dim,
                found: v.len(),
            });
        }
        Ok(Self { dim, s, v })
    }

    pub fn from_elements(dim: usize, elements: &[ScanElement]) -> Result<Self, ScanError> {
        let mut seq = Self::with_capacity(dim, elements.len());
        for e in elements {
            seq.push(e.s, &e.v)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, s: f64, v: &[f64]) -> Result<(), ScanError> {
        if v.len() != self.dim {
            return Err(ScanError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        self.s.push(s);
        self.v.extend_from_slice(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn scalars(&self) -> &[f64] {
        &self.s
    }

    pub fn vectors(&self) -> &[f64] {
        &self.v
    }

    pub fn scalar(&self, i: usize) -> f64 {
        self.s[i]
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.v[i * self.dim..(i + 1) * self.dim]
    }

    pub fn element(&self, i: usize) -> ScanElement {
        ScanElement::new(self.s[i], self.vector(i).to_vec())
    }

    pub fn into_parts(self) -> (usize, Vec<f64>, Vec<f64>) {
        (self.dim, self.s, self.v)
    }
}

/// Inclusive left fold: `P_0 = E_0`, `P_i = E_i ⊙ P_{i-1}`.
pub fn scan_sequential(elements: &ElementSeq) -> Result<PrefixSeq, ScanError> {
    if elements.is_empty() {
        return Err(ScanError::EmptyInput);
    }
    let m = elements.dim;
    let mut out = elements.clone();
    for i in 1..out.len() {
        let (done, rest) = out.v.split_at_mut(i * m);
        let prev = &done[(i - 1) * m..];
        out.s[i] = combine_onto_later(out.s[i], &mut rest[..m], out.s[i - 1], prev);
    }
    Ok(out)
}

/// Elements per subtree handled by a single task. The combine tree itself
/// never depends on this value or on the executor: it only groups the
/// lowest tree levels into tasks.
const LEAF: usize = 1 << 9;

/// Inclusive Blelloch scan.
///
/// The input is padded with identities to the next power of two, reduced up
/// a balanced binary tree (upsweep), pushed back down (downsweep) to obtain
/// exclusive prefixes, and converted to inclusive prefixes with one extra
/// combine per element. The tree is fixed by the padded length, so results
/// are bitwise identical for every executor and worker count.
pub fn scan_parallel<E: Executor>(elements: &ElementSeq, exec: &E) -> Result<PrefixSeq, ScanError> {
    let n = elements.len();
    if n == 0 {
        return Err(ScanError::EmptyInput);
    }
    let m = elements.dim;
    if m == 0 {
        // Scalars only; scan them with a dummy one-dimensional vector.
        let lifted = ElementSeq {
            dim: 1,
            s: elements.s.clone(),
            v: vec![0.0; n],
        };
        let out = scan_parallel(&lifted, exec)?;
        return Ok(ElementSeq { dim: 0, s: out.s, v: Vec::new() });
    }
    let padded = n.next_power_of_two();
    let mut s = vec![1.0; padded];
    s[..n].copy_from_slice(&elements.s);
    let mut v = vec![0.0; padded * m];
    v[..n * m].copy_from_slice(&elements.v);

    let leaf = LEAF.min(padded);

    // Upsweep inside each leaf subtree.
    run_blocks(exec, &mut s, &mut v, m, leaf, |bs, bv| {
        let mut stride = 2;
        while stride <= bs.len() {
            for base in (0..bs.len()).step_by(stride) {
                up_combine(&mut bs[base..base + stride], &mut bv[base * m..(base + stride) * m], m);
            }
            stride *= 2;
        }
    });
    // Upsweep above the leaves.
    let mut stride = leaf * 2;
    while stride <= padded {
        run_blocks(exec, &mut s, &mut v, m, stride, |bs, bv| up_combine(bs, bv, m));
        stride *= 2;
    }

    s[padded - 1] = 1.0;
    v[(padded - 1) * m..].fill(0.0);

    // Downsweep above the leaves.
    let mut stride = padded;
    while stride > leaf {
        run_blocks(exec, &mut s, &mut v, m, stride, |bs, bv| down_combine(bs, bv, m));
        stride /= 2;
    }
    // Downsweep inside each leaf subtree.
    run_blocks(exec, &mut s, &mut v, m, leaf, |bs, bv| {
        let mut stride = bs.len();
        while stride >= 2 {
            for base in (0..bs.len()).step_by(stride) {
                down_combine(&mut bs[base..base + stride], &mut bv[base * m..(base + stride) * m], m);
            }
            stride /= 2;
        }
    });

    // Exclusive → inclusive: P_i = E_i ⊙ X_i.
    s.truncate(n);
    v.truncate(n * m);
    {
        let mut items: Vec<_> = s
            .chunks_mut(leaf)
            .zip(v.chunks_mut(leaf * m))
            .zip(elements.s.chunks(leaf).zip(elements.v.chunks(leaf * m)))
            .collect();
        exec.for_each(&mut items, |((xs, xv), (es, ev))| {
            for (j, x) in xs.iter_mut().enumerate() {
                *x = combine_onto_earlier(es[j], &ev[j * m..(j + 1) * m], *x, &mut xv[j * m..(j + 1) * m]);
            }
        });
    }
    Ok(ElementSeq { dim: m, s, v })
}

/// Splits `s`/`v` into aligned blocks of `block` elements and runs `f` on each.
fn run_blocks<E, F>(exec: &E, s: &mut [f64], v: &mut [f64], m: usize, block: usize, f: F)
where
    E: Executor,
    F: Fn(&mut [f64], &mut [f64]) + Sync + Send,
{
    let mut items: Vec<_> = s.chunks_mut(block).zip(v.chunks_mut(block * m)).collect();
    exec.for_each(&mut items, |(bs, bv)| f(bs, bv));
}

/// Upsweep node: `right ← right ⊙ mid` for a block of even length.
#[inline]
fn up_combine(bs: &mut [f64], bv: &mut [f64], m: usize) {
    let len = bs.len();
    let mid = len / 2 - 1;
    let right = len - 1;
    let (lo, hi) = bv.split_at_mut(right * m);
    bs[right] = combine_onto_later(bs[right], &mut hi[..m], bs[mid], &lo[mid * m..(mid + 1) * m]);
}

/// Downsweep node: `mid ← right`, `right ← mid_old ⊙ right`.
#[inline]
fn down_combine(bs: &mut [f64], bv: &mut [f64], m: usize) {
    let len = bs.len();
    let mid = len / 2 - 1;
    let right = len - 1;
    bs.swap(mid, right);
    let (lo, hi) = bv.split_at_mut(right * m);
    lo[mid * m..(mid + 1) * m].swap_with_slice(&mut hi[..m]);
    bs[right] = combine_onto_later(bs[right], &mut hi[..m], bs[mid], &lo[mid * m..(mid + 1) * m]);
}
