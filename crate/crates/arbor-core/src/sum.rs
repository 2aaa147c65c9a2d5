//! Compensated summation and deterministic chunked reductions.
//!
//! Reports produced by the experiment layer must be byte-identical across
//! thread counts. Every parallel accumulation therefore splits its index
//! range into chunks of a fixed size independent of the thread count, reduces
//! each chunk with compensated summation, and folds the chunk partials
//! sequentially in index order.

use num_complex::Complex64;
use std::ops::Range;

/// Neumaier variant of Kahan summation. The compensation also tracks the
/// error when the incoming term dominates the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Neumaier { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Componentwise compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierComplex {
    re: Neumaier,
    im: Neumaier,
}

impl NeumaierComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Fixed chunk length for parallel reductions. Not tunable: changing it
/// changes the grouping of partial sums and hence the output bits.
pub const PAR_CHUNK: usize = 1 << 14;

/// The index ranges `[0, n)` is split into, each of length `PAR_CHUNK`
/// except possibly the last.
pub fn chunk_ranges(n: usize) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(n / PAR_CHUNK + 1);
    let mut start = 0usize;
    while start < n {
        let end = usize::min(start + PAR_CHUNK, n);
        out.push(start..end);
        start = end;
    }
    out
}

/// Evaluates `eval` on every chunk of `[0, n)` in parallel and returns the
/// partial results in chunk order. The fold over partials is the caller's
/// job and must be sequential.
pub fn par_chunked<P, F>(n: usize, eval: F) -> Vec<P>
where
    P: Send,
    F: Fn(Range<usize>) -> P + Sync + Send,
{
    use rayon::prelude::*;
    chunk_ranges(n).into_par_iter().map(eval).collect()
}

/// Deterministic parallel sum of `term(i)` for `i in [0, n)`.
pub fn par_sum(n: usize, term: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partials = par_chunked(n, |range| {
        let mut acc = Neumaier::new();
        for i in range {
            acc.add(term(i));
        }
        acc.value()
    });
    let mut total = Neumaier::new();
    for p in partials {
        total.add(p);
    }
    total.value()
}
