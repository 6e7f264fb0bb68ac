//! Deterministic reductions.
//!
//! Sums over samples and particles use a pairwise tree with a fixed leaf size.
//! The tree shape depends only on the length, so a reduction returns the same
//! bits whether its terms were produced sequentially or in parallel.

const LEAF: usize = 8;

/// Pairwise sum of `term(0) + ... + term(n - 1)`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
        let len = hi - lo;
        if len <= LEAF {
            let mut acc = 0.0;
            for k in lo..hi {
                acc += term(k);
            }
            acc
        } else {
            let mid = lo + len / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, n, &term)
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs.len(), |k| xs[k])
}

/// Pairwise mean; zero for an empty range.
pub fn pairwise_mean_by<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    if n == 0 {
        return 0.0;
    }
    pairwise_sum_by(n, term) / n as f64
}

pub fn pairwise_mean(xs: &[f64]) -> f64 {
    pairwise_mean_by(xs.len(), |k| xs[k])
}

/// Left-to-right dot product over short, fixed-order vectors.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Dot product with four interleaved partial sums combined as `(s0 + s1) + (s2 + s3)`.
///
/// The order depends only on the length, so results are reproducible; it is
/// not bit-identical to [`dot`].
pub(crate) fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut s = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).fold(0.0, |t, (x, y)| t + x * y);
    for (x, y) in ca.zip(cb) {
        s[0] += x[0] * y[0];
        s[1] += x[1] * y[1];
        s[2] += x[2] * y[2];
        s[3] += x[3] * y[3];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

/// `acc += a · x`, elementwise.
pub(crate) fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (y, v) in acc.iter_mut().zip(x) {
        *y += a * v;
    }
}

pub(crate) fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Largest Euclidean norm among the `d`-long rows of `v`.
pub(crate) fn sup_row_norm(v: &[f64], d: usize) -> f64 {
    v.chunks_exact(d)
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max)
}

pub(crate) fn first_non_finite(groups: &[(&'static str, &[f64])]) -> Option<&'static str> {
    groups.iter().find(|(_, v)| v.iter().any(|x| !x.is_finite())).map(|(n, _)| *n)
}
