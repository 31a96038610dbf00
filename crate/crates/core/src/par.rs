//! Data-parallel helpers. With feature `parallel` (default) the indexed maps
//! fan out over rayon; results are always collected in input order and any
//! reduction happens sequentially afterwards, so outputs are identical with
//! and without the feature and for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, returning results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_range<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    map_range_seq(n, f)
}

/// Sequential twin of [`map_range`], always available (benches compare both).
pub(crate) fn map_range_seq<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}

/// Runs `f` over mutable row chunks of `data` (each chunk `width` long).
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk<T: Send>(
    data: &mut [T],
    width: usize,
    f: impl Fn(usize, &mut [T]) + Sync + Send,
) {
    data.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk<T>(data: &mut [T], width: usize, f: impl Fn(usize, &mut [T])) {
    for (i, chunk) in data.chunks_mut(width).enumerate() {
        f(i, chunk);
    }
}
