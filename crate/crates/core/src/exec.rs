//! Data-parallel helpers.
//!
//! With the default `parallel` feature these fan work out over rayon;
//! without it they degrade to plain sequential loops. Outputs preserve
//! input order in both modes, so results never depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over `0..n`, preserving index order.
pub fn par_map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Splits `0..total` into contiguous chunks, maps each chunk, and folds
/// the per-chunk results left to right. The fold order is fixed, so any
/// associative `combine` yields a deterministic result.
pub fn par_chunk_reduce<U, F, G>(total: u64, chunk: u64, map: F, combine: G, identity: U) -> U
where
    U: Send,
    F: Fn(u64, u64) -> U + Sync + Send,
    G: Fn(U, U) -> U,
{
    assert!(chunk > 0);
    let ranges: Vec<(u64, u64)> = {
        let mut v = Vec::new();
        let mut start = 0;
        while start < total {
            let end = (start + chunk).min(total);
            v.push((start, end));
            start = end;
        }
        v
    };
    let parts = par_map(&ranges, |&(a, b)| map(a, b));
    parts.into_iter().fold(identity, combine)
}
