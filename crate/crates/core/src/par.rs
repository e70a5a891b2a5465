//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature [`map_indexed`] dispatches to rayon; without
//! it, it runs sequentially. Results are identical either way: maps preserve
//! index order and every reduction is done sequentially over the ordered
//! results.

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Parallel when the feature is on and `n >= min_parallel`.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, min_parallel: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if n >= min_parallel {
        map_indexed_par(n, f)
    } else {
        map_indexed_seq(n, f)
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _min_parallel: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let v = map_indexed(1000, 1, |i| i * 2);
        assert_eq!(v, (0..1000).map(|i| i * 2).collect::<Vec<_>>());
    }
}
