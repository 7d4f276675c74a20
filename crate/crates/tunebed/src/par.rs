//! Parallel/sequential dispatch.
//!
//! With the `parallel` feature (default) [`map_collect`] fans work out over
//! rayon; without it, both functions are plain sequential maps. Output order
//! always matches input order, so callers see identical results either way.
//! [`map_collect_seq`] is always sequential — it exists so benches and tests
//! can compare the two lanes within one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
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

/// Sequential reference lane; identical contract to [`map_collect`].
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_and_preserve_order() {
        let items: Vec<u64> = (0..500).collect();
        let f = |x: &u64| x.wrapping_mul(0x9e3779b97f4a7c15) >> 7;
        assert_eq!(map_collect(&items, f), map_collect_seq(&items, f));
        assert_eq!(map_collect(&items, |x| *x), items);
    }
}
