//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature (default) the map runs on the rayon pool;
//! without it everything runs on the calling thread. Both variants return
//! results in input order, so anything merged from them is identical.

/// Sequential map, always available (used by the benches as the baseline).
pub fn map_sequential<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    map_sequential(items, f)
}

/// Install a global pool with `workers` threads. No-op without `parallel`.
/// Fails silently if a pool was already built.
pub fn set_workers(workers: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
}

/// Worker count from `ADALAB_WORKERS`, if set and valid.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("ADALAB_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = map(items.clone(), |x| x * x + 1);
        let b = map_sequential(items, |x| x * x + 1);
        assert_eq!(a, b);
    }
}
