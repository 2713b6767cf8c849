use crate::error::EvalError;

/// Maps `f` over `items` on up to `jobs` threads. Results come back in
/// input order, so any reduction over them is independent of scheduling.
pub(crate) fn map_ordered<I, T, F>(items: &[I], jobs: usize, f: F) -> Result<Vec<T>, EvalError>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T, EvalError> + Sync + Send,
{
    if jobs <= 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    pool.install(|| items.par_iter().map(f).collect())
}
