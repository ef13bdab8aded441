//! Thin switch between rayon and sequential iteration.
//!
//! Every helper returns results in index order, so callers that reduce the
//! output sequentially get bit-identical results with or without the
//! `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(i)` for `i in 0..n`, collecting in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Evaluates `f` on every element of `items`, collecting in order.
pub fn map_slice<'a, S, T, F>(items: &'a [S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&'a S) -> T + Sync + Send,
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

/// Like [`map_range`] but stops at an error. Which error is returned when
/// several indices fail is unspecified in parallel builds.
pub fn try_map_range<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    try_map_range_if(true, n, f)
}

/// [`try_map_range`] that stays sequential when `parallel` is false; for
/// callers whose work items may be too small to pay for a fork.
pub fn try_map_range_if<T, E, F>(parallel: bool, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Whether this build runs data-parallel loops on rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
        let s: Vec<usize> = map_slice(&v, |x| x / 2);
        assert_eq!(s, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn try_map_reports_error() {
        let r: Result<Vec<usize>, &str> =
            try_map_range(10, |i| if i == 7 { Err("seven") } else { Ok(i) });
        assert_eq!(r, Err("seven"));
    }
}
