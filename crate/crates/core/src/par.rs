//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns its results in index order; callers reduce the
//! returned vectors sequentially so floating point sums do not depend on the
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(0), …, f(n-1)`, in parallel when the `parallel` feature is on.
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

/// Maps `f` over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
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

/// Index-ordered sum; the summation order is fixed regardless of threading.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// Whether this build runs inner loops on rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
