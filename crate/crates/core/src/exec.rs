//! Index-parallel loop helpers with a sequential fallback.
//!
//! Every parallel variant writes each output element from its index alone
//! and leaves reductions to the caller, so results are bit-identical to the
//! sequential path regardless of thread count. With the `parallel` feature
//! disabled all entry points degrade to plain loops.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this length the dispatching helpers stay sequential; rayon overhead
/// dominates tiny fills.
pub const PAR_CUTOFF: usize = 512;

/// Fine-grained fill: `out[i] = f(i)`. Dispatches to rayon for long slices.
pub fn fill_with<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if out.len() >= PAR_CUTOFF {
        fill_with_par(out, f);
        return;
    }
    fill_with_seq(out, f);
}

pub fn fill_with_seq<T, F>(out: &mut [T], f: F)
where
    F: Fn(usize) -> T,
{
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

#[cfg(feature = "parallel")]
pub fn fill_with_par<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    out.par_iter_mut()
        .with_min_len(128)
        .enumerate()
        .for_each(|(i, slot)| *slot = f(i));
}

/// Coarse-grained map for heavy independent cells (one solver run per
/// index). Order of the result is the index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
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

pub fn map_collect_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
