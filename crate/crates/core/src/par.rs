/// Execution policy for the data-parallel loops inside the solvers.
///
/// `Parallel` dispatches to rayon's current thread pool when the crate is
/// built with the `parallel` feature and silently runs sequentially
/// otherwise. Every loop writes disjoint output chunks, and reductions are
/// done per chunk and then summed in index order, so both policies give
/// bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when the parallel path is both requested and compiled in.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Runs `f(scratch, chunk_index, chunk)` over consecutive chunks of `data`.
///
/// `init` builds per-worker scratch state.
pub(crate) fn for_each_chunk<T, S, I, F>(exec: Exec, data: &mut [T], chunk: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    if chunk == 0 || data.is_empty() {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each_init(&init, |s, (c, out)| f(s, c, out));
        return;
    }
    let _ = exec;
    let mut scratch = init();
    for (c, out) in data.chunks_mut(chunk).enumerate() {
        f(&mut scratch, c, out);
    }
}

/// Fallible variant of [`for_each_chunk`]; stops at the first error.
pub(crate) fn try_for_each_chunk<T, S, E, I, F>(
    exec: Exec,
    data: &mut [T],
    chunk: usize,
    init: I,
    f: F,
) -> Result<(), E>
where
    T: Send,
    E: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) -> Result<(), E> + Sync + Send,
{
    if chunk == 0 || data.is_empty() {
        return Ok(());
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return data
            .par_chunks_mut(chunk)
            .enumerate()
            .try_for_each_init(&init, |s, (c, out)| f(s, c, out));
    }
    let _ = exec;
    let mut scratch = init();
    for (c, out) in data.chunks_mut(chunk).enumerate() {
        f(&mut scratch, c, out)?;
    }
    Ok(())
}
