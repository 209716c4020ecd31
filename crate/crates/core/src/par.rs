//! Chunked loops that run on rayon when the `parallel` feature is on.

use crate::Result;

/// Calls `f(index, chunk)` for every `chunk_len`-sized chunk of `data`.
pub(crate) fn for_each_chunk<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, c) in data.chunks_mut(chunk_len).enumerate() {
            f(i, c);
        }
    }
}

/// Fallible variant of [`for_each_chunk`]; stops at the first error.
pub(crate) fn try_for_each_chunk<T, F>(data: &mut [T], chunk_len: usize, f: F) -> Result<()>
where
    T: Send,
    F: Fn(usize, &mut [T]) -> Result<()> + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .try_for_each(|(i, c)| f(i, c))
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len)
            .enumerate()
            .try_for_each(|(i, c)| f(i, c))
    }
}

/// Transposes a row-major `rows × cols` array into `dst`.
pub(crate) fn transpose_into<T: Copy + Send + Sync>(
    src: &[T],
    dst: &mut [T],
    rows: usize,
    cols: usize,
) {
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(dst.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return;
    }
    for_each_chunk(dst, rows, |c, out| {
        for (r, o) in out.iter_mut().enumerate() {
            *o = src[r * cols + c];
        }
    });
}
