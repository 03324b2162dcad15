//! Batch execution helpers. With the `parallel` feature (default) these fan
//! out over rayon, preserving input order; without it they fall back to plain
//! sequential iteration. The `*_seq` variants are always sequential, so
//! benchmarks can compare both paths in one build.

#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential reference implementation of [`map_collect`].
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Applies `f` to each `row_len` chunk of `buf` (disjoint rows, so the
/// parallel and sequential paths are bitwise identical).
#[cfg(feature = "parallel")]
pub fn for_each_row_mut<F>(buf: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    use rayon::prelude::*;
    buf.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_row_mut<F>(buf: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    buf.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Sequential reference implementation of [`for_each_row_mut`].
pub fn for_each_row_mut_seq<F>(buf: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]),
{
    buf.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let items: Vec<usize> = (0..1000).collect();
        let par = map_collect(&items, |&i| i * i);
        let seq = map_collect_seq(&items, |&i| i * i);
        assert_eq!(par, seq);
    }

    #[test]
    fn row_updates_agree() {
        let mut a = vec![0.0; 12 * 7];
        let mut b = a.clone();
        let f = |i: usize, row: &mut [f64]| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = (i * 31 + k) as f64;
            }
        };
        for_each_row_mut(&mut a, 7, f);
        for_each_row_mut_seq(&mut b, 7, f);
        assert_eq!(a, b);
    }
}
