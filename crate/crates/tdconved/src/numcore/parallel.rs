//! Deterministic helper for data-parallel loops. Results are identical for
//! every thread count because each index is computed independently and
//! collected in index order.

/// Computes `f(0..n)` across up to `threads` OS threads and returns the
/// results in index order. With `threads <= 1` this is a plain map.
pub fn parallel_fill<R, F>(threads: usize, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let workers = threads.min(n);
    let chunk = n.div_ceil(workers);
    let mut out: Vec<Option<R>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut rest: &mut [Option<R>] = &mut out;
        let mut start = 0;
        while start < n {
            let len = chunk.min(n - start);
            let (head, tail) = rest.split_at_mut(len);
            rest = tail;
            let f = &f;
            scope.spawn(move || {
                for (j, slot) in head.iter_mut().enumerate() {
                    *slot = Some(f(start + j));
                }
            });
            start += len;
        }
    });
    out.into_iter().map(|o| o.expect("every slot filled")).collect()
}
