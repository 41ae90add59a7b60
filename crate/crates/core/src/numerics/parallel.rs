//! Order-preserving parallel maps on scoped threads.

use std::thread;

fn workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

/// Maps `f` over `items` in parallel; the first error in item order wins.
pub fn try_par_map<I: Sync, T: Send, E: Send>(items: &[I], f: impl Fn(&I) -> Result<T, E> + Sync) -> Result<Vec<T>, E> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let chunk = items.len().div_ceil(workers()).max(1);
    let parts: Vec<Result<Vec<T>, E>> = thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Result<Vec<T>, E>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Infallible version of [`try_par_map`] over `0..n`.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let idx: Vec<usize> = (0..n).collect();
    match try_par_map(&idx, |&i| Ok::<T, ()>(f(i))) {
        Ok(v) => v,
        Err(()) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order_and_reports_first_error() {
        assert_eq!(par_map(1000, |i| i * 2)[999], 1998);
        let items: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> = try_par_map(&items, |&i| if i % 40 == 39 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(39));
    }
}
