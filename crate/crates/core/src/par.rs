//! Data-parallel helpers. With the `parallel` feature the batch loops run on
//! the rayon pool; without it every schedule degrades to a plain loop.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch operation distributes its independent work items.
///
/// Results are identical under both schedules: work items are pure and
/// every reduction happens afterwards in input order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    Parallel,
}

impl Default for Schedule {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Schedule::Parallel
        } else {
            Schedule::Sequential
        }
    }
}

/// Order-preserving map with a per-worker scratch value.
pub fn map_with<T, R, W, I, F>(schedule: Schedule, items: &[T], init: I, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    I: Fn() -> W + Sync + Send,
    F: Fn(&mut W, &T) -> R + Sync + Send,
{
    match schedule {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => items.par_iter().map_init(&init, |w, t| f(w, t)).collect(),
        _ => {
            let mut w = init();
            items.iter().map(|t| f(&mut w, t)).collect()
        }
    }
}

/// Order-preserving map over `0..n`.
pub fn map_range_with<R, W, I, F>(schedule: Schedule, n: usize, init: I, f: F) -> Vec<R>
where
    R: Send,
    I: Fn() -> W + Sync + Send,
    F: Fn(&mut W, usize) -> R + Sync + Send,
{
    match schedule {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => (0..n)
            .into_par_iter()
            .map_init(&init, |w, i| f(w, i))
            .collect(),
        _ => {
            let mut w = init();
            (0..n).map(|i| f(&mut w, i)).collect()
        }
    }
}
