//! Execution strategy for the data-parallel loops (battery runs, seed and
//! parameter sweeps).
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans work out
//! over the rayon global pool. Without it every request runs sequentially, so
//! callers never need their own `cfg` gates. Output order is always the input
//! order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// The strategy that will really be used for `self` in this build.
    pub fn effective(self) -> Execution {
        if Self::parallel_available() {
            self
        } else {
            Execution::Sequential
        }
    }

    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self.effective() {
            Execution::Sequential => items.into_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let out = exec.map((0..1000u64).collect(), |x| x * x);
            assert_eq!(out, (0..1000u64).map(|x| x * x).collect::<Vec<_>>());
        }
    }
}
