//! Batch execution over independent work items.
//!
//! `Parallel` uses rayon when the `parallel` feature is enabled and falls back
//! to the sequential path otherwise. Results always come back in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this mode actually runs on the rayon pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Index of the first item (in input order) for which `f` returns `Some`,
    /// together with that value.
    pub fn find_first<T, U, F>(self, items: &[T], f: F) -> Option<(usize, U)>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> Option<U> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items
                .par_iter()
                .enumerate()
                .filter_map(|(i, x)| f(x).map(|u| (i, u)))
                .find_first(|_| true);
        }
        items.iter().enumerate().find_map(|(i, x)| f(x).map(|u| (i, u)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&items, |x| x * x);
        let par = Execution::Parallel.map(&items, |x| x * x);
        assert_eq!(seq, par);
        let hit = |x: &u64| (x % 97 == 96).then_some(*x);
        assert_eq!(Execution::Sequential.find_first(&items, hit), Some((96, 96)));
        assert_eq!(Execution::Parallel.find_first(&items, hit), Some((96, 96)));
    }
}
