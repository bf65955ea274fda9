//! Sequential or data-parallel execution of independent work items.
//!
//! `Parallel` uses rayon when the `parallel` feature is enabled and falls back
//! to the sequential path otherwise. Both paths produce identical results:
//! every item derives its randomness from its own index, and reductions are
//! only used with associative, commutative operations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl fmt::Display for Execution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Execution::Sequential => "sequential",
            Execution::Parallel => "parallel",
        })
    }
}

impl FromStr for Execution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" | "seq" => Ok(Execution::Sequential),
            "parallel" | "par" => Ok(Execution::Parallel),
            _ => Err(Error::InvalidParams(format!("unknown execution mode `{s}`"))),
        }
    }
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `f(i)` for `i in 0..n`, in index order.
    pub fn map_indices<R, F>(self, n: u64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// `f(x)` for each item, in order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Folds `0..n` into per-worker accumulators (each starting from `init()`)
    /// and merges them with `merge`.
    pub fn fold_indices<A, I, F, M>(self, n: u64, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(A, u64) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n)
                .into_par_iter()
                .fold(&init, &fold)
                .reduce(&init, &merge);
        }
        let _ = &merge;
        (0..n).fold(init(), fold)
    }
}
