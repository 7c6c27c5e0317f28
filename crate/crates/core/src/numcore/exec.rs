use serde::{Deserialize, Serialize};

/// How batch-level work is scheduled. Results never depend on the choice:
/// work items are mapped independently and collected in input order, and
/// every reduction over them runs sequentially in that order.
///
/// Without the `parallel` feature, `Parallel` runs sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
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
    /// `items.iter().map(f).collect()`, possibly spread over the rayon pool.
    pub fn map_ordered<I, R, F>(self, items: &[I], f: F) -> Vec<R>
    where
        I: Sync,
        R: Send,
        F: Fn(usize, &I) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel if items.len() > 1 => {
                use rayon::prelude::*;
                items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
            }
            _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        }
    }
}
