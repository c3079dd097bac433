//! Switch between data-parallel and sequential execution.
//!
//! Everything that fans out over independent work items (sweep cells,
//! condition-audit shards, covering-radius probes) goes through [`map`], so a
//! single knob controls parallelism. Results are returned in input order and
//! all sharding is deterministic, so both modes produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Use the rayon thread pool when the `parallel` feature is enabled,
    /// otherwise fall back to sequential execution.
    #[default]
    Auto,
    Sequential,
}

/// Apply `f` to every item, preserving input order.
pub fn map<T, U, F>(mode: ExecMode, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    match mode {
        ExecMode::Sequential => items.into_iter().map(f).collect(),
        ExecMode::Auto => {
            #[cfg(feature = "parallel")]
            {
                items.into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.into_iter().map(f).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let items: Vec<u64> = (0..257).collect();
        let seq = map(ExecMode::Sequential, items.clone(), |x| x * x + 1);
        let auto = map(ExecMode::Auto, items, |x| x * x + 1);
        assert_eq!(seq, auto);
        assert_eq!(seq[3], 10);
    }
}
