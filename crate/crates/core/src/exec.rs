//! Execution strategy for the data-parallel loops (stencil batches and
//! Monte-Carlo chunks).
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon global pool; without it every strategy runs sequentially. Both
//! paths return results in index order, so downstream folds see the same
//! sequence of values and produce bitwise-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Monte-Carlo trials are processed in chunks of this many draws. The chunk
/// boundaries, and therefore the random streams, do not depend on the number
/// of worker threads.
pub const CHUNK_SIZE: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Execution, n: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// The random stream for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Splits `total` draws into `(chunk index, draws in chunk)` pairs.
pub fn chunk_layout(total: u64) -> Vec<(u64, u64)> {
    let full = total / CHUNK_SIZE;
    let rest = total % CHUNK_SIZE;
    let mut out: Vec<(u64, u64)> = (0..full).map(|c| (c, CHUNK_SIZE)).collect();
    if rest > 0 {
        out.push((full, rest));
    }
    out
}

/// Running mean and standard error from a sum and a sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean(),
            std_error: self.std_error(),
        }
    }
}

/// A Monte-Carlo mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// |mean - target| measured in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target).abs() / self.std_error
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunk_layout_covers_total() {
        let layout = chunk_layout(3 * CHUNK_SIZE + 5);
        assert_eq!(layout.len(), 4);
        assert_eq!(layout.iter().map(|c| c.1).sum::<u64>(), 3 * CHUNK_SIZE + 5);
        assert!(chunk_layout(0).is_empty());
    }

    #[test]
    fn parallel_and_sequential_maps_agree() {
        let f = |c: u64| {
            let mut rng = chunk_rng(11, c);
            rng.random::<f64>()
        };
        let a = map_range(Execution::Sequential, 64, f);
        let b = map_range(Execution::Parallel, 64, f);
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ_between_chunks() {
        let a: u64 = chunk_rng(1, 0).random();
        let b: u64 = chunk_rng(1, 1).random();
        assert_ne!(a, b);
    }

    #[test]
    fn moments_of_constant_have_zero_error() {
        let mut m = Moments::default();
        for _ in 0..10 {
            m.push(2.5);
        }
        assert_eq!(m.mean(), 2.5);
        assert_eq!(m.std_error(), 0.0);
    }
}
