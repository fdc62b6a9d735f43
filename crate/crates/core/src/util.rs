//! Small shared helpers: configuration indexing, a time source trait, and a
//! dense linear solver used by the vertex enumerator.

use alloc::vec;
use alloc::vec::Vec;

/// Time source injected into solvers that honor wall-clock limits.
///
/// The core crate has no access to a system clock; callers that want
/// `max_millis` limits enforced pass an implementation (the CLI wraps
/// `std::time::Instant`). [`NoClock`] always reports zero elapsed time,
/// which disables time limits.
pub trait Clock {
    fn elapsed_ms(&self) -> u64;
}

/// A clock that never advances; time limits are effectively ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> u64 {
        0
    }
}

/// Index of a joint configuration, with the *last* coordinate fastest.
///
/// This is the one configuration order used everywhere: CPT columns are
/// indexed by their parent configuration in this order, and factor tables
/// are laid out the same way over their scope.
pub fn config_index(values: &[usize], cards: &[usize]) -> usize {
    debug_assert_eq!(values.len(), cards.len());
    let mut idx = 0;
    for (v, c) in values.iter().zip(cards.iter()) {
        debug_assert!(v < c);
        idx = idx * c + v;
    }
    idx
}

/// Inverse of [`config_index`]: writes the configuration into `out`.
pub fn decode_config(mut idx: usize, cards: &[usize], out: &mut [usize]) {
    for i in (0..cards.len()).rev() {
        out[i] = idx % cards[i];
        idx /= cards[i];
    }
}

/// Iterates over all joint configurations of `cards` (last coordinate
/// fastest), calling `f` with each configuration.
pub fn for_each_config(cards: &[usize], mut f: impl FnMut(&[usize])) {
    let total: usize = cards.iter().product();
    let mut cfg = vec![0usize; cards.len()];
    for idx in 0..total {
        decode_config(idx, cards, &mut cfg);
        f(&cfg);
    }
}

/// Advances `values` to the next configuration in the canonical order.
/// Returns false once the configuration wraps around to all zeros.
pub fn next_config(values: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..values.len()).rev() {
        values[i] += 1;
        if values[i] < cards[i] {
            return true;
        }
        values[i] = 0;
    }
    false
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. `a` is row-major `n x n`. Returns None when the matrix is
/// singular to within `tol`.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize, tol: f64) -> Option<Vec<f64>> {
    let mut m = vec![0.0f64; n * (n + 1)];
    for r in 0..n {
        m[r * (n + 1)..r * (n + 1) + n].copy_from_slice(&a[r * n..(r + 1) * n]);
        m[r * (n + 1) + n] = b[r];
    }
    let w = n + 1;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * w + col].abs();
        for r in col + 1..n {
            let v = m[r * w + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= tol {
            return None;
        }
        if piv != col {
            for k in 0..w {
                m.swap(col * w + k, piv * w + k);
            }
        }
        let d = m[col * w + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[r * w + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..w {
                m[r * w + k] -= factor * m[col * w + k];
            }
        }
    }
    Some((0..n).map(|r| m[r * w + n] / m[r * w + r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip() {
        let cards = [2usize, 3, 2];
        let mut cfg = [0usize; 3];
        for idx in 0..12 {
            decode_config(idx, &cards, &mut cfg);
            assert_eq!(config_index(&cfg, &cards), idx);
        }
        // last coordinate fastest
        decode_config(1, &cards, &mut cfg);
        assert_eq!(cfg, [0, 0, 1]);
    }

    #[test]
    fn dense_solve_2x2() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let b = [5.0, 10.0];
        let x = solve_dense(&a, &b, 2, 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dense_solve_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        let b = [1.0, 2.0];
        assert!(solve_dense(&a, &b, 2, 1e-12).is_none());
    }
}
