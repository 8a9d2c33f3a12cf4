//! Fraction-free exact linear solving.
//!
//! Bareiss elimination keeps every intermediate entry an integer minor of the
//! input, so there is no rational normalization until back-substitution.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::scalar::{Int, Rational};

/// Solve `A x = b` exactly for integer `A` (possibly overdetermined), where a
/// unique solution is expected. Returns `None` when the system is rank
/// deficient or inconsistent.
///
/// Forward elimination is fraction-free (Bareiss) with row pivoting; among
/// candidate pivots the smallest-magnitude nonzero entry is chosen, which
/// keeps the integer content of later rows down. Back-substitution produces
/// the rational solution from the triangular integer system.
pub fn solve_exact(mut a: Vec<Vec<Int>>, mut b: Vec<Int>) -> Option<Vec<Rational>> {
    let n_rows = a.len();
    if n_rows == 0 {
        return None;
    }
    let n_cols = a[0].len();
    if n_rows < n_cols {
        return None;
    }
    debug_assert!(a.iter().all(|row| row.len() == n_cols));
    debug_assert_eq!(b.len(), n_rows);

    let mut prev_pivot = Int::from(1);
    for col in 0..n_cols {
        let pivot_row = (col..n_rows)
            .filter(|&r| !a[r][col].is_zero())
            .min_by_key(|&r| a[r][col].magnitude().bits())?;
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col].clone();
        for r in col + 1..n_rows {
            let factor = a[r][col].clone();
            let (upper, lower) = a.split_at_mut(r);
            let (pivot_row, row) = (&upper[col], &mut lower[0]);
            for (cell, above) in row.iter_mut().zip(pivot_row).skip(col + 1) {
                let v = &pivot * &*cell - &factor * above;
                *cell = exact_div(v, &prev_pivot);
            }
            let v = &pivot * &b[r] - &factor * &b[col];
            b[r] = exact_div(v, &prev_pivot);
            a[r][col] = Int::zero();
        }
        prev_pivot = pivot;
    }

    // leftover rows must have eliminated to 0 = 0
    if b[n_cols..].iter().any(|v| !v.is_zero()) {
        return None;
    }

    let mut x = vec![Rational::zero(); n_cols];
    for col in (0..n_cols).rev() {
        let mut acc = Rational::from_integer(b[col].clone());
        for c in col + 1..n_cols {
            acc -= Rational::from_integer(a[col][c].clone()) * &x[c];
        }
        x[col] = acc / Rational::from_integer(a[col][col].clone());
    }
    Some(x)
}

fn exact_div(v: Int, d: &Int) -> Int {
    debug_assert!(!d.is_zero());
    debug_assert!((&v % d).is_zero(), "Bareiss division must be exact");
    v / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn int_matrix(rows: &[&[i64]]) -> Vec<Vec<Int>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| Int::from(v)).collect())
            .collect()
    }

    #[test]
    fn solves_small_system() {
        // x + y = 3, x - y = 1  =>  x = 2, y = 1
        let a = int_matrix(&[&[1, 1], &[1, -1]]);
        let b = vec![Int::from(3), Int::from(1)];
        let x = solve_exact(a, b).unwrap();
        assert_eq!(x, vec![rat(2, 1), rat(1, 1)]);
    }

    #[test]
    fn solves_overdetermined_consistent_system() {
        let a = int_matrix(&[&[1, 1], &[1, -1], &[2, 0]]);
        let b = vec![Int::from(3), Int::from(1), Int::from(4)];
        let x = solve_exact(a, b).unwrap();
        assert_eq!(x, vec![rat(2, 1), rat(1, 1)]);
    }

    #[test]
    fn rejects_inconsistent_system() {
        let a = int_matrix(&[&[1, 1], &[1, -1], &[2, 0]]);
        let b = vec![Int::from(3), Int::from(1), Int::from(5)];
        assert!(solve_exact(a, b).is_none());
    }

    #[test]
    fn rejects_singular_system() {
        let a = int_matrix(&[&[1, 1], &[2, 2]]);
        let b = vec![Int::from(3), Int::from(6)];
        assert!(solve_exact(a, b).is_none());
    }

    #[test]
    fn rational_solution() {
        // 2x + 3y = 1, 4x - y = 0  =>  x = 1/14, y = 2/7
        let a = int_matrix(&[&[2, 3], &[4, -1]]);
        let b = vec![Int::from(1), Int::from(0)];
        let x = solve_exact(a, b).unwrap();
        assert_eq!(x, vec![rat(1, 14), rat(2, 7)]);
    }

    proptest::proptest! {
        // random systems with a planted integer solution round-trip exactly
        #[test]
        fn planted_solutions_are_recovered(seed in 0u64..2000) {
            let mut rng = crate::rng::seeded(seed);
            let n = 1 + crate::rng::below(&mut rng, 7) as usize;
            let entry = |rng: &mut rand_chacha::ChaCha12Rng| {
                Int::from(crate::rng::below(rng, 21) as i64 - 10)
            };
            let a: Vec<Vec<Int>> =
                (0..n).map(|_| (0..n).map(|_| entry(&mut rng)).collect()).collect();
            let x: Vec<Int> = (0..n).map(|_| entry(&mut rng)).collect();
            let b: Vec<Int> = a
                .iter()
                .map(|row| row.iter().zip(&x).map(|(c, v)| c * v).sum())
                .collect();
            if let Some(solution) = solve_exact(a.clone(), b.clone()) {
                // nonsingular case: the planted solution is unique
                let expected: Vec<Rational> =
                    x.iter().map(|v| Rational::from_integer(v.clone())).collect();
                proptest::prop_assert_eq!(solution, expected);
            } else {
                // must only fail on genuinely singular matrices
                proptest::prop_assert!(determinant_is_zero(&a));
            }
        }
    }

    /// Fraction-free determinant test (expansion via elimination on a copy).
    fn determinant_is_zero(a: &[Vec<Int>]) -> bool {
        let n = a.len();
        let mut m: Vec<Vec<Rational>> = a
            .iter()
            .map(|row| row.iter().map(|v| Rational::from_integer(v.clone())).collect())
            .collect();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
                return true;
            };
            m.swap(col, pivot);
            for r in col + 1..n {
                let factor = &m[r][col] / &m[col][col];
                for c in col..n {
                    let v = &m[r][c] - &factor * &m[col][c];
                    m[r][c] = v;
                }
            }
        }
        false
    }
}
