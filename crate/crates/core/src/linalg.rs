//! Small dense matrix utilities for matrix-variate observation models:
//! column-major vectorization, half-vectorization of symmetric matrices and
//! the duplication/elimination matrices relating the two,
//!
//! ```text
//! D_n · vech(A) = vec(A),    L_n · vec(A) = vech(A)
//! ```
//!
//! for every symmetric `n×n` matrix `A`. Entries of `D_n` and `L_n` are 0/1.

use crate::{Error, Matrix, Result, Vector};

/// Default tolerance for the symmetry check in [`vech`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Column-major vectorization: stacks the columns of `a` into a single vector.
pub fn vec(a: &Matrix) -> Vector {
    Vector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`] for a matrix of known dimensions.
pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Matrix {
    assert_eq!(v.len(), rows * cols, "unvec: length mismatch");
    Matrix::from_column_slice(rows, cols, v.as_slice())
}

/// Half-vectorization: stacks the lower triangle of a symmetric matrix
/// column by column, `(a11, a21, …, an1, a22, a32, …)`.
///
/// Fails with [`Error::NotSymmetric`] when the input is asymmetric beyond
/// [`SYMMETRY_TOL`] relative to its largest entry.
pub fn vech(a: &Matrix) -> Result<Vector> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "vech: matrix must be square");
    let scale = a.amax().max(1.0);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let mut out = Vector::zeros(n * (n + 1) / 2);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            out[k] = a[(i, j)];
            k += 1;
        }
    }
    Ok(out)
}

/// Rebuilds the symmetric matrix whose half-vectorization is `v`.
pub fn unvech(v: &Vector, n: usize) -> Matrix {
    assert_eq!(v.len(), n * (n + 1) / 2, "unvech: length mismatch");
    let mut a = Matrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            a[(i, j)] = v[k];
            a[(j, i)] = v[k];
            k += 1;
        }
    }
    a
}

/// Index of entry `(i, j)`, `i >= j`, within `vech` of an `n×n` matrix.
fn vech_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * n - j * (j + 1) / 2 + i
}

/// The duplication matrix `D_n ∈ R^{n²×n(n+1)/2}` and elimination matrix
/// `L_n ∈ R^{n(n+1)/2×n²}` satisfying `D_n·vech(A) = vec(A)` and
/// `L_n·vec(A) = vech(A)` for symmetric `A`.
pub fn vech_operators(n: usize) -> (Matrix, Matrix) {
    assert!(n >= 1, "vech_operators: n must be >= 1");
    let half = n * (n + 1) / 2;
    let mut dup = Matrix::zeros(n * n, half);
    let mut elim = Matrix::zeros(half, n * n);
    for j in 0..n {
        for i in 0..n {
            let vec_idx = j * n + i;
            let (lo, hi) = if i >= j { (i, j) } else { (j, i) };
            let h = vech_index(lo, hi, n);
            dup[(vec_idx, h)] = 1.0;
            if i >= j {
                elim[(h, vec_idx)] = 1.0;
            }
        }
    }
    (dup, elim)
}

/// The duplication matrix `D_n` alone.
pub fn duplication_matrix(n: usize) -> Matrix {
    vech_operators(n).0
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(a: &Matrix) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn vec_is_column_major() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec(&a), vector(&[1.0, 3.0, 2.0, 4.0]));
        assert_eq!(vec(&Matrix::identity(2, 2)), vector(&[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn vech_stacks_lower_triangle() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]);
        assert_eq!(vech(&a).unwrap(), vector(&[1.0, 2.0, 5.0]));
    }

    #[test]
    fn vech_rejects_asymmetric_input() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 5.0]);
        assert!(matches!(vech(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn unvech_round_trips() {
        let v = vector(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let a = unvech(&v, 3);
        assert_eq!(vech(&a).unwrap(), v);
    }

    #[test]
    fn operators_scalar_case() {
        let (d, l) = vech_operators(1);
        assert_eq!(d, Matrix::from_element(1, 1, 1.0));
        assert_eq!(l, Matrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn duplication_reproduces_symbolic_2x2() {
        // A = [[a, b], [b, c]] has vech = (a, b, c) and vec = (a, b, b, c).
        let (d, _) = vech_operators(2);
        let out = &d * vector(&[1.0, 2.0, 3.0]);
        assert_eq!(out, vector(&[1.0, 2.0, 2.0, 3.0]));
    }

    #[test]
    fn elimination_left_inverts_duplication() {
        for n in 1..=4 {
            let (d, l) = vech_operators(n);
            let prod = &l * &d;
            let half = n * (n + 1) / 2;
            assert_abs_diff_eq!(prod, Matrix::identity(half, half));
        }
    }

    #[test]
    fn kron_matches_hand_example() {
        // y^T ⊗ I_2 at y = (1, 2) picks out [I, 2I].
        let y = Matrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let k = kron(&y, &Matrix::identity(2, 2));
        let expected =
            Matrix::from_row_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 2.0]);
        assert_abs_diff_eq!(k, expected);
    }

    proptest! {
        // D_n·vech(A) = vec(A) and L_n·vec(A) = vech(A) exactly: the operator
        // entries are 0/1 so no rounding is involved.
        #[test]
        fn operators_are_exact_on_random_symmetric(n in 1usize..=3, seed in any::<u64>()) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
            };
            let mut a = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let val = next();
                    a[(i, j)] = val;
                    a[(j, i)] = val;
                }
            }
            let (d, l) = vech_operators(n);
            let h = vech(&a).unwrap();
            prop_assert_eq!(&d * &h, vec(&a));
            prop_assert_eq!(&l * vec(&a), h);
        }
    }
}
