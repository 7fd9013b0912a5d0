//! Small linear-algebra helpers shared across modules: deterministic
//! Hermitian eigendecompositions with fixed ordering and column phases.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Rounds to an 1e-8 grid for lexicographic eigenvector comparison.
fn lex_key(col: &DVector<Complex64>) -> Vec<(i64, i64)> {
    col.iter()
        .map(|z| ((z.re * 1e8).round() as i64, (z.im * 1e8).round() as i64))
        .collect()
}

/// Makes the largest-magnitude entry (ties: lowest index) real positive.
pub fn fix_column_phase(col: &mut DVector<Complex64>) {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (i, z) in col.iter().enumerate() {
        let n = z.norm();
        if n > best_norm + 1e-12 {
            best = i;
            best_norm = n;
        }
    }
    if best_norm > 0.0 {
        let z = col[best];
        let phase = z.conj() / z.norm();
        for v in col.iter_mut() {
            *v *= phase;
        }
    }
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues,
/// phase-fixed columns, and a deterministic order inside degenerate groups
/// (lexicographic on rounded eigenvector entries).
pub fn hermitian_eigen_asc(mat: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = mat.nrows();
    let herm = (mat + mat.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut cols: Vec<(f64, DVector<Complex64>)> = (0..n)
        .map(|k| {
            let mut c = DVector::from_column_slice(eig.eigenvectors.column(k).as_slice());
            fix_column_phase(&mut c);
            (eig.eigenvalues[k], c)
        })
        .collect();
    cols.sort_by(|a, b| {
        let qa = (a.0 / 1e-10).round() as i128;
        let qb = (b.0 / 1e-10).round() as i128;
        qa.cmp(&qb).then_with(|| lex_key(&a.1).cmp(&lex_key(&b.1)))
    });
    let vals = cols.iter().map(|(v, _)| *v).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, (_, c)) in cols.iter().enumerate() {
        vecs.set_column(k, c);
    }
    (vals, vecs)
}

/// Same as [`hermitian_eigen_asc`] with descending eigenvalues.
pub fn hermitian_eigen_desc(mat: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = mat.nrows();
    let (vals, vecs) = hermitian_eigen_asc(mat);
    let rev_vals: Vec<f64> = vals.into_iter().rev().collect();
    let mut rev_vecs = DMatrix::zeros(n, n);
    for k in 0..n {
        rev_vecs.set_column(k, &vecs.column(n - 1 - k).into_owned());
    }
    (rev_vals, rev_vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorts_and_reconstructs() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen_asc(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        let rec = &vecs
            * DMatrix::from_diagonal(&DVector::from_iterator(
                2,
                vals.iter().map(|&v| Complex64::new(v, 0.0)),
            ))
            * vecs.adjoint();
        assert!((m - rec).norm() < 1e-12);
    }

    #[test]
    fn column_phases_are_real_positive_on_pivot() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, 0.5),
                Complex64::new(0.5, -0.5),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let (_, vecs) = hermitian_eigen_asc(&m);
        for k in 0..2 {
            let col = vecs.column(k);
            let pivot = col.iter().cloned().max_by(|a, b| {
                a.norm().partial_cmp(&b.norm()).unwrap()
            });
            let pivot = pivot.unwrap();
            assert!(pivot.im.abs() < 1e-12);
            assert!(pivot.re > 0.0);
        }
    }
}
