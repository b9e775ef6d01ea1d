//! Dense symmetric positive-definite solves for the small IRLS systems.

/// In-place Cholesky factorization of a row-major `n x n` matrix. Returns the
/// index of the first pivot that is not positive relative to its diagonal.
fn cholesky(a: &mut [f64], n: usize, rel_tol: f64) -> Result<(), usize> {
    for j in 0..n {
        let diag = a[j * n + j];
        let mut s = diag;
        for k in 0..j {
            s -= a[j * n + k] * a[j * n + k];
        }
        if !(s > rel_tol * diag.abs().max(f64::MIN_POSITIVE)) {
            return Err(j);
        }
        let l = s.sqrt();
        a[j * n + j] = l;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    Ok(())
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn spd_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = a.to_vec();
    cholesky(&mut l, n, 1e-13).ok()?;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Some(y)
}

/// Index of the first column of `rows` (observations x columns) that is
/// numerically a linear combination of earlier columns, if any.
pub fn first_dependent_column(rows: &[Vec<f64>], n_cols: usize) -> Option<usize> {
    let mut gram = vec![0.0; n_cols * n_cols];
    for row in rows {
        for i in 0..n_cols {
            for j in 0..n_cols {
                gram[i * n_cols + j] += row[i] * row[j];
            }
        }
    }
    // Scale to unit diagonal so the pivot test is relative per column.
    let scale: Vec<f64> = (0..n_cols).map(|i| gram[i * n_cols + i].sqrt()).collect();
    if let Some(i) = scale.iter().position(|&s| !(s > 0.0)) {
        return Some(i);
    }
    for i in 0..n_cols {
        for j in 0..n_cols {
            gram[i * n_cols + j] /= scale[i] * scale[j];
        }
    }
    cholesky(&mut gram, n_cols, 1e-10).err()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = [4.0, 1.0, 1.0, 3.0];
        let x = spd_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(spd_solve(&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn detects_dependent_columns() {
        let rows = vec![
            vec![1.0, 0.5, 2.0],
            vec![1.0, 1.5, 2.0],
            vec![1.0, -1.0, 2.0],
        ];
        assert_eq!(first_dependent_column(&rows, 3), Some(2));
        assert_eq!(first_dependent_column(&rows, 2), None);
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(first_dependent_column(&rows, 2), Some(1));
    }
}
