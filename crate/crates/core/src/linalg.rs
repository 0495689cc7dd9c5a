//! Small dense linear solves for the fitters (n <= 4).

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tiny` relative to the matrix
/// scale.
pub(crate) fn solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));

    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let tiny = scale * 1e-13 * n as f64;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < tiny {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in (row + 1)..n {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Invert a small symmetric positive-definite matrix by solving against the
/// identity columns. Returns `None` on singularity.
pub(crate) fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        columns.push(solve(&mut m, &mut e)?);
    }
    // columns[j][i] = inv[i][j]
    Some((0..n).map(|i| (0..n).map(|j| columns[j][i]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_3x3() {
        let mut a = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ];
        let x_true = [1.0, -2.0, 3.0];
        let mut b = vec![
            4.0 * 1.0 + 1.0 * -2.0,
            1.0 * 1.0 + 3.0 * -2.0 + 1.0 * 3.0,
            1.0 * -2.0 + 2.0 * 3.0,
        ];
        let x = solve(&mut a, &mut b).unwrap();
        for (got, want) in x.iter().zip(x_true.iter()) {
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn detects_singularity() {
        let mut a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let mut b = vec![1.0, 2.0];
        assert!(solve(&mut a, &mut b).is_none());
    }

    #[test]
    fn inverts_2x2() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let inv = invert(&a).unwrap();
        assert_relative_eq!(inv[0][0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(inv[0][1], -1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(inv[1][1], 2.0 / 3.0, max_relative = 1e-12);
    }
}
