//! Small dense linear algebra for the feasibility projection: just enough
//! to solve the Gram systems behind minimum-norm equality corrections.

/// Solves g y = r by Gaussian elimination with partial pivoting. Rows that
/// eliminate to zero are accepted when their right-hand side is also zero
/// (dependent but consistent constraints) and reject the system otherwise.
/// Free variables are set to zero.
pub(crate) fn solve_gram(mut g: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    debug_assert!(g.len() == n && g.iter().all(|row| row.len() == n));
    let scale = g
        .iter()
        .flatten()
        .fold(0.0_f64, |a, &v| a.max(v.abs()))
        .max(1.0);
    let tol = 1e-12 * scale;

    let mut pivot_col = vec![usize::MAX; n];
    let mut row = 0;
    for col in 0..n {
        let Some(best) = (row..n).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()))
        else {
            break;
        };
        if g[best][col].abs() <= tol {
            continue;
        }
        g.swap(row, best);
        r.swap(row, best);
        let pivot = g[row].clone();
        for i in 0..n {
            if i != row && g[i][col].abs() > 0.0 {
                let f = g[i][col] / pivot[col];
                for (gik, &pk) in g[i][col..].iter_mut().zip(&pivot[col..]) {
                    *gik -= f * pk;
                }
                r[i] -= f * r[row];
            }
        }
        pivot_col[row] = col;
        row += 1;
        if row == n {
            break;
        }
    }
    // Remaining rows are all-zero combinations; they must be consistent.
    if r[row..]
        .iter()
        .any(|&ri| ri.abs() > 1e-7 * scale.max(ri.abs() / 1e7))
    {
        return None;
    }
    let mut y = vec![0.0; n];
    for i in 0..row {
        y[pivot_col[i]] = r[i] / g[i][pivot_col[i]];
    }
    Some(y)
}

/// Minimum-norm correction onto the affine set {x : rows x = b}: returns
/// x0 + rows^T y with (rows rows^T) y = b - rows x0. Entries where `frozen`
/// is set are pinned to zero and excluded from the correction.
pub(crate) fn project_affine(
    x0: &[f64],
    rows: &[Vec<f64>],
    b: &[f64],
    frozen: &[bool],
) -> Option<Vec<f64>> {
    let n = x0.len();
    let k = rows.len();
    debug_assert!(b.len() == k && frozen.len() == n);
    let live = |j: usize| !frozen[j];

    let mut residual = vec![0.0; k];
    for (i, row) in rows.iter().enumerate() {
        let ax: f64 = (0..n).filter(|&j| live(j)).map(|j| row[j] * x0[j]).sum();
        residual[i] = b[i] - ax;
    }
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for l in i..k {
            let v: f64 = (0..n)
                .filter(|&j| live(j))
                .map(|j| rows[i][j] * rows[l][j])
                .sum();
            gram[i][l] = v;
            gram[l][i] = v;
        }
    }
    let y = solve_gram(gram, residual)?;
    let mut x = vec![0.0; n];
    for j in 0..n {
        if live(j) {
            x[j] = x0[j] + rows.iter().zip(&y).map(|(row, yi)| row[j] * yi).sum::<f64>();
        }
    }
    Some(x)
}
