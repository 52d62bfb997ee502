use nalgebra::DMatrix;

/// Singular values below `RELATIVE_CUTOFF * sigma_max` are treated as zero.
pub const RELATIVE_CUTOFF: f64 = 1e-8;

/// Sweep cap for the Jacobi iteration; 6x7 inputs settle in under ten.
const MAX_SWEEPS: usize = 60;

/// Moore-Penrose pseudo-inverse through a one-sided Jacobi SVD.
///
/// Columns of `m` are rotated pairwise until mutually orthogonal, giving
/// `m * V = W` with `V` orthogonal. Then `m = sum_j w_j v_j^T` and the
/// pseudo-inverse is `sum_j v_j w_j^T / |w_j|^2` over the kept columns.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let mut w = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    // Columns below the rounding floor of the whole matrix are already zero.
    let floor = (f64::EPSILON * m.norm()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if alpha <= floor
                    || beta <= floor
                    || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = RELATIVE_CUTOFF * sigma_max;
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        out += v.column(k) * w.column(k).transpose() / (s * s);
    }
    out
}

fn rotate_columns(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = c * x - s * y;
        a[(r, q)] = s * x + c * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_inverts_to_identity() {
        let id = DMatrix::<f64>::identity(6, 6);
        let p = pseudo_inverse(&id);
        assert!((p - id).abs().max() < 1e-15);
    }

    #[test]
    fn rank_deficient_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse(&m);
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn zero_and_empty_matrices() {
        let z = DMatrix::<f64>::zeros(3, 2);
        assert_eq!(pseudo_inverse(&z), DMatrix::zeros(2, 3));
        let e = DMatrix::<f64>::zeros(6, 0);
        assert_eq!(pseudo_inverse(&e).shape(), (0, 6));
    }

    #[test]
    fn tiny_singular_values_are_cut() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        let p = pseudo_inverse(&m);
        assert_eq!(p[(1, 1)], 0.0);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-15);
    }
}
