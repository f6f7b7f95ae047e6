//! Small dense row-major kernels for per-cell blocks. Blocks are at most
//! 16x16 in practice, so these work in place on caller-owned slices.

/// In-place Cholesky factorisation `A = L L^T` of an `n x n` row-major
/// matrix; the lower triangle is overwritten with `L`. Returns `false` if
/// `A` is not numerically positive definite.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

/// Solves `L L^T x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Gaussian elimination with partial pivoting; `a` and `b` are destroyed,
/// the solution is left in `b`. Returns `false` on a zero pivot.
pub fn lu_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        if a[pivot * n + col] == 0.0 || !a[pivot * n + col].is_finite() {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for i in col + 1..n {
            let f = a[i * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[i * n + k] -= f * a[col * n + k];
            }
            b[i] -= f * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

pub fn mat_vec(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    for i in 0..n {
        y[i] = a[i * n..(i + 1) * n].iter().zip(x).map(|(aij, xj)| aij * xj).sum();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let x = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        mat_vec(&a, 3, &x, &mut b);
        let mut l = a;
        assert!(cholesky_in_place(&mut l, 3));
        cholesky_solve(&l, 3, &mut b);
        for (got, want) in b.iter().zip(x) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = [1.0, 2.0, 2.0, 1.0];
        assert!(!cholesky_in_place(&mut a, 2));
    }

    #[test]
    fn lu_handles_saddle_point() {
        // bordered system with a zero diagonal entry
        let a = [-2.0, -1.0, -1.0, -1.0, -2.0, -1.0, -1.0, -1.0, 0.0];
        let x = [0.3, -0.7, 1.1];
        let mut b = [0.0; 3];
        mat_vec(&a, 3, &x, &mut b);
        let mut m = a;
        assert!(lu_solve(&mut m, 3, &mut b));
        for (got, want) in b.iter().zip(x) {
            assert!((got - want).abs() < 1e-14);
        }
        let mut singular = [1.0, 2.0, 2.0, 4.0];
        let mut rhs = [1.0, 1.0];
        assert!(!lu_solve(&mut singular, 2, &mut rhs));
    }
}
