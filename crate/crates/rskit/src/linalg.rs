//! Small dense vector and matrix helpers for the low-dimensional solvers.
//! Decision dimensions stay in the tens, so plain slices and an unblocked
//! Cholesky are all that is needed.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// In-place Cholesky factorization of a symmetric positive-definite matrix
/// stored row-major; returns false if a pivot drops to or below zero.
pub(crate) fn cholesky(a: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

/// Solve L L^T x = b given the Cholesky factor from [`cholesky`].
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    // forward: L y = b
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    // backward: L^T x = y
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve the SPD system H x = b, adding diagonal jitter if the factorization
/// fails. Returns false only if jitter cannot rescue the factorization.
pub(crate) fn solve_spd(h: &[f64], n: usize, b: &[f64], x: &mut [f64]) -> bool {
    let mut trace = 0.0;
    for i in 0..n {
        trace += h[i * n + i];
    }
    let base_jitter = 1e-14 * (1.0 + trace.abs() / n as f64);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut fac = h.to_vec();
        if jitter > 0.0 {
            for i in 0..n {
                fac[i * n + i] += jitter;
            }
        }
        if cholesky(&mut fac, n) {
            x.copy_from_slice(b);
            cholesky_solve(&fac, n, x);
            if x.iter().all(|v| v.is_finite()) {
                return true;
            }
        }
        jitter = if jitter == 0.0 { base_jitter } else { jitter * 100.0 };
    }
    false
}

/// Solve the general square system A x = b by LU factorization with partial
/// pivoting; A is row-major and consumed. Returns false on (numerical)
/// singularity.
pub(crate) fn lu_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for k in 0..n {
        // pivot
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for r in k + 1..n {
            let v = a[r * n + k].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= 1e-300 {
            return false;
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k];
        for r in k + 1..n {
            let f = a[r * n + k] / d;
            if f != 0.0 {
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
                b[r] -= f * b[k];
            }
            a[r * n + k] = 0.0;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
    true
}
