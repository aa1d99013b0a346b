//! Test-only oracles shared across the workspace.
//!
//! Everything here is deliberately independent of the library under test:
//! integrals are evaluated by adaptive Simpson quadrature, eigenvalues by
//! Jacobi rotations or by bisection on the characteristic polynomial, and
//! norms by direct double-loop summation. Production code must never depend
//! on this crate.

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`. Panics on NaN from the integrand. Refinement stops once the local
/// Simpson error reaches the roundoff floor of the panel being split, so an
/// unreachable tolerance degrades to full machine precision instead of
/// exhausting the depth budget panel by panel.
pub fn quadrature(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse(
        f: impl Fn(f64) -> f64 + Copy,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, 0.5 * (a + m), m);
        let right = simpson(f, m, 0.5 * (m + b), b);
        let err = left + right - whole;
        let noise_floor = 60.0 * f64::EPSILON * (left.abs() + right.abs());
        if depth >= 50 || err.abs() <= 15.0 * tol || err.abs() <= noise_floor {
            return left + right + err / 15.0;
        }
        recurse(f, a, m, left, 0.5 * tol, depth + 1) + recurse(f, m, b, right, 0.5 * tol, depth + 1)
    }
    assert!(a <= b, "quadrature: reversed interval");
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let whole = simpson(f, a, m, b);
    let v = recurse(f, a, b, whole, tol, 0);
    assert!(v.is_finite(), "quadrature produced a non-finite value");
    v
}

/// All eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// returned in ascending order. `a` is given as nested rows.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter().enumerate() {
        assert_eq!(row.len(), n, "jacobi_eigenvalues: row {i} not length {n}");
    }
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i][j].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Determinant by LU decomposition with partial pivoting.
pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut det = 1.0f64;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                let upd = factor * m[col][k];
                m[row][k] -= upd;
            }
        }
    }
    det
}

/// Largest eigenvalue of a symmetric matrix by sign bisection on the
/// characteristic polynomial det(A − λI). The scan step assumes the largest
/// eigenvalue is simple, which holds almost surely for the random matrices
/// tests feed it.
pub fn largest_eigenvalue_bisect(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let char_sign = |lambda: f64| -> f64 {
        let shifted: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a[i][j] - if i == j { lambda } else { 0.0 }).collect())
            .collect();
        determinant(&shifted)
    };
    // any λ above all eigenvalues gives det of sign (−1)^n
    let above_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let bound: f64 = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut hi = bound + 1.0;
    assert!(char_sign(hi) * above_sign > 0.0, "upper bound not above the spectrum");
    // walk down until the polynomial changes sign, i.e. we crossed λ_max
    let step = (2.0 * bound + 2.0) / 4096.0;
    let mut lo = hi - step;
    while char_sign(lo) * above_sign > 0.0 {
        hi = lo;
        lo -= step;
        assert!(lo > -bound - 2.0, "no sign change found above the lower spectral bound");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if char_sign(mid) * above_sign > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Frobenius norm by direct double-loop summation.
pub fn frobenius_oracle(a: &[Vec<f64>]) -> f64 {
    a.iter().flat_map(|r| r.iter()).map(|v| v * v).sum::<f64>().sqrt()
}

/// Mean and (unbiased) variance of a sample.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Fourth central moment, used for the standard error of a sample variance.
pub fn fourth_central_moment(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n
}
