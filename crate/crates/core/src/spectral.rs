//! Spectral radius, operator norm, and Frobenius norm of dense weight
//! matrices via shifted power iteration.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100_000;
/// Diagonal shift applied to directed matrices so the Perron root strictly
/// dominates every other eigenvalue in modulus.
const DIRECTED_SHIFT: f64 = 1e-12;

/// Converged eigenvalue estimate together with the iteration count and the
/// final eigenvector residual `‖Wv − λv‖∞`.
#[derive(Clone, Copy, Debug)]
pub struct SpectralResult {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Power iteration on `M + shift·I`, returning the eigenvalue of `M + shift·I`.
///
/// The caller picks a shift that makes the wanted eigenvalue dominant:
/// `‖M‖∞` for symmetric matrices (forcing the spectrum nonnegative) and 0
/// for matrices already known to have a dominant nonnegative eigenvalue.
fn power_iteration(m: &Matrix, shift: f64) -> Result<(f64, usize, f64)> {
    let n = m.n();
    if n == 0 {
        return Ok((shift, 0, 0.0));
    }
    let tol = RESIDUAL_TOL * f64::max(1.0, m.inf_norm() + shift);
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut last_residual = f64::INFINITY;
    for iter in 1..=MAX_ITERATIONS {
        let mut u = m.matvec(&v);
        for (ui, vi) in u.iter_mut().zip(&v) {
            *ui += shift * vi;
        }
        let lambda = u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let residual = u
            .iter()
            .zip(&v)
            .map(|(ui, vi)| (ui - lambda * vi).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok((lambda, iter, residual));
        }
        last_residual = residual;
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok((0.0, iter, 0.0));
        }
        for x in &mut u {
            *x /= norm;
        }
        v = u;
    }
    Err(Error::Convergence { iterations: MAX_ITERATIONS, residual: last_residual })
}

/// Spectral radius of a nonnegative square matrix.
///
/// Symmetric matrices are iterated with the shift `‖W‖∞` so the largest
/// eigenvalue dominates in modulus; directed matrices get a `1e-12` diagonal
/// shift, which moves the Perron root by exactly that amount and breaks ties
/// between equal-modulus eigenvalues in its favor.
pub fn spectral_radius(w: &Matrix) -> Result<SpectralResult> {
    if !w.is_square() {
        return Err(Error::argument("spectral_radius: matrix must be square"));
    }
    if !w.is_finite() {
        return Err(Error::argument("spectral_radius: non-finite entries"));
    }
    if w.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::argument("spectral_radius: negative entries"));
    }
    if w.is_symmetric() {
        let shift = w.inf_norm();
        let (lambda, iterations, residual) = power_iteration(w, shift)?;
        Ok(SpectralResult { value: (lambda - shift).max(0.0), iterations, residual })
    } else {
        let shifted = w.add(&Matrix::scaled_identity(w.n(), DIRECTED_SHIFT));
        let (lambda, iterations, residual) = power_iteration(&shifted, 0.0)?;
        Ok(SpectralResult { value: (lambda - DIRECTED_SHIFT).max(0.0), iterations, residual })
    }
}

/// Operator (2-)norm `‖W‖₂ = √ρ(WᵀW)`, for matrices of any sign pattern.
///
/// The Gram matrix is positive semidefinite, so plain power iteration on it
/// needs no shift; the reported residual is the Gram-side eigenvector
/// residual.
pub fn operator_norm(w: &Matrix) -> Result<SpectralResult> {
    if !w.is_square() {
        return Err(Error::argument("operator_norm: matrix must be square"));
    }
    if !w.is_finite() {
        return Err(Error::argument("operator_norm: non-finite entries"));
    }
    let g = w.gram();
    let (lambda, iterations, residual) = power_iteration(&g, 0.0)?;
    Ok(SpectralResult { value: lambda.max(0.0).sqrt(), iterations, residual })
}

/// Frobenius norm `√Σ w_ij²`.
pub fn frobenius_norm(w: &Matrix) -> f64 {
    w.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;
    use r0dp_testkit::{frobenius_oracle, jacobi_eigenvalues, largest_eigenvalue_bisect};

    fn random_symmetric(n: usize, rng: &mut SeededRng) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.uniform();
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn complete_graph_weight_quarter() {
        let w = Matrix::from_rows(vec![vec![0.25; 15]; 15]).unwrap();
        let r = spectral_radius(&w).unwrap();
        assert!((r.value - 3.75).abs() < 1e-10, "got {}", r.value);
        assert!(r.residual <= 1e-9);
    }

    #[test]
    fn scaled_identity_radius_is_scale() {
        for &c in &[0.0, 0.5, 3.0] {
            let w = Matrix::scaled_identity(4, c);
            assert!((spectral_radius(&w).unwrap().value - c).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_matches_jacobi_oracle() {
        let mut rng = SeededRng::from_seed(100);
        for _ in 0..20 {
            let w = random_symmetric(5, &mut rng);
            let eigs = jacobi_eigenvalues(&w.to_rows());
            let oracle = eigs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let got = spectral_radius(&w).unwrap().value;
            assert!((got - oracle).abs() < 1e-9, "got {got}, oracle {oracle}");
        }
    }

    #[test]
    fn directed_positive_matches_oracle_via_gram_bound() {
        // directed positive matrix: check ρ ≤ ‖·‖₂ ≤ ‖·‖_F ordering and the
        // similarity-invariant trace bound ρ ≥ trace/n for nonnegative W
        let mut rng = SeededRng::from_seed(42);
        for _ in 0..10 {
            let mut w = Matrix::zeros(5, 5);
            for i in 0..5 {
                for j in 0..5 {
                    w.set(i, j, 0.05 + rng.uniform());
                }
            }
            let rho = spectral_radius(&w).unwrap().value;
            let op = operator_norm(&w).unwrap().value;
            let fro = frobenius_norm(&w);
            let trace: f64 = (0..5).map(|i| w.get(i, i)).sum();
            assert!(rho <= op + 1e-9 && op <= fro + 1e-9);
            assert!(rho >= trace / 5.0 - 1e-9);
        }
    }

    #[test]
    fn nilpotent_has_zero_radius_unit_norm() {
        let w = Matrix::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let rho = spectral_radius(&w).unwrap().value;
        let op = operator_norm(&w).unwrap().value;
        assert!(rho.abs() < 1e-9);
        assert!((op - 1.0).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_of_diagonal_is_max_abs() {
        let w = Matrix::from_rows(vec![
            vec![-3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!((operator_norm(&w).unwrap().value - 3.0).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_matches_characteristic_polynomial_bisection() {
        let mut rng = SeededRng::from_seed(7);
        for _ in 0..8 {
            let mut w = Matrix::zeros(6, 6);
            for i in 0..6 {
                for j in 0..6 {
                    w.set(i, j, 2.0 * rng.uniform() - 1.0);
                }
            }
            let gram_rows = w.gram().to_rows();
            let oracle = largest_eigenvalue_bisect(&gram_rows).sqrt();
            let got = operator_norm(&w).unwrap().value;
            assert!((got - oracle).abs() < 1e-8, "got {got}, oracle {oracle}");
        }
    }

    #[test]
    fn frobenius_matches_direct_summation() {
        assert_eq!(frobenius_norm(&Matrix::zeros(3, 3)), 0.0);
        assert!((frobenius_norm(&Matrix::scaled_identity(9, 1.0)) - 3.0).abs() < 1e-15);
        let mut rng = SeededRng::from_seed(55);
        let mut w = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                w.set(i, j, rng.uniform());
            }
        }
        assert_eq!(frobenius_norm(&w), frobenius_oracle(&w.to_rows()));
    }

    #[test]
    fn weyl_perturbation_inequality_holds() {
        let mut rng = SeededRng::from_seed(2718);
        for _ in 0..200 {
            let w = random_symmetric(4, &mut rng);
            let p = random_symmetric(4, &mut rng).map(|v| 0.01 * (v - 0.5));
            let rho_w = spectral_radius(&w).unwrap().value;
            let perturbed = w.add(&p);
            let shift = perturbed.inf_norm();
            let (lambda, _, _) = power_iteration(&perturbed, shift).unwrap();
            let rho_p = lambda - shift;
            let op_p = operator_norm(&p).unwrap().value;
            let fro_p = frobenius_norm(&p);
            assert!((rho_p - rho_w).abs() <= op_p + 1e-9);
            assert!(op_p <= fro_p + 1e-12);
        }
    }

    #[test]
    fn radius_is_scale_equivariant() {
        let mut rng = SeededRng::from_seed(13);
        let w = random_symmetric(6, &mut rng);
        let base = spectral_radius(&w).unwrap().value;
        for &c in &[0.5, 2.0, 10.0] {
            let scaled = spectral_radius(&w.map(|v| c * v)).unwrap().value;
            assert!((scaled - c * base).abs() < 1e-10 * c.max(1.0));
        }
    }

    #[test]
    fn negative_entries_rejected_for_radius() {
        let w = Matrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(spectral_radius(&w), Err(Error::Argument(_))));
    }
}
