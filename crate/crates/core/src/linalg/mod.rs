//! Band storage, banded LU, and the eigensolvers built on them.

pub mod arnoldi;
pub mod banded;
pub mod tridiag;

pub use arnoldi::{refine, shift_invert, EigenPair, ShiftInvertOptions};
pub use banded::{BandedLu, BandedMatrix, Scalar};
pub use tridiag::SymTridiagonal;

/// Discrete inner product `h Σ aᵢ bᵢ`.
pub fn weighted_dot(a: &[f64], b: &[f64], h: f64) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Least-squares line `y ≈ slope·x + intercept` with coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// All eigenvalues of a real matrix via the real Schur form.
///
/// Hamiltonian-type matrices have spectra symmetric about zero, which can stall
/// the Francis shifts indefinitely; the factorization is done on `A + sI` with
/// a small offset and the offset removed afterwards.
pub fn dense_eigenvalues(a: &nalgebra::DMatrix<f64>) -> Vec<num_complex::Complex64> {
    const OFFSET: f64 = 0.3137;
    let n = a.nrows();
    let shifted = a + nalgebra::DMatrix::<f64>::identity(n, n) * OFFSET;
    shifted.complex_eigenvalues().iter().map(|z| z - OFFSET).collect()
}
