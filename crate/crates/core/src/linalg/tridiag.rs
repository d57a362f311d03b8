use super::banded::BandedMatrix;
use crate::error::{Result, VortexError};

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        SymTridiagonal { diag, off }
    }

    /// Reads the tridiagonal part of a symmetric banded matrix.
    pub fn from_banded(a: &BandedMatrix<f64>) -> Self {
        let n = a.dim();
        SymTridiagonal {
            diag: (0..n).map(|i| a.get(i, i)).collect(),
            off: (0..n.saturating_sub(1)).map(|i| a.get(i, i + 1)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] / q };
            q = self.diag[i] - x - coupling;
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.dim());
        let (mut lo, mut hi) = self.gershgorin();
        let span = (hi - lo).max(1.0);
        lo -= 1e-12 * span;
        hi += 1e-12 * span;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * (lo.abs() + hi.abs()) + f64::MIN_POSITIVE {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvalue closest to `target`.
    pub fn eigenvalue_near(&self, target: f64) -> f64 {
        let k = self.count_below(target);
        let mut best = None::<f64>;
        for cand in [k.checked_sub(1), (k < self.dim()).then_some(k)].into_iter().flatten() {
            let v = self.eigenvalue(cand);
            if best.map_or(true, |b| (v - target).abs() < (b - target).abs()) {
                best = Some(v);
            }
        }
        best.expect("matrix is non-empty")
    }

    pub fn to_banded(&self) -> BandedMatrix<f64> {
        let n = self.dim();
        let mut a = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.set(i, i, self.diag[i]);
            if i + 1 < n {
                a.set(i, i + 1, self.off[i]);
                a.set(i + 1, i, self.off[i]);
            }
        }
        a
    }

    /// Unit eigenvector for an accurately known eigenvalue (inverse iteration).
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.dim();
        let a = self.to_banded();
        let scale = a.norm_inf().max(1.0);
        let shift = lambda + 1e-10 * scale;
        let lu = a.shifted(-shift).lu()?;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0).collect();
        for _ in 0..6 {
            lu.solve_in_place(&mut x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(VortexError::EigensolveFailure("inverse iteration broke down".into()));
            }
            x.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_difference_spectrum() {
        // -2 on the diagonal, 1 off: eigenvalues -4 sin²(kπ/(2(n+1)))
        let n = 50;
        let t = SymTridiagonal::new(vec![-2.0; n], vec![1.0; n - 1]);
        for k in 0..n {
            let exact = -4.0 * ((n - k) as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin().powi(2);
            assert!((t.eigenvalue(k) - exact).abs() < 1e-13, "k={k}");
        }
        let near = t.eigenvalue_near(-2.0);
        assert!((near + 2.0).abs() < 0.1);
        let v = t.eigenvector(near).unwrap();
        let av = t.to_banded().matvec(&v);
        let res: f64 = av.iter().zip(&v).map(|(a, x)| (a - near * x).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-10);
    }
}
