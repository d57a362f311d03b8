use nalgebra::DMatrix;
use num_complex::ComplexFloat;

use crate::error::{Result, VortexError};

/// Real or complex scalar usable in banded storage.
pub trait Scalar: ComplexFloat<Real = f64> + From<f64> + Send + Sync + std::fmt::Debug + 'static {}
impl<T> Scalar for T where T: ComplexFloat<Real = f64> + From<f64> + Send + Sync + std::fmt::Debug + 'static {}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, row-major band storage.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix {
            n,
            kl,
            ku,
            data: vec![T::zero(); n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i < self.n && j < self.n && self.in_band(i, j), "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Returns `self + shift·I`.
    pub fn shifted(&self, shift: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.add(i, i, shift);
        }
        out
    }

    /// Returns `factor·self`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = *v * factor);
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> BandedMatrix<U> {
        BandedMatrix {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).fold(T::zero(), |acc, j| acc + self.data[self.idx(i, j)] * x[j])
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<T>
    where
        T: nalgebra::Scalar,
    {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..(i + self.ku.max(self.kl) + 1).min(self.n) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<BandedLu<T>> {
        BandedLu::factor(self)
    }
}

/// Factorization `P A = L U`; `U` carries `kl` extra super-diagonals of fill.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    width: usize,
    work: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn factor(a: &BandedMatrix<T>) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            width,
            work: vec![T::zero(); n * width],
            pivots: vec![0; n],
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n.saturating_sub(1));
            for j in lo..=hi {
                let k = lu.at(i, j);
                lu.work[k] = a.get(i, j);
            }
        }
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku + kl).min(n - 1);
            let mut piv = k;
            let mut best = lu.work[lu.at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu.work[lu.at(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if !(best > 1e-300 * scale) {
                return Err(VortexError::LinearSolveFailure(format!(
                    "zero pivot in column {k} of banded LU"
                )));
            }
            lu.pivots[k] = piv;
            if piv != k {
                for j in k..=last_col {
                    let (a1, a2) = (lu.at(k, j), lu.at(piv, j));
                    lu.work.swap(a1, a2);
                }
            }
            let pivot = lu.work[lu.at(k, k)];
            for i in k + 1..=last_row {
                let ik = lu.at(i, k);
                let l = lu.work[ik] / pivot;
                lu.work[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = lu.work[lu.at(k, j)];
                    let ij = lu.at(i, j);
                    lu.work[ij] = lu.work[ij] - l * kj;
                }
            }
        }
        Ok(lu)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, kl) = (self.n, self.kl);
        assert_eq!(x.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] = x[i] - self.work[self.at(i, k)] * xk;
            }
        }
        let upper = self.width - kl - 1;
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + upper).min(n - 1) {
                s = s - self.work[self.at(i, j)] * x[j];
            }
            x[i] = s / self.work[self.at(i, i)];
        }
    }
}
