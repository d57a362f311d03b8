//! Finite-difference operators on radial and line grids.
//!
//! The radial Laplacian uses the conservative stencil
//! `(Δ_r φ)_i = [r_{i+½}(φ_{i+1}-φ_i) - r_{i-½}(φ_i-φ_{i-1})] / (r_i h²)`,
//! which coincides with central differences for `φ'' + φ'/r`. It is
//! self-adjoint in the discrete `L²_r` product `h Σ r_i u_i v_i`; conjugating
//! by `D^{1/2}`, `D = diag(r_i)`, gives the symmetric form used for eigensolves.
//! Both forms share one spectrum exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VortexError};
use crate::grid::{check_resolution, LineGrid, RadialGrid};
use crate::linalg::BandedMatrix;
use crate::profile::Profile;
use crate::soliton::SolitonParams;

/// Discretization variant of a radial operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    /// Acts on samples `φ(r_i)`; self-adjoint for the `r`-weighted product.
    Plain,
    /// Acts on `r_i^{1/2} φ(r_i)`; a symmetric matrix.
    Symmetrized,
}

/// Inner product in which an operator is self-adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    Euclidean,
    RadialMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridRef {
    Radial(RadialGrid),
    Line(LineGrid),
}

#[derive(Debug, Clone)]
pub struct BandedOperator {
    pub matrix: BandedMatrix<f64>,
    pub symmetric: bool,
    pub grid: GridRef,
    pub weight: Weight,
}

impl BandedOperator {
    pub fn bandwidth(&self) -> usize {
        let (kl, ku) = self.matrix.bandwidths();
        kl.max(ku)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }
}

/// `|u|^{p-1}`, safe for slightly negative round-off values.
pub(crate) fn abs_pow(u: f64, e: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(e)
    }
}

/// Node index and radius of the largest `|V|`; `r_max/2` for a zero potential.
fn potential_peak(grid: &RadialGrid, potential: &[f64]) -> (f64, f64) {
    let (mut imax, mut vmax) = (None, 0.0f64);
    for (i, v) in potential.iter().enumerate() {
        if v.abs() > vmax {
            vmax = v.abs();
            imax = Some(i);
        }
    }
    let r = imax.map_or(0.5 * grid.r_max, |i| grid.node(i));
    (vmax, r)
}

/// Tridiagonal `Δ_r - ω - κ/r² + V` with a real centrifugal coefficient `κ`.
pub(crate) fn radial_operator(
    grid: &RadialGrid,
    kappa: f64,
    omega: f64,
    potential: &[f64],
    form: Form,
) -> Result<BandedOperator> {
    if potential.len() != grid.n && !potential.is_empty() {
        return Err(VortexError::GridMismatch(format!(
            "potential has {} samples, grid has {} nodes",
            potential.len(),
            grid.n
        )));
    }
    let (n, h) = (grid.n, grid.h);
    let h2 = h * h;
    let mut a = BandedMatrix::zeros(n, 1, 1);
    for i in 0..n {
        let r = grid.node(i);
        let (rm, rp) = (r - 0.5 * h, r + 0.5 * h);
        let v = potential.get(i).copied().unwrap_or(0.0);
        a.set(i, i, -(rm + rp) / (r * h2) - omega - kappa / (r * r) + v);
        if i + 1 < n {
            let r1 = grid.node(i + 1);
            match form {
                Form::Plain => {
                    a.set(i, i + 1, rp / (r * h2));
                    a.set(i + 1, i, rp / (r1 * h2));
                }
                Form::Symmetrized => {
                    let s = rp / (h2 * (r * r1).sqrt());
                    a.set(i, i + 1, s);
                    a.set(i + 1, i, s);
                }
            }
        }
    }
    Ok(BandedOperator {
        matrix: a,
        symmetric: form == Form::Symmetrized,
        grid: GridRef::Radial(*grid),
        weight: match form {
            Form::Plain => Weight::RadialMeasure,
            Form::Symmetrized => Weight::Euclidean,
        },
    })
}

fn radial_guard(grid: &RadialGrid, kappa: f64, omega: f64, potential: &[f64], what: &str) -> Result<()> {
    let (vmax, r_peak) = potential_peak(grid, potential);
    check_resolution(grid.h, (omega.abs() + vmax + kappa / (r_peak * r_peak)).sqrt(), what)
}

/// `Δ_r - ω - ν²/r² + V` with Dirichlet conditions at `0` and `r_max`.
///
/// `potential` may be empty for `V = 0`.
pub fn build_radial_schroedinger(
    grid: &RadialGrid,
    nu: u32,
    omega: f64,
    potential: &[f64],
    form: Form,
) -> Result<BandedOperator> {
    let kappa = (nu as f64).powi(2);
    radial_guard(grid, kappa, omega, potential, "radial operator h·k")?;
    radial_operator(grid, kappa, omega, potential, form)
}

/// Maps samples to the symmetrized variable `r^{1/2} φ`.
pub fn to_symmetrized(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    f.iter().enumerate().map(|(i, v)| grid.node(i).sqrt() * v).collect()
}

pub fn from_symmetrized(grid: &RadialGrid, w: &[f64]) -> Vec<f64> {
    w.iter().enumerate().map(|(i, v)| v / grid.node(i).sqrt()).collect()
}

fn check_line(grid: &LineGrid, params: &SolitonParams) -> Result<()> {
    let sc = params.c.sqrt();
    check_resolution(grid.h, sc, "line operator h·sqrt(c)")?;
    let reach = grid.x_min.abs().min(grid.x_max);
    let need = 30.0 / sc;
    if reach < need {
        return Err(VortexError::ResolutionGuard {
            what: "line domain 30/sqrt(c) over half-width".into(),
            product: need / reach,
            limit: 1.0,
        });
    }
    Ok(())
}

fn line_operator(grid: &LineGrid, c: f64, potential: &[f64]) -> BandedOperator {
    let n = grid.n;
    let h2 = grid.h * grid.h;
    let mut a = BandedMatrix::zeros(n, 1, 1);
    for i in 0..n {
        a.set(i, i, -2.0 / h2 - c + potential[i]);
        if i + 1 < n {
            a.set(i, i + 1, 1.0 / h2);
            a.set(i + 1, i, 1.0 / h2);
        }
    }
    BandedOperator {
        matrix: a,
        symmetric: true,
        grid: GridRef::Line(*grid),
        weight: Weight::Euclidean,
    }
}

/// `L_c = ∂² - c + f'(Q_c)`, identical to `L₊` for the pure power.
pub fn build_lc(grid: &LineGrid, params: &SolitonParams) -> Result<BandedOperator> {
    Ok(build_lplus_lminus(grid, params)?.0)
}

/// `L₊ = ∂² - c + pQ_c^{p-1}` and `L₋ = ∂² - c + Q_c^{p-1}`.
pub fn build_lplus_lminus(grid: &LineGrid, params: &SolitonParams) -> Result<(BandedOperator, BandedOperator)> {
    check_line(grid, params)?;
    let q = params.soliton();
    let qp: Vec<f64> = grid.sample(|x| abs_pow(q.q(x), params.p - 1.0));
    let plus: Vec<f64> = qp.iter().map(|v| params.p * v).collect();
    Ok((line_operator(grid, params.c, &plus), line_operator(grid, params.c, &qp)))
}

/// The linearization in the sector `e^{i(m±j)θ}` about a vortex profile.
///
/// Eigenproblem `λw = i h w` with `h = [[h11, h12], [h21, h22]]`; all blocks
/// are in symmetrized form, so `w` holds `r^{1/2}`-scaled components and
/// `‖w‖_{L²_r} = h^{1/2}|w|`.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub m: u32,
    pub j: i32,
    pub p: f64,
    pub omega: f64,
    pub grid: RadialGrid,
    pub h11: BandedOperator,
    pub h12: BandedOperator,
    pub h21: BandedOperator,
    pub h22: BandedOperator,
}

impl SectorOperator {
    /// Assembles the blocks from profile samples `phi`.
    pub fn new(grid: &RadialGrid, p: f64, omega: f64, phi: &[f64], m: u32, j: i32) -> Result<Self> {
        if m < 1 {
            return Err(invalid("spin m must be at least 1"));
        }
        if j.unsigned_abs() >= m {
            return Err(invalid(format!("perturbation index |j| = {} must be below m = {m}", j.abs())));
        }
        if phi.len() != grid.n {
            return Err(VortexError::GridMismatch(format!(
                "profile has {} samples, grid has {} nodes",
                phi.len(),
                grid.n
            )));
        }
        let beta: Vec<f64> = phi.iter().map(|&v| abs_pow(v, p - 1.0)).collect();
        let pbeta: Vec<f64> = beta.iter().map(|v| p * v).collect();
        let nu = (m + j.unsigned_abs()) as f64;
        radial_guard(grid, nu * nu, omega, &pbeta, "sector operator h·k").map_err(|e| {
            VortexError::GridMismatch(format!("profile grid does not resolve index m+|j| = {nu}: {e}"))
        })?;
        let (mf, jf) = (m as f64, j as f64);
        let kappa = mf * mf + jf * jf;
        let h12 = radial_operator(grid, kappa, omega, &beta, Form::Symmetrized)?;
        let h21 = radial_operator(grid, kappa, omega, &pbeta, Form::Symmetrized)?;
        let mut diag = BandedMatrix::zeros(grid.n, 0, 0);
        for i in 0..grid.n {
            let r = grid.node(i);
            diag.set(i, i, -2.0 * mf * jf / (r * r));
        }
        let h11 = BandedOperator {
            matrix: diag,
            symmetric: true,
            grid: GridRef::Radial(*grid),
            weight: Weight::Euclidean,
        };
        Ok(SectorOperator {
            m,
            j,
            p,
            omega,
            grid: *grid,
            h22: h11.clone(),
            h11,
            h12,
            h21,
        })
    }

    /// Same operator with the potential terms removed.
    pub fn without_potential(&self) -> Result<Self> {
        let zero = vec![0.0; self.grid.n];
        SectorOperator::new(&self.grid, self.p, self.omega, &zero, self.m, self.j)
    }

    /// Dimension `2n` of the interleaved system.
    pub fn dim(&self) -> usize {
        2 * self.grid.n
    }

    /// Real matrix `M` on interleaved `(w1_0, w2_0, w1_1, w2_1, …)`.
    pub fn real_matrix(&self) -> BandedMatrix<f64> {
        let n = self.grid.n;
        let mut a = BandedMatrix::zeros(2 * n, 3, 3);
        for i in 0..n {
            a.set(2 * i, 2 * i, self.h11.matrix.get(i, i));
            a.set(2 * i + 1, 2 * i + 1, self.h22.matrix.get(i, i));
            for k in i.saturating_sub(1)..=(i + 1).min(n - 1) {
                a.set(2 * i, 2 * k + 1, self.h12.matrix.get(i, k));
                a.set(2 * i + 1, 2 * k, self.h21.matrix.get(i, k));
            }
        }
        a
    }

    /// The generator `H = iM`, so that `w_t = Hw` and `Hw = λw`.
    pub fn matrix(&self) -> BandedMatrix<Complex64> {
        self.real_matrix().map(|v| Complex64::new(0.0, v))
    }

    pub fn interleave(w1: &[f64], w2: &[f64]) -> Vec<f64> {
        w1.iter().zip(w2).flat_map(|(a, b)| [*a, *b]).collect()
    }

    pub fn split<T: Copy>(w: &[T]) -> (Vec<T>, Vec<T>) {
        (w.iter().step_by(2).copied().collect(), w.iter().skip(1).step_by(2).copied().collect())
    }

    /// `‖w‖_{L²_r}` of a symmetrized interleaved vector.
    pub fn l2r_norm(&self, w: &[Complex64]) -> f64 {
        (self.grid.h * w.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }
}

/// Sector operator about a converged profile.
pub fn build_sector_operator(profile: &Profile, m: u32, j: i32) -> Result<SectorOperator> {
    if profile.m != m {
        return Err(invalid(format!("profile was computed for m = {}, not m = {m}", profile.m)));
    }
    if !profile.converged {
        return Err(VortexError::NotConverged);
    }
    SectorOperator::new(&profile.grid, profile.p, profile.omega, &profile.values, m, j)
}
