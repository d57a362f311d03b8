//! Spectra of the linearization in the sector `e^{i(m±j)θ}`.
//!
//! For `δ = j/m` small the unstable eigenvalue is governed by the projection
//! of the sector operator onto the four-dimensional generalized kernel of
//! `H(0) = i[[0, L₋], [L₊, 0]]`, spanned by the phase and translation chains
//! `H(0)Φ₂ = Φ₁`, `H(0)Φ₄ = Φ₃`. That projection is the 4×4 matrix
//! [`ReducedModel::matrix`]; its roots predict `Re λ ≈ α₀⁻¹γδ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result, VortexError};
use crate::grid::LineGrid;
use crate::linalg::{dense_eigenvalues, refine, shift_invert, BandedMatrix, ShiftInvertOptions};
use crate::operators::{build_lplus_lminus, build_sector_operator, SectorOperator};
use crate::profile::Profile;
use crate::soliton::{gamma_growth, q_norms, SolitonParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest `δ` accepted by [`predicted_growth`].
pub const DELTA_CEILING: f64 = 0.5;

/// Eigenvalues with a larger relative residual are discarded.
pub const RESIDUAL_GATE: f64 = 1e-8;

fn check_reduced_range(params: &SolitonParams) -> Result<()> {
    if params.p >= 5.0 {
        return Err(VortexError::OutOfValidityRange(format!(
            "the reduced model requires 1 < p < 5, got p = {}",
            params.p
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedModel {
    pub delta: f64,
    pub alpha0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub matrix: [[Complex64; 4]; 4],
}

pub fn reduced_matrix(params: &SolitonParams, delta: f64) -> Result<ReducedModel> {
    check_reduced_range(params)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(invalid(format!("delta must be non-negative, got {delta}")));
    }
    let norms = q_norms(params)?;
    let a2 = params.alpha0.powi(-2);
    let theta1 = 2.0 / norms.dndc;
    let theta2 = 4.0 / norms.l2_sq;
    let b1 = a2 * theta1 * norms.l2_sq;
    let b2 = -a2 * theta1 * norms.dcq_l2_sq;
    let b3 = -4.0 * a2 * a2;
    let b4 = a2 * norms.xq_l2_sq / norms.l2_sq;
    let d2 = delta * delta;
    let z = Complex64::new(0.0, 0.0);
    let shift = -2.0 * I * a2 * delta;
    let re = |x: f64| Complex64::new(x, 0.0);
    let matrix = [
        [shift, re(1.0 + b2 * d2), z, z],
        [re(b1 * d2), shift, z, z],
        [z, z, shift, re(1.0 + b4 * d2)],
        [z, z, re(b3 * d2), shift],
    ];
    Ok(ReducedModel {
        delta,
        alpha0: params.alpha0,
        b1,
        b2,
        b3,
        b4,
        theta1,
        theta2,
        matrix,
    })
}

/// Closed-form roots of `det(λ - H₁₁(δ))`, by descending real part.
pub fn reduced_eigenvalues(model: &ReducedModel) -> [Complex64; 4] {
    let d = model.delta;
    let shift = -2.0 * I * model.alpha0.powi(-2) * d;
    let s1 = Complex64::new(model.b1 * (1.0 + model.b2 * d * d), 0.0).sqrt() * d;
    let s2 = Complex64::new(model.b3 * (1.0 + model.b4 * d * d), 0.0).sqrt() * d;
    let mut out = [shift + s1, shift - s1, shift + s2, shift - s2];
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Growth {
    /// `α₀⁻¹γδ`.
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Growth {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn growth_formula(params: &SolitonParams, delta: f64) -> Result<Growth> {
    let value = gamma_growth(params)? / params.alpha0 * delta;
    Ok(Growth {
        value,
        lo: 0.75 * value,
        hi: 1.25 * value,
    })
}

/// The leading growth rate `α₀⁻¹γδ` and its bracket `[3/4, 5/4]·α₀⁻¹γδ`.
pub fn predicted_growth(params: &SolitonParams, delta: f64) -> Result<Growth> {
    check_reduced_range(params)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(invalid(format!("delta must be non-negative, got {delta}")));
    }
    if delta > DELTA_CEILING {
        return Err(VortexError::OutOfValidityRange(format!(
            "delta = {delta} exceeds the small-delta ceiling {DELTA_CEILING}"
        )));
    }
    growth_formula(params, delta)
}

/// Interleaved real matrix of `H(0)/i = [[0, L₋], [L₊, 0]]` on a line grid.
pub fn kernel_operator(params: &SolitonParams, grid: &LineGrid) -> Result<BandedMatrix<f64>> {
    let (lp, lm) = build_lplus_lminus(grid, params)?;
    let n = grid.n;
    let mut a = BandedMatrix::zeros(2 * n, 3, 3);
    for i in 0..n {
        for k in i.saturating_sub(1)..=(i + 1).min(n - 1) {
            a.set(2 * i, 2 * k + 1, lm.matrix.get(i, k));
            a.set(2 * i + 1, 2 * k, lp.matrix.get(i, k));
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    /// `‖H(0)Φ₁‖/‖Φ₁‖`, `‖H(0)Φ₂-Φ₁‖/‖Φ₁‖`, `‖H(0)Φ₃‖/‖Φ₃‖`, `‖H(0)Φ₄-Φ₃‖/‖Φ₃‖`.
    pub chain_residuals: [f64; 4],
    /// `⟨Φ_i, Φ*_j⟩` with `⟨u, v⟩ = ∫u·v̄`.
    pub biorthogonality: [[Complex64; 4]; 4],
    pub max_biorth_error: f64,
    /// Radius `2h√c` of the discrete eigenvalue cluster at the origin.
    pub cluster_radius: f64,
    /// Eigenvalues of the discrete `H(0)` nearest the origin.
    pub near_zero: Vec<Complex64>,
    pub cluster_count: usize,
}

fn inner(u: &[Complex64], v: &[Complex64], h: f64) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum::<Complex64>() * h
}

fn norm(u: &[Complex64], h: f64) -> f64 {
    inner(u, u, h).re.sqrt()
}

/// Applies the discrete `H(0)` to the generalized kernel and its dual basis.
///
/// The Jordan pair of each chain splits into `±O(h)` under discretization,
/// so the cluster is counted within `2h√c` of the origin.
pub fn kernel_check(params: &SolitonParams, grid: &LineGrid) -> Result<KernelReport> {
    if (params.p - 5.0).abs() < 1e-12 {
        return Err(VortexError::OutOfValidityRange("the kernel has a larger Jordan block at p = 5".into()));
    }
    let m = kernel_operator(params, grid)?.map(|v| I * v);
    let q = params.soliton();
    let norms = q_norms(params)?;
    let theta1 = 2.0 / norms.dndc;
    let theta2 = 4.0 / norms.l2_sq;
    let x = grid.nodes();
    let z = Complex64::new(0.0, 0.0);
    let pair = |f: &dyn Fn(f64) -> (Complex64, Complex64)| -> Vec<Complex64> {
        x.iter().flat_map(|&s| {
            let (a, b) = f(s);
            [a, b]
        })
        .collect()
    };
    let re = |v: f64| Complex64::new(v, 0.0);
    let phi = [
        pair(&|s| (z, re(q.q(s)))),
        pair(&|s| (-I * q.dcq(s), z)),
        pair(&|s| (re(q.dq(s)), z)),
        pair(&|s| (z, -0.5 * I * s * q.q(s))),
    ];
    let dual = [
        pair(&|s| (z, re(theta1 * q.dcq(s)))),
        pair(&|s| (-I * theta1 * q.q(s), z)),
        pair(&|s| (re(-0.5 * theta2 * s * q.q(s)), z)),
        pair(&|s| (z, I * theta2 * q.dq(s))),
    ];
    let h = grid.h;
    let hp: Vec<Vec<Complex64>> = phi.iter().map(|v| m.matvec(v)).collect();
    let diff = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let chain_residuals = [
        norm(&hp[0], h) / norm(&phi[0], h),
        norm(&diff(&hp[1], &phi[0]), h) / norm(&phi[0], h),
        norm(&hp[2], h) / norm(&phi[2], h),
        norm(&diff(&hp[3], &phi[2]), h) / norm(&phi[2], h),
    ];
    let mut biorthogonality = [[z; 4]; 4];
    let mut max_biorth_error = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let v = inner(&phi[i], &dual[j], h);
            biorthogonality[i][j] = v;
            let target = if i == j { 1.0 } else { 0.0 };
            max_biorth_error = max_biorth_error.max((v - target).norm());
        }
    }
    let cluster_radius = 2.0 * h * params.c.sqrt();
    // a shift off both axes keeps the factorization away from the near-kernel
    let sigma = Complex64::new(0.1, 0.1) * cluster_radius;
    let mut near_zero: Vec<Complex64> = shift_invert(&m, sigma, 8, ShiftInvertOptions::default())?
        .into_iter()
        .map(|e| e.value)
        .collect();
    near_zero.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let cluster_count = near_zero.iter().filter(|z| z.norm() <= cluster_radius).count();
    Ok(KernelReport {
        chain_residuals,
        biorthogonality,
        max_biorth_error,
        cluster_radius,
        near_zero,
        cluster_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub k_wanted: usize,
    pub method: Method,
    /// Largest `2n` solved densely under [`Method::Auto`].
    pub dense_limit: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            k_wanted: 6,
            method: Method::Auto,
            dense_limit: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub m: u32,
    pub j: i32,
    pub delta: f64,
    pub method: Method,
    /// Sorted by descending real part.
    pub eigenvalues: Vec<Eigenvalue>,
    pub max_re: f64,
    pub predicted: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    pub in_bracket: Option<bool>,
}

/// All eigenvalues of a sector operator by a dense real Schur decomposition.
pub fn dense_spectrum(op: &SectorOperator) -> Vec<Complex64> {
    dense_eigenvalues(&op.real_matrix().to_dense()).iter().map(|mu| I * mu).collect()
}

fn start_vector(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(1.0 + 0.3 * (0.37 * t).sin(), 0.2 * (0.91 * t).cos())
        })
        .collect()
}

/// Shift for the unstable eigenvalue: growth from the reduced model, oscillation
/// `-2α₀⁻²δ` from the common diagonal of `H₁₁(δ)`.
fn target_shift(params: &SolitonParams, delta: f64) -> Complex64 {
    let growth = growth_formula(params, delta.abs()).map(|g| g.value).unwrap_or(0.0);
    let im = -2.0 * params.alpha0.powi(-2) * delta;
    if delta == 0.0 {
        Complex64::new(1e-2, 0.0)
    } else {
        Complex64::new(growth, im)
    }
}

/// Eigenvalues of largest real part for the sector `j` about `profile`.
///
/// The dense path computes the whole spectrum. The shift-invert path only
/// resolves the neighbourhood of the reduced-model prediction, which is
/// where the unstable eigenvalue sits for small `δ`.
pub fn sector_spectrum(profile: &Profile, j: i32, opts: SpectrumOptions) -> Result<SpectrumReport> {
    let op = build_sector_operator(profile, profile.m, j)?;
    spectrum_of(&op, profile.p, profile.omega, opts)
}

pub fn spectrum_of(op: &SectorOperator, p: f64, omega: f64, opts: SpectrumOptions) -> Result<SpectrumReport> {
    let params = crate::soliton::balance_constants(p, omega)?;
    let delta = op.j as f64 / op.m as f64;
    let h = op.matrix();
    let n2 = op.dim();
    let k = opts.k_wanted.max(1);
    let method = match opts.method {
        Method::Auto if n2 <= opts.dense_limit => Method::Dense,
        Method::Auto => Method::ShiftInvert,
        other => other,
    };
    let mut found: Vec<Eigenvalue> = match method {
        Method::Dense => {
            let mut all = dense_spectrum(op);
            all.sort_by(|a, b| b.re.total_cmp(&a.re));
            let start = start_vector(n2);
            let mut out = Vec::new();
            for lam in all.into_iter() {
                if out.len() >= k {
                    break;
                }
                let pair = refine(&h, lam, &start, 1e-11)?;
                if pair.residual <= RESIDUAL_GATE && (pair.value - lam).norm() <= 1e-6 * lam.norm().max(1.0) {
                    out.push(Eigenvalue {
                        re: pair.value.re,
                        im: pair.value.im,
                        residual: pair.residual,
                    });
                }
            }
            out
        }
        _ => {
            let sigma = target_shift(&params, delta);
            shift_invert(&h, sigma, k, ShiftInvertOptions::default())?
                .into_iter()
                .filter(|e| e.residual <= RESIDUAL_GATE)
                .map(|e| Eigenvalue {
                    re: e.value.re,
                    im: e.value.im,
                    residual: e.residual,
                })
                .collect()
        }
    };
    if found.is_empty() {
        return Err(VortexError::EigensolveFailure(format!(
            "no eigenvalue with residual below {RESIDUAL_GATE:e} for m = {}, j = {}",
            op.m, op.j
        )));
    }
    found.sort_by(|a, b| b.re.total_cmp(&a.re));
    let max_re = found[0].re;
    let growth = if delta != 0.0 && delta.abs() <= DELTA_CEILING {
        predicted_growth(&params, delta.abs()).ok()
    } else {
        None
    };
    Ok(SpectrumReport {
        m: op.m,
        j: op.j,
        delta,
        method,
        eigenvalues: found,
        max_re,
        predicted: growth.map(|g| g.value),
        bracket: growth.map(|g| [g.lo, g.hi]),
        in_bracket: growth.map(|g| g.contains(max_re)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub m: u32,
    pub j: i32,
    pub delta: f64,
    pub max_re: f64,
    pub residual: f64,
    pub predicted: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub in_bracket: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub m: u32,
    /// Canonical unstable index `⌊m^β⌋`.
    pub j_star: u32,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn canonical_row(&self) -> Option<&ScanRow> {
        self.rows.iter().find(|r| r.j == self.j_star as i32)
    }
}

/// Sector spectra for each `j` in `j_range`, computed in parallel.
///
/// Rows with `δ` above [`DELTA_CEILING`] still carry `α₀⁻¹γδ` and its bracket,
/// but they lie outside the small-`δ` regime.
pub fn unstable_scan(profile: &Profile, j_range: &[i32], opts: SpectrumOptions) -> Result<ScanTable> {
    let m = profile.m;
    if j_range.is_empty() {
        return Err(invalid("empty j range"));
    }
    if let Some(bad) = j_range.iter().find(|&&j| j < 1 || j >= m as i32) {
        return Err(invalid(format!("scan index j = {bad} outside [1, {}]", m - 1)));
    }
    let params = profile.params()?;
    check_reduced_range(&params)?;
    let rows: Result<Vec<ScanRow>> = j_range
        .par_iter()
        .map(|&j| {
            let rep = sector_spectrum(profile, j, opts)?;
            let g = growth_formula(&params, rep.delta)?;
            Ok(ScanRow {
                m,
                j,
                delta: rep.delta,
                max_re: rep.max_re,
                residual: rep.eigenvalues[0].residual,
                predicted: g.value,
                bracket_lo: g.lo,
                bracket_hi: g.hi,
                in_bracket: g.contains(rep.max_re),
            })
        })
        .collect();
    Ok(ScanTable {
        m,
        j_star: params.canonical_index(m),
        rows: rows?,
    })
}
