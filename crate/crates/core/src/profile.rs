//! The radial vortex profile `φ_{ω,m}`.
//!
//! Solves `φ'' + φ'/r - (ω + m²/r²)φ + |φ|^{p-1}φ = 0` with `φ(0) = φ(r_max) = 0`
//! by damped Newton iteration from the cutoff-soliton ansatz
//! `Φ(r) = χ_l(r - r̄) Q_c(r - r̄)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VortexError};
use crate::grid::RadialGrid;
use crate::operators::{abs_pow, build_radial_schroedinger, radial_operator, BandedOperator, Form};
use crate::soliton::{balance_constants, Soliton, SolitonParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Ansatz,
    NewtonConverged,
    Loaded,
}

/// Samples of a radial function on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub p: f64,
    pub omega: f64,
    pub m: u32,
    pub converged: bool,
    pub residual_norm: f64,
    pub provenance: Provenance,
}

impl Profile {
    pub fn params(&self) -> Result<SolitonParams> {
        balance_constants(self.p, self.omega)
    }

    /// Node position and value of the largest sample.
    pub fn peak(&self) -> (f64, f64) {
        let (i, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        (self.grid.node(i), v)
    }

    pub fn norm_l2r(&self) -> f64 {
        self.grid.norm_l2r(&self.values)
    }
}

// C^∞ transition S(t): 0 for t ≤ 0, 1 for t ≥ 1.
fn glue(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        [0.0; 3]
    } else {
        let g = (-1.0 / t).exp();
        [g, g / (t * t), g * (1.0 / t.powi(4) - 2.0 / t.powi(3))]
    }
}

fn step(t: f64) -> [f64; 3] {
    let [u, u1, u2] = glue(t);
    let [v, v1, v2] = glue(1.0 - t);
    let (v1, v2) = (-v1, v2);
    let d = u + v;
    let d1 = u1 + v1;
    let num = u1 * v - u * v1;
    let num1 = u2 * v - u * v2;
    [u / d, num / (d * d), num1 / (d * d) - 2.0 * num * d1 / (d * d * d)]
}

/// Cutoff `χ_l(s) = χ(s/l)` with `χ = 1` on `|s| ≤ 2`, `0` on `|s| ≥ 3`,
/// returned with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub l: f64,
}

impl Cutoff {
    /// `l = -(2/√c) max(1, 1/(p-1)) log ε`.
    pub fn for_spin(p: f64, c: f64, m: u32) -> Self {
        let eps = 1.0 / m as f64;
        Cutoff {
            l: -(2.0 / c.sqrt()) * (1.0f64).max(1.0 / (p - 1.0)) * eps.ln(),
        }
    }

    pub fn eval(&self, s: f64) -> [f64; 3] {
        let [v, d1, d2] = step(3.0 - s.abs() / self.l);
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        [v, -sign * d1 / self.l, d2 / (self.l * self.l)]
    }
}

fn check_spin(m: u32) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("spin m must be at least 2 for the cutoff ansatz, got {m}")));
    }
    Ok(())
}

/// The cutoff soliton `χ_l(r - r̄) Q_c(r - r̄)`, clipped near the origin for `m < 8`.
pub fn ansatz(p: f64, omega: f64, m: u32, grid: &RadialGrid) -> Result<Profile> {
    check_spin(m)?;
    let params = balance_constants(p, omega)?;
    let q = params.soliton();
    let rbar = params.ring_radius(m);
    let cut = Cutoff::for_spin(p, params.c, m);
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            let s = r - rbar;
            let clip = if m < 8 { step((r - 0.25 * rbar) / (0.25 * rbar))[0] } else { 1.0 };
            clip * cut.eval(s)[0] * q.q(s)
        })
        .collect();
    let potential: Vec<f64> = values.iter().map(|&v| p * abs_pow(v, p - 1.0)).collect();
    build_radial_schroedinger(grid, m, omega, &potential, Form::Plain)?;
    let mut out = Profile {
        grid: *grid,
        values,
        p,
        omega,
        m,
        converged: false,
        residual_norm: 0.0,
        provenance: Provenance::Ansatz,
    };
    out.residual_norm = grid.norm_l2r(&bvp_residual(&out)?);
    Ok(out)
}

fn base_operator(profile: &Profile) -> Result<BandedOperator> {
    let m = profile.m as f64;
    radial_operator(&profile.grid, m * m, profile.omega, &[], Form::Plain)
}

fn nonlinear_residual(base: &BandedOperator, p: f64, phi: &[f64]) -> Vec<f64> {
    let mut f = base.apply(phi);
    f.iter_mut().zip(phi).for_each(|(fi, &v)| *fi += abs_pow(v, p - 1.0) * v);
    f
}

/// Pointwise discrete residual of the radial equation.
pub fn bvp_residual(profile: &Profile) -> Result<Vec<f64>> {
    if profile.values.len() != profile.grid.n {
        return Err(VortexError::GridMismatch(format!(
            "profile has {} samples, grid has {} nodes",
            profile.values.len(),
            profile.grid.n
        )));
    }
    Ok(nonlinear_residual(&base_operator(profile)?, profile.p, &profile.values))
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Stop once `‖F‖ ≤ tol·‖φ‖` in `L²_r`.
    pub tol: f64,
    pub m_min: u32,
    pub max_iter: usize,
    /// Consecutive rejected trial steps before giving up.
    pub max_rejections: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            m_min: 4,
            max_iter: 100,
            max_rejections: 50,
        }
    }
}

/// Iteration history of [`solve_with_report`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// `L²_r` norms of accepted steps.
    pub step_norms: Vec<f64>,
    /// Relative residual before each step and after the last.
    pub residuals: Vec<f64>,
}

pub fn solve(p: f64, omega: f64, m: u32, grid: &RadialGrid, opts: SolveOptions) -> Result<Profile> {
    Ok(solve_with_report(p, omega, m, grid, opts)?.0)
}

/// Newton's method with Levenberg–Marquardt damping.
///
/// The Jacobian `Δ_r - ω - m²/r² + pφ^{p-1}` has a nearly singular mode from
/// approximate translation invariance of the ring, so plain Armijo steps can
/// stall. Trial steps solve `(J - μ)d = -F`; a step is accepted when it
/// decreases `‖F‖`, otherwise `μ` grows fourfold.
pub fn solve_with_report(
    p: f64,
    omega: f64,
    m: u32,
    grid: &RadialGrid,
    opts: SolveOptions,
) -> Result<(Profile, NewtonReport)> {
    if m < opts.m_min.max(2) {
        return Err(invalid(format!("spin m = {m} is below the minimum {}", opts.m_min.max(2))));
    }
    let mut prof = ansatz(p, omega, m, grid)?;
    let base = base_operator(&prof)?;
    let mut phi = std::mem::take(&mut prof.values);
    let mut f = nonlinear_residual(&base, p, &phi);
    let mut fnorm = grid.norm_l2r(&f);
    let mut mu = 0.0f64;
    let mut report = NewtonReport::default();
    loop {
        let rel = fnorm / grid.norm_l2r(&phi).max(f64::MIN_POSITIVE);
        report.residuals.push(rel);
        if rel <= opts.tol {
            break;
        }
        if report.iterations >= opts.max_iter {
            return Err(VortexError::NewtonDiverged(format!(
                "no convergence in {} iterations, relative residual {rel:.3e}",
                opts.max_iter
            )));
        }
        let mut jac = base.matrix.clone();
        for (i, &v) in phi.iter().enumerate() {
            jac.add(i, i, p * abs_pow(v, p - 1.0));
        }
        let mut rejections = 0;
        let (d, trial, f_trial, n_trial) = loop {
            let lu = jac.shifted(-mu).lu()?;
            let mut d: Vec<f64> = f.iter().map(|v| -v).collect();
            lu.solve_in_place(&mut d);
            let trial: Vec<f64> = phi.iter().zip(&d).map(|(a, b)| a + b).collect();
            let f_trial = nonlinear_residual(&base, p, &trial);
            let n_trial = grid.norm_l2r(&f_trial);
            if n_trial < (1.0 - 1e-4) * fnorm {
                break (d, trial, f_trial, n_trial);
            }
            rejections += 1;
            if rejections >= opts.max_rejections || !n_trial.is_finite() && rejections > 5 {
                return Err(VortexError::NewtonDiverged(format!(
                    "{rejections} consecutive rejected steps at relative residual {rel:.3e}"
                )));
            }
            mu = (4.0 * mu).max(1e-6);
        };
        report.step_norms.push(grid.norm_l2r(&d));
        report.iterations += 1;
        phi = trial;
        f = f_trial;
        fnorm = n_trial;
        mu = if mu > 1e-7 { mu / 4.0 } else { 0.0 };
    }
    let (lo, hi) = phi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > 0.0) || lo < -1e-8 * hi {
        return Err(VortexError::NotPositive {
            ratio: if hi > 0.0 { lo / hi } else { f64::NEG_INFINITY },
        });
    }
    prof.values = phi;
    prof.converged = true;
    prof.residual_norm = fnorm;
    prof.provenance = Provenance::NewtonConverged;
    Ok((prof, report))
}

/// Pointwise pieces of the ansatz residual at ring position `ρ`.
#[derive(Debug, Clone)]
pub struct ResidualPieces {
    pub r21: Vec<f64>,
    pub r22: Vec<f64>,
    pub r23: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub r21_norm: f64,
    pub r22_norm: f64,
    pub r23_norm: f64,
}

/// Splits the exact residual of `χ_l(r-ρ)Q_c(r-ρ)`, `c = ω + (ερ)⁻²`, into the
/// nonlinear mismatch of the cutoff, the centrifugal and first-derivative
/// term, and the cutoff-derivative terms.
pub fn residual_pieces(p: f64, omega: f64, m: u32, rho: f64, grid: &RadialGrid) -> Result<ResidualPieces> {
    check_spin(m)?;
    let params = balance_constants(p, omega)?;
    let rbar = params.ring_radius(m);
    if !(rho > 0.5 * rbar && rho < 2.0 * rbar) {
        return Err(invalid(format!("ring position rho = {rho} outside ({}, {})", 0.5 * rbar, 2.0 * rbar)));
    }
    let eps = 1.0 / m as f64;
    let c = omega + (eps * rho).powi(-2);
    let q = Soliton::new(p, c)?;
    let cut = Cutoff::for_spin(p, c, m);
    let f = |u: f64| abs_pow(u, p - 1.0) * u;
    let mf = m as f64;
    let mut out = ResidualPieces {
        r21: Vec::with_capacity(grid.n),
        r22: Vec::with_capacity(grid.n),
        r23: Vec::with_capacity(grid.n),
    };
    for r in grid.nodes() {
        let s = r - rho;
        let [chi, chi1, chi2] = cut.eval(s);
        let (qs, dqs) = (q.q(s), q.dq(s));
        let phi = chi * qs;
        out.r21.push(f(phi) - chi * f(qs));
        out.r22.push((c - omega - mf * mf / (r * r)) * phi + chi * dqs / r);
        out.r23.push(chi2 * qs + 2.0 * chi1 * dqs + chi1 * qs / r);
    }
    Ok(out)
}

pub fn residual_decomposition(p: f64, omega: f64, m: u32, rho: f64, grid: &RadialGrid) -> Result<ResidualNorms> {
    let pieces = residual_pieces(p, omega, m, rho, grid)?;
    Ok(ResidualNorms {
        r21_norm: grid.norm_l2r(&pieces.r21),
        r22_norm: grid.norm_l2r(&pieces.r22),
        r23_norm: grid.norm_l2r(&pieces.r23),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: u32, spacing: f64) -> RadialGrid {
        RadialGrid::for_ring(&balance_constants(3.0, 1.0).unwrap(), m, Some(spacing), None).unwrap()
    }

    #[test]
    fn cutoff_shape_and_derivatives() {
        let cut = Cutoff { l: 1.0 };
        assert_eq!(cut.eval(0.0)[0], 1.0);
        assert_eq!(cut.eval(1.99)[0], 1.0);
        assert_eq!(cut.eval(-3.0)[0], 0.0);
        assert_eq!(cut.eval(3.5)[0], 0.0);
        let h = 1e-5;
        for s in [-2.7, -2.3, 2.2, 2.5, 2.9] {
            let [_, d1, d2] = cut.eval(s);
            let fd1 = (cut.eval(s + h)[0] - cut.eval(s - h)[0]) / (2.0 * h);
            let fd2 = (cut.eval(s + h)[1] - cut.eval(s - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6 * d1.abs().max(1.0), "s={s}");
            assert!((d2 - fd2).abs() < 1e-5 * d2.abs().max(1.0), "s={s}");
        }
    }

    #[test]
    fn cutoff_length_at_m32() {
        let cut = Cutoff::for_spin(3.0, 1.5, 32);
        assert!((cut.l - 5.6595).abs() < 1e-4, "l = {}", cut.l);
        assert!((cut.l - (2.0 / 1.5f64.sqrt()) * 32f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ansatz_peak_and_support() {
        let g = grid(32, 1.0 / 192.0);
        let a = ansatz(3.0, 1.0, 32, &g).unwrap();
        let rbar = 32.0 * 2f64.sqrt();
        assert!((rbar - 45.2548).abs() < 1e-4);
        let (rpk, vpk) = a.peak();
        assert!((rpk - rbar).abs() <= g.h);
        // the ansatz equals Q_c(0) = A at r̄; the nearest node is within h/2 of it
        assert!((vpk - 3f64.sqrt()).abs() < 1.5 * 0.5 * (g.h / 2.0).powi(2) * 3f64.sqrt());
        let l = Cutoff::for_spin(3.0, 1.5, 32).l;
        for (r, v) in g.nodes().iter().zip(&a.values) {
            if (r - rbar).abs() >= 3.0 * l {
                assert_eq!(*v, 0.0);
            }
        }
        assert_eq!(a.provenance, Provenance::Ansatz);
        assert!(!a.converged);
    }

    #[test]
    fn ansatz_requires_m_at_least_two() {
        let g = grid(4, 0.05);
        assert!(matches!(ansatz(3.0, 1.0, 1, &g), Err(VortexError::InvalidParameter(_))));
        // small m is clipped away from the origin
        let a = ansatz(3.0, 1.0, 4, &g).unwrap();
        let quarter = 0.25 * 4.0 * 2f64.sqrt();
        for (r, v) in g.nodes().iter().zip(&a.values) {
            if *r <= quarter {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn zero_profile_has_zero_residual() {
        let g = grid(8, 0.05);
        let mut a = ansatz(3.0, 1.0, 8, &g).unwrap();
        a.values.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(g.norm_l2r(&bvp_residual(&a).unwrap()), 0.0);
    }

    #[test]
    fn decomposition_reassembles_the_residual() {
        // the pieces sum to the exact residual; the discrete residual differs by O(h²)
        let gap = |h: f64| {
            let g = grid(16, h);
            let rbar = 16.0 * 2f64.sqrt();
            let pieces = residual_pieces(3.0, 1.0, 16, rbar, &g).unwrap();
            let disc = bvp_residual(&ansatz(3.0, 1.0, 16, &g).unwrap()).unwrap();
            let sum: Vec<f64> = (0..g.n).map(|i| pieces.r21[i] + pieces.r22[i] + pieces.r23[i]).collect();
            let diff: Vec<f64> = sum.iter().zip(&disc).map(|(a, b)| a - b).collect();
            g.norm_l2r(&diff) / g.norm_l2r(&sum)
        };
        let (coarse, fine) = (gap(1.0 / 96.0), gap(1.0 / 192.0));
        assert!(fine < 2e-3, "{fine}");
        assert!((3.5..4.5).contains(&(coarse / fine)), "{coarse} {fine}");
    }

    #[test]
    fn decomposition_rejects_far_rho() {
        let g = grid(16, 0.05);
        assert!(matches!(residual_decomposition(3.0, 1.0, 16, 5.0, &g), Err(VortexError::InvalidParameter(_))));
    }

    #[test]
    fn solves_m8_with_positive_monotone_tail() {
        let g = grid(8, 1.0 / 96.0);
        let (prof, rep) = solve_with_report(3.0, 1.0, 8, &g, SolveOptions::default()).unwrap();
        assert!(prof.converged);
        assert_eq!(prof.provenance, Provenance::NewtonConverged);
        assert!(prof.residual_norm <= 1e-10 * prof.norm_l2r());
        assert!(rep.iterations <= 12);
        let (rpk, vpk) = prof.peak();
        assert!((rpk - 8.0 * 2f64.sqrt()).abs() < 2.0);
        assert!(prof.values.iter().all(|&v| v >= -1e-8 * vpk));
        let r = g.nodes();
        for i in 1..g.n {
            if r[i] > rpk + 10.0 {
                assert!(prof.values[i] < prof.values[i - 1], "not decreasing at r = {}", r[i]);
            }
        }
        assert!(prof.values[0].abs() < 1e-6 * vpk && prof.values[g.n - 1].abs() < 1e-12 * vpk);
    }

    #[test]
    fn subcritical_exponent_converges() {
        let s = balance_constants(1.5, 1.0).unwrap();
        let g = RadialGrid::for_ring(&s, 16, Some(1.0 / 96.0), None).unwrap();
        let prof = solve(1.5, 1.0, 16, &g, SolveOptions::default()).unwrap();
        assert!(prof.converged);
    }

    #[test]
    fn small_m_is_rejected_by_default() {
        let g = grid(3, 0.05);
        assert!(matches!(solve(3.0, 1.0, 3, &g, SolveOptions::default()), Err(VortexError::InvalidParameter(_))));
    }

    #[test]
    fn peak_value_is_grid_converged() {
        let peaks: Vec<f64> = [1.0 / 24.0, 1.0 / 48.0, 1.0 / 96.0]
            .iter()
            .map(|&h| solve(3.0, 1.0, 8, &grid(8, h), SolveOptions::default()).unwrap().peak().1)
            .collect();
        let d1 = (peaks[0] - peaks[1]).abs();
        let d2 = (peaks[1] - peaks[2]).abs();
        // an h² method predicts d2 ≈ d1/4
        assert!(d2 <= d1, "{peaks:?}");
    }
}
