//! Distance between the vortex profile and the shifted soliton `Q_c(r - r̄)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result, VortexError};
use crate::grid::RadialGrid;
use crate::linalg::linear_fit;
use crate::operators::{radial_operator, Form};
use crate::profile::{solve, Profile, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// `‖(1 - Δ_r)(φ - Q_c(· - r̄))‖_{L²_r}`.
    pub h2_err: f64,
    /// `max_i |φ(r_i) - Q_c(r_i - r̄)|`.
    pub linf_err: f64,
    /// Peak position minus `r̄`, refined by a parabola through the top three samples.
    pub peak_offset: f64,
}

fn refined_peak(grid: &RadialGrid, v: &[f64]) -> f64 {
    let i = v
        .iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > v[best] { i } else { best });
    if i == 0 || i + 1 >= v.len() {
        return grid.node(i);
    }
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    grid.node(i) + shift * grid.h
}

pub fn error_norms(profile: &Profile) -> Result<ErrorNorms> {
    if !profile.converged {
        return Err(VortexError::NotConverged);
    }
    let params = profile.params()?;
    let q = params.soliton();
    let rbar = params.ring_radius(profile.m);
    let grid = &profile.grid;
    let err: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&profile.values)
        .map(|(&r, &v)| v - q.q(r - rbar))
        .collect();
    let lap = radial_operator(grid, 0.0, 0.0, &[], Form::Plain)?;
    let one_minus_lap: Vec<f64> = err.iter().zip(lap.apply(&err)).map(|(e, le)| e - le).collect();
    Ok(ErrorNorms {
        h2_err: grid.norm_l2r(&one_minus_lap),
        linf_err: err.iter().fold(0.0, |acc, e| acc.max(e.abs())),
        peak_offset: refined_peak(grid, &profile.values) - rbar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub m: u32,
    #[serde(flatten)]
    pub norms: ErrorNorms,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub rate_h2: f64,
    pub rate_linf: f64,
    pub r2_h2: f64,
    pub r2_linf: f64,
    pub rows: Vec<ErrorRow>,
}

/// Log-log slopes of the error norms against `m`.
pub fn fit_rates(rows: &[ErrorRow]) -> Result<RateFit> {
    if rows.len() < 3 {
        return Err(invalid(format!("a rate fit needs at least 3 spins, got {}", rows.len())));
    }
    let lm: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
    let lh: Vec<f64> = rows.iter().map(|r| r.norms.h2_err.ln()).collect();
    let ll: Vec<f64> = rows.iter().map(|r| r.norms.linf_err.ln()).collect();
    let (rate_h2, _, r2_h2) = linear_fit(&lm, &lh);
    let (rate_linf, _, r2_linf) = linear_fit(&lm, &ll);
    Ok(RateFit {
        rate_h2,
        rate_linf,
        r2_h2,
        r2_linf,
        rows: rows.to_vec(),
    })
}

/// Error norms for each spin, solved in parallel on ring grids of the given spacing.
pub fn error_table(p: f64, omega: f64, m_list: &[u32], spacing: Option<f64>) -> Result<Vec<ErrorRow>> {
    if m_list.is_empty() {
        return Err(invalid("empty list of spins"));
    }
    let params = crate::soliton::balance_constants(p, omega)?;
    m_list
        .par_iter()
        .map(|&m| {
            let grid = RadialGrid::for_ring(&params, m, spacing, None)?;
            let prof = solve(p, omega, m, &grid, SolveOptions::default())?;
            Ok(ErrorRow {
                m,
                norms: error_norms(&prof)?,
            })
        })
        .collect()
}

pub fn rate_fit(p: f64, omega: f64, m_list: &[u32], spacing: Option<f64>) -> Result<RateFit> {
    if m_list.len() < 3 {
        return Err(invalid(format!("a rate fit needs at least 3 spins, got {}", m_list.len())));
    }
    fit_rates(&error_table(p, omega, m_list, spacing)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{ansatz, Provenance};
    use crate::soliton::balance_constants;

    #[test]
    fn exact_soliton_has_zero_error() {
        let s = balance_constants(3.0, 1.0).unwrap();
        let g = RadialGrid::for_ring(&s, 16, Some(0.02), None).unwrap();
        let q = s.soliton();
        let rbar = s.ring_radius(16);
        let prof = Profile {
            grid: g,
            values: g.nodes().iter().map(|r| q.q(r - rbar)).collect(),
            p: 3.0,
            omega: 1.0,
            m: 16,
            converged: true,
            residual_norm: 0.0,
            provenance: Provenance::Loaded,
        };
        let e = error_norms(&prof).unwrap();
        assert_eq!(e.linf_err, 0.0);
        assert_eq!(e.h2_err, 0.0);
        assert!(e.peak_offset.abs() < 1e-3);
    }

    #[test]
    fn unconverged_profile_is_rejected() {
        let s = balance_constants(3.0, 1.0).unwrap();
        let g = RadialGrid::for_ring(&s, 8, Some(0.05), None).unwrap();
        let a = ansatz(3.0, 1.0, 8, &g).unwrap();
        assert!(matches!(error_norms(&a), Err(VortexError::NotConverged)));
    }

    #[test]
    fn parabolic_peak_is_exact_for_parabolas() {
        let g = RadialGrid::new(10.0, 99).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| 5.0 - (r - 4.237).powi(2)).collect();
        assert!((refined_peak(&g, &v) - 4.237).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_power_laws() {
        let rows: Vec<ErrorRow> = [8u32, 16, 32, 64]
            .iter()
            .map(|&m| ErrorRow {
                m,
                norms: ErrorNorms {
                    h2_err: 3.0 * (m as f64).powf(-0.5),
                    linf_err: 0.7 / m as f64,
                    peak_offset: 0.0,
                },
            })
            .collect();
        let fit = fit_rates(&rows).unwrap();
        assert!((fit.rate_h2 + 0.5).abs() < 1e-12);
        assert!((fit.rate_linf + 1.0).abs() < 1e-12);
        assert!(fit.r2_h2 > 1.0 - 1e-12);
        assert!(fit_rates(&rows[..2]).is_err());
    }

    #[test]
    fn errors_decrease_with_spin() {
        let rows = error_table(3.0, 1.0, &[8, 16, 32], Some(1.0 / 96.0)).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].norms.linf_err < w[0].norms.linf_err);
            assert!(w[1].norms.h2_err < w[0].norms.h2_err);
        }
        assert!(rows.iter().all(|r| r.norms.linf_err > 0.0 && r.norms.peak_offset.abs() <= 2.0));
    }
}
