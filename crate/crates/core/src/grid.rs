use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VortexError};
use crate::soliton::SolitonParams;

/// Largest allowed `h·k` for a local wavenumber `k`.
pub const RESOLUTION_LIMIT: f64 = 0.35;

/// Default target spacing of radial grids.
///
/// The ring position responds to O(h²) truncation error through the nearly
/// singular translation mode, so radial profiles need a finer mesh than the
/// soliton width alone would suggest.
pub const DEFAULT_SPACING: f64 = 1.0 / 192.0;

pub(crate) fn check_resolution(h: f64, k: f64, what: &str) -> Result<()> {
    let product = h * k;
    if !(product <= RESOLUTION_LIMIT) {
        return Err(VortexError::ResolutionGuard {
            what: what.to_string(),
            product,
            limit: RESOLUTION_LIMIT,
        });
    }
    Ok(())
}

/// Uniform mesh `r_i = i h`, `i = 1..=n`, with Dirichlet values at `0` and `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n: usize,
    pub h: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(invalid(format!("r_max must be positive, got {r_max}")));
        }
        if n < 3 {
            return Err(invalid(format!("radial grid needs at least 3 nodes, got {n}")));
        }
        Ok(RadialGrid {
            r_max,
            n,
            h: r_max / (n + 1) as f64,
        })
    }

    /// Grid covering the ring at `r̄ = α₀m` with `40/√ω` of decay room beyond it.
    pub fn for_ring(params: &SolitonParams, m: u32, spacing: Option<f64>, r_max: Option<f64>) -> Result<Self> {
        let spacing = spacing.unwrap_or(DEFAULT_SPACING);
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        let r_max = r_max.unwrap_or(params.ring_radius(m) + 40.0 / params.omega.sqrt());
        let n = ((r_max / spacing).ceil() as usize).saturating_sub(1);
        RadialGrid::new(r_max, n)
    }

    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Discrete `L²_r` norm `(h Σ r_i f_i²)^{1/2}`.
    pub fn norm_l2r(&self, f: &[f64]) -> f64 {
        (self.h * f.iter().enumerate().map(|(i, v)| self.node(i) * v * v).sum::<f64>()).sqrt()
    }

    /// Discrete `(f, g)_{L²_r}`.
    pub fn dot_l2r(&self, f: &[f64], g: &[f64]) -> f64 {
        self.h * f.iter().zip(g).enumerate().map(|(i, (a, b))| self.node(i) * a * b).sum::<f64>()
    }
}

/// Uniform mesh on `[x_min, x_max]` with Dirichlet endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub h: f64,
}

impl LineGrid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(invalid(format!("bad interval [{x_min}, {x_max}]")));
        }
        if n < 3 {
            return Err(invalid(format!("line grid needs at least 3 nodes, got {n}")));
        }
        Ok(LineGrid {
            x_min,
            x_max,
            n,
            h: (x_max - x_min) / (n + 1) as f64,
        })
    }

    /// Symmetric grid `[-half_width, half_width]` with spacing close to `h`.
    pub fn symmetric(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid(format!("spacing must be positive, got {h}")));
        }
        let n = ((2.0 * half_width / h).round() as usize).saturating_sub(1);
        LineGrid::new(-half_width, half_width, n)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_min + (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.node(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::balance_constants;

    #[test]
    fn ring_grid_layout() {
        let s = balance_constants(3.0, 1.0).unwrap();
        let g = RadialGrid::for_ring(&s, 32, Some(1.0 / 48.0), None).unwrap();
        assert!((g.r_max - (32.0 * 2f64.sqrt() + 40.0)).abs() < 1e-12);
        assert!(g.h <= 1.0 / 48.0 + 1e-15);
        let r = g.nodes();
        assert!(r[0] > 0.0);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        assert!((r[g.n - 1] + g.h - g.r_max).abs() < 1e-9);
    }

    #[test]
    fn line_grid_is_symmetric() {
        let g = LineGrid::symmetric(40.0, 0.01).unwrap();
        assert_eq!(g.n, 7999);
        assert!((g.node(0) + g.node(g.n - 1)).abs() < 1e-10);
        assert!((g.node(3999)).abs() < 1e-10);
    }

    #[test]
    fn resolution_guard_trips() {
        assert!(check_resolution(0.1, 3.0, "x").is_ok());
        assert!(matches!(check_resolution(0.2, 3.0, "x"), Err(VortexError::ResolutionGuard { .. })));
    }
}
