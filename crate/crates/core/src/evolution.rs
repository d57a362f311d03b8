//! Time integration of the linearized sector system `w_t = Hw`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result, VortexError};
use crate::linalg::{linear_fit, refine, EigenPair};
use crate::operators::{build_sector_operator, SectorOperator};
use crate::profile::Profile;
use crate::spectral::{spectrum_of, SpectrumOptions};

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// `‖w(t)‖_{L²_r}`.
    pub norm: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    /// Independent standard normal real and imaginary parts at every node.
    Random { seed: u64 },
    /// Eigenvector of the eigenvalue with largest real part.
    Eigenvector,
    /// Interleaved symmetrized components `(w1_0, w2_0, w1_1, …)`.
    Given(Vec<Complex64>),
}

/// Eigenpair with the largest real part, refined on the full operator.
pub fn leading_eigenpair(op: &SectorOperator, opts: SpectrumOptions) -> Result<EigenPair> {
    let rep = spectrum_of(op, op.p, op.omega, opts)?;
    let top = rep.eigenvalues[0];
    let n = op.dim();
    let start: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, 0.1 * (i % 7) as f64)).collect();
    refine(&op.matrix(), Complex64::new(top.re, top.im), &start, 1e-11)
}

pub fn initial_vector(op: &SectorOperator, init: &InitialCondition) -> Result<Vec<Complex64>> {
    let n = op.dim();
    let w = match init {
        InitialCondition::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect::<Vec<_>>()
        }
        InitialCondition::Eigenvector => leading_eigenpair(op, SpectrumOptions::default())?.vector,
        InitialCondition::Given(w) => {
            if w.len() != n {
                return Err(VortexError::GridMismatch(format!(
                    "initial vector has {} entries, the operator acts on {n}",
                    w.len()
                )));
            }
            w.clone()
        }
    };
    let norm = op.l2r_norm(&w);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(invalid("initial vector must be nonzero and finite"));
    }
    Ok(w.into_iter().map(|v| v / norm).collect())
}

/// Crank–Nicolson steps `(I - dt/2 H) w_{k+1} = (I + dt/2 H) w_k` from unit-norm `w0`.
///
/// The scheme is unconditionally stable and preserves the norm exactly when
/// `H` is skew-Hermitian, so any growth comes from the potential coupling.
pub fn evolve_operator(op: &SectorOperator, w0: &[Complex64], t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid(format!("final time must be positive, got {t_end}")));
    }
    if w0.len() != op.dim() {
        return Err(VortexError::GridMismatch(format!(
            "initial vector has {} entries, the operator acts on {}",
            w0.len(),
            op.dim()
        )));
    }
    let h = op.matrix();
    let half = Complex64::new(0.5 * dt, 0.0);
    let implicit = h.scaled(-half).shifted(Complex64::new(1.0, 0.0)).lu()?;
    let explicit = h.scaled(half).shifted(Complex64::new(1.0, 0.0));
    let steps = (t_end / dt).round() as usize;
    let mut w = w0.to_vec();
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        norm: Vec::with_capacity(steps + 1),
    };
    traj.t.push(0.0);
    traj.norm.push(op.l2r_norm(&w));
    for k in 1..=steps {
        let mut next = explicit.matvec(&w);
        implicit.solve_in_place(&mut next);
        w = next;
        let norm = op.l2r_norm(&w);
        if !norm.is_finite() {
            return Err(VortexError::LinearSolveFailure(format!("non-finite state at step {k}")));
        }
        traj.t.push(k as f64 * dt);
        traj.norm.push(norm);
    }
    Ok(traj)
}

pub fn evolve_linearized(
    profile: &Profile,
    j: i32,
    init: &InitialCondition,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let op = build_sector_operator(profile, profile.m, j)?;
    let w0 = initial_vector(&op, init)?;
    evolve_operator(&op, &w0, t_end, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub rate: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Slope of `log‖w‖` against `t` after discarding the first `burn_in` fraction.
pub fn fit_growth(traj: &Trajectory, burn_in: f64) -> Result<GrowthFit> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(invalid(format!("burn-in fraction must lie in [0, 1), got {burn_in}")));
    }
    let start = (burn_in * traj.t.len() as f64).floor() as usize;
    let t = &traj.t[start.min(traj.t.len())..];
    let y: Vec<f64> = traj.norm[start.min(traj.norm.len())..].iter().map(|v| v.ln()).collect();
    if t.len() < 50 {
        return Err(VortexError::InsufficientData(format!(
            "{} samples after burn-in, need at least 50",
            t.len()
        )));
    }
    let (rate, _, r2) = linear_fit(t, &y);
    Ok(GrowthFit {
        rate,
        r2,
        samples: t.len(),
    })
}
