//! The one-dimensional sech soliton and the constants that place the vortex ring.
//!
//! `Q_c(x) = A sech^{2/(p-1)}((p-1) sqrt(c) x / 2)` with `A^{p-1} = (p+1)c/2`
//! solves `Q'' - cQ + Q^p = 0` on the line. Its L2 norms have closed forms in
//! terms of the Beta function; the balance `∫Q'² = α⁻²∫Q²` with
//! `c = ω + α⁻²` fixes `c = (p+3)ω/4` and `α₀ = 2/sqrt((p-1)ω)`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{invalid, Result, VortexError};

/// Scalar constants of the limiting 1D problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub p: f64,
    pub omega: f64,
    /// Effective 1D frequency `c = ω + α₀⁻²`.
    pub c: f64,
    /// Ring radius per unit spin, `r̄ = α₀ m`.
    pub alpha0: f64,
    /// Peak amplitude of `Q_c`.
    pub amplitude: f64,
    /// `L_c Q_c^{(p+1)/2} = λ₀ c Q_c^{(p+1)/2}`.
    pub lambda0: f64,
    /// Transversal growth coefficient; absent for `p >= 5`.
    pub gamma: Option<f64>,
    /// Exponent of the canonical unstable index `j* = ⌊m^β⌋`.
    pub beta_exp: f64,
}

fn check_p_omega(p: f64, omega: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(invalid(format!("nonlinearity exponent p must exceed 1, got {p}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(invalid(format!("frequency omega must be positive, got {omega}")));
    }
    Ok(())
}

/// Builds the full constant set for `(p, ω)`.
pub fn balance_constants(p: f64, omega: f64) -> Result<SolitonParams> {
    check_p_omega(p, omega)?;
    let c = (p + 3.0) * omega / 4.0;
    let alpha0 = 2.0 / ((p - 1.0) * omega).sqrt();
    let sol = Soliton::new(p, c)?;
    let gamma = if p < 5.0 {
        Some(2.0 * ((p - 1.0) * c / (5.0 - p)).sqrt())
    } else {
        None
    };
    Ok(SolitonParams {
        p,
        omega,
        c,
        alpha0,
        amplitude: sol.amplitude(),
        lambda0: (p - 1.0) * (p + 3.0) / 4.0,
        gamma,
        beta_exp: (p - 1.0).min(1.0) / 6.0,
    })
}

impl SolitonParams {
    /// The soliton `Q_c` at this parameter set's `c`.
    pub fn soliton(&self) -> Soliton {
        Soliton {
            p: self.p,
            c: self.c,
        }
    }

    /// Ring radius `r̄ = α₀ m`.
    pub fn ring_radius(&self, m: u32) -> f64 {
        self.alpha0 * m as f64
    }

    /// `⌊m^β⌋`, guarding against `64^{1/6}` evaluating to `1.999…`.
    pub fn canonical_index(&self, m: u32) -> u32 {
        let x = (m as f64).powf(self.beta_exp);
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            nearest as u32
        } else {
            x.floor() as u32
        }
    }
}

/// `Q_c` for fixed `(p, c)` with analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Soliton {
    pub p: f64,
    pub c: f64,
}

impl Soliton {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(invalid(format!("nonlinearity exponent p must exceed 1, got {p}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("soliton frequency c must be positive, got {c}")));
        }
        Ok(Soliton { p, c })
    }

    fn power(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    fn rate(&self) -> f64 {
        (self.p - 1.0) * self.c.sqrt() / 2.0
    }

    pub fn amplitude(&self) -> f64 {
        ((self.p + 1.0) * self.c / 2.0).powf(1.0 / (self.p - 1.0))
    }

    pub fn q(&self, x: f64) -> f64 {
        let y = (self.rate() * x).abs();
        // ln sech y, stable for large y
        let ln_sech = -y + std::f64::consts::LN_2 - (-2.0 * y).exp().ln_1p();
        self.amplitude() * (self.power() * ln_sech).exp()
    }

    pub fn dq(&self, x: f64) -> f64 {
        -self.power() * self.rate() * (self.rate() * x).tanh() * self.q(x)
    }

    pub fn d2q(&self, x: f64) -> f64 {
        let (k, s) = (self.rate(), self.power());
        let t = (k * x).tanh();
        let sech2 = 1.0 - t * t;
        s * k * k * (s * t * t - sech2) * self.q(x)
    }

    /// `∂_c Q_c(x) = Q/((p-1)c) + x Q'/(2c)`.
    pub fn dcq(&self, x: f64) -> f64 {
        self.q(x) / ((self.p - 1.0) * self.c) + x * self.dq(x) / (2.0 * self.c)
    }

    /// Half-width beyond which the sech tail is below `e^{-60}` of the peak
    /// in the exponent's argument.
    pub fn truncation(&self) -> f64 {
        60.0 * 2.0 / ((self.p - 1.0) * self.c.sqrt())
    }

    /// `∫Q²` from the Beta-function formula.
    pub fn l2_sq(&self) -> f64 {
        let a = self.amplitude();
        2.0 * a * a / ((self.p - 1.0) * self.c.sqrt()) * ln_beta(self.power(), 0.5).exp()
    }

    /// `∫Q'²` from the Beta-function formula.
    pub fn dl2_sq(&self) -> f64 {
        let a = self.amplitude();
        2.0 / (self.p - 1.0) * self.c.sqrt() * a * a * ln_beta(self.power(), 1.5).exp()
    }

    /// `d/dc ∫Q²`. The norm scales as `c^{(5-p)/(2(p-1))}`.
    pub fn dl2_sq_dc(&self) -> f64 {
        (5.0 - self.p) / (2.0 * (self.p - 1.0)) * self.l2_sq() / self.c
    }
}

/// Integral norms of `Q_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QNorms {
    pub l2_sq: f64,
    pub dl2_sq: f64,
    pub dndc: f64,
    pub dcq_l2_sq: f64,
    pub xq_l2_sq: f64,
}

/// Relative accuracy requested from the quadrature routes.
pub const QUAD_REL_TOL: f64 = 1e-12;

/// Integrates a smooth function concentrated near the origin over `[-x, x]`.
///
/// The interval is split at geometrically spaced breakpoints so the double
/// exponential rule sees the peak at a panel endpoint.
pub fn integrate_centered<F: Fn(f64) -> f64>(f: F, half_width: f64, scale: f64) -> Result<f64> {
    let mut breaks = vec![0.0];
    let mut b = scale;
    while b < half_width {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(half_width);
    let mut total = 0.0;
    let mut err = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (lo, hi) in [(a, b), (-b, -a)] {
            let out = quadrature::integrate(&f, lo, hi, 1e-16);
            total += out.integral;
            err += out.error_estimate;
        }
    }
    let tol = QUAD_REL_TOL * total.abs().max(f64::MIN_POSITIVE);
    if !(err <= tol) {
        return Err(VortexError::QuadratureFailure { estimate: err, tol });
    }
    Ok(total)
}

/// Closed-form `∫Q²`, `∫Q'²`, `d/dc∫Q²`; quadrature for `∫(∂_cQ)²` and `∫(xQ)²`.
pub fn q_norms(params: &SolitonParams) -> Result<QNorms> {
    let q = params.soliton();
    let x = q.truncation();
    let width = 1.0 / params.c.sqrt();
    let dcq_l2_sq = integrate_centered(|s| q.dcq(s).powi(2), x, width)?;
    let xq_l2_sq = integrate_centered(|s| (s * q.q(s)).powi(2), x, width)?;
    Ok(QNorms {
        l2_sq: q.l2_sq(),
        dl2_sq: q.dl2_sq(),
        dndc: q.dl2_sq_dc(),
        dcq_l2_sq,
        xq_l2_sq,
    })
}

/// `∫Q_c'² - α⁻²∫Q_c²` with `c = ω + α⁻²`; its root in `α` is `α₀`.
pub fn balance_residual(p: f64, omega: f64, alpha: f64) -> Result<f64> {
    check_p_omega(p, omega)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    let q = Soliton::new(p, omega + alpha.powi(-2))?;
    Ok(q.dl2_sq() - q.l2_sq() / (alpha * alpha))
}

/// Locates the root of [`balance_residual`] by bracketing and bisection.
pub fn solve_balance(p: f64, omega: f64) -> Result<f64> {
    check_p_omega(p, omega)?;
    let f = |a: f64| balance_residual(p, omega, a);
    let mut lo = 1e-3 / omega.sqrt();
    let mut hi = 1.0 / omega.sqrt();
    while f(lo)? > 0.0 {
        lo /= 10.0;
    }
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(invalid("balance residual has no sign change"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `γ = (2‖Q_c‖² / (d/dc‖Q_c‖²))^{1/2}` from the integral norms.
pub fn gamma_growth(params: &SolitonParams) -> Result<f64> {
    if params.p >= 5.0 {
        return Err(VortexError::OutOfValidityRange(format!(
            "growth coefficient requires 1 < p < 5, got p = {}",
            params.p
        )));
    }
    let q = params.soliton();
    Ok((2.0 * q.l2_sq() / q.dl2_sq_dc()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_p3_omega1() {
        let s = balance_constants(3.0, 1.0).unwrap();
        assert_relative_eq!(s.c, 1.5, epsilon = 1e-15);
        assert_relative_eq!(s.alpha0, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s.amplitude, 3f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(s.lambda0, 3.0, epsilon = 1e-15);
        // c = ω + α₀⁻² identically
        assert_relative_eq!(s.c, s.omega + s.alpha0.powi(-2), epsilon = 1e-14);
    }

    #[test]
    fn omega_scaling_halves_alpha0() {
        let s = balance_constants(3.0, 4.0).unwrap();
        assert_relative_eq!(s.c, 6.0, epsilon = 1e-15);
        assert_relative_eq!(s.alpha0, 0.5f64.sqrt(), epsilon = 1e-15);
        let s = balance_constants(2.0, 1.0).unwrap();
        assert_relative_eq!(s.c, 1.25);
        assert_relative_eq!(s.alpha0, 2.0);
        assert_relative_eq!(s.lambda0, 1.25);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(balance_constants(1.0, 1.0), Err(VortexError::InvalidParameter(_))));
        assert!(matches!(balance_constants(3.0, 0.0), Err(VortexError::InvalidParameter(_))));
        assert!(matches!(balance_residual(3.0, 1.0, 0.0), Err(VortexError::InvalidParameter(_))));
        let s = balance_constants(6.0, 1.0).unwrap();
        assert!(s.gamma.is_none());
    }

    #[test]
    fn peak_and_decay() {
        let q = Soliton::new(3.0, 1.5).unwrap();
        assert_relative_eq!(q.q(0.0), 1.7320508075688772, epsilon = 1e-7);
        assert_eq!(q.dq(0.0), 0.0);
        let mut prev = q.q(0.0);
        for i in 1..400 {
            let v = q.q(i as f64 * 0.1);
            assert!(v < prev);
            prev = v;
        }
        assert!(q.q(200.0) < 1e-100);
    }

    #[test]
    fn dcq_matches_finite_difference() {
        let h = 1e-5;
        let fd = (Soliton::new(3.0, 1.5 + h).unwrap().q(1.0) - Soliton::new(3.0, 1.5 - h).unwrap().q(1.0))
            / (2.0 * h);
        let q = Soliton::new(3.0, 1.5).unwrap();
        assert!((q.dcq(1.0) - fd).abs() < 1e-7);
    }

    #[test]
    fn ode_and_first_integral_hold_pointwise() {
        for &p in &[1.5, 2.0, 3.0, 4.0, 4.5, 7.0] {
            let q = Soliton::new(p, 1.3).unwrap();
            let a = q.amplitude();
            for i in -100..=100 {
                let x = i as f64 * 0.1;
                let v = q.q(x);
                let ode = q.d2q(x) - q.c * v + v.powf(p);
                assert!(ode.abs() < 1e-8, "p={p} x={x} ode={ode}");
                let first = q.dq(x).powi(2) - q.c * v * v * (1.0 - (v / a).powf(p - 1.0));
                assert!(first.abs() < 1e-8, "p={p} x={x} first={first}");
            }
        }
    }

    #[test]
    fn norms_p3() {
        let s = balance_constants(3.0, 1.0).unwrap();
        let n = q_norms(&s).unwrap();
        assert_relative_eq!(n.l2_sq, 2.0 * 6f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(n.dl2_sq, 6f64.sqrt(), max_relative = 1e-12);
        assert!((n.dl2_sq - n.l2_sq / (s.alpha0 * s.alpha0)).abs() < 1e-10);
        assert_relative_eq!(n.dndc, 1.6329931618554523, max_relative = 1e-12);
        // ∫x² 3 sech²(√1.5 x) dx = 3π²/(6·1.5^{3/2})
        let xq = 3.0 * std::f64::consts::PI.powi(2) / (6.0 * 1.5f64.powf(1.5));
        assert_relative_eq!(n.xq_l2_sq, xq, max_relative = 1e-10);
    }

    #[test]
    fn dndc_matches_finite_difference() {
        let h = 1e-5;
        let plus = Soliton::new(3.0, 1.5 + h).unwrap().l2_sq();
        let minus = Soliton::new(3.0, 1.5 - h).unwrap().l2_sq();
        let fd = (plus - minus) / (2.0 * h);
        let exact = Soliton::new(3.0, 1.5).unwrap().dl2_sq_dc();
        assert!(((fd - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn balance_residual_signs() {
        assert!(balance_residual(3.0, 1.0, 2f64.sqrt()).unwrap().abs() < 1e-10);
        assert!(balance_residual(3.0, 1.0, 1.0).unwrap() < 0.0);
        assert!(balance_residual(3.0, 1.0, 3.0).unwrap() > 0.0);
    }

    #[test]
    fn gamma_values() {
        let s = balance_constants(3.0, 1.0).unwrap();
        let g = gamma_growth(&s).unwrap();
        assert_relative_eq!(g, 6f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(g / s.alpha0, 3f64.sqrt(), max_relative = 1e-12);
        let s = balance_constants(2.0, 1.0).unwrap();
        assert_relative_eq!(gamma_growth(&s).unwrap(), 1.2909944487358056, max_relative = 1e-12);
        let s = balance_constants(5.0, 1.0).unwrap();
        assert!(matches!(gamma_growth(&s), Err(VortexError::OutOfValidityRange(_))));
    }

    #[test]
    fn canonical_index_is_exact_at_powers() {
        let s = balance_constants(3.0, 1.0).unwrap();
        assert_eq!(s.canonical_index(64), 2);
        assert_eq!(s.canonical_index(63), 1);
        assert_eq!(s.canonical_index(729), 3);
    }
}
