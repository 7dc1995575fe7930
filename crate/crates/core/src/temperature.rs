//! The temperature function `T(q)` and its derivatives.
//!
//! `T(q)` is the unique root in `t` of `P(q, t) = 0`; uniqueness comes
//! from strict monotonicity of the pressure in `t` (its `t`-derivative is
//! `-∫ log|Jac f| dν < 0`). The solver is a bracket-safeguarded Newton
//! iteration with the analytic derivative, warm-started along the grid.
//!
//! Besides `T`, the curve carries
//!
//! * `alpha(q) = -∫g dν_q / ∫log|Jac f| dν_q = -T'(q)`,
//! * finite-difference derivatives `T'`, `T''` (step `FD_STEP`, Richardson
//!   refined for `T''`),
//! * the variance form of `T''`:
//!   `Var(g - T'(q)·log|Jac f|) / ∫log|Jac f| dν_q`, computed under a
//!   correlation-sum convention selected by comparing against the
//!   finite-difference values at interior grid points,
//! * `h(ν_q)/L(ν_q)`, the volume dimension of `ν_q`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::PotentialFamily;
use crate::transfer::{
    asymptotic_variance, equilibrium_state, pressure, MarkovMeasure, VarianceConvention,
};

/// Residual target for `|P(q, T(q))|`. The contract promises 1e-11; the
/// solver drives to near machine precision so finite differences of `T`
/// stay clean.
pub const T_ROOT_TOL: f64 = 1e-13;

/// Step for finite-difference derivatives of `T`.
pub const FD_STEP: f64 = 1e-3;

/// Bracket expansion hard bound for the root solve.
const T_BRACKET_BOUND: f64 = 1e4;

/// Threshold on variance and alpha variation below which the curve is the
/// degenerate (straight-line) case; about 100x accumulated solver error.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Convexity slack for the second divided differences of `T`.
pub const CONVEXITY_SLACK: f64 = 1e-9;

/// A sampled temperature curve with derivatives and per-point equilibrium
/// summaries.
#[derive(Debug, Clone, Serialize)]
pub struct TemperatureCurve {
    pub q_grid: Vec<f64>,
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    pub t_prime_fd: Vec<f64>,
    pub t_second_fd: Vec<f64>,
    pub t_second_var: Vec<f64>,
    pub vd_of_nu_q: Vec<f64>,
    pub convention_used: VarianceConvention,
}

/// Outcome of the straight-line (nu = nu_0) test.
#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub is_nu0: bool,
    pub max_t_second_var: f64,
    pub alpha_variation: f64,
    pub threshold: f64,
}

/// Solve `P(q, t) = 0` for `t`.
pub fn solve_t(family: &PotentialFamily, q: f64) -> Result<f64> {
    solve_t_seeded(family, q, None)
}

/// Same with a warm-start guess (used along grids).
pub fn solve_t_seeded(family: &PotentialFamily, q: f64, seed: Option<f64>) -> Result<f64> {
    let press = |t: f64| -> Result<f64> { pressure(family.sft(), &family.phi(q, t)) };

    // Expand a bracket [lo, hi] with P(lo) > 0 > P(hi); P is strictly
    // decreasing in t and diverges to ±inf at ∓inf.
    let guess = seed.unwrap_or(0.0);
    let mut step = 1.0;
    let mut lo = guess;
    let mut p_lo = press(lo)?;
    while p_lo <= 0.0 {
        lo -= step;
        step *= 2.0;
        if lo < -T_BRACKET_BOUND {
            return Err(Error::BracketingFailure { q, lo, hi: guess });
        }
        p_lo = press(lo)?;
    }
    step = 1.0;
    let mut hi = guess;
    let mut p_hi = press(hi)?;
    while p_hi >= 0.0 {
        hi += step;
        step *= 2.0;
        if hi > T_BRACKET_BOUND {
            return Err(Error::BracketingFailure { q, lo, hi });
        }
        p_hi = press(hi)?;
    }

    // Newton with the analytic slope -∫jac dν_{q,t}, clipped to the
    // bracket, bisection when outside.
    let mut t = 0.5 * (lo + hi);
    if let Some(s) = seed {
        if s > lo && s < hi {
            t = s;
        }
    }
    for _ in 0..200 {
        let p = press(t)?;
        if p.abs() <= T_ROOT_TOL {
            return Ok(t);
        }
        if p > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let nu = equilibrium_state(family.sft(), &family.phi(q, t))?;
        let slope = -nu.integrate(family.jac().potential())?;
        let mut next = t - p / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() < f64::EPSILON * t.abs().max(1.0) {
            return Ok(next);
        }
        t = next;
    }
    // Newton stalls only when the bracket has collapsed to rounding width.
    let p = press(t)?;
    if p.abs() <= 1e-11 {
        Ok(t)
    } else {
        Err(Error::BracketingFailure { q, lo, hi })
    }
}

/// The equilibrium state `ν_q` of `phi_{q, T(q)}`.
pub fn equilibrium_at(family: &PotentialFamily, q: f64) -> Result<(f64, MarkovMeasure)> {
    let t = solve_t(family, q)?;
    let nu = equilibrium_state(family.sft(), &family.phi(q, t))?;
    Ok((t, nu))
}

/// `alpha(q) = -∫g dν_q / ∫log|Jac f| dν_q`; strictly positive.
pub fn alpha(family: &PotentialFamily, q: f64) -> Result<f64> {
    let (_, nu) = equilibrium_at(family, q)?;
    alpha_of(family, &nu)
}

pub(crate) fn alpha_of(family: &PotentialFamily, nu: &MarkovMeasure) -> Result<f64> {
    let num = -nu.integrate(family.g())?;
    let den = nu.integrate(family.jac().potential())?;
    Ok(num / den)
}

/// Build the full curve over a strictly increasing grid.
pub fn temperature_curve(family: &PotentialFamily, q_grid: &[f64]) -> Result<TemperatureCurve> {
    if q_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvariantViolation(
            "q grid must be strictly increasing".into(),
        ));
    }
    let n = q_grid.len();
    let mut t = Vec::with_capacity(n);
    let mut alpha_v = Vec::with_capacity(n);
    let mut vd = Vec::with_capacity(n);
    let mut measures = Vec::with_capacity(n);
    let mut warm = None;
    for &q in q_grid {
        let tq = solve_t_seeded(family, q, warm)?;
        warm = Some(tq);
        let nu = equilibrium_state(family.sft(), &family.phi(q, tq))?;
        let a = alpha_of(family, &nu)?;
        if a <= 0.0 {
            return Err(Error::InvariantViolation(format!(
                "alpha({q}) = {a} is not positive"
            )));
        }
        let l = nu.integrate(family.jac().potential())?;
        vd.push(nu.entropy() / l);
        t.push(tq);
        alpha_v.push(a);
        measures.push(nu);
    }
    if t.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvariantViolation("T is not strictly decreasing".into()));
    }

    // Per-point finite differences with their own offsets; the grid
    // spacing is too coarse for the 1e-6 derivative contracts.
    let mut t_prime = Vec::with_capacity(n);
    let mut t_second = Vec::with_capacity(n);
    for (i, &q) in q_grid.iter().enumerate() {
        let h = FD_STEP;
        let tp = |dq: f64| solve_t_seeded(family, q + dq, Some(t[i]));
        let (tm1, tp1) = (tp(-h)?, tp(h)?);
        t_prime.push((tp1 - tm1) / (2.0 * h));
        let (tm2, tp2) = (tp(-h / 2.0)?, tp(h / 2.0)?);
        let d2_h = (tp1 - 2.0 * t[i] + tm1) / (h * h);
        let d2_h2 = (tp2 - 2.0 * t[i] + tm2) / (h * h / 4.0);
        // Richardson: error O(h^2) cancels
        t_second.push((4.0 * d2_h2 - d2_h) / 3.0);
    }

    // Convexity: second divided differences of T on the grid.
    for i in 1..n.saturating_sub(1) {
        let dd = ((t[i + 1] - t[i]) / (q_grid[i + 1] - q_grid[i])
            - (t[i] - t[i - 1]) / (q_grid[i] - q_grid[i - 1]))
            / (0.5 * (q_grid[i + 1] - q_grid[i - 1]));
        if dd < -CONVEXITY_SLACK {
            return Err(Error::InvariantViolation(format!(
                "T not convex at q = {}: divided difference {dd}",
                q_grid[i]
            )));
        }
    }

    // psi_q = g - T'(q) jac = g + alpha(q) jac, using the exact identity
    // T' = -alpha rather than the finite-difference slope.
    let variance_at = |i: usize, conv: VarianceConvention| -> Result<f64> {
        let psi = family
            .g()
            .combine(1.0, family.jac().potential(), alpha_v[i])?;
        let var = asymptotic_variance(&measures[i], &psi, &psi, conv)?;
        let l = measures[i].integrate(family.jac().potential())?;
        Ok(var / l)
    };

    // Convention arbitration against T''_fd at three interior points.
    let probes: Vec<usize> = if n >= 5 {
        vec![n / 4, n / 2, 3 * n / 4]
    } else {
        vec![n / 2]
    };
    let mut err_one = 0.0;
    let mut err_sym = 0.0;
    for &i in &probes {
        err_one += (variance_at(i, VarianceConvention::OneSided)? - t_second[i]).abs();
        err_sym += (variance_at(i, VarianceConvention::Symmetric)? - t_second[i]).abs();
    }
    let convention = if err_sym <= err_one {
        VarianceConvention::Symmetric
    } else {
        VarianceConvention::OneSided
    };
    let mut t_second_var = Vec::with_capacity(n);
    for i in 0..n {
        t_second_var.push(variance_at(i, convention)?);
    }

    Ok(TemperatureCurve {
        q_grid: q_grid.to_vec(),
        t,
        alpha: alpha_v,
        t_prime_fd: t_prime,
        t_second_fd: t_second,
        t_second_var,
        vd_of_nu_q: vd,
        convention_used: convention,
    })
}

/// Declares the straight-line case `nu = nu_0` when both the variance
/// form of `T''` and the variation of `alpha` vanish over the grid.
pub fn degeneracy_test(curve: &TemperatureCurve) -> DegeneracyReport {
    let max_var = curve
        .t_second_var
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let a_min = curve.alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max = curve
        .alpha
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let variation = a_max - a_min;
    DegeneracyReport {
        is_nu0: max_var <= DEGENERACY_TOL && variation <= DEGENERACY_TOL,
        max_t_second_var: max_var,
        alpha_variation: variation,
        threshold: DEGENERACY_TOL,
    }
}

/// Finite-difference check of the pressure partials against their
/// equilibrium-integral forms at `(q, t)`:
/// `∂P/∂t = -∫jac dν_{q,t}` and `∂P/∂q = ∫g dν_{q,t}`.
/// Returns the two absolute defects.
pub fn pressure_partials_defect(family: &PotentialFamily, q: f64, t: f64) -> Result<(f64, f64)> {
    let h = 1e-4;
    let p = |q: f64, t: f64| pressure(family.sft(), &family.phi(q, t));
    let nu = equilibrium_state(family.sft(), &family.phi(q, t))?;
    let dp_dt = (p(q, t + h)? - p(q, t - h)?) / (2.0 * h);
    let dp_dq = (p(q + h, t)? - p(q - h, t)?) / (2.0 * h);
    let defect_t = (dp_dt + nu.integrate(family.jac().potential())?).abs();
    let defect_q = (dp_dq - nu.integrate(family.g())?).abs();
    Ok((defect_t, defect_q))
}
