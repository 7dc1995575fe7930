//! The Legendre side of the multifractal formalism.
//!
//! With the temperature curve in hand, the dimension spectrum is
//! `S(alpha(q)) = T(q) + q·alpha(q)`, which equals the volume dimension
//! `h(ν_q)/L(ν_q)` of the parametrizing equilibrium state. This module
//! checks that identity, the Legendre duality between `-S(-·)` and `T`,
//! the spectrum endpoints `alpha_1 <= alpha <= alpha_2` via periodic-orbit
//! extremization, the variational characterization of `-T(q)`, and the
//! conditional variational principle over ratio-constrained Markov
//! measures.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialFamily};
use crate::sft::PeriodicOrbit;
use crate::temperature::{self, TemperatureCurve, DEGENERACY_TOL};
use crate::transfer::MarkovMeasure;

/// Tolerance for the spectrum identity `S = h/L` and the conditional
/// variational inequality.
pub const SPECTRUM_IDENTITY_TOL: f64 = 1e-8;

/// Tolerance for variational equalities/gaps at `ν_q`.
pub const VARIATIONAL_TOL: f64 = 1e-9;

/// Default period cap for periodic-orbit extremization.
pub const DEFAULT_ENDPOINT_PERIOD: usize = 12;

/// One point of the spectrum with its two independent evaluations.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumPoint {
    pub q: f64,
    pub alpha: f64,
    /// `T(q) + q alpha(q)` — the Legendre form.
    pub s: f64,
    /// `h(ν_q)/L(ν_q)` — the volume dimension of `ν_q`.
    pub s_vd: f64,
    pub defect: f64,
}

/// Residuals of the Legendre-pair identities over a sampled curve.
#[derive(Debug, Clone, Serialize)]
pub struct LegendreResiduals {
    /// `max |S - (T + q alpha)|`; zero by construction, reported for audit.
    pub identity: f64,
    /// `max` over interior points of `|dS/dalpha - q|` (divided differences).
    pub slope: f64,
    /// `max_q |T(q) - max_j (S_j - q alpha_j)|` — `T` recovered as the
    /// transform of `-S(-·)`.
    pub reconstruction: f64,
    /// Largest second divided difference of `S` against `alpha`;
    /// concavity means this is `<= 1e-9`.
    pub max_second_divided_diff: f64,
}

/// Endpoint estimates by two methods plus their spread.
#[derive(Debug, Clone, Serialize)]
pub struct Endpoints {
    /// Extremes of `-sum g / sum log|Jac|` over periodic orbits.
    pub alpha1_orbits: f64,
    pub alpha2_orbits: f64,
    pub arg_min_orbit: String,
    pub arg_max_orbit: String,
    pub max_period: usize,
    /// `alpha(±q_probe)` — the temperature-curve tails.
    pub alpha_at_pos_probe: f64,
    pub alpha_at_neg_probe: f64,
    pub q_probe: f64,
    /// Absolute disagreement between the two methods per endpoint.
    pub spread_alpha1: f64,
    pub spread_alpha2: f64,
}

/// Result of the variational characterization of `-T(q)`.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalCheck {
    pub q: f64,
    pub t: f64,
    /// `min` over periodic-orbit measures of `(q ∫g)/(-∫jac)` minus `-T(q)`;
    /// nonnegative up to tolerance.
    pub periodic_gap: f64,
    /// `|(h(ν_q) + q ∫g dν_q)/(-∫jac dν_q) + T(q)|` — equality at `ν_q`.
    pub equality_defect: f64,
}

/// Result of the conditional variational principle check at one `q`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalCheck {
    pub q: f64,
    pub alpha: f64,
    pub s: f64,
    pub samples: usize,
    /// `max h(ρ)/L(ρ) - S(alpha)` over ratio-constrained samples.
    pub max_violation: f64,
    /// `|h(ν_q)/L(ν_q) - S(alpha)|`.
    pub equality_defect: f64,
    pub seed: u64,
}

/// Full spectrum report consumed by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub points: Vec<SpectrumPoint>,
    pub endpoints: Endpoints,
    pub legendre: Option<LegendreResiduals>,
    pub degenerate: bool,
    pub variational: Vec<VariationalCheck>,
    pub conditional: Vec<ConditionalCheck>,
}

/// Spectrum value at grid index `i` of a computed curve, cross-checked
/// against the volume dimension of `ν_q`.
pub fn spectrum_point(curve: &TemperatureCurve, i: usize) -> SpectrumPoint {
    let q = curve.q_grid[i];
    let alpha = curve.alpha[i];
    let s = curve.t[i] + q * alpha;
    let s_vd = curve.vd_of_nu_q[i];
    SpectrumPoint {
        q,
        alpha,
        s,
        s_vd,
        defect: (s - s_vd).abs(),
    }
}

pub fn spectrum_points(curve: &TemperatureCurve) -> Vec<SpectrumPoint> {
    (0..curve.q_grid.len())
        .map(|i| spectrum_point(curve, i))
        .collect()
}

/// Legendre residuals over the curve; errors with [`Error::DegenerateSpectrum`]
/// when `alpha` is constant and the slope residual is undefined.
pub fn legendre_check(curve: &TemperatureCurve) -> Result<LegendreResiduals> {
    let pts = spectrum_points(curve);
    let n = pts.len();
    let variation = curve
        .alpha
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        - curve.alpha.iter().copied().fold(f64::INFINITY, f64::min);
    if variation < DEGENERACY_TOL {
        return Err(Error::DegenerateSpectrum(variation));
    }

    let identity = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (p.s - (curve.t[i] + p.q * p.alpha)).abs())
        .fold(0.0f64, f64::max);

    let mut slope = 0.0f64;
    for i in 1..n - 1 {
        let ds = pts[i + 1].s - pts[i - 1].s;
        let da = pts[i + 1].alpha - pts[i - 1].alpha;
        slope = slope.max((ds / da - pts[i].q).abs());
    }

    let mut reconstruction = 0.0f64;
    for (i, &q) in curve.q_grid.iter().enumerate() {
        let sup = pts
            .iter()
            .map(|p| p.s - q * p.alpha)
            .fold(f64::NEG_INFINITY, f64::max);
        reconstruction = reconstruction.max((curve.t[i] - sup).abs());
    }

    let mut second = f64::NEG_INFINITY;
    for i in 1..n - 1 {
        let d1 = (pts[i].s - pts[i - 1].s) / (pts[i].alpha - pts[i - 1].alpha);
        let d2 = (pts[i + 1].s - pts[i].s) / (pts[i + 1].alpha - pts[i].alpha);
        second = second.max((d2 - d1) / (0.5 * (pts[i + 1].alpha - pts[i - 1].alpha)));
    }

    Ok(LegendreResiduals {
        identity,
        slope,
        reconstruction,
        max_second_divided_diff: second,
    })
}

/// Birkhoff ratio of a periodic orbit: `-sum g / sum log|Jac|` over one
/// period (exact; no limit involved).
pub fn orbit_ratio(family: &PotentialFamily, orbit: &PeriodicOrbit) -> Result<f64> {
    let cycle = orbit.word.symbols();
    let sg = family.g().cyclic_sum(cycle)?;
    let sj = family.jac().potential().cyclic_sum(cycle)?;
    Ok(-sg / sj)
}

/// Endpoint estimates: periodic-orbit extremization to `max_period`, and
/// the curve tails `alpha(±q_probe)`. Both methods are reported with
/// their spread; neither is presented as ground truth alone.
pub fn endpoints(family: &PotentialFamily, max_period: usize, q_probe: f64) -> Result<Endpoints> {
    let orbits = family.sft().periodic_orbits(max_period)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut arg_lo = String::new();
    let mut arg_hi = String::new();
    for o in &orbits {
        let r = orbit_ratio(family, o)?;
        if r < lo {
            lo = r;
            arg_lo = o.word.to_string();
        }
        if r > hi {
            hi = r;
            arg_hi = o.word.to_string();
        }
    }
    let a_pos = temperature::alpha(family, q_probe)?;
    let a_neg = temperature::alpha(family, -q_probe)?;
    Ok(Endpoints {
        alpha1_orbits: lo,
        alpha2_orbits: hi,
        arg_min_orbit: arg_lo,
        arg_max_orbit: arg_hi,
        max_period,
        alpha_at_pos_probe: a_pos,
        alpha_at_neg_probe: a_neg,
        q_probe,
        spread_alpha1: (lo - a_pos).abs(),
        spread_alpha2: (hi - a_neg).abs(),
    })
}

/// Check `-T(q) = inf over measures of (h + q∫g)/(-∫jac)`: periodic-orbit
/// measures (entropy 0) must sit above `-T(q)`, and `ν_q` must attain it.
pub fn variational_t_check(
    family: &PotentialFamily,
    q: f64,
    max_period: usize,
) -> Result<VariationalCheck> {
    let (t, nu) = temperature::equilibrium_at(family, q)?;
    let mut periodic_inf = f64::INFINITY;
    for o in family.sft().periodic_orbits(max_period)? {
        let sg = family.g().cyclic_sum(o.word.symbols())?;
        let sj = family.jac().potential().cyclic_sum(o.word.symbols())?;
        periodic_inf = periodic_inf.min(q * sg / (-sj));
    }
    let h = nu.entropy();
    let ig = nu.integrate(family.g())?;
    let ij = nu.integrate(family.jac().potential())?;
    let equality_defect = ((h + q * ig) / (-ij) + t).abs();
    Ok(VariationalCheck {
        q,
        t,
        periodic_gap: periodic_inf + t,
        equality_defect,
    })
}

/// Sample `count` Markov measures with `-∫g dρ = alpha ∫jac dρ` by tilting
/// a full-support base chain and re-projecting onto the constraint with a
/// one-dimensional root solve. Errors with [`Error::InfeasibleConstraint`]
/// when `alpha` lies outside the periodic-orbit ratio range.
pub fn constrained_measure_sampler(
    family: &PotentialFamily,
    alpha: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<MarkovMeasure>> {
    let ep = endpoints(family, DEFAULT_ENDPOINT_PERIOD, 40.0)?;
    if alpha < ep.alpha1_orbits - 1e-12 || alpha > ep.alpha2_orbits + 1e-12 {
        return Err(Error::InfeasibleConstraint {
            alpha,
            lo: ep.alpha1_orbits,
            hi: ep.alpha2_orbits,
        });
    }
    let psi = family.g().combine(1.0, family.jac().potential(), alpha)?;
    let (_, base) = temperature::equilibrium_at(family, 0.0)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 60 * count.max(1) {
            return Err(Error::InfeasibleConstraint {
                alpha,
                lo: ep.alpha1_orbits,
                hi: ep.alpha2_orbits,
            });
        }
        let strength = rng.gen_range(0.0..1.5);
        match tilted_constrained(&base, &psi, strength, &mut rng)? {
            Some(m) => out.push(m),
            None => continue,
        }
    }
    Ok(out)
}

/// One tilted sample re-projected onto `∫psi dρ = 0`; `None` when the
/// random tilt pushed the chain outside the feasible sign change.
fn tilted_constrained(
    base: &MarkovMeasure,
    psi: &Potential,
    strength: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Option<MarkovMeasure>> {
    let n = base.states().len();
    let p0 = base.stochastic();
    let mut noise = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if p0[[i, j]] > 0.0 {
                let g: f64 = StandardNormal.sample(rng);
                noise[[i, j]] = strength * g;
            }
        }
    }
    let build = |c: f64| -> Result<MarkovMeasure> {
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if p0[[i, j]] > 0.0 {
                    // tilt each allowed edge by the noise plus c times the
                    // constraint value at the destination window; a
                    // source-window tilt would cancel in the row
                    // normalization
                    let mut edge = base.states()[i].symbols().to_vec();
                    edge.push(*base.states()[j].symbols().last().unwrap());
                    let psi_edge = psi.evaluate(&edge[edge.len() - psi.depth()..])?;
                    w[[i, j]] = p0[[i, j]] * (noise[[i, j]] + c * psi_edge).exp();
                }
            }
        }
        for i in 0..n {
            let s: f64 = w.row(i).sum();
            for j in 0..n {
                w[[i, j]] /= s;
            }
        }
        MarkovMeasure::from_stochastic(base.sft().clone(), base.state_len(), w)
    };
    let f = |c: f64| -> Result<f64> { build(c)?.integrate(psi) };
    let (mut lo, mut hi) = (-40.0, 40.0);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo > 0.0 || fhi < 0.0 {
        return Ok(None);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let m = build(c)?;
    if m.integrate(psi)?.abs() > 1e-9 {
        return Ok(None);
    }
    Ok(Some(m))
}

/// The conditional variational principle at `alpha = alpha(q)`: every
/// sampled constrained measure satisfies `h/L <= S(alpha)`, with equality
/// at `ν_q`.
pub fn conditional_variational_check(
    family: &PotentialFamily,
    q: f64,
    count: usize,
    seed: u64,
) -> Result<ConditionalCheck> {
    let (t, nu) = temperature::equilibrium_at(family, q)?;
    let alpha = temperature::alpha_of(family, &nu)?;
    let s = t + q * alpha;
    let samples = constrained_measure_sampler(family, alpha, count, seed)?;
    let mut max_violation = f64::NEG_INFINITY;
    for m in &samples {
        let ratio = m.entropy() / m.integrate(family.jac().potential())?;
        max_violation = max_violation.max(ratio - s);
    }
    let nu_ratio = nu.entropy() / nu.integrate(family.jac().potential())?;
    Ok(ConditionalCheck {
        q,
        alpha,
        s,
        samples: samples.len(),
        max_violation,
        equality_defect: (nu_ratio - s).abs(),
        seed,
    })
}
