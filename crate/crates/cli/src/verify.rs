//! The `verify` subcommand: every named check recomputes its identity
//! from scratch at pinned tolerances and reports a machine-readable
//! verdict. The process exit status is 0 iff every requested check passes.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use thermofractal::orbit::{
    empirical_gibbs_check, irregular_point, level_set_concentration, BlockSchedule,
};
use thermofractal::spectrum::{
    conditional_variational_check, endpoints, legendre_check, orbit_ratio, variational_t_check,
};
use thermofractal::temperature::{
    degeneracy_test, equilibrium_at, pressure_partials_defect, solve_t, temperature_curve,
};
use thermofractal::transfer::{
    conformality_check, gibbs_certificate, pressure, random_markov_measure,
};
use thermofractal::Error;

use crate::config::Run;
use crate::output::write_json;

/// Tolerances pinned by the verification contract.
mod tol {
    pub const T1_ZERO: f64 = 1e-10;
    pub const CONFORMALITY: f64 = 1e-12;
    pub const LEGENDRE_SLOPE: f64 = 5e-3;
    pub const LEGENDRE_RECONSTRUCTION: f64 = 1e-4;
    pub const CONCAVITY: f64 = 1e-9;
    pub const ENDPOINT_SPREAD: f64 = 2e-3;
    pub const FREE_ENERGY: f64 = 1e-10;
    pub const VARIATIONAL: f64 = 1e-9;
    pub const CONDITIONAL: f64 = 1e-8;
    pub const CONCENTRATION_FRACTION: f64 = 0.95;
    pub const DERIVATIVE_TPRIME: f64 = 1e-6;
    pub const DERIVATIVE_PARTIALS: f64 = 1e-8;
    pub const VD_IDENTITY: f64 = 1e-8;
}

#[derive(Debug, Serialize)]
pub struct CheckVerdict {
    pub name: String,
    pub pass: bool,
    pub measured: serde_json::Value,
    pub tolerances: serde_json::Value,
    pub note: String,
}

pub fn cmd_verify(run: &Run, out_dir: &Path, quiet: bool) -> Result<bool> {
    let mut verdicts = Vec::new();
    for name in &run.config.checks {
        let verdict = match name.as_str() {
            "gibbs" => check_gibbs(run)?,
            "conformality" => check_conformality(run)?,
            "legendre" => check_legendre(run)?,
            "completeness" => check_completeness(run)?,
            "variational" => check_variational(run)?,
            "concentration" => check_concentration(run)?,
            "irregular" => check_irregular(run)?,
            "degeneracy" => check_degeneracy(run)?,
            "fixtures" => check_fixtures(run)?,
            other => CheckVerdict {
                name: other.into(),
                pass: false,
                measured: json!(null),
                tolerances: json!(null),
                note: "unknown check".into(),
            },
        };
        if !quiet {
            println!(
                "CHECK {:<14} {} {}",
                verdict.name,
                if verdict.pass { "PASS" } else { "FAIL" },
                verdict.note
            );
        }
        verdicts.push(verdict);
    }
    let all_pass = verdicts.iter().all(|v| v.pass);
    write_json(
        run,
        &out_dir.join("verify.json"),
        &json!({"all_pass": all_pass, "checks": verdicts}),
    )?;
    if !quiet {
        println!("VERDICT {}", if all_pass { "PASS" } else { "FAIL" });
    }
    Ok(all_pass)
}

fn check_gibbs(run: &Run) -> Result<CheckVerdict> {
    let fam = &run.family;
    let depth = run.config.depths.gibbs_depth;
    let mut measured = Vec::new();
    let mut pass = true;
    for q in [0.0, 2.0] {
        let t = solve_t(fam, q)?;
        let cert = gibbs_certificate(fam.sft(), &fam.phi(q, t), depth)?;
        pass &= cert.holds();
        measured.push(json!({
            "q": q,
            "c1": cert.c1,
            "c2": cert.c2,
            "worst_low": cert.worst_ratio_low,
            "worst_high": cert.worst_ratio_high,
        }));
    }
    // sampled deep check at q = 0
    let (t0, nu0) = equilibrium_at(fam, 0.0)?;
    let range = empirical_gibbs_check(&nu0, &fam.phi(0.0, t0), 500, 30, run.config.sampling.seed)?;
    pass &= range.inside;
    Ok(CheckVerdict {
        name: "gibbs".into(),
        pass,
        measured: json!({"exhaustive": measured, "sampled_depth_30": range}),
        tolerances: json!({"depth": depth}),
        note: format!("cylinders to depth {depth} inside eigen bounds"),
    })
}

fn check_conformality(run: &Run) -> Result<CheckVerdict> {
    let fam = &run.family;
    let depth = run.config.depths.conformality_depth;
    let mut worst = 0.0f64;
    let mut per_q = Vec::new();
    for q in [-2.0, 0.0, 1.0, 2.0] {
        let t = solve_t(fam, q)?;
        let defect = conformality_check(fam.sft(), &fam.phi(q, t), depth)?;
        worst = worst.max(defect);
        per_q.push(json!({"q": q, "max_defect": defect}));
    }
    Ok(CheckVerdict {
        name: "conformality".into(),
        pass: worst <= tol::CONFORMALITY,
        measured: json!({"per_q": per_q, "worst": worst}),
        tolerances: json!({"max_defect": tol::CONFORMALITY, "depth": depth}),
        note: format!("worst eigenmeasure defect {worst:.3e}"),
    })
}

fn check_legendre(run: &Run) -> Result<CheckVerdict> {
    let curve = temperature_curve(&run.family, &run.config.q_grid.points())?;
    match legendre_check(&curve) {
        Ok(res) => {
            let pass = res.slope <= tol::LEGENDRE_SLOPE
                && res.reconstruction <= tol::LEGENDRE_RECONSTRUCTION
                && res.max_second_divided_diff <= tol::CONCAVITY;
            Ok(CheckVerdict {
                name: "legendre".into(),
                pass,
                measured: json!(res),
                tolerances: json!({
                    "slope": tol::LEGENDRE_SLOPE,
                    "reconstruction": tol::LEGENDRE_RECONSTRUCTION,
                    "concavity": tol::CONCAVITY,
                }),
                note: format!("slope residual {:.3e}", res.slope),
            })
        }
        Err(Error::DegenerateSpectrum(v)) => {
            // single-point spectrum: duality residuals are undefined; the
            // check passes iff the degeneracy test concurs
            let consistent = degeneracy_test(&curve).is_nu0;
            Ok(CheckVerdict {
                name: "legendre".into(),
                pass: consistent,
                measured: json!({"alpha_variation": v}),
                tolerances: json!({"degeneracy": thermofractal::temperature::DEGENERACY_TOL}),
                note: "degenerate single-point spectrum".into(),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn check_completeness(run: &Run) -> Result<CheckVerdict> {
    let ep = endpoints(&run.family, run.config.depths.endpoint_period, 40.0)?;
    let pass = ep.spread_alpha1 <= tol::ENDPOINT_SPREAD && ep.spread_alpha2 <= tol::ENDPOINT_SPREAD;
    Ok(CheckVerdict {
        name: "completeness".into(),
        pass,
        measured: json!(ep),
        tolerances: json!({"method_spread": tol::ENDPOINT_SPREAD}),
        note: format!(
            "alpha range [{:.6}, {:.6}]",
            ep.alpha1_orbits, ep.alpha2_orbits
        ),
    })
}

fn check_variational(run: &Run) -> Result<CheckVerdict> {
    let fam = &run.family;
    let seed = run.config.sampling.seed;
    let mut pass = true;
    let mut per_q = Vec::new();
    let state_len = thermofractal::transfer::state_len_for_depth(fam.depth());
    let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(seed);
    for q in [-2.0, 0.0, 0.5, 1.0, 2.0] {
        let (t, nu) = equilibrium_at(fam, q)?;
        let phi = fam.phi(q, t);
        let p = pressure(fam.sft(), &phi)?;
        let fe_defect = (nu.free_energy(&phi)? - p).abs();
        pass &= fe_defect <= tol::FREE_ENERGY;

        let mut worst_random = f64::NEG_INFINITY;
        for _ in 0..200 {
            let m = random_markov_measure(fam.sft(), state_len, &mut rng)?;
            worst_random = worst_random.max(m.free_energy(&phi)? - p);
        }
        pass &= worst_random <= tol::FREE_ENERGY;

        let vc = variational_t_check(fam, q, run.config.depths.endpoint_period)?;
        pass &= vc.periodic_gap >= -tol::VARIATIONAL && vc.equality_defect <= tol::VARIATIONAL;

        // derivative identities along the way
        let (dt, dq) = pressure_partials_defect(fam, q, t)?;
        pass &= dt <= tol::DERIVATIVE_PARTIALS && dq <= tol::DERIVATIVE_PARTIALS;

        per_q.push(json!({
            "q": q,
            "free_energy_defect": fe_defect,
            "worst_random_excess": worst_random,
            "periodic_gap": vc.periodic_gap,
            "equality_defect": vc.equality_defect,
            "partial_t_defect": dt,
            "partial_q_defect": dq,
        }));
    }
    // conditional variational principle at q = 0 (skipped when degenerate:
    // the constraint set is a single measure)
    let curve = temperature_curve(fam, &run.config.q_grid.points())?;
    let conditional = if degeneracy_test(&curve).is_nu0 {
        json!("skipped: degenerate")
    } else {
        let c = conditional_variational_check(fam, 0.0, 100, seed)?;
        pass &= c.max_violation <= tol::CONDITIONAL && c.equality_defect <= tol::CONDITIONAL;
        json!(c)
    };
    // T'(q) = -alpha(q) and the VD identity across the grid
    let mut worst_tprime = 0.0f64;
    let mut worst_vd = 0.0f64;
    for i in 0..curve.q_grid.len() {
        worst_tprime = worst_tprime.max((curve.t_prime_fd[i] + curve.alpha[i]).abs());
        let s = curve.t[i] + curve.q_grid[i] * curve.alpha[i];
        worst_vd = worst_vd.max((curve.vd_of_nu_q[i] - s).abs());
    }
    pass &= worst_tprime <= tol::DERIVATIVE_TPRIME && worst_vd <= tol::VD_IDENTITY;

    // normalization certificate: T(1) = 0 for any zero-pressure g
    let t1 = solve_t(fam, 1.0)?;
    pass &= t1.abs() <= tol::T1_ZERO;

    Ok(CheckVerdict {
        name: "variational".into(),
        pass,
        measured: json!({
            "per_q": per_q,
            "conditional": conditional,
            "worst_tprime_defect": worst_tprime,
            "worst_vd_identity_defect": worst_vd,
            "t_at_1": t1,
        }),
        tolerances: json!({
            "free_energy": tol::FREE_ENERGY,
            "variational": tol::VARIATIONAL,
            "conditional": tol::CONDITIONAL,
            "t_prime": tol::DERIVATIVE_TPRIME,
            "partials": tol::DERIVATIVE_PARTIALS,
            "vd_identity": tol::VD_IDENTITY,
            "t1_zero": tol::T1_ZERO,
        }),
        note: format!("worst T' defect {worst_tprime:.3e}, worst VD defect {worst_vd:.3e}"),
    })
}

fn check_concentration(run: &Run) -> Result<CheckVerdict> {
    let s = run.config.sampling;
    let rep = level_set_concentration(&run.family, 0.0, s.n, s.samples, s.epsilon, s.seed)?;
    Ok(CheckVerdict {
        name: "concentration".into(),
        pass: rep.fraction_within >= tol::CONCENTRATION_FRACTION,
        measured: json!(rep),
        tolerances: json!({"min_fraction": tol::CONCENTRATION_FRACTION}),
        note: format!("fraction {:.4}", rep.fraction_within),
    })
}

fn check_irregular(run: &Run) -> Result<CheckVerdict> {
    let fam = &run.family;
    // extreme-ratio orbits among short periods
    let orbits = fam.sft().periodic_orbits(2)?;
    let mut lo = (f64::INFINITY, 0usize);
    let mut hi = (f64::NEG_INFINITY, 0usize);
    for (i, o) in orbits.iter().enumerate() {
        let r = orbit_ratio(fam, o)?;
        if r < lo.0 {
            lo = (r, i);
        }
        if r > hi.0 {
            hi = (r, i);
        }
    }
    let schedule = BlockSchedule::geometric(4.0, 1_000_000)?;
    match irregular_point(fam, &orbits[hi.1], &orbits[lo.1], &schedule, 1_000_000) {
        Ok(rec) => Ok(CheckVerdict {
            name: "irregular".into(),
            pass: rec.certified,
            measured: json!(rec),
            tolerances: json!({"min_spread": rec.threshold}),
            note: format!("tail spread {:.4} >= {:.4}", rec.tail_spread, rec.threshold),
        }),
        Err(Error::EqualRatios(r)) => Ok(CheckVerdict {
            name: "irregular".into(),
            pass: false,
            measured: json!({"ratio": r}),
            tolerances: json!(null),
            note: "all short orbits share one ratio; no irregular point constructible".into(),
        }),
        Err(e) => Err(e.into()),
    }
}

fn check_degeneracy(run: &Run) -> Result<CheckVerdict> {
    let curve = temperature_curve(&run.family, &run.config.q_grid.points())?;
    let rep = degeneracy_test(&curve);
    // informational unless the config pins an expectation
    let pass = match run.config.expected.as_ref().and_then(|e| e.degenerate) {
        Some(want) => rep.is_nu0 == want,
        None => true,
    };
    Ok(CheckVerdict {
        name: "degeneracy".into(),
        pass,
        measured: json!(rep),
        tolerances: json!({"threshold": rep.threshold}),
        note: format!("nu = nu_0: {}", rep.is_nu0),
    })
}

fn check_fixtures(run: &Run) -> Result<CheckVerdict> {
    let expected = match &run.config.expected {
        Some(e) => e.clone(),
        None => {
            return Ok(CheckVerdict {
                name: "fixtures".into(),
                pass: true,
                measured: json!(null),
                tolerances: json!(null),
                note: "no expected block in config".into(),
            })
        }
    };
    let fam = &run.family;
    let mut failures = Vec::new();
    let mut measured = serde_json::Map::new();
    let mut compare = |name: &str, want: Option<f64>, got: f64| {
        measured.insert(name.into(), json!(got));
        if let Some(w) = want {
            if (got - w).abs() > expected.tolerance {
                failures.push(format!(
                    "{name}: got {got}, expected {w} (delta {:.3e})",
                    got - w
                ));
            }
        }
    };
    compare("t0", expected.t0, solve_t(fam, 0.0)?);
    compare(
        "alpha0",
        expected.alpha0,
        thermofractal::temperature::alpha(fam, 0.0)?,
    );
    let ep = endpoints(fam, run.config.depths.endpoint_period, 40.0)?;
    compare("alpha1", expected.alpha1, ep.alpha1_orbits);
    compare("alpha2", expected.alpha2, ep.alpha2_orbits);
    if expected.t_second_0.is_some() {
        let grid = [-0.2, -0.1, 0.0, 0.1, 0.2];
        let curve = temperature_curve(fam, &grid)?;
        compare("t_second_0", expected.t_second_0, curve.t_second_var[2]);
    }
    Ok(CheckVerdict {
        name: "fixtures".into(),
        pass: failures.is_empty(),
        measured: json!(measured),
        tolerances: json!({"tolerance": expected.tolerance}),
        note: if failures.is_empty() {
            "all fixtures match".into()
        } else {
            failures.join("; ")
        },
    })
}
