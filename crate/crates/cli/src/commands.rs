//! The batch subcommands: each consumes a validated [`Run`] and writes
//! CSV + JSON artifacts into the output directory.

use std::path::Path;

use anyhow::{bail, Result};
use serde_json::json;

use thermofractal::orbit::{level_set_concentration, sample_orbit};
use thermofractal::spectrum::{
    conditional_variational_check, endpoints, legendre_check, spectrum_points, variational_t_check,
    SpectrumReport,
};
use thermofractal::temperature::{degeneracy_test, solve_t, temperature_curve, TemperatureCurve};
use thermofractal::transfer::pressure;
use thermofractal::Error;

use crate::config::Run;
use crate::output::{write_csv, write_json};

/// Columns are frozen: q, t, pressure.
pub fn cmd_pressure(run: &Run, out_dir: &Path, quiet: bool) -> Result<()> {
    let fam = &run.family;
    let qs = run.config.q_grid.points();
    // t sub-grid spanning the temperature range of the q grid, padded
    let t_hi = solve_t(fam, run.config.q_grid.min)? + 0.5;
    let t_lo = solve_t(fam, run.config.q_grid.max)? - 0.5;
    let t_steps = 20usize;
    let ts: Vec<f64> = (0..=t_steps)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / t_steps as f64)
        .collect();

    let mut rows = Vec::with_capacity(qs.len() * ts.len());
    let mut monotone = true;
    for &q in &qs {
        let mut prev = f64::INFINITY;
        for &t in &ts {
            let p = pressure(fam.sft(), &fam.phi(q, t))?;
            if p >= prev {
                monotone = false;
            }
            prev = p;
            rows.push(vec![q, t, p]);
        }
    }
    write_csv(
        run,
        &out_dir.join("pressure.csv"),
        &["q", "t", "pressure"],
        &rows,
    )?;
    write_json(
        run,
        &out_dir.join("pressure.json"),
        &json!({
            "rows": rows.len(),
            "t_grid": {"min": t_lo, "max": t_hi, "steps": t_steps + 1},
            "strictly_decreasing_in_t": monotone,
        }),
    )?;
    if !quiet {
        println!(
            "pressure: {} rows, strictly decreasing in t: {monotone}",
            rows.len()
        );
    }
    if !monotone {
        bail!("pressure failed the monotonicity audit in t");
    }
    Ok(())
}

/// Columns are frozen: q, T, alpha, T_prime_fd, T_second_fd, T_second_var,
/// vd_nu_q.
pub fn cmd_temperature(run: &Run, out_dir: &Path, quiet: bool) -> Result<TemperatureCurve> {
    let curve = temperature_curve(&run.family, &run.config.q_grid.points())?;
    let rows: Vec<Vec<f64>> = (0..curve.q_grid.len())
        .map(|i| {
            vec![
                curve.q_grid[i],
                curve.t[i],
                curve.alpha[i],
                curve.t_prime_fd[i],
                curve.t_second_fd[i],
                curve.t_second_var[i],
                curve.vd_of_nu_q[i],
            ]
        })
        .collect();
    write_csv(
        run,
        &out_dir.join("temperature.csv"),
        &[
            "q",
            "T",
            "alpha",
            "T_prime_fd",
            "T_second_fd",
            "T_second_var",
            "vd_nu_q",
        ],
        &rows,
    )?;
    write_json(run, &out_dir.join("temperature.json"), &curve)?;
    if !quiet {
        let d = degeneracy_test(&curve);
        println!(
            "temperature: {} points, convention {:?}, degenerate: {}",
            curve.q_grid.len(),
            curve.convention_used,
            d.is_nu0
        );
    }
    Ok(curve)
}

/// Spectrum plot data sorted by alpha; columns frozen: alpha, S.
pub fn cmd_spectrum(run: &Run, out_dir: &Path, quiet: bool) -> Result<()> {
    let curve = temperature_curve(&run.family, &run.config.q_grid.points())?;
    let points = spectrum_points(&curve);
    let degenerate;
    let legendre = match legendre_check(&curve) {
        Ok(res) => {
            degenerate = false;
            Some(res)
        }
        Err(Error::DegenerateSpectrum(_)) => {
            degenerate = true;
            None
        }
        Err(e) => return Err(e.into()),
    };
    let ep = endpoints(&run.family, run.config.depths.endpoint_period, 40.0)?;
    let seed = run.config.sampling.seed;
    let mut variational = Vec::new();
    let mut conditional = Vec::new();
    for q in [run.config.q_grid.min, 0.0, 1.0, run.config.q_grid.max] {
        variational.push(variational_t_check(
            &run.family,
            q,
            run.config.depths.endpoint_period,
        )?);
    }
    if !degenerate {
        conditional.push(conditional_variational_check(&run.family, 0.0, 50, seed)?);
    }
    let report = SpectrumReport {
        points: points.clone(),
        endpoints: ep,
        legendre,
        degenerate,
        variational,
        conditional,
    };

    let mut rows: Vec<Vec<f64>> = points.iter().map(|p| vec![p.alpha, p.s]).collect();
    rows.sort_by(|a, b| a[0].partial_cmp(&b[0]).expect("alpha is finite"));
    write_csv(run, &out_dir.join("spectrum.csv"), &["alpha", "S"], &rows)?;
    write_json(run, &out_dir.join("spectrum.json"), &report)?;
    if !quiet {
        println!(
            "spectrum: {} points, degenerate: {}, endpoints [{}, {}]",
            report.points.len(),
            report.degenerate,
            report.endpoints.alpha1_orbits,
            report.endpoints.alpha2_orbits
        );
    }
    Ok(())
}

/// Orbit dumps (one symbol string per line) plus the concentration report.
pub fn cmd_orbits(run: &Run, out_dir: &Path, quiet: bool) -> Result<()> {
    let s = run.config.sampling;
    let (_, nu) = thermofractal::temperature::equilibrium_at(&run.family, 0.0)?;
    let dump_count = s.samples.min(100);
    let mut dump = String::new();
    for i in 0..dump_count as u64 {
        let orbit = sample_orbit(&nu, s.n, s.seed.wrapping_add(i));
        let word = thermofractal::Word::from(orbit.symbols);
        dump.push_str(&word.to_symbol_string());
        dump.push('\n');
    }
    crate::output::write_atomic(&out_dir.join("orbits.txt"), dump.as_bytes())?;
    let rep = level_set_concentration(&run.family, 0.0, s.n, s.samples, s.epsilon, s.seed)?;
    write_json(run, &out_dir.join("concentration.json"), &rep)?;
    if !quiet {
        println!(
            "orbits: dumped {dump_count}, concentration fraction {:.4} (alpha = {:.6})",
            rep.fraction_within, rep.alpha
        );
    }
    Ok(())
}
