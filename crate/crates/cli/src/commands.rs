//! Subcommand implementations. Sweep commands evaluate grid points
//! concurrently and emit rows in grid order.

use crate::errors::{CliError, Result};
use crate::output::{csv_line, write_atomic};
use crate::scenario::parse_scenario_file;
use crate::sweep::{Mode, SweepSpec};
use onebit_spectral::{
    build_sigma_y, db_to_linear, info_loss, loss_db, run_mc, scenario_fingerprint,
    theta_fingerprint, FisherReport, FourthMomentTable, McMode, ParamVector, ScoringConfig,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

fn theta_at(spec: &SweepSpec, theta2_db: f64) -> Result<ParamVector> {
    ParamVector::from_src_db(&[spec.theta1_db, theta2_db]).map_err(CliError::from)
}

/// Per-grid-point master seed, decorrelating trials across grid points.
fn point_seed(seed: u64, idx: usize) -> u64 {
    seed.wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn cmd_loss(spec: &SweepSpec) -> Result<()> {
    spec.validate()?;
    let d = spec.scenario.d();
    let rows = spec
        .grid_db
        .par_iter()
        .map(|&t2| -> Result<Vec<f64>> {
            let theta = theta_at(spec, t2)?;
            let loss = info_loss(&spec.scenario, &theta)?;
            let mut row = vec![t2];
            row.extend(loss_db(&loss));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = String::from("theta2_db");
    for a in 1..=d {
        let _ = write!(out, ",chi_{a}_db");
    }
    out.push('\n');
    for row in &rows {
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    write_atomic(&spec.out, &out)?;
    log::info!("wrote {} loss rows to {}", rows.len(), spec.out.display());
    Ok(())
}

pub fn cmd_uncertainty(spec: &SweepSpec) -> Result<()> {
    spec.validate()?;
    let d = spec.scenario.d();
    // K = 0 downgrades to an analytic-only file
    let mc_quant = spec.modes.contains(&Mode::McQuant) && spec.k_trials > 0;
    let mc_ideal = spec.modes.contains(&Mode::McIdeal) && spec.k_trials > 0;
    let cfg = ScoringConfig {
        iterations: spec.iterations,
        theta_floor: db_to_linear(spec.floor_db),
        ..Default::default()
    };

    let rows = spec
        .grid_db
        .par_iter()
        .enumerate()
        .map(|(idx, &t2)| -> Result<Vec<f64>> {
            let theta = theta_at(spec, t2)?;
            let rep = FisherReport::build(&spec.scenario, &theta, spec.n_windows)?;
            let mut row = vec![t2];
            row.extend(&rep.crb_sigma_ideal);
            row.extend(&rep.crb_sigma_quant);
            if mc_quant {
                let r = run_mc(
                    &spec.scenario,
                    &theta,
                    spec.n_windows,
                    spec.k_trials,
                    &cfg,
                    point_seed(spec.seed, idx),
                    McMode::Quantized,
                )?;
                row.extend(&r.sigma_hat);
            }
            if mc_ideal {
                let r = run_mc(
                    &spec.scenario,
                    &theta,
                    spec.n_windows,
                    spec.k_trials,
                    &cfg,
                    point_seed(spec.seed, idx),
                    McMode::Ideal,
                )?;
                row.extend(&r.sigma_hat);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = String::from("theta2_db");
    for a in 1..=d {
        let _ = write!(out, ",sigma_crb_ideal_{a}");
    }
    for a in 1..=d {
        let _ = write!(out, ",sigma_crb_quant_{a}");
    }
    if mc_quant {
        for a in 1..=d {
            let _ = write!(out, ",sigma_mc_quant_{a}");
        }
    }
    if mc_ideal {
        for a in 1..=d {
            let _ = write!(out, ",sigma_mc_ideal_{a}");
        }
    }
    out.push('\n');
    for row in &rows {
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    write_atomic(&spec.out, &out)?;
    log::info!(
        "wrote {} uncertainty rows to {}",
        rows.len(),
        spec.out.display()
    );
    Ok(())
}

fn binomial4(m: u64) -> u64 {
    if m < 4 {
        0
    } else {
        m * (m - 1) * (m - 2) * (m - 3) / 24
    }
}

pub fn cmd_check(path: &Path) -> Result<()> {
    let scn = parse_scenario_file(path)?;
    let m = scn.m() as u64;
    let pairs = m * (m - 1) / 2;
    let quads = binomial4(m);
    println!("scenario {}: OK", path.display());
    println!("D = {}", scn.d());
    println!("M = {m}");
    println!("pair statistics C = {pairs}");
    println!("quadrivariate moments = {quads}");
    println!(
        "estimated assembly cost = {} adaptive orthant quadratures per covariance build",
        8 * quads
    );
    Ok(())
}

fn parse_theta_db(list: &str, d: usize) -> Result<ParamVector> {
    let vals: std::result::Result<Vec<f64>, _> =
        list.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals =
        vals.map_err(|_| CliError::Validation(format!("cannot parse `{list}` as dB list")))?;
    if vals.len() != d {
        return Err(CliError::Validation(format!(
            "{} theta entries for D = {d}",
            vals.len()
        )));
    }
    ParamVector::from_src_db(&vals).map_err(CliError::from)
}

pub fn cmd_moment_dump(scenario: &Path, theta_db: &str, out: &Path) -> Result<()> {
    let scn = parse_scenario_file(scenario)?;
    let theta = parse_theta_db(theta_db, scn.d())?;
    let sigma_y = build_sigma_y(&scn, &theta)?;
    let table = FourthMomentTable::compute(&sigma_y)?;
    table.write_binary(out, scenario_fingerprint(&scn), theta_fingerprint(&theta))?;
    println!(
        "wrote {} quadrivariate moments to {} (checksum {:#018x})",
        table.len(),
        out.display(),
        table.checksum()
    );
    Ok(())
}

pub fn cmd_moment_load(scenario: &Path, theta_db: &str, table_path: &Path) -> Result<()> {
    let scn = parse_scenario_file(scenario)?;
    let theta = parse_theta_db(theta_db, scn.d())?;
    let table = FourthMomentTable::load_for(table_path, &scn, &theta)?;
    println!(
        "{}: {} quadrivariate moments, checksum {:#018x}, fingerprints match",
        table_path.display(),
        table.len(),
        table.checksum()
    );
    Ok(())
}
