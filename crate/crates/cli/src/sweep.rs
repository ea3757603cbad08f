//! Sweep definitions: a fixed theta_1, a theta_2 grid in dB, run sizes, and
//! the set of outputs to compute.

use crate::errors::{CliError, Result};
use onebit_spectral::Scenario;
use std::collections::BTreeSet;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Loss,
    Crb,
    McQuant,
    McIdeal,
}

impl Mode {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "loss" => Ok(Mode::Loss),
            "crb" => Ok(Mode::Crb),
            "mc-quant" => Ok(Mode::McQuant),
            "mc-ideal" => Ok(Mode::McIdeal),
            other => Err(CliError::Validation(format!(
                "unknown mode `{other}` (choose from loss, crb, mc-quant, mc-ideal)"
            ))),
        }
    }
}

pub fn parse_modes(list: &str) -> Result<BTreeSet<Mode>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Mode::parse)
        .collect()
}

/// Parse a `FROM:TO:STEP` dB grid. A degenerate grid (from = to) yields a
/// single point.
pub fn parse_grid(sweep: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = sweep.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Validation(format!(
            "sweep `{sweep}` must be FROM:TO:STEP in dB"
        )));
    }
    let nums: Result<Vec<f64>> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("cannot parse `{p}` in sweep `{sweep}`")))
        })
        .collect();
    let nums = nums?;
    let (from, to, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Validation(format!(
            "sweep `{sweep}`: need finite bounds and step > 0"
        )));
    }
    if from > to {
        return Err(CliError::Validation(format!(
            "sweep `{sweep}`: FROM must not exceed TO"
        )));
    }
    let count = (((to - from) / step) + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + step * i as f64).collect())
}

#[derive(Debug)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub theta1_db: f64,
    pub grid_db: Vec<f64>,
    pub n_windows: usize,
    pub k_trials: usize,
    pub iterations: usize,
    pub floor_db: f64,
    pub seed: u64,
    pub modes: BTreeSet<Mode>,
    pub out: PathBuf,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scenario.d() < 2 {
            return Err(CliError::Validation(
                "sweeps vary theta_2, so the scenario needs D >= 2 sources".into(),
            ));
        }
        if self.n_windows == 0 {
            return Err(CliError::Validation("need N >= 1 windows".into()));
        }
        if self.iterations == 0 {
            return Err(CliError::Validation(
                "need at least one scoring iteration".into(),
            ));
        }
        if !self.floor_db.is_finite() {
            return Err(CliError::Validation("floor must be finite dB".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parses_inclusive_endpoints() {
        let g = parse_grid("-15:20:2.5").unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0], -15.0);
        assert_eq!(g[14], 20.0);
    }

    #[test]
    fn grid_allows_degenerate_single_point() {
        assert_eq!(parse_grid("12.5:12.5:2.5").unwrap(), vec![12.5]);
    }

    #[test]
    fn grid_rejects_malformed_input() {
        assert!(parse_grid("0:10").is_err());
        assert!(parse_grid("0:10:0").is_err());
        assert!(parse_grid("10:0:1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn modes_parse_as_set() {
        let m = parse_modes("loss, crb,mc-quant").unwrap();
        assert!(m.contains(&Mode::Loss) && m.contains(&Mode::Crb) && m.contains(&Mode::McQuant));
        assert!(parse_modes("bogus").is_err());
    }
}
