//! Scenario file parser: flat key-value text, one key per line, `#` starts a
//! comment. Keys: D, M, sampler_ratio, omega_bar, bandwidth_bar.

use crate::errors::{CliError, Result};
use onebit_spectral::Scenario;
use std::collections::HashMap;
use std::path::Path;

const KEYS: [&str; 5] = ["D", "M", "sampler_ratio", "omega_bar", "bandwidth_bar"];

fn fail(path: &Path, line: usize, msg: &str) -> CliError {
    CliError::Validation(format!("{}:{}: {}", path.display(), line, msg))
}

pub fn parse_scenario_file(path: &Path) -> Result<Scenario> {
    let body = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read scenario file {}: {e}", path.display()))
    })?;

    let mut fields: HashMap<&str, (usize, String)> = HashMap::new();
    for (idx, raw) in body.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| fail(path, line_no, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let canonical = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| fail(path, line_no, &format!("unknown key `{key}`")))?;
        if fields
            .insert(canonical, (line_no, value.to_string()))
            .is_some()
        {
            return Err(fail(path, line_no, &format!("duplicate key `{key}`")));
        }
    }

    for key in KEYS {
        if !fields.contains_key(key) {
            return Err(CliError::Validation(format!(
                "{}: missing key `{key}`",
                path.display()
            )));
        }
    }

    let scalar = |key: &str| -> Result<(usize, f64)> {
        let (line, v) = &fields[key];
        v.parse::<f64>().map(|x| (*line, x)).map_err(|_| {
            fail(
                path,
                *line,
                &format!("cannot parse `{v}` as a number for {key}"),
            )
        })
    };
    let list = |key: &str| -> Result<(usize, Vec<f64>)> {
        let (line, v) = &fields[key];
        let vals: std::result::Result<Vec<f64>, _> =
            v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        vals.map(|x| (*line, x)).map_err(|_| {
            fail(
                path,
                *line,
                &format!("cannot parse `{v}` as a number list for {key}"),
            )
        })
    };

    let (d_line, d) = scalar("D")?;
    if d.fract() != 0.0 || d < 1.0 {
        return Err(fail(path, d_line, "D must be a positive integer"));
    }
    let d = d as usize;
    let (m_line, m) = scalar("M")?;
    if m.fract() != 0.0 || m < 1.0 {
        return Err(fail(path, m_line, "M must be a positive integer"));
    }
    let (_, ratio) = scalar("sampler_ratio")?;
    let (ob_line, omega_bar) = list("omega_bar")?;
    let (bb_line, bandwidth_bar) = list("bandwidth_bar")?;
    if omega_bar.len() != d {
        return Err(fail(
            path,
            ob_line,
            &format!("omega_bar has {} entries, D = {d}", omega_bar.len()),
        ));
    }
    if bandwidth_bar.len() != d {
        return Err(fail(
            path,
            bb_line,
            &format!("bandwidth_bar has {} entries, D = {d}", bandwidth_bar.len()),
        ));
    }

    Scenario::new(omega_bar, bandwidth_bar, ratio, m as usize)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
