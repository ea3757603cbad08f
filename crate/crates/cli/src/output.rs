//! CSV emission: 9-significant-digit formatting and atomic
//! write-temp-rename file replacement.

use crate::errors::Result;
use std::io::Write;
use std::path::Path;

/// Format with 9 significant digits: plain decimal in a readable range,
/// scientific notation otherwise.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    if !x.is_finite() {
        return format!("{x:.8e}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-3..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

pub fn csv_line(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| fmt_sig9(v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Write the full contents to a temporary file in the target directory and
/// rename it into place, so re-runs overwrite atomically and failed runs
/// leave no partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(-15.0), "-15.0000000");
        assert_eq!(fmt_sig9(-1.883525167), "-1.88352517");
        assert_eq!(fmt_sig9(0.015625), "0.0156250000");
        assert_eq!(fmt_sig9(1.0e-7), "1.00000000e-7");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(0.0), "0.00000000");
        assert_eq!(fmt_sig9(-0.0), "0.00000000");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        write_atomic(&path, "a,b\n3,4\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n3,4\n");
    }
}
