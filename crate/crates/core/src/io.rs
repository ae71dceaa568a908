//! Plain-text artifacts: CSV tables for profiles, state pairs, time series,
//! traced curves and rate studies, plus JSON for anything serializable.
//!
//! Floats are written in Rust's shortest round-trip form, so files are
//! byte-stable across runs and parse back to the exact same values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::characteristics::CharacteristicPath;
use crate::diagnostics::RatePoint;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, Profile};
use crate::nonlocal::StepRecord;

/// Writes `x_center,value` rows.
pub fn write_profile_csv(path: &Path, p: &Profile) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "x_center,value")?;
    for (j, v) in p.values.iter().enumerate() {
        writeln!(out, "{},{}", p.grid.x_center(j), v)?;
    }
    Ok(())
}

/// Writes `x_center,u,w` rows for a state pair on a shared grid.
pub fn write_state_csv(path: &Path, u: &Profile, w: &Profile) -> Result<()> {
    if u.len() != w.len() {
        return Err(Error::Grid("state pair lives on different grids".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "x_center,u,w")?;
    for j in 0..u.len() {
        writeln!(out, "{},{},{}", u.grid.x_center(j), u.values[j], w.values[j])?;
    }
    Ok(())
}

/// Writes the per-step series with the fixed column contract
/// `t,tv_w,tv_u,neg_part`.
pub fn write_series_csv(path: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,tv_w,tv_u,neg_part")?;
    for r in steps {
        writeln!(out, "{},{},{},{}", r.t, r.tv_w, r.tv_u, r.neg_part_w)?;
    }
    Ok(())
}

/// Writes a traced curve as `t,x` rows.
pub fn write_path_csv(path: &Path, curve: &CharacteristicPath) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,x")?;
    for (t, x) in curve.times.iter().zip(&curve.positions) {
        writeln!(out, "{},{}", t, x)?;
    }
    Ok(())
}

/// Writes `epsilon,l1_error` rows of a rate study.
pub fn write_rate_csv(path: &Path, points: &[RatePoint]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "epsilon,l1_error")?;
    for p in points {
        writeln!(out, "{},{}", p.epsilon, p.error)?;
    }
    Ok(())
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::Csv(format!("{}:{line}: cannot parse '{field}' as a number", path.display()))
    })
}

/// Reads a `x_center,value` table back into a profile. Boundary states are
/// not part of the table and must be supplied (they live in the manifest).
pub fn read_profile_csv(path: &Path, boundary_left: f64, boundary_right: f64) -> Result<Profile> {
    let reader = BufReader::new(File::open(path)?);
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "x_center,value" {
                return Err(Error::Csv(format!(
                    "{}: expected header 'x_center,value', got '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Csv(format!("{}:{}: expected two fields", path.display(), i + 1)));
        };
        xs.push(parse_f64(a, path, i + 1)?);
        vs.push(parse_f64(b, path, i + 1)?);
    }
    if xs.len() < 2 {
        return Err(Error::Csv(format!("{}: need at least two rows", path.display())));
    }
    let dx = xs[1] - xs[0];
    if !(dx > 0.0) {
        return Err(Error::Csv(format!("{}: centers must increase", path.display())));
    }
    for (k, pair) in xs.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - dx).abs() > 1e-9 * dx.max(1.0) {
            return Err(Error::Csv(format!(
                "{}: uneven spacing between rows {} and {}",
                path.display(),
                k + 2,
                k + 3
            )));
        }
    }
    let grid = Grid1D::new(xs[0] - dx / 2.0, dx, xs.len(), boundary_left, boundary_right)?;
    Profile::new(grid, vs)
}

/// Reads an `epsilon,l1_error` table back.
pub fn read_rate_csv(path: &Path) -> Result<Vec<RatePoint>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "epsilon,l1_error" {
                return Err(Error::Csv(format!(
                    "{}: expected header 'epsilon,l1_error', got '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Csv(format!("{}:{}: expected two fields", path.display(), i + 1)));
        };
        out.push(RatePoint {
            epsilon: parse_f64(a, path, i + 1)?,
            error: parse_f64(b, path, i + 1)?,
        });
    }
    Ok(out)
}

/// Pretty-printed JSON with a trailing newline; field order follows the
/// type definition, so output is deterministic.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
