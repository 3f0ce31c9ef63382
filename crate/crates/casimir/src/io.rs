//! File formats: optical tables, height maps, calibration data and the
//! CSV outputs of each command.
//!
//! Numbers are written with Rust's shortest round-trip scientific notation,
//! so output files reproduce the computed `f64` values exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use casimir_core::electrostatics::CalibrationSample;
use casimir_core::materials::{OpticalRow, OpticalTable};
use casimir_core::roughness::HeightMap;

use crate::error::{CliError, Result};

pub const OPTICAL_HEADER: [&str; 2] = ["energy_ev", "eps2"];
pub const CALIBRATION_HEADER: [&str; 3] = ["z_metal_m", "v_applied_v", "delta_c_f"];
pub const SWEEP_HEADER: [&str; 3] = ["z_m", "f_hz", "sigma_hz"];
pub const BOUND_HEADER: [&str; 2] = ["z_m", "bound_n"];
pub const LIMITS_HEADER: [&str; 2] = ["lambda_m", "alpha_limit"];

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Parses a headed numeric CSV, returning each row with its line number.
pub fn parse_csv<const N: usize>(text: &str, path: &Path, header: [&str; N]) -> Result<Vec<(u64, [f64; N])>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = reader
        .headers()
        .map_err(|e| CliError::parse(path, csv_line(&e), e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::parse(
            path,
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(path, csv_line(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = [0.0; N];
        for (i, v) in values.iter_mut().enumerate() {
            let field = record.get(i).unwrap_or_default();
            *v = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::parse(path, line, format!("column `{}`: `{field}` is not a finite number", header[i])))?;
        }
        rows.push((line, values));
    }
    Ok(rows)
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

pub fn parse_optical_table(text: &str, path: &Path) -> Result<OpticalTable> {
    let rows = parse_csv(text, path, OPTICAL_HEADER)?;
    let rows = rows
        .into_iter()
        .map(|(_, [energy_ev, eps2])| OpticalRow { energy_ev, eps2 })
        .collect();
    Ok(OpticalTable::new(rows, path.display().to_string())?)
}

pub fn read_optical_table(path: &Path) -> Result<OpticalTable> {
    parse_optical_table(&read_to_string(path)?, path)
}

/// Whitespace-separated matrix of heights in meters. Comment lines start
/// with `#`; one of them must carry `pixel_pitch = <meters>`.
pub fn parse_heightmap(text: &str, path: &Path) -> Result<HeightMap> {
    let mut pitch = None;
    let mut cols = 0;
    let mut heights = Vec::new();
    let mut rows = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(['=', ':']) {
                if key.trim() == "pixel_pitch" {
                    let v = value.trim().parse::<f64>().map_err(|_| {
                        CliError::parse(path, line_no, format!("pixel_pitch `{}` is not a number", value.trim()))
                    })?;
                    pitch = Some(v);
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let before = heights.len();
        for field in line.split_whitespace() {
            let h = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::parse(path, line_no, format!("`{field}` is not a finite height")))?;
            heights.push(h);
        }
        let n = heights.len() - before;
        if rows == 0 {
            cols = n;
        } else if n != cols {
            return Err(CliError::parse(path, line_no, format!("row has {n} values, expected {cols}")));
        }
        rows += 1;
    }
    let pitch = pitch.ok_or_else(|| CliError::parse(path, 1, "missing `# pixel_pitch = <m>` header"))?;
    Ok(HeightMap::new(rows, cols, heights, pitch)?)
}

pub fn read_heightmap(path: &Path) -> Result<HeightMap> {
    parse_heightmap(&read_to_string(path)?, path)
}

pub fn parse_calibration(text: &str, path: &Path) -> Result<Vec<CalibrationSample>> {
    Ok(parse_csv(text, path, CALIBRATION_HEADER)?
        .into_iter()
        .map(|(_, [z_metal, v_applied, delta_c])| CalibrationSample { z_metal, v_applied, delta_c })
        .collect())
}

pub fn read_calibration(path: &Path) -> Result<Vec<CalibrationSample>> {
    parse_calibration(&read_to_string(path)?, path)
}

/// `z_m,bound_n` rows, sorted by separation.
pub fn read_bound(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rows: Vec<(f64, f64)> = parse_csv(&read_to_string(path)?, path, BOUND_HEADER)?
        .into_iter()
        .map(|(_, [z, b])| (z, b))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows)
}

/// Renders rows of numbers as CSV under `header`.
pub fn render_csv<'a, I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:e}");
        }
        out.push('\n');
    }
    out
}

pub fn calibration_csv(samples: &[CalibrationSample]) -> String {
    let rows: Vec<[f64; 3]> = samples.iter().map(|s| [s.z_metal, s.v_applied, s.delta_c]).collect();
    render_csv(&CALIBRATION_HEADER, rows.iter().map(|r| &r[..]))
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
