//! Plot-ready CSV panels cut out of trace and training logs.
//!
//! Values are copied as text, so every exported number is the exact token
//! written in the source file.

use std::path::{Path, PathBuf};

use super::io::write_file;
use crate::error::HarnessError;

/// Episode panels: control signals, speeds and accelerations, plus the
/// shield's switching signals.
pub const TRACE_PANELS: &[(&str, &[&str])] = &[
    ("controls.csv", &["t", "throttle", "brake"]),
    ("speeds.csv", &["t", "ego_v", "north_v"]),
    ("accelerations.csv", &["t", "ego_a_lon", "ego_a_lat"]),
    ("switching.csv", &["t", "adas_active", "ttr_ego", "ttr_north", "d_safe", "d_c"]),
];

/// Training panels, one per reward curve.
pub const TRAINING_PANELS: &[(&str, &[&str])] = &[
    ("reward_cumulative.csv", &["episode", "env_steps", "r_total"]),
    ("reward_adas.csv", &["episode", "env_steps", "r_adas"]),
    ("reward_lka.csv", &["episode", "env_steps", "r_lka"]),
    ("reward_velocity.csv", &["episode", "env_steps", "r_v"]),
    ("reward_a_lon.csv", &["episode", "env_steps", "r_a_lon"]),
    ("reward_a_lat.csv", &["episode", "env_steps", "r_a_lat"]),
];

/// Selects `columns` from CSV text, keeping each field verbatim.
pub fn select_columns(csv: &str, columns: &[&str]) -> Result<String, HarnessError> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| HarnessError::Input("empty CSV".into()))?
        .split(',')
        .collect();
    let idx = columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| HarnessError::Input(format!("CSV has no column {c}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = columns.join(",");
    out.push('\n');
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(HarnessError::Input(format!(
                "row {} has {} fields, header has {}",
                n + 1,
                fields.len(),
                header.len()
            )));
        }
        let picked: Vec<&str> = idx.iter().map(|&i| fields[i]).collect();
        out.push_str(&picked.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn export_panels(src: &Path, panels: &[(&str, &[&str])], out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let text = std::fs::read_to_string(src).map_err(|e| HarnessError::io(src, e))?;
    let mut written = Vec::new();
    for (name, cols) in panels {
        let p = out.join(name);
        write_file(&p, select_columns(&text, cols)?.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

/// Cuts a trace CSV into the episode panels.
pub fn export_trace(trace_csv: &Path, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    export_panels(trace_csv, TRACE_PANELS, out)
}

/// Cuts a training `episodes.csv` into the reward panels.
pub fn export_training(episodes_csv: &Path, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    export_panels(episodes_csv, TRAINING_PANELS, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selects_in_requested_order() {
        let csv = "a,b,c\n1,2.50,x\n4,5,y\n";
        assert_eq!(select_columns(csv, &["c", "a"]).unwrap(), "c,a\nx,1\ny,4\n");
        assert_eq!(select_columns(csv, &["b"]).unwrap(), "b\n2.50\n5\n");
    }

    #[test]
    fn missing_column_and_ragged_rows_are_errors() {
        assert!(select_columns("a,b\n1,2\n", &["z"]).is_err());
        assert!(select_columns("a,b\n1\n", &["a"]).is_err());
        assert!(select_columns("", &["a"]).is_err());
    }
}
