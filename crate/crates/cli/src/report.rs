//! Run-directory artifacts: manifests, result tables (CSV/JSON), and
//! re-rendering of stored results.
//!
//! Everything written here is reproducible byte-for-byte from the config
//! and seed: numbers are printed in shortest round-trip form, maps keep
//! sorted key order, and manifests carry a config hash instead of wall
//! time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fairsel_core::metrics::GainReport;
use fairsel_core::{Error, Result};

use crate::experiment::{AblateRow, SweepRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// FNV-1a over the canonical config text.
pub fn config_hash(canonical: &str) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("fnv1a64:{hash:016x}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub run_seeds: Vec<u64>,
    pub baseline: String,
    pub errors: Vec<String>,
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invalid(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Shortest round-trip decimal form; `NA` for absent values.
fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "NA".to_string(),
    }
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "lambda",
    "attr",
    "macro_gain",
    "macro_std",
    "micro_gain",
    "micro_std",
    "utility_gain",
    "utility_std",
];

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.lambda,
            row.attr,
            cell(row.macro_gain),
            cell(row.macro_std),
            cell(row.micro_gain),
            cell(row.micro_std),
            cell(row.utility_gain),
            cell(row.utility_std),
        ));
    }
    out
}

pub const ABLATE_COLUMNS: [&str; 17] = [
    "lambda",
    "w_race",
    "w_country",
    "country_macro_gain",
    "country_macro_std",
    "country_micro_gain",
    "country_micro_std",
    "race_macro_gain",
    "race_macro_std",
    "race_micro_gain",
    "race_micro_std",
    "utility_gain",
    "utility_std",
    "diversity_gain",
    "diversity_std",
    "f_measure",
    "f_std",
];

pub fn ablate_csv(rows: &[AblateRow]) -> String {
    let mut out = ABLATE_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.lambda,
            row.w_race,
            row.w_country,
            cell(row.country_macro_gain),
            cell(row.country_macro_std),
            cell(row.country_micro_gain),
            cell(row.country_micro_std),
            cell(row.race_macro_gain),
            cell(row.race_macro_std),
            cell(row.race_micro_gain),
            cell(row.race_micro_std),
            cell(row.utility_gain),
            cell(row.utility_std),
            cell(row.diversity_gain),
            cell(row.diversity_std),
            cell(row.f_measure),
            cell(row.f_std),
        ));
    }
    out
}

/// Flat CSV view of a gain report: one metric per line with mean and std.
pub fn gain_report_csv(report: &GainReport) -> String {
    let mut out = String::from("metric,mean,std\n");
    let mut push = |name: &str, mean: Option<f64>, std: Option<f64>| {
        out.push_str(&format!("{name},{},{}\n", cell(mean), cell(std)));
    };
    for attr in &report.attributes {
        let m = &report.macro_gain[attr];
        push(
            &format!("macro_gain_{attr}"),
            m.as_ref().map(|s| s.mean),
            m.as_ref().map(|s| s.std),
        );
        let m = &report.micro_gain[attr];
        push(
            &format!("micro_gain_{attr}"),
            m.as_ref().map(|s| s.mean),
            m.as_ref().map(|s| s.std),
        );
        let p = &report.parity_difference[attr];
        push(
            &format!("parity_difference_{attr}"),
            Some(p.mean),
            Some(p.std),
        );
    }
    push(
        "diversity_gain",
        report.diversity_gain.as_ref().map(|s| s.mean),
        report.diversity_gain.as_ref().map(|s| s.std),
    );
    push(
        "utility_gain",
        Some(report.utility_gain.mean),
        Some(report.utility_gain.std),
    );
    push(
        "f_measure",
        report.f_measure.as_ref().map(|s| s.mean),
        report.f_measure.as_ref().map(|s| s.std),
    );
    for (conference, summary) in &report.conference_distribution {
        push(
            &format!("conference_share_{conference}"),
            Some(summary.mean),
            Some(summary.std),
        );
    }
    out
}

/// Series extracted from sweep rows for plotting: attr -> [(lambda, value)].
pub fn sweep_series(
    rows: &[SweepRow],
    value: impl Fn(&SweepRow) -> Option<f64>,
) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows {
        if let Some(v) = value(row) {
            series
                .entry(row.attr.clone())
                .or_default()
                .push((row.lambda, v));
        }
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite lambdas"));
    }
    series
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_is_stable_and_input_sensitive() {
        let a = config_hash("epochs = 9\nseed = 1\n");
        let b = config_hash("epochs = 9\nseed = 1\n");
        let c = config_hash("epochs = 9\nseed = 2\n");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.starts_with("fnv1a64:"));
    }

    #[test]
    fn sweep_csv_schema_and_na_cells() {
        let rows = vec![SweepRow {
            lambda: 2.5,
            attr: "race".into(),
            macro_gain: Some(12.5),
            macro_std: Some(0.5),
            micro_gain: None,
            micro_std: None,
            utility_gain: Some(-0.25),
            utility_std: Some(0.0),
            error: Some("boom".into()),
        }];
        let csv = sweep_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "lambda,attr,macro_gain,macro_std,micro_gain,micro_std,utility_gain,utility_std"
        );
        assert_eq!(lines.next().unwrap(), "2.5,race,12.5,0.5,NA,NA,-0.25,0");
    }
}
