//! Versioned CSV tables and JSON run summaries.
//!
//! Every CSV starts with one comment line naming its schema,
//!
//! ```text
//! # schema: <name> v<version>
//! ```
//!
//! followed by the header row and the data rows. Floats are written in
//! Rust's shortest round-trip form, so identical inputs give identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::{ENERGY_COLUMNS, LYAPUNOV_COLUMNS, RECORD_COLUMNS};
use crate::error::{Error, Result};
use crate::kernels::KERNEL_TABLE_HEADER;
use crate::quadrature::DECAY_COLUMNS;

/// Fixed column layout of one CSV table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

impl Schema {
    pub fn tag(&self) -> String {
        format!("# schema: {} v{}", self.name, self.version)
    }
}

pub const DIAGNOSTICS_SCHEMA: Schema = Schema {
    name: "diagnostics",
    version: 1,
    columns: &RECORD_COLUMNS,
};

pub const ENERGY_SCHEMA: Schema = Schema {
    name: "energy",
    version: 1,
    columns: &ENERGY_COLUMNS,
};

pub const LYAPUNOV_SCHEMA: Schema = Schema {
    name: "lyapunov",
    version: 1,
    columns: &LYAPUNOV_COLUMNS,
};

pub const KERNEL_TABLE_SCHEMA: Schema = Schema {
    name: "kernel-table",
    version: 1,
    columns: &KERNEL_TABLE_HEADER,
};

pub const DECAY_RATES_SCHEMA: Schema = Schema {
    name: "decay-rates",
    version: 1,
    columns: &DECAY_COLUMNS,
};

pub const LINEAR_VERIFY_SCHEMA: Schema = Schema {
    name: "linear-verify",
    version: 1,
    columns: &["nu", "eta", "t", "oracle_z", "max_rel_error"],
};

pub const ENVELOPE_FIT_SCHEMA: Schema = Schema {
    name: "kernel-envelopes",
    version: 1,
    columns: &[
        "family",
        "C",
        "c0",
        "max_ratio",
        "samples",
        "violations",
        "validation_samples",
    ],
};

pub const SWEEP_SCHEMA: Schema = Schema {
    name: "stability-sweep",
    version: 1,
    columns: &[
        "epsilon",
        "nu",
        "eta",
        "max_e_ratio",
        "verdict",
        "seeds",
        "max_int_d1u2",
        "d1u2_growth_ratio",
    ],
};

/// Write `rows` under `schema`. A row of the wrong width is a
/// [`Error::Schema`] naming the first column that is missing or extra.
pub fn write_csv<W: Write>(out: W, schema: &Schema, rows: &[Vec<String>]) -> Result<()> {
    let mut out = out;
    let io = |e| Error::io(schema.name, e);
    writeln!(out, "{}", schema.tag()).map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Config(format!("csv ({}): {e}", schema.name));
    w.write_record(schema.columns).map_err(map)?;
    for row in rows {
        if row.len() != schema.columns.len() {
            let column = row.len().min(schema.columns.len());
            return Err(Error::Schema {
                column,
                expected: schema
                    .columns
                    .get(column)
                    .map_or("<end of row>".into(), |c| c.to_string()),
                found: row
                    .get(column)
                    .cloned()
                    .unwrap_or_else(|| "<missing>".into()),
            });
        }
        w.write_record(row).map_err(map)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn write_csv_file(path: &Path, schema: &Schema, rows: &[Vec<String>]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(f), schema, rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Read a CSV written by [`write_csv`], checking the schema line and the
/// header column by column.
pub fn read_csv(path: &Path, schema: &Schema) -> Result<Vec<Vec<String>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(f);
    let mut tag = String::new();
    reader.read_line(&mut tag).map_err(|e| Error::io(path, e))?;
    if tag.trim_end() != schema.tag() {
        return Err(Error::Schema {
            column: 0,
            expected: schema.tag(),
            found: tag.trim_end().to_string(),
        });
    }
    let mut r = csv::Reader::from_reader(reader);
    let map = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let header = r.headers().map_err(map)?.clone();
    for i in 0..schema.columns.len().max(header.len()) {
        let (want, got) = (schema.columns.get(i), header.get(i));
        if want.copied() != got {
            return Err(Error::Schema {
                column: i,
                expected: want.map_or("<none>".into(), |c| c.to_string()),
                found: got.map_or("<none>".into(), |c| c.to_string()),
            });
        }
    }
    r.records()
        .map(|rec| {
            rec.map(|r| r.iter().map(String::from).collect())
                .map_err(map)
        })
        .collect()
}

/// Shortest round-trip text for `x`, switching to exponent form outside
/// `[1e-4, 1e16)` so tiny residuals stay readable.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// One acceptance assertion evaluated by an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
        }
    }
}

/// Identifier of the build: crate version plus the commit when known.
pub fn build_id() -> String {
    let commit = option_env!("BSQ_GIT_COMMIT").unwrap_or("unknown");
    format!("{}+{}", env!("CARGO_PKG_VERSION"), commit)
}

/// JSON summary written next to every experiment's CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub build_id: String,
    pub config_hash: String,
    pub seed: u64,
    /// `E(0)` of the first simulated state, when the experiment has one.
    pub e0: Option<f64>,
    pub wall_clock_seconds: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub outputs: Vec<String>,
    pub metrics: serde_json::Map<String, serde_json::Value>,
}

impl RunSummary {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("summary serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &LINEAR_VERIFY_SCHEMA, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# schema: linear-verify v1\nnu,eta,t,oracle_z,max_rel_error\n"
        );
    }

    #[test]
    fn short_row_names_missing_column() {
        let row = vec!["1".to_string(), "2".to_string()];
        let e = write_csv(Vec::new(), &LINEAR_VERIFY_SCHEMA, &[row]).unwrap_err();
        match e {
            Error::Schema {
                column, expected, ..
            } => {
                assert_eq!(column, 2);
                assert_eq!(expected, "t");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn round_trip_and_header_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let rows = vec![vec![
            "1".into(),
            "2".into(),
            "0.5".into(),
            "1e-3".into(),
            "3e-12".into(),
        ]];
        write_csv_file(&path, &LINEAR_VERIFY_SCHEMA, &rows).unwrap();
        assert_eq!(read_csv(&path, &LINEAR_VERIFY_SCHEMA).unwrap(), rows);

        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("oracle_z", "z");
        std::fs::write(&path, text).unwrap();
        match read_csv(&path, &LINEAR_VERIFY_SCHEMA).unwrap_err() {
            Error::Schema { column, found, .. } => assert_eq!((column, found.as_str()), (3, "z")),
            other => panic!("{other}"),
        }
        assert!(matches!(
            read_csv(&path, &ENERGY_SCHEMA).unwrap_err(),
            Error::Schema { column: 0, .. }
        ));
    }
}
