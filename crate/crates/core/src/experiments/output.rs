//! CSV tables with fixed column schemas, JSON documents and run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CascadeError, Result};
use crate::model::HBAR_MEV_PS;

/// Column layout of one CSV product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [&'static str],
    /// Columns holding text rather than numbers.
    pub text_columns: &'static [&'static str],
    /// Numeric columns that may hold NaN (failed cells, undefined values).
    pub nullable: &'static [&'static str],
}

pub const DYNAMICS: Schema = Schema {
    name: "dynamics",
    columns: &["t_ps", "occ_G", "occ_X", "occ_Y", "occ_B", "N_X", "N_Y"],
    text_columns: &[],
    nullable: &[],
};

pub const G2_SLICE: Schema = Schema {
    name: "g2_slice",
    columns: &["t_ps", "tau_ps", "re", "im", "A", "B", "C", "D"],
    text_columns: &["A", "B", "C", "D"],
    nullable: &[],
};

pub const MAP_FIG5: Schema = Schema {
    name: "map_fig5",
    columns: &["delta_b_mev", "alpha1_pi", "alpha2_pi", "delta2_mev", "b_final"],
    text_columns: &[],
    nullable: &["alpha2_pi", "delta2_mev", "b_final"],
};

pub const MAP_FIG2: Schema = Schema {
    name: "map_fig2",
    columns: &["delta_b_mev", "alpha1_pi", "alpha2_pi", "delta2_mev", "b_final", "concurrence"],
    text_columns: &[],
    nullable: &["alpha2_pi", "delta2_mev", "b_final", "concurrence"],
};

pub const SWEEP_G: Schema = Schema {
    name: "sweep_g",
    columns: &["g_mev", "concurrence", "n_xx", "n_xy", "n_yx", "n_yy"],
    text_columns: &[],
    nullable: &["concurrence"],
};

pub const TRUNCATION: Schema = Schema {
    name: "truncation",
    columns: &["t_ps", "truncation", "N_X", "N_Y", "g2_xxxx"],
    text_columns: &["truncation"],
    nullable: &[],
};

pub const ALL_SCHEMAS: [Schema; 6] = [DYNAMICS, G2_SLICE, MAP_FIG5, MAP_FIG2, SWEEP_G, TRUNCATION];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: Schema,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: Schema) -> Self {
        Table {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.schema;
        let fail = |reason: String| CascadeError::Schema {
            file: s.name.to_string(),
            reason,
        };
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != s.columns.len() {
                return Err(fail(format!("row {i} has {} fields, expected {}", row.len(), s.columns.len())));
            }
            for (col, cell) in s.columns.iter().zip(row) {
                let text = s.text_columns.contains(col);
                match cell {
                    Cell::Text(_) if !text => return Err(fail(format!("row {i}: `{col}` must be numeric"))),
                    Cell::Num(_) if text => return Err(fail(format!("row {i}: `{col}` must be text"))),
                    Cell::Num(v) if v.is_nan() && !s.nullable.contains(col) => {
                        return Err(fail(format!("row {i}: `{col}` is NaN")))
                    }
                    Cell::Num(v) if v.is_infinite() => return Err(fail(format!("row {i}: `{col}` is infinite"))),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Validates, then writes with a header row.
    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(self.schema.columns).map_err(csv_err)?;
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_num(*v),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            w.write_record(&fields).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn format_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.12e}")
    }
}

fn csv_err(e: csv::Error) -> CascadeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CascadeError::Io(io),
        other => CascadeError::Schema {
            file: "csv".into(),
            reason: format!("{other:?}"),
        },
    }
}

/// Reads a CSV written by [`Table::write`] and checks its header against `schema`.
pub fn read_table(path: &Path, schema: Schema) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != schema.columns {
        return Err(CascadeError::Schema {
            file: path.display().to_string(),
            reason: format!("header {header:?} does not match {:?}", schema.columns),
        });
    }
    let mut table = Table::new(schema);
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = schema
            .columns
            .iter()
            .zip(rec.iter())
            .map(|(col, f)| {
                if schema.text_columns.contains(col) {
                    Ok(Cell::Text(f.to_string()))
                } else {
                    f.parse::<f64>().map(Cell::Num).map_err(|_| CascadeError::Schema {
                        file: path.display().to_string(),
                        reason: format!("`{col}` value `{f}` is not a number"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        table.push(row);
    }
    table.validate()?;
    Ok(table)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CascadeError::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub kind: String,
    pub version: &'static str,
    pub config_sha256: String,
    pub hbar_mev_ps: f64,
    pub settings: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(kind: &str, config_text: &str, settings: serde_json::Value) -> Self {
        Manifest {
            kind: kind.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: sha256_hex(config_text.as_bytes()),
            hbar_mev_ps: HBAR_MEV_PS,
            settings,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rows() {
        let mut t = Table::new(DYNAMICS);
        t.push(vec![Cell::Num(0.0); 6]);
        assert!(matches!(t.validate(), Err(CascadeError::Schema { .. })));
        let mut t = Table::new(DYNAMICS);
        t.push(vec![Cell::Num(f64::NAN); 7]);
        assert!(t.validate().is_err());
        let mut t = Table::new(MAP_FIG5);
        t.push(vec![1.0.into(), 32.0.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]);
        assert!(t.validate().is_ok());
        let mut t = Table::new(G2_SLICE);
        t.push(vec![0.0.into(); 8]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(TRUNCATION);
        t.push(vec![1.5.into(), "reduced18".into(), 0.25.into(), 0.25.into(), 1e-3.into()]);
        t.write(&path).unwrap();
        let back = read_table(&path, TRUNCATION).unwrap();
        assert_eq!(back.rows, t.rows);
        assert!(read_table(&path, DYNAMICS).is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
