//! Column tables with per-variable metadata, domain and regime tags, and
//! their CSV + JSON-sidecar serialization.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum VarType {
    Discrete { card: u32 },
    Continuous,
}

impl VarType {
    pub fn binary() -> Self {
        VarType::Discrete { card: 2 }
    }

    pub fn card(self) -> Option<u32> {
        match self {
            VarType::Discrete { card } => Some(card),
            VarType::Continuous => None,
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, VarType::Discrete { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

/// Whether the treatment column was produced by its mechanism or by randomization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum Regime {
    Observational,
    Experimental { treatment: String },
}

impl Regime {
    pub fn is_experimental(&self) -> bool {
        matches!(self, Regime::Experimental { .. })
    }
}

/// Immutable column table. Discrete values are stored as integral `f64`s in
/// `[0, card)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    types: Vec<VarType>,
    columns: Vec<Vec<f64>>,
    n: usize,
    domain: Domain,
    regime: Regime,
    seed: Option<u64>,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        types: Vec<VarType>,
        columns: Vec<Vec<f64>>,
        domain: Domain,
        regime: Regime,
    ) -> Result<Self> {
        if names.len() != types.len() || names.len() != columns.len() {
            return Err(input("names, types and columns must have equal length"));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(input(format!("duplicate column `{name}`")));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        for ((name, ty), col) in names.iter().zip(&types).zip(&columns) {
            if col.len() != n {
                return Err(input(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
            match ty {
                VarType::Discrete { card } => {
                    if *card == 0 {
                        return Err(input(format!("column `{name}` has cardinality 0")));
                    }
                    if let Some(bad) = col
                        .iter()
                        .find(|v| v.fract() != 0.0 || **v < 0.0 || **v >= *card as f64)
                    {
                        return Err(input(format!(
                            "column `{name}`: value {bad} outside [0, {card})"
                        )));
                    }
                }
                VarType::Continuous => {
                    if col.iter().any(|v| !v.is_finite()) {
                        return Err(input(format!("column `{name}` has non-finite values")));
                    }
                }
            }
        }
        if let Regime::Experimental { treatment } = &regime {
            if !names.contains(treatment) {
                return Err(input(format!(
                    "experimental regime names missing treatment `{treatment}`"
                )));
            }
        }
        Ok(Dataset {
            names,
            types,
            columns,
            n,
            domain,
            regime,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| input(format!("no column named `{name}`")))
    }

    pub fn var_type(&self, name: &str) -> Result<VarType> {
        Ok(self.types[self.index_of(name)?])
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index_of(name)?])
    }

    pub fn types(&self) -> &[VarType] {
        &self.types
    }

    /// Same column names and metadata, in the same order.
    pub fn same_schema(&self, other: &Dataset) -> bool {
        self.names == other.names && self.types == other.types
    }

    pub fn check_same_schema(&self, other: &Dataset) -> Result<()> {
        if self.same_schema(other) {
            Ok(())
        } else {
            Err(input(format!(
                "schema mismatch: [{}] vs [{}]",
                self.names.join(","),
                other.names.join(",")
            )))
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn project(&self, names: &[&str]) -> Result<Dataset> {
        let mut out = Dataset {
            names: Vec::with_capacity(names.len()),
            types: Vec::with_capacity(names.len()),
            columns: Vec::with_capacity(names.len()),
            n: self.n,
            domain: self.domain,
            regime: self.regime.clone(),
            seed: self.seed,
        };
        for name in names {
            let i = self.index_of(name)?;
            out.names.push(self.names[i].clone());
            out.types.push(self.types[i]);
            out.columns.push(self.columns[i].clone());
        }
        if let Regime::Experimental { treatment } = &out.regime {
            if !out.names.contains(treatment) {
                out.regime = Regime::Observational;
            }
        }
        Ok(out)
    }

    /// Rows at `idx`, in that order (repeats allowed).
    pub fn take_rows(&self, idx: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return Err(input(format!("row {bad} out of range")));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| idx.iter().map(|&i| c[i]).collect())
            .collect();
        Ok(Dataset {
            columns,
            n: idx.len(),
            names: self.names.clone(),
            types: self.types.clone(),
            domain: self.domain,
            regime: self.regime.clone(),
            seed: self.seed,
        })
    }

    /// Stacks `other` below `self`. Domain and regime tags of `self` are kept.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        self.check_same_schema(other)?;
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(Dataset {
            columns,
            n: self.n + other.n,
            names: self.names.clone(),
            types: self.types.clone(),
            domain: self.domain,
            regime: self.regime.clone(),
            seed: None,
        })
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn schema(&self) -> Schema {
        Schema {
            columns: self.names.clone(),
            variables: self
                .names
                .iter()
                .cloned()
                .zip(self.types.iter().copied())
                .collect(),
            domain: self.domain,
            regime: self.regime.clone(),
            n: self.n,
            seed: self.seed,
            provenance: None,
        }
    }

    /// Writes `path` as CSV and the sidecar schema next to it (see [`schema_path`]).
    pub fn write_csv(&self, path: &Path, provenance: Option<&serde_json::Value>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        let mut record = Vec::with_capacity(self.names.len());
        for i in 0..self.n {
            record.clear();
            for (col, ty) in self.columns.iter().zip(&self.types) {
                record.push(match ty {
                    VarType::Discrete { .. } => format!("{}", col[i] as i64),
                    VarType::Continuous => format!("{}", col[i]),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        let mut schema = self.schema();
        schema.provenance = provenance.cloned();
        fs::write(
            schema_path(path),
            serde_json::to_string_pretty(&schema)? + "\n",
        )?;
        Ok(())
    }

    /// Reads a CSV file and its sidecar schema.
    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let sidecar = schema_path(path);
        let schema: Schema = serde_json::from_str(&fs::read_to_string(&sidecar).map_err(|e| {
            Error::Input(format!("cannot read schema {}: {e}", sidecar.display()))
        })?)?;
        let mut r = csv::ReaderBuilder::new().from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut types = Vec::with_capacity(header.len());
        for name in &header {
            let ty = schema
                .variables
                .get(name)
                .ok_or_else(|| input(format!("column `{name}` is not described in the schema")))?;
            types.push(*ty);
        }
        let mut columns = vec![Vec::new(); header.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Parse {
                    line: line + 2,
                    msg: format!("expected {} fields, got {}", header.len(), rec.len()),
                });
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: line + 2,
                    msg: format!("`{field}` is not a number"),
                })?;
                columns[j].push(v);
            }
        }
        let mut d = Dataset::new(header, types, columns, schema.domain, schema.regime)?;
        d.seed = schema.seed;
        Ok(d)
    }
}

/// Sidecar location for a dataset file: `obs.csv` -> `obs.schema.json`.
pub fn schema_path(csv: &Path) -> PathBuf {
    csv.with_extension("schema.json")
}

/// JSON sidecar describing a CSV dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    /// Column order of the CSV file.
    #[serde(default)]
    pub columns: Vec<String>,
    pub variables: BTreeMap<String, VarType>,
    pub domain: Domain,
    #[serde(flatten)]
    pub regime: Regime,
    #[serde(default)]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Resolved configuration of the run that produced the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}
