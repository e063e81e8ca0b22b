//! Square matrices labelled by node name, in the CSV layout of the
//! distance and energy tables: the first row and first column hold node
//! names, the top-left cell is ignored.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnergyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl NamedMatrix {
    pub fn new(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, EnergyError> {
        let n = names.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(EnergyError::Matrix(format!("matrix must be {n}x{n}")));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(EnergyError::Matrix(format!("duplicate node name {a:?}")));
            }
        }
        if let Some((i, j)) = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| !values[i][j].is_finite())
        {
            return Err(EnergyError::Matrix(format!(
                "non-finite entry at ({}, {})",
                names[i], names[j]
            )));
        }
        Ok(Self { names, values })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, EnergyError> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = csv.records();
        let header = rows
            .next()
            .ok_or_else(|| EnergyError::Matrix("empty matrix file".into()))?
            .map_err(|e| EnergyError::Matrix(e.to_string()))?;
        let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut values = Vec::with_capacity(names.len());
        for (r, rec) in rows.enumerate() {
            let line = r + 2;
            let rec = rec.map_err(|e| EnergyError::Matrix(format!("line {line}: {e}")))?;
            let label = rec.get(0).unwrap_or_default();
            if names.get(r).map(String::as_str) != Some(label) {
                return Err(EnergyError::Matrix(format!(
                    "line {line}: row label {label:?} does not match column order"
                )));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|cell| {
                    cell.parse::<f64>().map_err(|_| {
                        EnergyError::Matrix(format!("line {line}: bad number {cell:?}"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        Self::new(names, values)
    }

    pub fn from_path(path: &Path) -> Result<Self, EnergyError> {
        let file = std::fs::File::open(path)
            .map_err(|e| EnergyError::Matrix(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EnergyError> {
        let mut out = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| EnergyError::Matrix(e.to_string());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header).map_err(err)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec).map_err(err)?;
        }
        out.flush().map_err(|e| EnergyError::Matrix(e.to_string()))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, from: &str, to: &str) -> Option<f64> {
        Some(self.values[self.index_of(from)?][self.index_of(to)?])
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
