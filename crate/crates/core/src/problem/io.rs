//! Plain-text instance storage: `instance.json` header, `A.csv` (one matrix
//! row per line) and `b.csv` (one value per line). Values are written in
//! shortest round-trip form so a reload is bitwise identical.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::regularizers::RegularizerSpec;

pub const HEADER_FILE: &str = "instance.json";
pub const MATRIX_FILE: &str = "A.csv";
pub const RHS_FILE: &str = "b.csv";
pub const INSTANCE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceHeader {
    pub schema: u32,
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
    pub regularizer: RegularizerSpec,
    /// Generator seed, when the instance came from the synthetic generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
}

pub(crate) fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut out = String::with_capacity(v.len() * 24);
    for x in v.iter() {
        out.push_str(&format!("{x}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub(crate) fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(parse_value(line, path, line_no)?);
    }
    Ok(DVector::from_vec(values))
}

fn parse_value(s: &str, path: &Path, line_no: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Format(format!("{}:{}: {e} ('{s}')", path.display(), line_no + 1)))
}

impl ProblemInstance {
    pub fn header(&self, seed: Option<u64>) -> InstanceHeader {
        InstanceHeader {
            schema: INSTANCE_SCHEMA,
            m: self.rows(),
            n: self.dim(),
            lambda: self.lambda,
            regularizer: self.reg,
            seed,
            k: None,
            noise_std: None,
        }
    }

    /// Writes the instance into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path, header: &InstanceHeader) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(HEADER_FILE), serde_json::to_string_pretty(header)?)?;

        let mut rows = String::with_capacity(self.rows() * self.dim() * 24);
        for row in self.a.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            rows.push_str(&line.join(","));
            rows.push('\n');
        }
        fs::write(dir.join(MATRIX_FILE), rows)?;
        write_vector_csv(&dir.join(RHS_FILE), &self.b)
    }

    /// Loads an instance written by [`save`](Self::save).
    pub fn load(dir: &Path) -> Result<(Self, InstanceHeader)> {
        let header: InstanceHeader = serde_json::from_str(&fs::read_to_string(dir.join(HEADER_FILE))?)?;
        if header.schema != INSTANCE_SCHEMA {
            return Err(Error::Format(format!("unsupported instance schema {}", header.schema)));
        }

        let path = dir.join(MATRIX_FILE);
        let text = fs::read_to_string(&path)?;
        let mut data = Vec::with_capacity(header.m * header.n);
        let mut rows = 0;
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let before = data.len();
            for field in line.split(',') {
                data.push(parse_value(field, &path, line_no)?);
            }
            if data.len() - before != header.n {
                return Err(Error::Format(format!(
                    "{}:{}: expected {} columns, found {}",
                    path.display(),
                    line_no + 1,
                    header.n,
                    data.len() - before
                )));
            }
            rows += 1;
        }
        if rows != header.m {
            return Err(Error::Format(format!("expected {} matrix rows, found {rows}", header.m)));
        }
        let a = DMatrix::from_row_slice(header.m, header.n, &data);
        let b = read_vector_csv(&dir.join(RHS_FILE))?;
        let inst = ProblemInstance::new(a, b, header.lambda, header.regularizer)?;
        Ok((inst, header))
    }
}
