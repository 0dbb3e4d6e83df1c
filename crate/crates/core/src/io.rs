//! Plain-text file formats.
//!
//! Tensors use the WTF1 layout: a magic line `wtf-tensor v1`, a line with the
//! space-separated shape, then the entries in row-major order, printed with
//! 17 significant digits so that values survive a round trip exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::ConstraintSet;
use crate::error::{Error, Result};
use crate::solver::{Block, SolveTrace, TuckerModel};
use crate::tensor::{DenseTensor, Matrix};

pub const TENSOR_MAGIC: &str = "wtf-tensor v1";

pub fn format_tensor(t: &DenseTensor) -> String {
    let mut out = String::with_capacity(24 * t.len() + 32);
    out.push_str(TENSOR_MAGIC);
    out.push('\n');
    out.push_str(&t.shape().iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
    out.push('\n');
    let last = t.shape().last().copied().unwrap_or(1).max(1);
    for (i, v) in t.data().iter().enumerate() {
        out.push_str(&format!("{v:.16e}"));
        out.push(if (i + 1) % last == 0 { '\n' } else { ' ' });
    }
    out
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or("").trim();
    if magic != TENSOR_MAGIC {
        return Err(Error::Format(format!("bad magic: expected '{TENSOR_MAGIC}', found '{magic}'")));
    }
    let shape_line = lines.next().ok_or_else(|| Error::Format("missing shape line".into()))?;
    let shape = shape_line
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|_| Error::Format(format!("invalid shape entry '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Format(format!("invalid shape {shape:?}")));
    }
    let expected: usize = shape.iter().product();
    let tokens: Vec<&str> = lines.flat_map(str::split_whitespace).collect();
    let mut data = Vec::with_capacity(expected);
    for (i, tok) in tokens.iter().enumerate() {
        let v = tok
            .parse::<f64>()
            .map_err(|_| Error::Format(format!("non-numeric value '{tok}' at position {i}")))?;
        data.push(v);
    }
    if data.len() != expected {
        return Err(Error::Format(format!(
            "data length mismatch: shape {shape:?} expects {expected} values, found {}",
            data.len()
        )));
    }
    DenseTensor::new(shape, data)
}

pub fn write_tensor(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_tensor(t))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    parse_tensor(&fs::read_to_string(path)?)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// One row per grid point, one column per atom, header `atom_1,...`.
pub fn write_factor_csv(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record((1..=m.cols()).map(|j| format!("atom_{j}"))).map_err(csv_error)?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:.16e}"))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_factor_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let cols = r.headers().map_err(csv_error)?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        for tok in rec.iter() {
            data.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("non-numeric value '{tok}' in row {}", rows + 1)))?,
            );
        }
        rows += 1;
    }
    Matrix::new(rows, cols, data)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelMeta {
    core_fixed: bool,
    core_constraint: ConstraintSet,
    factor_constraints: Vec<ConstraintSet>,
}

pub fn factor_file_name(k: usize) -> String {
    format!("factor_{}.csv", k + 1)
}

/// Writes `factor_1.csv .. factor_d.csv`, `core.wtf` and `model.toml`.
pub fn export_model(model: &TuckerModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (k, a) in model.factors.iter().enumerate() {
        write_factor_csv(a, dir.join(factor_file_name(k)))?;
    }
    write_tensor(&model.core, dir.join("core.wtf"))?;
    let meta = ModelMeta {
        core_fixed: model.core_fixed,
        core_constraint: model.constraints[0],
        factor_constraints: model.constraints[1..].to_vec(),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Format(format!("model metadata: {e}")))?;
    fs::write(dir.join("model.toml"), text)?;
    Ok(())
}

pub fn import_model(dir: impl AsRef<Path>) -> Result<TuckerModel> {
    let dir = dir.as_ref();
    let meta: ModelMeta = toml::from_str(&fs::read_to_string(dir.join("model.toml"))?)
        .map_err(|e| Error::Format(format!("model metadata: {e}")))?;
    let core = read_tensor(dir.join("core.wtf"))?;
    let factors = (0..core.order())
        .map(|k| read_factor_csv(dir.join(factor_file_name(k))))
        .collect::<Result<Vec<_>>>()?;
    let mut constraints = vec![meta.core_constraint];
    constraints.extend(meta.factor_constraints);
    TuckerModel::new(core, factors, constraints, meta.core_fixed)
}

/// CSV with header `sweep,block,dual_value,grad_norm,primal_objective,seconds`;
/// block 0 is the core and `k` is factor `k` (1-based).
pub fn export_trace(trace: &SolveTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["sweep", "block", "dual_value", "grad_norm", "primal_objective", "seconds"])
        .map_err(csv_error)?;
    for r in &trace.records {
        let block = match r.block {
            Block::Core => 0,
            Block::Factor(k) => k + 1,
        };
        w.write_record([
            r.sweep.to_string(),
            block.to_string(),
            format!("{:.16e}", r.dual_value),
            format!("{:.16e}", r.grad_norm),
            format!("{:.16e}", r.primal_objective),
            format!("{:.6}", r.seconds),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_in_memory() {
        let mut c = 0.0f64;
        let t = DenseTensor::from_fn(&[2, 3, 4], |_| {
            c += 1.0;
            (c * 0.37).sin() / 3.0
        })
        .unwrap();
        assert_eq!(parse_tensor(&format_tensor(&t)).unwrap(), t);
        let v = DenseTensor::new(vec![3], vec![1e-300, -0.1, 12345.678901234567]).unwrap();
        assert_eq!(parse_tensor(&format_tensor(&v)).unwrap(), v);
    }

    #[test]
    fn distinct_errors() {
        let bad_magic = parse_tensor("wtf-tensor v2\n1\n0.5\n").unwrap_err().to_string();
        assert!(bad_magic.contains("bad magic"));
        let short = parse_tensor("wtf-tensor v1\n2 2\n1 2 3\n").unwrap_err().to_string();
        assert!(short.contains("expects 4 values, found 3"), "{short}");
        let junk = parse_tensor("wtf-tensor v1\n2\n1 abc\n").unwrap_err().to_string();
        assert!(junk.contains("non-numeric value 'abc'"));
    }
}
