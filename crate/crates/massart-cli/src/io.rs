//! File formats: the dataset CSV (x1..xd,y rows, header optional), instance
//! JSON, and the affine-hypothesis JSON consumed by `certify`.

use std::fs;
use std::path::Path;

use massart_core::certificate::AffineFunc;
use massart_core::instance::{LabeledDataset, MassartInstance};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("ParseError: {path} line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{0}")]
    File(#[from] std::io::Error),
    #[error("ParseError: {path}: {msg}")]
    Json { path: String, msg: String },
}

/// Writes `x1,...,xd,y` rows with a header, 17 significant digits, so the
/// round trip is value-exact.
pub fn write_csv(path: &Path, data: &LabeledDataset) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (1..=data.d)
        .map(|j| format!("x{j}"))
        .chain(std::iter::once(String::from("y")))
        .collect();
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(data.d + 1);
    for i in 0..data.len() {
        row.clear();
        for v in data.x(i) {
            row.push(format!("{v:.16e}"));
        }
        row.push(format!("{}", data.ys[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::File(std::io::Error::other(e))
    }
}

/// Reads a dataset CSV. A first row whose leading field does not parse as a
/// number is treated as a header. Labels must be exactly +1 or -1.
pub fn read_csv(path: &Path) -> Result<LabeledDataset, IoError> {
    let text = fs::read_to_string(path)?;
    let name = path.display().to_string();
    let mut d = 0usize;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if idx == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() < 2 {
            return Err(IoError::Parse {
                path: name,
                line,
                msg: String::from("row needs at least one feature and a label"),
            });
        }
        if d == 0 {
            d = fields.len() - 1;
        } else if fields.len() - 1 != d {
            return Err(IoError::Parse {
                path: name,
                line,
                msg: format!("ragged row: {} fields, expected {}", fields.len(), d + 1),
            });
        }
        for f in &fields[..d] {
            match f.parse::<f64>() {
                Ok(v) if v.is_finite() => xs.push(v),
                _ => {
                    return Err(IoError::Parse {
                        path: name,
                        line,
                        msg: format!("bad feature value {f:?}"),
                    })
                }
            }
        }
        let label = fields[d];
        match label.parse::<f64>() {
            Ok(v) if v == 1.0 => ys.push(1i8),
            Ok(v) if v == -1.0 => ys.push(-1i8),
            _ => {
                return Err(IoError::Parse {
                    path: name,
                    line,
                    msg: format!("label must be +1 or -1, got {label:?}"),
                })
            }
        }
    }
    LabeledDataset::new(d, xs, ys).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: e.to_string(),
    })
}

pub fn read_instance(path: &Path) -> Result<MassartInstance, IoError> {
    let text = fs::read_to_string(path)?;
    let inst: MassartInstance =
        serde_json::from_str(&text).map_err(|e| IoError::Json {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    MassartInstance::new(inst.target.clone(), inst.noise.clone(), inst.d).map_err(|e| {
        IoError::Json { path: path.display().to_string(), msg: e.to_string() }
    })
}

/// The hypothesis file for `certify`: {"w": [...], "t": ...} encodes
/// ell(x) = w.x - t. A zero w with nonzero t is the constant hypothesis.
#[derive(Debug, Serialize, Deserialize)]
pub struct EllSpec {
    pub w: Vec<f64>,
    pub t: f64,
}

pub fn read_ell(path: &Path, d: usize) -> Result<AffineFunc, IoError> {
    let text = fs::read_to_string(path)?;
    let spec: EllSpec = serde_json::from_str(&text).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    if spec.w.len() != d {
        return Err(IoError::Json {
            path: path.display().to_string(),
            msg: format!("hypothesis dimension {} does not match data dimension {d}", spec.w.len()),
        });
    }
    Ok(AffineFunc::new(spec.w, spec.t))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
