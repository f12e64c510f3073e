//! Plain-text model files.
//!
//! One `key value...` record per line, in this order:
//!
//! ```text
//! format_version 1
//! family power-exponential|matern52
//! exponent <p>
//! parameterization theta|log10|inv|lensq
//! params <d values>
//! theta <d values>
//! n <n>
//! d <d>
//! mu_hat <scaled units>
//! sigma2_hat <scaled units²>
//! nugget scalar <δ> | nugget per-point <n values>
//! scaling <y_mean> <y_range> <true|false>
//! degenerate <true|false>
//! x <d values>            (n lines)
//! y <n values>            (scaled units)
//! alpha <n values>
//! chol <i+1 values>       (n lines, row i of the lower factor)
//! ```
//!
//! Floats are written in shortest round-trip form, so a reloaded model
//! predicts bit-for-bit like the original.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use super::{GpModel, ModelParts, Nugget};
use crate::designs::ScalingRecord;
use crate::kernels::{Family, KernelSpec, Parameterization};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model file is inconsistent: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

pub fn to_string(model: &GpModel) -> String {
    let mut out = String::new();
    let kernel = model.kernel();
    let (family, exponent) = match kernel.family() {
        Family::PowerExponential { exponent } => ("power-exponential", exponent),
        Family::Matern52 => ("matern52", 0.0),
    };
    let (n, d) = (model.n(), model.d());
    let _ = writeln!(out, "format_version {FORMAT_VERSION}");
    let _ = writeln!(out, "family {family}");
    let _ = writeln!(out, "exponent {exponent:?}");
    let _ = writeln!(out, "parameterization {}", kernel.parameterization().name());
    let _ = writeln!(out, "params {}", join(kernel.params().iter().copied()));
    let _ = writeln!(out, "theta {}", join(model.theta().iter().copied()));
    let _ = writeln!(out, "n {n}");
    let _ = writeln!(out, "d {d}");
    let _ = writeln!(out, "mu_hat {:?}", model.mu_hat());
    let _ = writeln!(out, "sigma2_hat {:?}", model.sigma2_hat());
    match model.nugget() {
        Nugget::Scalar(v) => {
            let _ = writeln!(out, "nugget scalar {v:?}");
        }
        Nugget::PerPoint(v) => {
            let _ = writeln!(out, "nugget per-point {}", join(v.iter().copied()));
        }
    }
    let s = model.scaling();
    let _ = writeln!(out, "scaling {:?} {:?} {}", s.y_mean, s.y_range, s.degenerate);
    let _ = writeln!(out, "degenerate {}", model.is_degenerate());
    for i in 0..n {
        let _ = writeln!(out, "x {}", join(model.x().row(i).iter().copied()));
    }
    let _ = writeln!(out, "y {}", join(model.y_scaled().iter().copied()));
    let _ = writeln!(out, "alpha {}", join(model.alpha().iter().copied()));
    let lower = model.factor().lower();
    for i in 0..n {
        let _ = writeln!(out, "chol {}", join((0..=i).map(|k| lower[(i, k)])));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    current: usize,
}

impl<'a> Lines<'a> {
    fn record(&mut self, key: &str) -> Result<Vec<&'a str>, ModelFileError> {
        loop {
            let Some((i, line)) = self.inner.next() else {
                return Err(ModelFileError::Parse { line: self.current + 1, message: format!("missing `{key}`") });
            };
            self.current = i + 1;
            let mut parts = line.split_whitespace();
            let Some(k) = parts.next() else { continue };
            if k != key {
                return Err(self.error(format!("expected `{key}`, found `{k}`")));
            }
            return Ok(parts.collect());
        }
    }

    fn error(&self, message: String) -> ModelFileError {
        ModelFileError::Parse { line: self.current, message }
    }

    fn floats(&mut self, key: &str, expected: Option<usize>) -> Result<Vec<f64>, ModelFileError> {
        let fields = self.record(key)?;
        let values = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| self.error(format!("`{f}` is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(e) = expected {
            if values.len() != e {
                return Err(self.error(format!("`{key}` needs {e} values, found {}", values.len())));
            }
        }
        Ok(values)
    }

    fn float(&mut self, key: &str) -> Result<f64, ModelFileError> {
        Ok(self.floats(key, Some(1))?[0])
    }

    fn word(&mut self, key: &str) -> Result<&'a str, ModelFileError> {
        let fields = self.record(key)?;
        match fields.as_slice() {
            [w] => Ok(w),
            _ => Err(self.error(format!("`{key}` takes one value"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize, ModelFileError> {
        let w = self.word(key)?;
        w.parse().map_err(|_| self.error(format!("`{w}` is not a count")))
    }

    fn flag(&mut self, key: &str) -> Result<bool, ModelFileError> {
        let w = self.word(key)?;
        w.parse().map_err(|_| self.error(format!("`{w}` is not true/false")))
    }
}

pub fn from_str(text: &str) -> Result<GpModel, ModelFileError> {
    let mut lines = Lines { inner: text.lines().enumerate(), current: 0 };
    let version = lines.count("format_version")?;
    if version != FORMAT_VERSION as usize {
        return Err(lines.error(format!("unsupported format version {version}")));
    }
    let family_name = lines.word("family")?;
    let exponent = lines.float("exponent")?;
    let family = match family_name {
        "power-exponential" => Family::PowerExponential { exponent },
        "matern52" => Family::Matern52,
        other => return Err(lines.error(format!("unknown family `{other}`"))),
    };
    let param_name = lines.word("parameterization")?;
    let parameterization = Parameterization::from_name(param_name)
        .ok_or_else(|| lines.error(format!("unknown parameterization `{param_name}`")))?;
    let params = lines.floats("params", None)?;
    let theta = lines.floats("theta", Some(params.len()))?;
    let n = lines.count("n")?;
    let d = lines.count("d")?;
    if d != params.len() {
        return Err(lines.error(format!("d = {d} but {} params", params.len())));
    }
    let mu_hat = lines.float("mu_hat")?;
    let sigma2_hat = lines.float("sigma2_hat")?;
    let fields = lines.record("nugget")?;
    let nugget = match fields.split_first() {
        Some((&"scalar", [v])) => Nugget::Scalar(v.parse().map_err(|_| lines.error("bad nugget".into()))?),
        Some((&"per-point", vs)) if vs.len() == n => Nugget::PerPoint(
            vs.iter().map(|v| v.parse().map_err(|_| lines.error("bad nugget".into()))).collect::<Result<_, _>>()?,
        ),
        _ => return Err(lines.error("nugget must be `scalar <v>` or `per-point <n values>`".into())),
    };
    let fields = lines.record("scaling")?;
    let scaling = match fields.as_slice() {
        [m, r, g] => ScalingRecord {
            y_mean: m.parse().map_err(|_| lines.error("bad scaling mean".into()))?,
            y_range: r.parse().map_err(|_| lines.error("bad scaling range".into()))?,
            degenerate: g.parse().map_err(|_| lines.error("bad scaling flag".into()))?,
        },
        _ => return Err(lines.error("scaling needs mean, range and flag".into())),
    };
    let degenerate = lines.flag("degenerate")?;
    let mut x = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        for (k, v) in lines.floats("x", Some(d))?.into_iter().enumerate() {
            x[(i, k)] = v;
        }
    }
    let y = lines.floats("y", Some(n))?;
    let alpha = lines.floats("alpha", Some(n))?;
    let mut lower = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (k, v) in lines.floats("chol", Some(i + 1))?.into_iter().enumerate() {
            lower[(i, k)] = v;
        }
    }
    let kernel = KernelSpec::new(family, parameterization, params).map_err(|e| ModelFileError::Invalid(e.to_string()))?;
    GpModel::from_parts(ModelParts { kernel, theta, nugget, mu_hat, sigma2_hat, lower, x, y, alpha, scaling, degenerate })
        .map_err(|e| ModelFileError::Invalid(e.to_string()))
}

pub fn save(model: &GpModel, path: &Path) -> Result<(), ModelFileError> {
    std::fs::write(path, to_string(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<GpModel, ModelFileError> {
    from_str(&std::fs::read_to_string(path)?)
}
