use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use limdep::validation::DgpConfig;
use limdep::Dataset;
use tempfile::NamedTempFile;

/// Regressor table read from CSV: `y`, then the remaining columns in order.
pub struct Table {
    pub names: Vec<String>,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

impl Table {
    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn prepend_intercept(&mut self) {
        let k = self.k();
        let mut x = Vec::with_capacity(self.y.len() * (k + 1));
        for t in 0..self.y.len() {
            x.push(1.0);
            x.extend_from_slice(&self.x[t * k..(t + 1) * k]);
        }
        self.x = x;
        self.names.insert(0, "(intercept)".into());
    }
}

/// Problems with the input file itself, as opposed to its values.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

pub fn read_table(path: &Path) -> anyhow::Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| InputError(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| InputError(format!("cannot read header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(InputError(format!("{} is empty", path.display())).into());
    }
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| InputError("header has no \"y\" column".into()))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != y_col)
        .map(|(_, h)| h.to_string())
        .collect();

    let (mut y, mut x) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| InputError(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(InputError(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            ))
            .into());
        }
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    InputError(format!(
                        "line {line}: column \"{}\" is not a finite number: {field:?}",
                        &headers[i]
                    ))
                })?;
            if i == y_col {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(InputError(format!("{} has no data rows", path.display())).into());
    }
    Ok(Table { names, y, x })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => write_atomic(p, |w| {
            writeln!(w, "{text}")?;
            Ok(())
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn write_dataset(path: &Path, data: &Dataset) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["y".to_string()];
        header.extend((1..=data.k()).map(|j| format!("x{j}")));
        out.write_record(&header)?;
        for t in 0..data.n() {
            let mut rec = vec![data.y()[t].to_string()];
            rec.extend(data.row(t).iter().map(f64::to_string));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    })
}

pub fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("cannot parse {s:?} as a comma-separated list of numbers"))?;
    if v.is_empty() || v.iter().any(|b| !b.is_finite()) {
        bail!("{s:?} must list finite numbers");
    }
    Ok(v)
}

pub fn dgp_summary(dgp: &DgpConfig) -> String {
    format!(
        "n = {}, beta = {:?}, sigma = {}, c = {}, seed = {}",
        dgp.n, dgp.beta0, dgp.sigma0, dgp.c, dgp.seed
    )
}
