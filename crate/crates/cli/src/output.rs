//! Artifact writers: norm CSV, verdict and manifest JSON, PGM images.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stratflow_core::diagnostics::NormSeries;

use crate::CliError;

pub const CSV_HEADER: &str = "t,value,label";

/// One checked bound: name, measured margin, outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub bound: String,
    pub margin: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(
        bound: impl Into<String>,
        margin: f64,
        pass: bool,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            bound: bound.into(),
            margin,
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn new(experiment: &str, checks: Vec<Check>) -> Self {
        Self {
            experiment: experiment.to_string(),
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub experiment: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a C,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

/// Collects files written into one output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.root.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, series: &[NormSeries]) -> Result<(), CliError> {
        self.put(name, &csv_bytes(series))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    pub fn pgm(
        &mut self,
        name: &str,
        nx: usize,
        ny: usize,
        values: &[f64],
    ) -> Result<(), CliError> {
        self.put(name, &pgm_bytes(nx, ny, values))
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.put(name, bytes)
    }
}

/// `t,value,label` rows, 17 significant digits.
pub fn csv_bytes(series: &[NormSeries]) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for s in series {
        for &(t, v) in s.samples() {
            writeln!(out, "{t:.16e},{v:.16e},{}", s.label).unwrap();
        }
    }
    out
}

/// Reads back the series with `label` from a CSV produced by [`csv_bytes`].
pub fn read_series(path: &Path, label: &str) -> Result<NormSeries, CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(CliError::Config(format!(
            "{}: expected header `{CSV_HEADER}`",
            path.display()
        )));
    }
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        let mut cols = line.splitn(3, ',');
        let (Some(t), Some(v), Some(l)) = (cols.next(), cols.next(), cols.next()) else {
            return Err(CliError::Config(format!(
                "{}:{}: malformed row",
                path.display(),
                n + 2
            )));
        };
        if l.trim() != label {
            continue;
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!("{}:{}: bad number `{s}`", path.display(), n + 2))
            })
        };
        samples.push((parse(t)?, parse(v)?));
    }
    if samples.is_empty() {
        return Err(CliError::Config(format!(
            "label: no rows labelled `{label}` in {}",
            path.display()
        )));
    }
    Ok(NormSeries::from_samples(label, samples)?)
}

/// Binary graymap, `min → 0`, `max → 255`, top row at the largest `y`.
pub fn pgm_bytes(nx: usize, ny: usize, values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for l in (0..ny).rev() {
        for i in 0..nx {
            let v = (values[l * nx + i] - lo) / span;
            out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = NormSeries::from_samples("a", vec![(0.1, 1.0 / 3.0), (0.2, 2.5e-300)]).unwrap();
        let bytes = csv_bytes(std::slice::from_ref(&s));
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("t,value,label\n1.0000000000000001e-1,"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, bytes).unwrap();
        assert_eq!(read_series(&p, "a").unwrap(), s);
        assert!(read_series(&p, "b").is_err());
    }

    #[test]
    fn pgm_header_and_scaling() {
        let img = pgm_bytes(2, 2, &[0.0, 1.0, 2.0, 4.0]);
        assert!(img.starts_with(b"P5\n2 2\n255\n"));
        // top row is y index 1
        assert_eq!(&img[img.len() - 4..], &[128, 255, 0, 64]);
    }
}
