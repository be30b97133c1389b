//! CSV and JSON writers with fixed column sets.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes to JSON");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// `eigenvalues.csv`: `N,index,eigenvalue,normalized` with `index` from 1 in descending order.
#[derive(Debug, Serialize)]
pub struct EigenvalueRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub index: usize,
    pub eigenvalue: f64,
    pub normalized: f64,
}

/// `branch.csv`: `step,epsilon,amplitude,supnorm,stable`.
#[derive(Debug, Serialize)]
pub struct BranchRow {
    pub step: usize,
    pub epsilon: f64,
    pub amplitude: f64,
    pub supnorm: f64,
    pub stable: bool,
}

/// `profile.csv`: `j,x,u` with `x = j/N`.
#[derive(Debug, Serialize)]
pub struct ProfileRow {
    pub j: usize,
    pub x: f64,
    pub u: f64,
}

/// `concentration.csv`: `N,seed,norm,ratio`.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub norm: f64,
    pub ratio: f64,
}

pub fn eigenvalue_rows(eigenvalues: &[f64]) -> Vec<EigenvalueRow> {
    let n = eigenvalues.len();
    eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| EigenvalueRow {
            n,
            index: i + 1,
            eigenvalue: l,
            normalized: l / n as f64,
        })
        .collect()
}

pub fn profile_rows(u: &[f64]) -> Vec<ProfileRow> {
    let n = u.len();
    u.iter()
        .enumerate()
        .map(|(i, &u)| ProfileRow {
            j: i + 1,
            x: (i + 1) as f64 / n as f64,
            u,
        })
        .collect()
}
