//! Bracket JSON files and trajectory CSV / JSON-lines output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bracket::BracketTensor;
use crate::error::{Error, Result};
use crate::flow::{FlowTrajectory, Sample};
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub v: f64,
}

/// On-disk bracket: 1-based indices, `i < j` only.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BracketFile {
    pub dim: usize,
    pub entries: Vec<BracketEntry>,
}

/// Entries with `|v|` at or below this are not written.
pub const WRITE_THRESHOLD: f64 = 1e-14;

impl BracketFile {
    pub fn from_bracket<T: Real>(mu: &BracketTensor<T>) -> Self {
        let n = mu.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let v = mu.get(i, j, k).to_f64_lossy();
                    if v.abs() > WRITE_THRESHOLD {
                        entries.push(BracketEntry { i: i + 1, j: j + 1, k: k + 1, v });
                    }
                }
            }
        }
        Self { dim: n, entries }
    }

    pub fn to_bracket<T: Real>(&self) -> Result<BracketTensor<T>> {
        let mut mu = BracketTensor::zeros(self.dim)?;
        for e in &self.entries {
            let n = self.dim;
            if e.i == 0 || e.j == 0 || e.k == 0 || e.i > n || e.j > n || e.k > n {
                return Err(Error::Parse(format!(
                    "entry ({}, {}, {}) outside 1..={n}",
                    e.i, e.j, e.k
                )));
            }
            if e.i >= e.j {
                return Err(Error::Parse(format!("entry needs i < j, got i = {}, j = {}", e.i, e.j)));
            }
            if !e.v.is_finite() {
                return Err(Error::Parse("non-finite coefficient".into()));
            }
            mu.set(e.i - 1, e.j - 1, e.k - 1, T::of(e.v));
        }
        Ok(mu)
    }
}

pub fn bracket_to_json<T: Real>(mu: &BracketTensor<T>) -> String {
    serde_json::to_string_pretty(&BracketFile::from_bracket(mu)).expect("plain data serializes")
}

pub fn bracket_from_json<T: Real>(text: &str) -> Result<BracketTensor<T>> {
    let file: BracketFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_bracket()
}

pub const CSV_HEADER: &str = "t,||mu||,scal,scalstar,f,lyap,cs,typeIII,ricBound,jacobiRes";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:e}"))
}

fn csv_row<T: Real>(s: &Sample<T>) -> String {
    let m = &s.monitors;
    format!(
        "{:e},{:e},{:e},{:e},{},{},{},{:e},{:e},{:e}",
        s.t.to_f64_lossy(),
        s.mu.norm().to_f64_lossy(),
        s.curvature.scal.to_f64_lossy(),
        s.curvature.scal_star.to_f64_lossy(),
        opt(m.f),
        opt(m.lyapunov),
        opt(m.cs_estimate),
        m.type_iii,
        m.ric_bound,
        s.jacobi_residual.to_f64_lossy()
    )
}

/// One header line and one row per sample. Label-dependent columns are
/// empty for unlabeled runs.
pub fn write_trajectory_csv<T: Real, W: Write>(traj: &FlowTrajectory<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in &traj.samples {
        writeln!(out, "{}", csv_row(s))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Snapshot<'a> {
    t: f64,
    bracket: &'a BracketFile,
}

/// One JSON object per line: `{"t": .., "bracket": {...}}`.
pub fn write_snapshots_jsonl<T: Real, W: Write>(traj: &FlowTrajectory<T>, mut out: W) -> std::io::Result<()> {
    for s in &traj.samples {
        let file = BracketFile::from_bracket(&s.mu);
        let line = serde_json::to_string(&Snapshot { t: s.t.to_f64_lossy(), bracket: &file })
            .expect("plain data serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
