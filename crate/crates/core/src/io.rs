//! File formats: the JSON path/generator input format, braid CSV export,
//! and JSON reports.
//!
//! A path file is either raw samples
//! `{ "dim": d, "grid": G, "loop": bool, "tail_bound": t, "samples": [...] }`
//! with each sample a row-major list of `[re, im]` pairs, or a generator
//! `{ "generator": { "dim": ..table.., "initial_diagonal": [...], "segments": [...] } }`
//! whose expressions are strings in the grammar of [`crate::expr`].

use serde::{Deserialize, Serialize};

use crate::braid::{Condition1Report, EigenBraid, FailureReason};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::generator::{evaluate_generator, GeneratorSpec};
use crate::matrix::{CMatrix, C64};
use crate::path::OperatorPath;
use crate::perm::Permutation;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixPathFile {
    pub dim: usize,
    pub grid: usize,
    #[serde(rename = "loop")]
    pub is_loop: bool,
    #[serde(default)]
    pub tail_bound: f64,
    /// One entry per grid point; each is dim*dim `[re, im]` pairs, row-major.
    pub samples: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathFile {
    Generator { generator: GeneratorSpec },
    Samples(MatrixPathFile),
}

impl PathFile {
    pub fn from_json(text: &str) -> Result<PathFile> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Realize the file as a validated path. `grid` overrides the grid size
    /// for generator files; sample files carry their own grid.
    pub fn realize(&self, grid: usize, tol: &Tolerances) -> Result<OperatorPath> {
        match self {
            PathFile::Generator { generator } => evaluate_generator(generator, grid, tol),
            PathFile::Samples(f) => {
                if f.samples.len() != f.grid + 1 {
                    return Err(Error::Format(format!(
                        "expected {} samples for grid size {}, found {}",
                        f.grid + 1,
                        f.grid,
                        f.samples.len()
                    )));
                }
                let mut mats = Vec::with_capacity(f.samples.len());
                for (g, flat) in f.samples.iter().enumerate() {
                    if flat.len() != f.dim * f.dim {
                        return Err(Error::Format(format!(
                            "sample {g} has {} entries, expected {}",
                            flat.len(),
                            f.dim * f.dim
                        )));
                    }
                    let mut m = CMatrix::zeros((f.dim, f.dim));
                    for (k, [re, im]) in flat.iter().enumerate() {
                        m[[k / f.dim, k % f.dim]] = C64::new(*re, *im);
                    }
                    mats.push(m);
                }
                let path = OperatorPath::from_matrices(mats, f.tail_bound, tol)?;
                if f.is_loop && !path.is_loop {
                    return Err(Error::NotALoop(path.closure_gap()));
                }
                Ok(path)
            }
        }
    }
}

/// Serialize a path back to the sample file format.
pub fn path_to_file(path: &OperatorPath) -> MatrixPathFile {
    let dim = path.dim();
    let samples = path
        .samples
        .iter()
        .map(|s| {
            let mut flat = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    let z = s.matrix[[i, j]];
                    flat.push([z.re, z.im]);
                }
            }
            flat
        })
        .collect();
    MatrixPathFile {
        dim,
        grid: path.grid,
        is_loop: path.is_loop,
        tail_bound: path.tail_bound,
        samples,
    }
}

/// Braid CSV: one row per live track per grid point, floats at full
/// precision. Columns: x, track, re, im, abs, certified.
pub fn braid_to_csv(braid: &EigenBraid) -> String {
    let mut out = String::from("x,track,re,im,abs,certified\n");
    for (ti, t) in braid.tracks.iter().enumerate() {
        for (k, v) in t.values.iter().enumerate() {
            let g = t.birth + k;
            let x = g as f64 / braid.grid as f64;
            // a point is certified when the step into it was
            let certified = if k == 0 {
                t.birth == 0
            } else {
                t.certified[k - 1]
            };
            out.push_str(&format!(
                "{:.16e},{},{:.16e},{:.16e},{:.16e},{}\n",
                x,
                ti,
                v.re,
                v.im,
                v.norm(),
                certified
            ));
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct MonodromyReport {
    pub tracks: usize,
    /// Cycle decomposition over track indices.
    pub cycles: Vec<Vec<usize>>,
    pub map: Permutation,
}

pub fn monodromy_report(p: &Permutation) -> MonodromyReport {
    MonodromyReport {
        tracks: p.len(),
        cycles: p.cycles(),
        map: p.clone(),
    }
}

#[derive(Debug, Serialize)]
pub struct Condition1Json {
    pub satisfied: bool,
    pub failures: Vec<Condition1FailureJson>,
}

#[derive(Debug, Serialize)]
pub struct Condition1FailureJson {
    pub track: usize,
    pub grid_index: usize,
    pub reason: &'static str,
    pub limit_zero: bool,
}

pub fn condition1_json(report: &Condition1Report) -> Condition1Json {
    Condition1Json {
        satisfied: report.satisfied,
        failures: report
            .failures
            .iter()
            .map(|f| Condition1FailureJson {
                track: f.track,
                grid_index: f.boundary_index,
                reason: match f.reason {
                    FailureReason::ModulusBelowThreshold => "modulus-below-threshold",
                    FailureReason::NoSafeMatch => "no-safe-match",
                },
                limit_zero: f.limit_zero,
            })
            .collect(),
    }
}

/// Residual CSV: columns x, residual.
pub fn residuals_to_csv(grid: usize, residuals: &[f64]) -> String {
    let mut out = String::from("x,residual\n");
    for (g, r) in residuals.iter().enumerate() {
        out.push_str(&format!("{:.16e},{:.16e}\n", g as f64 / grid as f64, r));
    }
    out
}
