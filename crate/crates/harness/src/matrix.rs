//! Run matrices: every (problem, variant, repetition) cell is one solver run.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use rbbtr::problems::{Objective, Problem};
use rbbtr::{minimize, RunReport, RunStatus, SolverConfig, StoppingRule, TauRule};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{io_err, HarnessError, Result};
use crate::variants::VariantSpec;

pub const RESULTS_FILE: &str = "results.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
}

/// Settings applied on top of a variant's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default)]
    pub tau: Option<TauRule>,
    #[serde(default)]
    pub stopping: Option<StoppingRule>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub max_feval: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(t) = self.tau {
            cfg.tau_rule = t;
        }
        if let Some(s) = self.stopping {
            cfg.stopping = s;
        }
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if let Some(m) = self.max_feval {
            cfg.max_feval = m;
        }
    }
}

/// A variant in a matrix file: either a bare label or `{"label": .., "overrides": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VariantEntry {
    Label(VariantSpec),
    Configured {
        label: VariantSpec,
        #[serde(default)]
        overrides: Overrides,
    },
}

impl VariantEntry {
    pub fn spec(&self) -> VariantSpec {
        match self {
            VariantEntry::Label(v) => *v,
            VariantEntry::Configured { label, .. } => *label,
        }
    }

    pub fn config(&self, common: &Overrides) -> SolverConfig {
        let mut cfg = self.spec().config();
        common.apply(&mut cfg);
        if let VariantEntry::Configured { overrides, .. } = self {
            overrides.apply(&mut cfg);
        }
        cfg
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMatrix {
    pub problems: Vec<ProblemSpec>,
    pub variants: Vec<VariantEntry>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Applied to every variant before its own overrides.
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the rayon default.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunMatrix {
    pub fn new(problems: Vec<ProblemSpec>, variants: Vec<VariantSpec>) -> Self {
        Self {
            problems,
            variants: variants.into_iter().map(VariantEntry::Label).collect(),
            repetitions: 1,
            overrides: Overrides::default(),
            output_dir: None,
            workers: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn cell_count(&self) -> usize {
        self.problems.len() * self.variants.len() * self.repetitions
    }
}

/// One CSV line. Column order is the on-disk schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    pub n: usize,
    pub variant: String,
    #[serde(serialize_with = "ser_status", deserialize_with = "de_status")]
    pub status: RunStatus,
    pub outer_iter: usize,
    pub inner_cycles: usize,
    pub fevals: usize,
    #[serde(serialize_with = "ser_f64")]
    pub time_s: f64,
    #[serde(serialize_with = "ser_f64")]
    pub final_f: f64,
    #[serde(serialize_with = "ser_f64")]
    pub final_gnorm: f64,
}

impl ReportRow {
    pub fn from_report(problem: &ProblemSpec, variant: &VariantSpec, r: &RunReport) -> Self {
        Self {
            problem: problem.name.clone(),
            n: problem.n,
            variant: variant.label(),
            status: r.status,
            outer_iter: r.outer_iterations,
            inner_cycles: r.inner_cycles,
            fevals: r.function_evals,
            time_s: r.wall_time,
            final_f: r.final_f,
            final_gnorm: r.final_gnorm,
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.outer_iter + self.inner_cycles
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// 17 significant digits: enough to round-trip any f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_f64(*v))
}

fn ser_status<S: Serializer>(v: &RunStatus, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(v.as_str())
}

fn de_status<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RunStatus, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

/// A finished cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub problem: ProblemSpec,
    pub variant: VariantSpec,
    pub repetition: usize,
    pub report: RunReport,
}

impl CellResult {
    pub fn row(&self) -> ReportRow {
        ReportRow::from_report(&self.problem, &self.variant, &self.report)
    }
}

/// Runs every cell, in parallel when `workers` allows, and returns results in
/// problem-major, variant, repetition order. When `output_dir` is set the CSV
/// is written there as [`RESULTS_FILE`].
pub fn run_matrix(m: &RunMatrix) -> Result<Vec<CellResult>> {
    if m.problems.is_empty() || m.variants.is_empty() || m.repetitions == 0 {
        return Err(HarnessError::Matrix(
            "needs at least one problem, one variant and one repetition".into(),
        ));
    }
    let problems = m
        .problems
        .iter()
        .map(|p| Problem::by_name(&p.name, p.n))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut cells = Vec::with_capacity(m.cell_count());
    for (pi, _) in m.problems.iter().enumerate() {
        for (vi, v) in m.variants.iter().enumerate() {
            let cfg = v.config(&m.overrides);
            cfg.validate()?;
            for rep in 0..m.repetitions {
                cells.push((pi, vi, rep, cfg.clone()));
            }
        }
    }

    let run = || {
        cells
            .par_iter()
            .map(|(pi, vi, rep, cfg)| {
                let p = &problems[*pi];
                let report = minimize(p, &p.default_start(), cfg)?;
                info!(
                    "{} n={} {}: {} after {} cycles",
                    m.problems[*pi].name,
                    m.problems[*pi].n,
                    m.variants[*vi].spec(),
                    report.status,
                    report.total_iterations()
                );
                Ok(CellResult {
                    problem: m.problems[*pi].clone(),
                    variant: m.variants[*vi].spec(),
                    repetition: *rep,
                    report,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = match m.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Matrix(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    if let Some(dir) = &m.output_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let rows: Vec<ReportRow> = results.iter().map(CellResult::row).collect();
        write_csv(&dir.join(RESULTS_FILE), &rows)?;
    }
    Ok(results)
}

/// Writes to a sibling temporary file first, then renames it into place.
pub fn write_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}
