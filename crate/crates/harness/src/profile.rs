//! Dolan-Moré performance profiles.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::matrix::{format_f64, ReportRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Time,
    #[serde(rename = "iter")]
    Iterations,
    Gnorm,
}

impl Metric {
    /// The metric of one run; unconverged runs count as `+∞`.
    pub fn of(&self, row: &ReportRow) -> f64 {
        if !row.converged() {
            return f64::INFINITY;
        }
        match self {
            Metric::Time => row.time_s,
            Metric::Iterations => row.total_iterations() as f64,
            Metric::Gnorm => row.final_gnorm,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Time => "time",
            Metric::Iterations => "iter",
            Metric::Gnorm => "gnorm",
        })
    }
}

impl FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Metric::Time),
            "iter" | "iterations" => Ok(Metric::Iterations),
            "gnorm" => Ok(Metric::Gnorm),
            other => Err(HarnessError::Profile(format!("unknown metric `{other}`"))),
        }
    }
}

/// Fraction of problems solved within factor `ω` of the best, at every breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub solver: String,
    pub breakpoints: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// Step-function value at `omega`.
    pub fn value_at(&self, omega: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(w, _)| *w <= omega)
            .last()
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn terminal(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub curves: Vec<ProfileCurve>,
    /// Problems on which every solver failed, by index into the input table.
    pub excluded: Vec<usize>,
    pub problems_used: usize,
}

fn ratio(m: f64, best: f64) -> f64 {
    if best == 0.0 {
        if m == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        m / best
    }
}

/// `table[p][s]` is the metric of solver `s` on problem `p`; failures are `+∞`.
pub fn performance_profile(solvers: &[String], table: &[Vec<f64>]) -> Result<Profile> {
    if solvers.len() < 2 {
        return Err(HarnessError::Profile("need at least two solvers".into()));
    }
    if table.is_empty() {
        return Err(HarnessError::Profile("need at least one problem".into()));
    }
    if let Some(row) = table.iter().find(|r| r.len() != solvers.len()) {
        return Err(HarnessError::Profile(format!(
            "row with {} entries for {} solvers",
            row.len(),
            solvers.len()
        )));
    }
    let mut excluded = Vec::new();
    let mut ratios: Vec<Vec<f64>> = Vec::new();
    for (p, row) in table.iter().enumerate() {
        if row.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(HarnessError::Profile(format!("problem {p}: metric must be non-negative")));
        }
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        if best.is_infinite() {
            warn!("problem {p}: every solver failed; excluded from the profile");
            excluded.push(p);
            continue;
        }
        ratios.push(row.iter().map(|&m| ratio(m, best)).collect());
    }
    if ratios.is_empty() {
        return Err(HarnessError::Profile("every problem was excluded".into()));
    }
    let mut omegas: Vec<f64> = ratios.iter().flatten().copied().filter(|r| r.is_finite()).collect();
    omegas.sort_by(f64::total_cmp);
    omegas.dedup();
    let total = ratios.len() as f64;
    let curves = solvers
        .iter()
        .enumerate()
        .map(|(s, name)| ProfileCurve {
            solver: name.clone(),
            breakpoints: omegas
                .iter()
                .map(|&w| (w, ratios.iter().filter(|r| r[s] <= w).count() as f64 / total))
                .collect(),
        })
        .collect();
    Ok(Profile { curves, excluded, problems_used: ratios.len() })
}

/// Groups CSV rows by `(problem, n)` and variant, in order of first appearance.
/// Repeated runs of a cell are reduced to their median metric.
pub fn profile_from_rows(rows: &[ReportRow], metric: Metric) -> Result<Profile> {
    let mut problems: Vec<(String, usize)> = Vec::new();
    let mut solvers: Vec<String> = Vec::new();
    for r in rows {
        let key = (r.problem.clone(), r.n);
        if !problems.contains(&key) {
            problems.push(key);
        }
        if !solvers.contains(&r.variant) {
            solvers.push(r.variant.clone());
        }
    }
    let mut samples = vec![vec![Vec::<f64>::new(); solvers.len()]; problems.len()];
    for r in rows {
        let p = problems.iter().position(|k| k.0 == r.problem && k.1 == r.n).expect("indexed above");
        let s = solvers.iter().position(|v| *v == r.variant).expect("indexed above");
        samples[p][s].push(metric.of(r));
    }
    let mut table = Vec::with_capacity(problems.len());
    for (p, row) in samples.iter_mut().enumerate() {
        let mut out = Vec::with_capacity(solvers.len());
        for (s, v) in row.iter_mut().enumerate() {
            if v.is_empty() {
                return Err(HarnessError::Profile(format!(
                    "no run of `{}` on {} (n = {})",
                    solvers[s], problems[p].0, problems[p].1
                )));
            }
            v.sort_by(f64::total_cmp);
            out.push(v[v.len() / 2]);
        }
        table.push(out);
    }
    performance_profile(&solvers, &table)
}

#[derive(Serialize)]
struct CurvePoint<'a> {
    solver: &'a str,
    omega: String,
    fraction: String,
}

pub fn write_profile_csv(path: &Path, profile: &Profile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in &profile.curves {
        for &(omega, fraction) in &c.breakpoints {
            w.serialize(CurvePoint {
                solver: &c.solver,
                omega: format_f64(omega),
                fraction: format_f64(fraction),
            })?;
        }
    }
    w.flush().map_err(crate::error::io_err(path))?;
    Ok(())
}
