//! Spherical t-design runs: initialization, solve, certificate and artifacts.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rbbtr::problems::Objective;
use rbbtr::solver::InitialStep;
use rbbtr::spherical::{
    certify, extremal_init, spiral_init, DesignCertificate, PointSet, SphericalDesign, SIGMA_FLOOR,
};
use rbbtr::{minimize, RunReport, SolverConfig, StoppingRule, TauRule};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};
use crate::variants::VariantSpec;

/// Largest degree run without an explicit override.
pub const DESK_MAX_T: usize = 20;

/// Iterations of the log-determinant ascent used by [`Init::Extremal`].
pub const EXTREMAL_ITERS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    /// Generalized spiral points, jittered when `seed ≠ 0`.
    Spiral { seed: u64 },
    /// Spiral points refined towards maximal kernel determinant.
    Extremal { seed: u64 },
    File { path: PathBuf },
}

impl Default for Init {
    fn default() -> Self {
        Init::Extremal { seed: 1 }
    }
}

impl Init {
    pub fn points(&self, n: usize, t: usize) -> Result<PointSet> {
        Ok(match self {
            Init::Spiral { seed } => spiral_init(n, *seed)?.with_degree(t),
            Init::Extremal { seed } => extremal_init(n, t, *seed, EXTREMAL_ITERS)?,
            Init::File { path } => read_points(path, t)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdesignOptions {
    pub t: usize,
    /// Defaults to `(t+1)²`.
    pub n: Option<usize>,
    pub variant: VariantSpec,
    pub tau: Option<TauRule>,
    pub init: Init,
    pub max_iter: usize,
    pub max_feval: usize,
    pub allow_large_t: bool,
}

impl TdesignOptions {
    pub fn new(t: usize, variant: VariantSpec) -> Self {
        Self {
            t,
            n: None,
            variant,
            tau: None,
            init: Init::default(),
            max_iter: 10_000,
            max_feval: 1_000_000,
            allow_large_t: false,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n.unwrap_or((self.t + 1) * (self.t + 1))
    }

    /// Composite stopping `ε₁ = 1e-8`, `ε₂ = 1e-16` and a unit first step.
    pub fn config(&self) -> SolverConfig {
        let mut cfg = self.variant.config();
        if let Some(tau) = self.tau {
            cfg.tau_rule = tau;
        }
        cfg.stopping = StoppingRule::Composite { eps1: 1e-8, eps2: 1e-16 };
        cfg.initial_step = InitialStep::Fixed { t: 1.0 };
        cfg.max_iter = self.max_iter;
        cfg.max_feval = self.max_feval;
        cfg
    }

    pub fn file_stem(&self) -> String {
        format!("t{}_n{}_{}", self.t, self.n_points(), self.variant.file_stem())
    }
}

#[derive(Debug, Clone)]
pub struct TdesignOutcome {
    pub report: RunReport,
    pub points: PointSet,
    pub certificate: DesignCertificate,
}

/// Stationarity tolerance `1e-8·(1 + ‖g₁‖)` relative to the starting gradient.
pub fn grad_tolerance(initial_gnorm: f64) -> f64 {
    1e-8 * (1.0 + initial_gnorm)
}

pub fn tdesign_run(opts: &TdesignOptions, out_dir: Option<&Path>) -> Result<TdesignOutcome> {
    if opts.t == 0 {
        return Err(HarnessError::Matrix("t must be at least 1".into()));
    }
    if opts.t > DESK_MAX_T && !opts.allow_large_t {
        return Err(HarnessError::DeskGuard { t: opts.t, limit: DESK_MAX_T });
    }
    let n = opts.n_points();
    let x0 = opts.init.points(n, opts.t)?;
    let f = SphericalDesign::new(n, opts.t)?.with_start(&x0)?;
    let report = minimize(&f, &f.default_start(), &opts.config())?;
    let points = PointSet::from_flat(&report.final_x, opts.t)?;
    let certificate = certify(&points, grad_tolerance(report.initial_gnorm), SIGMA_FLOOR)?;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let stem = opts.file_stem();
        write_points(&dir.join(format!("{stem}.points.txt")), &points)?;
        write_json(&dir.join(format!("{stem}.certificate.json")), &certificate)?;
        write_json(&dir.join(format!("{stem}.trace.json")), &report)?;
    }
    Ok(TdesignOutcome { report, points, certificate })
}

pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    points.write_text(std::io::BufWriter::new(file)).map_err(io_err(path))
}

pub fn read_points(path: &Path, t: usize) -> Result<PointSet> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(PointSet::read_text(BufReader::new(file), t)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
    Ok(())
}
