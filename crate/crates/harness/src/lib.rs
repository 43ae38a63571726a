//! Experiment harness for the `rbbtr` solvers: run matrices with CSV output,
//! Dolan-Moré performance profiles, and spherical t-design runs with
//! certificates.

pub mod error;
pub mod matrix;
pub mod profile;
pub mod tdesign;
pub mod variants;

pub use error::{HarnessError, Result};
pub use matrix::{read_csv, run_matrix, write_csv, CellResult, ProblemSpec, ReportRow, RunMatrix};
pub use profile::{performance_profile, profile_from_rows, Metric, Profile, ProfileCurve};
pub use tdesign::{tdesign_run, Init, TdesignOptions, TdesignOutcome};
pub use variants::VariantSpec;
