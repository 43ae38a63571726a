use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rbbtr::problems::{Objective, Problem};
use rbbtr::spherical::{certify, SIGMA_FLOOR};
use rbbtr::{minimize, StoppingRule};
use rbbtr_harness::matrix::{write_csv, ProblemSpec, ReportRow, RunMatrix, RESULTS_FILE};
use rbbtr_harness::profile::{profile_from_rows, write_profile_csv, Metric};
use rbbtr_harness::tdesign::{read_points, tdesign_run, write_json, Init, TdesignOptions};
use rbbtr_harness::variants::{parse_tau, VariantSpec};
use rbbtr_harness::{read_csv, run_matrix, HarnessError, Result};

#[derive(Parser)]
#[command(name = "rbbtr", version, about = "Trust-region RBB solvers, benchmarks and t-designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stop {
    Rel,
    Scaled,
    Composite,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    Spiral,
    Extremal,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one test problem.
    Solve {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        n: usize,
        /// gbb, bbtr, rbbtr or rbbtre
        #[arg(long, default_value = "rbbtr")]
        variant: VariantSpec,
        /// inv or exp; defaults to the variant's rule
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        classic_radius: bool,
        /// Exponent of the inverse rule.
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, value_enum, default_value = "scaled")]
        stop: Stop,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Second tolerance of the composite rule.
        #[arg(long, default_value_t = 1e-16)]
        eps2: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a JSON run matrix and write results.csv.
    Bench {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Performance profile of a results CSV.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "time")]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a spherical t-design and its certificate.
    Tdesign {
        #[arg(long)]
        t: usize,
        /// Number of points; defaults to (t+1)².
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long, default_value = "rbbtr")]
        variant: VariantSpec,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, value_enum, default_value = "extremal")]
        init: InitKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Start from a points file instead of a generated set.
        #[arg(long)]
        start: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long)]
        allow_large_t: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certify a point set read from a file.
    Certify {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 1e-8)]
        grad_tol: f64,
        #[arg(long, default_value_t = SIGMA_FLOOR)]
        sigma_floor: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { problem, n, variant, tau, classic_radius, m, max_iter, stop, eps, eps2, out } => {
            let spec = if classic_radius {
                VariantSpec::classic(variant.variant)
            } else {
                variant
            };
            let mut cfg = spec.config();
            if let Some(t) = tau {
                cfg.tau_rule = parse_tau(&t, m)?;
            } else if let rbbtr::TauRule::Inverse { .. } = cfg.tau_rule {
                cfg.tau_rule = rbbtr::TauRule::Inverse { m };
            }
            if let Some(k) = max_iter {
                cfg.max_iter = k;
            }
            cfg.stopping = match stop {
                Stop::Rel => StoppingRule::Relative { eps },
                Stop::Scaled => StoppingRule::Scaled { eps },
                Stop::Composite => StoppingRule::Composite { eps1: eps, eps2 },
            };
            let p = Problem::by_name(&problem, n)?;
            let report = minimize(&p, &p.default_start(), &cfg)?;
            std::fs::create_dir_all(&out).map_err(|source| HarnessError::Io { path: out.clone(), source })?;
            let pspec = ProblemSpec { name: p.kind().name().to_string(), n };
            let row = ReportRow::from_report(&pspec, &spec, &report);
            write_csv(&out.join(RESULTS_FILE), std::slice::from_ref(&row))?;
            write_json(&out.join(format!("{}_n{n}_{}.trace.json", pspec.name, spec.file_stem())), &report)?;
            println!(
                "{} n={} {}: {} outer={} inner={} fevals={} f={:e} |g|={:e}",
                row.problem, n, row.variant, row.status, row.outer_iter, row.inner_cycles, row.fevals,
                row.final_f, row.final_gnorm
            );
        }
        Command::Bench { matrix, out, workers } => {
            let mut m = RunMatrix::from_json_file(&matrix)?;
            m.output_dir = Some(out.clone());
            if workers.is_some() {
                m.workers = workers;
            }
            let results = run_matrix(&m)?;
            let converged = results.iter().filter(|c| c.report.converged()).count();
            println!(
                "{} runs, {converged} converged; wrote {}",
                results.len(),
                out.join(RESULTS_FILE).display()
            );
        }
        Command::Profile { input, metric, out } => {
            let rows = read_csv(&input)?;
            let profile = profile_from_rows(&rows, metric)?;
            write_profile_csv(&out, &profile)?;
            for c in &profile.curves {
                println!("{:>8}  ρ(1) = {:.3}  ρ(∞) = {:.3}", c.solver, c.value_at(1.0), c.terminal());
            }
            if !profile.excluded.is_empty() {
                println!("{} problem(s) excluded: every solver failed", profile.excluded.len());
            }
        }
        Command::Tdesign { t, n, variant, tau, m, init, seed, start, max_iter, allow_large_t, out } => {
            let mut opts = TdesignOptions::new(t, variant);
            opts.n = n;
            opts.tau = tau.map(|s| parse_tau(&s, m)).transpose()?;
            opts.init = match (start, init) {
                (Some(path), _) => Init::File { path },
                (None, InitKind::Spiral) => Init::Spiral { seed },
                (None, InitKind::Extremal) => Init::Extremal { seed },
            };
            opts.max_iter = max_iter;
            opts.allow_large_t = allow_large_t;
            let outcome = tdesign_run(&opts, Some(&out))?;
            let c = &outcome.certificate;
            println!(
                "t={} N={} {}: {} iter={} A={:e} |grad|={:e} min σ={:.4} design={}",
                c.t,
                c.n_points,
                opts.variant,
                outcome.report.status,
                outcome.report.total_iterations(),
                c.objective_value,
                c.gradient_norm,
                c.min_singular_value,
                c.is_design
            );
        }
        Command::Certify { points, t, grad_tol, sigma_floor } => {
            let x = read_points(&points, t)?;
            let cert = certify(&x, grad_tol, sigma_floor)?;
            println!("{}", serde_json::to_string_pretty(&cert)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
