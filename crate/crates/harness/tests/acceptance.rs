//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbbtr::problems::{check_gradient, standard_suite, Objective, Problem, ProblemKind};
use rbbtr::spherical::{
    ant_value, ant_value_harmonic, ExtremalSystem, PointSet, SphericalDesign,
};
use rbbtr::stepsize::{alpha_new, bb1, bb2};
use rbbtr::trust::{predicted_reduction, solve_subproblem};
use rbbtr::{DisplacementPair, RunStatus, Variant};
use rbbtr_harness::matrix::{run_matrix, ProblemSpec, RunMatrix, RESULTS_FILE};
use rbbtr_harness::profile::{performance_profile, profile_from_rows, Metric};
use rbbtr_harness::tdesign::{tdesign_run, Init, TdesignOptions};
use rbbtr_harness::{read_csv, CellResult, VariantSpec};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(started: Instant, limit_s: f64) -> Result<f64, String> {
    let el = started.elapsed().as_secs_f64();
    ensure(el < limit_s, || format!("took {el:.2} s, limit {limit_s} s"))?;
    Ok(el)
}

fn ulp(x: f64) -> f64 {
    let a = x.abs();
    f64::from_bits(a.to_bits() + 1) - a
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo..hi))
}

fn random_pair(rng: &mut ChaCha8Rng) -> DisplacementPair {
    loop {
        let d = rng.gen_range(1..=8);
        let scale_s = log_uniform(rng, -3.0, 3.0);
        let scale_y = log_uniform(rng, -3.0, 3.0);
        let s: Vec<f64> = (0..d).map(|_| scale_s * rng.gen_range(-1.0..1.0)).collect();
        let mut y: Vec<f64> = (0..d).map(|_| scale_y * rng.gen_range(-1.0..1.0)).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        if let Ok(p) = DisplacementPair::new(s, y) {
            if p.sy() > 0.0 {
                return p;
            }
        }
    }
}

fn c1_sandwich() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut exact = 0;
    for _ in 0..10_000 {
        let p = random_pair(&mut rng);
        let tau = rng.gen_range(0.0..=10.0);
        let (a, b) = (bb1(&p), bb2(&p).map_err(|e| e.to_string())?);
        let c = alpha_new(&p, tau).map_err(|e| e.to_string())?;
        ensure(c >= a - 4.0 * ulp(a) && c <= b + 4.0 * ulp(b), || {
            format!("bb1 {a:e} ≤ {c:e} ≤ bb2 {b:e} violated at τ = {tau}")
        })?;
        if a <= c && c <= b {
            exact += 1;
        }
    }
    let el = within_time(started, 1.0)?;
    Ok(format!("10000 pairs, {exact} hold with no ulp slack, {el:.3} s"))
}

fn c2_tau_monotone() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let p = random_pair(&mut rng);
        let mut grid: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..10.0)).collect();
        grid.push(0.0);
        grid.push(1e8);
        grid.sort_by(f64::total_cmp);
        let mut prev = f64::NEG_INFINITY;
        for &tau in &grid {
            let a = alpha_new(&p, tau).map_err(|e| e.to_string())?;
            ensure(a >= prev, || format!("α_new decreased at τ = {tau}: {prev:e} -> {a:e}"))?;
            prev = a;
        }
    }
    let el = within_time(started, 1.0)?;
    Ok(format!("1000 pairs × 66 τ values, {el:.3} s"))
}

fn c3_subproblem_grid() -> Check {
    const ANGLES: usize = 2001;
    const RADII: usize = 2001;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dirs: Vec<(f64, f64)> = (0..ANGLES)
        .map(|j| {
            let th = std::f64::consts::TAU * j as f64 / ANGLES as f64;
            (th.cos(), th.sin())
        })
        .collect();
    let mut worst_gap: f64 = 0.0;
    let mut worst_dist: f64 = 0.0;
    let mut boundary = 0;
    for _ in 0..1000 {
        let gn = log_uniform(&mut rng, -2.0, 2.0);
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let g = [gn * th.cos(), gn * th.sin()];
        let alpha = log_uniform(&mut rng, -2.0, 2.0);
        let delta = log_uniform(&mut rng, -2.0, 2.0);
        let model = |s: [f64; 2]| g[0] * s[0] + g[1] * s[1] + 0.5 * alpha * (s[0] * s[0] + s[1] * s[1]);
        let sp = solve_subproblem(&g, alpha, delta).map_err(|e| e.to_string())?;
        if sp.boundary {
            boundary += 1;
        }
        let s_star = [sp.s[0], sp.s[1]];
        let m_star = model(s_star);

        let mut best = (0.0, [0.0; 2]);
        for &(c, s) in &dirs {
            let slope = g[0] * c + g[1] * s;
            for i in 0..RADII {
                let r = delta * i as f64 / (RADII - 1) as f64;
                let m = r * slope + 0.5 * alpha * r * r;
                if m < best.0 {
                    best = (m, [r * c, r * s]);
                }
            }
        }
        let gap = (m_star - best.0) / m_star.abs();
        ensure(m_star <= best.0 + 1e-6 * m_star.abs(), || {
            format!("grid beats closed form: {:e} < {m_star:e}", best.0)
        })?;
        let cell = delta * ((1.0 / (RADII - 1) as f64).powi(2) + (std::f64::consts::TAU / ANGLES as f64).powi(2)).sqrt();
        let dist = ((best.1[0] - s_star[0]).powi(2) + (best.1[1] - s_star[1]).powi(2)).sqrt();
        ensure(dist <= cell, || format!("grid minimizer {dist:e} from closed form, cell {cell:e}"))?;
        worst_gap = worst_gap.max(-gap);
        worst_dist = worst_dist.max(dist / cell);
    }
    let el = within_time(started, 30.0)?;
    Ok(format!(
        "1000 instances ({boundary} on the boundary), grid never better than closed form, \
         worst relative model gap {worst_gap:.2e} (grid-limited when ‖s*‖ ≪ Δ), minimizers within {worst_dist:.2} cells, {el:.1} s"
    ))
}

fn c4_pred_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tight = 0;
    for _ in 0..10_000 {
        let gn = log_uniform(&mut rng, -8.0, 8.0);
        let alpha = log_uniform(&mut rng, -10.0, 10.0);
        let delta = log_uniform(&mut rng, -8.0, 8.0);
        let pred = predicted_reduction(gn, alpha, delta);
        let bound = 0.5 * gn * delta.min(gn / alpha);
        ensure(pred >= bound, || format!("Pred {pred:e} < bound {bound:e} (‖g‖ {gn:e}, α {alpha:e}, Δ {delta:e})"))?;
        if pred == bound {
            tight += 1;
        }
    }
    Ok(format!("10000 instances, {tight} attain the bound with equality"))
}

fn random_unit_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| loop {
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let r2: f64 = v.iter().map(|c| c * c).sum();
            if r2 > 1e-2 && r2 <= 1.0 {
                break v;
            }
        })
        .collect()
}

fn c5_gradient_checks() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut record = |name: &str, f: &dyn Objective, x: &[f64]| -> Result<(), String> {
        let err = check_gradient(f, x, 1e-6).map_err(|e| format!("{name}: {e}"))?;
        ensure(err <= 1e-5, || format!("{name}: relative error {err:e}"))?;
        worst = worst.max(err);
        checked += 1;
        Ok(())
    };
    for kind in ProblemKind::ALL {
        let p = Problem::new(kind, 12).map_err(|e| e.to_string())?;
        let x0 = p.default_start();
        for _ in 0..10 {
            let x: Vec<f64> = x0.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
            record(kind.name(), &p, &x)?;
        }
    }
    for t in 1..=12 {
        let f = SphericalDesign::new(24, t).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let x = PointSet::new(random_unit_points(&mut rng, 24), t).map_err(|e| e.to_string())?;
            record(&f.name(), &f, &x.to_flat())?;
        }
    }
    let f = ExtremalSystem::new(16, 3).map_err(|e| e.to_string())?;
    for _ in 0..10 {
        let x = PointSet::new(random_unit_points(&mut rng, 16), 3).map_err(|e| e.to_string())?;
        record(&f.name(), &f, &x.to_flat())?;
    }
    let el = within_time(started, 120.0)?;
    Ok(format!(
        "{checked} checks over {} test problems, t = 1..12 designs and the extremal objective, \
         worst {worst:.2e}, {el:.1} s",
        ProblemKind::ALL.len()
    ))
}

fn desk_matrix() -> RunMatrix {
    RunMatrix::new(
        vec![
            ProblemSpec { name: "white_holst".into(), n: 5000 },
            ProblemSpec { name: "perturbed_tridiagonal_quadratic".into(), n: 5000 },
        ],
        VariantSpec::all(),
    )
}

fn c6_desk_runs(results: &[CellResult], elapsed: f64) -> Check {
    let mut lines = Vec::new();
    for c in results {
        let r = &c.report;
        if !c.variant.classic_radius {
            ensure(r.status == RunStatus::Converged && r.total_iterations() <= 20_000, || {
                format!("{} {}: {} after {}", c.problem.name, c.variant, r.status, r.total_iterations())
            })?;
            let refs = r.reference_sequence();
            ensure(refs.windows(2).all(|w| w[1] <= w[0]), || {
                format!("{} {}: reference sequence increased", c.problem.name, c.variant)
            })?;
        }
        lines.push(format!("{}/{}={}", short(&c.problem.name), c.variant, r.total_iterations()));
    }
    ensure(elapsed < 300.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("iterations {}; {elapsed:.1} s", lines.join(" ")))
}

fn short(name: &str) -> &str {
    match name {
        "white_holst" => "WH",
        "perturbed_tridiagonal_quadratic" => "PTQ",
        other => other,
    }
}

fn c7_ablation(results: &[CellResult]) -> Check {
    let find = |label: &str| {
        results
            .iter()
            .find(|c| c.problem.name == "white_holst" && c.variant.label() == label)
            .map(|c| c.report.total_iterations())
            .ok_or_else(|| format!("missing run {label}"))
    };
    let (refined, classic) = (find("rbbtr")?, find("rbbtr*")?);
    let ok = refined <= classic || (refined as f64) <= 1.1 * classic as f64;
    ensure(ok, || format!("refined {refined} vs classic {classic} iterations"))?;
    Ok(format!("white_holst(5000): refined radius {refined}, classic radius {classic} iterations"))
}

fn c8_tdesign() -> Check {
    let mut parts = Vec::new();
    for v in [Variant::Rbbtr, Variant::Rbbtre] {
        let started = Instant::now();
        let mut opts = TdesignOptions::new(10, VariantSpec::new(v));
        opts.n = Some(121);
        opts.init = Init::Extremal { seed: 1 };
        let out = tdesign_run(&opts, None).map_err(|e| e.to_string())?;
        let el = within_time(started, 60.0)?;
        let (r, c) = (&out.report, &out.certificate);
        ensure(r.converged() && r.total_iterations() <= 10_000, || format!("{v}: {} after {}", r.status, r.total_iterations()))?;
        ensure(c.objective_value <= 1e-12, || format!("{v}: A = {:e}", c.objective_value))?;
        ensure((1.0..=1.6).contains(&c.min_singular_value), || {
            format!("{v}: min σ = {}", c.min_singular_value)
        })?;
        parts.push(format!(
            "{v}: iter {} A {:.2e} |grad| {:.2e} σ {:.4} design {} ({el:.1} s)",
            r.total_iterations(),
            c.objective_value,
            c.gradient_norm,
            c.min_singular_value,
            c.is_design
        ));
    }
    Ok(format!("spiral(seed 1) + log-det refinement; {}", parts.join("; ")))
}

fn c9_known_designs() -> Check {
    let started = Instant::now();
    let p = [0.36, -0.48, 0.8];
    let pair = PointSet::new(vec![p, [-p[0], -p[1], -p[2]]], 1).map_err(|e| e.to_string())?;
    let a2 = ant_value(&pair);
    ensure(a2 <= 1e-14, || format!("antipodal pair A = {a2:e}"))?;
    let mut oct = Vec::new();
    for k in 0..3 {
        for sgn in [1.0, -1.0] {
            let mut v = [0.0; 3];
            v[k] = sgn;
            oct.push(v);
        }
    }
    let oct = PointSet::new(oct, 3).map_err(|e| e.to_string())?;
    let a6 = ant_value(&oct);
    ensure(a6 <= 1e-12, || format!("octahedron A = {a6:e}"))?;
    let el = within_time(started, 1.0)?;
    Ok(format!("A(2,1) = {a2:.1e}, A(6,3) = {a6:.1e}, {el:.3} s"))
}

fn c10_dual_form() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let t = 1 + i % 12;
        let n = rng.gen_range(1..=144);
        let x = PointSet::new(random_unit_points(&mut rng, n), t).map_err(|e| e.to_string())?;
        let (a, b) = (ant_value(&x), ant_value_harmonic(&x));
        let rel = (a - b).abs() / a.abs().max(b.abs());
        ensure(rel <= 1e-9, || format!("t = {t}, N = {n}: {a:e} vs {b:e}"))?;
        worst = worst.max(rel);
    }
    let el = within_time(started, 60.0)?;
    Ok(format!("100 sets, t ≤ 12, N ≤ 144, worst relative difference {worst:.2e}, {el:.2} s"))
}

fn benchmark_matrix() -> RunMatrix {
    let problems = standard_suite(&[1000])
        .expect("valid suite")
        .iter()
        .map(|p| ProblemSpec { name: p.kind().name().into(), n: p.dimension() })
        .collect();
    RunMatrix::new(problems, VariantSpec::all())
}

fn run_bench_cli(matrix: &Path, out: &Path) -> Result<PathBuf, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_rbbtr"))
        .args(["bench", "--matrix"])
        .arg(matrix)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    Ok(out.join(RESULTS_FILE))
}

fn c11_profiles(csv: &Path) -> Check {
    let hand = performance_profile(
        &["A".to_string(), "B".to_string()],
        &[vec![1.0, 2.0], vec![4.0, 2.0]],
    )
    .map_err(|e| e.to_string())?;
    let (a, b) = (&hand.curves[0], &hand.curves[1]);
    ensure(
        a.value_at(1.0) == 0.5 && b.value_at(1.0) == 0.5 && a.value_at(2.0) == 1.0 && b.value_at(2.0) == 1.0,
        || "hand example mismatch".to_string(),
    )?;
    let rows = read_csv(csv).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for metric in [Metric::Time, Metric::Iterations, Metric::Gnorm] {
        let prof = profile_from_rows(&rows, metric).map_err(|e| e.to_string())?;
        for c in &prof.curves {
            let mut prev = 0.0;
            let mut last_w = 0.0;
            for &(w, v) in &c.breakpoints {
                ensure(w >= last_w && v >= prev && (0.0..=1.0).contains(&v), || {
                    format!("{metric} {}: non-monotone or out of range at ω = {w}", c.solver)
                })?;
                prev = v;
                last_w = w;
            }
            let solved = rows.iter().filter(|r| r.variant == c.solver && r.converged()).count();
            let solved_used = solved as f64 / prof.problems_used as f64;
            // A zero best gradient norm makes every other ratio infinite, so only
            // the upper bound holds for that metric.
            let ok = match metric {
                Metric::Gnorm => c.terminal() <= solved_used + 1e-12,
                _ => (c.terminal() - solved_used).abs() < 1e-12,
            };
            ensure(ok || !prof.excluded.is_empty(), || {
                format!("{metric} {}: terminal {} vs solved fraction {solved_used}", c.solver, c.terminal())
            })?;
        }
        if metric == Metric::Iterations {
            let best = prof
                .curves
                .iter()
                .map(|c| format!("{}={:.2}", c.solver, c.value_at(1.0)))
                .collect::<Vec<_>>()
                .join(" ");
            summary.push(format!("ρ(1) by iterations: {best}"));
        }
    }
    let failures = rows.iter().filter(|r| !r.converged()).count();
    Ok(format!(
        "hand example exact; {} rows ({failures} unconverged), curves monotone and bounded for time/iter/gnorm; {}",
        rows.len(),
        summary.join("")
    ))
}

fn strip_time(path: &Path) -> Result<Vec<String>, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = header.iter().position(|h| *h == "time_s").ok_or("no time_s column")?;
    Ok(text
        .lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(i, _)| *i != col)
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect())
}

fn c12_determinism(first: &Path, second: &Path) -> Check {
    let (a, b) = (strip_time(first)?, strip_time(second)?);
    ensure(a.len() == b.len(), || format!("{} vs {} lines", a.len(), b.len()))?;
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        ensure(x == y, || format!("line {} differs:\n  {x}\n  {y}", i + 1))?;
    }
    Ok(format!("two bench executions, {} data rows identical apart from time_s", a.len() - 1))
}

struct Line {
    id: usize,
    name: &'static str,
    result: Check,
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn main() {
    let mut lines = Vec::new();
    let mut push = |id, name, f: &mut dyn FnMut() -> Check| {
        let result = guarded(f);
        let tag = if result.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &result {
            Ok(s) | Err(s) => s.clone(),
        };
        println!("acceptance {id:>2} {tag}  {name}: {detail}");
        lines.push(Line { id, name, result });
    };

    push(1, "step-size sandwich", &mut c1_sandwich);
    push(2, "τ-monotonicity", &mut c2_tau_monotone);
    push(3, "subproblem vs grid oracle", &mut c3_subproblem_grid);
    push(4, "Pred lower bound", &mut c4_pred_bound);
    push(5, "gradient checks", &mut c5_gradient_checks);

    let started = Instant::now();
    let desk = catch_unwind(|| run_matrix(&desk_matrix()))
        .map_err(|_| "desk runs panicked".to_string())
        .and_then(|r| r.map_err(|e| e.to_string()));
    let desk_time = started.elapsed().as_secs_f64();
    push(6, "large-scale desk runs", &mut || c6_desk_runs(desk.as_ref().map_err(Clone::clone)?, desk_time));
    push(7, "radius-rule ablation", &mut || c7_ablation(desk.as_ref().map_err(Clone::clone)?));

    push(8, "t-design t = 10, N = 121", &mut c8_tdesign);
    push(9, "known designs", &mut c9_known_designs);
    push(10, "dual-form equality", &mut c10_dual_form);

    let dir = tempfile::tempdir().expect("temporary directory");
    let matrix_path = dir.path().join("matrix.json");
    let bench = guarded(|| {
        let json = serde_json::to_string_pretty(&benchmark_matrix()).map_err(|e| e.to_string())?;
        fs::write(&matrix_path, json).map_err(|e| e.to_string())?;
        Ok(String::new())
    })
    .and_then(|_| {
        let a = run_bench_cli(&matrix_path, &dir.path().join("run1"))?;
        let b = run_bench_cli(&matrix_path, &dir.path().join("run2"))?;
        Ok((a, b))
    });
    push(11, "performance profiles", &mut || {
        let (a, _) = bench.as_ref().map_err(Clone::clone)?;
        c11_profiles(a)
    });
    push(12, "bench determinism", &mut || {
        let (a, b) = bench.as_ref().map_err(Clone::clone)?;
        c12_determinism(a, b)
    });

    let failed: Vec<_> = lines.iter().filter(|l| l.result.is_err()).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        lines.len() - failed.len(),
        lines.len()
    );
    for l in &failed {
        println!("  failed {} ({})", l.id, l.name);
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
