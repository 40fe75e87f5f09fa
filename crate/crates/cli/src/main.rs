use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use topotraj::gradcheck::{gradient_check, GradcheckOptions};
use topotraj::scenario::{
    export_trajectories, pair_samples, read_trajectory_csv, render_paths_svg, render_samples_svg,
    Scenario,
};
use topotraj::solver::{
    decode_trajectories, initialize, initialize_seeded, optimize_from, OptimizationReport,
    Schedule, SolverOptions,
};
use topotraj::topology::{classify_samples, Interaction, CLASSIFY_THRESHOLD};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_OPTIMIZATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "topotraj",
    version,
    about = "Multi-vehicle trajectory optimization with selectable passing topology"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scenario and write trajectories.csv, paths.svg and report.json.
    Optimize(OptimizeArgs),
    /// Optimize every scenario file in a directory and write one metrics row per scenario.
    Benchmark(BenchmarkArgs),
    /// Report the passing direction of two vehicles in an exported trajectory CSV.
    ///
    /// Works on the sampled states directly: the key point is the closest
    /// sample pair refined by a parabola, so M is only as precise as the
    /// 100 Hz sampling and values near the threshold may flip.
    Classify(ClassifyArgs),
    /// Compare analytic and finite-difference gradients of every cost family.
    Gradcheck(GradcheckArgs),
    /// Draw a scenario with either exported trajectories or the initial guess.
    Render(RenderArgs),
}

#[derive(Args)]
struct InitArgs {
    /// Perturb the initial waypoints with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Half-width of the uniform waypoint perturbation in metres (used with --seed).
    #[arg(long, default_value_t = 0.25)]
    jitter: f64,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Stop after the collision-free topology stage; the collision audit is skipped.
    #[arg(long)]
    stage_one_only: bool,
    /// Replace every vehicle-pair label: clockwise, counterclockwise or none.
    #[arg(long)]
    pattern: Option<String>,
    /// Use the cubic topology hinge instead of the linear one.
    #[arg(long)]
    cubic_hinge: bool,
    #[command(flatten)]
    init: InitArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Directory of scenario files (*.toml).
    #[arg(long)]
    suite: PathBuf,
    /// Runs per scenario; metrics are averaged, all runs start from the same initial guess.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    init: InitArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Trajectory CSV as written by `optimize`.
    #[arg(long)]
    traj: PathBuf,
    /// Vehicle ids as `a,b`.
    #[arg(long)]
    pair: String,
    /// |M| below this is reported as `none` (m²/s).
    #[arg(long, default_value_t = CLASSIFY_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Number of random decision vectors.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Seed of the random decision vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RenderArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output SVG file.
    #[arg(long)]
    out: PathBuf,
    /// Trajectory CSV to draw; the initial guess is drawn otherwise.
    #[arg(long)]
    traj: Option<PathBuf>,
    #[command(flatten)]
    init: InitArgs,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CmdResult = Result<u8, Failure>;

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_file(path)
        .with_context(|| format!("cannot load scenario {}", path.display()))
        .map_err(fail(EXIT_USAGE))
}

fn initial_guess(scenario: &Scenario, init: &InitArgs) -> anyhow::Result<Vec<f64>> {
    Ok(match init.seed {
        Some(seed) => initialize_seeded(scenario, seed, init.jitter)?,
        None => initialize(scenario)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(args) => optimize(args),
        Command::Benchmark(args) => benchmark(args),
        Command::Classify(args) => classify(args),
        Command::Gradcheck(args) => gradcheck(args),
        Command::Render(args) => render(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn print_report(report: &OptimizationReport) {
    for stage in &report.stages {
        println!(
            "stage {}: {} iterations, {:?}, cost {:.6}",
            stage.name, stage.iterations, stage.termination, stage.final_cost
        );
    }
    for p in &report.pairs {
        println!(
            "{}-{}: requested {}, M = {:.6}, t* = {:.3}, distance {:.3} m{}",
            p.a,
            p.b,
            p.interaction,
            p.metric,
            p.t_star,
            p.distance,
            if p.satisfied { "" } else { "  VIOLATED" }
        );
    }
    let constrained: Vec<_> = report.pairs.iter().filter(|p| p.eta != 0).collect();
    println!(
        "pairs satisfied: {}/{}",
        constrained.iter().filter(|p| p.satisfied).count(),
        constrained.len()
    );
    let f = &report.feasibility;
    println!(
        "max speed {:.4} m/s, max acceleration {:.4} m/s², min distance {:.4} m{}",
        f.max_speed,
        f.max_acceleration,
        f.min_pairwise_distance,
        if f.collision_checked {
            ""
        } else {
            " (collision audit skipped)"
        }
    );
    println!(
        "travel distance {:.3} m, travel duration {:.3} s, computation {:.1} ms",
        report.metrics.total_travel_distance,
        report.metrics.total_travel_duration,
        report.metrics.computation_ms
    );
}

fn optimize(args: OptimizeArgs) -> CmdResult {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(label) = &args.pattern {
        let label = Interaction::parse(label)
            .ok_or_else(|| anyhow!("unknown pattern label `{label}`"))
            .map_err(fail(EXIT_USAGE))?;
        scenario = scenario.with_uniform_vehicle_pattern(label);
    }
    let x0 = initial_guess(&scenario, &args.init).map_err(fail(EXIT_OPTIMIZATION))?;
    let opts = SolverOptions {
        schedule: if args.stage_one_only {
            Schedule::StageOneOnly
        } else {
            Schedule::TwoStage
        },
        cubic_hinge: args.cubic_hinge,
        ..Default::default()
    };
    let solution =
        optimize_from(&scenario, &x0, &opts).map_err(|e| fail(EXIT_OPTIMIZATION)(e.into()))?;
    let report = &solution.report;

    let write = || -> anyhow::Result<()> {
        fs::create_dir_all(&args.out)
            .with_context(|| format!("cannot create {}", args.out.display()))?;
        let ids: Vec<String> = scenario.vehicles.iter().map(|v| v.id.clone()).collect();
        export_trajectories(
            &ids,
            &solution.trajectories,
            args.out.join("trajectories.csv"),
        )?;
        fs::write(
            args.out.join("paths.svg"),
            render_paths_svg(&scenario, &solution.trajectories),
        )?;
        fs::write(
            args.out.join("report.json"),
            serde_json::to_string_pretty(report)? + "\n",
        )?;
        Ok(())
    };
    write().map_err(fail(EXIT_CHECK_FAILED))?;
    print_report(report);
    if report.success() {
        Ok(0)
    } else {
        eprintln!("requested interactions or limits are not met");
        Ok(EXIT_OPTIMIZATION)
    }
}

struct BenchRow {
    scenario: String,
    vehicles: usize,
    success: bool,
    computation_ms: f64,
    travel_distance: f64,
    travel_duration: f64,
    max_duration: f64,
    min_pairwise_distance: f64,
}

fn bench_one(path: &Path, repeats: usize, init: &InitArgs) -> anyhow::Result<BenchRow> {
    let scenario = Scenario::from_file(path)?;
    let x0 = initial_guess(&scenario, init)?;
    let opts = SolverOptions::default();
    let mut sum = [0.0; 5];
    let mut success = true;
    for _ in 0..repeats {
        let sol = optimize_from(&scenario, &x0, &opts)?;
        let m = &sol.report.metrics;
        success &= sol.report.success();
        for (acc, v) in sum.iter_mut().zip([
            m.computation_ms,
            m.total_travel_distance,
            m.total_travel_duration,
            m.max_duration,
            m.min_pairwise_distance,
        ]) {
            *acc += v;
        }
    }
    let mean = sum.map(|v| v / repeats as f64);
    Ok(BenchRow {
        scenario: scenario.name,
        vehicles: scenario.vehicles.len(),
        success,
        computation_ms: mean[0],
        travel_distance: mean[1],
        travel_duration: mean[2],
        max_duration: mean[3],
        min_pairwise_distance: mean[4],
    })
}

fn benchmark(args: BenchmarkArgs) -> CmdResult {
    if args.repeats == 0 {
        return Err(fail(EXIT_USAGE)(anyhow!("--repeats must be at least 1")));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&args.suite)
        .with_context(|| format!("cannot read suite {}", args.suite.display()))
        .map_err(fail(EXIT_USAGE))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(fail(EXIT_USAGE)(anyhow!(
            "no scenario files in {}",
            args.suite.display()
        )));
    }

    let mut csv = String::from(
        "scenario,vehicles,repeats,success,computation_ms,travel_distance,travel_duration,max_duration,min_pairwise_distance\n",
    );
    let mut any_success = false;
    for path in &files {
        match bench_one(path, args.repeats, &args.init) {
            Ok(r) => {
                any_success |= r.success;
                println!(
                    "{}: {} ({:.1} ms, {:.3} m, {:.3} s)",
                    r.scenario,
                    if r.success { "ok" } else { "failed" },
                    r.computation_ms,
                    r.travel_distance,
                    r.travel_duration
                );
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.scenario,
                    r.vehicles,
                    args.repeats,
                    r.success,
                    r.computation_ms,
                    r.travel_distance,
                    r.travel_duration,
                    r.max_duration,
                    r.min_pairwise_distance
                ));
            }
            Err(e) => {
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                eprintln!("{name}: {e:#}");
                csv.push_str(&format!("{name},0,{},false,,,,,\n", args.repeats));
            }
        }
    }
    fs::write(&args.out, csv)
        .with_context(|| format!("cannot write {}", args.out.display()))
        .map_err(fail(EXIT_CHECK_FAILED))?;
    Ok(if any_success { 0 } else { EXIT_OPTIMIZATION })
}

fn classify(args: ClassifyArgs) -> CmdResult {
    let (a, b) = args
        .pair
        .split_once(',')
        .map(|(a, b)| (a.trim(), b.trim()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| anyhow!("--pair expects `a,b`"))
        .map_err(fail(EXIT_USAGE))?;
    let text = fs::read_to_string(&args.traj)
        .with_context(|| format!("cannot read {}", args.traj.display()))
        .map_err(fail(EXIT_USAGE))?;
    let rows = read_trajectory_csv(&text).map_err(|e| fail(EXIT_USAGE)(e.into()))?;
    let samples = pair_samples(&rows, a, b).map_err(|e| fail(EXIT_USAGE)(e.into()))?;
    let (label, m, t) =
        classify_samples(&samples, args.threshold).map_err(|e| fail(EXIT_USAGE)(e.into()))?;
    println!("{label}");
    println!("M = {m}");
    println!("t* = {t}");
    Ok(0)
}

fn gradcheck(args: GradcheckArgs) -> CmdResult {
    if args.samples == 0 {
        return Err(fail(EXIT_USAGE)(anyhow!("--samples must be at least 1")));
    }
    if !(args.tol > 0.0) {
        return Err(fail(EXIT_USAGE)(anyhow!("--tol must be positive")));
    }
    let scenario = load_scenario(&args.scenario)?;
    let opts = GradcheckOptions {
        samples: args.samples,
        tolerance: args.tol,
        seed: args.seed,
        ..Default::default()
    };
    let report = gradient_check(&scenario, &opts).map_err(|e| fail(EXIT_CHECK_FAILED)(e.into()))?;
    for f in &report.families {
        println!(
            "{:<12} worst relative error {:.3e} ({} active samples)",
            f.family.name(),
            f.worst_relative_error,
            f.active_samples
        );
    }
    println!("resampled draws: {}", report.resampled);
    println!(
        "worst {:.3e} vs tolerance {:.1e}: {}",
        report.worst_relative_error,
        report.tolerance,
        if report.passed { "pass" } else { "fail" }
    );
    Ok(if report.passed { 0 } else { EXIT_CHECK_FAILED })
}

fn render(args: RenderArgs) -> CmdResult {
    let scenario = load_scenario(&args.scenario)?;
    let svg = match &args.traj {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))
                .map_err(fail(EXIT_USAGE))?;
            let rows = read_trajectory_csv(&text).map_err(|e| fail(EXIT_USAGE)(e.into()))?;
            render_samples_svg(&scenario, &rows)
        }
        None => {
            let x0 = initial_guess(&scenario, &args.init).map_err(fail(EXIT_OPTIMIZATION))?;
            let trajs = decode_trajectories(&scenario, &x0)
                .map_err(|e| fail(EXIT_OPTIMIZATION)(e.into()))?;
            render_paths_svg(&scenario, &trajs)
        }
    };
    fs::write(&args.out, svg)
        .with_context(|| format!("cannot write {}", args.out.display()))
        .map_err(fail(EXIT_CHECK_FAILED))?;
    Ok(0)
}
