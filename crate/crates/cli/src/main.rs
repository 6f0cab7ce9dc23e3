//! `decouple`: run scenarios, sweeps, automated experiments and the live
//! session service.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use decouple_core::dynamics::TraceWriter;
use decouple_core::experiment::{
    run_interleaved_staircases, run_push_trial, run_sorting_batch, write_trials_csv, Manifest, ObserverModel, PeakTracker, Report,
};
use decouple_core::scenario::{parse_length, parse_list, parse_mass, Scenario, Trajectory};
use decouple_core::{Condition, Error};
use decouple_session::{Pacing, ServerConfig, SessionConfig};

#[derive(Parser, Debug)]
#[command(name = "decouple", version, about = "Pseudo-haptic decoupling simulator and experiment harness")]
struct Cli {
    /// Directory for CSV, report and manifest files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play a trajectory through a scenario.
    Simulate(SimulateArgs),
    /// Automated mass-sorting trials with the synthetic observer.
    Sort(SortArgs),
    /// Interleaved staircases with the synthetic observer.
    Staircase(StaircaseArgs),
    /// Vary one parameter and measure a metric.
    Sweep(SweepArgs),
    /// Serve live sessions over WebSocket.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    scenario: PathBuf,
    /// Trajectory JSON; defaults to the scenario's own trajectory.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Per-step CSV trace, one row per body per step.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Override the scenario condition.
    #[arg(long)]
    condition: Option<Condition>,
}

#[derive(Args, Debug)]
struct SortArgs {
    #[arg(long, default_value = "C2")]
    condition: Condition,
    /// Cube masses, e.g. 15g,200g,800g.
    #[arg(long, default_value = "15g,200g,800g")]
    masses: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Observer, e.g. floor=1mm,weber=0.2,noise=0.1.
    #[arg(long, default_value = "")]
    observer: String,
    /// Base scenario JSON.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StaircaseArgs {
    /// Reference masses, e.g. 15g,200g,800g.
    #[arg(long, default_value = "15g,200g,800g")]
    references: String,
    #[arg(long, default_value = "")]
    observer: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    /// Linear stiffness, N/m.
    K,
    /// Torsional stiffness, N*m/rad.
    Kappa,
    /// Clone mass (g/kg suffixes).
    CloneMass,
    /// Friction coefficient.
    Friction,
    /// Push distance (mm/cm/m suffixes).
    PushDistance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    /// Peak decoupling per cube during a standard push, C2.
    PeakDisplacement,
    /// Sorting success rate with the observer, C2.
    SortingSuccess,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    param: SweepParam,
    /// `a..b` (evenly spaced, see --points) or a list `a,b,c`.
    #[arg(long)]
    values: String,
    /// Number of values for a range.
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long, value_enum, default_value = "peak-displacement")]
    metric: Metric,
    /// Trials per value for sorting-success.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "")]
    observer: String,
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: std::net::SocketAddr,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Static UI files served at `/`.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Per-session result files; defaults to --out.
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// World-state messages per second.
    #[arg(long, default_value_t = 60.0)]
    stream_rate: f64,
    /// Pose smoothing time constant, e.g. 20ms or 0.02.
    #[arg(long)]
    smoothing: Option<String>,
    #[arg(long, value_enum, default_value = "realtime")]
    pacing: PacingArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PacingArg {
    Realtime,
    ClientClock,
}

#[derive(Debug)]
enum CliError {
    /// Bad input: exit 2.
    Usage(String),
    /// Anything else: exit 1.
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_user_error() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Simulate(a) => simulate(&cli.out, a),
        Command::Sort(a) => sort(&cli.out, a),
        Command::Staircase(a) => staircase(&cli.out, a),
        Command::Sweep(a) => sweep(&cli.out, a),
        Command::Serve(a) => serve(&cli.out, a),
    }
}

fn load_scenario(path: Option<&Path>) -> CliResult<Scenario> {
    match path {
        None => Ok(Scenario::default()),
        Some(p) => Scenario::load(p).map_err(|e| match e {
            Error::Io(io) => CliError::Usage(format!("cannot read scenario {}: {io}", p.display())),
            other => other.into(),
        }),
    }
}

fn observer(spec: &str) -> CliResult<ObserverModel> {
    Ok(ObserverModel::parse(spec)?)
}

fn write(out: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> CliResult<()> {
    std::fs::write(out.join(name), contents)?;
    outputs.push(name.to_string());
    Ok(())
}

fn finish(out: &Path, mut manifest: Manifest, outputs: Vec<String>) -> CliResult<()> {
    manifest.outputs = outputs;
    std::fs::write(out.join("manifest.json"), manifest.to_json()?)?;
    Ok(())
}

fn simulate(out: &Path, a: SimulateArgs) -> CliResult<()> {
    let mut scenario = load_scenario(Some(&a.scenario))?;
    if let Some(c) = a.condition {
        scenario.condition = c;
    }
    let trajectory = match &a.trajectory {
        Some(p) => Trajectory::load(p).map_err(|e| match e {
            Error::Io(io) => CliError::Usage(format!("cannot read trajectory {}: {io}", p.display())),
            other => other.into(),
        })?,
        None => scenario
            .resolve_trajectory()?
            .ok_or_else(|| CliError::Usage("no trajectory: pass --trajectory or add one to the scenario".into()))?,
    };
    let (mut world, ids) = scenario.build_world(trajectory.start())?;
    let mut tracker = PeakTracker::new(ids.clone());
    let mut trace = match &a.trace {
        Some(p) => Some(TraceWriter::new(std::io::BufWriter::new(std::fs::File::create(p)?))?),
        None => None,
    };
    if let Some(t) = trace.as_mut() {
        t.record(&world)?;
    }
    let dt = world.config.timestep;
    let steps = (trajectory.duration() / dt).ceil() as u64 + 1;
    let mut max_decoupling: f64 = 0.0;
    for i in 1..=steps {
        let (pose, _) = trajectory.sample(i as f64 * dt)?;
        world.drive_effector(pose)?;
        let report = world.step(&[])?;
        max_decoupling = max_decoupling.max(report.decoupling);
        tracker.observe(&report);
        if let Some(t) = trace.as_mut() {
            t.record(&world)?;
        }
    }
    if let Some(t) = trace.as_mut() {
        t.flush()?;
    }

    let masses = scenario.cubes.arranged();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["slot", "body", "mass_kg", "peak_signal_m", "final_x_m", "final_y_m", "final_z_m"]).map_err(Error::from)?;
    let mut cubes = Vec::new();
    for (slot, (&id, &mass)) in ids.iter().zip(&masses).enumerate() {
        let p = world.body(id).expect("cube exists").pose.position;
        let peak = tracker.peaks()[slot];
        csv.write_record([slot.to_string(), id.0.to_string(), mass.to_string(), peak.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()])
            .map_err(Error::from)?;
        cubes.push(json!({"slot": slot, "body": id.0, "mass_kg": mass, "peak_signal_m": peak, "final_position": p}));
    }
    let csv = String::from_utf8(csv.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?).expect("utf-8");
    let report = json!({
        "condition": scenario.condition,
        "steps": steps,
        "duration_s": world.time(),
        "max_decoupling_m": max_decoupling,
        "cubes": cubes,
    });
    let mut outputs = Vec::new();
    write(out, "simulate.csv", &csv, &mut outputs)?;
    write(out, "report.json", &(serde_json::to_string_pretty(&report).expect("json") + "\n"), &mut outputs)?;
    if let Some(p) = &a.trace {
        outputs.push(p.display().to_string());
    }
    println!("{} steps, {:.3} s simulated, max |d| {:.6} m", steps, world.time(), max_decoupling);
    for (slot, peak) in tracker.peaks().iter().enumerate() {
        println!("  slot {slot}: {:.1} g, peak {:.6} m", masses[slot] * 1e3, peak);
    }
    let config = json!({"scenario": scenario, "trajectory": trajectory});
    finish(out, Manifest::new("simulate", None, config), outputs)
}

fn sort(out: &Path, a: SortArgs) -> CliResult<()> {
    let mut scenario = load_scenario(a.scenario.as_deref())?;
    scenario.cubes.masses = parse_list(&a.masses, parse_mass)?;
    scenario.validate()?;
    let observer = observer(&a.observer)?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let records = run_sorting_batch(&scenario, &observer, a.condition, a.trials, a.seed)?;
    let report = Report::from_records(&records, Vec::new());
    let mut outputs = Vec::new();
    let mut csv = Vec::new();
    write_trials_csv(&mut csv, &records)?;
    write(out, "trials.csv", std::str::from_utf8(&csv).expect("utf-8"), &mut outputs)?;
    write(out, "report.json", &report.to_json()?, &mut outputs)?;
    for s in &report.sorting {
        println!(
            "{}: {}/{} correct, {} answered, {} don't know",
            s.condition,
            s.correct,
            s.trials,
            s.answered,
            s.trials - s.answered
        );
    }
    let config = json!({"scenario": scenario, "observer": observer, "condition": a.condition, "trials": a.trials});
    finish(out, Manifest::new("sort", Some(a.seed), config), outputs)
}

fn staircase(out: &Path, a: StaircaseArgs) -> CliResult<()> {
    let scenario = load_scenario(a.scenario.as_deref())?;
    let references = parse_list(&a.references, parse_mass)?;
    let observer = observer(&a.observer)?;
    let run = run_interleaved_staircases(&scenario, &references, &observer, a.seed)?;
    let mut outputs = Vec::new();
    let mut csv = Vec::new();
    write_trials_csv(&mut csv, &run.records)?;
    write(out, "trials.csv", std::str::from_utf8(&csv).expect("utf-8"), &mut outputs)?;
    let mut jnd = csv::Writer::from_writer(Vec::new());
    jnd.write_record(["reference_kg", "jnd_kg", "jnd_ratio", "trials", "reversal_differences_kg"]).map_err(Error::from)?;
    for (r, st) in run.results.iter().zip(&run.staircases) {
        let reversals: Vec<String> = r.reversal_differences.iter().map(f64::to_string).collect();
        jnd.write_record([
            r.reference_mass.to_string(),
            r.jnd.to_string(),
            (r.jnd / r.reference_mass).to_string(),
            st.trial_log.len().to_string(),
            reversals.join(";"),
        ])
        .map_err(Error::from)?;
        println!("{:>6.1} g: JND {:.2} g ({:.3} of reference), {} trials", r.reference_mass * 1e3, r.jnd * 1e3, r.jnd / r.reference_mass, st.trial_log.len());
    }
    let jnd = String::from_utf8(jnd.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?).expect("utf-8");
    write(out, "jnd.csv", &jnd, &mut outputs)?;
    let report = Report::from_records(&run.records, run.results.clone());
    write(out, "report.json", &report.to_json()?, &mut outputs)?;
    let config = json!({"scenario": scenario, "observer": observer, "references_kg": references});
    finish(out, Manifest::new("staircase", Some(a.seed), config), outputs)
}

/// `a..b` with `points` evenly spaced values, or `a,b,c`.
fn sweep_values(spec: &str, points: usize, item: impl Fn(&str) -> decouple_core::Result<f64>) -> CliResult<Vec<f64>> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let (lo, hi) = (item(lo)?, item(hi)?);
        return Ok(match points {
            0 => return Err(CliError::Usage("--points must be at least 1".into())),
            1 => vec![lo],
            n => (0..n).map(|i| (lo * (n - 1 - i) as f64 + hi * i as f64) / (n - 1) as f64).collect(),
        });
    }
    let values = parse_list(spec, item)?;
    if values.is_empty() {
        return Err(CliError::Usage("no sweep values given".into()));
    }
    Ok(values)
}

fn plain_number(s: &str) -> decouple_core::Result<f64> {
    s.trim().parse().map_err(|_| Error::InvalidArgument(format!("cannot parse number {s:?}")))
}

fn with_param(base: &Scenario, param: SweepParam, value: f64) -> CliResult<Scenario> {
    let mut s = base.clone();
    match param {
        SweepParam::K => s.decoupling.linear_stiffness = value,
        SweepParam::Kappa => s.decoupling.torsional_stiffness = value,
        SweepParam::CloneMass => s.decoupling.clone_mass = value,
        SweepParam::Friction => s.material.friction = value,
        SweepParam::PushDistance => {
            let mut p = decouple_core::experiment::push_params(&s);
            p.distance = value;
            s.trajectory = Some(decouple_core::scenario::TrajectorySource::Push { params: p });
        }
    }
    s.validate()?;
    Ok(s)
}

fn sweep(out: &Path, a: SweepArgs) -> CliResult<()> {
    let base = load_scenario(a.scenario.as_deref())?;
    let values = match a.param {
        SweepParam::CloneMass => sweep_values(&a.values, a.points, parse_mass)?,
        SweepParam::PushDistance => sweep_values(&a.values, a.points, parse_length)?,
        _ => sweep_values(&a.values, a.points, plain_number)?,
    };
    let observer = observer(&a.observer)?;
    let scenarios = values.iter().map(|&v| with_param(&base, a.param, v)).collect::<CliResult<Vec<_>>>()?;
    let param = a.param.to_possible_value().expect("named").get_name().to_string();

    let mut csv = csv::Writer::from_writer(Vec::new());
    match a.metric {
        Metric::PeakDisplacement => {
            let masses = base.cubes.masses.clone();
            let outcomes = scenarios.par_iter().map(|s| run_push_trial(s, &masses, Condition::Decoupled)).collect::<Result<Vec<_>, _>>()?;
            csv.write_record(["param", "value", "slot", "mass_kg", "peak_displacement_m"]).map_err(Error::from)?;
            for (v, o) in values.iter().zip(&outcomes) {
                for (slot, (m, p)) in masses.iter().zip(&o.peaks).enumerate() {
                    csv.write_record([param.clone(), v.to_string(), slot.to_string(), m.to_string(), p.to_string()]).map_err(Error::from)?;
                }
            }
        }
        Metric::SortingSuccess => {
            if a.trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let reports = scenarios
                .iter()
                .map(|s| run_sorting_batch(s, &observer, Condition::Decoupled, a.trials, a.seed).map(|r| Report::from_records(&r, Vec::new())))
                .collect::<Result<Vec<_>, _>>()?;
            csv.write_record(["param", "value", "trials", "correct", "success_rate"]).map_err(Error::from)?;
            for (v, r) in values.iter().zip(&reports) {
                let s = &r.sorting[0];
                csv.write_record([param.clone(), v.to_string(), s.trials.to_string(), s.correct.to_string(), s.success_rate.to_string()])
                    .map_err(Error::from)?;
            }
        }
    }
    let csv = String::from_utf8(csv.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?).expect("utf-8");
    let mut outputs = Vec::new();
    write(out, "sweep.csv", &csv, &mut outputs)?;
    println!("{} values of {param} written to {}", values.len(), out.join("sweep.csv").display());
    let metric = a.metric.to_possible_value().expect("named").get_name().to_string();
    let config = json!({"scenario": base, "param": param, "values": values, "metric": metric, "observer": observer, "trials": a.trials});
    finish(out, Manifest::new("sweep", Some(a.seed), config), outputs)
}

/// `20ms`, `0.02s` or bare seconds.
fn parse_duration(s: &str) -> CliResult<f64> {
    let t = s.trim();
    let (num, scale) = if let Some(n) = t.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = t.strip_suffix('s') {
        (n, 1.0)
    } else {
        (t, 1.0)
    };
    num.trim().parse::<f64>().map(|v| v * scale).map_err(|_| CliError::Usage(format!("cannot parse duration {s:?}")))
}

fn serve(out: &Path, a: ServeArgs) -> CliResult<()> {
    let scenario = load_scenario(a.scenario.as_deref())?;
    let mut session = SessionConfig::new(scenario);
    session.seed = a.seed;
    session.stream_rate = a.stream_rate;
    session.smoothing = a.smoothing.as_deref().map(parse_duration).transpose()?;
    session.pacing = match a.pacing {
        PacingArg::Realtime => Pacing::Realtime,
        PacingArg::ClientClock => Pacing::ClientClock,
    };
    session.validate()?;
    let results = a.results.unwrap_or_else(|| out.to_path_buf());
    let mut config = ServerConfig::new(session.clone());
    config.assets = a.assets;
    config.results_dir = Some(results.clone());
    let manifest = Manifest::new(
        "serve",
        Some(a.seed),
        json!({
            "scenario": session.scenario,
            "listen": a.listen.to_string(),
            "stream_rate": session.stream_rate,
            "smoothing_s": session.smoothing,
            "pacing": session.pacing,
            "results": results,
        }),
    );
    finish(out, manifest, Vec::new())?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(decouple_session::run_session(a.listen, config)).map_err(|e| match e {
        Error::Io(io) => CliError::Runtime(format!("cannot serve on {}: {io}", a.listen)),
        other => other.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("20ms").unwrap(), 0.02);
        assert_eq!(parse_duration("0.5s").unwrap(), 0.5);
        assert_eq!(parse_duration("2").unwrap(), 2.0);
        assert!(parse_duration("soon").is_err());
    }

    #[test]
    fn sweep_ranges_and_lists() {
        assert_eq!(sweep_values("10..100", 10, plain_number).unwrap(), vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0]);
        assert_eq!(sweep_values("1,2.5", 10, plain_number).unwrap(), vec![1.0, 2.5]);
        assert_eq!(sweep_values("5g..15g", 3, parse_mass).unwrap(), vec![0.005, 0.01, 0.015]);
        assert!(sweep_values("1..2", 0, plain_number).is_err());
        assert!(sweep_values("", 3, plain_number).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
