use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use priocoord::coordination::PairRelation;
use priocoord::planner::Trajectory;
use priocoord::simulator::{
    run_cell, sweep_with, DensitySummary, RunMetrics, RunOptions, RunResult, ScenarioConfig, Setup,
};
use priocoord::verify::{observe_all, relation_respects, trajectory_collision_free};
use priocoord::PriorityGraph;
use serde::Serialize;

mod trace;

use trace::{read_priorities, read_trace, scenario_fingerprint, sha256_hex, write_priorities, write_trace};

#[derive(Parser)]
#[command(name = "priocoord", version, about = "Priority-based intersection coordination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one density and seed, writing the trace and metrics.
    Run {
        scenario: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Check geometry and the safety invariant every step.
        #[arg(long)]
        verify: bool,
        /// Exit with status 1 on deadlock.
        #[arg(long)]
        strict: bool,
        /// Overrides the first seed of the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the first density of the scenario, in percent.
        #[arg(long)]
        density: Option<f64>,
        /// Significant digits of trace numbers.
        #[arg(long, default_value_t = 17, value_parser = clap::value_parser!(u8).range(1..=17))]
        format: u8,
    },
    /// Run every density and seed of the scenario and write aggregates.
    Sweep {
        scenario: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
        /// Replaces the scenario's seeds with this one.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-verify a trace written by `run` against its scenario.
    Check {
        trace: PathBuf,
        scenario: PathBuf,
        /// Priority edges; defaults to priorities.csv next to the trace.
        #[arg(long)]
        priorities: Option<PathBuf>,
    },
}

/// Exit status 2: bad input. Status 1: the run itself went wrong.
enum Failure {
    Input(String),
    Violation(String),
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Input(format!("{}: {e}", path.display()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, verify, strict, seed, density, format } => {
            cmd_run(&scenario, &out, verify, strict, seed, density, format as usize)
        }
        Command::Sweep { scenario, out, strict, seed } => cmd_sweep(&scenario, &out, strict, seed),
        Command::Check { trace, scenario, priorities } => cmd_check(&trace, &scenario, priorities.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<(ScenarioConfig, Setup), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let cfg = ScenarioConfig::from_toml(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let setup = cfg.build().map_err(|e| Failure::Input(e.to_string()))?;
    Ok((cfg, setup))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::io(&path, e))
}

#[derive(Serialize)]
struct RunReport<'a> {
    scenario_sha256: String,
    trace_sha256: String,
    violations: &'a [String],
    metrics: &'a RunMetrics,
}

fn robots_csv(res: &RunResult, dt: f64) -> String {
    let mut out = String::from("id,lane,spawn_step,exit_time,ideal_time,increase_percent\n");
    for r in &res.robots {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:?}"));
        out.push_str(&format!(
            "{},{},{},{},{:?},{}\n",
            r.id,
            r.lane,
            r.spawn_step,
            opt(r.exit_time),
            r.ideal_time,
            opt(r.increase_percent(dt))
        ));
    }
    out
}

fn problems(m: &RunMetrics) -> Option<String> {
    (m.collisions + m.invariant_failures + m.priority_mismatches > 0).then(|| {
        format!(
            "{} collisions, {} invariant failures, {} priority mismatches",
            m.collisions, m.invariant_failures, m.priority_mismatches
        )
    })
}

fn cmd_run(
    scenario: &Path,
    out: &Path,
    verify: bool,
    strict: bool,
    seed: Option<u64>,
    density: Option<f64>,
    digits: usize,
) -> Result<(), Failure> {
    let (cfg, setup) = load(scenario)?;
    let density = density.or(cfg.sweep.densities.first().copied()).ok_or(Failure::Input("no density given".into()))?;
    if !(density > 0.0 && density <= 100.0) {
        return Err(Failure::Input(format!("density {density} outside (0, 100]")));
    }
    let seed = seed.or(cfg.sweep.seeds.first().copied()).ok_or(Failure::Input("no seed given".into()))?;
    let opts = RunOptions { verify, record_trace: true };
    let res = run_cell(&setup, density, seed, cfg.sweep.robots, cfg.sweep.horizon, opts);

    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let fingerprint = scenario_fingerprint(&cfg);
    let trace = write_trace(res.trace.as_ref().expect("trace recorded"), &fingerprint, digits);
    write(out, "trace.csv", &trace)?;
    write(out, "priorities.csv", &write_priorities(&res.priorities))?;
    write(out, "robots.csv", &robots_csv(&res, setup.planner.dt))?;
    let report = RunReport {
        scenario_sha256: fingerprint,
        trace_sha256: sha256_hex(trace.as_bytes()),
        violations: &res.violations,
        metrics: &res.metrics,
    };
    write(out, "metrics.toml", &toml::to_string(&report).expect("report serializes"))?;

    let m = &res.metrics;
    println!(
        "density {density}% seed {seed}: {} steps, {}/{} robots done, mean increase {:.3}%",
        m.steps, m.completed, m.spawned, m.mean_increase
    );
    for v in &res.violations {
        eprintln!("{v}");
    }
    if let Some(p) = problems(m) {
        return Err(Failure::Violation(p));
    }
    match m.deadlock_step {
        Some(k) if strict => Err(Failure::Violation(format!("deadlock detected at step {k}"))),
        Some(k) => {
            eprintln!("warning: deadlock detected at step {k}");
            Ok(())
        }
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct SweepReport<'a> {
    scenario_sha256: String,
    density: &'a [DensitySummary],
    run: Vec<&'a RunMetrics>,
}

fn sweep_csv(summaries: &[DensitySummary]) -> String {
    let mut out = String::from(
        "density,runs,achieved_density,mean_increase,std_increase,completed,deadlocks,collisions,\
         invariant_failures,priority_mismatches,truncated\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{:?},{},{:?},{:?},{:?},{},{},{},{},{},{}\n",
            s.density,
            s.runs,
            s.achieved_density,
            s.mean_increase,
            s.std_increase,
            s.completed,
            s.deadlocks,
            s.collisions,
            s.invariant_failures,
            s.priority_mismatches,
            s.truncated
        ));
    }
    out
}

fn cmd_sweep(scenario: &Path, out: &Path, strict: bool, seed: Option<u64>) -> Result<(), Failure> {
    let (mut cfg, setup) = load(scenario)?;
    if let Some(s) = seed {
        cfg.sweep.seeds = vec![s];
    }
    let res = sweep_with(&cfg, &setup, false);
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    write(out, "sweep.csv", &sweep_csv(&res.summaries))?;
    let report = SweepReport {
        scenario_sha256: scenario_fingerprint(&cfg),
        density: &res.summaries,
        run: res.runs.iter().map(|r| &r.metrics).collect(),
    };
    write(out, "metrics.toml", &toml::to_string(&report).expect("report serializes"))?;

    for s in &res.summaries {
        println!(
            "density {:>5}%: achieved {:.2}%, increase {:.3}% ± {:.3}, deadlocks {}/{}",
            s.density, s.achieved_density, s.mean_increase, s.std_increase, s.deadlocks, s.runs
        );
    }
    for r in &res.runs {
        for v in &r.violations {
            eprintln!("density {} seed {}: {v}", r.metrics.density, r.metrics.seed);
        }
        if let Some(p) = problems(&r.metrics) {
            return Err(Failure::Violation(format!("density {} seed {}: {p}", r.metrics.density, r.metrics.seed)));
        }
    }
    let deadlocks: usize = res.summaries.iter().map(|s| s.deadlocks).sum();
    if strict && deadlocks > 0 {
        return Err(Failure::Violation(format!("{deadlocks} runs deadlocked")));
    }
    Ok(())
}

/// Robots present in two consecutive states must have moved as their
/// decision says.
fn consistency(traj: &Trajectory) -> Vec<String> {
    let mut out = Vec::new();
    for (k, (s, d)) in traj.states.iter().zip(&traj.decisions).enumerate() {
        let next = &traj.states[k + 1];
        for (r, d) in s.robots().iter().zip(d) {
            let Some(n) = next.get(r.id) else { continue };
            let want = d.apply(r, traj.dt);
            if (n.state.x - want.x).abs() > 1e-9 || (n.state.v - want.v).abs() > 1e-9 {
                out.push(format!(
                    "step {}: robot {} at ({}, {}), expected ({}, {})",
                    k + 1,
                    r.id,
                    n.state.x,
                    n.state.v,
                    want.x,
                    want.v
                ));
            }
        }
    }
    out
}

fn cmd_check(trace_path: &Path, scenario: &Path, priorities: Option<&Path>) -> Result<(), Failure> {
    let (cfg, setup) = load(scenario)?;
    let text = fs::read_to_string(trace_path).map_err(|e| Failure::io(trace_path, e))?;
    let traj = read_trace(&text, &scenario_fingerprint(&cfg), setup.model)
        .map_err(|e| Failure::Input(format!("{}: {e}", trace_path.display())))?;
    if let Some(r) = traj.states.iter().flat_map(|s| s.robots()).find(|r| r.lane >= setup.layout.len()) {
        return Err(Failure::Input(format!(
            "robot {} on lane {} of a {}-lane layout",
            r.id,
            r.lane,
            setup.layout.len()
        )));
    }

    let mut found = consistency(&traj);
    if let Err(v) = trajectory_collision_free(&traj, &setup.layout, setup.radius, setup.planner.sub_dt / 4.0) {
        found.push(v.to_string());
    }
    let prio_path = priorities.map(Path::to_path_buf).unwrap_or_else(|| trace_path.with_file_name("priorities.csv"));
    let mut pairs = 0;
    if prio_path.exists() {
        let text = fs::read_to_string(&prio_path).map_err(|e| Failure::io(&prio_path, e))?;
        let edges = read_priorities(&text).map_err(|e| Failure::Input(format!("{}: {e}", prio_path.display())))?;
        let mut g = PriorityGraph::new();
        for (h, l) in edges {
            // the same pair may be listed by both of its robots
            if !g.has_edge(h, l) {
                g.add_edge(h, l).map_err(|e| Failure::Input(e.to_string()))?;
            }
        }
        let obs = observe_all(&traj.states, &setup.table);
        for ((a, b), rel) in obs.relations() {
            if !matches!(rel, PairRelation::Unconstrained) {
                pairs += 1;
            }
            if !relation_respects(rel, &g) {
                found.push(format!("robots {a} and {b}: {rel:?} contradicts the assigned priorities"));
            }
        }
    } else if priorities.is_some() {
        return Err(Failure::io(&prio_path, std::io::ErrorKind::NotFound.into()));
    }

    if found.is_empty() {
        println!("ok: {} steps, {pairs} constrained pairs", traj.steps());
        Ok(())
    } else {
        for f in &found {
            eprintln!("{f}");
        }
        Err(Failure::Violation(format!("{} violations", found.len())))
    }
}
