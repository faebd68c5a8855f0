mod args;
mod run;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use advbound::complex::{count_by_order, ComplexOptions};
use advbound::data::{synth_gaussian, triangle_fixture, SIX_CLASS_MEANS};
use advbound::lp::LpStatus;
use advbound::truncation::{barycenter_bound, mot_bound, TruncationBound};
use advbound::{Error, LabeledPointCloud, Metric};
use anyhow::{bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;

use args::{BoundCmd, Cli, Command, CommonArgs, ComplexCmd, SolveCmd, Solver, SweepCmd, SweepSolver, Synthetic, SynthCmd};
use run::{classify, RunRecord, Runner, EXIT_GUARD, EXIT_INPUT, EXIT_OK};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<Error>())
                .map_or(EXIT_INPUT, |e| classify(e).1);
            ExitCode::from(code)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Complex(cmd) => complex(cmd),
        Command::Solve(cmd) => solve(cmd),
        Command::Sweep(cmd) => sweep(cmd),
        Command::Bound(cmd) => bound(cmd),
        Command::Synth(cmd) => synth(cmd),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn runner<'a>(cloud: &'a LabeledPointCloud, common: &CommonArgs, sinkhorn: args::SinkhornArgs, timing: bool) -> Result<Runner<'a>> {
    let time_limit = match Duration::try_from_secs_f64(common.max_seconds) {
        Ok(d) if !d.is_zero() => d,
        _ => bail!("--max-seconds must be positive and finite, got {}", common.max_seconds),
    };
    if common.threads == 0 {
        bail!("--threads must be at least 1");
    }
    Ok(Runner {
        cloud,
        metric: common.metric,
        complex_options: ComplexOptions {
            max_interactions: common.max_interactions,
            threads: common.threads,
        },
        time_limit,
        sinkhorn,
        timing,
    })
}

#[derive(Serialize)]
struct ComplexSummary {
    epsilon: f64,
    level: usize,
    metric: Metric,
    num_points: usize,
    num_classes: usize,
    total: usize,
    interactions_by_order: BTreeMap<usize, usize>,
}

fn complex(cmd: ComplexCmd) -> Result<u8> {
    let cloud = cmd.data.load()?;
    let runner = runner(&cloud, &cmd.common, default_sinkhorn(), false)?;
    let complex = runner.complex(cmd.eps, cmd.level)?;
    let summary = ComplexSummary {
        epsilon: cmd.eps,
        level: cmd.level,
        metric: cmd.common.metric,
        num_points: cloud.len(),
        num_classes: cloud.num_classes(),
        total: complex.total_count(),
        interactions_by_order: count_by_order(&complex),
    };
    if let Some(path) = &cmd.common.out {
        emit(Some(path), &complex.to_json()?)?;
    }
    emit(None, &json(&summary)?)?;
    Ok(EXIT_OK)
}

fn default_sinkhorn() -> args::SinkhornArgs {
    args::SinkhornArgs {
        delta: 0.1,
        eta: None,
        delta_prime: None,
        max_iters: None,
    }
}

fn solve(cmd: SolveCmd) -> Result<u8> {
    let cloud = cmd.data.load()?;
    let runner = runner(&cloud, &cmd.common, cmd.sinkhorn.clone(), !cmd.no_timing)?;
    let record = runner
        .cell(cmd.eps, cmd.level, &[cmd.solver])
        .pop()
        .expect("one record per solver");
    emit(cmd.common.out.as_deref(), &json(&record)?)?;
    if let Some(msg) = &record.message {
        eprintln!("error: {msg}");
    }
    Ok(record.exit_code())
}

const SWEEP_COLUMNS: [&str; 15] = [
    "epsilon",
    "level",
    "solver",
    "metric",
    "status",
    "risk_lower_bound",
    "objective_value",
    "interactions_total",
    "interactions_by_order",
    "mass_by_order",
    "iterations",
    "runtime_ms",
    "eta",
    "delta_prime",
    "message",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn joined<T: ToString>(map: &BTreeMap<usize, T>) -> String {
    map.iter()
        .map(|(k, v)| format!("{k}:{}", v.to_string()))
        .collect::<Vec<_>>()
        .join(";")
}

fn sweep_row(r: &RunRecord) -> Vec<String> {
    vec![
        r.epsilon.to_string(),
        r.level.to_string(),
        r.solver.to_string(),
        r.metric.to_string(),
        r.status.clone(),
        opt(r.risk_lower_bound),
        opt(r.objective_value),
        r.interactions_by_order.values().sum::<usize>().to_string(),
        joined(&r.interactions_by_order),
        joined(&r.mass_by_order),
        opt(r.iterations),
        r.runtime_ms.to_string(),
        opt(r.eta),
        opt(r.delta_prime),
        r.message.clone().unwrap_or_default(),
    ]
}

fn sweep(cmd: SweepCmd) -> Result<u8> {
    let grid = args::parse_grid(&cmd.eps_grid)?;
    if cmd.levels.is_empty() || cmd.levels.contains(&0) {
        bail!("--levels must list positive levels");
    }
    if cmd.parallel_cells == 0 {
        bail!("--parallel-cells must be at least 1");
    }
    let solvers: &[Solver] = match cmd.solver {
        SweepSolver::Lp => &[Solver::Lp],
        SweepSolver::Sinkhorn => &[Solver::Sinkhorn],
        SweepSolver::Both => &[Solver::Lp, Solver::Sinkhorn],
    };
    let cloud = cmd.data.load()?;
    let runner = runner(&cloud, &cmd.common, cmd.sinkhorn.clone(), !cmd.no_timing)?;
    let cells: Vec<(f64, usize)> = grid
        .iter()
        .flat_map(|&e| cmd.levels.iter().map(move |&l| (e, l)))
        .collect();
    let records: Vec<RunRecord> = if cmd.parallel_cells == 1 {
        cells.iter().flat_map(|&(e, l)| runner.cell(e, l, solvers)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cmd.parallel_cells)
            .build()
            .context("building the cell pool")?;
        pool.install(|| {
            cells
                .par_iter()
                .map(|&(e, l)| runner.cell(e, l, solvers))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        })
    };

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(SWEEP_COLUMNS)?;
    for r in &records {
        writer.write_record(sweep_row(r))?;
    }
    let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    emit(cmd.common.out.as_deref(), std::str::from_utf8(&bytes)?)?;
    for r in records.iter().filter(|r| r.exit_code() != EXIT_OK) {
        eprintln!(
            "warning: eps {} level {} {}: {}{}",
            r.epsilon,
            r.level,
            r.solver,
            r.status,
            r.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default()
        );
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BoundReport {
    epsilon: f64,
    metric: Metric,
    level: usize,
    full_level: usize,
    truncated_value: f64,
    full_value: Option<f64>,
    gap: Option<f64>,
    /// A number, or "unavailable" when the full solve could not run.
    bound: serde_json::Value,
    mot_bound: Option<f64>,
    upper_bound_on_truncated: Option<f64>,
    inequality_holds: Option<bool>,
    full_mass_by_order: Option<BTreeMap<usize, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

fn bound(cmd: BoundCmd) -> Result<u8> {
    if cmd.level == 0 {
        bail!("--level must be at least 1");
    }
    let cloud = cmd.data.load()?;
    let runner = runner(&cloud, &cmd.common, default_sinkhorn(), false)?;
    let full_level = cloud.num_classes();
    let truncated = runner.cell(cmd.eps, cmd.level, &[Solver::Lp]).remove(0);
    let Some(truncated_value) = truncated.objective_value else {
        eprintln!("error: truncated solve failed: {}", truncated.message.as_deref().unwrap_or(&truncated.status));
        let code = truncated.exit_code();
        return Ok(if code == EXIT_OK { EXIT_GUARD } else { code });
    };
    let full = runner.cell(cmd.eps, full_level, &[Solver::Lp]).remove(0);
    let mut report = BoundReport {
        epsilon: cmd.eps,
        metric: cmd.common.metric,
        level: cmd.level,
        full_level,
        truncated_value,
        full_value: None,
        gap: None,
        bound: serde_json::Value::String("unavailable".into()),
        mot_bound: None,
        upper_bound_on_truncated: None,
        inequality_holds: None,
        full_mass_by_order: None,
        message: None,
    };
    match (full.status.as_str(), full.objective_value) {
        (s, Some(full_value)) if s == LpStatus::Optimal.name() => {
            let b = TruncationBound::new(cmd.level, full_value, truncated_value, &full.mass_by_order)?;
            report.full_value = Some(full_value);
            report.gap = Some(b.gap());
            report.bound = serde_json::json!(barycenter_bound(&full.mass_by_order, cmd.level)?);
            report.mot_bound = Some(mot_bound(&full.mass_by_order, cmd.level)?);
            report.upper_bound_on_truncated = Some(b.upper_bound_on_truncated);
            report.inequality_holds = Some(b.holds());
            report.full_mass_by_order = Some(full.mass_by_order);
        }
        _ => {
            report.message = Some(format!(
                "full level-{full_level} solve unavailable: {}",
                full.message.unwrap_or(full.status)
            ));
        }
    }
    emit(cmd.common.out.as_deref(), &json(&report)?)?;
    Ok(EXIT_OK)
}

fn synth(cmd: SynthCmd) -> Result<u8> {
    let cloud = match cmd.kind {
        Synthetic::Triangle => triangle_fixture(),
        Synthetic::Gaussian6 => {
            let means: Vec<Vec<f64>> = SIX_CLASS_MEANS.iter().map(|m| m.to_vec()).collect();
            synth_gaussian(&means, cmd.samples_per_class, cmd.cov_scale, cmd.seed)?
        }
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    for i in 0..cloud.len() {
        let mut row: Vec<String> = cloud.point(i).iter().map(f64::to_string).collect();
        row.push(cloud.label(i).to_string());
        writer.write_record(&row)?;
    }
    let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    emit(cmd.out.as_deref(), std::str::from_utf8(&bytes)?)?;
    Ok(EXIT_OK)
}
