use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use flatcurve::exec::Execution;
use flatcurve::network::erdos_renyi;
use flatcurve::optimal::{optimal_beta, verify_optimality, FlatteningProblem};
use flatcurve::report;
use flatcurve::scenario::{
    run_monte_carlo, stream_seed, summarize_daily, sweep, OdeScenario, ReferenceMode, ScenarioConfig, Stream,
    SWEEP_DELAYS, SWEEP_UPDATES,
};
use flatcurve::seird::{init_state, run_seird};

/// Closed-form curve flattening, feedback tracking and network SEIRD
/// experiments.
#[derive(Parser)]
#[command(name = "flatcurve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Largest constant transmission rate keeping the SIR peak at capacity.
    OptimalBeta {
        #[arg(long)]
        i0: f64,
        #[arg(long)]
        ith: f64,
        #[arg(long)]
        gamma: f64,
    },
    /// Closed-loop SIR tracking run; CSV columns t,s,i,s_bar,i_bar,beta.
    SimulateOde {
        /// Scenario TOML; defaults to the built-in tracking demo.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Uncontrolled SEIRD outbreak on one random network; daily counts CSV.
    SimulateNetwork {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo ensemble of controlled runs plus baselines.
    RunScenario {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        mode: Option<ReferenceMode>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ensemble summaries over delays 3,7,20, update intervals 1,7,15 and
    /// both reference modes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Edge list of the network used by run 0, one `u v` pair per line.
    ExportNetwork {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Network scenario TOML; defaults to the built-in Codogno setting.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long)]
    seed: u64,
    /// Run the ensemble on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    runs: Option<usize>,
    /// Mean reporting delay, days.
    #[arg(long)]
    delay: Option<f64>,
    /// Days between policy updates.
    #[arg(long)]
    update: Option<u32>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.scenario {
            Some(path) => ScenarioConfig::from_path(path)?,
            None => ScenarioConfig::codogno(),
        };
        cfg.master_seed = self.seed;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        if let Some(runs) = self.runs {
            cfg.runs = runs;
        }
        if let Some(delay) = self.delay {
            cfg.measurement.delay_mean = delay;
        }
        if let Some(update) = self.update {
            cfg.policy.update_interval = update;
        }
        cfg.validate()?;
        Ok(())
    }
}

/// Derived quantities written next to the resolved scenario.
#[derive(Serialize)]
struct Provenance {
    tool: String,
    command: String,
    sir_gamma: f64,
    beta_max_sir: f64,
    beta_min_sir: f64,
    edge_probability: f64,
    psi_i: f64,
    psi_s: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sweep_delays: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sweep_updates: Vec<u32>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    #[serde(flatten)]
    scenario: &'a ScenarioConfig,
    provenance: Provenance,
}

fn provenance(cfg: &ScenarioConfig, command: &str) -> Provenance {
    Provenance {
        tool: format!("flatcurve {}", env!("CARGO_PKG_VERSION")),
        command: command.into(),
        sir_gamma: cfg.sir_gamma(),
        beta_max_sir: cfg.beta_max_sir(),
        beta_min_sir: cfg.beta_min_sir(),
        edge_probability: cfg.edge_probability(),
        psi_i: cfg.controller.psi_i,
        psi_s: cfg.controller.psi_s,
        sweep_delays: Vec::new(),
        sweep_updates: Vec::new(),
    }
}

fn write_metadata(dir: &Path, cfg: &ScenarioConfig, provenance: Provenance) -> Result<()> {
    let text = toml::to_string(&Metadata {
        scenario: cfg,
        provenance,
    })
    .context("serializing metadata")?;
    fs::write(dir.join("metadata.toml"), text).context("writing metadata.toml")?;
    Ok(())
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn optimal_beta_cmd(i0: f64, ith: f64, gamma: f64) -> Result<()> {
    let prob = FlatteningProblem::new(i0, ith, gamma)?;
    let beta = optimal_beta(&prob)?;
    let verified = verify_optimality(&prob, beta, 1e-3 * ith);
    println!("beta = {beta}");
    println!("lambert_argument = {}", prob.lambert_argument());
    println!("verified = {verified}");
    if !verified {
        bail!("peak under beta = {beta} is not on the capacity boundary");
    }
    Ok(())
}

fn simulate_ode_cmd(scenario: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let ode = match scenario {
        Some(path) => OdeScenario::from_path(path)?,
        None => OdeScenario::figure_three(),
    };
    let run = ode.run()?;
    report::write_tracking(sink(out)?, &run, ode.stride(), ode.horizon_days > 0.0)?;
    Ok(())
}

fn simulate_network_cmd(common: &Common, out: Option<&Path>) -> Result<()> {
    let cfg = common.config()?;
    cfg.validate()?;
    let seed = |s| stream_seed(cfg.master_seed, 0, s);
    let net = erdos_renyi(cfg.network.nodes, cfg.edge_probability(), seed(Stream::Network));
    let state = init_state(&net, cfg.epidemic.initial_infected, seed(Stream::InitialInfected))?;
    let beta_n = cfg.epidemic.beta_n;
    let run = run_seird(
        &net,
        state,
        &cfg.seird_params(),
        |_| beta_n,
        cfg.horizon_days,
        seed(Stream::Dynamics),
        false,
    );
    report::write_daily_counts(sink(out)?, &run.daily)?;
    Ok(())
}

fn run_scenario_cmd(common: &Common, overrides: &Overrides, mode: Option<ReferenceMode>, out: &Path) -> Result<()> {
    let mut cfg = common.config()?;
    if let Some(mode) = mode {
        cfg.controller.reference = mode;
    }
    overrides.apply(&mut cfg)?;
    let result = run_monte_carlo(&cfg, common.execution())?;

    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;
    for (k, run) in result.controlled.iter().enumerate() {
        report::write_run(create(&runs_dir.join(format!("run_{k:03}.csv")))?, run)?;
    }
    report::write_ensemble(create(&out.join("ensemble.csv"))?, &result.summary.daily)?;
    report::write_metrics(create(&out.join("metrics.csv"))?, &result.summary.metrics)?;
    let baselines = &result.baselines;
    report::write_ensemble(
        create(&out.join("uncontrolled.csv"))?,
        &summarize_daily(&baselines.uncontrolled),
    )?;
    report::write_ensemble(
        create(&out.join("lockdown.csv"))?,
        &summarize_daily(&baselines.lockdown),
    )?;
    write_metadata(out, &cfg, provenance(&cfg, "run-scenario"))?;

    let m = &result.summary.metrics;
    eprintln!(
        "{} runs: death reduction {:.3} [{:.3}, {:.3}], rate reduction {:.3}",
        cfg.runs, m.death_reduction.mean, m.death_reduction.q1, m.death_reduction.q3, m.beta_reduction.mean
    );
    Ok(())
}

fn sweep_cmd(common: &Common, overrides: &Overrides, out: &Path) -> Result<()> {
    let mut cfg = common.config()?;
    overrides.apply(&mut cfg)?;
    let cells = sweep(
        &cfg,
        &SWEEP_DELAYS,
        &SWEEP_UPDATES,
        &ReferenceMode::ALL,
        common.execution(),
    )?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    report::write_sweep(create(&out.join("sweep.csv"))?, &cells)?;
    let mut prov = provenance(&cfg, "sweep");
    prov.sweep_delays = SWEEP_DELAYS.to_vec();
    prov.sweep_updates = SWEEP_UPDATES.to_vec();
    write_metadata(out, &cfg, prov)?;
    Ok(())
}

fn export_network_cmd(common: &Common, out: Option<&Path>) -> Result<()> {
    let cfg = common.config()?;
    cfg.validate()?;
    let net = erdos_renyi(
        cfg.network.nodes,
        cfg.edge_probability(),
        stream_seed(cfg.master_seed, 0, Stream::Network),
    );
    let mut w = sink(out)?;
    net.write_edge_list(&mut w)?;
    w.flush()?;
    Ok(())
}

/// True when the error is a closed stdout, e.g. output piped into `head`.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        let inner = match e.downcast_ref::<csv::Error>().map(csv::Error::kind) {
            Some(csv::ErrorKind::Io(inner)) => Some(inner),
            _ => e.downcast_ref::<io::Error>(),
        };
        inner.is_some_and(|inner| inner.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> Result<()> {
    let result = match Cli::parse().command {
        Command::OptimalBeta { i0, ith, gamma } => optimal_beta_cmd(i0, ith, gamma),
        Command::SimulateOde { scenario, out } => simulate_ode_cmd(scenario.as_deref(), out.as_deref()),
        Command::SimulateNetwork { common, out } => simulate_network_cmd(&common, out.as_deref()),
        Command::RunScenario {
            common,
            overrides,
            mode,
            out,
        } => run_scenario_cmd(&common, &overrides, mode, &out),
        Command::Sweep { common, overrides, out } => sweep_cmd(&common, &overrides, &out),
        Command::ExportNetwork { common, out } => export_network_cmd(&common, out.as_deref()),
    };
    match result {
        Err(err) if is_broken_pipe(&err) => Ok(()),
        other => other,
    }
}
