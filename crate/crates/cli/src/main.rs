use std::fs::File;
use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pursuit_cli::{
    cmd_generate, cmd_layout, cmd_replay, cmd_run, cmd_sweep, cmd_trace, ideal_scenario,
    load_config, load_scenario, output, read_gaze_log, write_events,
};
use pursuit_core::trajectory::{ROTATION_PERIOD_S, SUPPORTED_COUNTS};
use pursuit_core::{GazeModel, Method, Scenario};
use pursuit_service::Server;

#[derive(Parser)]
#[command(
    name = "pursuit",
    version,
    about = "Smooth-pursuit target selection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Detection method; commands that can compare both run both when omitted.
    #[arg(long)]
    method: Option<Method>,
    /// TOML file overriding detector parameters by name.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file, stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Scenario from a file, or ideal pursuit on a dial layout.
#[derive(Args)]
struct ScenarioSource {
    /// TOML scenario file.
    scenario: Option<PathBuf>,
    /// Number of dial targets, used when no scenario file is given.
    #[arg(long, conflicts_with = "scenario")]
    targets: Option<usize>,
    /// Pursued target id for the dial scenario.
    #[arg(long, default_value_t = 0, requires = "targets")]
    pursue: u32,
    /// Dial scenario length in seconds.
    #[arg(long, default_value_t = ROTATION_PERIOD_S, requires = "targets")]
    duration: f64,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioSource {
    fn load(&self) -> Result<Scenario> {
        let mut scenario = match (&self.scenario, self.targets) {
            (Some(path), _) => load_scenario(path)?,
            (None, Some(n)) => ideal_scenario(n, self.pursue, self.duration, 0)?,
            (None, None) => bail!("give a scenario file or --targets N"),
        };
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        Ok(scenario)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Per-sample, per-target metric trace of a scenario as CSV.
    Trace {
        #[command(flatten)]
        source: ScenarioSource,
        #[command(flatten)]
        common: Common,
    },
    /// Event and false-positive summary of a scenario per method.
    Run {
        #[command(flatten)]
        source: ScenarioSource,
        #[command(flatten)]
        common: Common,
    },
    /// Pursues every target of each dial size and tabulates outcomes.
    Sweep {
        /// Comma-separated target counts.
        #[arg(long, value_delimiter = ',', default_values_t = SUPPORTED_COUNTS.to_vec())]
        targets: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian gaze noise, px.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Pursuit gain.
        #[arg(long, default_value_t = 1.0)]
        gain: f64,
        /// Gaze lag behind the target, ms.
        #[arg(long, default_value_t = 0.0)]
        latency: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Writes the simulated gaze stream of a scenario as a t_ms,gx_px,gy_px log.
    Generate {
        #[command(flatten)]
        source: ScenarioSource,
        /// Output file, stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replays a gaze log through the detector; trace to --out, events to --events.
    Replay {
        /// CSV with columns t_ms, gx_px, gy_px.
        log: PathBuf,
        /// Dial layout size.
        #[arg(long, conflicts_with = "scenario")]
        targets: Option<usize>,
        /// Take the layout from this scenario file.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Event CSV destination, stdout when omitted.
        #[arg(long)]
        events: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dial target positions at t = 0.
    Layout {
        #[arg(long)]
        targets: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the stream service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
    },
}

fn methods(method: Option<Method>) -> Vec<Method> {
    match method {
        Some(m) => vec![m],
        None => vec![Method::Slope, Method::Correlation],
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Trace { source, common } => {
            let scenario = source.load()?;
            let config = load_config(
                common.method.unwrap_or(Method::Slope),
                common.config.as_deref(),
            )?;
            cmd_trace(&scenario, config, output(common.out.as_deref())?)?;
        }
        Command::Run { source, common } => {
            let scenario = source.load()?;
            let configs = methods(common.method)
                .into_iter()
                .map(|m| load_config(m, common.config.as_deref()))
                .collect::<Result<Vec<_>>>()?;
            cmd_run(&scenario, &configs, output(common.out.as_deref())?)?;
        }
        Command::Sweep {
            targets,
            repetitions,
            seed,
            noise,
            gain,
            latency,
            common,
        } => {
            let configs = methods(common.method)
                .into_iter()
                .map(|m| load_config(m, common.config.as_deref()))
                .collect::<Result<Vec<_>>>()?;
            let model = GazeModel {
                pursuit_gain: gain,
                latency_ms: latency,
                noise_sigma_px: noise,
                ..GazeModel::ideal()
            };
            cmd_sweep(
                &targets,
                &configs,
                model,
                repetitions,
                seed,
                output(common.out.as_deref())?,
            )?;
        }
        Command::Generate { source, out } => {
            let scenario = source.load()?;
            cmd_generate(&scenario, output(out.as_deref())?)?;
        }
        Command::Replay {
            log,
            targets,
            scenario,
            events,
            common,
        } => {
            let layout = match (targets, scenario) {
                (_, Some(path)) => load_scenario(&path)?.layout,
                (Some(n), None) => ideal_scenario(n, 0, 1.0, 0)?.layout,
                (None, None) => bail!("give --targets N or --scenario FILE for the layout"),
            };
            let file =
                File::open(&log).with_context(|| format!("cannot read {}", log.display()))?;
            let samples =
                read_gaze_log(BufReader::new(file)).with_context(|| log.display().to_string())?;
            let config = load_config(
                common.method.unwrap_or(Method::Slope),
                common.config.as_deref(),
            )?;
            let trace_out = match &common.out {
                Some(p) => Some(output(Some(p))?),
                None => None,
            };
            let result = cmd_replay(&layout, &samples, config, trace_out)?;
            write_events(&layout, &result.events, output(events.as_deref())?)?;
        }
        Command::Layout { targets, out } => cmd_layout(targets, output(out.as_deref())?)?,
        Command::Serve { addr } => {
            let server = Server::bind(&addr).with_context(|| format!("cannot bind {addr}"))?;
            eprintln!("listening on {}", server.local_addr()?);
            server.run()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}
