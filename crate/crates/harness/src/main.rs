use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use opinion_core::dynamics::ModelParams;
use opinion_core::graph::{GraphFile, SignedGraph};
use opinion_core::switching::{design_pattern, estimate_epsilon, BistableSystem, EpsilonSettings, PatternSpec};
use opinion_harness::reproduce::{reproduce, write_reproduction, Figure};
use opinion_harness::scenario::{load_graph, run_scenario, write_run, Format, Overrides, Scenario, ScenarioConfig};
use opinion_harness::sweep::{pitchfork_svg, sweep};
use opinion_harness::{analyze_report, HarnessError};

#[derive(Parser)]
#[command(name = "opinion", version, about = "Nonlinear opinion dynamics on signed networks")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integration step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    /// Graph file, or builtin:fixture10, builtin:complete:N, builtin:ring:N.
    #[arg(long)]
    graph: String,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    #[arg(long, default_value_t = 1.2)]
    alpha: f64,
    #[arg(long, default_value_t = 1.3)]
    gamma: f64,
}

impl GraphArgs {
    fn load(&self, u: f64) -> Result<(SignedGraph, ModelParams), HarnessError> {
        let g = load_graph(&self.graph, Path::new("."))?;
        let p = ModelParams::homogeneous(g.n(), self.d, self.alpha, self.gamma, u);
        p.validate()?;
        Ok((g, p))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Connectivity, balance, spectrum and thresholds as JSON.
    Analyze {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Origin stability and equilibrium branches over a grid of u.
    Sweep {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        u_min: f64,
        #[arg(long)]
        u_max: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        /// Switch the graph by these agents (1-based) first.
        #[arg(long, value_delimiter = ',')]
        switch: Vec<usize>,
    },
    /// Runs a scenario file.
    Simulate { config: PathBuf },
    /// Switches an all-positive graph so that the given agents (1-based)
    /// oppose the rest; prints the new graph.
    SwitchDesign {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_delimiter = ',')]
        agents: Vec<usize>,
    },
    /// Monte-Carlo estimate of the prediction margin.
    EstimateEps {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        u: f64,
        #[arg(long, default_value_t = 200)]
        directions: usize,
    },
    /// Runs a figure preset and checks its qualitative claim.
    Reproduce { figure: String },
}

fn zero_based(agents: &[usize], n: usize) -> Result<Vec<usize>, HarnessError> {
    agents
        .iter()
        .map(|&a| {
            if a == 0 || a > n {
                Err(HarnessError::Config(format!("unknown agent {a} (graph has agents 1..={n})")))
            } else {
                Ok(a - 1)
            }
        })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let format = Format::from(cli.format);
    match cli.command {
        Command::Analyze { graph } => {
            let (g, p) = graph.load(0.0)?;
            println!("{}", serde_json::to_string_pretty(&analyze_report(&g, &p)).expect("report serializes"));
        }
        Command::Sweep {
            graph,
            u_min,
            u_max,
            steps,
            switch,
        } => {
            let (mut g, p) = graph.load(0.0)?;
            if !switch.is_empty() {
                let w = opinion_core::graph::SwitchingAssignment::from_set(g.n(), &zero_based(&switch, g.n())?)?;
                g = g.switch(&w)?;
            }
            let result = sweep(&g, &p, u_min, u_max, steps)?;
            let text = serde_json::to_string_pretty(&result).expect("sweep serializes");
            write(&cli.out.join("sweep.json"), &text)?;
            write(&cli.out.join("sweep.svg"), &pitchfork_svg(&result, "pitchfork"))?;
            println!("{text}");
        }
        Command::Simulate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let scenario = Scenario::resolve(
                &cfg,
                base,
                &Overrides {
                    seed: cli.seed,
                    dt: cli.dt,
                },
            )?;
            let outcome = run_scenario(&scenario)?;
            let prefix = config.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
            let written = write_run(&outcome, &cli.out, prefix, format, cfg.svg)?;
            for path in &written.paths {
                eprintln!("wrote {}", path.display());
            }
            println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
        }
        Command::SwitchDesign { graph, agents } => {
            let (g, _) = graph.load(0.0)?;
            let spec = PatternSpec::from_switching_set(g.n(), &zero_based(&agents, g.n())?)?;
            let designed = design_pattern(&g, &spec)?;
            let text = serde_json::to_string(&GraphFile::from(&designed)).expect("graph serializes");
            write(&cli.out.join("designed_graph.json"), &text)?;
            println!("{text}");
        }
        Command::EstimateEps { graph, u, directions } => {
            let (g, p) = graph.load(u)?;
            let system = BistableSystem::analyze(&g, &p)?;
            let settings = EpsilonSettings {
                n_directions: directions,
                seed: cli.seed.unwrap_or(0),
                dt: cli.dt.unwrap_or(EpsilonSettings::default().dt),
                ..Default::default()
            };
            let est = estimate_epsilon(&system, &settings)?;
            println!("{}", serde_json::to_string_pretty(&est).expect("estimate serializes"));
        }
        Command::Reproduce { figure } => {
            let figure: Figure = figure.parse()?;
            if cli.dt.is_some() {
                eprintln!("note: --dt is ignored by reproduce; presets fix their own step");
            }
            let rep = reproduce(figure, cli.seed.unwrap_or(0))?;
            write_reproduction(&rep, &cli.out, format)?;
            println!("{}", serde_json::to_string_pretty(&rep.verdict).expect("verdict serializes"));
            if !rep.verdict.passed {
                return Err(HarnessError::Verdict(format!("{}: {}", rep.verdict.figure, rep.verdict.detail)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
