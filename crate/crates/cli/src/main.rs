use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frg_cli::config::{parse_flux, ExperimentConfig};
use frg_cli::plot::{self, PlotKind, PlotRequest};
use frg_cli::{oracle, run, CliError};
use frg_core::assembly::VelocityMode;
use frg_core::problems::{registered_experiments, registered_problems};
use frg_core::scheme::SchemeKind;

#[derive(Parser)]
#[command(name = "frg", version, about = "DG and Fisher-Rao DG transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one experiment and write trajectory, errors, metadata and a profile plot.
    Run(RunArgs),
    /// Run a grid-refinement sweep and write a convergence table and plot.
    Converge(ConvergeArgs),
    /// Run the MLE-consistency and KL-growth oracles.
    Oracle {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an SVG plot from CSV files written by `run` or `converge`.
    Plot(PlotArgs),
    /// List registered problems and experiments.
    List,
}

#[derive(Args)]
struct Overrides {
    /// Experiment id (see `list`); ignored when --config is given.
    experiment: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    flux: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    nq: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    dt_sample: Option<f64>,
    #[arg(long)]
    limiter: Option<frg_core::time::LimiterMode>,
    /// `nodal` or `analytic`.
    #[arg(long)]
    velocity: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Overrides,
    /// Comma-separated schemes.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<SchemeKind>>,
    /// Comma-separated cell counts per axis.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
}

#[derive(Args)]
struct PlotArgs {
    /// profile, profile_log, error_time or convergence.
    kind: PlotKind,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    /// Sample time for profiles; defaults to the last sample.
    #[arg(long)]
    time: Option<f64>,
    /// L1, L2, KL, mass or min_density.
    #[arg(long, default_value = "L2")]
    metric: String,
    #[arg(long, short)]
    out: PathBuf,
}

fn resolve(o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&o.config, &o.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(id)) => ExperimentConfig::preset(id, SchemeKind::Dfrg)?,
        (None, None) => return Err(CliError::Config("give an experiment id or --config".into())),
    };
    if let Some(s) = o.scheme {
        cfg.scheme = s;
    }
    if let Some(f) = &o.flux {
        cfg.flux = parse_flux(f)?;
    }
    if let Some(p) = o.order {
        cfg.order = p;
        if o.nq.is_none() {
            cfg.quadrature_points = frg_core::basis::default_quadrature_points(p);
        }
    }
    if let Some(m) = o.cells {
        cfg.cells = m;
    }
    if let Some(n) = o.nq {
        cfg.quadrature_points = n;
    }
    if let Some(c) = o.cfl {
        cfg.cfl = c;
    }
    if let Some(t) = o.t_final {
        cfg.t_final = t;
    }
    if let Some(d) = o.dt_sample {
        cfg.dt_sample = d;
    }
    if let Some(l) = o.limiter {
        cfg.limiter = l;
    }
    if let Some(v) = &o.velocity {
        cfg.velocity = match v.as_str() {
            "nodal" => VelocityMode::Nodal,
            "analytic" => VelocityMode::Analytic,
            other => return Err(CliError::Config(format!("unknown velocity mode '{other}'"))),
        };
    }
    if let Some(out) = &o.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => {
            let cfg = resolve(&a.common)?;
            let res = run::cmd_run(&cfg);
            match &res {
                Ok(s) => println!(
                    "{} {}: completed, {} steps, min density {:e}, output {}",
                    cfg.name,
                    cfg.scheme,
                    s.sim.trajectory.steps,
                    s.min_density,
                    cfg.output.display()
                ),
                Err(CliError::Positivity(_)) => eprintln!("partial output written to {}", cfg.output.display()),
                Err(_) => {}
            }
            res.map(|_| ())
        }
        Command::Converge(a) => {
            let mut cfg = resolve(&a.common)?;
            if let Some(s) = a.schemes {
                cfg.sweep_schemes = s;
            }
            if let Some(m) = a.sweep {
                cfg.sweep_cells = m;
            }
            run::cmd_converge(&cfg)?;
            print!("{}", std::fs::read_to_string(cfg.output.join("table.csv"))?);
            Ok(())
        }
        Command::Oracle { out } => {
            let checks = oracle::cmd_oracle(out.as_deref())?;
            for c in checks {
                println!("{c}");
            }
            Ok(())
        }
        Command::Plot(a) => {
            let req = PlotRequest { kind: a.kind, inputs: a.inputs, labels: a.labels, time: a.time, metric: a.metric };
            let svg = plot::render(&req)?;
            std::fs::write(&a.out, svg)?;
            Ok(())
        }
        Command::List => {
            println!("problems:");
            for p in registered_problems() {
                println!("  {:<20} dim={} {}", p.id, p.dim, p.description);
            }
            println!("experiments:");
            for e in registered_experiments() {
                println!("  {e}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { frg_cli::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
