use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hiv_latency::analysis::EquilibriumKind;
use hiv_latency::io::{self, Scenario};
use hiv_latency::thresholds::{self, Metric, DEFAULT_T_MAX};
use hiv_latency::Error;

/// Output directory used when `--out` is not given.
const OUT_ENV: &str = "HIV_LATENCY_OUT";

#[derive(Parser)]
#[command(name = "hiv-latency", version, about = "Within-host HIV dynamics with a latent reservoir")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario JSON document layered over the preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: $HIV_LATENCY_OUT or the current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base scenario preset.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Override a scenario field, e.g. `efficacy.pi=0.519`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for threshold sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduction numbers, equilibria and their stability.
    Analyze,
    /// Integrate the model and write the sampled trajectory.
    Simulate,
    /// Time until the viral load drops below 10^-n.
    Threshold(ThresholdArgs),
    /// Check Lyapunov descent along a simulated trajectory.
    Lyapunov {
        #[arg(long, value_enum, default_value = "non-infective")]
        which: Which,
    },
    /// Named presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[arg(long, default_value_t = 5)]
    n: u32,
    /// Target reproduction ratios, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0.., conflicts_with = "range")]
    r: Vec<f64>,
    /// Evenly spaced grid `start:stop:step`, inclusive of `stop`.
    #[arg(long)]
    range: Option<String>,
    /// Horizon in days after which the time is reported as `inf`.
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "P", alias = "p")]
    P,
    #[value(name = "Q", alias = "q")]
    Q,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    NonInfective,
    Endemic,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        e if e.is_numeric() => 4,
        _ => 2,
    }
}

fn out_dir(global: &Global) -> PathBuf {
    global
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn parse_range(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("range `{spec}` is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    // trims the binary noise of `start + i * step`
    Ok((0..=count)
        .map(|i| {
            let x = start + step * i as f64;
            format!("{x:.12e}").parse().unwrap_or(x)
        })
        .collect())
}

fn scenario(global: &Global) -> Result<Scenario, Error> {
    io::load_scenario(global.preset.as_deref(), global.config.as_deref(), &global.overrides)
}

fn run(cli: Cli) -> Result<(), Error> {
    let g = &cli.global;
    match cli.command {
        Command::Presets {
            action: PresetAction::List,
        } => {
            for p in io::PRESETS {
                println!("{:<18} {:<18} {}", p.name, p.kind, p.description);
            }
        }
        Command::Analyze => {
            let report = io::analyze(&scenario(g)?)?;
            let text = io::to_json(&report)?;
            if g.out.is_some() || std::env::var_os(OUT_ENV).is_some() {
                let path = io::write_output(&out_dir(g), "report.json", &text)?;
                eprintln!("wrote {}", path.display());
            }
            print!("{text}");
        }
        Command::Simulate => {
            let sc = scenario(g)?;
            let mut report = io::analyze(&sc)?;
            let traj = io::simulate(&sc)?;
            let dir = out_dir(g);
            let csv = io::write_output(&dir, "trajectory.csv", &io::trajectory_csv(&traj))?;
            report.simulation = Some(traj.summary);
            let json = io::write_output(&dir, "report.json", &io::to_json(&report)?)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Threshold(args) => {
            let sc = scenario(g)?;
            let metric = match args.metric {
                MetricArg::P => Metric::P,
                MetricArg::Q => Metric::Q,
            };
            let grid = match &args.range {
                Some(spec) => parse_range(spec)?,
                None => args.r.clone(),
            };
            let solver = sc.solver.config_with_horizon(metric.model(), args.t_max)?;
            let rows = thresholds::sweep(
                metric,
                args.n,
                &grid,
                &sc.latent_params(),
                &sc.initials.state4(),
                &solver,
                g.jobs,
            )?;
            let text = io::threshold_csv(&rows);
            let path = io::write_output(&out_dir(g), "threshold.csv", &text)?;
            eprintln!("wrote {}", path.display());
            print!("{text}");
        }
        Command::Lyapunov { which } => {
            let sc = scenario(g)?;
            let which = match which {
                Which::NonInfective => EquilibriumKind::NonInfective,
                Which::Endemic => EquilibriumKind::Endemic,
            };
            let rep = io::lyapunov_check(&sc, which)?;
            let dir = out_dir(g);
            io::write_output(&dir, "lyapunov.csv", &io::lyapunov_csv(&rep))?;
            let verdict = io::to_json(&io::lyapunov_verdict(&rep))?;
            io::write_output(&dir, "lyapunov.json", &verdict)?;
            print!("{verdict}");
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
            ExitCode::from(exit_code(&e))
        }
    }
}
