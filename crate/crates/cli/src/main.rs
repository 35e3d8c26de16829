//! `pidectl`: configure, solve and tabulate control problems for the heat
//! equation with memory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ControlSource, MethodName, RunConfig, SweepParameter};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "pidectl", version, about = "Approximate controls for the heat equation with memory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON run configuration; the built-in reference experiment if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodName>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    n_cells: Option<usize>,
    #[arg(long, global = true)]
    n_steps: Option<usize>,
    /// Seed for a random control source; selects that source when given.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the state equation under the configured control.
    Forward {
        /// Read the control from a `control.csv`.
        #[arg(long)]
        control: Option<PathBuf>,
    },
    /// Compute an approximate control with the configured method.
    Control,
    /// Sweep ε (penalty path), δ (resolvent) or Galerkin levels.
    Sweep {
        #[arg(long, value_enum)]
        parameter: Option<SweepParameter>,
        /// Comma-separated parameter values, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Comma-separated `modes:slabs` pairs.
        #[arg(long, value_delimiter = ',', value_parser = parse_level)]
        levels: Option<Vec<(usize, usize)>>,
    },
    /// Observed convergence orders in space and time.
    Convergence,
    /// Control, exact-control forward run, ε and δ sweeps and convergence table.
    ReproducePaper,
}

fn parse_level(s: &str) -> Result<(usize, usize), String> {
    let (m, k) = s
        .split_once(':')
        .ok_or_else(|| format!("expected modes:slabs, got {s:?}"))?;
    let m = m.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let k = k.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((m, k))
}

fn resolve(global: &Global) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let mut cfg = RunConfig::load(global.config.as_deref())?;
    if let Some(o) = &global.out {
        cfg.output.directory = o.clone();
    }
    if let Some(m) = global.method {
        cfg.solver.method = m;
    }
    if let Some(e) = global.epsilon {
        cfg.solver.epsilon = Some(e);
    }
    if let Some(d) = global.delta {
        cfg.solver.delta = Some(d);
    }
    if let Some(n) = global.n_cells {
        cfg.problem.n_cells = n;
    }
    if let Some(n) = global.n_steps {
        cfg.problem.n_steps = n;
    }
    if let Some(seed) = global.seed {
        cfg.control = ControlSource::Random { seed };
    }
    cfg.validate()?;
    let base = global
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf);
    Ok((cfg, base))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (mut cfg, base) = resolve(&cli.global)?;
    let out = cfg.output.directory.clone();
    let base = base.as_deref();
    match cli.command {
        Command::Forward { control } => {
            if let Some(path) = control {
                cfg.control = ControlSource::File { path };
            }
            let files = commands::cmd_forward(&cfg, &out, base)?;
            report(&files);
        }
        Command::Control => {
            let (files, res) = commands::cmd_control(&cfg, &out)?;
            report(&files);
            println!(
                "miss {:.6e}, cost {:.6e}, iterations {}",
                res.miss, res.cost, res.iterations
            );
        }
        Command::Sweep {
            parameter,
            values,
            levels,
        } => {
            if let Some(v) = values {
                cfg.sweep.values = v;
            }
            if let Some(l) = levels {
                cfg.sweep.levels = l;
            }
            let parameter = parameter.unwrap_or(cfg.sweep.parameter);
            let s = commands::cmd_sweep(&cfg, &out, parameter, base)?;
            report(&[s.path]);
            println!(
                "{} rows, verdict {}",
                s.rows,
                if s.all_ok { "ok" } else { "violated" }
            );
        }
        Command::Convergence => {
            let c = commands::cmd_convergence(&cfg, &out)?;
            report(&[c.path]);
            print_orders("spatial", &c.spatial);
            print_orders("temporal", &c.temporal);
        }
        Command::ReproducePaper => reproduce(&cfg, &out, base)?,
    }
    Ok(())
}

fn print_orders(name: &str, l: &pide_control::convergence::Ladder) {
    let pairs: Vec<String> = l.pairwise_orders().iter().map(|o| format!("{o:.3}")).collect();
    println!(
        "{name} orders [{}], fitted {:.3}",
        pairs.join(", "),
        l.fitted_order().unwrap_or(f64::NAN)
    );
}

fn reproduce(cfg: &RunConfig, out: &Path, base: Option<&Path>) -> Result<(), CliError> {
    let (files, res) = commands::cmd_control(cfg, out)?;
    report(&files);
    println!("control: miss {:.6e}, cost {:.6e}", res.miss, res.cost);

    let mut exact = cfg.clone();
    exact.control = ControlSource::Exact;
    report(&commands::cmd_forward(&exact, &out.join("exact"), base)?);

    let eps = commands::cmd_sweep(cfg, out, SweepParameter::Epsilon, base)?;
    report(&[eps.path]);
    let mut d = cfg.clone();
    d.sweep.values = vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let delta = commands::cmd_sweep(&d, out, SweepParameter::Delta, base)?;
    report(&[delta.path]);
    println!(
        "epsilon sweep {}, delta sweep {}",
        if eps.all_ok { "ok" } else { "violated" },
        if delta.all_ok { "ok" } else { "violated" }
    );

    let c = commands::cmd_convergence(cfg, out)?;
    report(&[c.path]);
    print_orders("spatial", &c.spatial);
    print_orders("temporal", &c.temporal);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pidectl: {e}");
            e.exit_code()
        }
    }
}
