use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lattice_mpc::controller::{offline_build, Strategy};
use lattice_mpc::harness::{emit_plot_data, load_config, run_with, ComparisonReport, HarnessError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "latmpc", version, about = "Lattice PWA approximation of MPC for wheeled-robot tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the lattice controller offline and save it under OUT/controller.
    Build(Common),
    /// Run one strategy and write OUT/run_<strategy>.csv.
    Run(Common),
    /// Run several strategies and write per-run CSVs plus OUT/report.csv.
    Compare(Common),
    /// Merge OUT/run_*.csv into OUT/plot_xy.csv.
    Plotdata {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Comma-separated subset of lattice, linear_mpc, explicit_seq.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// Overrides the scenario's seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig, HarnessError> {
        let mut cfg = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        let origin = if cfg.seed.is_some() { "" } else { " (default)" };
        eprintln!("seed = {}{origin}", cfg.seed());
        Ok(cfg)
    }
}

fn build(c: &Common) -> Result<(), HarnessError> {
    let cfg = c.config()?;
    let setup = cfg.setup()?;
    let ctrl = offline_build(&setup, &cfg.plan(&setup)).map_err(HarnessError::Build)?;
    let dir = c.out.join("controller");
    ctrl.save(&dir).map_err(|e| HarnessError::Output(e.to_string()))?;
    let discarded: usize = ctrl.stats.iter().map(|s| s.discarded).sum();
    let worst = ctrl.stats.iter().map(|s| s.training_residual).fold(0.0, f64::max);
    println!(
        "built {} controllers in {:.3} s: {} terms, {} literals, {} infeasible draws, max training residual {:e}",
        ctrl.len(),
        ctrl.build_seconds,
        ctrl.total_terms(),
        ctrl.total_literals(),
        discarded,
        worst
    );
    println!("saved to {}", dir.display());
    Ok(())
}

fn compare(c: &Common, single: bool) -> Result<ComparisonReport, HarnessError> {
    let cfg = c.config()?;
    let strategies = c.strategies.clone().unwrap_or_else(|| {
        if single {
            vec![Strategy::Lattice]
        } else {
            Strategy::ALL.to_vec()
        }
    });
    if single && strategies.len() != 1 {
        return Err(HarnessError::Config("`run` takes exactly one strategy; use `compare` for several".into()));
    }
    let ctrl_dir = c.out.join("controller");
    let report = run_with(&cfg, &strategies, &c.out, Some(&ctrl_dir))?;
    print!("{}", report.table());
    for r in &report.rows {
        if r.violations > 0 || r.fallbacks > 0 {
            println!("{}: {} state-box violations, {} region fallbacks", r.strategy, r.violations, r.fallbacks);
        }
    }
    Ok(report)
}

fn plotdata(out: &Path) -> Result<(), HarnessError> {
    let mut runs: Vec<PathBuf> = std::fs::read_dir(out)
        .map_err(|e| HarnessError::Output(format!("{}: {e}", out.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("run_") && n.ends_with(".csv"))
        })
        .collect();
    runs.sort();
    let target = out.join("plot_xy.csv");
    let rows = emit_plot_data(&runs, &target)?;
    println!("wrote {rows} rows to {}", target.display());
    Ok(())
}

fn main() -> ExitCode {
    // usage errors share the config exit status; clap's own default is 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match &cli.command {
        Command::Build(c) => build(c),
        Command::Run(c) => compare(c, true).map(|_| ()),
        Command::Compare(c) => compare(c, false).map(|_| ()),
        Command::Plotdata { out } => plotdata(out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latmpc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
