use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, ScenarioConfig};
use crate::controller::{
    offline_build_with, run_tracking, Artifacts, LatticeController, Strategy, TrackingResult, TrackingSetup,
};
use crate::par::Parallelism;

/// One row of the per-step run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub k: usize,
    pub t: f64,
    pub x_ref: f64,
    pub y_ref: f64,
    pub phi_ref: f64,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub v: f64,
    pub steer: f64,
    pub err: f64,
    pub eval_time_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: Strategy,
    pub offline_s: f64,
    pub online_median_us: f64,
    pub online_mean_us: f64,
    pub average_error_m: f64,
    pub max_error_m: f64,
    pub terms: usize,
    pub literals: usize,
    pub regions: usize,
    pub fallbacks: usize,
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub results: Vec<TrackingResult>,
    pub csv_paths: Vec<PathBuf>,
}

impl ComparisonReport {
    pub fn row(&self, s: Strategy) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.strategy == s)
    }

    pub fn result(&self, s: Strategy) -> Option<&TrackingResult> {
        self.results.iter().find(|r| r.strategy == s)
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<13} {:>11} {:>13} {:>13} {:>13} {:>8} {:>9} {:>8}\n",
            "strategy", "offline(s)", "median(us)", "mean(us)", "avg err(m)", "terms", "literals", "regions"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<13} {:>11.3} {:>13.3} {:>13.3} {:>13.6} {:>8} {:>9} {:>8}\n",
                r.strategy.name(),
                r.offline_s,
                r.online_median_us,
                r.online_mean_us,
                r.average_error_m,
                r.terms,
                r.literals,
                r.regions
            ));
        }
        out
    }
}

/// Offline products for the requested strategies. Only what the strategies
/// need is built: regions are enumerated only for `explicit_seq`.
pub fn prepare(
    cfg: &ScenarioConfig,
    setup: &TrackingSetup,
    strategies: &[Strategy],
    controller_dir: Option<&Path>,
) -> Result<Artifacts, HarnessError> {
    let mode = Parallelism::default();
    let mut art = Artifacts::new(setup, mode).map_err(HarnessError::Build)?;
    let wants_lattice = strategies.contains(&Strategy::Lattice);
    let wants_regions = strategies.contains(&Strategy::ExplicitSeq);
    let plan = cfg.plan(setup);

    if wants_lattice && !wants_regions {
        if let Some(dir) = controller_dir {
            if let Ok(ctrl) = LatticeController::load(dir, &setup.traj) {
                if ctrl.plan == plan && ctrl.mpc == setup.mpc {
                    art.controller = Some(ctrl);
                    return Ok(art);
                }
            }
        }
    }
    if wants_lattice || wants_regions {
        let built = offline_build_with(setup, &plan, mode).map_err(HarnessError::Build)?;
        if wants_regions {
            let seeds: Vec<_> = built.training.iter().zip(&built.validation).map(|(t, v)| [&t[..], &v[..]].concat()).collect();
            art.build_regions(&seeds, mode).map_err(HarnessError::Build)?;
        }
        if wants_lattice {
            art.controller = Some(built.controller);
        }
    }
    Ok(art)
}

pub fn step_rows(setup: &TrackingSetup, r: &TrackingResult) -> Vec<StepRow> {
    (0..r.errors.len())
        .map(|k| {
            let rf = setup.traj.points[k].state;
            let s = r.states[k];
            let u = r.controls[k];
            StepRow {
                k,
                t: k as f64 * setup.traj.period,
                x_ref: rf.x,
                y_ref: rf.y,
                phi_ref: rf.phi,
                x: s.x,
                y: s.y,
                phi: s.phi,
                v: u.v,
                steer: u.steer,
                err: r.errors[k],
                eval_time_ns: r.eval_ns[k],
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let out = |e: String| HarnessError::Output(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| out(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| out(e.to_string()))?;
    }
    w.flush().map_err(|e| out(e.to_string()))
}

pub fn report_row(r: &TrackingResult, art: &Artifacts) -> ReportRow {
    let (terms, literals) = match (r.strategy, &art.controller) {
        (Strategy::Lattice, Some(c)) => (c.total_terms(), c.total_literals()),
        _ => (0, 0),
    };
    ReportRow {
        strategy: r.strategy,
        offline_s: r.offline_seconds,
        online_median_us: r.median_eval_ns() / 1e3,
        online_mean_us: r.mean_eval_ns() / 1e3,
        average_error_m: r.average_error,
        max_error_m: r.errors.iter().copied().fold(0.0, f64::max),
        terms,
        literals,
        regions: if r.strategy == Strategy::ExplicitSeq { art.region_count() } else { 0 },
        fallbacks: r.fallbacks,
        violations: r.violations.len(),
    }
}

/// Runs each strategy from the configured start and writes
/// `run_<strategy>.csv` per strategy plus `report.csv` into `out_dir`.
pub fn run_compare(cfg: &ScenarioConfig, strategies: &[Strategy], out_dir: &Path) -> Result<ComparisonReport, HarnessError> {
    run_with(cfg, strategies, out_dir, None)
}

/// [`run_compare`] that reuses a saved lattice controller from
/// `controller_dir` when it matches the scenario.
pub fn run_with(
    cfg: &ScenarioConfig,
    strategies: &[Strategy],
    out_dir: &Path,
    controller_dir: Option<&Path>,
) -> Result<ComparisonReport, HarnessError> {
    if strategies.is_empty() {
        return Err(HarnessError::Config("no strategies requested".into()));
    }
    let mut strategies = strategies.to_vec();
    strategies.dedup();
    let setup = cfg.setup()?;
    let art = prepare(cfg, &setup, &strategies, controller_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Output(format!("{}: {e}", out_dir.display())))?;

    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut csv_paths = Vec::new();
    for &s in &strategies {
        let r = run_tracking(s, &setup, &art, cfg.x0()).map_err(HarnessError::Run)?;
        let path = out_dir.join(format!("run_{}.csv", s.name()));
        write_csv(&path, &step_rows(&setup, &r))?;
        rows.push(report_row(&r, &art));
        results.push(r);
        csv_paths.push(path);
    }
    write_csv(&out_dir.join("report.csv"), &rows)?;
    Ok(ComparisonReport { seed: cfg.seed(), rows, results, csv_paths })
}
