use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{ControlError, LatticeController, TrackingSetup, TrainingSample};
use crate::kinematics::{integrate_plant, Control, State};
use crate::mpqp::{enumerate_regions_with, locate, ExplicitLaw, MpQpProblem, QpSession};
use crate::par::{self, Parallelism};

/// RK4 substeps per sampling period of the simulated plant.
pub const PLANT_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Lattice,
    LinearMpc,
    ExplicitSeq,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Lattice, Strategy::LinearMpc, Strategy::ExplicitSeq];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Lattice => "lattice",
            Strategy::LinearMpc => "linear_mpc",
            Strategy::ExplicitSeq => "explicit_seq",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| format!("unknown strategy `{s}` (expected lattice, linear_mpc or explicit_seq)"))
    }
}

/// Offline products the strategies evaluate online.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub problems: Vec<MpQpProblem>,
    pub controller: Option<LatticeController>,
    pub regions: Option<Vec<Vec<ExplicitLaw>>>,
    pub problem_seconds: f64,
    pub region_seconds: f64,
}

impl Artifacts {
    pub fn new(setup: &TrackingSetup, mode: Parallelism) -> Result<Self, ControlError> {
        let start = Instant::now();
        let problems = setup.problems(mode)?;
        Ok(Self { problems, problem_seconds: start.elapsed().as_secs_f64(), ..Self::default() })
    }

    /// Enumerates the critical regions reached from `seeds[i]` for each
    /// point, in parallel across points.
    pub fn build_regions(&mut self, seeds: &[Vec<TrainingSample>], mode: Parallelism) -> Result<(), ControlError> {
        let start = Instant::now();
        let problems = &self.problems;
        let regions = par::try_map_indexed(problems.len(), mode, |i| {
            let xs: Vec<DVector<f64>> = seeds[i].iter().map(|s| DVector::from_row_slice(&s.x)).collect();
            enumerate_regions_with(&problems[i], &xs, Parallelism::Sequential)
                .map_err(|source| ControlError::Problem { point: i, source })
        })?;
        self.region_seconds = start.elapsed().as_secs_f64();
        self.regions = Some(regions);
        Ok(())
    }

    pub fn region_count(&self) -> usize {
        self.regions.as_ref().map_or(0, |r| r.iter().map(Vec::len).sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingResult {
    pub strategy: Strategy,
    /// Plant states `x_0..=x_K`.
    pub states: Vec<State>,
    pub controls: Vec<Control>,
    /// `‖(x_k, y_k) - (x_r(k), y_r(k))‖` for `k = 0..K`.
    pub errors: Vec<f64>,
    pub average_error: f64,
    pub eval_ns: Vec<u64>,
    /// Steps whose resulting plant state left the state box.
    pub violations: Vec<usize>,
    /// Steps where sequential search found no region and the QP was solved.
    pub fallbacks: usize,
    pub offline_seconds: f64,
}

impl TrackingResult {
    pub fn median_eval_ns(&self) -> f64 {
        median(&self.eval_ns)
    }

    pub fn mean_eval_ns(&self) -> f64 {
        if self.eval_ns.is_empty() {
            return 0.0;
        }
        self.eval_ns.iter().map(|&v| v as f64).sum::<f64>() / self.eval_ns.len() as f64
    }
}

pub fn median(v: &[u64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        (s[n / 2 - 1] as f64 + s[n / 2] as f64) / 2.0
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Control of the lattice strategy at step `i`.
pub fn online_step(ctrl: &LatticeController, i: usize, x: &State) -> Control {
    let mut u = [0.0; 2];
    ctrl.eval_into(i, &x.as_array(), &mut u);
    Control::from_slice(&u)
}

/// Closed-loop rollout over the whole reference from `x0`, one controller
/// index per time step.
pub fn run_tracking(
    strategy: Strategy,
    setup: &TrackingSetup,
    artifacts: &Artifacts,
    x0: State,
) -> Result<TrackingResult, ControlError> {
    let steps = setup.len();
    let period = setup.traj.period;
    let (controller, regions) = match strategy {
        Strategy::Lattice => (Some(artifacts.controller.as_ref().ok_or(ControlError::MissingArtifacts("lattice"))?), None),
        Strategy::ExplicitSeq => (None, Some(artifacts.regions.as_ref().ok_or(ControlError::MissingArtifacts("explicit_seq"))?)),
        Strategy::LinearMpc => (None, None),
    };
    if artifacts.problems.len() < steps && strategy != Strategy::Lattice {
        return Err(ControlError::MissingArtifacts("problems"));
    }
    let offline_seconds = match strategy {
        Strategy::Lattice => controller.map_or(0.0, |c| c.build_seconds),
        Strategy::LinearMpc => artifacts.problem_seconds,
        Strategy::ExplicitSeq => artifacts.problem_seconds + artifacts.region_seconds,
    };

    let mut states = Vec::with_capacity(steps + 1);
    let mut controls = Vec::with_capacity(steps);
    let mut errors = Vec::with_capacity(steps);
    let mut eval_ns = Vec::with_capacity(steps);
    let mut violations = Vec::new();
    let mut fallbacks = 0;
    let mut session = QpSession::new();
    let mut x = x0;
    states.push(x);
    for k in 0..steps {
        errors.push(x.position_distance(&setup.traj.points[k].state));
        let xa = x.as_array();
        let mut u = [0.0; 2];
        let start = Instant::now();
        match strategy {
            Strategy::Lattice => controller.expect("checked").eval_into(k, &xa, &mut u),
            Strategy::LinearMpc => {
                let sol = session
                    .solve(&artifacts.problems[k], &DVector::from_row_slice(&xa))
                    .map_err(|source| ControlError::Step { step: k, source })?;
                u.copy_from_slice(sol.first_control(2));
                setup.mpc.clamp_input(&mut u);
            }
            Strategy::ExplicitSeq => {
                let laws = &regions.expect("checked")[k];
                match locate(laws, &xa) {
                    Some(r) => laws[r].first_control().eval_into(&xa, &mut u),
                    None => {
                        fallbacks += 1;
                        let sol = session
                            .solve(&artifacts.problems[k], &DVector::from_row_slice(&xa))
                            .map_err(|source| ControlError::Step { step: k, source })?;
                        u.copy_from_slice(sol.first_control(2));
                    }
                }
                setup.mpc.clamp_input(&mut u);
            }
        }
        eval_ns.push(start.elapsed().as_nanos() as u64);
        let control = Control::from_slice(&u);
        x = integrate_plant(&x, &control, &setup.params, period, PLANT_SUBSTEPS)?;
        if !setup.mpc.state_in_box(&x.as_array()) {
            violations.push(k + 1);
        }
        controls.push(control);
        states.push(x);
    }
    let average_error = mean(&errors);
    Ok(TrackingResult {
        strategy,
        states,
        controls,
        errors,
        average_error,
        eval_ns,
        violations,
        fallbacks,
        offline_seconds,
    })
}
