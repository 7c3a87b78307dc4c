//! Offline construction of per-reference-point lattice control laws and the
//! online tracking loop.

mod persist;
mod tracking;

pub use persist::trajectory_hash;
pub use tracking::{online_step, run_tracking, Artifacts, Strategy, TrackingResult};

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    select_linearization_points, DiscreteAffineModel, KinematicsError, ModelAssignment, ReferenceTrajectory,
    RobotParams,
};
use crate::lattice_pwa::{LabeledSample, LatticeError, LatticePwa};
use crate::mpqp::{condense, explicit_law, solve_qp, AffineControlLaw, LinearMpcSpec, MpQpProblem, MpqpError};
use crate::par::{self, Parallelism};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("reference point {point}: {source}")]
    Problem { point: usize, source: MpqpError },
    #[error("reference point {point}: no feasible sample in the sampling ball after {draws} draws (last error: {last})")]
    InfeasibleBall { point: usize, draws: usize, last: MpqpError },
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("invalid MPC settings: {0}")]
    InvalidSettings(String),
    #[error("step {step}: {source}")]
    Step { step: usize, source: MpqpError },
    #[error("strategy {0} needs artifacts that were not built")]
    MissingArtifacts(&'static str),
    #[error("controller directory: {0}")]
    Persist(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Horizon, diagonal weights and box bounds shared by every reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSettings {
    pub horizon: usize,
    pub q: [f64; 3],
    pub r: [f64; 2],
    pub x_min: [f64; 3],
    pub x_max: [f64; 3],
    pub u_min: [f64; 2],
    pub u_max: [f64; 2],
}

impl MpcSettings {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: String| Err(ControlError::InvalidSettings(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("state weights must be finite and nonnegative, got {:?}", self.q));
        }
        if self.r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad(format!("input weights must be finite and positive, got {:?}", self.r));
        }
        for (name, lo, hi) in [
            ("x", &self.x_min[..], &self.x_max[..]),
            ("u", &self.u_min[..], &self.u_max[..]),
        ] {
            for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
                if l.is_nan() || h.is_nan() || l > h {
                    return bad(format!("{name}_min[{i}] = {l} exceeds {name}_max[{i}] = {h}"));
                }
            }
        }
        Ok(())
    }

    pub fn clamp_input(&self, u: &mut [f64]) {
        for ((v, lo), hi) in u.iter_mut().zip(&self.u_min).zip(&self.u_max) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn state_in_box(&self, x: &[f64; 3]) -> bool {
        x.iter().zip(&self.x_min).zip(&self.x_max).all(|((v, lo), hi)| v >= lo && v <= hi)
    }
}

/// Everything that defines the per-point linear MPC problems.
#[derive(Debug, Clone)]
pub struct TrackingSetup {
    pub params: RobotParams,
    pub traj: ReferenceTrajectory,
    pub mpc: MpcSettings,
    pub assignment: ModelAssignment,
    pub models: Vec<DiscreteAffineModel>,
}

impl TrackingSetup {
    /// Linearizes the reference, sharing models between consecutive points
    /// when `share_threshold > 0`.
    pub fn new(
        params: RobotParams,
        traj: ReferenceTrajectory,
        mpc: MpcSettings,
        share_threshold: f64,
    ) -> Result<Self, ControlError> {
        mpc.validate()?;
        let assignment = select_linearization_points(&traj, &params, share_threshold)?;
        let all = traj.linearize_all(&params)?;
        let models = assignment.sources.iter().map(|&s| all[s].clone()).collect();
        Ok(Self { params, traj, mpc, assignment, models })
    }

    pub fn len(&self) -> usize {
        self.traj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traj.is_empty()
    }

    /// Linear MPC for reference point `i`: the point's (possibly shared)
    /// model, targets `x_r(i+1..=i+N)` and `u_r(i..i+N)`, repeating the last
    /// reference point past the end of the trajectory.
    pub fn spec(&self, i: usize) -> LinearMpcSpec {
        let m = &self.mpc;
        let n = m.horizon;
        let model = self.models[self.assignment.model_of_point[i]].to_dynamic();
        LinearMpcSpec {
            model,
            horizon: n,
            q: nalgebra::DMatrix::from_diagonal(&DVector::from_row_slice(&m.q)),
            r: nalgebra::DMatrix::from_diagonal(&DVector::from_row_slice(&m.r)),
            x_min: DVector::from_row_slice(&m.x_min),
            x_max: DVector::from_row_slice(&m.x_max),
            u_min: DVector::from_row_slice(&m.u_min),
            u_max: DVector::from_row_slice(&m.u_max),
            state_ref: (1..=n).map(|j| DVector::from_row_slice(&self.traj.point(i + j).state.as_array())).collect(),
            input_ref: (0..n).map(|j| DVector::from_row_slice(&self.traj.point(i + j).control.as_array())).collect(),
        }
    }

    pub fn problem(&self, i: usize) -> Result<MpQpProblem, ControlError> {
        condense(&self.spec(i)).map_err(|source| ControlError::Problem { point: i, source })
    }

    pub fn problems(&self, mode: Parallelism) -> Result<Vec<MpQpProblem>, ControlError> {
        par::try_map_indexed(self.len(), mode, |i| self.problem(i))
    }
}

/// Sampling and refinement settings of the offline build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    /// Ball radius in `(x, y, phi)`, heading treated as a coordinate.
    pub radius: f64,
    pub samples_per_point: usize,
    pub resample_tolerance: f64,
    pub resample_budget: usize,
    /// Held-out points per reference point used for resampling and
    /// simplification.
    pub validation_points: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub const DEFAULT_RESAMPLE_TOLERANCE: f64 = 1e-4;
    pub const DEFAULT_RESAMPLE_BUDGET: usize = 3;
    pub const DEFAULT_VALIDATION_POINTS: usize = 100;

    /// Default plan with `r = d / 2`, `d` the smallest adjacent reference
    /// distance.
    pub fn for_trajectory(traj: &ReferenceTrajectory, samples_per_point: usize, seed: u64) -> Self {
        Self {
            radius: traj.min_adjacent_distance() / 2.0,
            samples_per_point,
            resample_tolerance: Self::DEFAULT_RESAMPLE_TOLERANCE,
            resample_budget: Self::DEFAULT_RESAMPLE_BUDGET,
            validation_points: Self::DEFAULT_VALIDATION_POINTS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: &str| Err(ControlError::InvalidPlan(m.to_string()));
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad("radius must be positive and finite");
        }
        if self.samples_per_point == 0 {
            return bad("at least one sample per point is required");
        }
        if !(self.resample_tolerance.is_finite() && self.resample_tolerance > 0.0) {
            return bad("resample tolerance must be positive");
        }
        Ok(())
    }

    /// Independent stream per reference point so that parallel and
    /// sequential builds draw identical samples.
    pub fn point_rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng
    }
}

/// Uniform draw from the Euclidean ball by rejection from the cube.
pub fn sample_ball<R: Rng>(rng: &mut R, center: &[f64; 3], radius: f64) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        if v.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
            return std::array::from_fn(|i| center[i] + radius * v[i]);
        }
    }
}

/// A state with its QP first control and the affine law of its region.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub x: [f64; 3],
    pub u: Vec<f64>,
    pub law: AffineControlLaw,
}

impl TrainingSample {
    pub fn solve(p: &MpQpProblem, x: [f64; 3]) -> Result<Self, MpqpError> {
        let xv = DVector::from_row_slice(&x);
        let sol = solve_qp(p, &xv)?;
        let law = explicit_law(p, &sol, &xv)?;
        Ok(Self { x, u: sol.first_control(p.n_u).to_vec(), law: law.first_control().clone() })
    }
}

/// Size and quality figures of one reference point's controller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub samples: usize,
    pub discarded: usize,
    pub resample_rounds: usize,
    pub resampled_points: usize,
    pub terms_before: usize,
    pub literals_before: usize,
    pub terms_after: usize,
    pub literals_after: usize,
    /// Largest `|lattice - QP|` over the training samples after simplification.
    pub training_residual: f64,
    /// Largest `|lattice - QP|` over the held-out points after resampling.
    pub validation_error: f64,
}

/// Per-reference-point lattice laws, one per control component.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeController {
    pub plan: SamplingPlan,
    pub mpc: MpcSettings,
    pub trajectory_hash: String,
    pub laws: Vec<Vec<LatticePwa>>,
    pub stats: Vec<PointStats>,
    pub build_seconds: f64,
}

impl LatticeController {
    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn total_terms(&self) -> usize {
        self.laws.iter().flatten().map(LatticePwa::term_count).sum()
    }

    pub fn total_literals(&self) -> usize {
        self.laws.iter().flatten().map(|l| l.literals().len()).sum()
    }

    /// Evaluates the laws of point `i` at `x` and clamps to the input box.
    #[inline]
    pub fn eval_into(&self, i: usize, x: &[f64; 3], u: &mut [f64]) {
        let laws = &self.laws[i.min(self.laws.len() - 1)];
        for (out, lat) in u.iter_mut().zip(laws) {
            *out = lat.evaluate_unchecked(x);
        }
        self.mpc.clamp_input(u);
    }
}

/// Controller together with the data it was built from.
#[derive(Debug, Clone)]
pub struct OfflineArtifacts {
    pub controller: LatticeController,
    /// Lattices before simplification, same layout as `controller.laws`.
    pub unsimplified: Vec<Vec<LatticePwa>>,
    pub training: Vec<Vec<TrainingSample>>,
    pub validation: Vec<Vec<TrainingSample>>,
    pub problems: Vec<MpQpProblem>,
}

impl OfflineArtifacts {
    pub fn unsimplified_controller(&self) -> LatticeController {
        LatticeController { laws: self.unsimplified.clone(), ..self.controller.clone() }
    }
}

struct PointBuild {
    raw: Vec<LatticePwa>,
    simplified: Vec<LatticePwa>,
    training: Vec<TrainingSample>,
    validation: Vec<TrainingSample>,
    stats: PointStats,
}

pub fn offline_build(setup: &TrackingSetup, plan: &SamplingPlan) -> Result<LatticeController, ControlError> {
    Ok(offline_build_with(setup, plan, Parallelism::default())?.controller)
}

/// Builds every point's controller, in parallel across reference points
/// unless `mode` is sequential. Output does not depend on `mode`.
pub fn offline_build_with(
    setup: &TrackingSetup,
    plan: &SamplingPlan,
    mode: Parallelism,
) -> Result<OfflineArtifacts, ControlError> {
    plan.validate()?;
    let start = Instant::now();
    let problems = setup.problems(mode)?;
    let builds = par::try_map_indexed(setup.len(), mode, |i| build_point(setup, plan, &problems[i], i))?;
    let build_seconds = start.elapsed().as_secs_f64();

    let mut laws = Vec::with_capacity(builds.len());
    let mut unsimplified = Vec::with_capacity(builds.len());
    let mut stats = Vec::with_capacity(builds.len());
    let mut training = Vec::with_capacity(builds.len());
    let mut validation = Vec::with_capacity(builds.len());
    for b in builds {
        laws.push(b.simplified);
        unsimplified.push(b.raw);
        stats.push(b.stats);
        training.push(b.training);
        validation.push(b.validation);
    }
    let controller = LatticeController {
        plan: plan.clone(),
        mpc: setup.mpc.clone(),
        trajectory_hash: trajectory_hash(&setup.traj),
        laws,
        stats,
        build_seconds,
    };
    Ok(OfflineArtifacts { controller, unsimplified, training, validation, problems })
}

/// Draws up to `count` feasible samples. The first training draw is the
/// reference state itself.
fn draw_feasible(
    p: &MpQpProblem,
    rng: &mut ChaCha8Rng,
    center: &[f64; 3],
    radius: f64,
    count: usize,
    include_center: bool,
) -> (Vec<TrainingSample>, usize, Option<MpqpError>) {
    let max_draws = 20 * count + 20;
    let mut out = Vec::with_capacity(count);
    let mut discarded = 0;
    let mut last_err = None;
    let mut draws = 0;
    while out.len() < count && draws < max_draws {
        let x = if include_center && draws == 0 { *center } else { sample_ball(rng, center, radius) };
        draws += 1;
        match TrainingSample::solve(p, x) {
            Ok(s) => out.push(s),
            Err(e) => {
                discarded += 1;
                last_err = Some(e);
            }
        }
    }
    (out, discarded, last_err)
}

fn fit(training: &[TrainingSample], n_u: usize) -> Result<Vec<LatticePwa>, LatticeError> {
    (0..n_u)
        .map(|j| {
            let samples: Vec<LabeledSample> =
                training.iter().map(|s| LabeledSample::from_active(s.x.to_vec(), s.law.component(j))).collect();
            LatticePwa::construct_from_samples(&samples)
        })
        .collect()
}

fn mismatch(laws: &[LatticePwa], s: &TrainingSample) -> f64 {
    laws.iter().zip(&s.u).map(|(l, u)| (l.evaluate_unchecked(&s.x) - u).abs()).fold(0.0, f64::max)
}

fn build_point(
    setup: &TrackingSetup,
    plan: &SamplingPlan,
    p: &MpQpProblem,
    i: usize,
) -> Result<PointBuild, ControlError> {
    let center = setup.traj.points[i].state.as_array();
    let mut rng = plan.point_rng(i);
    let (mut training, discarded, last) =
        draw_feasible(p, &mut rng, &center, plan.radius, plan.samples_per_point, true);
    if training.is_empty() {
        return Err(ControlError::InfeasibleBall {
            point: i,
            draws: discarded,
            last: last.unwrap_or(MpqpError::Infeasible),
        });
    }
    let (validation, _, _) = draw_feasible(p, &mut rng, &center, plan.radius, plan.validation_points, false);

    let mut stats = PointStats { discarded, ..PointStats::default() };
    let mut raw = fit(&training, p.n_u)?;
    for _ in 0..plan.resample_budget {
        let bad: Vec<&TrainingSample> =
            validation.iter().filter(|s| mismatch(&raw, s) > plan.resample_tolerance).collect();
        if bad.is_empty() {
            break;
        }
        stats.resample_rounds += 1;
        stats.resampled_points += bad.len();
        training.extend(bad.into_iter().cloned());
        raw = fit(&training, p.n_u)?;
    }

    let grid: Vec<Vec<f64>> = training.iter().chain(&validation).map(|s| s.x.to_vec()).collect();
    let simplified: Vec<LatticePwa> = raw.iter().map(|l| l.simplify(&grid)).collect();

    stats.samples = training.len();
    stats.terms_before = raw.iter().map(LatticePwa::term_count).sum();
    stats.literals_before = raw.iter().map(|l| l.literals().len()).sum();
    stats.terms_after = simplified.iter().map(LatticePwa::term_count).sum();
    stats.literals_after = simplified.iter().map(|l| l.literals().len()).sum();
    stats.training_residual = training.iter().map(|s| mismatch(&simplified, s)).fold(0.0, f64::max);
    stats.validation_error = validation.iter().map(|s| mismatch(&simplified, s)).fold(0.0, f64::max);
    Ok(PointBuild { raw, simplified, training, validation, stats })
}
