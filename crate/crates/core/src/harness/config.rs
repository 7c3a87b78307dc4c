use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::controller::{MpcSettings, SamplingPlan, TrackingSetup};
use crate::kinematics::{generate_reference, ReferenceShape, RobotParams, State};

/// Seed used when a scenario file does not set one.
pub const DEFAULT_SEED: u64 = 20240;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    pub wheelbase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub period: f64,
    pub points: usize,
    /// Accumulated dynamics change at which a new model is linearized.
    /// Zero gives every point its own model.
    #[serde(default)]
    pub model_share_threshold: f64,
    pub curve: ReferenceShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub state: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub samples_per_point: usize,
    /// Ball radius; half the smallest adjacent reference distance if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub resample_tolerance: f64,
    #[serde(default = "default_budget")]
    pub resample_budget: usize,
    #[serde(default = "default_validation")]
    pub validation_points: usize,
}

fn default_tolerance() -> f64 {
    SamplingPlan::DEFAULT_RESAMPLE_TOLERANCE
}

fn default_budget() -> usize {
    SamplingPlan::DEFAULT_RESAMPLE_BUDGET
}

fn default_validation() -> usize {
    SamplingPlan::DEFAULT_VALIDATION_POINTS
}

/// One tracking scenario. Stored as TOML:
///
/// ```toml
/// seed = 7
/// [robot]
/// wheelbase = 0.1
/// [reference]
/// period = 0.1
/// points = 360
/// [reference.curve]
/// shape = "circle"
/// radius = 2.0
/// cx = 0.0
/// cy = 0.0
/// [mpc]
/// horizon = 10
/// q = [10.0, 10.0, 0.5]
/// r = [0.1, 0.1]
/// x_min = [-3.0, -3.0, -9.42477796076938]
/// x_max = [3.0, 3.0, 9.42477796076938]
/// u_min = [-2.0, -1.5707963267948966]
/// u_max = [2.0, 1.5707963267948966]
/// [initial]
/// state = [1.9, 0.0, 1.57]
/// [sampling]
/// samples_per_point = 50
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub robot: RobotSection,
    pub reference: ReferenceSection,
    pub mpc: MpcSettings,
    pub initial: InitialSection,
    pub sampling: SamplingSection,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |m: String| HarnessError::Config(m);
        self.mpc.validate().map_err(|e| cfg(e.to_string()))?;
        if self.initial.state.iter().any(|v| !v.is_finite()) {
            return Err(cfg(format!("initial.state must be finite, got {:?}", self.initial.state)));
        }
        let s = &self.sampling;
        if s.samples_per_point == 0 {
            return Err(cfg("sampling.samples_per_point must be at least 1".into()));
        }
        if let Some(r) = s.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(cfg(format!("sampling.radius must be positive, got {r}")));
            }
        }
        if !(s.resample_tolerance.is_finite() && s.resample_tolerance > 0.0) {
            return Err(cfg(format!("sampling.resample_tolerance must be positive, got {}", s.resample_tolerance)));
        }
        if !self.reference.model_share_threshold.is_finite() {
            return Err(cfg("reference.model_share_threshold must be finite".into()));
        }
        self.setup()?;
        Ok(())
    }

    pub fn x0(&self) -> State {
        State::from_slice(&self.initial.state)
    }

    /// Reference, linearizations and MPC settings described by the file.
    pub fn setup(&self) -> Result<TrackingSetup, HarnessError> {
        let cfg = |m: String| HarnessError::Config(m);
        let params = RobotParams::new(self.robot.wheelbase).map_err(|e| cfg(format!("robot: {e}")))?;
        let r = &self.reference;
        let traj = generate_reference(&r.curve, &params, r.period, r.points).map_err(|e| cfg(format!("reference: {e}")))?;
        TrackingSetup::new(params, traj, self.mpc.clone(), r.model_share_threshold).map_err(|e| cfg(e.to_string()))
    }

    pub fn plan(&self, setup: &TrackingSetup) -> SamplingPlan {
        let s = &self.sampling;
        let mut plan = SamplingPlan::for_trajectory(&setup.traj, s.samples_per_point, self.seed());
        if let Some(r) = s.radius {
            plan.radius = r;
        }
        plan.resample_tolerance = s.resample_tolerance;
        plan.resample_budget = s.resample_budget;
        plan.validation_points = s.validation_points;
        plan
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    ScenarioConfig::parse(&text).map_err(|e| match e {
        HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
