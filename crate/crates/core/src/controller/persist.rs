use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ControlError, LatticeController, MpcSettings, PointStats, SamplingPlan};
use crate::kinematics::ReferenceTrajectory;
use crate::lattice_pwa::LatticePwa;

const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.toml";

/// SHA-256 over the period and every reference state and control.
pub fn trajectory_hash(traj: &ReferenceTrajectory) -> String {
    let mut h = Sha256::new();
    h.update(traj.period.to_le_bytes());
    h.update((traj.len() as u64).to_le_bytes());
    for p in &traj.points {
        for v in p.state.as_array().iter().chain(&p.control.as_array()) {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: u32,
    trajectory_hash: String,
    points: usize,
    outputs: usize,
    build_seconds: f64,
    plan: SamplingPlan,
    mpc: MpcSettings,
    stats: Vec<PointStats>,
}

fn law_file(i: usize, j: usize) -> String {
    format!("p{i:05}_u{j}.lat")
}

impl LatticeController {
    /// Writes one lattice file per point and control component plus a
    /// manifest into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<(), ControlError> {
        fs::create_dir_all(dir)?;
        let outputs = self.laws.first().map_or(0, Vec::len);
        for (i, laws) in self.laws.iter().enumerate() {
            for (j, lat) in laws.iter().enumerate() {
                fs::write(dir.join(law_file(i, j)), lat.to_text())?;
            }
        }
        let manifest = Manifest {
            format: FORMAT_VERSION,
            trajectory_hash: self.trajectory_hash.clone(),
            points: self.laws.len(),
            outputs,
            build_seconds: self.build_seconds,
            plan: self.plan.clone(),
            mpc: self.mpc.clone(),
            stats: self.stats.clone(),
        };
        let text = toml::to_string(&manifest).map_err(|e| ControlError::Persist(e.to_string()))?;
        fs::write(dir.join(MANIFEST), text)?;
        Ok(())
    }

    /// Reads a controller saved by [`LatticeController::save`], refusing it
    /// unless it was built for `traj`.
    pub fn load(dir: &Path, traj: &ReferenceTrajectory) -> Result<Self, ControlError> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| ControlError::Persist(format!("{MANIFEST}: {e}")))?;
        if m.format != FORMAT_VERSION {
            return Err(ControlError::Persist(format!("unsupported format version {}", m.format)));
        }
        let expected = trajectory_hash(traj);
        if m.trajectory_hash != expected {
            return Err(ControlError::Persist(format!(
                "controller was built for trajectory {} but the reference hashes to {expected}",
                m.trajectory_hash
            )));
        }
        if m.stats.len() != m.points {
            return Err(ControlError::Persist("manifest stats do not match the point count".into()));
        }
        let mut laws = Vec::with_capacity(m.points);
        for i in 0..m.points {
            let mut row = Vec::with_capacity(m.outputs);
            for j in 0..m.outputs {
                let name = law_file(i, j);
                let text = fs::read_to_string(dir.join(&name))?;
                row.push(LatticePwa::from_text(&text).map_err(|e| ControlError::Persist(format!("{name}: {e}")))?);
            }
            laws.push(row);
        }
        Ok(Self {
            plan: m.plan,
            mpc: m.mpc,
            trajectory_hash: m.trajectory_hash,
            laws,
            stats: m.stats,
            build_seconds: m.build_seconds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::circle_setup;
    use super::super::{offline_build, SamplingPlan};
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let setup = circle_setup(8, [0.45, 0.3]);
        let plan = SamplingPlan { radius: 0.2, ..SamplingPlan::for_trajectory(&setup.traj, 15, 2) };
        let ctrl = offline_build(&setup, &plan).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ctrl.save(dir.path()).unwrap();
        let back = LatticeController::load(dir.path(), &setup.traj).unwrap();
        assert_eq!(back, ctrl);

        let other = circle_setup(9, [0.45, 0.3]);
        assert!(matches!(LatticeController::load(dir.path(), &other.traj), Err(ControlError::Persist(_))));
    }

    #[test]
    fn hash_depends_on_every_point() {
        let setup = circle_setup(8, [2.0, 1.5]);
        let h = trajectory_hash(&setup.traj);
        assert_eq!(h.len(), 64);
        let mut t = setup.traj.clone();
        t.points[5].control.v += 1e-15;
        assert_ne!(trajectory_hash(&t), h);
    }
}
