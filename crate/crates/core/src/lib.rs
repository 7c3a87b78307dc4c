//! Lattice piecewise-affine approximation of nonlinear MPC for wheeled-robot
//! trajectory tracking.

pub mod controller;
pub mod harness;
pub mod kinematics;
pub mod lattice_pwa;
pub mod mpqp;
pub mod par;
