//! Bicycle-style kinematics of a wheeled mobile robot, reachable reference
//! trajectories, plant integration and successive linearization along the
//! reference.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("steering angle {0} rad is outside the open interval (-pi/2, pi/2)")]
    SteeringDomain(f64),
    #[error("wheelbase must be positive and finite, got {0}")]
    InvalidWheelbase(f64),
    #[error("integration needs at least one substep")]
    NoSubsteps,
    #[error("reference speed vanishes at parameter {0}; heading is undefined")]
    ZeroSpeed(f64),
    #[error("a reference trajectory needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid {name}: {value}")]
    InvalidGeometry { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    /// Wheelbase in meters.
    pub wheelbase: f64,
}

impl RobotParams {
    pub fn new(wheelbase: f64) -> Result<Self, KinematicsError> {
        if !(wheelbase.is_finite() && wheelbase > 0.0) {
            return Err(KinematicsError::InvalidWheelbase(wheelbase));
        }
        Ok(Self { wheelbase })
    }
}

/// Robot pose. The heading is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl State {
    pub const fn new(x: f64, y: f64, phi: f64) -> Self {
        Self { x, y, phi }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.phi)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.phi]
    }

    pub fn position_distance(&self, other: &State) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.phi.is_finite()
    }
}

/// Forward speed and front-wheel deflection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub v: f64,
    pub steer: f64,
}

impl Control {
    pub const fn new(v: f64, steer: f64) -> Self {
        Self { v, steer }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.v, self.steer)
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1])
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.v, self.steer]
    }
}

fn check_steer(steer: f64) -> Result<(), KinematicsError> {
    if steer.is_finite() && steer.abs() < FRAC_PI_2 {
        Ok(())
    } else {
        Err(KinematicsError::SteeringDomain(steer))
    }
}

/// Continuous-time kinematics `[v cos phi, v sin phi, v tan(steer) / l]`.
pub fn dynamics(s: &State, u: &Control, p: &RobotParams) -> Result<Vector3<f64>, KinematicsError> {
    check_steer(u.steer)?;
    Ok(Vector3::new(
        u.v * s.phi.cos(),
        u.v * s.phi.sin(),
        u.v * u.steer.tan() / p.wheelbase,
    ))
}

/// Analytic Jacobians of [`dynamics`] with respect to state and control.
pub fn jacobians(
    s: &State,
    u: &Control,
    p: &RobotParams,
) -> Result<(Matrix3<f64>, Matrix3x2<f64>), KinematicsError> {
    check_steer(u.steer)?;
    let (sin, cos) = s.phi.sin_cos();
    let tan = u.steer.tan();
    let sec2 = 1.0 + tan * tan;
    #[rustfmt::skip]
    let jx = Matrix3::new(
        0.0, 0.0, -u.v * sin,
        0.0, 0.0,  u.v * cos,
        0.0, 0.0,  0.0,
    );
    #[rustfmt::skip]
    let ju = Matrix3x2::new(
        cos,                 0.0,
        sin,                 0.0,
        tan / p.wheelbase,   u.v * sec2 / p.wheelbase,
    );
    Ok((jx, ju))
}

/// Classical fourth-order Runge-Kutta over one period with `substeps` equal
/// sub-intervals and the control held constant.
pub fn integrate_plant(
    s: &State,
    u: &Control,
    p: &RobotParams,
    period: f64,
    substeps: usize,
) -> Result<State, KinematicsError> {
    if substeps == 0 {
        return Err(KinematicsError::NoSubsteps);
    }
    check_steer(u.steer)?;
    let h = period / substeps as f64;
    let f = |v: &Vector3<f64>| dynamics(&State::from_vector(v), u, p);
    let mut x = s.to_vector();
    for _ in 0..substeps {
        let k1 = f(&x)?;
        let k2 = f(&(x + k1 * (h / 2.0)))?;
        let k3 = f(&(x + k2 * (h / 2.0)))?;
        let k4 = f(&(x + k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(State::from_vector(&x))
}

/// Forward-difference discretization `x+ = A x + B u + c` of the kinematics
/// linearized at one reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAffineModel {
    pub a: Matrix3<f64>,
    pub b: Matrix3x2<f64>,
    pub c: Vector3<f64>,
    pub source_index: usize,
}

impl DiscreteAffineModel {
    pub fn step(&self, x: &Vector3<f64>, u: &Vector2<f64>) -> Vector3<f64> {
        self.a * x + self.b * u + self.c
    }

    /// Dynamically sized copy for the generic MPC machinery.
    pub fn to_dynamic(&self) -> AffineDynamics {
        AffineDynamics {
            a: DMatrix::from_fn(3, 3, |i, j| self.a[(i, j)]),
            b: DMatrix::from_fn(3, 2, |i, j| self.b[(i, j)]),
            c: DVector::from_fn(3, |i, _| self.c[i]),
        }
    }
}

/// Affine discrete dynamics of arbitrary dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl AffineDynamics {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// One sample of a reachable reference: pose, control and the curve's own
/// state derivative at that instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub state: State,
    pub control: Control,
    pub derivative: Vector3<f64>,
}

pub fn linearize(
    point: &ReferencePoint,
    p: &RobotParams,
    period: f64,
    source_index: usize,
) -> Result<DiscreteAffineModel, KinematicsError> {
    let (jx, ju) = jacobians(&point.state, &point.control, p)?;
    let f = dynamics(&point.state, &point.control, p)?;
    let xr = point.state.to_vector();
    let ur = point.control.to_vector();
    Ok(DiscreteAffineModel {
        a: Matrix3::identity() + jx * period,
        b: ju * period,
        c: (f - jx * xr - ju * ur) * period,
        source_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReferenceShape {
    /// Counter-clockwise circle starting at `(cx + radius, cy)`.
    Circle { radius: f64, cx: f64, cy: f64 },
    /// Lissajous figure-eight `x = a sin(theta)`, `y = b sin(2 theta) / 2`,
    /// starting at the crossing point.
    Figure8 { a: f64, b: f64 },
}

impl ReferenceShape {
    fn validate(&self) -> Result<(), KinematicsError> {
        let check = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(KinematicsError::InvalidGeometry { name, value })
            }
        };
        match *self {
            ReferenceShape::Circle { radius, cx, cy } => {
                check("radius", radius)?;
                if !(cx.is_finite() && cy.is_finite()) {
                    return Err(KinematicsError::InvalidGeometry { name: "center", value: cx + cy });
                }
                Ok(())
            }
            ReferenceShape::Figure8 { a, b } => {
                check("a", a)?;
                check("b", b)
            }
        }
    }

    /// Position and its first two derivatives in the curve parameter.
    fn curve(&self, theta: f64) -> [Vector2<f64>; 3] {
        match *self {
            ReferenceShape::Circle { radius, cx, cy } => {
                let (s, c) = theta.sin_cos();
                [
                    Vector2::new(cx + radius * c, cy + radius * s),
                    Vector2::new(-radius * s, radius * c),
                    Vector2::new(-radius * c, -radius * s),
                ]
            }
            ReferenceShape::Figure8 { a, b } => {
                let (s, c) = theta.sin_cos();
                let (s2, c2) = (2.0 * theta).sin_cos();
                [
                    Vector2::new(a * s, b * s2 / 2.0),
                    Vector2::new(a * c, b * c2),
                    Vector2::new(-a * s, -2.0 * b * s2),
                ]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub period: f64,
    pub points: Vec<ReferencePoint>,
}

impl ReferenceTrajectory {
    pub fn new(period: f64, points: Vec<ReferencePoint>) -> Result<Self, KinematicsError> {
        if points.len() < 2 {
            return Err(KinematicsError::TooFewPoints(points.len()));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(KinematicsError::InvalidGeometry { name: "period", value: period });
        }
        Ok(Self { period, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reference point `k`, repeating the final point past the end.
    pub fn point(&self, k: usize) -> &ReferencePoint {
        &self.points[k.min(self.points.len() - 1)]
    }

    /// Largest `‖xi_dot - f(xi, u)‖` over all points.
    pub fn reachability_residual(&self, p: &RobotParams) -> Result<f64, KinematicsError> {
        let mut worst = 0.0_f64;
        for pt in &self.points {
            let f = dynamics(&pt.state, &pt.control, p)?;
            worst = worst.max((pt.derivative - f).norm());
        }
        Ok(worst)
    }

    /// Smallest Euclidean distance between adjacent points in `(x, y, phi)`.
    pub fn min_adjacent_distance(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].state.to_vector() - w[0].state.to_vector()).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn linearize_all(&self, p: &RobotParams) -> Result<Vec<DiscreteAffineModel>, KinematicsError> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, pt)| linearize(pt, p, self.period, i))
            .collect()
    }
}

/// Samples `count` points of one traversal of `shape` taking `count * period`
/// seconds. Controls are recovered from the curve derivatives so every point
/// is reachable.
pub fn generate_reference(
    shape: &ReferenceShape,
    p: &RobotParams,
    period: f64,
    count: usize,
) -> Result<ReferenceTrajectory, KinematicsError> {
    shape.validate()?;
    if count < 2 {
        return Err(KinematicsError::TooFewPoints(count));
    }
    // theta advances uniformly; d(theta)/dt is constant.
    let rate = TAU / (count as f64 * period);
    let mut points = Vec::with_capacity(count);
    let mut prev_phi: Option<f64> = None;
    for k in 0..count {
        let theta = TAU * k as f64 / count as f64;
        let [pos, d1, d2] = shape.curve(theta);
        let vel = d1 * rate;
        let acc = d2 * rate * rate;
        let speed = vel.norm();
        if speed <= 1e-12 {
            return Err(KinematicsError::ZeroSpeed(theta));
        }
        let raw = vel.y.atan2(vel.x);
        let phi = match prev_phi {
            None => raw,
            Some(prev) => raw + TAU * ((prev - raw) / TAU).round(),
        };
        prev_phi = Some(phi);
        let phi_dot = (vel.x * acc.y - vel.y * acc.x) / (speed * speed);
        let steer = (p.wheelbase * phi_dot / speed).atan();
        check_steer(steer)?;
        points.push(ReferencePoint {
            state: State::new(pos.x, pos.y, phi),
            control: Control::new(speed, steer),
            derivative: Vector3::new(vel.x, vel.y, phi_dot),
        });
    }
    ReferenceTrajectory::new(period, points)
}

/// Result of equivalent linearization point selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelAssignment {
    /// Reference index each model is linearized at, in trajectory order.
    pub sources: Vec<usize>,
    /// Model index used by every reference point.
    pub model_of_point: Vec<usize>,
}

impl ModelAssignment {
    pub fn identity(count: usize) -> Self {
        Self { sources: (0..count).collect(), model_of_point: (0..count).collect() }
    }

    pub fn model_count(&self) -> usize {
        self.sources.len()
    }
}

/// Greedy scan that shares one linearized model among consecutive points
/// until the accumulated change of the dynamics, summed in the 1-norm,
/// reaches `delta_threshold`. A non-positive threshold gives every point its
/// own model.
pub fn select_linearization_points(
    traj: &ReferenceTrajectory,
    p: &RobotParams,
    delta_threshold: f64,
) -> Result<ModelAssignment, KinematicsError> {
    let f: Vec<Vector3<f64>> = traj
        .points
        .iter()
        .map(|pt| dynamics(&pt.state, &pt.control, p))
        .collect::<Result<_, _>>()?;
    if delta_threshold <= 0.0 {
        return Ok(ModelAssignment::identity(f.len()));
    }
    let mut sources = vec![0];
    let mut model_of_point = vec![0];
    let mut source = 0;
    let mut accumulated = 0.0;
    for k in 1..f.len() {
        accumulated += (f[k] - f[source]).abs().sum();
        if accumulated >= delta_threshold {
            source = k;
            sources.push(k);
            accumulated = 0.0;
        }
        model_of_point.push(sources.len() - 1);
    }
    Ok(ModelAssignment { sources, model_of_point })
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const L: RobotParams = RobotParams { wheelbase: 0.1 };

    #[test]
    fn dynamics_simple_cases() {
        let d = dynamics(&State::new(0.0, 0.0, 0.0), &Control::new(1.0, 0.0), &L).unwrap();
        assert_eq!(d, Vector3::new(1.0, 0.0, 0.0));
        let d = dynamics(&State::new(0.0, 0.0, FRAC_PI_2), &Control::new(2.0, 0.0), &L).unwrap();
        assert_abs_diff_eq!(d, Vector3::new(0.0, 2.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn dynamics_matches_numpy_evaluation() {
        // Evaluated independently with numpy:
        // [1.5*cos(0.3), 1.5*sin(0.3), 1.5*tan(0.2)/0.1]
        let d = dynamics(&State::new(1.0, 1.0, 0.3), &Control::new(1.5, 0.2), &L).unwrap();
        assert_abs_diff_eq!(d[0], 1.433004733688409, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], 0.4432803099920093, epsilon = 1e-14);
        assert_abs_diff_eq!(d[2], 3.0406505326300874, epsilon = 1e-13);
    }

    #[test]
    fn steering_domain_is_enforced() {
        let s = State::default();
        assert!(matches!(
            dynamics(&s, &Control::new(1.0, FRAC_PI_2), &L),
            Err(KinematicsError::SteeringDomain(_))
        ));
        assert!(integrate_plant(&s, &Control::new(1.0, -FRAC_PI_2), &L, 0.1, 10).is_err());
        assert!(RobotParams::new(0.0).is_err());
        assert_eq!(
            integrate_plant(&s, &Control::new(1.0, 0.0), &L, 0.1, 0),
            Err(KinematicsError::NoSubsteps)
        );
    }

    #[test]
    fn plant_zero_speed_and_straight_line() {
        let s = State::new(0.3, -0.2, 1.1);
        assert_eq!(integrate_plant(&s, &Control::new(0.0, 0.7), &L, 0.4, 10).unwrap(), s);
        let out = integrate_plant(&State::default(), &Control::new(1.0, 0.0), &L, 0.1, 10).unwrap();
        assert_abs_diff_eq!(out.x, 0.1, epsilon = 1e-15);
        assert_eq!(out.y, 0.0);
        assert_eq!(out.phi, 0.0);
    }

    #[test]
    fn plant_self_convergence() {
        let u = Control::new(1.0, 0.3);
        let coarse = integrate_plant(&State::default(), &u, &L, 0.1, 10).unwrap();
        let fine = integrate_plant(&State::default(), &u, &L, 0.1, 1000).unwrap();
        assert!((coarse.to_vector() - fine.to_vector()).norm() < 1e-8);
    }

    #[test]
    fn linearize_hand_evaluated_point() {
        let pt = ReferencePoint {
            state: State::default(),
            control: Control::new(1.0, 0.0),
            derivative: Vector3::new(1.0, 0.0, 0.0),
        };
        let m = linearize(&pt, &L, 0.1, 0).unwrap();
        #[rustfmt::skip]
        let a = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.1, 0.0, 0.0, 1.0);
        #[rustfmt::skip]
        let b = Matrix3x2::new(0.1, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(m.a, a, epsilon = 1e-15);
        assert_abs_diff_eq!(m.b, b, epsilon = 1e-15);
        assert_abs_diff_eq!(m.c, Vector3::zeros(), epsilon = 1e-15);
    }

    fn fd_jacobians(s: &State, u: &Control) -> (Matrix3<f64>, Matrix3x2<f64>) {
        let h = 1e-6;
        let mut jx = Matrix3::zeros();
        let mut ju = Matrix3x2::zeros();
        for j in 0..3 {
            let mut plus = s.to_vector();
            let mut minus = s.to_vector();
            plus[j] += h;
            minus[j] -= h;
            let d = dynamics(&State::from_vector(&plus), u, &L).unwrap()
                - dynamics(&State::from_vector(&minus), u, &L).unwrap();
            jx.set_column(j, &(d / (2.0 * h)));
        }
        for j in 0..2 {
            let mut plus = u.as_array();
            let mut minus = u.as_array();
            plus[j] += h;
            minus[j] -= h;
            let d = dynamics(s, &Control::from_slice(&plus), &L).unwrap()
                - dynamics(s, &Control::from_slice(&minus), &L).unwrap();
            ju.set_column(j, &(d / (2.0 * h)));
        }
        (jx, ju)
    }

    #[test]
    fn jacobians_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = State::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0 * PI..3.0 * PI),
            );
            let u = Control::new(rng.random_range(-2.0..2.0), rng.random_range(-1.2..1.2));
            let (jx, ju) = jacobians(&s, &u, &L).unwrap();
            let (fx, fu) = fd_jacobians(&s, &u);
            assert!((jx - fx).amax() < 1e-5, "{jx} vs {fx}");
            assert!((ju - fu).amax() < 1e-5, "{ju} vs {fu}");
        }
    }

    #[test]
    fn linearization_error_is_second_order() {
        let pt = ReferencePoint {
            state: State::new(0.4, -0.3, 0.8),
            control: Control::new(0.7, 0.25),
            derivative: Vector3::zeros(),
        };
        let m = linearize(&pt, &L, 0.1, 0).unwrap();
        let dir_x = Vector3::new(0.3, -0.2, 0.5);
        let dir_u = Vector2::new(-0.4, 0.6);
        let err = |eps: f64| {
            let x = pt.state.to_vector() + dir_x * eps;
            let u = pt.control.to_vector() + dir_u * eps;
            let exact = x + dynamics(&State::from_vector(&x), &Control::new(u[0], u[1]), &L).unwrap() * 0.1;
            (m.step(&x, &u) - exact).norm()
        };
        let mut eps = 0.1;
        for _ in 0..4 {
            let ratio = err(eps) / err(eps / 2.0);
            assert!(ratio >= 3.5, "ratio {ratio} at eps {eps}");
            eps /= 2.0;
        }
    }

    fn circle() -> ReferenceTrajectory {
        generate_reference(&ReferenceShape::Circle { radius: 2.0, cx: 0.0, cy: 0.0 }, &L, 0.1, 360).unwrap()
    }

    #[test]
    fn circle_reference_is_reachable_and_uniform() {
        let traj = circle();
        assert_eq!(traj.len(), 360);
        assert!(traj.reachability_residual(&L).unwrap() <= 1e-9);
        let first = traj.points[0].control;
        for pt in &traj.points {
            assert_abs_diff_eq!(pt.control.v, first.v, epsilon = 1e-12);
            assert_abs_diff_eq!(pt.control.steer, first.steer, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(traj.points[0].state.phi, FRAC_PI_2, epsilon = 1e-12);
        // heading is unwrapped: strictly increasing across the full turn
        assert!(traj.points.windows(2).all(|w| w[1].state.phi > w[0].state.phi));
        assert!(traj.points[359].state.phi > 2.0 * PI);
    }

    #[test]
    fn linearization_identity_on_circle() {
        let traj = circle();
        for (i, pt) in traj.points.iter().enumerate() {
            let m = linearize(pt, &L, 0.1, i).unwrap();
            let lhs = m.step(&pt.state.to_vector(), &pt.control.to_vector());
            let rhs = pt.state.to_vector() + dynamics(&pt.state, &pt.control, &L).unwrap() * 0.1;
            assert!((lhs - rhs).amax() <= 1e-12);
        }
    }

    #[test]
    fn figure8_reference() {
        let traj = generate_reference(&ReferenceShape::Figure8 { a: 2.0, b: 2.0 }, &L, 0.1, 252).unwrap();
        assert_eq!(traj.len(), 252);
        assert!(traj.reachability_residual(&L).unwrap() <= 1e-9);
        for pt in &traj.points {
            assert!(pt.state.x.abs() <= 2.5 && pt.state.y.abs() <= 1.5);
        }
    }

    #[test]
    fn zero_speed_curve_is_rejected() {
        let err = generate_reference(&ReferenceShape::Circle { radius: 0.0, cx: 0.0, cy: 0.0 }, &L, 0.1, 10);
        assert!(err.is_err());
        assert!(generate_reference(&ReferenceShape::Figure8 { a: 1.0, b: 1.0 }, &L, 0.1, 1).is_err());
    }

    #[test]
    fn selection_identity_for_tiny_threshold() {
        let traj = circle();
        let a = select_linearization_points(&traj, &L, 1e-300).unwrap();
        assert_eq!(a, ModelAssignment::identity(360));
        let a = select_linearization_points(&traj, &L, 0.0).unwrap();
        assert_eq!(a.model_count(), 360);
    }

    #[test]
    fn selection_single_model_on_straight_line() {
        let points = (0..50)
            .map(|k| ReferencePoint {
                state: State::new(0.1 * k as f64, 1.0, 0.0),
                control: Control::new(1.0, 0.0),
                derivative: Vector3::new(1.0, 0.0, 0.0),
            })
            .collect();
        let traj = ReferenceTrajectory::new(0.1, points).unwrap();
        let a = select_linearization_points(&traj, &L, 1e-6).unwrap();
        assert_eq!(a.model_count(), 1);
        assert!(a.model_of_point.iter().all(|&m| m == 0));
    }

    #[test]
    fn selection_is_monotone_in_threshold() {
        let traj = circle();
        let mut last = usize::MAX;
        for delta in [0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0] {
            let count = select_linearization_points(&traj, &L, delta).unwrap().model_count();
            assert!(count <= last, "count {count} grew at delta {delta}");
            last = count;
        }
        let moderate = select_linearization_points(&traj, &L, 0.1).unwrap().model_count();
        assert!(moderate > 1 && moderate < 360, "{moderate}");
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-0.5), -0.5, epsilon = 1e-15);
    }
}
