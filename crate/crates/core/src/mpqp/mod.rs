//! Linear MPC as a multiparametric QP in the initial state.
//!
//! A tracking problem over horizon `N` is condensed by eliminating the
//! predicted states, leaving
//!
//! ```text
//! min_U  1/2 U' H U + (x' F + C_f) U      s.t.  G U <= W + E x
//! ```
//!
//! Instances are solved with a dual active-set method; an optimal active set
//! yields an affine law on its critical region, and collections of such laws
//! form the explicit-MPC baseline evaluated by sequential search.

mod explicit;
mod qp;

pub use explicit::{
    enumerate_regions, enumerate_regions_with, explicit_law, first_control, locate, regions_from_text, regions_to_text, sequential_search,
    AffineControlLaw, ExplicitLaw, Region,
};
pub use qp::{kkt_residuals, solve_qp, solve_qp_warm, KktResiduals, QpSession, QpSolution};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::kinematics::AffineDynamics;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpqpError {
    #[error("invalid MPC specification: {0}")]
    InvalidSpec(String),
    #[error("condensed Hessian is not positive definite")]
    HessianNotPositiveDefinite,
    #[error("QP is infeasible for this state")]
    Infeasible,
    #[error("active-set iteration limit {iterations} reached (working set {active:?}, max violation {max_violation:e})")]
    MaxIterations { iterations: usize, active: Vec<usize>, max_violation: f64 },
    #[error("KKT system is singular after rank repair")]
    DegenerateKkt,
    #[error("seed state violates its own critical region by {0:e}")]
    SeedOutsideRegion(f64),
    #[error("no stored region contains the state")]
    RegionNotFound,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One constrained linear tracking problem with a model frozen over the
/// horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMpcSpec {
    pub model: AffineDynamics,
    pub horizon: usize,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Bounds on the predicted states `x(1..=N)`. Infinite entries add no row.
    pub x_min: DVector<f64>,
    pub x_max: DVector<f64>,
    pub u_min: DVector<f64>,
    pub u_max: DVector<f64>,
    /// Targets for `x(1..=N)`.
    pub state_ref: Vec<DVector<f64>>,
    /// Targets for `u(0..N)`.
    pub input_ref: Vec<DVector<f64>>,
}

impl LinearMpcSpec {
    fn validate(&self) -> Result<(), MpqpError> {
        let nx = self.model.state_dim();
        let nu = self.model.input_dim();
        let bad = |m: &str| Err(MpqpError::InvalidSpec(m.to_string()));
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.model.a.ncols() != nx || self.model.b.nrows() != nx || self.model.c.len() != nx {
            return bad("model dimensions are inconsistent");
        }
        if self.q.shape() != (nx, nx) || self.r.shape() != (nu, nu) {
            return bad("weight dimensions do not match the model");
        }
        if (&self.q - self.q.transpose()).amax() > 1e-12 || (&self.r - self.r.transpose()).amax() > 1e-12 {
            return bad("weights must be symmetric");
        }
        if self.q.clone().symmetric_eigenvalues().min() < -1e-12 {
            return bad("Q must be positive semidefinite");
        }
        if self.r.clone().cholesky().is_none() {
            return bad("R must be positive definite");
        }
        if self.x_min.len() != nx || self.x_max.len() != nx || self.u_min.len() != nu || self.u_max.len() != nu {
            return bad("bound dimensions do not match the model");
        }
        if self.x_min.iter().zip(self.x_max.iter()).any(|(lo, hi)| lo > hi)
            || self.u_min.iter().zip(self.u_max.iter()).any(|(lo, hi)| lo > hi)
        {
            return bad("lower bound exceeds upper bound");
        }
        if self.state_ref.len() != self.horizon || self.input_ref.len() != self.horizon {
            return bad("reference segment length must equal the horizon");
        }
        if self.state_ref.iter().any(|v| v.len() != nx) || self.input_ref.iter().any(|v| v.len() != nu) {
            return bad("reference dimensions do not match the model");
        }
        Ok(())
    }
}

/// Where a constraint row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    InputUpper { stage: usize, component: usize },
    InputLower { stage: usize, component: usize },
    StateUpper { stage: usize, component: usize },
    StateLower { stage: usize, component: usize },
    Raw,
}

/// Condensed mpQP with the factorizations the solver and the explicit laws
/// reuse.
#[derive(Debug, Clone)]
pub struct MpQpProblem {
    pub n_x: usize,
    pub n_u: usize,
    pub horizon: usize,
    pub h: DMatrix<f64>,
    /// `n_x x nU`; the linear cost is `(x' F + C_f) U`.
    pub f: DMatrix<f64>,
    /// `C_f'` as a column.
    pub c_f: DVector<f64>,
    pub g: DMatrix<f64>,
    pub w: DVector<f64>,
    pub e: DMatrix<f64>,
    pub kinds: Vec<ConstraintKind>,
    /// Cost terms independent of `U`: `x' Y x + y' x + y0`.
    pub cost_xx: DMatrix<f64>,
    pub cost_x: DVector<f64>,
    pub cost_0: f64,
    pub(crate) chol: Cholesky<f64, Dyn>,
    /// `H^-1 F'`
    pub(crate) hinv_ft: DMatrix<f64>,
    /// `H^-1 C_f'`
    pub(crate) hinv_cf: DVector<f64>,
    /// `H^-1 G'`
    pub(crate) hinv_gt: DMatrix<f64>,
    /// `G H^-1 G'`
    pub(crate) ghg: DMatrix<f64>,
}

impl MpQpProblem {
    /// Builds a problem from raw matrices, without tracking-cost constants.
    pub fn from_matrices(
        h: DMatrix<f64>,
        f: DMatrix<f64>,
        c_f: DVector<f64>,
        g: DMatrix<f64>,
        w: DVector<f64>,
        e: DMatrix<f64>,
        n_u: usize,
    ) -> Result<Self, MpqpError> {
        let nu_total = h.nrows();
        let n_x = f.nrows();
        let m = g.nrows();
        if h.ncols() != nu_total
            || f.ncols() != nu_total
            || c_f.len() != nu_total
            || g.ncols() != nu_total
            || w.len() != m
            || e.shape() != (m, n_x)
            || n_u == 0
            || !nu_total.is_multiple_of(n_u)
        {
            return Err(MpqpError::InvalidSpec("matrix dimensions are inconsistent".into()));
        }
        let kinds = vec![ConstraintKind::Raw; m];
        Self::assemble(h, f, c_f, g, w, e, kinds, n_u, DMatrix::zeros(n_x, n_x), DVector::zeros(n_x), 0.0)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        h: DMatrix<f64>,
        f: DMatrix<f64>,
        c_f: DVector<f64>,
        g: DMatrix<f64>,
        w: DVector<f64>,
        e: DMatrix<f64>,
        kinds: Vec<ConstraintKind>,
        n_u: usize,
        cost_xx: DMatrix<f64>,
        cost_x: DVector<f64>,
        cost_0: f64,
    ) -> Result<Self, MpqpError> {
        let h = (&h + h.transpose()) * 0.5;
        let chol = h.clone().cholesky().ok_or(MpqpError::HessianNotPositiveDefinite)?;
        let hinv_ft = chol.solve(&f.transpose());
        let hinv_cf = chol.solve(&c_f);
        let hinv_gt = chol.solve(&g.transpose());
        let ghg = &g * &hinv_gt;
        let ghg = (&ghg + ghg.transpose()) * 0.5;
        Ok(Self {
            n_x: f.nrows(),
            n_u,
            horizon: h.nrows() / n_u,
            h,
            f,
            c_f,
            g,
            w,
            e,
            kinds,
            cost_xx,
            cost_x,
            cost_0,
            chol,
            hinv_ft,
            hinv_cf,
            hinv_gt,
            ghg,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_constraints(&self) -> usize {
        self.g.nrows()
    }

    /// `S = E + G H^-1 F'`
    pub fn s(&self) -> DMatrix<f64> {
        &self.e + &self.g * &self.hinv_ft
    }

    /// `omega = W + G H^-1 C_f'`
    pub fn omega(&self) -> DVector<f64> {
        &self.w + &self.g * &self.hinv_cf
    }

    /// Linear cost vector `F' x + C_f'` at state `x`.
    pub fn linear_term(&self, x: &DVector<f64>) -> DVector<f64> {
        self.f.tr_mul(x) + &self.c_f
    }

    /// Constraint right-hand side `W + E x`.
    pub fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.w + &self.e * x
    }

    /// Unconstrained minimizer `-H^-1 (F' x + C_f')`.
    pub fn unconstrained_minimizer(&self, x: &DVector<f64>) -> DVector<f64> {
        -(&self.hinv_ft * x + &self.hinv_cf)
    }

    /// `1/2 U' H U + (x' F + C_f) U`
    pub fn objective(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.h * u)) + self.linear_term(x).dot(u)
    }

    /// Full tracking cost, including the terms that do not depend on `U`.
    pub fn tracking_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.objective(x, u) + x.dot(&(&self.cost_xx * x)) + self.cost_x.dot(x) + self.cost_0
    }
}

/// Eliminates the predicted states of `spec` and stacks the input and state
/// box constraints.
pub fn condense(spec: &LinearMpcSpec) -> Result<MpQpProblem, MpqpError> {
    spec.validate()?;
    let nx = spec.model.state_dim();
    let nu = spec.model.input_dim();
    let n = spec.horizon;
    let (a, b, c) = (&spec.model.a, &spec.model.b, &spec.model.c);

    // x(k) = Phi_k x + sum_j Gamma_kj u(j) + beta_k, k = 1..=N
    let mut phi = DMatrix::zeros(n * nx, nx);
    let mut gamma = DMatrix::zeros(n * nx, n * nu);
    let mut beta = DVector::zeros(n * nx);
    let mut a_pow = DMatrix::identity(nx, nx);
    let mut drift = DVector::zeros(nx);
    let mut a_pows = Vec::with_capacity(n);
    for k in 0..n {
        a_pows.push(a_pow.clone());
        drift = a * &drift + c;
        a_pow = a * &a_pow;
        phi.view_mut((k * nx, 0), (nx, nx)).copy_from(&a_pow);
        beta.rows_mut(k * nx, nx).copy_from(&drift);
    }
    for k in 0..n {
        for j in 0..=k {
            let blk = &a_pows[k - j] * b;
            gamma.view_mut((k * nx, j * nu), (nx, nu)).copy_from(&blk);
        }
    }

    let mut q_bar = DMatrix::zeros(n * nx, n * nx);
    let mut r_bar = DMatrix::zeros(n * nu, n * nu);
    let mut x_ref = DVector::zeros(n * nx);
    let mut u_ref = DVector::zeros(n * nu);
    for k in 0..n {
        q_bar.view_mut((k * nx, k * nx), (nx, nx)).copy_from(&spec.q);
        r_bar.view_mut((k * nu, k * nu), (nu, nu)).copy_from(&spec.r);
        x_ref.rows_mut(k * nx, nx).copy_from(&spec.state_ref[k]);
        u_ref.rows_mut(k * nu, nu).copy_from(&spec.input_ref[k]);
    }

    let qg = &q_bar * &gamma;
    let h = (gamma.tr_mul(&qg) + &r_bar) * 2.0;
    let f = phi.tr_mul(&qg) * 2.0;
    let d = &beta - &x_ref;
    let c_f = qg.tr_mul(&d) * 2.0 - &r_bar * &u_ref * 2.0;
    let qphi = &q_bar * &phi;
    let cost_xx = phi.tr_mul(&qphi);
    let cost_x = qphi.tr_mul(&d) * 2.0;
    let cost_0 = d.dot(&(&q_bar * &d)) + u_ref.dot(&(&r_bar * &u_ref));

    let mut rows: Vec<(DVector<f64>, f64, DVector<f64>, ConstraintKind)> = Vec::new();
    for k in 0..n {
        for i in 0..nu {
            let mut unit = DVector::zeros(n * nu);
            unit[k * nu + i] = 1.0;
            if spec.u_max[i].is_finite() {
                rows.push((unit.clone(), spec.u_max[i], DVector::zeros(nx), ConstraintKind::InputUpper { stage: k, component: i }));
            }
            if spec.u_min[i].is_finite() {
                rows.push((-unit, -spec.u_min[i], DVector::zeros(nx), ConstraintKind::InputLower { stage: k, component: i }));
            }
        }
    }
    for k in 0..n {
        for i in 0..nx {
            let r = k * nx + i;
            let g_row = gamma.row(r).transpose();
            let phi_row = phi.row(r).transpose();
            if spec.x_max[i].is_finite() {
                rows.push((
                    g_row.clone(),
                    spec.x_max[i] - beta[r],
                    -phi_row.clone(),
                    ConstraintKind::StateUpper { stage: k + 1, component: i },
                ));
            }
            if spec.x_min[i].is_finite() {
                rows.push((-g_row, beta[r] - spec.x_min[i], phi_row, ConstraintKind::StateLower { stage: k + 1, component: i }));
            }
        }
    }
    let m = rows.len();
    let mut g = DMatrix::zeros(m, n * nu);
    let mut w = DVector::zeros(m);
    let mut e = DMatrix::zeros(m, nx);
    let mut kinds = Vec::with_capacity(m);
    for (i, (gr, wr, er, kind)) in rows.into_iter().enumerate() {
        g.row_mut(i).copy_from(&gr.transpose());
        w[i] = wr;
        e.row_mut(i).copy_from(&er.transpose());
        kinds.push(kind);
    }
    MpQpProblem::assemble(h, f, c_f, g, w, e, kinds, nu, cost_xx, cost_x, cost_0)
}
