//! Dense dual active-set solver (Goldfarb-Idnani style) for the strictly
//! convex QPs produced by [`condense`](super::condense).
//!
//! The iteration starts from a dual-feasible working set (the unconstrained
//! minimizer, or a warm-start guess pruned to nonnegative multipliers), then
//! repeatedly adds the most violated constraint, dropping working constraints
//! whose multiplier reaches zero on the way. `G H^-1 G'` and `H^-1 G'` are
//! cached on the problem, so every step only factors the small working-set
//! block.

use nalgebra::{DMatrix, DVector};

use super::{MpQpProblem, MpqpError};

const FEAS_TOL: f64 = 1e-10;
const LAMBDA_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u_star: DVector<f64>,
    /// `U* + H^-1 (F' x + C_f')`
    pub z_star: DVector<f64>,
    /// Multipliers aligned with `active_set`, all strictly positive.
    pub lambda: Vec<f64>,
    /// Strongly active constraint rows, sorted.
    pub active_set: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
}

impl QpSolution {
    pub fn first_control(&self, n_u: usize) -> &[f64] {
        &self.u_star.as_slice()[..n_u]
    }
}

pub fn solve_qp(p: &MpQpProblem, x: &DVector<f64>) -> Result<QpSolution, MpqpError> {
    solve_qp_warm(p, x, &[])
}

/// Solves with `guess` as the initial working set. Rows of the guess that are
/// dependent or carry negative multipliers are discarded first.
pub fn solve_qp_warm(p: &MpQpProblem, x: &DVector<f64>, guess: &[usize]) -> Result<QpSolution, MpqpError> {
    let lin = p.linear_term(x);
    let rhs = p.rhs(x);
    let (u_star, mut active, mut lambda, iterations) = dual_active_set(p, &lin, &rhs, guess)?;
    let mut order: Vec<usize> = (0..active.len()).collect();
    order.sort_by_key(|&i| active[i]);
    active = order.iter().map(|&i| active[i]).collect();
    lambda = order.iter().map(|&i| lambda[i]).collect();
    let z_star = &u_star + &p.hinv_ft * x + &p.hinv_cf;
    let objective = 0.5 * u_star.dot(&(&p.h * &u_star)) + lin.dot(&u_star);
    Ok(QpSolution { u_star, z_star, lambda, active_set: active, objective, iterations })
}

/// Online solver state carrying the last active set between calls.
#[derive(Debug, Clone, Default)]
pub struct QpSession {
    last_active: Vec<usize>,
}

impl QpSession {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, p: &MpQpProblem, x: &DVector<f64>) -> Result<QpSolution, MpqpError> {
        let sol = solve_qp_warm(p, x, &self.last_active)?;
        self.last_active.clone_from(&sol.active_set);
        Ok(sol)
    }
}

fn working_matrix(p: &MpQpProblem, active: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(active.len(), active.len(), |i, j| p.ghg[(active[i], active[j])])
}

/// Minimizer on the working set: `lambda = M^-1 (G_A u0 - b_A)`,
/// `u = u0 - H^-1 G_A' lambda`. `None` when the rows are dependent.
fn equality_solve(
    p: &MpQpProblem,
    u0: &DVector<f64>,
    rhs: &DVector<f64>,
    active: &[usize],
) -> Option<(DVector<f64>, Vec<f64>)> {
    if active.is_empty() {
        return Some((u0.clone(), Vec::new()));
    }
    let chol = working_matrix(p, active).cholesky()?;
    let resid = DVector::from_iterator(active.len(), active.iter().map(|&i| p.g.row(i).dot(&u0.transpose()) - rhs[i]));
    let lambda = chol.solve(&resid);
    let mut u = u0.clone();
    for (k, &i) in active.iter().enumerate() {
        u.axpy(-lambda[k], &p.hinv_gt.column(i), 1.0);
    }
    Some((u, lambda.iter().copied().collect()))
}

/// Keeps the rows of `candidates` that are independent in the `H^-1` metric,
/// in order.
pub(crate) fn independent_rows(p: &MpQpProblem, candidates: &[usize]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for &i in candidates {
        if kept.contains(&i) || i >= p.num_constraints() {
            continue;
        }
        let diag = p.ghg[(i, i)];
        if diag <= PIVOT_TOL {
            continue;
        }
        let pivot = if kept.is_empty() {
            diag
        } else {
            let m = working_matrix(p, &kept);
            let Some(chol) = m.cholesky() else { continue };
            let v = DVector::from_iterator(kept.len(), kept.iter().map(|&j| p.ghg[(j, i)]));
            diag - v.dot(&chol.solve(&v))
        };
        if pivot > 1e-10 * diag {
            kept.push(i);
        }
    }
    kept
}

fn row_norm(p: &MpQpProblem, i: usize) -> f64 {
    p.g.row(i).norm()
}

fn most_violated(p: &MpQpProblem, u: &DVector<f64>, rhs: &DVector<f64>, active: &[usize]) -> Result<Option<(usize, f64)>, MpqpError> {
    let gu = &p.g * u;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..p.num_constraints() {
        if active.contains(&i) {
            continue;
        }
        let norm = row_norm(p, i);
        let slack = gu[i] - rhs[i];
        if norm < 1e-14 {
            if slack > FEAS_TOL {
                return Err(MpqpError::Infeasible);
            }
            continue;
        }
        let viol = slack / norm;
        if viol > FEAS_TOL && best.is_none_or(|(_, b)| viol > b) {
            best = Some((i, viol));
        }
    }
    Ok(best)
}

/// Primal point, active rows, their multipliers and the iteration count.
type DualResult = (DVector<f64>, Vec<usize>, Vec<f64>, usize);

fn dual_active_set(
    p: &MpQpProblem,
    lin: &DVector<f64>,
    rhs: &DVector<f64>,
    guess: &[usize],
) -> Result<DualResult, MpqpError> {
    let u0 = -p.chol.solve(lin);
    let m = p.num_constraints();
    let max_iterations = 50 * (m + p.num_vars()) + 100;

    // Dual-feasible start: prune the guess until every multiplier is >= 0.
    let mut active = independent_rows(p, guess);
    let (mut u, mut lambda) = loop {
        let (u, lambda) = equality_solve(p, &u0, rhs, &active).ok_or(MpqpError::DegenerateKkt)?;
        match lambda.iter().enumerate().filter(|(_, l)| **l < 0.0).min_by(|a, b| a.1.total_cmp(b.1)) {
            Some((k, _)) => {
                active.remove(k);
            }
            None => break (u, lambda),
        }
    };

    let mut iterations = 0;
    loop {
        let Some((add, _)) = most_violated(p, &u, rhs, &active)? else {
            // Polish on the final working set, then drop weakly active rows.
            let (pu, pl) = equality_solve(p, &u0, rhs, &active).ok_or(MpqpError::DegenerateKkt)?;
            if pl.iter().all(|l| *l >= -LAMBDA_TOL) && most_violated(p, &pu, rhs, &active)?.is_none() {
                let strong: Vec<usize> =
                    active.iter().zip(&pl).filter(|(_, l)| **l > LAMBDA_TOL).map(|(i, _)| *i).collect();
                if strong.len() == active.len() {
                    return Ok((pu, active, pl, iterations));
                }
                let (fu, fl) = equality_solve(p, &u0, rhs, &strong).ok_or(MpqpError::DegenerateKkt)?;
                if fl.iter().all(|l| *l > 0.0) && most_violated(p, &fu, rhs, &strong)?.is_none() {
                    return Ok((fu, strong, fl, iterations));
                }
                let pl = pl.into_iter().map(|l| l.max(0.0)).collect();
                return Ok((pu, active, pl, iterations));
            }
            // Round-off pushed the polished point out; resume from it.
            if iterations >= max_iterations {
                return Err(MpqpError::MaxIterations { iterations, active, max_violation: max_violation(p, &pu, rhs) });
            }
            iterations += 1;
            u = pu;
            lambda = pl.iter().map(|l| l.max(0.0)).collect();
            continue;
        };

        let mut t_add = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iterations {
                return Err(MpqpError::MaxIterations { iterations, active, max_violation: max_violation(p, &u, rhs) });
            }
            let v = DVector::from_iterator(active.len(), active.iter().map(|&j| p.ghg[(j, add)]));
            let y = if active.is_empty() {
                DVector::zeros(0)
            } else {
                working_matrix(p, &active).cholesky().ok_or(MpqpError::DegenerateKkt)?.solve(&v)
            };
            let curvature = p.ghg[(add, add)] - v.dot(&y);
            let mut dz = -p.hinv_gt.column(add).clone_owned();
            for (k, &j) in active.iter().enumerate() {
                dz.axpy(y[k], &p.hinv_gt.column(j), 1.0);
            }
            let slack = p.g.row(add).dot(&u.transpose()) - rhs[add];
            let full = if curvature > PIVOT_TOL * p.ghg[(add, add)].max(1.0) {
                (slack / curvature).max(0.0)
            } else {
                f64::INFINITY
            };
            let mut partial = f64::INFINITY;
            let mut blocking = None;
            for (k, &yk) in y.iter().enumerate() {
                // d(lambda_k) = -y_k
                if yk > PIVOT_TOL {
                    let t = lambda[k] / yk;
                    if t < partial {
                        partial = t;
                        blocking = Some(k);
                    }
                }
            }
            if full.is_infinite() && partial.is_infinite() {
                return Err(MpqpError::Infeasible);
            }
            if partial < full {
                if full.is_finite() {
                    u.axpy(partial, &dz, 1.0);
                }
                for (k, l) in lambda.iter_mut().enumerate() {
                    *l -= partial * y[k];
                }
                t_add += partial;
                let k = blocking.expect("partial step has a blocking row");
                active.remove(k);
                lambda.remove(k);
            } else {
                u.axpy(full, &dz, 1.0);
                for (k, l) in lambda.iter_mut().enumerate() {
                    *l = (*l - full * y[k]).max(0.0);
                }
                t_add += full;
                active.push(add);
                lambda.push(t_add);
                break;
            }
        }
    }
}

fn max_violation(p: &MpQpProblem, u: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    (&p.g * u - rhs).iter().copied().fold(0.0, f64::max)
}

/// Residuals of the optimality conditions at a returned solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖H U + F' x + C_f' + G_A' lambda‖_inf`
    pub stationarity: f64,
    /// Largest `G U - W - E x` over all rows, clipped at zero.
    pub primal: f64,
    /// Largest negative multiplier magnitude.
    pub dual: f64,
    /// Largest `|lambda_i (G_i U - W_i - E_i x)|`.
    pub complementarity: f64,
    /// Largest `|G_i U - W_i - E_i x|` over active rows.
    pub active_equality: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity).max(self.active_equality)
    }
}

pub fn kkt_residuals(p: &MpQpProblem, x: &DVector<f64>, sol: &QpSolution) -> KktResiduals {
    let slack = &p.g * &sol.u_star - p.rhs(x);
    let mut grad = &p.h * &sol.u_star + p.linear_term(x);
    for (&i, &l) in sol.active_set.iter().zip(&sol.lambda) {
        grad.axpy(l, &p.g.row(i).transpose(), 1.0);
    }
    KktResiduals {
        stationarity: grad.amax(),
        primal: slack.iter().copied().fold(0.0, f64::max),
        dual: sol.lambda.iter().map(|l| (-l).max(0.0)).fold(0.0, f64::max),
        complementarity: sol
            .active_set
            .iter()
            .zip(&sol.lambda)
            .map(|(&i, l)| (l * slack[i]).abs())
            .fold(0.0, f64::max),
        active_equality: sol.active_set.iter().map(|&i| slack[i].abs()).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw(h: DMatrix<f64>, c: DVector<f64>, g: DMatrix<f64>, b: DVector<f64>) -> MpQpProblem {
        let n = h.nrows();
        let m = g.nrows();
        MpQpProblem::from_matrices(h, DMatrix::zeros(1, n), c, g, b, DMatrix::zeros(m, 1), 1).unwrap()
    }

    #[test]
    fn halfspace_projection() {
        // min 1/2 z^2  s.t. -z <= -1
        let p = raw(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, -1.0),
        );
        let sol = solve_qp(&p, &DVector::zeros(1)).unwrap();
        assert_abs_diff_eq!(sol.u_star[0], 1.0, epsilon = 1e-14);
        assert_eq!(sol.active_set, vec![0]);
        assert_abs_diff_eq!(sol.lambda[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn loose_bounds_give_unconstrained_minimizer() {
        let h = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let f = DMatrix::from_row_slice(1, 2, &[0.5, -1.0]);
        let g = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let p = MpQpProblem::from_matrices(
            h.clone(),
            f.clone(),
            DVector::from_vec(vec![0.2, 0.1]),
            g,
            DVector::from_element(4, 1e6),
            DMatrix::zeros(4, 1),
            1,
        )
        .unwrap();
        let x = DVector::from_element(1, 0.8);
        let sol = solve_qp(&p, &x).unwrap();
        let expect = -h.cholesky().unwrap().solve(&(f.tr_mul(&x) + DVector::from_vec(vec![0.2, 0.1])));
        assert_abs_diff_eq!(sol.u_star, expect, epsilon = 1e-12);
        assert!(sol.active_set.is_empty());
    }

    #[test]
    fn infeasible_is_reported() {
        // z <= -1 and -z <= -1
        let p = raw(
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_vec(vec![-1.0, -1.0]),
        );
        assert_eq!(solve_qp(&p, &DVector::zeros(1)), Err(MpqpError::Infeasible));
    }

    #[test]
    fn degenerate_vertex_is_handled() {
        // three constraints through the same point in 2D
        let p = raw(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![-2.0, -2.0]),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            DVector::from_vec(vec![0.5, 0.5, 1.0]),
        );
        let sol = solve_qp(&p, &DVector::zeros(1)).unwrap();
        assert_abs_diff_eq!(sol.u_star, DVector::from_vec(vec![0.5, 0.5]), epsilon = 1e-12);
        assert!(kkt_residuals(&p, &DVector::zeros(1), &sol).max() <= 1e-10);
        assert!(sol.active_set.len() <= 2);
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = 4;
            let m = 8;
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let h = a.tr_mul(&a) + DMatrix::identity(n, n);
            let c = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let g = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let b = DVector::from_fn(m, |_, _| rng.random_range(0.0..1.0));
            let p = raw(h, c, g, b);
            let x = DVector::zeros(1);
            let cold = solve_qp(&p, &x).unwrap();
            let guess: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.3)).collect();
            let warm = solve_qp_warm(&p, &x, &guess).unwrap();
            assert_abs_diff_eq!(cold.u_star, warm.u_star, epsilon = 1e-9);
            assert_eq!(cold.active_set, warm.active_set);
            assert!(kkt_residuals(&p, &x, &warm).max() <= 1e-8);
        }
    }
}
