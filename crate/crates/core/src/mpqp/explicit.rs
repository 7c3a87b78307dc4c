//! Affine optimizer laws on critical regions, sample-seeded region discovery
//! and the sequential-search lookup used by the explicit baseline.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::qp::{independent_rows, solve_qp, QpSolution};
use super::{MpQpProblem, MpqpError};
use crate::lattice_pwa::AffineFunction;
use crate::par::{self, Parallelism};

/// Membership tolerance on normalized region rows.
pub const REGION_TOLERANCE: f64 = 1e-9;

/// Polyhedron `{x : A x <= b}` with unit-norm rows stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    n_x: usize,
    rows: Vec<f64>,
    rhs: Vec<f64>,
}

impl Region {
    fn from_rows(n_x: usize, raw: Vec<(Vec<f64>, f64)>) -> Self {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for (a, b) in raw {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (a, b) = if norm > 1e-12 {
                (a.iter().map(|v| v / norm).collect::<Vec<_>>(), b / norm)
            } else if b >= -REGION_TOLERANCE {
                continue;
            } else {
                (a, b)
            };
            let key: Vec<u64> = a.iter().chain(std::iter::once(&b)).map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                rows.extend_from_slice(&a);
                rhs.push(b);
            }
        }
        Self { n_x, rows, rhs }
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.rows[i * self.n_x..(i + 1) * self.n_x], self.rhs[i])
    }

    /// Largest `a_i x - b_i`; nonpositive inside the region.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (row, b) in self.rows.chunks_exact(self.n_x).zip(&self.rhs) {
            let mut acc = 0.0;
            for (a, xi) in row.iter().zip(x) {
                acc += a * xi;
            }
            worst = worst.max(acc - b);
        }
        worst
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        for (row, b) in self.rows.chunks_exact(self.n_x).zip(&self.rhs) {
            let mut acc = 0.0;
            for (a, xi) in row.iter().zip(x) {
                acc += a * xi;
            }
            if acc > b + REGION_TOLERANCE {
                return false;
            }
        }
        true
    }
}

/// `u(x) = K x + k` with `K` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineControlLaw {
    pub n_x: usize,
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
}

impl AffineControlLaw {
    pub fn outputs(&self) -> usize {
        self.offset.len()
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, row), k) in out.iter_mut().zip(self.gain.chunks_exact(self.n_x)).zip(&self.offset) {
            let mut acc = 0.0;
            for (a, xi) in row.iter().zip(x) {
                acc += a * xi;
            }
            *o = acc + k;
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        self.eval_into(x, &mut out);
        out
    }

    /// Component `i` as a scalar affine function.
    pub fn component(&self, i: usize) -> AffineFunction {
        AffineFunction::new(self.gain[i * self.n_x..(i + 1) * self.n_x].to_vec(), self.offset[i])
    }
}

/// Optimizer `U*(x) = K_U x + k_U` valid on one critical region.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitLaw {
    pub gain: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub region: Region,
    /// Independent active rows that generated the law.
    pub active_set: Vec<usize>,
    pub n_u: usize,
    first: AffineControlLaw,
}

impl ExplicitLaw {
    fn new(gain: DMatrix<f64>, offset: DVector<f64>, region: Region, active_set: Vec<usize>, n_u: usize) -> Self {
        let first = first_block(&gain, &offset, n_u);
        Self { gain, offset, region, active_set, n_u, first }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.gain * x + &self.offset
    }

    pub fn first_control(&self) -> &AffineControlLaw {
        &self.first
    }
}

fn first_block(gain: &DMatrix<f64>, offset: &DVector<f64>, n_u: usize) -> AffineControlLaw {
    let n_x = gain.ncols();
    let mut g = Vec::with_capacity(n_u * n_x);
    for i in 0..n_u {
        g.extend(gain.row(i).iter().copied());
    }
    AffineControlLaw { n_x, gain: g, offset: offset.rows(0, n_u).iter().copied().collect() }
}

/// First `n_u` rows of the law: the block selector `[I, 0, ..., 0]` applied to
/// `U*(x)`.
pub fn first_control(law: &ExplicitLaw) -> AffineControlLaw {
    law.first.clone()
}

/// Forms the affine law and critical region of the active set in `sol`.
/// Dependent active rows are pruned to a maximal independent subset first.
pub fn explicit_law(p: &MpQpProblem, sol: &QpSolution, x_seed: &DVector<f64>) -> Result<ExplicitLaw, MpqpError> {
    let active = independent_rows(p, &sol.active_set);
    let n_x = p.n_x;
    let n_vars = p.num_vars();
    let s = p.s();
    let omega = p.omega();

    let (gain, offset, mut raw_rows) = if active.is_empty() {
        (-p.hinv_ft.clone(), -p.hinv_cf.clone(), Vec::new())
    } else {
        let k = active.len();
        let m_a = DMatrix::from_fn(k, k, |i, j| p.ghg[(active[i], active[j])]);
        let chol = m_a.cholesky().ok_or(MpqpError::DegenerateKkt)?;
        let s_a = DMatrix::from_fn(k, n_x, |i, j| s[(active[i], j)]);
        let w_a = DVector::from_fn(k, |i, _| omega[active[i]]);
        let hinv_ga = DMatrix::from_fn(n_vars, k, |i, j| p.hinv_gt[(i, active[j])]);
        let m_inv_s = chol.solve(&s_a);
        let m_inv_w = chol.solve(&w_a);
        let gain = &hinv_ga * &m_inv_s - &p.hinv_ft;
        let offset = &hinv_ga * &m_inv_w - &p.hinv_cf;
        // lambda(x) = -M^-1 (omega_A + S_A x) >= 0
        let rows = (0..k)
            .map(|i| (m_inv_s.row(i).iter().copied().collect::<Vec<_>>(), -m_inv_w[i]))
            .collect::<Vec<_>>();
        (gain, offset, rows)
    };

    // inactive rows stay feasible: (G_i K_U - E_i) x <= W_i - G_i k_U
    let gk = &p.g * &gain;
    let gko = &p.g * &offset;
    for i in 0..p.num_constraints() {
        if active.contains(&i) {
            continue;
        }
        let a: Vec<f64> = (0..n_x).map(|j| gk[(i, j)] - p.e[(i, j)]).collect();
        raw_rows.push((a, p.w[i] - gko[i]));
    }
    let region = Region::from_rows(n_x, raw_rows);
    let viol = region.max_violation(x_seed.as_slice());
    if viol > 1e-7 {
        return Err(MpqpError::SeedOutsideRegion(viol));
    }
    Ok(ExplicitLaw::new(gain, offset, region, active, p.n_u))
}

pub fn enumerate_regions(p: &MpQpProblem, seeds: &[DVector<f64>]) -> Result<Vec<ExplicitLaw>, MpqpError> {
    enumerate_regions_with(p, seeds, Parallelism::default())
}

/// Solves every seed, keeps the first seed of each distinct active set and
/// emits its law. Discovery is sample-driven, so the regions need not cover
/// the whole feasible parameter set.
pub fn enumerate_regions_with(
    p: &MpQpProblem,
    seeds: &[DVector<f64>],
    mode: Parallelism,
) -> Result<Vec<ExplicitLaw>, MpqpError> {
    let solutions = par::try_map_indexed(seeds.len(), mode, |i| solve_qp(p, &seeds[i]))?;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let firsts: Vec<usize> = solutions
        .iter()
        .enumerate()
        .filter(|(_, s)| seen.insert(s.active_set.clone()))
        .map(|(i, _)| i)
        .collect();
    par::try_map_indexed(firsts.len(), mode, |k| {
        let i = firsts[k];
        explicit_law(p, &solutions[i], &seeds[i])
    })
}

/// Index of the first region containing `x`.
#[inline]
pub fn locate(regions: &[ExplicitLaw], x: &[f64]) -> Option<usize> {
    regions.iter().position(|r| r.region.contains(x))
}

/// First control of the first region (in list order) containing `x`.
pub fn sequential_search(regions: &[ExplicitLaw], x: &[f64]) -> Result<Vec<f64>, MpqpError> {
    let i = locate(regions, x).ok_or(MpqpError::RegionNotFound)?;
    Ok(regions[i].first.eval(x))
}

/// Text form, one block per region:
///
/// ```text
/// regions <n_x> <n_vars> <n_u> <count>
/// region <rows> A <i_1> ...
/// P <a_1> ... <a_n> <b>        (rows lines)
/// K <k_1> ... <k_n> <offset>   (n_vars lines)
/// ```
pub fn regions_to_text(regions: &[ExplicitLaw]) -> String {
    let mut out = String::new();
    let (n_x, n_vars, n_u) = regions.first().map_or((0, 0, 0), |r| (r.gain.ncols(), r.gain.nrows(), r.n_u));
    let _ = writeln!(out, "regions {n_x} {n_vars} {n_u} {}", regions.len());
    for r in regions {
        let _ = write!(out, "region {} A", r.region.num_rows());
        for i in &r.active_set {
            let _ = write!(out, " {i}");
        }
        out.push('\n');
        for i in 0..r.region.num_rows() {
            let (a, b) = r.region.row(i);
            out.push('P');
            for v in a.iter().chain(std::iter::once(&b)) {
                let _ = write!(out, " {v:e}");
            }
            out.push('\n');
        }
        for i in 0..r.gain.nrows() {
            out.push('K');
            for v in r.gain.row(i).iter().chain(std::iter::once(&r.offset[i])) {
                let _ = write!(out, " {v:e}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn regions_from_text(text: &str) -> Result<Vec<ExplicitLaw>, MpqpError> {
    let err = |line: usize, msg: &str| MpqpError::Parse { line: line + 1, msg: msg.to_string() };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let (hl, header) = lines.next().ok_or_else(|| err(0, "missing header"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "regions" {
        return Err(err(hl, "expected `regions <n_x> <n_vars> <n_u> <count>`"));
    }
    let num = |s: &str, line| s.parse::<usize>().map_err(|_| err(line, "bad integer"));
    let (n_x, n_vars, n_u, count) = (num(h[1], hl)?, num(h[2], hl)?, num(h[3], hl)?, num(h[4], hl)?);
    let floats = |line: usize, s: &str, tag: &str, len: usize| -> Result<Vec<f64>, MpqpError> {
        let mut parts = s.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(err(line, &format!("expected a `{tag}` line")));
        }
        let v = parts.map(|t| t.parse::<f64>().map_err(|_| err(line, "bad float"))).collect::<Result<Vec<_>, _>>()?;
        if v.len() != len {
            return Err(err(line, "wrong number of values"));
        }
        Ok(v)
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (rl, rh) = lines.next().ok_or_else(|| err(hl, "fewer regions than the header states"))?;
        let parts: Vec<&str> = rh.split_whitespace().collect();
        if parts.len() < 3 || parts[0] != "region" || parts[2] != "A" {
            return Err(err(rl, "expected `region <rows> A ...`"));
        }
        let nrows = num(parts[1], rl)?;
        let active = parts[3..].iter().map(|s| num(s, rl)).collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::with_capacity(nrows * n_x);
        let mut rhs = Vec::with_capacity(nrows);
        for _ in 0..nrows {
            let (l, s) = lines.next().ok_or_else(|| err(rl, "truncated region"))?;
            let v = floats(l, s, "P", n_x + 1)?;
            rows.extend_from_slice(&v[..n_x]);
            rhs.push(v[n_x]);
        }
        let mut gain = DMatrix::zeros(n_vars, n_x);
        let mut offset = DVector::zeros(n_vars);
        for i in 0..n_vars {
            let (l, s) = lines.next().ok_or_else(|| err(rl, "truncated law"))?;
            let v = floats(l, s, "K", n_x + 1)?;
            for j in 0..n_x {
                gain[(i, j)] = v[j];
            }
            offset[i] = v[n_x];
        }
        out.push(ExplicitLaw::new(gain, offset, Region { n_x, rows, rhs }, active, n_u));
    }
    if let Some((l, _)) = lines.next() {
        return Err(err(l, "trailing content after the last region"));
    }
    Ok(out)
}
