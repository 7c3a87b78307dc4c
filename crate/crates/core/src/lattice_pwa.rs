//! Lattice piecewise-affine functions: a maximum over terms, each term the
//! minimum over a subset of affine literals.
//!
//! Construction follows the sample-based recipe: every labeled sample
//! contributes one term holding all literals that are not below the sample's
//! active literal at the sample point. With every distinct affine piece
//! sampled, the lattice reproduces the sampled function on the order regions
//! of the samples.

use std::fmt::Write as _;

use thiserror::Error;

/// Coefficient tolerance under which two affine functions are the same literal.
pub const DEDUP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("expected input of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot build a lattice from an empty sample set")]
    NoSamples,
    #[error("lattice needs at least one term")]
    NoTerms,
    #[error("term {term} is empty or references a missing literal")]
    BadTerm { term: usize },
    #[error("probe set is empty")]
    NoProbes,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineFunction {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl AffineFunction {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// `a . x + c`, accumulated in index order.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, xi) in self.coeffs.iter().zip(x) {
            acc += a * xi;
        }
        acc + self.offset
    }

    pub fn max_coeff_diff(&self, other: &AffineFunction) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold((self.offset - other.offset).abs(), f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// A sample point with its function value and the affine piece active there.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub point: Vec<f64>,
    pub value: f64,
    pub active: AffineFunction,
}

impl LabeledSample {
    pub fn from_active(point: Vec<f64>, active: AffineFunction) -> Self {
        let value = active.eval(&point);
        Self { point, value, active }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePwa {
    input_dim: usize,
    literals: Vec<AffineFunction>,
    terms: Vec<Vec<usize>>,
}

impl LatticePwa {
    pub fn new(
        input_dim: usize,
        literals: Vec<AffineFunction>,
        terms: Vec<Vec<usize>>,
    ) -> Result<Self, LatticeError> {
        if terms.is_empty() {
            return Err(LatticeError::NoTerms);
        }
        for lit in &literals {
            if lit.dim() != input_dim {
                return Err(LatticeError::DimensionMismatch { expected: input_dim, got: lit.dim() });
            }
        }
        for (t, term) in terms.iter().enumerate() {
            if term.is_empty() || term.iter().any(|&j| j >= literals.len()) {
                return Err(LatticeError::BadTerm { term: t });
            }
        }
        Ok(Self { input_dim, literals, terms })
    }

    /// A lattice with one term holding one literal.
    pub fn affine(f: AffineFunction) -> Self {
        Self { input_dim: f.dim(), literals: vec![f], terms: vec![vec![0]] }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn literals(&self) -> &[AffineFunction] {
        &self.literals
    }

    pub fn terms(&self) -> &[Vec<usize>] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Literal occurrences summed over all terms.
    pub fn literal_occurrences(&self) -> usize {
        self.terms.iter().map(Vec::len).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, LatticeError> {
        if x.len() != self.input_dim {
            return Err(LatticeError::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        Ok(self.evaluate_unchecked(x))
    }

    /// Max-min evaluation without the dimension check.
    #[inline]
    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for term in &self.terms {
            let mut low = f64::INFINITY;
            for &j in term {
                low = low.min(self.literals[j].eval(x));
            }
            best = best.max(low);
        }
        best
    }

    /// Builds one term per sample from the sample's active literal.
    pub fn construct_from_samples(samples: &[LabeledSample]) -> Result<Self, LatticeError> {
        let first = samples.first().ok_or(LatticeError::NoSamples)?;
        let dim = first.point.len();
        let mut literals: Vec<AffineFunction> = Vec::new();
        let mut active_of = Vec::with_capacity(samples.len());
        for s in samples {
            if s.point.len() != dim || s.active.dim() != dim {
                return Err(LatticeError::DimensionMismatch {
                    expected: dim,
                    got: s.point.len().max(s.active.dim()),
                });
            }
            let idx = match literals.iter().position(|l| l.max_coeff_diff(&s.active) <= DEDUP_TOLERANCE) {
                Some(i) => i,
                None => {
                    literals.push(s.active.clone());
                    literals.len() - 1
                }
            };
            active_of.push(idx);
        }
        let terms = samples
            .iter()
            .zip(&active_of)
            .map(|(s, &act)| {
                let threshold = literals[act].eval(&s.point);
                literals
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.eval(&s.point) >= threshold)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        Self::new(dim, literals, terms)
    }

    /// Largest `|f(sample) - value|` over the given samples.
    pub fn interpolation_residual(&self, samples: &[LabeledSample]) -> f64 {
        samples
            .iter()
            .map(|s| (self.evaluate_unchecked(&s.point) - s.value).abs())
            .fold(0.0, f64::max)
    }

    /// Removes duplicate and dominated terms and redundant literals while
    /// keeping the value at every validation point bit-identical.
    pub fn simplify(&self, validation: &[Vec<f64>]) -> LatticePwa {
        let points: Vec<&[f64]> = validation
            .iter()
            .map(Vec::as_slice)
            .filter(|p| p.len() == self.input_dim)
            .collect();
        let np = points.len();
        if np == 0 {
            let mut seen = std::collections::HashSet::new();
            let mut out = self.clone();
            out.terms.retain(|t| {
                let mut key = t.clone();
                key.sort_unstable();
                seen.insert(key)
            });
            return out;
        }
        let lit_vals: Vec<Vec<f64>> = self
            .literals
            .iter()
            .map(|l| points.iter().map(|p| l.eval(p)).collect())
            .collect();

        let mut terms: Vec<Vec<usize>> = self
            .terms
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.sort_unstable();
                t.dedup();
                t
            })
            .collect();
        // identical literal sets
        let mut seen = std::collections::HashSet::new();
        terms.retain(|t| seen.insert(t.clone()));

        let term_value = |term: &[usize], p: usize| term.iter().map(|&j| lit_vals[j][p]).fold(f64::INFINITY, f64::min);
        let mut tvals: Vec<Vec<f64>> = terms.iter().map(|t| (0..np).map(|p| term_value(t, p)).collect()).collect();
        let overall: Vec<f64> = (0..np)
            .map(|p| tvals.iter().map(|v| v[p]).fold(f64::NEG_INFINITY, f64::max))
            .collect();

        let mut alive = vec![true; terms.len()];
        loop {
            let mut changed = false;

            // Term removal. Larger terms are tried first since their minimum is
            // the smallest among nested literal sets.
            let mut attaining: Vec<usize> = vec![0; np];
            for (t, v) in tvals.iter().enumerate() {
                if alive[t] {
                    for p in 0..np {
                        if v[p] == overall[p] {
                            attaining[p] += 1;
                        }
                    }
                }
            }
            let mut order: Vec<usize> = (0..terms.len()).filter(|&t| alive[t]).collect();
            order.sort_by_key(|&t| std::cmp::Reverse(terms[t].len()));
            for t in order {
                if alive.iter().filter(|&&a| a).count() == 1 {
                    break;
                }
                let removable = (0..np).all(|p| tvals[t][p] < overall[p] || attaining[p] >= 2);
                if removable {
                    alive[t] = false;
                    changed = true;
                    for p in 0..np {
                        if tvals[t][p] == overall[p] {
                            attaining[p] -= 1;
                        }
                    }
                }
            }

            // Literal removal: dropping a literal can only raise the term, so
            // the overall value survives iff the raised term stays below it.
            for t in 0..terms.len() {
                if !alive[t] {
                    continue;
                }
                let mut k = 0;
                while k < terms[t].len() && terms[t].len() > 1 {
                    let mut candidate = terms[t].clone();
                    candidate.remove(k);
                    let raised: Vec<f64> = (0..np).map(|p| term_value(&candidate, p)).collect();
                    if raised.iter().zip(&overall).all(|(r, o)| r <= o) {
                        terms[t] = candidate;
                        tvals[t] = raised;
                        changed = true;
                    } else {
                        k += 1;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        // Literals may have been dropped into duplicate sets.
        let mut seen = std::collections::HashSet::new();
        let kept: Vec<Vec<usize>> = terms
            .into_iter()
            .zip(alive)
            .filter(|(_, a)| *a)
            .map(|(t, _)| t)
            .filter(|t| seen.insert(t.clone()))
            .collect();

        let mut remap = vec![usize::MAX; self.literals.len()];
        let mut literals = Vec::new();
        for t in &kept {
            for &j in t {
                if remap[j] == usize::MAX {
                    remap[j] = literals.len();
                    literals.push(self.literals[j].clone());
                }
            }
        }
        let terms = kept.into_iter().map(|t| t.into_iter().map(|j| remap[j]).collect()).collect();
        LatticePwa { input_dim: self.input_dim, literals, terms }
    }

    /// Line-oriented text form:
    ///
    /// ```text
    /// lattice <input_dim> <literal_count> <term_count>
    /// L <a_1> ... <a_n> <offset>
    /// T <j_1> <j_2> ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lattice {} {} {}", self.input_dim, self.literals.len(), self.terms.len());
        for lit in &self.literals {
            out.push('L');
            for c in lit.coeffs.iter().chain(std::iter::once(&lit.offset)) {
                let _ = write!(out, " {c:e}");
            }
            out.push('\n');
        }
        for term in &self.terms {
            out.push('T');
            for j in term {
                let _ = write!(out, " {j}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LatticeError> {
        let err = |line: usize, msg: &str| LatticeError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "lattice" {
            return Err(err(hl + 1, "expected `lattice <dim> <literals> <terms>`"));
        }
        let parse_usize = |s: &str, line| s.parse::<usize>().map_err(|_| err(line, "bad integer"));
        let dim = parse_usize(fields[1], hl + 1)?;
        let nl = parse_usize(fields[2], hl + 1)?;
        let nt = parse_usize(fields[3], hl + 1)?;
        let mut literals = Vec::with_capacity(nl);
        let mut terms = Vec::with_capacity(nt);
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("L") => {
                    let vals = parts
                        .map(|s| s.parse::<f64>().map_err(|_| err(i + 1, "bad float")))
                        .collect::<Result<Vec<_>, _>>()?;
                    if vals.len() != dim + 1 {
                        return Err(err(i + 1, "literal has the wrong number of coefficients"));
                    }
                    literals.push(AffineFunction::new(vals[..dim].to_vec(), vals[dim]));
                }
                Some("T") => {
                    let idx = parts.map(|s| parse_usize(s, i + 1)).collect::<Result<Vec<_>, _>>()?;
                    terms.push(idx);
                }
                _ => return Err(err(i + 1, "expected a literal (L) or term (T) line")),
            }
        }
        if literals.len() != nl || terms.len() != nt {
            return Err(err(hl + 1, "literal or term count does not match the header"));
        }
        Self::new(dim, literals, terms)
    }
}

/// Empirical check of `|f - f_hat| <= L sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundReport {
    /// Largest distance from a probe to its nearest linearization point.
    pub sigma: f64,
    pub lipschitz_true: f64,
    pub lipschitz_hat: f64,
    /// `lipschitz_true + lipschitz_hat`.
    pub l_estimate: f64,
    pub max_observed_error: f64,
    /// Largest mismatch at the linearization points themselves.
    pub max_error_at_linearization_points: f64,
}

impl ErrorBoundReport {
    pub fn bound(&self) -> f64 {
        self.l_estimate * self.sigma
    }

    pub fn holds(&self) -> bool {
        self.max_observed_error <= self.bound()
    }
}

/// Probes `f_hat` against `f_true`. Slopes are measured between each probe
/// and its nearest linearization point, the pairs the error bound is built
/// from.
pub fn certify_error<F>(
    f_true: F,
    f_hat: &LatticePwa,
    probes: &[Vec<f64>],
    linearization_points: &[Vec<f64>],
) -> Result<ErrorBoundReport, LatticeError>
where
    F: Fn(&[f64]) -> f64,
{
    if probes.is_empty() || linearization_points.is_empty() {
        return Err(LatticeError::NoProbes);
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let anchors: Vec<(f64, f64)> = linearization_points
        .iter()
        .map(|p| Ok((f_true(p), f_hat.evaluate(p)?)))
        .collect::<Result<_, LatticeError>>()?;
    let max_error_at_linearization_points = anchors.iter().map(|(t, h)| (t - h).abs()).fold(0.0, f64::max);

    let mut report = ErrorBoundReport {
        sigma: 0.0,
        lipschitz_true: 0.0,
        lipschitz_hat: 0.0,
        l_estimate: 0.0,
        max_observed_error: 0.0,
        max_error_at_linearization_points,
    };
    for probe in probes {
        let (nearest, d) = linearization_points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, dist(probe, p)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let ft = f_true(probe);
        let fh = f_hat.evaluate(probe)?;
        report.sigma = report.sigma.max(d);
        report.max_observed_error = report.max_observed_error.max((ft - fh).abs());
        if d > 0.0 {
            let (at, ah) = anchors[nearest];
            report.lipschitz_true = report.lipschitz_true.max((ft - at).abs() / d);
            report.lipschitz_hat = report.lipschitz_hat.max((fh - ah).abs() / d);
        }
    }
    report.l_estimate = report.lipschitz_true + report.lipschitz_hat;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(a: f64, c: f64) -> AffineFunction {
        AffineFunction::new(vec![a], c)
    }

    fn naive(l: &LatticePwa, x: &[f64]) -> f64 {
        let vals: Vec<f64> = l
            .literals()
            .iter()
            .map(|f| {
                let mut s = 0.0;
                for i in 0..x.len() {
                    s += f.coeffs[i] * x[i];
                }
                s + f.offset
            })
            .collect();
        let mut out = f64::NEG_INFINITY;
        for t in l.terms() {
            let mut m = f64::INFINITY;
            for &j in t {
                if vals[j] < m {
                    m = vals[j];
                }
            }
            if m > out {
                out = m;
            }
        }
        out
    }

    fn random_lattice(rng: &mut ChaCha8Rng, dim: usize, nl: usize, nt: usize) -> LatticePwa {
        let literals = (0..nl)
            .map(|_| {
                AffineFunction::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(), rng.random_range(-1.0..1.0))
            })
            .collect();
        let terms = (0..nt)
            .map(|_| {
                let mut t: Vec<usize> = (0..nl).filter(|_| rng.random_bool(0.4)).collect();
                if t.is_empty() {
                    t.push(rng.random_range(0..nl));
                }
                t
            })
            .collect();
        LatticePwa::new(dim, literals, terms).unwrap()
    }

    #[test]
    fn degenerate_and_two_line_lattices() {
        let f = LatticePwa::affine(AffineFunction::new(vec![2.0, -1.0], 0.5));
        assert_eq!(f.evaluate(&[1.0, 3.0]).unwrap(), 2.0 - 3.0 + 0.5);
        let g = LatticePwa::new(1, vec![line(1.0, 0.0), line(-1.0, 0.0)], vec![vec![0], vec![1]]).unwrap();
        assert_eq!(g.evaluate(&[0.5]).unwrap(), 0.5);
        assert_eq!(g.evaluate(&[-0.25]).unwrap(), 0.25);
        assert_eq!(
            g.evaluate(&[0.5, 1.0]),
            Err(LatticeError::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn invalid_structures_are_rejected() {
        assert_eq!(LatticePwa::new(1, vec![line(1.0, 0.0)], vec![]), Err(LatticeError::NoTerms));
        assert!(LatticePwa::new(1, vec![line(1.0, 0.0)], vec![vec![1]]).is_err());
        assert!(LatticePwa::new(1, vec![line(1.0, 0.0)], vec![vec![]]).is_err());
        assert_eq!(LatticePwa::construct_from_samples(&[]), Err(LatticeError::NoSamples));
    }

    #[test]
    fn evaluate_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let l = random_lattice(&mut rng, 3, 8, 5);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                assert_eq!(l.evaluate(&x).unwrap(), naive(&l, &x));
            }
        }
    }

    #[test]
    fn construct_single_affine_source() {
        let f = AffineFunction::new(vec![0.3, -0.7], 1.25);
        let samples: Vec<_> = [[0.0, 0.0], [1.0, -2.0], [0.5, 0.5]]
            .iter()
            .map(|p| LabeledSample::from_active(p.to_vec(), f.clone()))
            .collect();
        let l = LatticePwa::construct_from_samples(&samples).unwrap();
        assert_eq!(l.literals().len(), 1);
        assert_eq!(l.term_count(), 3);
        for x in [[3.0, 1.0], [-2.0, 7.0]] {
            assert_eq!(l.evaluate(&x).unwrap(), f.eval(&x));
        }
    }

    #[test]
    fn construct_absolute_value() {
        let samples = vec![
            LabeledSample::from_active(vec![-1.0], line(-1.0, 0.0)),
            LabeledSample::from_active(vec![1.0], line(1.0, 0.0)),
        ];
        let l = LatticePwa::construct_from_samples(&samples).unwrap();
        assert_eq!(l.term_count(), 2);
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            assert!((l.evaluate(&[x]).unwrap() - x.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn near_duplicate_literals_are_merged() {
        let samples = vec![
            LabeledSample::from_active(vec![0.0], line(1.0, 0.0)),
            LabeledSample::from_active(vec![0.1], line(1.0 + 1e-12, 0.0)),
            LabeledSample::from_active(vec![0.2], line(1.0 + 1e-6, 0.0)),
        ];
        let l = LatticePwa::construct_from_samples(&samples).unwrap();
        assert_eq!(l.literals().len(), 2);
    }

    #[test]
    fn simplify_merges_duplicates_and_supersets() {
        let lits = vec![line(1.0, 0.0), line(-1.0, 0.0), line(0.0, 0.5)];
        let dup = LatticePwa::new(1, lits.clone(), vec![vec![0, 2], vec![2, 0]]).unwrap();
        let grid: Vec<Vec<f64>> = (-20..=20).map(|i| vec![i as f64 * 0.1]).collect();
        assert_eq!(dup.simplify(&grid).term_count(), 1);

        let sup = LatticePwa::new(1, lits, vec![vec![0], vec![0, 1], vec![1]]).unwrap();
        let s = sup.simplify(&grid);
        assert_eq!(s.term_count(), 2);
        assert!(s.terms().iter().all(|t| t.len() == 1));
        for p in &grid {
            assert_eq!(s.evaluate(p).unwrap(), sup.evaluate(p).unwrap());
        }
    }

    #[test]
    fn simplify_preserves_values_and_keeps_only_needed_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let l = random_lattice(&mut rng, 2, 7, 9);
            let grid: Vec<Vec<f64>> =
                (0..400).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
            let s = l.simplify(&grid);
            assert!(s.term_count() <= l.term_count());
            for p in &grid {
                assert_eq!(s.evaluate(p).unwrap(), l.evaluate(p).unwrap());
            }
            if s.term_count() > 1 {
                for drop in 0..s.term_count() {
                    let mut terms = s.terms().to_vec();
                    terms.remove(drop);
                    let reduced = LatticePwa::new(2, s.literals().to_vec(), terms).unwrap();
                    assert!(
                        grid.iter().any(|p| reduced.evaluate(p).unwrap() != s.evaluate(p).unwrap()),
                        "term {drop} was redundant"
                    );
                }
            }
        }
    }

    #[test]
    fn text_format_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = random_lattice(&mut rng, 3, 6, 4);
        let text = l.to_text();
        assert!(text.starts_with("lattice 3 6 4\n"));
        assert_eq!(LatticePwa::from_text(&text).unwrap(), l);
        assert!(matches!(
            LatticePwa::from_text("lattice 1 1 1\nL 1.0\nT 0\n"),
            Err(LatticeError::Parse { line: 2, .. })
        ));
        assert!(LatticePwa::from_text("lattice 1 1 2\nL 1 0\nT 0\n").is_err());
    }

    #[test]
    fn certify_affine_is_exact() {
        let f = AffineFunction::new(vec![1.0, 2.0], -0.5);
        let lat = LatticePwa::affine(f.clone());
        let lin: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 0.0]).collect();
        let probes: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.08, 0.1]).collect();
        let r = certify_error(|x| f.eval(x), &lat, &probes, &lin).unwrap();
        assert_eq!(r.max_observed_error, 0.0);
        assert_eq!(r.max_error_at_linearization_points, 0.0);
        assert!(r.holds());
        assert!(certify_error(|x| f.eval(x), &lat, &[], &lin).is_err());
    }

    proptest! {
        #[test]
        fn interpolates_convex_samples(xs in proptest::collection::vec(-3.0f64..3.0, 1..12)) {
            // tangents of x^2 at each sample: a convex function is reproduced at
            // every sample point
            let samples: Vec<_> = xs
                .iter()
                .map(|&x| LabeledSample::from_active(vec![x], line(2.0 * x, -x * x)))
                .collect();
            let l = LatticePwa::construct_from_samples(&samples).unwrap();
            prop_assert!(l.interpolation_residual(&samples) <= 1e-8);
        }

        #[test]
        fn text_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = random_lattice(&mut rng, 2, 5, 3);
            prop_assert_eq!(LatticePwa::from_text(&l.to_text()).unwrap(), l);
        }
    }
}
