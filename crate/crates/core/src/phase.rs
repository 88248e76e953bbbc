//! Phase matrices, q-commuting tuples and Q-commuting pairs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
pub use crate::linalg::RelationVariant;
use crate::linalg::{cis, fro, identity, op_norm, ComplexMatrix, ToleranceConfig, C64};
use crate::report::Check;

/// Reduce an angle to `(-pi, pi]`.
pub fn canonical_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Antisymmetric angle matrix with `q(i, j) = exp(i theta(i, j))` and
/// half-powers `exp(i theta(i, j) / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMatrix {
    n: usize,
    theta: Vec<Vec<f64>>,
}

/// Accepts `{"n": .., "theta": [[..]]}` or the bare angle matrix.
#[derive(Deserialize)]
#[serde(untagged)]
enum PhaseMatrixRaw {
    Full { n: usize, theta: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

impl<'de> Deserialize<'de> for PhaseMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let theta = match PhaseMatrixRaw::deserialize(d)? {
            PhaseMatrixRaw::Full { n, theta } => {
                if theta.len() != n {
                    return Err(serde::de::Error::custom("theta row count differs from n"));
                }
                theta
            }
            PhaseMatrixRaw::Bare(theta) => theta,
        };
        PhaseMatrix::new(theta).map_err(serde::de::Error::custom)
    }
}

const PHASE_EPS: f64 = 1e-12;

impl PhaseMatrix {
    /// Validates antisymmetry modulo `2 pi` and canonicalizes the upper
    /// triangle; the lower triangle is set to the exact negatives.
    pub fn new(theta: Vec<Vec<f64>>) -> Result<Self> {
        let n = theta.len();
        for (i, row) in theta.iter().enumerate() {
            if row.len() != n {
                return Err(DilationError::InvalidPhase(format!(
                    "row {i} has length {}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(DilationError::InvalidPhase("non-finite angle".into()));
            }
        }
        for i in 0..n {
            if canonical_angle(theta[i][i]).abs() > PHASE_EPS {
                return Err(DilationError::InvalidPhase(format!(
                    "theta({i},{i}) is not 0"
                )));
            }
            for j in i + 1..n {
                if canonical_angle(theta[i][j] + theta[j][i]).abs() > PHASE_EPS {
                    return Err(DilationError::InvalidPhase(format!(
                        "theta({i},{j}) and theta({j},{i}) are not opposite"
                    )));
                }
            }
        }
        Ok(Self::from_upper(n, |i, j| theta[i][j]))
    }

    /// Build from the strict upper triangle.
    pub fn from_upper(n: usize, upper: impl Fn(usize, usize) -> f64) -> Self {
        let mut theta = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let t = canonical_angle(upper(i, j));
                theta[i][j] = t;
                theta[j][i] = -t;
            }
        }
        PhaseMatrix { n, theta }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_upper(n, |_, _| 0.0)
    }

    /// Every pair `i < j` gets the same angle.
    pub fn uniform(n: usize, angle: f64) -> Self {
        Self::from_upper(n, |_, _| angle)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.theta[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.theta
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(DilationError::IndexOutOfRange {
                index: i,
                size: self.n,
            })
        } else {
            Ok(())
        }
    }

    pub fn q_value(&self, i: usize, j: usize) -> Result<C64> {
        self.check(i)?;
        self.check(j)?;
        Ok(cis(self.theta[i][j]))
    }

    pub fn q_half(&self, i: usize, j: usize) -> Result<C64> {
        self.check(i)?;
        self.check(j)?;
        Ok(cis(self.theta[i][j] / 2.0))
    }

    /// `exp((i/2) sum_i theta(m, i) k_i)`.
    pub fn monomial_phase(&self, m: usize, k: &[usize]) -> Result<C64> {
        self.check(m)?;
        self.check_len(k)?;
        Ok(cis(0.5 * self.monomial_angle(m, k)))
    }

    pub(crate) fn monomial_angle(&self, m: usize, k: &[usize]) -> f64 {
        k.iter()
            .enumerate()
            .map(|(i, &ki)| self.theta[m][i] * ki as f64)
            .sum()
    }

    /// `exp((i/2) sum_{i<j} theta(i, j) k_i k_j)`.
    pub fn cross_phase(&self, k: &[usize]) -> Result<C64> {
        self.check_len(k)?;
        let mut angle = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                angle += self.theta[i][j] * (k[i] * k[j]) as f64;
            }
        }
        Ok(cis(0.5 * angle))
    }

    fn check_len(&self, k: &[usize]) -> Result<()> {
        if k.len() != self.n {
            return Err(DilationError::DimensionMismatch(format!(
                "multi-index of length {} for {} variables",
                k.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Phase matrix of the sub-tuple indexed by `subset` (increasing order).
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        for &i in subset {
            self.check(i)?;
        }
        let m = subset.len();
        Ok(Self::from_upper(m, |a, b| self.theta[subset[a]][subset[b]]))
    }
}

/// An n-tuple of square operators with a phase matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QTuple {
    #[serde(with = "crate::io::matrix_list")]
    ops: Vec<ComplexMatrix>,
    phases: PhaseMatrix,
}

impl QTuple {
    pub fn new(ops: Vec<ComplexMatrix>, phases: PhaseMatrix) -> Result<Self> {
        if ops.is_empty() {
            return Err(DilationError::InvalidInstance("tuple is empty".into()));
        }
        if ops.len() != phases.n() {
            return Err(DilationError::DimensionMismatch(format!(
                "{} operators but phase matrix of size {}",
                ops.len(),
                phases.n()
            )));
        }
        let dim = ops[0].nrows();
        for t in &ops {
            if t.nrows() != t.ncols() {
                return Err(DilationError::NotSquare {
                    rows: t.nrows(),
                    cols: t.ncols(),
                });
            }
            if t.nrows() != dim {
                return Err(DilationError::DimensionMismatch(
                    "operators of different sizes".into(),
                ));
            }
            if !crate::linalg::all_finite(t) {
                return Err(DilationError::InvalidInstance("non-finite entries".into()));
            }
        }
        Ok(QTuple { ops, phases })
    }

    /// Re-run the constructor checks (for deserialized values).
    pub fn revalidate(self) -> Result<Self> {
        Self::new(self.ops, self.phases)
    }

    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &ComplexMatrix {
        &self.ops[i]
    }

    pub fn phases(&self) -> &PhaseMatrix {
        &self.phases
    }

    /// Sub-tuple on `subset` (increasing order) with the restricted phases.
    pub fn restrict(&self, subset: &[usize]) -> Result<QTuple> {
        let phases = self.phases.restrict(subset)?;
        let ops = subset.iter().map(|&i| self.ops[i].clone()).collect();
        Ok(QTuple { ops, phases })
    }

    pub fn map_ops(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<QTuple> {
        QTuple::new(self.ops.iter().map(f).collect(), self.phases.clone())
    }
}

/// Residuals of the defining relations of a tuple or pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub max_relation_residual: f64,
    pub max_norm_excess: f64,
    /// Only present for the doubly q-commuting test.
    pub max_star_residual: Option<f64>,
    /// Only present for pairs: `||Q*Q - I||_F`.
    pub unitarity_defect: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
}

impl RelationReport {
    fn finish(mut self) -> Self {
        let t = self.threshold;
        self.passed = self.max_relation_residual <= t
            && self.max_norm_excess <= t
            && self.max_star_residual.is_none_or(|s| s <= t)
            && self.unitarity_defect.is_none_or(|s| s <= t);
        self
    }

    pub fn checks(&self, prefix: &str) -> Vec<Check> {
        let t = self.threshold;
        let mut out = vec![
            Check::le(
                format!("{prefix}relation_residual"),
                self.max_relation_residual,
                t,
            ),
            Check::le(format!("{prefix}norm_excess"), self.max_norm_excess, t),
        ];
        if let Some(s) = self.max_star_residual {
            out.push(Check::le(format!("{prefix}star_relation_residual"), s, t));
        }
        if let Some(s) = self.unitarity_defect {
            out.push(Check::le(format!("{prefix}q_unitarity_defect"), s, t));
        }
        out
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(DilationError::RelationViolated {
                residual: self
                    .max_relation_residual
                    .max(self.max_star_residual.unwrap_or(0.0))
                    .max(self.unitarity_defect.unwrap_or(0.0)),
                norm_excess: self.max_norm_excess,
            })
        }
    }
}

fn norm_excess(ops: &[&ComplexMatrix]) -> f64 {
    ops.iter()
        .map(|t| (op_norm(t) - 1.0).max(0.0))
        .fold(0.0, f64::max)
}

/// `max ||T_i T_j - q(i,j) T_j T_i||_F` over all pairs and the contraction excess.
pub fn verify_q_tuple(t: &QTuple, cfg: &ToleranceConfig) -> RelationReport {
    let mut res: f64 = 0.0;
    let p = t.phases();
    for i in 0..t.n() {
        for j in i + 1..t.n() {
            let q = cis(p.theta(i, j));
            let r = fro(&(t.op(i) * t.op(j) - (t.op(j) * t.op(i)) * q));
            res = res.max(r);
        }
    }
    let refs: Vec<&ComplexMatrix> = t.ops().iter().collect();
    RelationReport {
        max_relation_residual: res,
        max_norm_excess: norm_excess(&refs),
        max_star_residual: None,
        unitarity_defect: None,
        threshold: cfg.verify_tol,
        passed: false,
    }
    .finish()
}

/// Adds `T_i T_j* = conj(q(i,j)) T_j* T_i` for all `i != j`.
pub fn verify_doubly_q(t: &QTuple, cfg: &ToleranceConfig) -> RelationReport {
    let mut rep = verify_q_tuple(t, cfg);
    let p = t.phases();
    let mut star: f64 = 0.0;
    for i in 0..t.n() {
        for j in 0..t.n() {
            if i == j {
                continue;
            }
            let qbar = cis(-p.theta(i, j));
            let tj_adj = t.op(j).adjoint();
            let r = fro(&(t.op(i) * &tj_adj - (&tj_adj * t.op(i)) * qbar));
            star = star.max(r);
        }
    }
    rep.max_star_residual = Some(star);
    rep.finish()
}

/// A pair of contractions related through a unitary `Q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QPair {
    #[serde(with = "crate::io::matrix")]
    pub t1: ComplexMatrix,
    #[serde(with = "crate::io::matrix")]
    pub t2: ComplexMatrix,
    #[serde(with = "crate::io::matrix")]
    pub q: ComplexMatrix,
    pub variant: RelationVariant,
}

impl QPair {
    pub fn new(
        t1: ComplexMatrix,
        t2: ComplexMatrix,
        q: ComplexMatrix,
        variant: RelationVariant,
    ) -> Result<Self> {
        let d = t1.nrows();
        for m in [&t1, &t2, &q] {
            if m.nrows() != m.ncols() {
                return Err(DilationError::NotSquare {
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            if m.nrows() != d {
                return Err(DilationError::DimensionMismatch(
                    "pair operators differ in size".into(),
                ));
            }
            if !crate::linalg::all_finite(m) {
                return Err(DilationError::InvalidInstance("non-finite entries".into()));
            }
        }
        if d == 0 {
            return Err(DilationError::InvalidInstance(
                "pair on the zero space".into(),
            ));
        }
        Ok(QPair { t1, t2, q, variant })
    }

    /// Scalar twist `Q = q I`.
    pub fn scalar(
        t1: ComplexMatrix,
        t2: ComplexMatrix,
        q: C64,
        variant: RelationVariant,
    ) -> Result<Self> {
        let d = t1.nrows();
        QPair::new(t1, t2, identity(d) * q, variant)
    }

    pub fn revalidate(self) -> Result<Self> {
        Self::new(self.t1, self.t2, self.q, self.variant)
    }

    pub fn dim(&self) -> usize {
        self.t1.nrows()
    }
}

pub fn verify_q_pair(p: &QPair, cfg: &ToleranceConfig) -> RelationReport {
    RelationReport {
        max_relation_residual: fro(&p.variant.defect(&p.t1, &p.t2, &p.q)),
        max_norm_excess: norm_excess(&[&p.t1, &p.t2]),
        max_star_residual: None,
        unitarity_defect: Some(crate::linalg::unitarity_defect(&p.q)),
        threshold: cfg.verify_tol,
        passed: false,
    }
    .finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, from_real_rows};
    use proptest::prelude::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn q_value_examples() {
        let p = PhaseMatrix::uniform(2, PI);
        assert!(close(p.q_value(0, 1).unwrap(), c(-1.0, 0.0)));
        let p = PhaseMatrix::uniform(2, PI / 2.0);
        assert!(close(p.q_value(0, 1).unwrap(), c(0.0, 1.0)));
        assert!(close(
            PhaseMatrix::zeros(2).q_value(0, 1).unwrap(),
            c(1.0, 0.0)
        ));
        assert!(p.q_value(0, 2).is_err());
    }

    #[test]
    fn q_half_branch_at_minus_one() {
        let p = PhaseMatrix::uniform(2, PI);
        assert!(close(p.q_half(0, 1).unwrap(), c(0.0, 1.0)));
        assert!(close(p.q_half(1, 0).unwrap(), c(0.0, -1.0)));
        let p = PhaseMatrix::uniform(2, PI / 2.0);
        assert!(close(p.q_half(0, 1).unwrap(), cis(PI / 4.0)));
    }

    #[test]
    fn canonicalization() {
        let p = PhaseMatrix::new(vec![vec![0.0, 3.0 * PI], vec![-3.0 * PI, 0.0]]).unwrap();
        assert_eq!(p.theta(0, 1), PI);
        assert_eq!(p.theta(1, 0), -PI);
        assert!(PhaseMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(PhaseMatrix::new(vec![vec![0.5, 0.0], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn monomial_and_cross_examples() {
        let p = PhaseMatrix::uniform(2, PI);
        assert!(close(p.monomial_phase(0, &[0, 0]).unwrap(), c(1.0, 0.0)));
        assert!(close(p.monomial_phase(0, &[0, 2]).unwrap(), c(-1.0, 0.0)));
        assert!(close(p.monomial_phase(0, &[5, 1]).unwrap(), c(0.0, 1.0)));
        assert!(close(p.cross_phase(&[1, 1]).unwrap(), c(0.0, 1.0)));
        assert!(close(
            PhaseMatrix::zeros(1).cross_phase(&[7]).unwrap(),
            c(1.0, 0.0)
        ));
        assert!(close(
            PhaseMatrix::zeros(3).cross_phase(&[2, 3, 4]).unwrap(),
            c(1.0, 0.0)
        ));
    }

    fn clock_shift(d: usize, r: f64) -> QTuple {
        let w = 2.0 * PI / d as f64;
        let clock = diag(&(0..d).map(|k| cis(w * k as f64) * r).collect::<Vec<_>>());
        let shift = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == (j + 1) % d {
                c(r, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        QTuple::new(vec![clock, shift], PhaseMatrix::uniform(2, w)).unwrap()
    }

    #[test]
    fn tuple_verification() {
        let cfg = ToleranceConfig::default();
        let t = QTuple::new(
            vec![
                diag(&[c(0.5, 0.0), c(0.2, 0.0)]),
                diag(&[c(0.1, 0.0), c(-0.3, 0.0)]),
            ],
            PhaseMatrix::zeros(2),
        )
        .unwrap();
        let rep = verify_q_tuple(&t, &cfg);
        assert!(rep.passed && rep.max_relation_residual == 0.0);
        assert!(verify_doubly_q(&t, &cfg).passed);

        for d in [2, 3, 5] {
            let t = clock_shift(d, 0.9);
            assert!(verify_q_tuple(&t, &cfg).passed);
            // Clock and shift are normal, so Fuglede's theorem gives the starred relation too.
            assert!(verify_doubly_q(&t, &cfg).passed);
        }

        let t = QTuple::new(
            vec![diag(&[c(0.5, 0.0)]), diag(&[c(0.4, 0.0)])],
            PhaseMatrix::uniform(2, PI),
        )
        .unwrap();
        let rep = verify_q_tuple(&t, &cfg);
        assert!(!rep.passed);
        assert!((rep.max_relation_residual - 2.0 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn doubly_q_failure() {
        let cfg = ToleranceConfig::default();
        let j = from_real_rows(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let j2 = &j * &j;
        let t = QTuple::new(vec![j, j2], PhaseMatrix::zeros(2)).unwrap();
        assert!(verify_q_tuple(&t, &cfg).passed);
        assert!(!verify_doubly_q(&t, &cfg).passed);
    }

    #[test]
    fn pair_verification() {
        let cfg = ToleranceConfig::default();
        let t = clock_shift(2, 0.5);
        let pair = QPair::scalar(
            t.op(0).clone(),
            t.op(1).clone(),
            c(-1.0, 0.0),
            RelationVariant::Left,
        )
        .unwrap();
        assert!(verify_q_pair(&pair, &cfg).passed);
        let wrong = QPair::scalar(
            t.op(0).clone(),
            t.op(1).clone(),
            c(1.0, 0.0),
            RelationVariant::Left,
        )
        .unwrap();
        assert!(!verify_q_pair(&wrong, &cfg).passed);
    }

    #[test]
    fn serde_round_trip() {
        let t = clock_shift(3, 0.5);
        let s = serde_json::to_string(&t).unwrap();
        let back: QTuple = serde_json::from_str(&s).unwrap();
        assert_eq!(back.ops(), t.ops());
        assert_eq!(back.phases(), t.phases());
    }

    fn phases_strategy() -> impl Strategy<Value = PhaseMatrix> {
        (1usize..5)
            .prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0f64..10.0, n * n)))
            .prop_map(|(n, v)| PhaseMatrix::from_upper(n, |i, j| v[i * n + j]))
    }

    proptest! {
        #[test]
        fn q_half_identities(p in phases_strategy()) {
            for i in 0..p.n() {
                for j in 0..p.n() {
                    let h = p.q_half(i, j).unwrap();
                    prop_assert!((h - p.q_half(j, i).unwrap().conj()).norm() < 1e-15);
                    prop_assert!((h * h - p.q_value(i, j).unwrap()).norm() < 1e-14);
                    prop_assert!((p.q_value(i, j).unwrap() - p.q_value(j, i).unwrap().conj()).norm() < 1e-15);
                }
            }
        }

        #[test]
        fn monomial_recurrence(p in phases_strategy(), ks in prop::collection::vec(0usize..6, 4), m in 0usize..4, j in 0usize..4) {
            let n = p.n();
            let (m, j) = (m % n, j % n);
            let k: Vec<usize> = ks[..n].to_vec();
            let mut kj = k.clone();
            kj[j] += 1;
            let lhs = p.monomial_phase(m, &kj).unwrap();
            let rhs = p.monomial_phase(m, &k).unwrap() * p.q_half(m, j).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn cross_ratio(p in phases_strategy(), ks in prop::collection::vec(0usize..6, 4), m in 0usize..4) {
            let n = p.n();
            let m = m % n;
            let k: Vec<usize> = ks[..n].to_vec();
            let mut km = k.clone();
            km[m] += 1;
            let ratio = p.cross_phase(&km).unwrap() / p.cross_phase(&k).unwrap();
            let angle: f64 = (0..m).map(|i| p.theta(i, m) * k[i] as f64).sum::<f64>()
                + (m + 1..n).map(|j| p.theta(m, j) * k[j] as f64).sum::<f64>();
            prop_assert!((ratio - cis(0.5 * angle)).norm() < 1e-12);
        }
    }
}
