//! Dilations of q-commuting tuples: Szegő and Brehmer positivity, the map
//! `Π` into a truncated Hardy space, the pure-case dilation and the assembly
//! over all subsets for the Brehmer class.

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::hardy::TruncatedHardy;
use crate::linalg::{
    c, diag, douglas_solve, fro, hermitian_eigen, hermitize, identity, op_norm, psd_check,
    sot_limit_power, zeros, ComplexMatrix, ToleranceConfig, C64,
};
use crate::phase::{PhaseMatrix, QTuple};
use crate::report::Check;

/// All subsets of `0..n` in binary-counter order, each in increasing order.
pub fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

pub fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !subset.contains(i)).collect()
}

fn check_subset(t: &QTuple, f: &[usize]) -> Result<()> {
    for (pos, &i) in f.iter().enumerate() {
        if i >= t.n() {
            return Err(DilationError::IndexOutOfRange {
                index: i,
                size: t.n(),
            });
        }
        if pos > 0 && f[pos - 1] >= i {
            return Err(DilationError::InvalidConfig(
                "subset must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

/// `T_F = T_{f1} ... T_{fr}`.
pub fn ordered_product(t: &QTuple, f: &[usize]) -> Result<ComplexMatrix> {
    check_subset(t, f)?;
    Ok(f.iter().fold(identity(t.dim()), |acc, &i| acc * t.op(i)))
}

/// `T_F* = T_{fr}* ... T_{f1}*`.
pub fn ordered_product_adjoint(t: &QTuple, f: &[usize]) -> Result<ComplexMatrix> {
    Ok(ordered_product(t, f)?.adjoint())
}

/// `T^k = T_1^{k_1} ... T_n^{k_n}`, or `T^{*k} = T_n^{*k_n} ... T_1^{*k_1}`.
pub fn power_word(t: &QTuple, k: &[usize], adjoint: bool) -> Result<ComplexMatrix> {
    if k.len() != t.n() {
        return Err(DilationError::DimensionMismatch(
            "multi-index length".into(),
        ));
    }
    let mut out = identity(t.dim());
    for (i, &ki) in k.iter().enumerate() {
        for _ in 0..ki {
            out = if adjoint {
                t.op(i).adjoint() * out
            } else {
                out * t.op(i)
            };
        }
    }
    Ok(out)
}

/// `sum_F (-1)^{|F|} T_F T_F*` over all subsets.
pub fn szego_defect(t: &QTuple) -> ComplexMatrix {
    let mut acc = zeros(t.dim(), t.dim());
    for f in subsets(t.n()) {
        let tf = ordered_product(t, &f).expect("valid subset");
        let term = &tf * tf.adjoint();
        if f.len() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// `prod_p (I - T_p T_p*)` in increasing order.
pub fn defect_product(t: &QTuple) -> ComplexMatrix {
    t.ops().iter().fold(identity(t.dim()), |acc, tp| {
        acc * (identity(t.dim()) - tp * tp.adjoint())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPositivity {
    pub subset: Vec<usize>,
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub subsets: Vec<SubsetPositivity>,
    pub passed: bool,
}

impl PositivityReport {
    pub fn first_failure(&self) -> Option<&SubsetPositivity> {
        self.subsets.iter().find(|s| !s.is_psd)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.first_failure() {
            Some(f) => Err(DilationError::NotBrehmer {
                subset: f.subset.clone(),
                min_eigenvalue: f.min_eigenvalue,
            }),
            None => Ok(self),
        }
    }
}

/// Positivity of the defect of every sub-tuple (the empty subset is trivially `I`).
pub fn brehmer_check(t: &QTuple, cfg: &ToleranceConfig) -> Result<PositivityReport> {
    let mut out = Vec::new();
    for g in subsets(t.n()) {
        if g.is_empty() {
            out.push(SubsetPositivity {
                subset: g,
                min_eigenvalue: 1.0,
                is_psd: true,
            });
            continue;
        }
        let cert = psd_check(&hermitize(&szego_defect(&t.restrict(&g)?)), cfg)?;
        out.push(SubsetPositivity {
            subset: g,
            min_eigenvalue: cert.min_eigenvalue,
            is_psd: cert.is_psd,
        });
    }
    let passed = out.iter().all(|s| s.is_psd);
    Ok(PositivityReport {
        subsets: out,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FugledeReport {
    /// `||N N* - N* N||_F`
    pub normality: f64,
    /// `||X N - q N X||_F`
    pub hypothesis: f64,
    /// `||X N* - conj(q) N* X||_F`
    pub conclusion: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// With `N` normal and `X N = q N X`, check `X N* = conj(q) N* X`.
pub fn fuglede_putnam_check(
    x: &ComplexMatrix,
    n: &ComplexMatrix,
    q: C64,
    cfg: &ToleranceConfig,
) -> Result<FugledeReport> {
    if n.nrows() != n.ncols() || x.shape() != n.shape() {
        return Err(DilationError::DimensionMismatch(
            "X and N must be square of equal size".into(),
        ));
    }
    let na = n.adjoint();
    let normality = fro(&(n * &na - &na * n));
    let hypothesis = fro(&(x * n - (n * x) * q));
    if normality > cfg.verify_tol || hypothesis > cfg.verify_tol {
        return Err(DilationError::InvalidInstance(format!(
            "Fuglede-Putnam hypotheses fail (normality {normality:.3e}, relation {hypothesis:.3e})"
        )));
    }
    let conclusion = fro(&(x * &na - (&na * x) * q.conj()));
    let threshold = 10.0 * cfg.verify_tol;
    Ok(FugledeReport {
        normality,
        hypothesis,
        conclusion,
        threshold,
        passed: conclusion <= threshold,
    })
}

/// Coefficient block `cross_phase(k) D T^{*k}` at every monomial of `sp`.
///
/// `t` is the tuple over the variables of `sp` (with its own phase matrix);
/// `defect` is `e x dim` where `e = sp.e_dim()`.
pub fn pi_matrix(t: &QTuple, defect: &ComplexMatrix, sp: &TruncatedHardy) -> Result<ComplexMatrix> {
    let n = t.n();
    if sp.n() != n || defect.nrows() != sp.e_dim() || defect.ncols() != t.dim() {
        return Err(DilationError::DimensionMismatch(
            "Π: tuple, defect and space disagree".into(),
        ));
    }
    let d = sp.deg_cap();
    // adjoint_powers[i][j] = (T_i*)^j
    let adjoint_powers: Vec<Vec<ComplexMatrix>> = (0..n)
        .map(|i| {
            let a = t.op(i).adjoint();
            let mut v = vec![identity(t.dim())];
            for j in 1..=d {
                let next = &a * &v[j - 1];
                v.push(next);
            }
            v
        })
        .collect();
    let e = sp.e_dim();
    let mut out = zeros(sp.dim(), t.dim());
    for (p, k) in sp.monomials().iter().enumerate() {
        let mut word = identity(t.dim());
        for i in 0..n {
            if k[i] > 0 {
                word = &adjoint_powers[i][k[i]] * word;
            }
        }
        let coeff = defect * word * t.phases().cross_phase(k)?;
        out.rows_mut(p * e, e).copy_from(&coeff);
    }
    Ok(out)
}

/// `Π` for the sub-tuple on `subset` with coefficient map `defect`, at cap `d`.
pub fn dilation_map_pi(
    t: &QTuple,
    subset: &[usize],
    defect: &ComplexMatrix,
    d: usize,
) -> Result<(TruncatedHardy, ComplexMatrix)> {
    check_subset(t, subset)?;
    let sub = restrict_any(t, subset)?;
    let sp = TruncatedHardy::new(subset.len(), defect.nrows(), d)?;
    let pi = pi_matrix_general(&sub, defect, &sp)?;
    Ok((sp, pi))
}

/// Sub-tuple that may be empty (the empty tuple carries only its dimension).
struct SubTuple {
    dim: usize,
    ops: Vec<ComplexMatrix>,
    phases: PhaseMatrix,
}

fn restrict_any(t: &QTuple, subset: &[usize]) -> Result<SubTuple> {
    Ok(SubTuple {
        dim: t.dim(),
        ops: subset.iter().map(|&i| t.op(i).clone()).collect(),
        phases: t.phases().restrict(subset)?,
    })
}

fn pi_matrix_general(
    sub: &SubTuple,
    defect: &ComplexMatrix,
    sp: &TruncatedHardy,
) -> Result<ComplexMatrix> {
    if sub.ops.is_empty() {
        if defect.ncols() != sub.dim || sp.dim() != defect.nrows() {
            return Err(DilationError::DimensionMismatch(
                "Π on zero variables".into(),
            ));
        }
        return Ok(defect.clone());
    }
    let t = QTuple::new(sub.ops.clone(), sub.phases.clone())?;
    pi_matrix(&t, defect, sp)
}

/// Rows of `sp` whose monomial has `k_m <= d - 1`.
fn rows_below_cap(sp: &TruncatedHardy, m: usize) -> Vec<usize> {
    let d = sp.deg_cap();
    sp.indices_where(|k| k[m] < d)
}

fn restricted_fro(m: &ComplexMatrix, rows: &[usize]) -> f64 {
    rows.iter()
        .map(|&r| m.row(r).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `||Π T_m* - (M_{z_m} R_{[q]_m})* Π||_F` on rows with `k_m <= d - 1`, for each `m`.
pub fn verify_pi_intertwining(
    pi: &ComplexMatrix,
    t: &QTuple,
    p: &PhaseMatrix,
    sp: &TruncatedHardy,
) -> Result<Vec<f64>> {
    if p.n() != t.n() || sp.n() != t.n() {
        return Err(DilationError::DimensionMismatch(
            "intertwining: variable count".into(),
        ));
    }
    (0..t.n())
        .map(|m| {
            let lhs = pi * t.op(m).adjoint();
            let rhs = sp.shift_apply(&p.rows()[m], m, pi, true)?;
            Ok(restricted_fro(&(lhs - rhs), &rows_below_cap(sp, m)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormLimitReport {
    /// `s_l` for `l = 1..=l_max`.
    pub partial_sums: Vec<f64>,
    /// `||Π h||^2` with degree cap `l_max - 1`.
    pub pi_norm_sq: f64,
    pub h_norm_sq: f64,
    pub gap: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// `s_l = sum_F (-1)^{|F|} ||T^{*l 1_F} h||^2` against `||Π h||^2` at cap `l - 1`.
pub fn norm_limit_check(
    t: &QTuple,
    h: &ComplexMatrix,
    l_max: usize,
    cfg: &ToleranceConfig,
) -> Result<NormLimitReport> {
    if h.nrows() != t.dim() || h.ncols() != 1 {
        return Err(DilationError::DimensionMismatch(
            "h must be a column vector on H".into(),
        ));
    }
    if l_max == 0 {
        return Err(DilationError::InvalidConfig("l_max must be >= 1".into()));
    }
    let n = t.n();
    let adj: Vec<ComplexMatrix> = t.ops().iter().map(|o| o.adjoint()).collect();
    let mut partial_sums = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let mut s = 0.0;
        for f in subsets(n) {
            let mut v = h.clone();
            for &i in &f {
                for _ in 0..l {
                    v = &adj[i] * v;
                }
            }
            let sign = if f.len() % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * v.norm_squared();
        }
        partial_sums.push(s);
    }
    let defect = floored_sqrt(&szego_defect(t), cfg)?;
    let sp = TruncatedHardy::new(n, t.dim(), l_max - 1)?;
    let pi = pi_matrix(t, &defect, &sp)?;
    let pi_norm_sq = (pi * h).norm_squared();
    let last = *partial_sums.last().expect("l_max >= 1");
    let gap = (pi_norm_sq - last).abs();
    Ok(NormLimitReport {
        partial_sums,
        pi_norm_sq,
        h_norm_sq: h.norm_squared(),
        gap,
        threshold: cfg.verify_tol,
        passed: gap <= cfg.verify_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub spectral_radii: Vec<f64>,
    /// `(m, ||(T_i*)^m||)` for `m = 1, 2, 4, ...` per operator.
    pub power_norms: Vec<Vec<(usize, f64)>>,
    pub pure: Vec<bool>,
    pub passed: bool,
}

const PURITY_DOUBLINGS: usize = 20;
const SCHUR_MAX_ITER: usize = 10_000;

/// Purity of each `T_i`: certified when some `||(T_i*)^m||` drops below one
/// (then the spectral radius is below one) or vanishes.
pub fn purity_check(t: &QTuple, cfg: &ToleranceConfig) -> Result<PurityReport> {
    let mut radii = Vec::new();
    let mut norms = Vec::new();
    let mut pure = Vec::new();
    for op in t.ops() {
        let schur_rho = nalgebra::Schur::try_new(op.clone(), f64::EPSILON, SCHUR_MAX_ITER)
            .and_then(|s| s.eigenvalues())
            .map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max));
        let mut a = op.adjoint();
        let mut m = 1usize;
        let mut row = Vec::new();
        let mut ok = false;
        for _ in 0..=PURITY_DOUBLINGS {
            let nm = op_norm(&a);
            row.push((m, nm));
            if nm <= cfg.sot_tol || nm < 1.0 - cfg.verify_tol {
                ok = true;
                break;
            }
            a = &a * &a;
            m *= 2;
        }
        // Gelfand bound when the Schur iteration stalls (e.g. nilpotent input).
        let rho = schur_rho.unwrap_or_else(|| {
            row.iter()
                .map(|&(m, nm)| nm.powf(1.0 / m as f64))
                .fold(f64::INFINITY, f64::min)
        });
        radii.push(rho);
        norms.push(row);
        pure.push(ok);
    }
    let passed = pure.iter().all(|&p| p);
    Ok(PurityReport {
        spectral_radii: radii,
        power_norms: norms,
        pure,
        passed,
    })
}

pub const D_MAX: usize = 64;
/// Largest Hardy-space dimension the adaptive search will build.
pub const MAX_HARDY_DIM: usize = 1 << 21;

fn start_degree(n: usize) -> usize {
    n + 4
}

/// Degree caps tried by the adaptive search for a space with `n` variables
/// and coefficient dimension `e`.
fn degree_schedule(n: usize, e: usize, fixed: Option<usize>) -> Vec<usize> {
    if let Some(d) = fixed {
        return vec![d];
    }
    let mut out = Vec::new();
    let mut d = start_degree(n);
    loop {
        let size = (d + 1)
            .checked_pow(n as u32)
            .and_then(|s| s.checked_mul(e.max(1)));
        if size.is_none_or(|s| s > MAX_HARDY_DIM) {
            break;
        }
        out.push(d);
        if d >= D_MAX {
            break;
        }
        d = (2 * d).min(D_MAX);
    }
    if out.is_empty() {
        out.push(start_degree(n).min(D_MAX));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationAttempt {
    pub deg_cap: usize,
    pub isometry_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureReport {
    pub deg_cap: usize,
    pub hardy_dim: usize,
    pub attempts: Vec<TruncationAttempt>,
    pub szego_min_eigenvalue: f64,
    pub purity: PurityReport,
    /// `||Π*Π - I||_F`
    pub isometry_defect: f64,
    pub intertwining: Vec<f64>,
    pub threshold: f64,
    pub passed: bool,
}

impl PureReport {
    pub fn checks(&self) -> Vec<Check> {
        let t = self.threshold;
        let mut out = vec![Check::le("isometry_defect", self.isometry_defect, t)];
        for (m, r) in self.intertwining.iter().enumerate() {
            out.push(Check::le(format!("intertwining_{}", m + 1), *r, t));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PureDilation {
    pub space: TruncatedHardy,
    pub phases: PhaseMatrix,
    pub pi: ComplexMatrix,
    pub report: PureReport,
}

impl PureDilation {
    /// Dense rotational shifts on the truncated model.
    pub fn rotational_shifts(&self) -> Result<Vec<ComplexMatrix>> {
        (0..self.phases.n())
            .map(|m| self.space.rotational_shift(&self.phases, m))
            .collect()
    }
}

/// Dilation of a pure Szegő-positive tuple into rotational shifts.
///
/// With `deg = Some(d)` the cap is fixed and the report records any defect;
/// with `None` the cap doubles from `n + 4` until `||Π*Π - I|| <= verify_tol`.
pub fn pure_dilation(
    t: &QTuple,
    deg: Option<usize>,
    cfg: &ToleranceConfig,
) -> Result<PureDilation> {
    let purity = purity_check(t, cfg)?;
    if !purity.passed {
        return Err(DilationError::NotPure);
    }
    let defect = hermitize(&szego_defect(t));
    let cert = psd_check(&defect, cfg)?;
    if !cert.is_psd {
        return Err(DilationError::NotSzego {
            min_eigenvalue: cert.min_eigenvalue,
        });
    }
    let d_sqrt = floored_sqrt(&defect, cfg)?;
    let mut attempts = Vec::new();
    let schedule = degree_schedule(t.n(), t.dim(), deg);
    let mut last = None;
    for &d in &schedule {
        let sp = TruncatedHardy::new(t.n(), t.dim(), d)?;
        let pi = pi_matrix(t, &d_sqrt, &sp)?;
        let iso = fro(&(pi.adjoint() * &pi - identity(t.dim())));
        attempts.push(TruncationAttempt {
            deg_cap: d,
            isometry_defect: iso,
        });
        let done = iso <= cfg.verify_tol;
        last = Some((sp, pi, iso));
        if done {
            break;
        }
    }
    let (sp, pi, iso) = last.expect("non-empty schedule");
    if deg.is_none() && iso > cfg.verify_tol {
        return Err(DilationError::TruncationNotConverged {
            deg_cap: sp.deg_cap(),
            defect: iso,
        });
    }
    let intertwining = verify_pi_intertwining(&pi, t, t.phases(), &sp)?;
    let mut report = PureReport {
        deg_cap: sp.deg_cap(),
        hardy_dim: sp.dim(),
        attempts,
        szego_min_eigenvalue: cert.min_eigenvalue,
        purity,
        isometry_defect: iso,
        intertwining,
        threshold: cfg.verify_tol,
        passed: false,
    };
    report.passed = crate::report::all_passed(&report.checks());
    Ok(PureDilation {
        space: sp,
        phases: t.phases().clone(),
        pi,
        report,
    })
}

/// Components of one summand of the Brehmer dilation.
#[derive(Debug, Clone)]
pub struct SubsetData {
    pub subset: Vec<usize>,
    pub complement: Vec<usize>,
    /// `X_G` on `H`.
    pub x: ComplexMatrix,
    /// Orthonormal basis of `ran X_G` (h x r).
    pub basis: ComplexMatrix,
    /// `h |-> Λ B* h`, the coordinate map `H -> ran X_G` (r x h).
    pub range_map: ComplexMatrix,
    /// Compressed operators `S_1..S_n` on `C^r`.
    pub s: Vec<ComplexMatrix>,
    /// `U_j = S_j` for `j` outside the subset.
    pub u: Vec<(usize, ComplexMatrix)>,
    pub space: TruncatedHardy,
    /// `Π_G = Π~_G X_G` as a map `H -> H^2_{C^r}` (rows follow `space`).
    pub pi: ComplexMatrix,
    pub diagnostics: SubsetDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDiagnostics {
    pub subset: Vec<usize>,
    pub rank: usize,
    pub sot_iterations: usize,
    pub sot_residual: f64,
    pub douglas_residual: f64,
    pub s_norm_excess: f64,
    pub coisometry_residual: f64,
    pub defect_min_eigenvalue: f64,
    pub pi_norm: f64,
    /// `||Π_G T_i* - V_{G,i}* Π_G||` per `i` on exact rows.
    pub intertwining: Vec<f64>,
}

impl SubsetData {
    /// Rotation angles of `V_{G,i}` over the variables of the subset.
    fn angles(&self, phases: &PhaseMatrix, i: usize) -> Vec<f64> {
        self.subset.iter().map(|&m| phases.theta(i, m)).collect()
    }

    /// Apply `V_{G,i}` (or its adjoint) to the columns of `x`.
    pub fn apply_v(
        &self,
        phases: &PhaseMatrix,
        i: usize,
        x: &ComplexMatrix,
        adjoint: bool,
    ) -> Result<ComplexMatrix> {
        let angles = self.angles(phases, i);
        if let Some(pos) = self.subset.iter().position(|&m| m == i) {
            self.space.shift_apply(&angles, pos, x, adjoint)
        } else {
            let u = &self
                .u
                .iter()
                .find(|(j, _)| *j == i)
                .expect("complement index")
                .1;
            self.space.twisted_apply(u, &angles, 2, x, adjoint)
        }
    }

    /// Rows on which `V_{G,i}* Π_G` is computed without truncation.
    fn exact_rows(&self, i: usize) -> Vec<usize> {
        match self.subset.iter().position(|&m| m == i) {
            Some(pos) => rows_below_cap(&self.space, pos),
            None => (0..self.space.dim()).collect(),
        }
    }
}

/// Floor the spectrum of a PSD `M` below `rank_tol * max(1, ||M||)` and take the root.
fn floored_sqrt(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(&hermitize(m))?;
    let top = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let thr = cfg.rank_threshold(top);
    let roots: Vec<C64> = eig
        .values
        .iter()
        .map(|&v| c(if v > thr { v.sqrt() } else { 0.0 }, 0.0))
        .collect();
    let u = &eig.vectors;
    Ok(hermitize(&(u * diag(&roots) * u.adjoint())))
}

/// One summand of the Brehmer dilation at degree cap `d`.
pub fn subset_pipeline(
    t: &QTuple,
    g: &[usize],
    d: usize,
    cfg: &ToleranceConfig,
) -> Result<SubsetData> {
    check_subset(t, g)?;
    let n = t.n();
    let h = t.dim();
    let comp = complement(n, g);
    let a = ordered_product(t, &comp)?;
    let sot = sot_limit_power(&a, cfg)?;
    let x = floored_sqrt(&sot.limit, cfg)?;

    let factors = t
        .ops()
        .iter()
        .map(|tj| douglas_solve(&x, tj, cfg))
        .collect::<Result<Vec<_>>>()?;
    let first = &factors[0];
    let r = first.rank();
    let basis = first.basis.clone();
    let range_map = first.range_map();
    let s: Vec<ComplexMatrix> = factors.iter().map(|f| f.s.clone()).collect();
    let douglas_residual = factors.iter().map(|f| f.residual).fold(0.0, f64::max);
    let s_norm_excess = factors
        .iter()
        .map(|f| (f.norm - 1.0).max(0.0))
        .fold(0.0, f64::max);

    let u: Vec<(usize, ComplexMatrix)> = comp.iter().map(|&j| (j, s[j].clone())).collect();
    let coisometry_residual = u
        .iter()
        .map(|(_, uj)| fro(&(uj * uj.adjoint() - identity(r))))
        .fold(0.0, f64::max);

    let (space, pi, defect_min) = if r == 0 {
        (TruncatedHardy::new(g.len(), 0, d)?, zeros(0, h), 0.0)
    } else {
        let s_tuple = QTuple::new(s.clone(), t.phases().clone())?;
        let sub = restrict_any(&s_tuple, g)?;
        let defect = if g.is_empty() {
            identity(r)
        } else {
            hermitize(&szego_defect(&QTuple::new(
                sub.ops.clone(),
                sub.phases.clone(),
            )?))
        };
        let cert = psd_check(&defect, cfg)?;
        if !cert.is_psd {
            return Err(DilationError::NotBrehmer {
                subset: g.to_vec(),
                min_eigenvalue: cert.min_eigenvalue,
            });
        }
        let dsq = floored_sqrt(&defect, cfg)?;
        let space = TruncatedHardy::new(g.len(), r, d)?;
        let pi_tilde = pi_matrix_general(&sub, &dsq, &space)?;
        (space, pi_tilde * &range_map, cert.min_eigenvalue)
    };

    let mut data = SubsetData {
        subset: g.to_vec(),
        complement: comp,
        x,
        basis,
        range_map,
        s,
        u,
        space,
        pi,
        diagnostics: SubsetDiagnostics {
            subset: g.to_vec(),
            rank: r,
            sot_iterations: sot.iterations,
            sot_residual: sot.residual,
            douglas_residual,
            s_norm_excess,
            coisometry_residual,
            defect_min_eigenvalue: defect_min,
            pi_norm: 0.0,
            intertwining: Vec::new(),
        },
    };
    data.diagnostics.pi_norm = fro(&data.pi);
    let mut inter = Vec::with_capacity(n);
    for i in 0..n {
        inter.push(subset_intertwining(&data, t, i)?);
    }
    data.diagnostics.intertwining = inter;
    Ok(data)
}

fn subset_intertwining(data: &SubsetData, t: &QTuple, i: usize) -> Result<f64> {
    if data.pi.nrows() == 0 {
        return Ok(0.0);
    }
    let lhs = &data.pi * t.op(i).adjoint();
    let rhs = data.apply_v(t.phases(), i, &data.pi, true)?;
    Ok(restricted_fro(&(lhs - rhs), &data.exact_rows(i)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrehmerReport {
    pub deg_cap: usize,
    pub attempts: Vec<TruncationAttempt>,
    pub positivity: PositivityReport,
    pub subsets: Vec<SubsetDiagnostics>,
    /// `||Π*Π - I||_F` for the stacked map.
    pub isometry_defect: f64,
    /// Global `||Π T_j* - (⊕_G V_{G,j}*) Π||_F` per `j`.
    pub intertwining: Vec<f64>,
    /// Largest q-relation or starred-relation residual of the dilating tuple,
    /// per summand, on the interior of a cap-`doubly_q_deg` model.
    pub doubly_q_residual: f64,
    pub doubly_q_deg: usize,
    /// Largest `||S_j S_j* - I||` over summands and `j` outside the subset.
    pub coisometry_residual: f64,
    /// `max ||Π_G||_F` over proper subsets.
    pub proper_subset_pi_norm: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl BrehmerReport {
    pub fn checks(&self) -> Vec<Check> {
        let t = self.threshold;
        let mut out = vec![
            Check::flag("brehmer_positivity", self.positivity.passed),
            Check::le("isometry_defect", self.isometry_defect, t),
            Check::le("doubly_q_residual", self.doubly_q_residual, t),
            Check::le("coisometry_residual", self.coisometry_residual, t),
        ];
        for (j, r) in self.intertwining.iter().enumerate() {
            out.push(Check::le(format!("intertwining_{}", j + 1), *r, t));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BrehmerDilation {
    pub phases: PhaseMatrix,
    pub parts: Vec<SubsetData>,
    /// Vertical stack of the `Π_G` in binary-counter order of `G`.
    pub pi: ComplexMatrix,
    pub report: BrehmerReport,
}

impl BrehmerDilation {
    pub fn part(&self, subset: &[usize]) -> Option<&SubsetData> {
        self.parts.iter().find(|p| p.subset == subset)
    }
}

pub const DOUBLY_Q_DEG: usize = 4;

/// Relation residuals of `(V_{G,i})_i` on basis vectors with every `k <= deg - 2`.
fn blockwise_doubly_q(data: &SubsetData, phases: &PhaseMatrix) -> Result<f64> {
    let r = data.diagnostics.rank;
    if r == 0 {
        return Ok(0.0);
    }
    let model = SubsetData {
        space: TruncatedHardy::new(data.subset.len(), r, DOUBLY_Q_DEG)?,
        pi: zeros(0, 0),
        ..data.clone()
    };
    let int = model.space.interior();
    let x = ComplexMatrix::from_fn(model.space.dim(), int.len(), |row, col| {
        if row == int[col] {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let n = phases.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = phases.q_value(i, j)?;
            let vj = model.apply_v(phases, j, &x, false)?;
            let vi = model.apply_v(phases, i, &x, false)?;
            let lhs = model.apply_v(phases, i, &vj, false)?;
            let rhs = model.apply_v(phases, j, &vi, false)?;
            worst = worst.max(fro(&(lhs - rhs * q)));
            let vj_adj = model.apply_v(phases, j, &x, true)?;
            let lhs = model.apply_v(phases, i, &vj_adj, false)?;
            let rhs = model.apply_v(phases, j, &vi, true)?;
            worst = worst.max(fro(&(lhs - rhs * q.conj())));
        }
    }
    Ok(worst)
}

fn assemble(
    t: &QTuple,
    d: usize,
    cfg: &ToleranceConfig,
) -> Result<(Vec<SubsetData>, ComplexMatrix, f64)> {
    let parts = subsets(t.n())
        .iter()
        .map(|g| subset_pipeline(t, g, d, cfg))
        .collect::<Result<Vec<_>>>()?;
    let rows: usize = parts.iter().map(|p| p.pi.nrows()).sum();
    let mut pi = zeros(rows, t.dim());
    let mut off = 0;
    for p in &parts {
        pi.rows_mut(off, p.pi.nrows()).copy_from(&p.pi);
        off += p.pi.nrows();
    }
    let iso = fro(&(pi.adjoint() * &pi - identity(t.dim())));
    Ok((parts, pi, iso))
}

/// Dilation of a Brehmer-class tuple as a direct sum over all subsets `G`.
///
/// With `deg = None` the cap doubles from `n + 4` until the stacked map is
/// isometric within `verify_tol`; failure at the last cap is an error.
pub fn brehmer_dilation(
    t: &QTuple,
    deg: Option<usize>,
    cfg: &ToleranceConfig,
) -> Result<BrehmerDilation> {
    let positivity = brehmer_check(t, cfg)?.into_result()?;
    let schedule = degree_schedule(t.n(), t.dim(), deg);
    let mut attempts = Vec::new();
    let mut last = None;
    for &d in &schedule {
        let (parts, pi, iso) = assemble(t, d, cfg)?;
        attempts.push(TruncationAttempt {
            deg_cap: d,
            isometry_defect: iso,
        });
        let done = iso <= cfg.verify_tol;
        last = Some((d, parts, pi, iso));
        if done {
            break;
        }
    }
    let (d, parts, pi, iso) = last.expect("non-empty schedule");
    if deg.is_none() && iso > cfg.verify_tol {
        return Err(DilationError::IsometryDefect { residual: iso });
    }

    let n = t.n();
    let intertwining = (0..n)
        .map(|j| {
            parts
                .iter()
                .map(|p| p.diagnostics.intertwining[j].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let doubly = parts
        .iter()
        .map(|p| blockwise_doubly_q(p, t.phases()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let coisometry_residual = parts
        .iter()
        .map(|p| p.diagnostics.coisometry_residual)
        .fold(0.0, f64::max);
    let proper = parts
        .iter()
        .filter(|p| p.subset.len() < n)
        .map(|p| p.diagnostics.pi_norm)
        .fold(0.0, f64::max);
    let mut report = BrehmerReport {
        deg_cap: d,
        attempts,
        positivity,
        subsets: parts.iter().map(|p| p.diagnostics.clone()).collect(),
        isometry_defect: iso,
        intertwining,
        doubly_q_residual: doubly,
        doubly_q_deg: DOUBLY_Q_DEG,
        coisometry_residual,
        proper_subset_pi_norm: proper,
        threshold: cfg.verify_tol,
        passed: false,
    };
    report.passed = crate::report::all_passed(&report.checks());
    Ok(BrehmerDilation {
        phases: t.phases().clone(),
        parts,
        pi,
        report,
    })
}
