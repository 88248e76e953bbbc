//! Dense complex linear-algebra kernel.
//!
//! Every operator on a finite-dimensional Hilbert space is carried as a
//! [`ComplexMatrix`]. Eigen- and singular-value decompositions come from
//! `nalgebra`; everything built on top of them (square roots with clamping,
//! PSD certificates, unitary completion, Douglas factorization, SOT limits,
//! Sylvester nullspaces) lives here.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 0;

/// Numerical tolerances shared by every construction and check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Negative eigenvalues above `-eig_clamp * scale` are treated as zero.
    pub eig_clamp: f64,
    pub psd_tol: f64,
    pub rank_tol: f64,
    pub verify_tol: f64,
    pub sot_tol: f64,
    pub sot_max_iter: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            eig_clamp: 1e-10,
            psd_tol: 1e-9,
            rank_tol: 1e-10,
            verify_tol: 1e-8,
            sot_tol: 1e-12,
            sot_max_iter: 100_000,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eig_clamp", self.eig_clamp),
            ("psd_tol", self.psd_tol),
            ("rank_tol", self.rank_tol),
            ("verify_tol", self.verify_tol),
            ("sot_tol", self.sot_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(DilationError::InvalidConfig(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.sot_max_iter == 0 {
            return Err(DilationError::InvalidConfig(
                "sot_max_iter must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_verify_tol(mut self, tol: f64) -> Self {
        self.verify_tol = tol;
        self
    }

    /// Threshold below which a singular value counts as zero. Operators in
    /// this crate are contractions, so the scale never drops below one.
    pub fn rank_threshold(&self, sigma_max: f64) -> f64 {
        self.rank_tol * sigma_max.max(1.0)
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(i * angle)`.
pub fn cis(angle: f64) -> C64 {
    C64::from_polar(1.0, angle)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Build a matrix from real row-major data.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn diag(entries: &[C64]) -> ComplexMatrix {
    let n = entries.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            entries[i]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Frobenius norm.
pub fn fro(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // Work with the smaller Gram matrix.
    let gram = if m.nrows() >= m.ncols() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    let eig = SymmetricEigen::new(hermitize(&gram));
    eig.eigenvalues
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max)
        .max(0.0)
        .sqrt()
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn is_square(m: &ComplexMatrix) -> bool {
    m.nrows() == m.ncols()
}

fn require_square(m: &ComplexMatrix) -> Result<()> {
    if is_square(m) {
        Ok(())
    } else {
        Err(DilationError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `||M - M*||_F`.
pub fn asymmetry(m: &ComplexMatrix) -> f64 {
    fro(&(m - m.adjoint()))
}

/// `||U*U - I||_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    fro(&(u.adjoint() * u - identity(u.ncols())))
}

fn check_hermitian(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<()> {
    require_square(m)?;
    let asym = asymmetry(m);
    if asym > cfg.verify_tol * fro(m).max(1.0) {
        return Err(DilationError::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    require_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(hermitize(m), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| DilationError::Decomposition("Hermitian eigensolver".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

/// Singular value decomposition with singular values sorted descending
/// (stable in the original column index on ties).
pub struct SortedSvd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: ComplexMatrix,
}

pub fn sorted_svd(m: &ComplexMatrix) -> Result<SortedSvd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SortedSvd {
            u: zeros(rows, 0),
            singular_values: vec![],
            v: zeros(cols, 0),
        });
    }
    let svd = SVD::try_new(m.clone(), true, true, EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| DilationError::Decomposition("SVD".into()))?;
    let u = svd
        .u
        .ok_or_else(|| DilationError::Decomposition("SVD U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| DilationError::Decomposition("SVD V".into()))?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    Ok(SortedSvd {
        u: ComplexMatrix::from_fn(rows, k, |r, j| u[(r, order[j])]),
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: ComplexMatrix::from_fn(cols, k, |r, j| v_t[(order[j], r)].conj()),
    })
}

/// Full left singular basis of `m` (d x d), columns sorted by singular value
/// descending; columns past the rank span the orthogonal complement of the range.
fn full_left_basis(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    let (d, h) = m.shape();
    let padded = if h >= d {
        m.clone()
    } else {
        let mut p = zeros(d, d);
        p.view_mut((0, 0), (d, h)).copy_from(m);
        p
    };
    let svd = sorted_svd(&padded)?;
    Ok((svd.u, svd.singular_values))
}

/// `S = M_clamped^{1/2}` for a Hermitian PSD matrix. Eigenvalues within
/// `eig_clamp * scale` of zero are set to zero.
pub fn hermitian_sqrt(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<ComplexMatrix> {
    check_hermitian(m, cfg)?;
    let eig = hermitian_eigen(m)?;
    let scale = eig.values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut roots = Vec::with_capacity(eig.values.len());
    for &v in &eig.values {
        if v < -cfg.eig_clamp * scale {
            return Err(DilationError::NotPsd { min_eigenvalue: v });
        }
        let v = if v <= cfg.eig_clamp * scale { 0.0 } else { v };
        roots.push(c(v.sqrt(), 0.0));
    }
    let u = &eig.vectors;
    Ok(hermitize(&(u * diag(&roots) * u.adjoint())))
}

/// Result of a positive-semidefiniteness test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdCertificate {
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

pub fn psd_check(m: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<PsdCertificate> {
    check_hermitian(m, cfg)?;
    let eig = hermitian_eigen(m)?;
    let Some(&min_eigenvalue) = eig.values.first() else {
        return Ok(PsdCertificate {
            min_eigenvalue: 0.0,
            is_psd: true,
        });
    };
    let norm = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(PsdCertificate {
        min_eigenvalue,
        is_psd: min_eigenvalue >= -cfg.psd_tol * norm.max(1.0),
    })
}

/// Nearest unitary in the polar decomposition `M = W |M|`.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(m)?;
    let svd = sorted_svd(m)?;
    Ok(&svd.u * svd.v.adjoint())
}

/// Output of [`unitary_completion`].
#[derive(Debug, Clone)]
pub struct Completion {
    pub unitary: ComplexMatrix,
    pub rank_a: usize,
    pub rank_b: usize,
    /// `||A*A - B*B||_F`
    pub gram_residual: f64,
    /// `||G A - B||_F`
    pub fit_residual: f64,
}

/// Extend the isometry `A h -> B h` (from `ran A` onto `ran B`) to a unitary `G`
/// on the ambient space, so that `G A = B`.
///
/// Singular directions are paired through the right singular vectors of `A`;
/// the orthogonal complements are paired by position in the descending
/// singular-value order of the zero-padded SVDs of `A` and `B`. The assembled
/// map is finally projected onto the unitaries by polar decomposition.
pub fn unitary_completion(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cfg: &ToleranceConfig,
) -> Result<Completion> {
    if a.shape() != b.shape() {
        return Err(DilationError::DimensionMismatch(format!(
            "completion columns {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let d = a.nrows();
    let gram_a = a.adjoint() * a;
    let gram_residual = fro(&(&gram_a - b.adjoint() * b));
    if gram_residual > cfg.verify_tol * fro(&gram_a).max(1.0) {
        return Err(DilationError::GramMismatch {
            residual: gram_residual,
        });
    }

    let svd_a = sorted_svd(a)?;
    let sigma_max = svd_a.singular_values.first().copied().unwrap_or(0.0);
    let thr = cfg.rank_threshold(sigma_max);
    let rank_a = svd_a
        .singular_values
        .iter()
        .take_while(|&&s| s > thr)
        .count();

    let (u_a_full, _) = full_left_basis(a)?;
    let (u_b_full, sv_b) = full_left_basis(b)?;
    let thr_b = cfg.rank_threshold(sv_b.first().copied().unwrap_or(0.0));
    let rank_b = sv_b.iter().take_while(|&&s| s > thr_b).count();

    let mut g0 = zeros(d, d);
    for i in 0..rank_a {
        let v = svd_a.v.column(i);
        let s = svd_a.singular_values[i];
        let ua = (a * v) / c(s, 0.0);
        let ub = (b * v) / c(s, 0.0);
        g0 += &ub * ua.adjoint();
    }
    for i in rank_a..d {
        g0 += u_b_full.column(i) * u_a_full.column(i).adjoint();
    }
    let unitary = polar_unitary(&g0)?;
    let fit_residual = fro(&(&unitary * a - b));
    Ok(Completion {
        unitary,
        rank_a,
        rank_b,
        gram_residual,
        fit_residual,
    })
}

/// Contraction `S` on `ran X` with `S* X h = X T* h`, expressed in the
/// orthonormal eigenbasis of `ran X`.
#[derive(Debug, Clone)]
pub struct DouglasFactor {
    /// Orthonormal basis of `ran X` as columns (h x r).
    pub basis: ComplexMatrix,
    /// Eigenvalues of `X` on `basis`, descending.
    pub weights: Vec<f64>,
    /// `S` in the coordinates of `basis` (r x r).
    pub s: ComplexMatrix,
    /// `||S* (X|) - (X T*)|||_F` in range coordinates.
    pub residual: f64,
    pub norm: f64,
}

impl DouglasFactor {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    /// The map `H -> ran X` in range coordinates: `h |-> B* X h`.
    pub fn range_map(&self) -> ComplexMatrix {
        let lam: Vec<C64> = self.weights.iter().map(|&w| c(w, 0.0)).collect();
        diag(&lam) * self.basis.adjoint()
    }
}

/// Douglas factorization for `T X^2 T* <= X^2`.
pub fn douglas_solve(
    x: &ComplexMatrix,
    t: &ComplexMatrix,
    cfg: &ToleranceConfig,
) -> Result<DouglasFactor> {
    check_hermitian(x, cfg)?;
    if t.shape() != x.shape() {
        return Err(DilationError::DimensionMismatch(format!(
            "douglas: X {:?} vs T {:?}",
            x.shape(),
            t.shape()
        )));
    }
    let x2 = x * x;
    let gap = hermitize(&(&x2 - t * &x2 * t.adjoint()));
    let gap_eig = hermitian_eigen(&gap)?;
    if let Some(&min) = gap_eig.values.first() {
        if min < -cfg.verify_tol {
            return Err(DilationError::NotDominated {
                min_eigenvalue: min,
            });
        }
    }

    let eig = hermitian_eigen(x)?;
    let top = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(*v));
    let thr = cfg.rank_threshold(top);
    // Descending eigenvalue order.
    let keep: Vec<usize> = (0..eig.values.len())
        .rev()
        .filter(|&i| eig.values[i] > thr)
        .collect();
    let h = x.nrows();
    let r = keep.len();
    let basis = ComplexMatrix::from_fn(h, r, |i, k| eig.vectors[(i, keep[k])]);
    let weights: Vec<f64> = keep.iter().map(|&i| eig.values[i]).collect();

    let compressed = basis.adjoint() * t * &basis;
    let s = ComplexMatrix::from_fn(r, r, |i, j| compressed[(i, j)] * (weights[j] / weights[i]));

    let lam: Vec<C64> = weights.iter().map(|&w| c(w, 0.0)).collect();
    let x_restricted = diag(&lam) * basis.adjoint();
    let residual = fro(&(s.adjoint() * &x_restricted - &x_restricted * t.adjoint()));
    let norm = op_norm(&s);
    Ok(DouglasFactor {
        basis,
        weights,
        s,
        residual,
        norm,
    })
}

/// Limit of `A^m A*^m` by the iteration `M <- A M A*`.
#[derive(Debug, Clone)]
pub struct SotLimit {
    pub limit: ComplexMatrix,
    pub iterations: usize,
    pub residual: f64,
}

pub fn sot_limit_power(a: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<SotLimit> {
    require_square(a)?;
    let norm = op_norm(a);
    if norm > 1.0 + cfg.verify_tol {
        return Err(DilationError::InvalidInstance(format!(
            "SOT limit needs a contraction, got norm {norm:.6}"
        )));
    }
    let n = a.nrows();
    let a_adj = a.adjoint();
    let mut m = identity(n);
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.sot_max_iter {
        let next = hermitize(&(a * &m * &a_adj));
        residual = fro(&(&next - &m));
        m = next;
        if residual <= cfg.sot_tol {
            return Ok(SotLimit {
                limit: m,
                iterations: it,
                residual,
            });
        }
    }
    Err(DilationError::NoConvergence {
        iterations: cfg.sot_max_iter,
        residual,
    })
}

/// Which side the twist `Q` sits on in a Q-commutation relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationVariant {
    /// `T1 T2 = Q T2 T1`
    Left,
    /// `T1 T2 = T2 Q T1`
    Middle,
    /// `T1 T2 = T2 T1 Q`
    Right,
}

impl RelationVariant {
    pub const ALL: [RelationVariant; 3] = [
        RelationVariant::Left,
        RelationVariant::Middle,
        RelationVariant::Right,
    ];

    /// `T1 T2 - rhs` for the declared relation.
    pub fn defect(
        self,
        t1: &ComplexMatrix,
        t2: &ComplexMatrix,
        q: &ComplexMatrix,
    ) -> ComplexMatrix {
        let lhs = t1 * t2;
        let rhs = match self {
            RelationVariant::Left => q * t2 * t1,
            RelationVariant::Middle => t2 * q * t1,
            RelationVariant::Right => t2 * t1 * q,
        };
        lhs - rhs
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationVariant::Left => "left",
            RelationVariant::Middle => "middle",
            RelationVariant::Right => "right",
        }
    }
}

/// Orthonormal (Frobenius) basis of `{X : X T2 = rhs(X)}` where `rhs` is
/// `Q T2 X`, `T2 Q X` or `T2 X Q` according to `variant`.
pub fn sylvester_nullspace(
    t2: &ComplexMatrix,
    q: &ComplexMatrix,
    variant: RelationVariant,
    cfg: &ToleranceConfig,
) -> Result<Vec<ComplexMatrix>> {
    require_square(t2)?;
    if q.shape() != t2.shape() {
        return Err(DilationError::DimensionMismatch(
            "sylvester: Q and T2 differ".into(),
        ));
    }
    let d = t2.nrows();
    let id = identity(d);
    // Column-major vec: vec(A X B) = (B^T kron A) vec(X).
    let left = t2.transpose().kronecker(&id);
    let right = match variant {
        RelationVariant::Left => id.kronecker(&(q * t2)),
        RelationVariant::Middle => id.kronecker(&(t2 * q)),
        RelationVariant::Right => q.transpose().kronecker(t2),
    };
    let op = left - right;
    let svd = sorted_svd(&op)?;
    let sigma_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let thr = cfg.rank_threshold(sigma_max);
    let basis = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= thr)
        .map(|(k, _)| ComplexMatrix::from_column_slice(d, d, svd.v.column(k).as_slice()))
        .collect();
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn swap2() -> ComplexMatrix {
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let s = hermitian_sqrt(&identity(2), &cfg()).unwrap();
        assert!(fro(&(s - identity(2))) < 1e-14);
        let s = hermitian_sqrt(&from_real_rows(&[&[4.0, 0.0], &[0.0, 0.0]]), &cfg()).unwrap();
        assert!(fro(&(s - from_real_rows(&[&[2.0, 0.0], &[0.0, 0.0]]))) < 1e-14);
    }

    #[test]
    fn sqrt_of_defect() {
        let t = swap2() * c(0.5, 0.0);
        let m = identity(2) - t.adjoint() * &t;
        let s = hermitian_sqrt(&m, &cfg()).unwrap();
        let r = 0.75_f64.sqrt();
        assert!(fro(&(s - diag(&[c(r, 0.0), c(r, 0.0)]))) < 1e-14);
    }

    #[test]
    fn sqrt_clamps_rounding_negatives_and_rejects_real_ones() {
        let m = diag(&[c(1.0, 0.0), c(-1e-13, 0.0)]);
        let s = hermitian_sqrt(&m, &cfg()).unwrap();
        assert_eq!(s[(1, 1)].re, 0.0);
        let bad = diag(&[c(1.0, 0.0), c(-1e-3, 0.0)]);
        assert!(matches!(
            hermitian_sqrt(&bad, &cfg()),
            Err(DilationError::NotPsd { .. })
        ));
        let asym = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(
            hermitian_sqrt(&asym, &cfg()),
            Err(DilationError::NotHermitian { .. })
        ));
    }

    #[test]
    fn psd_examples() {
        let cert = psd_check(&identity(3), &cfg()).unwrap();
        assert!(cert.is_psd);
        assert!((cert.min_eigenvalue - 1.0).abs() < 1e-14);
        let cert = psd_check(&diag(&[c(1.0, 0.0), c(-1.0, 0.0)]), &cfg()).unwrap();
        assert!(!cert.is_psd);
        // (1 - 0.25)^2 for the commuting scalar pair (0.5, 0.5).
        let t = c(0.5, 0.0);
        let defect = ComplexMatrix::from_element(
            1,
            1,
            c(1.0, 0.0) - t * t.conj() - t * t.conj() + t * t * t.conj() * t.conj(),
        );
        let cert = psd_check(&defect, &cfg()).unwrap();
        assert!((cert.min_eigenvalue - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn completion_examples() {
        let g = unitary_completion(&identity(2), &identity(2), &cfg()).unwrap();
        assert!(fro(&(g.unitary - identity(2))) < 1e-12);

        let e1 = from_real_rows(&[&[1.0], &[0.0]]);
        let e2 = from_real_rows(&[&[0.0], &[1.0]]);
        let g = unitary_completion(&e1, &e2, &cfg()).unwrap();
        assert!(fro(&(&g.unitary * &e1 - &e2)) < 1e-14);
        assert!((g.unitary[(0, 1)].norm() - 1.0).abs() < 1e-14);
        assert!(unitarity_defect(&g.unitary) < 1e-12);

        // T1 = T2 = 0, Q = I on C^1: A h = (h,0,0,0)... here the D_T = I
        // columns give A = e1 and B = e3 in C^4 (slots 1 and 3 of the block).
        let mut a = zeros(4, 1);
        a[(0, 0)] = c(1.0, 0.0);
        let mut b = zeros(4, 1);
        b[(2, 0)] = c(1.0, 0.0);
        let g = unitary_completion(&a, &b, &cfg()).unwrap();
        assert!(fro(&(&g.unitary * &a - &b)) < 1e-14);
        assert!(unitarity_defect(&g.unitary) < 1e-12);
    }

    #[test]
    fn completion_rejects_gram_mismatch() {
        let a = from_real_rows(&[&[1.0], &[0.0]]);
        let b = from_real_rows(&[&[0.0], &[0.5]]);
        assert!(matches!(
            unitary_completion(&a, &b, &cfg()),
            Err(DilationError::GramMismatch { .. })
        ));
    }

    #[test]
    fn douglas_examples() {
        let t = from_real_rows(&[&[0.3, 0.4], &[0.1, -0.2]]);
        let f = douglas_solve(&identity(2), &t, &cfg()).unwrap();
        // S is T written in the eigenbasis of X = I.
        let back = &f.basis * &f.s * f.basis.adjoint();
        assert!(fro(&(back - &t)) < 1e-14);

        let f = douglas_solve(&zeros(2, 2), &t, &cfg()).unwrap();
        assert_eq!(f.rank(), 0);
        assert_eq!(f.s.shape(), (0, 0));

        let x = diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let t = diag(&[c(0.3, 0.2), c(0.9, 0.0)]);
        let f = douglas_solve(&x, &t, &cfg()).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.s[(0, 0)] - c(0.3, 0.2)).norm() < 1e-14);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn douglas_rejects_undominated() {
        let x = diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let t = from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            douglas_solve(&x, &t, &cfg()),
            Err(DilationError::NotDominated { .. })
        ));
    }

    #[test]
    fn sot_examples() {
        let lim = sot_limit_power(&swap2(), &cfg()).unwrap();
        assert!(fro(&(lim.limit - identity(2))) < 1e-14);
        let lim = sot_limit_power(&(swap2() * c(0.5, 0.0)), &cfg()).unwrap();
        assert!(fro(&lim.limit) < 1e-11);
        let a = diag(&[c(1.0, 0.0), c(0.5, 0.0)]);
        let lim = sot_limit_power(&a, &cfg()).unwrap();
        assert!(fro(&(&lim.limit - diag(&[c(1.0, 0.0), c(0.0, 0.0)]))) < 1e-11);
        assert!(fro(&(&a * &lim.limit * a.adjoint() - &lim.limit)) <= 10.0 * cfg().sot_tol);
    }

    #[test]
    fn sot_reports_non_convergence() {
        let cfg = ToleranceConfig {
            sot_max_iter: 3,
            ..cfg()
        };
        let a = diag(&[c(0.99, 0.0)]);
        assert!(matches!(
            sot_limit_power(&a, &cfg),
            Err(DilationError::NoConvergence { .. })
        ));
    }

    #[test]
    fn sylvester_examples() {
        let basis =
            sylvester_nullspace(&identity(2), &identity(2), RelationVariant::Left, &cfg()).unwrap();
        assert_eq!(basis.len(), 4);
        let minus = identity(2) * c(-1.0, 0.0);
        let basis =
            sylvester_nullspace(&identity(2), &minus, RelationVariant::Left, &cfg()).unwrap();
        assert!(basis.is_empty());

        let basis = sylvester_nullspace(&swap2(), &minus, RelationVariant::Left, &cfg()).unwrap();
        assert_eq!(basis.len(), 2);
        let clock = diag(&[c(1.0, 0.0), c(-1.0, 0.0)]) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let proj: f64 = basis
            .iter()
            .map(|b| {
                b.iter()
                    .zip(clock.iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum();
        assert!((proj - 1.0).abs() < 1e-12);
        for b in &basis {
            assert!(fro(&RelationVariant::Left.defect(b, &swap2(), &minus)) < 1e-10);
        }
    }
}
