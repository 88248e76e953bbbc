//! Truncated vector-valued Hardy space over the polydisc.
//!
//! Basis vectors are `z^k ⊗ e_t` with `max_i k_i <= d`, ordered by total degree,
//! then lexicographically in `k`, with the coefficient index `t` innermost.

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::linalg::{cis, fro, identity, zeros, ComplexMatrix, ToleranceConfig, C64};
use crate::phase::PhaseMatrix;

/// Label embedded in reports that serialize Hardy-space operators.
pub const BASIS_ORDER: &str = "graded-lex, coeff-innermost";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedHardy {
    n: usize,
    e_dim: usize,
    deg_cap: usize,
    monomials: Vec<Vec<usize>>,
    /// Mixed-radix code of `k` -> position in `monomials`.
    lookup: Vec<usize>,
}

impl TruncatedHardy {
    pub fn new(n: usize, e_dim: usize, deg_cap: usize) -> Result<Self> {
        let radix = deg_cap + 1;
        let count = radix
            .checked_pow(n as u32)
            .filter(|c| c.checked_mul(e_dim.max(1)).is_some_and(|t| t <= 1 << 24))
            .ok_or_else(|| {
                DilationError::InvalidConfig(format!(
                    "Hardy space with n={n}, d={deg_cap}, e_dim={e_dim} is too large"
                ))
            })?;
        let mut monomials: Vec<Vec<usize>> = (0..count)
            .map(|mut code| {
                (0..n)
                    .map(|_| {
                        let k = code % radix;
                        code /= radix;
                        k
                    })
                    .collect()
            })
            .collect();
        monomials.sort_by(|a, b| {
            let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
            sa.cmp(&sb).then_with(|| a.cmp(b))
        });
        let mut lookup = vec![0; count];
        for (pos, k) in monomials.iter().enumerate() {
            lookup[Self::code(radix, k)] = pos;
        }
        Ok(TruncatedHardy {
            n,
            e_dim,
            deg_cap,
            monomials,
            lookup,
        })
    }

    fn code(radix: usize, k: &[usize]) -> usize {
        k.iter().rev().fold(0, |acc, &ki| acc * radix + ki)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn e_dim(&self) -> usize {
        self.e_dim
    }

    pub fn deg_cap(&self) -> usize {
        self.deg_cap
    }

    pub fn num_monomials(&self) -> usize {
        self.monomials.len()
    }

    pub fn dim(&self) -> usize {
        self.monomials.len() * self.e_dim
    }

    pub fn monomials(&self) -> &[Vec<usize>] {
        &self.monomials
    }

    pub fn monomial_position(&self, k: &[usize]) -> Option<usize> {
        if k.len() != self.n || k.iter().any(|&ki| ki > self.deg_cap) {
            return None;
        }
        Some(self.lookup[Self::code(self.deg_cap + 1, k)])
    }

    pub fn index(&self, k: &[usize], t: usize) -> Option<usize> {
        if t >= self.e_dim {
            return None;
        }
        self.monomial_position(k).map(|p| p * self.e_dim + t)
    }

    pub fn multi_index(&self, idx: usize) -> Result<(&[usize], usize)> {
        if idx >= self.dim() {
            return Err(DilationError::IndexOutOfRange {
                index: idx,
                size: self.dim(),
            });
        }
        Ok((&self.monomials[idx / self.e_dim], idx % self.e_dim))
    }

    fn check_var(&self, m: usize) -> Result<()> {
        if m >= self.n {
            Err(DilationError::IndexOutOfRange {
                index: m,
                size: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Basis indices whose monomial satisfies `pred`.
    pub fn indices_where(&self, pred: impl Fn(&[usize]) -> bool) -> Vec<usize> {
        let e = self.e_dim;
        self.monomials
            .iter()
            .enumerate()
            .filter(|(_, k)| pred(k))
            .flat_map(|(p, _)| (0..e).map(move |t| p * e + t))
            .collect()
    }

    /// Basis vectors with every `k_i <= d - 2`, where products of two shifts
    /// (or a shift and an adjoint) see no truncation.
    pub fn interior(&self) -> Vec<usize> {
        let cap = self.deg_cap as isize - 2;
        self.indices_where(|k| k.iter().all(|&ki| ki as isize <= cap))
    }

    /// Coordinate shift `M_{z_m}`; columns leaving the cap are zero.
    pub fn shift_matrix(&self, m: usize) -> Result<ComplexMatrix> {
        self.check_var(m)?;
        let mut out = zeros(self.dim(), self.dim());
        let mut kk = vec![0; self.n];
        for (p, k) in self.monomials.iter().enumerate() {
            if k[m] == self.deg_cap {
                continue;
            }
            kk.copy_from_slice(k);
            kk[m] += 1;
            let q = self.lookup[Self::code(self.deg_cap + 1, &kk)];
            for t in 0..self.e_dim {
                out[(q * self.e_dim + t, p * self.e_dim + t)] = C64::new(1.0, 0.0);
            }
        }
        Ok(out)
    }

    /// Diagonal unitary with entry `exp(i * power/2 * sum_v angles[v] k_v)`.
    pub fn rotation_from_angles(&self, angles: &[f64], power: u32) -> Result<ComplexMatrix> {
        if angles.len() != self.n {
            return Err(DilationError::DimensionMismatch(format!(
                "{} rotation angles for {} variables",
                angles.len(),
                self.n
            )));
        }
        let mut out = zeros(self.dim(), self.dim());
        for (p, k) in self.monomials.iter().enumerate() {
            let a: f64 = angles.iter().zip(k).map(|(th, &ki)| th * ki as f64).sum();
            let z = cis(0.5 * power as f64 * a);
            for t in 0..self.e_dim {
                let i = p * self.e_dim + t;
                out[(i, i)] = z;
            }
        }
        Ok(out)
    }

    /// `R_{[q]_m}` (power 1) or its square (power 2).
    pub fn rotation_matrix(&self, p: &PhaseMatrix, m: usize, power: u32) -> Result<ComplexMatrix> {
        self.check_phases(p)?;
        self.check_var(m)?;
        if !(power == 1 || power == 2) {
            return Err(DilationError::InvalidConfig(format!(
                "rotation power {power}"
            )));
        }
        self.rotation_from_angles(&p.rows()[m], power)
    }

    fn check_phases(&self, p: &PhaseMatrix) -> Result<()> {
        if p.n() != self.n {
            return Err(DilationError::DimensionMismatch(format!(
                "phase matrix of size {} on {} variables",
                p.n(),
                self.n
            )));
        }
        Ok(())
    }

    /// `M_{z_m} R_{[q]_m}`.
    pub fn rotational_shift(&self, p: &PhaseMatrix, m: usize) -> Result<ComplexMatrix> {
        Ok(self.shift_matrix(m)? * self.rotation_matrix(p, m, 1)?)
    }

    /// Adjoint of the rotational shift built from its coefficient action:
    /// the coefficient at `k` becomes `a_{k+e_m} * conj([q]_m^k)`.
    pub fn rotational_shift_adjoint(&self, p: &PhaseMatrix, m: usize) -> Result<ComplexMatrix> {
        self.check_phases(p)?;
        self.check_var(m)?;
        let mut out = zeros(self.dim(), self.dim());
        let mut kk = vec![0; self.n];
        for (pos, k) in self.monomials.iter().enumerate() {
            if k[m] == self.deg_cap {
                continue;
            }
            kk.copy_from_slice(k);
            kk[m] += 1;
            let src = self.lookup[Self::code(self.deg_cap + 1, &kk)];
            let z = p.monomial_phase(m, k)?.conj();
            for t in 0..self.e_dim {
                out[(pos * self.e_dim + t, src * self.e_dim + t)] = z;
            }
        }
        Ok(out)
    }
}

impl TruncatedHardy {
    fn angle_phase(angles: &[f64], k: &[usize], power: f64) -> C64 {
        let a: f64 = angles.iter().zip(k).map(|(th, &ki)| th * ki as f64).sum();
        cis(0.5 * power * a)
    }

    fn check_rows(&self, x: &ComplexMatrix, angles: &[f64]) -> Result<()> {
        if x.nrows() != self.dim() {
            return Err(DilationError::DimensionMismatch(format!(
                "vector block with {} rows on a space of dimension {}",
                x.nrows(),
                self.dim()
            )));
        }
        if angles.len() != self.n {
            return Err(DilationError::DimensionMismatch("rotation angles".into()));
        }
        Ok(())
    }

    /// Apply `M_{z_m} R` (or its adjoint) to the columns of `x` without forming
    /// the operator; `R` rotates `z^k` by `exp(i/2 sum_v angles[v] k_v)`.
    pub fn shift_apply(
        &self,
        angles: &[f64],
        m: usize,
        x: &ComplexMatrix,
        adjoint: bool,
    ) -> Result<ComplexMatrix> {
        self.check_var(m)?;
        self.check_rows(x, angles)?;
        let e = self.e_dim;
        let mut out = zeros(x.nrows(), x.ncols());
        let mut kk = vec![0; self.n];
        for (p, k) in self.monomials.iter().enumerate() {
            if k[m] == self.deg_cap {
                continue;
            }
            kk.copy_from_slice(k);
            kk[m] += 1;
            let q = self.lookup[Self::code(self.deg_cap + 1, &kk)];
            let z = Self::angle_phase(angles, k, 1.0);
            let (src, dst, z) = if adjoint { (q, p, z.conj()) } else { (p, q, z) };
            for t in 0..e {
                for col in 0..x.ncols() {
                    out[(dst * e + t, col)] = x[(src * e + t, col)] * z;
                }
            }
        }
        Ok(out)
    }

    /// Apply `(I ⊗ U) R^power` (or its adjoint) to the columns of `x`.
    pub fn twisted_apply(
        &self,
        u: &ComplexMatrix,
        angles: &[f64],
        power: u32,
        x: &ComplexMatrix,
        adjoint: bool,
    ) -> Result<ComplexMatrix> {
        self.check_rows(x, angles)?;
        let e = self.e_dim;
        if u.shape() != (e, e) {
            return Err(DilationError::DimensionMismatch(
                "coefficient operator".into(),
            ));
        }
        let u_eff = if adjoint { u.adjoint() } else { u.clone() };
        let mut out = zeros(x.nrows(), x.ncols());
        for (p, k) in self.monomials.iter().enumerate() {
            let z = Self::angle_phase(angles, k, power as f64);
            let z = if adjoint { z.conj() } else { z };
            let block = x.rows(p * e, e);
            let mapped = &u_eff * block * z;
            out.rows_mut(p * e, e).copy_from(&mapped);
        }
        Ok(out)
    }
}

/// Columns `idx` of `m`.
pub fn select_columns(m: &ComplexMatrix, idx: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

/// Rows `idx` of `m`.
pub fn select_rows(m: &ComplexMatrix, idx: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Residuals of the rotational-shift tuple on the truncated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationalReport {
    pub basis: String,
    pub n: usize,
    pub e_dim: usize,
    pub deg_cap: usize,
    pub interior_dim: usize,
    /// `max ||(V_i V_j - q(i,j) V_j V_i) x||` over interior `x`.
    pub q_commutation: f64,
    /// `max |V_m* - direct adjoint|` entrywise.
    pub adjoint_formula: f64,
    /// `max ||(V_m* V_m - I) x||` over interior `x`.
    pub isometry: f64,
    /// `max ||(V_i V_j* - conj(q(i,j)) V_j* V_i) x||` over interior `x`, `i != j`.
    pub doubly_q: f64,
    /// `max ||R*R - I||`.
    pub rotation_unitarity: f64,
    /// `max ||(V_m*)^(d+1)||`; zero on the truncated model.
    pub adjoint_nilpotency: f64,
    /// `||(V_m*)^p||_F` for `p = 1..=d+1`, maximized over `m`.
    pub adjoint_power_norms: Vec<f64>,
    pub threshold: f64,
    pub passed: bool,
}

/// Check the q-relations, adjoint formula, isometry, doubly-q relations and
/// nilpotency of the rotational-shift tuple on the interior subspace.
pub fn verify_rotational_properties(
    sp: &TruncatedHardy,
    p: &PhaseMatrix,
    tol: f64,
) -> Result<RotationalReport> {
    sp.check_phases(p)?;
    let n = sp.n();
    let interior = sp.interior();
    let vs: Vec<ComplexMatrix> = (0..n)
        .map(|m| sp.rotational_shift(p, m))
        .collect::<Result<_>>()?;
    let vs_adj: Vec<ComplexMatrix> = vs.iter().map(|v| v.adjoint()).collect();
    let vs_int: Vec<ComplexMatrix> = vs.iter().map(|v| select_columns(v, &interior)).collect();
    let adj_int: Vec<ComplexMatrix> = vs_adj
        .iter()
        .map(|v| select_columns(v, &interior))
        .collect();

    let mut q_comm: f64 = 0.0;
    let mut doubly: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let q = p.q_value(i, j)?;
            if i < j {
                let r = &vs[i] * &vs_int[j] - (&vs[j] * &vs_int[i]) * q;
                q_comm = q_comm.max(max_col_norm(&r));
            }
            if i != j {
                let r = &vs[i] * &adj_int[j] - (&vs_adj[j] * &vs_int[i]) * q.conj();
                doubly = doubly.max(max_col_norm(&r));
            }
        }
    }

    let mut adjoint_formula: f64 = 0.0;
    let mut isometry: f64 = 0.0;
    let mut rotation_unitarity: f64 = 0.0;
    let mut nilpotency: f64 = 0.0;
    let mut power_norms = vec![0.0_f64; sp.deg_cap() + 1];
    let id_int = select_columns(&identity(sp.dim()), &interior);
    for m in 0..n {
        let direct = sp.rotational_shift_adjoint(p, m)?;
        let diff = (&vs_adj[m] - direct)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        adjoint_formula = adjoint_formula.max(diff);
        isometry = isometry.max(max_col_norm(&(&vs_adj[m] * &vs_int[m] - &id_int)));
        let r = sp.rotation_matrix(p, m, 1)?;
        rotation_unitarity = rotation_unitarity.max(fro(&(r.adjoint() * &r - identity(sp.dim()))));
        let mut pw = identity(sp.dim());
        for slot in power_norms.iter_mut() {
            pw = &vs_adj[m] * pw;
            *slot = slot.max(fro(&pw));
        }
        nilpotency = nilpotency.max(pw.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    if n == 0 {
        power_norms.clear();
    }

    let passed = q_comm <= tol
        && adjoint_formula <= tol
        && isometry <= tol
        && doubly <= tol
        && rotation_unitarity <= tol
        && nilpotency == 0.0;
    Ok(RotationalReport {
        basis: BASIS_ORDER.to_string(),
        n,
        e_dim: sp.e_dim(),
        deg_cap: sp.deg_cap(),
        interior_dim: interior.len(),
        q_commutation: q_comm,
        adjoint_formula,
        isometry,
        doubly_q: doubly,
        rotation_unitarity,
        adjoint_nilpotency: nilpotency,
        adjoint_power_norms: power_norms,
        threshold: tol,
        passed,
    })
}

/// Largest Euclidean column norm.
pub fn max_col_norm(m: &ComplexMatrix) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Convenience wrapper using the configured verification tolerance.
pub fn verify_rotational_default(
    sp: &TruncatedHardy,
    p: &PhaseMatrix,
    cfg: &ToleranceConfig,
) -> Result<RotationalReport> {
    verify_rotational_properties(sp, p, cfg.verify_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_rows};
    use std::f64::consts::PI;

    #[test]
    fn basis_order_and_lookup() {
        let sp = TruncatedHardy::new(2, 2, 2).unwrap();
        assert_eq!(sp.dim(), 18);
        assert_eq!(sp.monomials()[0], vec![0, 0]);
        assert_eq!(sp.monomials()[1], vec![0, 1]);
        assert_eq!(sp.monomials()[2], vec![1, 0]);
        assert_eq!(sp.monomials()[8], vec![2, 2]);
        for idx in 0..sp.dim() {
            let (k, t) = sp.multi_index(idx).unwrap();
            assert_eq!(sp.index(k, t), Some(idx));
        }
        assert_eq!(sp.index(&[3, 0], 0), None);
        let empty = TruncatedHardy::new(0, 3, 4).unwrap();
        assert_eq!(empty.dim(), 3);
        assert_eq!(empty.interior().len(), 3);
    }

    #[test]
    fn single_variable_shift() {
        let sp = TruncatedHardy::new(1, 1, 1).unwrap();
        let m = sp.shift_matrix(0).unwrap();
        assert_eq!(m, from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]));
    }

    #[test]
    fn shifts_commute_and_are_isometric_below_cap() {
        let sp = TruncatedHardy::new(2, 1, 4).unwrap();
        let (a, b) = (sp.shift_matrix(0).unwrap(), sp.shift_matrix(1).unwrap());
        let int = sp.interior();
        assert_eq!(
            max_col_norm(&select_columns(&(&a * &b - &b * &a), &int)),
            0.0
        );
        let below = sp.indices_where(|k| k[0] < 4);
        let iso = a.adjoint() * &a - identity(sp.dim());
        assert_eq!(max_col_norm(&select_columns(&iso, &below)), 0.0);
    }

    #[test]
    fn rotation_examples() {
        let sp = TruncatedHardy::new(2, 1, 3).unwrap();
        assert_eq!(
            sp.rotation_matrix(&PhaseMatrix::zeros(2), 0, 1).unwrap(),
            identity(sp.dim())
        );
        let p = PhaseMatrix::uniform(2, PI);
        let idx = sp.index(&[0, 1], 0).unwrap();
        let r1 = sp.rotation_matrix(&p, 0, 1).unwrap();
        let r2 = sp.rotation_matrix(&p, 0, 2).unwrap();
        assert!((r1[(idx, idx)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((r2[(idx, idx)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(
            sp.rotational_shift(&PhaseMatrix::zeros(2), 1).unwrap(),
            sp.shift_matrix(1).unwrap()
        );
    }

    #[test]
    fn anti_commuting_rotational_shifts() {
        let sp = TruncatedHardy::new(2, 1, 4).unwrap();
        let p = PhaseMatrix::uniform(2, PI);
        let v1 = sp.rotational_shift(&p, 0).unwrap();
        let v2 = sp.rotational_shift(&p, 1).unwrap();
        let s = select_columns(&(&v1 * &v2 + &v2 * &v1), &sp.interior());
        assert!(max_col_norm(&s) < 1e-15);
    }

    #[test]
    fn property_battery() {
        let sp = TruncatedHardy::new(2, 2, 4).unwrap();
        let rep =
            verify_rotational_properties(&sp, &PhaseMatrix::uniform(2, PI / 3.0), 1e-12).unwrap();
        assert!(rep.passed, "{rep:?}");
        let sp = TruncatedHardy::new(1, 1, 5).unwrap();
        let rep = verify_rotational_properties(&sp, &PhaseMatrix::zeros(1), 1e-12).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.adjoint_power_norms.len(), 6);
        assert!(rep.adjoint_power_norms[4] > 0.0);
    }
}
