//! Seeded constructions of valid instances.

use std::f64::consts::PI;

use nalgebra::Schur;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::hardy::{select_columns, select_rows, TruncatedHardy};
use crate::linalg::{
    c, cis, diag, identity, op_norm, polar_unitary, sorted_svd, sylvester_nullspace, zeros,
    ComplexMatrix, RelationVariant, ToleranceConfig, C64,
};
use crate::phase::{verify_q_pair, verify_q_tuple, PhaseMatrix, QPair, QTuple};

/// Residual every generated instance must meet before it is returned.
pub const GENERATION_TOL: f64 = 1e-12;
pub const SYLVESTER_RETRIES: usize = 16;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    gaussian_matrix(rng, n, 1)
}

/// Gaussian matrix rescaled to operator norm `scale`.
pub fn random_contraction(rng: &mut impl Rng, d: usize, scale: f64) -> ComplexMatrix {
    let g = gaussian_matrix(rng, d, d);
    let n = op_norm(&g);
    g * c(scale / n, 0.0)
}

/// Unitary factor of a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> Result<ComplexMatrix> {
    polar_unitary(&gaussian_matrix(rng, d, d))
}

/// Random phase matrix with entries uniform in `(-pi, pi]`.
pub fn random_phases(rng: &mut impl Rng, n: usize) -> PhaseMatrix {
    let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(-PI..PI)).collect();
    PhaseMatrix::from_upper(n, |i, j| vals[i * n + j])
}

pub fn clock(d: usize) -> ComplexMatrix {
    let w = 2.0 * PI / d as f64;
    diag(&(0..d).map(|k| cis(w * k as f64)).collect::<Vec<_>>())
}

/// Cyclic shift `e_k -> e_{k+1}`.
pub fn cyclic_shift(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Weyl unitary `C^a S^b` on `C^m`.
pub fn weyl(m: usize, a: usize, b: usize) -> ComplexMatrix {
    let cl = clock(m);
    let sh = cyclic_shift(m);
    let mut out = identity(m);
    for _ in 0..a % m {
        out = &out * &cl;
    }
    for _ in 0..b % m {
        out = &out * &sh;
    }
    out
}

/// Phases of the Weyl tuple `(C^{a_i} S^{b_i})_i`: `theta(i,j) = 2 pi (a_i b_j - a_j b_i) / m`.
pub fn weyl_phases(m: usize, ab: &[(usize, usize)]) -> PhaseMatrix {
    PhaseMatrix::from_upper(ab.len(), |i, j| {
        let (ai, bi) = (ab[i].0 as f64, ab[i].1 as f64);
        let (aj, bj) = (ab[j].0 as f64, ab[j].1 as f64);
        2.0 * PI * (ai * bj - aj * bi) / m as f64
    })
}

fn checked_tuple(t: QTuple) -> Result<QTuple> {
    let cfg = ToleranceConfig::default().with_verify_tol(GENERATION_TOL);
    let rep = verify_q_tuple(&t, &cfg);
    if !rep.passed {
        return Err(DilationError::GenerationFailed(format!(
            "generated tuple fails its relations (residual {:.3e}, norm excess {:.3e})",
            rep.max_relation_residual, rep.max_norm_excess
        )));
    }
    Ok(t)
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(DilationError::InvalidConfig(format!(
            "scale must lie in (0, 1], got {scale}"
        )));
    }
    Ok(())
}

/// `T1 = r * clock`, `T2 = r * shift` on `C^d`, `theta(1,2) = 2 pi / d`.
pub fn gen_clock_shift(d: usize, scale: f64) -> Result<QTuple> {
    check_scale(scale)?;
    if d < 2 {
        return Err(DilationError::InvalidConfig(
            "clock/shift needs d >= 2".into(),
        ));
    }
    let r = c(scale, 0.0);
    checked_tuple(QTuple::new(
        vec![clock(d) * r, cyclic_shift(d) * r],
        PhaseMatrix::uniform(2, 2.0 * PI / d as f64),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `max_i k_i <= d`
    #[default]
    Box,
    /// `sum_i k_i <= d`
    TotalDegree,
}

/// `r * M_{z_m} R_{[q]_m}` compressed to a co-invariant space of polynomials.
pub fn gen_compressed_rotational(
    n: usize,
    e_dim: usize,
    deg: usize,
    scale: f64,
    p: &PhaseMatrix,
    truncation: Truncation,
) -> Result<QTuple> {
    check_scale(scale)?;
    if n == 0 || e_dim == 0 {
        return Err(DilationError::InvalidConfig(
            "need n >= 1 and e_dim >= 1".into(),
        ));
    }
    if p.n() != n {
        return Err(DilationError::DimensionMismatch(
            "phase matrix size differs from n".into(),
        ));
    }
    let sp = TruncatedHardy::new(n, e_dim, deg)?;
    let keep = match truncation {
        Truncation::Box => (0..sp.dim()).collect::<Vec<_>>(),
        Truncation::TotalDegree => sp.indices_where(|k| k.iter().sum::<usize>() <= deg),
    };
    let mut ops = Vec::with_capacity(n);
    for m in 0..n {
        let v = sp.rotational_shift(p, m)? * c(scale, 0.0);
        ops.push(select_rows(&select_columns(&v, &keep), &keep));
    }
    checked_tuple(QTuple::new(ops, p.clone())?)
}

/// Strictly contractive, doubly q-commuting, non-nilpotent tuple:
/// `T_i = s_i V* W_i V` with Weyl unitaries `W_i` on `C^m`, a random unitary `V`
/// and radii `s_i` drawn from `[scale/2, scale]`.
pub fn gen_scaled_random(n: usize, m: usize, scale: f64, seed: u64) -> Result<QTuple> {
    check_scale(scale)?;
    if n == 0 || m == 0 {
        return Err(DilationError::InvalidConfig(
            "need n >= 1 and m >= 1".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let ab: Vec<(usize, usize)> = (0..n)
        .map(|_| (rng.random_range(0..m), rng.random_range(0..m)))
        .collect();
    let v = random_unitary(&mut rng, m)?;
    let ops = ab
        .iter()
        .map(|&(a, b)| {
            let s = rng.random_range(0.5 * scale..=scale);
            v.adjoint() * weyl(m, a, b) * &v * c(s, 0.0)
        })
        .collect();
    checked_tuple(QTuple::new(ops, weyl_phases(m, &ab))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    /// `T_i = N_i ⊗ W_i`
    #[default]
    Tensor,
    /// `T_i = N_i ⊕ W_i`
    DirectSum,
}

/// Brehmer-class tuple mixing a pure part with Weyl unitaries.
///
/// With `Tensor`, `N_i` is a compressed rotational shift for `i` in `pure` and
/// the identity otherwise. With `DirectSum`, every `N_i` is a compressed
/// rotational shift carrying the Weyl phases.
#[allow(clippy::too_many_arguments)]
pub fn gen_mixed_brehmer(
    n: usize,
    pure: &[usize],
    deg: usize,
    m: usize,
    scale: f64,
    combine: Combine,
    seed: u64,
) -> Result<QTuple> {
    check_scale(scale)?;
    if n == 0 || m == 0 {
        return Err(DilationError::InvalidConfig(
            "need n >= 1 and m >= 1".into(),
        ));
    }
    if pure.iter().any(|&i| i >= n) || pure.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DilationError::InvalidConfig(
            "pure indices must be increasing and < n".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let ab: Vec<(usize, usize)> = (0..n)
        .map(|_| (rng.random_range(0..m), rng.random_range(0..m)))
        .collect();
    let weyl_p = weyl_phases(m, &ab);
    let v = random_unitary(&mut rng, m)?;
    let ws: Vec<ComplexMatrix> = ab
        .iter()
        .map(|&(a, b)| v.adjoint() * weyl(m, a, b) * &v)
        .collect();

    let (ops, phases) = match combine {
        Combine::Tensor => {
            let rot_p = random_phases(&mut rng, pure.len());
            let nt = if pure.is_empty() {
                None
            } else {
                Some(gen_compressed_rotational(
                    pure.len(),
                    1,
                    deg,
                    scale,
                    &rot_p,
                    Truncation::Box,
                )?)
            };
            let nd = nt.as_ref().map_or(1, |t| t.dim());
            let phases = PhaseMatrix::from_upper(n, |i, j| {
                let extra = match (
                    pure.iter().position(|&x| x == i),
                    pure.iter().position(|&x| x == j),
                ) {
                    (Some(a), Some(b)) => rot_p.theta(a, b),
                    _ => 0.0,
                };
                weyl_p.theta(i, j) + extra
            });
            let ops = (0..n)
                .map(|i| {
                    let ni = match (pure.iter().position(|&x| x == i), &nt) {
                        (Some(a), Some(t)) => t.op(a).clone(),
                        _ => identity(nd),
                    };
                    ni.kronecker(&ws[i])
                })
                .collect();
            (ops, phases)
        }
        Combine::DirectSum => {
            let nt = gen_compressed_rotational(n, 1, deg, scale, &weyl_p, Truncation::Box)?;
            let (a, b) = (nt.dim(), m);
            let ops = (0..n)
                .map(|i| {
                    let mut t = zeros(a + b, a + b);
                    t.view_mut((0, 0), (a, a)).copy_from(nt.op(i));
                    t.view_mut((a, a), (b, b)).copy_from(&ws[i]);
                    t
                })
                .collect();
            (ops, weyl_p)
        }
    };
    checked_tuple(QTuple::new(ops, phases)?)
}

/// How the twist of a generated pair is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TwistSpec {
    /// `Q = exp(i angle) I`
    Scalar { angle: f64 },
    /// Explicit unitary.
    Matrix {
        #[serde(with = "crate::io::matrix")]
        q: ComplexMatrix,
    },
    /// Haar-like random unitary drawn from the seed.
    Random,
}

fn planted_t2(
    rng: &mut ChaCha8Rng,
    h: usize,
    q: &ComplexMatrix,
    variant: RelationVariant,
) -> Result<ComplexMatrix> {
    let lambda = cis(rng.random_range(-PI..PI)) * rng.random_range(0.3..0.9);
    // Left eigenvector a (a* T2 = lambda a*) and the second constraint T2 u = w.
    let (a, u, w) = match variant {
        RelationVariant::Left | RelationVariant::Middle => {
            let a = gaussian_vector(rng, h);
            let mut b = gaussian_vector(rng, h);
            // Consistency of the two constraints needs b orthogonal to (Q - I) a
            // (left) or (Q* - I) a (middle).
            let g = match variant {
                RelationVariant::Left => q * &a - &a,
                _ => q.adjoint() * &a - &a,
            };
            let gg = g.norm_squared();
            if gg > 1e-24 {
                let coef = (g.adjoint() * &b)[(0, 0)] / gg;
                b -= &g * coef;
            }
            if variant == RelationVariant::Left {
                let w = q.adjoint() * &b * lambda;
                (a, b, w)
            } else {
                let u = q * &b;
                let w = &b * lambda;
                (a, u, w)
            }
        }
        RelationVariant::Right => {
            let schur = Schur::try_new(q.clone(), f64::EPSILON, 10_000)
                .ok_or_else(|| DilationError::Decomposition("Schur form of Q".into()))?;
            let (u_q, t_q) = schur.unpack();
            let k = rng.random_range(0..h);
            let a = ComplexMatrix::from_column_slice(h, 1, u_q.column(k).as_slice());
            let beta = t_q[(k, k)];
            let mut b = gaussian_vector(rng, h);
            if (beta - c(1.0, 0.0)).norm() > 1e-12 {
                let coef = (a.adjoint() * &b)[(0, 0)] / a.norm_squared();
                b -= &a * coef;
            }
            let w = &b * (lambda / beta);
            (a, b, w)
        }
    };
    // Minimal-norm correction of a random M so that a* T2 = lambda a* and T2 u = w.
    let m0 = gaussian_matrix(rng, h, h);
    let mut cons = zeros(2 * h, h * h);
    let mut rhs = zeros(2 * h, 1);
    for j in 0..h {
        for i in 0..h {
            cons[(j, i + j * h)] = a[(i, 0)].conj();
            cons[(h + i, i + j * h)] = u[(j, 0)];
        }
        rhs[(j, 0)] = lambda * a[(j, 0)].conj();
        rhs[(h + j, 0)] = w[(j, 0)];
    }
    let x0 = ComplexMatrix::from_column_slice(h * h, 1, m0.as_slice());
    let resid = rhs - &cons * &x0;
    let svd = sorted_svd(&cons)?;
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let mut delta = zeros(h * h, 1);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-12 * smax.max(1.0) {
            let coef = (svd.u.column(k).adjoint() * &resid)[(0, 0)] / s;
            delta += svd.v.column(k) * coef;
        }
    }
    let x = x0 + delta;
    Ok(ComplexMatrix::from_column_slice(h, h, x.as_slice()))
}

/// Q-commuting pair with `T2` carrying a planted eigen-structure so that the
/// Sylvester nullspace for the variant is nontrivial, and `T1` a random
/// element of that nullspace. Both have operator norm `scale`.
pub fn gen_sylvester_qpair(
    h: usize,
    variant: RelationVariant,
    twist: &TwistSpec,
    seed: u64,
    scale: f64,
) -> Result<QPair> {
    check_scale(scale)?;
    if h == 0 {
        return Err(DilationError::InvalidConfig("h_dim must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let q = match twist {
        TwistSpec::Scalar { angle } => identity(h) * cis(*angle),
        TwistSpec::Matrix { q } => {
            if q.shape() != (h, h) {
                return Err(DilationError::DimensionMismatch(
                    "twist has wrong size".into(),
                ));
            }
            q.clone()
        }
        TwistSpec::Random => random_unitary(&mut rng, h)?,
    };
    let cfg = ToleranceConfig::default();
    let gen_cfg = cfg.with_verify_tol(GENERATION_TOL);
    for _ in 0..SYLVESTER_RETRIES {
        let t2 = planted_t2(&mut rng, h, &q, variant)?;
        let n2 = op_norm(&t2);
        if !(n2 > 1e-8) {
            continue;
        }
        let t2 = t2 * c(scale / n2, 0.0);
        let basis = sylvester_nullspace(&t2, &q, variant, &cfg)?;
        if basis.is_empty() {
            continue;
        }
        let mut t1 = zeros(h, h);
        for b in &basis {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            t1 += b * c(re, im);
        }
        let n1 = op_norm(&t1);
        if !(n1 > 1e-8) {
            continue;
        }
        let t1 = t1 * c(scale / n1, 0.0);
        let pair = QPair::new(t1, t2, q.clone(), variant)?;
        if verify_q_pair(&pair, &gen_cfg).passed {
            return Ok(pair);
        }
    }
    Err(DilationError::GenerationFailed(format!(
        "no nontrivial {} pair on C^{h} after {SYLVESTER_RETRIES} attempts",
        variant.name()
    )))
}

/// Declarative description of an instance, as accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    ClockShift {
        d: usize,
        scale: f64,
    },
    CompressedRotational {
        n: usize,
        #[serde(default = "one")]
        e_dim: usize,
        deg: usize,
        scale: f64,
        /// Random phases from the seed when absent.
        #[serde(default)]
        phases: Option<PhaseMatrix>,
        #[serde(default)]
        truncation: Truncation,
    },
    SylvesterQpair {
        h_dim: usize,
        variant: RelationVariant,
        twist: TwistSpec,
        scale: f64,
    },
    ScaledRandom {
        n: usize,
        m: usize,
        scale: f64,
    },
    MixedBrehmer {
        n: usize,
        pure: Vec<usize>,
        deg: usize,
        m: usize,
        scale: f64,
        #[serde(default)]
        combine: Combine,
    },
}

fn one() -> usize {
    1
}

/// A generated or loaded instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Instance {
    Tuple(QTuple),
    Pair(QPair),
}

impl Instance {
    pub fn revalidate(self) -> Result<Self> {
        Ok(match self {
            Instance::Tuple(t) => Instance::Tuple(t.revalidate()?),
            Instance::Pair(p) => Instance::Pair(p.revalidate()?),
        })
    }
}

pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    Ok(match spec {
        GeneratorSpec::ClockShift { d, scale } => Instance::Tuple(gen_clock_shift(*d, *scale)?),
        GeneratorSpec::CompressedRotational {
            n,
            e_dim,
            deg,
            scale,
            phases,
            truncation,
        } => {
            let p = match phases {
                Some(p) => p.clone(),
                None => random_phases(&mut rng_from_seed(seed), *n),
            };
            Instance::Tuple(gen_compressed_rotational(
                *n,
                *e_dim,
                *deg,
                *scale,
                &p,
                *truncation,
            )?)
        }
        GeneratorSpec::SylvesterQpair {
            h_dim,
            variant,
            twist,
            scale,
        } => Instance::Pair(gen_sylvester_qpair(*h_dim, *variant, twist, seed, *scale)?),
        GeneratorSpec::ScaledRandom { n, m, scale } => {
            Instance::Tuple(gen_scaled_random(*n, *m, *scale, seed)?)
        }
        GeneratorSpec::MixedBrehmer {
            n,
            pure,
            deg,
            m,
            scale,
            combine,
        } => Instance::Tuple(gen_mixed_brehmer(
            *n, pure, *deg, *m, *scale, *combine, seed,
        )?),
    })
}

/// Unit-norm vector `h` drawn from the seed (for oracle checks).
pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let v = gaussian_vector(rng, n);
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro;
    use crate::phase::verify_doubly_q;

    #[test]
    fn clock_shift_examples() {
        let t = gen_clock_shift(2, 1.0).unwrap();
        let anti = t.op(0) * t.op(1) + t.op(1) * t.op(0);
        assert!(fro(&anti) < 1e-15);
        assert!(gen_clock_shift(2, 0.5).is_ok());
        let t = gen_clock_shift(4, 0.9).unwrap();
        assert!((t.phases().q_value(0, 1).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn weyl_relations() {
        let m = 5;
        let ab = [(1, 2), (3, 0), (4, 4)];
        let ws: Vec<_> = ab.iter().map(|&(a, b)| weyl(m, a, b)).collect();
        let t = QTuple::new(ws, weyl_phases(m, &ab)).unwrap();
        let cfg = ToleranceConfig::default().with_verify_tol(1e-12);
        assert!(verify_doubly_q(&t, &cfg).passed);
    }

    #[test]
    fn compressed_rotational_examples() {
        let t = gen_compressed_rotational(1, 1, 3, 1.0, &PhaseMatrix::zeros(1), Truncation::Box)
            .unwrap();
        let mut pw = identity(4);
        for _ in 0..4 {
            pw = t.op(0) * pw;
        }
        assert_eq!(fro(&pw), 0.0);
        let p = PhaseMatrix::uniform(2, PI);
        let t = gen_compressed_rotational(2, 1, 2, 1.0, &p, Truncation::Box).unwrap();
        assert!(verify_doubly_q(&t, &ToleranceConfig::default()).passed);
        let t = gen_compressed_rotational(2, 1, 3, 0.9, &p, Truncation::TotalDegree).unwrap();
        assert_eq!(t.dim(), 10);
        assert!(!verify_doubly_q(&t, &ToleranceConfig::default()).passed);
    }

    #[test]
    fn sylvester_pairs_are_nontrivial_and_reproducible() {
        let twists = [
            TwistSpec::Scalar { angle: 0.0 },
            TwistSpec::Scalar { angle: 1.1 },
            TwistSpec::Matrix {
                q: diag(&[c(1.0, 0.0), c(-1.0, 0.0)]),
            },
            TwistSpec::Random,
        ];
        for variant in RelationVariant::ALL {
            for tw in &twists {
                for seed in 0..4 {
                    let pair = gen_sylvester_qpair(2, variant, tw, seed, 0.9).unwrap();
                    assert!((op_norm(&pair.t1) - 0.9).abs() < 1e-12);
                    assert!((op_norm(&pair.t2) - 0.9).abs() < 1e-12);
                    let again = gen_sylvester_qpair(2, variant, tw, seed, 0.9).unwrap();
                    assert_eq!(pair.t1, again.t1);
                    assert_eq!(pair.t2, again.t2);
                }
            }
        }
        let pair =
            gen_sylvester_qpair(5, RelationVariant::Middle, &TwistSpec::Random, 7, 1.0).unwrap();
        assert_eq!(pair.dim(), 5);
    }

    #[test]
    fn mixed_and_random_tuples() {
        for combine in [Combine::Tensor, Combine::DirectSum] {
            let t = gen_mixed_brehmer(3, &[0, 2], 1, 2, 0.8, combine, 3).unwrap();
            assert_eq!(t.n(), 3);
        }
        let t = gen_scaled_random(3, 3, 0.9, 1).unwrap();
        assert!(verify_doubly_q(&t, &ToleranceConfig::default()).passed);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = GeneratorSpec::SylvesterQpair {
            h_dim: 3,
            variant: RelationVariant::Right,
            twist: TwistSpec::Random,
            scale: 0.8,
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"kind\":\"sylvester_qpair\""));
        let back: GeneratorSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let inst = generate(&spec, 11).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let again: Instance = serde_json::from_str(&text).unwrap();
        match (inst, again) {
            (Instance::Pair(a), Instance::Pair(b)) => assert_eq!(a.t1, b.t1),
            _ => panic!("expected pairs"),
        }
    }
}
