//! Isometric dilation of a Q-commuting pair on a truncated space
//! `K_N = H ⊕ G^{⊕N}` with `G = H^4`.
//!
//! Slot 0 holds `H`; block `j` of `G` occupies the H-slots `4j+1 ..= 4j+4`.
//! `W`-operators move slot `k` to slot `k+2`, so each application of `V1` or
//! `V2` advances the support of a vector by at most one block. Products are
//! therefore exact on vectors supported in slot 0 and blocks `0..=N-3`.

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::linalg::{
    fro, hermitian_sqrt, identity, unitarity_defect, unitary_completion, zeros, Completion,
    ComplexMatrix, ToleranceConfig,
};
use crate::phase::{verify_q_pair, QPair, RelationVariant};
use crate::report::Check;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedPairSpace {
    pub h_dim: usize,
    pub n_blocks: usize,
}

impl TruncatedPairSpace {
    pub fn new(h_dim: usize, n_blocks: usize) -> Result<Self> {
        if h_dim == 0 || n_blocks < 2 {
            return Err(DilationError::InvalidConfig(format!(
                "pair space needs h_dim >= 1 and N >= 2 (got {h_dim}, {n_blocks})"
            )));
        }
        Ok(TruncatedPairSpace { h_dim, n_blocks })
    }

    pub fn num_slots(&self) -> usize {
        1 + 4 * self.n_blocks
    }

    pub fn dim(&self) -> usize {
        self.h_dim * self.num_slots()
    }

    /// `(block, offset)` of H-slot `s >= 1`.
    pub fn block_of(&self, slot: usize) -> Option<(usize, usize)> {
        (slot >= 1 && slot < self.num_slots()).then(|| ((slot - 1) / 4, (slot - 1) % 4))
    }

    pub fn slot_start(&self, slot: usize) -> usize {
        slot * self.h_dim
    }

    pub fn block_start(&self, j: usize) -> usize {
        self.slot_start(4 * j + 1)
    }

    /// Last H-slot of the interior: slot 0 and blocks `0..=N-3`.
    pub fn interior_last_slot(&self) -> usize {
        4 * (self.n_blocks - 2)
    }

    pub fn interior_dim(&self) -> usize {
        self.h_dim * (self.interior_last_slot() + 1)
    }

    /// Embedding of `H` into slot 0 (`dim x h`).
    pub fn embed_h(&self) -> ComplexMatrix {
        let mut e = zeros(self.dim(), self.h_dim);
        e.view_mut((0, 0), (self.h_dim, self.h_dim))
            .copy_from(&identity(self.h_dim));
        e
    }

    /// Embedding of the interior (`dim x interior_dim`).
    pub fn embed_interior(&self) -> ComplexMatrix {
        let k = self.interior_dim();
        let mut e = zeros(self.dim(), k);
        e.view_mut((0, 0), (k, k)).copy_from(&identity(k));
        e
    }

    fn check_h(&self, m: &ComplexMatrix) -> Result<()> {
        if m.nrows() != self.h_dim || m.ncols() != self.h_dim {
            return Err(DilationError::DimensionMismatch(format!(
                "expected {}x{} operator, got {:?}",
                self.h_dim,
                self.h_dim,
                m.shape()
            )));
        }
        Ok(())
    }
}

/// `D_T = (I - T*T)^{1/2}`.
pub fn defect(t: &ComplexMatrix, cfg: &ToleranceConfig) -> Result<ComplexMatrix> {
    hermitian_sqrt(&(identity(t.ncols()) - t.adjoint() * t), cfg)
}

/// `W(h0, h1, h2, ...) = (T h0, D_T h0, 0, Q h1, Q^2 h2, ...)` with `twist`,
/// or `(T h0, D_T h0, 0, h1, h2, ...)` without.
pub fn build_w(
    t: &ComplexMatrix,
    q: &ComplexMatrix,
    twist: bool,
    space: &TruncatedPairSpace,
    cfg: &ToleranceConfig,
) -> Result<ComplexMatrix> {
    space.check_h(t)?;
    space.check_h(q)?;
    let h = space.h_dim;
    let mut w = zeros(space.dim(), space.dim());
    w.view_mut((0, 0), (h, h)).copy_from(t);
    w.view_mut((h, 0), (h, h)).copy_from(&defect(t, cfg)?);
    let mut qk = identity(h);
    for k in 1..space.num_slots() {
        if twist {
            qk = q * &qk;
        }
        let target = k + 2;
        if target >= space.num_slots() {
            break;
        }
        w.view_mut((space.slot_start(target), space.slot_start(k)), (h, h))
            .copy_from(&qk);
    }
    Ok(w)
}

fn block_diag4(blocks: [&ComplexMatrix; 4]) -> ComplexMatrix {
    let h = blocks[0].nrows();
    let mut out = zeros(4 * h, 4 * h);
    for (i, b) in blocks.iter().enumerate() {
        out.view_mut((i * h, i * h), (h, h)).copy_from(b);
    }
    out
}

/// `R = Q ⊕ Q ⊕ Q ⊕ Q` and `P = I ⊕ Q ⊕ Q^2 ⊕ Q^3` on `H^4`.
pub fn build_r_p(q: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let i = identity(q.nrows());
    let q2 = q * q;
    let q3 = &q2 * q;
    (block_diag4([q, q, q, q]), block_diag4([&i, q, &q2, &q3]))
}

/// Column maps `A, B : H -> H^4` whose Gram matrices agree exactly when the
/// pair satisfies its relation.
pub fn gap_columns(pair: &QPair, cfg: &ToleranceConfig) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let h = pair.dim();
    let (t1, t2, q) = (&pair.t1, &pair.t2, &pair.q);
    let d1 = defect(t1, cfg)?;
    let d2 = defect(t2, cfg)?;
    let stack = |top: ComplexMatrix, third: ComplexMatrix| {
        let mut m = zeros(4 * h, h);
        m.view_mut((0, 0), (h, h)).copy_from(&top);
        m.view_mut((2 * h, 0), (h, h)).copy_from(&third);
        m
    };
    let a = stack(&d1 * t2, q * &d2);
    let b = match pair.variant {
        RelationVariant::Left => stack(q * &d2 * t1, q * &d1),
        RelationVariant::Middle => stack(&d2 * q * t1, q * &d1),
        RelationVariant::Right => stack(&d2 * t1 * q, &d1 * q),
    };
    Ok((a, b))
}

/// Unitary `G` on `H^4` with `G A = B` for the variant's column maps.
pub fn build_gap_unitary(pair: &QPair, cfg: &ToleranceConfig) -> Result<Completion> {
    let (a, b) = gap_columns(pair, cfg)?;
    unitary_completion(&a, &b, cfg)
}

/// Block-diagonal correctors: `G1~` acts on block `j` as `G R^{-3j}`,
/// `G2~` as `G R^j P`; both are the identity on slot 0.
pub fn build_correctors(
    g: &ComplexMatrix,
    r: &ComplexMatrix,
    p: &ComplexMatrix,
    space: &TruncatedPairSpace,
) -> (ComplexMatrix, ComplexMatrix) {
    let h = space.h_dim;
    let b = 4 * h;
    let mut g1 = identity(space.dim());
    let mut g2 = identity(space.dim());
    let r_inv = r.adjoint();
    let r_inv3 = &r_inv * &r_inv * &r_inv;
    let mut r_neg = identity(b);
    let mut r_pos = identity(b);
    for j in 0..space.n_blocks {
        let s = space.block_start(j);
        g1.view_mut((s, s), (b, b)).copy_from(&(g * &r_neg));
        g2.view_mut((s, s), (b, b)).copy_from(&(g * &r_pos * p));
        r_neg = &r_neg * &r_inv3;
        r_pos = &r_pos * r;
    }
    (g1, g2)
}

/// Isometric dilation `(V1, V2)` with its twist `Q~`.
#[derive(Debug, Clone)]
pub struct PairDilation {
    pub space: TruncatedPairSpace,
    pub v1: ComplexMatrix,
    pub v2: ComplexMatrix,
    pub q_tilde: ComplexMatrix,
    pub gap: Completion,
    pub variant: RelationVariant,
    pub k_max: usize,
}

fn build_q_tilde(
    pair: &QPair,
    g: &ComplexMatrix,
    r: &ComplexMatrix,
    space: &TruncatedPairSpace,
) -> ComplexMatrix {
    let h = space.h_dim;
    let mut qt = zeros(space.dim(), space.dim());
    match pair.variant {
        RelationVariant::Left | RelationVariant::Right => {
            for s in 0..space.num_slots() {
                let o = space.slot_start(s);
                qt.view_mut((o, o), (h, h)).copy_from(&pair.q);
            }
        }
        RelationVariant::Middle => {
            qt.view_mut((0, 0), (h, h)).copy_from(&pair.q);
            let grg = g * r * g.adjoint();
            for j in 0..space.n_blocks {
                let o = space.block_start(j);
                qt.view_mut((o, o), (4 * h, 4 * h)).copy_from(&grg);
            }
        }
    }
    qt
}

/// Build the dilation on `N = k_max + 2` blocks.
pub fn assemble_dilation(
    pair: &QPair,
    k_max: usize,
    cfg: &ToleranceConfig,
) -> Result<PairDilation> {
    if k_max == 0 {
        return Err(DilationError::InvalidConfig("k_max must be >= 1".into()));
    }
    verify_q_pair(pair, cfg).into_result()?;
    let space = TruncatedPairSpace::new(pair.dim(), k_max + 2)?;
    let gap = build_gap_unitary(pair, cfg)?;
    let (r, p) = build_r_p(&pair.q);
    let (g1, g2) = build_correctors(&gap.unitary, &r, &p, &space);
    let w1 = build_w(&pair.t1, &pair.q, true, &space, cfg)?;
    let w2 = build_w(&pair.t2, &pair.q, false, &space, cfg)?;
    let v1 = g1 * w1;
    let v2 = w2 * g2.adjoint();
    let q_tilde = build_q_tilde(pair, &gap.unitary, &r, &space);
    Ok(PairDilation {
        space,
        v1,
        v2,
        q_tilde,
        gap,
        variant: pair.variant,
        k_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResidual {
    pub k1: usize,
    pub k2: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDiagnostics {
    pub unitarity_defect: f64,
    pub fit_residual: f64,
    pub gram_residual: f64,
    pub rank_a: usize,
    pub rank_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub variant: RelationVariant,
    pub k_max: usize,
    pub n_blocks: usize,
    pub interior_dim: usize,
    pub power_table: Vec<PowerResidual>,
    pub max_power_residual: f64,
    /// Relation of `(V1, V2, Q~)` in the pair's variant, on interior vectors.
    pub relation_residual: f64,
    pub isometry_defect_v1: f64,
    pub isometry_defect_v2: f64,
    /// `||V_i*|_H - T_i*||`.
    pub coextension_residual: f64,
    pub q_tilde_unitarity: f64,
    /// `||Q~|_H - Q||`.
    pub q_tilde_h_residual: f64,
    /// Q~ has no entries coupling slot 0 with the rest.
    pub h_reducing: bool,
    /// Q~ is exactly `⊕ Q` (left and right variants) or `Q ⊕ (⊕ G R G*)` (middle).
    pub block_structure_exact: bool,
    pub gap: GapDiagnostics,
    pub threshold: f64,
    pub passed: bool,
}

impl PairReport {
    pub fn checks(&self) -> Vec<Check> {
        let t = self.threshold;
        vec![
            Check::le("dilation_equality", self.max_power_residual, t),
            Check::le("relation_residual", self.relation_residual, t),
            Check::le("isometry_defect_v1", self.isometry_defect_v1, t),
            Check::le("isometry_defect_v2", self.isometry_defect_v2, t),
            Check::le("coextension_residual", self.coextension_residual, t),
            Check::le("q_tilde_unitarity", self.q_tilde_unitarity, t),
            Check::le("q_tilde_h_residual", self.q_tilde_h_residual, t),
            Check::flag("h_reducing", self.h_reducing),
            Check::flag("q_tilde_block_structure", self.block_structure_exact),
            Check::le("gap_unitarity", self.gap.unitarity_defect, t),
            Check::le("gap_fit", self.gap.fit_residual, t),
            Check::flag("gap_ranks_equal", self.gap.rank_a == self.gap.rank_b),
        ]
    }
}

fn block(m: &ComplexMatrix, r0: usize, c0: usize, h: usize) -> ComplexMatrix {
    m.view((r0, c0), (h, h)).into_owned()
}

/// Compare powers against the original pair and check the relation,
/// isometry and co-extension properties on the exact interior.
pub fn verify_pair_dilation(
    d: &PairDilation,
    pair: &QPair,
    k_max: usize,
    cfg: &ToleranceConfig,
) -> Result<PairReport> {
    let space = d.space;
    if k_max + 2 > space.n_blocks {
        return Err(DilationError::InvalidConfig(format!(
            "k_max {k_max} exceeds the exact range of {} blocks",
            space.n_blocks
        )));
    }
    if pair.dim() != space.h_dim {
        return Err(DilationError::DimensionMismatch(
            "pair and dilation differ".into(),
        ));
    }
    let h = space.h_dim;
    let embed = space.embed_h();

    // P_H V1^k1 V2^k2 |_H against T1^k1 T2^k2.
    let mut table = Vec::new();
    let mut max_power: f64 = 0.0;
    let mut v2_pow = embed.clone();
    let mut t2_pow = identity(h);
    for k2 in 0..=k_max {
        let mut x = v2_pow.clone();
        let mut t = t2_pow.clone();
        for k1 in 0..=(k_max - k2) {
            let res = fro(&(block(&x, 0, 0, h) - &t));
            max_power = max_power.max(res);
            table.push(PowerResidual {
                k1,
                k2,
                residual: res,
            });
            x = &d.v1 * x;
            t = &pair.t1 * t;
        }
        v2_pow = &d.v2 * v2_pow;
        t2_pow = &pair.t2 * t2_pow;
    }
    table.sort_by_key(|r| (r.k1 + r.k2, r.k1));

    let int = space.embed_interior();
    let v1x = &d.v1 * &int;
    let v2x = &d.v2 * &int;
    let rel = match d.variant {
        RelationVariant::Left => &d.v1 * &v2x - &d.q_tilde * (&d.v2 * &v1x),
        RelationVariant::Middle => &d.v1 * &v2x - &d.v2 * (&d.q_tilde * &v1x),
        RelationVariant::Right => &d.v1 * &v2x - &d.v2 * (&d.v1 * (&d.q_tilde * &int)),
    };
    let relation_residual = fro(&rel);
    let iso1 = fro(&(d.v1.adjoint() * &v1x - &int));
    let iso2 = fro(&(d.v2.adjoint() * &v2x - &int));

    let co1 = &d.v1.adjoint() * &embed - &embed * pair.t1.adjoint();
    let co2 = &d.v2.adjoint() * &embed - &embed * pair.t2.adjoint();
    let coextension_residual = fro(&co1).max(fro(&co2));

    let qt = &d.q_tilde;
    let q_tilde_h_residual = fro(&(block(qt, 0, 0, h) - &pair.q));
    let rest = space.dim() - h;
    let h_reducing = qt
        .view((0, h), (h, rest))
        .iter()
        .all(|z| z.re == 0.0 && z.im == 0.0)
        && qt
            .view((h, 0), (rest, h))
            .iter()
            .all(|z| z.re == 0.0 && z.im == 0.0);
    let expected = build_q_tilde(pair, &d.gap.unitary, &build_r_p(&pair.q).0, &space);
    let block_structure_exact = *qt == expected;

    let gap = GapDiagnostics {
        unitarity_defect: unitarity_defect(&d.gap.unitary),
        fit_residual: d.gap.fit_residual,
        gram_residual: d.gap.gram_residual,
        rank_a: d.gap.rank_a,
        rank_b: d.gap.rank_b,
    };
    let mut rep = PairReport {
        variant: d.variant,
        k_max,
        n_blocks: space.n_blocks,
        interior_dim: space.interior_dim(),
        power_table: table,
        max_power_residual: max_power,
        relation_residual,
        isometry_defect_v1: iso1,
        isometry_defect_v2: iso2,
        coextension_residual,
        q_tilde_unitarity: unitarity_defect(qt),
        q_tilde_h_residual,
        h_reducing,
        block_structure_exact,
        gap,
        threshold: cfg.verify_tol,
        passed: false,
    };
    rep.passed = crate::report::all_passed(&rep.checks());
    Ok(rep)
}

/// Assemble and verify in one step.
pub fn dilate_pair(
    pair: &QPair,
    k_max: usize,
    cfg: &ToleranceConfig,
) -> Result<(PairDilation, PairReport)> {
    let d = assemble_dilation(pair, k_max, cfg)?;
    let rep = verify_pair_dilation(&d, pair, k_max, cfg)?;
    Ok((d, rep))
}
