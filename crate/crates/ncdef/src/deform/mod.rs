//! Deformations of a chart cover over Artin bases: deformed chart
//! products and gluings with polydifferential corrections, optional
//! twists, defect cochains, staged obstruction classes, extension,
//! equivalence, gluing over fiber products and truncated hulls.

pub mod equiv;
pub mod functor;
pub mod hull;
pub mod lemmas;
pub mod obstruct;
pub mod relem;
pub mod sample;
pub mod serial;
pub mod twist_ops;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::artin::{elem_basis, AlgebraMap, ArtinElem, ArtinLocalAlgebra, SmallExtension};
use crate::error::{NcdefError, Result};
use crate::geometry::{ChartId, Cover};
use crate::hochschild::Cochain;
use crate::poly::MultiPoly;

pub use equiv::{apply_isomorphism, equivalent, Equivalence};
pub use functor::{functoriality_check, BaseChangeDiagram};
pub use hull::{glue, hull, HullResult};
pub use lemmas::{check_defects, defects, lemma_df_check, DefectBundle};
pub use obstruct::{
    derivation_cochain, extend, obstructions, CechClass, ExtensionChoice, ObstructionReport,
    ObstructionStage, SolveBounds,
};
pub use relem::{RCochain, RElem};
pub use serial::{deformation_from_json, deformation_to_json, DeformationJson};
pub use twist_ops::{
    apply_equivalence, change_twist, check_twist, twist_coboundary, TwistChange, TwistExponent,
};

/// Correction data attached to one base-algebra structure: maximal-ideal
/// basis slot → cochain.
pub type CorrectionMap = BTreeMap<usize, Cochain>;

/// A twist: elements `τ_kji ∈ R ⊗ A_k` for poset chains `i < j < k`,
/// congruent to 1 mod M.  Keys are stored ascending `(i, j, k)`.
#[derive(Clone, Debug)]
pub struct Twist {
    pub tau: BTreeMap<(ChartId, ChartId, ChartId), RElem>,
}

impl Twist {
    pub fn identity() -> Self {
        Twist { tau: BTreeMap::new() }
    }
}

/// The raw structure of a deformed cover: per-chart multiplication
/// corrections, per-pair gluing corrections, and an optional twist.  No
/// validity is implied; see [`NCDeformation`] for the checked form.
#[derive(Clone)]
pub struct DeformationData {
    pub base: Arc<ArtinLocalAlgebra>,
    pub cover: Arc<Cover>,
    /// `mult[i]`: M-basis slot → arity-2 correction on chart i.
    pub mult: Vec<CorrectionMap>,
    /// `gluing[(i,j)]` for i < j: M-basis slot → arity-1 correction with
    /// transport `φ⁰_ji`.
    pub gluing: BTreeMap<(ChartId, ChartId), CorrectionMap>,
    pub twist: Option<Twist>,
}

impl DeformationData {
    /// The commutative deformation: no corrections, no twist.
    pub fn trivial(base: &Arc<ArtinLocalAlgebra>, cover: &Arc<Cover>) -> Self {
        DeformationData {
            base: base.clone(),
            cover: cover.clone(),
            mult: vec![BTreeMap::new(); cover.n_charts()],
            gluing: BTreeMap::new(),
            twist: None,
        }
    }

    pub fn trivial_twisted(base: &Arc<ArtinLocalAlgebra>, cover: &Arc<Cover>) -> Self {
        let mut d = Self::trivial(base, cover);
        d.twist = Some(Twist::identity());
        d
    }

    pub fn is_twisted(&self) -> bool {
        self.twist.is_some()
    }

    fn chart_ring(&self, i: ChartId) -> &Arc<crate::poly::PolyRing> {
        &self.cover.charts[i].ring
    }

    /// The full deformed multiplication on chart i as an operator with
    /// base-ring coefficients.
    pub fn mult_total(&self, i: ChartId) -> RCochain {
        let ring = self.chart_ring(i);
        let mut out = RCochain::zero(
            &self.base,
            2,
            ring,
            ring,
            identity_images(ring),
        );
        out.add_comp(0, &Cochain::multiplication(ring));
        for (&slot, c) in &self.mult[i] {
            out.add_comp(slot, c);
        }
        out
    }

    /// The full deformed gluing `i → j` (identity operator when i = j).
    pub fn glue_total(&self, i: ChartId, j: ChartId) -> Result<RCochain> {
        let src = self.chart_ring(i);
        if i == j {
            return Ok(self.id_op(i));
        }
        let images = self.cover.transport_images(i, j)?;
        let tgt = self.chart_ring(j);
        let mut out = RCochain::zero(&self.base, 1, src, tgt, images.clone());
        out.add_comp(0, &Cochain::from_hom(src, tgt, images));
        if let Some(corr) = self.gluing.get(&(i, j)) {
            for (&slot, c) in corr {
                out.add_comp(slot, c);
            }
        }
        Ok(out)
    }

    pub fn id_op(&self, i: ChartId) -> RCochain {
        let ring = self.chart_ring(i);
        let mut out = RCochain::zero(&self.base, 1, ring, ring, identity_images(ring));
        out.add_comp(0, &Cochain::identity(ring));
        out
    }

    /// `τ_kji` for an ascending chain tuple (defaults to 1 off the stored
    /// set and when two indices coincide).
    pub fn tau(&self, i: ChartId, j: ChartId, k: ChartId) -> RElem {
        let ring = self.chart_ring(k);
        if i == j || j == k {
            return RElem::one(&self.base, ring);
        }
        match self.twist.as_ref().and_then(|t| t.tau.get(&(i, j, k))) {
            Some(t) => t.clone(),
            None => RElem::one(&self.base, ring),
        }
    }

    pub fn set_tau(&mut self, i: ChartId, j: ChartId, k: ChartId, t: RElem) {
        self.twist
            .get_or_insert_with(Twist::identity)
            .tau
            .insert((i, j, k), t);
    }

    /// Deformed product of two `R ⊗ A_i` elements.
    pub fn relem_mul(&self, i: ChartId, x: &RElem, y: &RElem) -> Result<RElem> {
        let mut out = RElem::zero(&self.base, self.chart_ring(i));
        for (&m, pm) in &x.comps {
            for (&n, pn) in &y.comps {
                let r = elem_basis(&self.base, m).mul(&elem_basis(&self.base, n));
                if r.is_zero() {
                    continue;
                }
                for (&t, c) in &r.coords {
                    out.add_comp(t, pm.mul(pn).scale(c));
                }
                for (&slot, corr) in &self.mult[i] {
                    let r2 = r.mul(&elem_basis(&self.base, slot));
                    if r2.is_zero() {
                        continue;
                    }
                    let val = corr.evaluate(&[pm.clone(), pn.clone()])?;
                    for (&t, c) in &r2.coords {
                        out.add_comp(t, val.scale(c));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Deformed gluing applied to an `R ⊗ A_i` element.
    pub fn relem_glue(&self, i: ChartId, j: ChartId, x: &RElem) -> Result<RElem> {
        if i == j {
            return Ok(x.clone());
        }
        let images = self.cover.transport_images(i, j)?;
        let tgt = self.chart_ring(j);
        let mut out = RElem::zero(&self.base, tgt);
        for (&m, pm) in &x.comps {
            out.add_comp(m, pm.substitute(tgt, &images)?);
            if let Some(corr) = self.gluing.get(&(i, j)) {
                for (&slot, c) in corr {
                    let r = elem_basis(&self.base, m).mul(&elem_basis(&self.base, slot));
                    if r.is_zero() {
                        continue;
                    }
                    let val = c.evaluate(&[pm.clone()])?;
                    for (&t, k) in &r.coords {
                        out.add_comp(t, val.scale(k));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Inverse of `1 + (nilpotent)` under the deformed product of chart i.
    pub fn relem_inverse(&self, i: ChartId, x: &RElem) -> Result<RElem> {
        let ring = self.chart_ring(i);
        let one = RElem::one(&self.base, ring);
        match x.comps.get(&0) {
            Some(p) if *p == MultiPoly::one(ring) => {}
            _ => {
                return Err(NcdefError::Invalid(
                    "inverse expects an element congruent to 1 mod M".into(),
                ))
            }
        }
        let z = one.sub(x);
        let mut inv = one.clone();
        let mut pow = one.clone();
        for _ in 0..=self.base.order {
            pow = self.relem_mul(i, &pow, &z)?;
            if pow.is_zero() {
                break;
            }
            inv = inv.add(&pow);
        }
        if !pow.is_zero() {
            return Err(NcdefError::Invalid("element is not unipotent".into()));
        }
        Ok(inv)
    }

    // ---- defect cochains --------------------------------------------------

    /// Associator defect `f_i(x,y,z) = (x×y)×z − x×(y×z)`.
    pub fn defect_f(&self, i: ChartId) -> Result<RCochain> {
        let mult = self.mult_total(i);
        let id = self.id_op(i);
        let left = relem::rc_compose(&mult, &[&mult, &id])?;
        let right = relem::rc_compose(&mult, &[&id, &mult])?;
        Ok(left.sub(&right))
    }

    /// Multiplicativity defect `g_ji(x,y) = φ(x×y) − φ(x)×φ(y)` for i < j.
    pub fn defect_g(&self, i: ChartId, j: ChartId) -> Result<RCochain> {
        assert!(self.cover.less(i, j));
        let glue = self.glue_total(i, j)?;
        let mi = self.mult_total(i);
        let mj = self.mult_total(j);
        let left = relem::rc_compose(&glue, &[&mi])?;
        let right = relem::rc_compose(&mj, &[&glue, &glue])?;
        Ok(left.sub(&right))
    }

    /// Transitivity defect for i < j < k: `φ_kj φ_ji − φ_ki` untwisted, or
    /// `φ_kj φ_ji − τ⁻¹ × φ_ki(·) × τ` with the chain's twist.
    pub fn defect_h(&self, i: ChartId, j: ChartId, k: ChartId) -> Result<RCochain> {
        assert!(self.cover.less(i, j) && self.cover.less(j, k));
        let via = relem::rc_compose(&self.glue_total(j, k)?, &[&self.glue_total(i, j)?])?;
        let direct = self.glue_total(i, k)?;
        if !self.is_twisted() {
            return Ok(via.sub(&direct));
        }
        let tau = self.tau(i, j, k);
        let tau_inv = self.relem_inverse(k, &tau)?;
        let mk = self.mult_total(k);
        let right_by_tau = relem::rc_partial(&mk, 1, &tau)?;
        let left_by_inv = relem::rc_partial(&mk, 0, &tau_inv)?;
        let conj = relem::rc_compose(
            &left_by_inv,
            &[&relem::rc_compose(&right_by_tau, &[&direct])?],
        )?;
        Ok(via.sub(&conj))
    }

    /// Twist-compatibility defect for i < j < k < l:
    /// `σ = τ_lji × τ_lkj − τ_lki × φ_lk(τ_kji)`.
    pub fn defect_sigma(
        &self,
        i: ChartId,
        j: ChartId,
        k: ChartId,
        l: ChartId,
    ) -> Result<RElem> {
        let a = self.relem_mul(l, &self.tau(i, j, l), &self.tau(j, k, l))?;
        let moved = self.relem_glue(k, l, &self.tau(i, j, k))?;
        let b = self.relem_mul(l, &self.tau(i, k, l), &moved)?;
        Ok(a.sub(&b))
    }

    // ---- structural checks ------------------------------------------------

    /// Checks every defining identity exactly over the base.
    pub fn validate(&self) -> Result<()> {
        let n = self.cover.n_charts();
        assert_eq!(self.mult.len(), n);
        for i in 0..n {
            for (&slot, c) in &self.mult[i] {
                if self.base.basis_degree(slot) < 1 {
                    return Err(NcdefError::Invalid(
                        "multiplication correction at a unit slot".into(),
                    ));
                }
                assert_eq!(c.arity, 2);
            }
            if !self.defect_f(i)?.is_zero() {
                return Err(NcdefError::IdentityViolation(format!(
                    "chart {i} multiplication is not associative"
                )));
            }
        }
        for (&(i, j), corr) in &self.gluing {
            if !self.cover.less(i, j) {
                return Err(NcdefError::Invalid(format!(
                    "gluing correction on non-comparable pair ({i},{j})"
                )));
            }
            for (&slot, c) in corr {
                if self.base.basis_degree(slot) < 1 {
                    return Err(NcdefError::Invalid("gluing correction at a unit slot".into()));
                }
                assert_eq!(c.arity, 1);
            }
        }
        for pair in self.cover.chains(2) {
            if !self.defect_g(pair[0], pair[1])?.is_zero() {
                return Err(NcdefError::IdentityViolation(format!(
                    "gluing ({},{}) is not multiplicative",
                    pair[0], pair[1]
                )));
            }
        }
        for ch in self.cover.chains(3) {
            if !self.defect_h(ch[0], ch[1], ch[2])?.is_zero() {
                return Err(NcdefError::IdentityViolation(format!(
                    "gluing transitivity fails on ({},{},{})",
                    ch[0], ch[1], ch[2]
                )));
            }
        }
        if let Some(tw) = &self.twist {
            for (&(i, j, k), t) in &tw.tau {
                if !(self.cover.less(i, j) && self.cover.less(j, k)) {
                    return Err(NcdefError::Invalid(format!(
                        "twist on non-chain ({i},{j},{k})"
                    )));
                }
                match t.comps.get(&0) {
                    Some(p) if *p == MultiPoly::one(self.chart_ring(k)) => {}
                    _ => {
                        return Err(NcdefError::Invalid(format!(
                            "τ_({i},{j},{k}) is not congruent to 1"
                        )))
                    }
                }
            }
            for ch in self.cover.chains(4) {
                if !self.defect_sigma(ch[0], ch[1], ch[2], ch[3])?.is_zero() {
                    return Err(NcdefError::CompatibilityViolated(format!(
                        "twist compatibility fails on {ch:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact structural equality of the correction data.
    pub fn same_data(&self, rhs: &DeformationData) -> bool {
        if self.base != rhs.base || !self.cover.same_cover(&rhs.cover) {
            return false;
        }
        let cm = |a: &CorrectionMap, b: &CorrectionMap| {
            let keys: std::collections::BTreeSet<usize> =
                a.keys().chain(b.keys()).copied().collect();
            keys.into_iter().all(|k| match (a.get(&k), b.get(&k)) {
                (Some(x), Some(y)) => x == y,
                (Some(x), None) | (None, Some(x)) => x.is_zero(),
                (None, None) => true,
            })
        };
        if !(0..self.cover.n_charts()).all(|i| cm(&self.mult[i], &rhs.mult[i])) {
            return false;
        }
        let empty = CorrectionMap::new();
        let pairs: std::collections::BTreeSet<(usize, usize)> = self
            .gluing
            .keys()
            .chain(rhs.gluing.keys())
            .copied()
            .collect();
        if !pairs.into_iter().all(|p| {
            cm(
                self.gluing.get(&p).unwrap_or(&empty),
                rhs.gluing.get(&p).unwrap_or(&empty),
            )
        }) {
            return false;
        }
        let taus: std::collections::BTreeSet<(usize, usize, usize)> = self
            .twist
            .iter()
            .chain(rhs.twist.iter())
            .flat_map(|t| t.tau.keys().copied())
            .collect();
        taus.into_iter()
            .all(|(i, j, k)| self.tau(i, j, k) == rhs.tau(i, j, k))
    }

    /// Base change along a local homomorphism `β: R → R1`.
    pub fn map_base(&self, beta: &AlgebraMap) -> Result<DeformationData> {
        assert_eq!(beta.src, self.base);
        let mv = |corr: &CorrectionMap| -> CorrectionMap {
            let mut out: BTreeMap<usize, Cochain> = BTreeMap::new();
            for (&slot, c) in corr {
                for (&t, v) in &beta.apply_basis(slot).coords {
                    if beta.tgt.basis_degree(t) < 1 {
                        continue; // unit component cannot appear for local β
                    }
                    let e = out.entry(t).or_insert_with(|| {
                        Cochain::zero(c.arity, &c.src, &c.tgt, c.transport.clone())
                    });
                    *e = e.add(&c.scale(v));
                }
            }
            out.retain(|_, c| !c.is_zero());
            out
        };
        let mut out = DeformationData {
            base: beta.tgt.clone(),
            cover: self.cover.clone(),
            mult: self.mult.iter().map(&mv).collect(),
            gluing: self.gluing.iter().map(|(&k, v)| (k, mv(v))).collect(),
            twist: None,
        };
        if let Some(tw) = &self.twist {
            let mut tau = BTreeMap::new();
            for (&key, t) in &tw.tau {
                tau.insert(key, t.map_base(beta));
            }
            out.twist = Some(Twist { tau });
        }
        Ok(out)
    }
}

/// A validated deformation: every defining identity holds exactly over
/// the base.
#[derive(Clone)]
pub struct NCDeformation {
    data: DeformationData,
}

impl NCDeformation {
    pub fn new(data: DeformationData) -> Result<Self> {
        data.validate()?;
        Ok(NCDeformation { data })
    }

    pub fn data(&self) -> &DeformationData {
        &self.data
    }

    pub fn base(&self) -> &Arc<ArtinLocalAlgebra> {
        &self.data.base
    }

    pub fn cover(&self) -> &Arc<Cover> {
        &self.data.cover
    }

    /// Base change along a local homomorphism; the result is validated.
    pub fn pushforward(&self, beta: &AlgebraMap) -> Result<NCDeformation> {
        NCDeformation::new(self.data.map_base(beta)?)
    }
}

/// A verbatim module-level lift of a deformation over a small extension:
/// corrections are pulled through the linear section of `R′ → R`.  No
/// associativity or compatibility is claimed.
pub struct CandidateLift {
    pub data: DeformationData,
    pub ext: Arc<SmallExtension>,
}

pub fn lift_candidate(d: &NCDeformation, ext: &Arc<SmallExtension>) -> CandidateLift {
    assert_eq!(
        ext.target,
        *d.base(),
        "extension target must be the deformation base"
    );
    let lift_elem = |slot: usize| -> ArtinElem { ext.section[slot].clone() };
    let lift_map = |corr: &CorrectionMap| -> CorrectionMap {
        let mut out: BTreeMap<usize, Cochain> = BTreeMap::new();
        for (&slot, c) in corr {
            for (&t, v) in &lift_elem(slot).coords {
                let e = out.entry(t).or_insert_with(|| {
                    Cochain::zero(c.arity, &c.src, &c.tgt, c.transport.clone())
                });
                *e = e.add(&c.scale(v));
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    };
    let src = d.data();
    let mut data = DeformationData {
        base: ext.source.clone(),
        cover: src.cover.clone(),
        mult: src.mult.iter().map(&lift_map).collect(),
        gluing: src.gluing.iter().map(|(&k, v)| (k, lift_map(v))).collect(),
        twist: None,
    };
    if let Some(tw) = &src.twist {
        let mut tau = BTreeMap::new();
        for (&key, t) in &tw.tau {
            let mut lifted = RElem::zero(&ext.source, &t.ring);
            for (&slot, p) in &t.comps {
                for (&ts, v) in &lift_elem(slot).coords {
                    lifted.add_comp(ts, p.scale(v));
                }
            }
            tau.insert(key, lifted);
        }
        data.twist = Some(Twist { tau });
    }
    CandidateLift {
        data,
        ext: ext.clone(),
    }
}

pub(crate) fn identity_images(ring: &Arc<crate::poly::PolyRing>) -> Vec<MultiPoly> {
    (0..ring.nvars()).map(|v| MultiPoly::var(ring, v)).collect()
}

#[cfg(test)]
mod tests;
