//! Equivalences of deformations: per-chart algebra isomorphisms plus,
//! in the twisted case, conjugating units on overlaps.  `equivalent`
//! searches for one order-by-order through the maximal-ideal filtration.

use std::collections::BTreeMap;

use crate::error::{NcdefError, Result};
use crate::geometry::cohomology::SectionCochain;
use crate::geometry::section::jacobian_inverse;
use crate::geometry::{ChartId, Cover};
use crate::hochschild::{compose, Cochain};

use super::obstruct::{bounds_for, derivation_cochain};
use super::relem::{rc_apply, rc_compose, rc_partial, RCochain, RElem};
use super::{CorrectionMap, DeformationData, NCDeformation, Twist};

/// An equivalence witness: `θ_i = id + Σ (M-slot) ⊗ (correction)` per
/// chart, and for twisted deformations units `ρ_ji = 1 + s_ji` on chart j.
#[derive(Clone)]
pub struct Equivalence {
    pub theta: Vec<CorrectionMap>,
    pub rho: BTreeMap<(ChartId, ChartId), RElem>,
}

impl Equivalence {
    pub fn identity(cover: &Cover) -> Self {
        Equivalence {
            theta: vec![BTreeMap::new(); cover.n_charts()],
            rho: BTreeMap::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.theta.iter().all(|m| m.values().all(|c| c.is_zero()))
            && self.rho.values().all(|r| r.m_part().is_zero())
    }
}

/// Transports a deformation along an equivalence; the result is validated.
pub fn apply_isomorphism(d: &NCDeformation, eq: &Equivalence) -> Result<NCDeformation> {
    NCDeformation::new(apply_iso_data(d.data(), eq)?)
}

fn theta_op(data: &DeformationData, eq: &Equivalence, i: ChartId) -> RCochain {
    let mut op = data.id_op(i);
    for (&slot, c) in &eq.theta[i] {
        op.add_comp(slot, c);
    }
    op
}

/// Inverse of `id + (corrections with maximal-ideal coefficients)` under
/// operator composition.
fn op_inverse(data: &DeformationData, op: &RCochain) -> Result<RCochain> {
    let id = {
        let mut out = RCochain::zero(&data.base, 1, &op.src, &op.tgt, op.transport.clone());
        out.add_comp(0, &Cochain::identity(&op.src));
        out
    };
    let eps = op.sub(&id);
    let mut inv = id.clone();
    let mut pow = id.clone();
    let mut sign = true;
    for _ in 0..=data.base.order {
        pow = rc_compose(&eps, &[&pow])?;
        if pow.is_zero() {
            return Ok(inv);
        }
        sign = !sign;
        inv = if sign { inv.add(&pow) } else { inv.sub(&pow) };
    }
    Err(NcdefError::Invalid("isomorphism is not unipotent".into()))
}

/// Strips the unit component of a conjugated operator, checking it stayed
/// the undeformed structure.
fn strip_unit(rc: &RCochain, expected: &Cochain) -> Result<CorrectionMap> {
    let mut out = CorrectionMap::new();
    for (&slot, c) in &rc.comps {
        if slot == 0 {
            if c != expected {
                return Err(NcdefError::IdentityViolation(
                    "conjugation moved the reduced structure".into(),
                ));
            }
            continue;
        }
        out.insert(slot, c.clone());
    }
    if rc.comps.get(&0).is_none() && !expected.is_zero() {
        return Err(NcdefError::IdentityViolation(
            "conjugation lost the reduced structure".into(),
        ));
    }
    Ok(out)
}

pub(super) fn apply_iso_data(data: &DeformationData, eq: &Equivalence) -> Result<DeformationData> {
    let cover = &data.cover;
    assert_eq!(eq.theta.len(), cover.n_charts());
    if !data.is_twisted() && !eq.rho.is_empty() {
        return Err(NcdefError::IncompatibleData(
            "conjugating units on an untwisted deformation".into(),
        ));
    }
    let theta: Vec<RCochain> = (0..cover.n_charts())
        .map(|i| theta_op(data, eq, i))
        .collect();
    let theta_inv: Result<Vec<RCochain>> = theta.iter().map(|t| op_inverse(data, t)).collect();
    let theta_inv = theta_inv?;

    let mut out = DeformationData {
        base: data.base.clone(),
        cover: cover.clone(),
        mult: Vec::new(),
        gluing: BTreeMap::new(),
        twist: None,
    };
    for i in 0..cover.n_charts() {
        let conj = rc_compose(
            &theta[i],
            &[&rc_compose(&data.mult_total(i), &[&theta_inv[i], &theta_inv[i]])?],
        )?;
        out.mult
            .push(strip_unit(&conj, &Cochain::multiplication(&cover.charts[i].ring))?);
    }
    for pair in cover.chains(2) {
        let (i, j) = (pair[0], pair[1]);
        let mut op = data.glue_total(i, j)?;
        if let Some(rho) = eq.rho.get(&(i, j)) {
            let rho_inv = data.relem_inverse(j, rho)?;
            let mj = data.mult_total(j);
            let left = rc_partial(&mj, 0, &rho_inv)?;
            let right = rc_partial(&mj, 1, rho)?;
            op = rc_compose(&left, &[&rc_compose(&right, &[&op])?])?;
        }
        let conj = rc_compose(&theta[j], &[&rc_compose(&op, &[&theta_inv[i]])?])?;
        let expected = Cochain::from_hom(
            &cover.charts[i].ring,
            &cover.charts[j].ring,
            cover.transport_images(i, j)?,
        );
        let corr = strip_unit(&conj, &expected)?;
        if !corr.is_empty() {
            out.gluing.insert((i, j), corr);
        }
    }
    if let Some(tw) = &data.twist {
        let mut tau = BTreeMap::new();
        let keys: std::collections::BTreeSet<(usize, usize, usize)> = tw
            .tau
            .keys()
            .copied()
            .chain(cover.chains(3).into_iter().map(|c| (c[0], c[1], c[2])))
            .collect();
        for (i, j, k) in keys {
            let one_j = RElem::one(&data.base, &cover.charts[j].ring);
            let one_k = RElem::one(&data.base, &cover.charts[k].ring);
            let rho_ji = eq.rho.get(&(i, j)).unwrap_or(&one_j);
            let rho_kj = eq.rho.get(&(j, k)).cloned().unwrap_or_else(|| one_k.clone());
            let rho_ki = eq.rho.get(&(i, k)).unwrap_or(&one_k);
            let rho_ki_inv = data.relem_inverse(k, rho_ki)?;
            let moved = data.relem_glue(j, k, rho_ji)?;
            let mut prod = data.relem_mul(k, &rho_ki_inv, &data.tau(i, j, k))?;
            prod = data.relem_mul(k, &prod, &moved)?;
            prod = data.relem_mul(k, &prod, &rho_kj)?;
            let new_tau = rc_apply(&theta[k], &prod)?;
            if new_tau != one_k {
                tau.insert((i, j, k), new_tau);
            }
        }
        out.twist = Some(Twist { tau });
    }
    Ok(out)
}

/// Searches for an equivalence `d1 → d2` order-by-order; `Ok(None)` means
/// the deformations are genuinely inequivalent.
pub fn equivalent(d1: &NCDeformation, d2: &NCDeformation) -> Result<Option<Equivalence>> {
    let data2 = d2.data();
    if d1.base() != d2.base() || !d1.cover().same_cover(d2.cover()) {
        return Err(NcdefError::IncompatibleData(
            "equivalence needs a common base and cover".into(),
        ));
    }
    if d1.data().is_twisted() != data2.is_twisted() {
        return Err(NcdefError::IncompatibleData(
            "cannot compare twisted with untwisted data".into(),
        ));
    }
    let base = d1.base().clone();
    let cover = d1.cover().clone();
    let mut eq = Equivalence::identity(&cover);
    let zero_corr = CorrectionMap::new();

    for s in 1..=base.order {
        let cur = apply_iso_data(d1.data(), &eq)?;
        let slots: Vec<usize> = (0..base.dim()).filter(|&t| base.basis_degree(t) == s as i64).collect();
        // chart isomorphism corrections fixing the products at degree s
        let mut e_new: Vec<BTreeMap<usize, Cochain>> = vec![BTreeMap::new(); cover.n_charts()];
        for i in 0..cover.n_charts() {
            let ring = &cover.charts[i].ring;
            let ident = jacobian_inverse(&cover, i, i)?;
            for &t in &slots {
                let zero = Cochain::zero_endo(2, ring);
                let want = data2.mult[i].get(&t).unwrap_or(&zero);
                let have = cur.mult[i].get(&t).unwrap_or(&zero);
                let diff = want.sub(have);
                if diff.is_zero() {
                    continue;
                }
                let b = bounds_for(&diff);
                let mut e = match crate::hochschild::solve_coboundary(
                    &diff.neg(),
                    b.order,
                    b.degree + 2,
                )? {
                    Some(e) => e,
                    None => return Ok(None),
                };
                let symbol = e.symbol_section(&ident);
                if !symbol.is_zero() {
                    e = e.sub(&derivation_cochain(&cover, i, i, &symbol)?);
                }
                e_new[i].insert(t, e);
            }
        }
        // residual gluing mismatch must be a coboundary of vector fields
        let pairs = cover.chains(2);
        for &t in &slots {
            let mut residue = SectionCochain::zero(1, 1);
            for pair in &pairs {
                let (i, j) = (pair[0], pair[1]);
                let phi = Cochain::from_hom(
                    &cover.charts[i].ring,
                    &cover.charts[j].ring,
                    cover.transport_images(i, j)?,
                );
                let zero = Cochain::zero(1, &cover.charts[i].ring, &cover.charts[j].ring, phi.transport.clone());
                let want = data2.gluing.get(&(i, j)).unwrap_or(&zero_corr).get(&t).unwrap_or(&zero);
                let have = cur.gluing.get(&(i, j)).unwrap_or(&zero_corr).get(&t).unwrap_or(&zero);
                let mut r = want.sub(have);
                if let Some(ej) = e_new[j].get(&t) {
                    r = r.sub(&compose(ej, std::slice::from_ref(&phi))?);
                }
                if let Some(ei) = e_new[i].get(&t) {
                    r = r.add(&compose(&phi, std::slice::from_ref(ei))?);
                }
                let w = r.symbol_section(&jacobian_inverse(&cover, i, j)?);
                if r != derivation_cochain(&cover, i, j, &w)? {
                    return Ok(None);
                }
                residue.set(vec![i, j], w);
            }
            if !residue.is_zero() {
                match crate::cech::is_coboundary(&cover, &residue)? {
                    Some(prim) => {
                        for i in 0..cover.n_charts() {
                            if let Some(wi) = prim.get(&[i]) {
                                let dcorr = derivation_cochain(&cover, i, i, wi)?;
                                match e_new[i].get_mut(&t) {
                                    Some(e) => *e = e.add(&dcorr),
                                    None => {
                                        e_new[i].insert(t, dcorr);
                                    }
                                }
                            }
                        }
                    }
                    None => return Ok(None),
                }
            }
        }
        // twisted: match the twist elements with conjugating units
        if data2.is_twisted() {
            for &t in &slots {
                let mut tdiff = SectionCochain::zero(0, 2);
                for ch in cover.chains(3) {
                    let (i, j, k) = (ch[0], ch[1], ch[2]);
                    let ring = &cover.charts[k].ring;
                    let want = data2.tau(i, j, k);
                    let have = cur.tau(i, j, k);
                    let zero = crate::poly::MultiPoly::zero(ring);
                    let d = want.comps.get(&t).unwrap_or(&zero).sub(have.comps.get(&t).unwrap_or(&zero));
                    if !d.is_zero() {
                        tdiff.set(vec![i, j, k], crate::geometry::section::Section::scalar(ring, d));
                    }
                }
                if tdiff.is_zero() {
                    continue;
                }
                match crate::cech::is_coboundary(&cover, &tdiff)? {
                    Some(prim) => {
                        for pair in &pairs {
                            let (i, j) = (pair[0], pair[1]);
                            if let Some(sec) = prim.get(&[i, j]) {
                                let ring = &cover.charts[j].ring;
                                let poly = sec
                                    .terms
                                    .get(&Vec::new())
                                    .cloned()
                                    .unwrap_or_else(|| crate::poly::MultiPoly::zero(ring));
                                let rho = eq
                                    .rho
                                    .entry((i, j))
                                    .or_insert_with(|| RElem::one(&base, ring));
                                rho.add_comp(t, poly);
                            }
                        }
                    }
                    None => return Ok(None),
                }
            }
        }
        for i in 0..cover.n_charts() {
            for (t, e) in std::mem::take(&mut e_new[i]) {
                if e.is_zero() {
                    continue;
                }
                match eq.theta[i].get_mut(&t) {
                    Some(old) => *old = old.add(&e),
                    None => {
                        eq.theta[i].insert(t, e);
                    }
                }
            }
        }
    }
    let last = apply_iso_data(d1.data(), &eq)?;
    if last.same_data(data2) {
        Ok(Some(eq))
    } else {
        Err(NcdefError::IdentityViolation(
            "order-by-order matching left a residue".into(),
        ))
    }
}
