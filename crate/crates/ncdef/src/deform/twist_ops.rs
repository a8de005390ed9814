//! Twist calculus: compatibility checking, changing a twist by a cochain
//! of elements, and recognising coboundary twists.

use std::collections::BTreeMap;

use crate::cech::is_coboundary;
use crate::error::{NcdefError, Result};
use crate::geometry::cohomology::SectionCochain;
use crate::geometry::section::Section;
use crate::geometry::{ChartId, Cover};
use crate::poly::MultiPoly;

use super::equiv::{apply_isomorphism, Equivalence};
use super::relem::RElem;
use super::{DeformationData, NCDeformation};

/// A cochain of twist increments `t_kji ∈ R ⊗ A_k` (zero unit part),
/// keyed by ascending chains.
pub type TwistChange = BTreeMap<(ChartId, ChartId, ChartId), RElem>;

/// A cochain of conjugation exponents `s_ji ∈ R ⊗ A_j`, keyed by pairs.
pub type TwistExponent = BTreeMap<(ChartId, ChartId), RElem>;

/// Verifies that the stored twist is unipotent and satisfies the cocycle
/// condition `τ_lji τ_lkj = τ_lki φ_lk(τ_kji)` exactly.
pub fn check_twist(d: &DeformationData) -> Result<()> {
    let tw = d.twist.as_ref().ok_or_else(|| {
        NcdefError::Unsupported("check_twist needs a twisted deformation".into())
    })?;
    for (&(i, j, k), t) in &tw.tau {
        if !(d.cover.less(i, j) && d.cover.less(j, k)) {
            return Err(NcdefError::CompatibilityViolated(format!(
                "twist on non-chain ({i},{j},{k})"
            )));
        }
        match t.comps.get(&0) {
            Some(p) if *p == MultiPoly::one(&d.cover.charts[k].ring) => {}
            _ => {
                return Err(NcdefError::CompatibilityViolated(format!(
                    "τ_({i},{j},{k}) is not congruent to 1"
                )))
            }
        }
    }
    for ch in d.cover.chains(4) {
        if !d.defect_sigma(ch[0], ch[1], ch[2], ch[3])?.is_zero() {
            return Err(NcdefError::CompatibilityViolated(format!(
                "τ cocycle condition fails on {ch:?}"
            )));
        }
    }
    Ok(())
}

/// Transports a twisted deformation along an equivalence (chart
/// isomorphisms plus conjugating units).
pub fn apply_equivalence(d: &NCDeformation, eq: &Equivalence) -> Result<NCDeformation> {
    if !d.data().is_twisted() {
        return Err(NcdefError::Unsupported(
            "apply_equivalence needs a twisted deformation".into(),
        ));
    }
    apply_isomorphism(d, eq)
}

/// Plain transport `φ⁰_lk` applied componentwise.
pub(super) fn plain_move(cover: &Cover, x: &RElem, k: ChartId, l: ChartId) -> Result<RElem> {
    let images = cover.transport_images(k, l)?;
    let tgt = &cover.charts[l].ring;
    let mut out = RElem::zero(&x.alg, tgt);
    for (&s, p) in &x.comps {
        out.add_comp(s, p.substitute(tgt, &images)?);
    }
    Ok(out)
}

/// The Čech coboundary `(dt)_{lkji} = t_lji − t_lki + t_lkj − φ⁰_lk(t_kji)`
/// of a twist increment on a 4-chain.
fn change_coboundary(
    cover: &Cover,
    t: &TwistChange,
    alg: &std::sync::Arc<crate::artin::ArtinLocalAlgebra>,
    ch: &[ChartId],
) -> Result<RElem> {
    let (i, j, k, l) = (ch[0], ch[1], ch[2], ch[3]);
    let zero_l = RElem::zero(alg, &cover.charts[l].ring);
    let get = |a: ChartId, b: ChartId, c: ChartId| t.get(&(a, b, c));
    let mut out = zero_l.clone();
    if let Some(v) = get(i, j, l) {
        out = out.add(v);
    }
    if let Some(v) = get(i, k, l) {
        out = out.sub(v);
    }
    if let Some(v) = get(j, k, l) {
        out = out.add(v);
    }
    if let Some(v) = get(i, j, k) {
        out = out.sub(&plain_move(cover, v, k, l)?);
    }
    Ok(out)
}

/// Replaces `τ` by `τ + t` and verifies the exact effect: the cocycle
/// defect moves by the Čech coboundary of `t`, and the algebra-level
/// structure (products, gluings, transitivity defects) is untouched.
/// Both statements hold exactly when products against the coefficients of
/// `t` are undeformed (e.g. top-degree `t`, or a square-zero base).
pub fn change_twist(d: &NCDeformation, t: &TwistChange) -> Result<NCDeformation> {
    let data = d.data();
    if !data.is_twisted() {
        return Err(NcdefError::Unsupported(
            "change_twist needs a twisted deformation".into(),
        ));
    }
    let cover = &data.cover;
    for (&(i, j, k), v) in t {
        if !(cover.less(i, j) && cover.less(j, k)) {
            return Err(NcdefError::CompatibilityViolated(format!(
                "twist increment on non-chain ({i},{j},{k})"
            )));
        }
        if v.comps.contains_key(&0) {
            return Err(NcdefError::CompatibilityViolated(
                "twist increment must vanish at the unit slot".into(),
            ));
        }
    }
    let mut new = data.clone();
    for (&(i, j, k), v) in t {
        new.set_tau(i, j, k, data.tau(i, j, k).add(v));
    }
    for ch in cover.chains(4) {
        let moved = new.defect_sigma(ch[0], ch[1], ch[2], ch[3])?;
        let old = data.defect_sigma(ch[0], ch[1], ch[2], ch[3])?;
        let expected = change_coboundary(cover, t, &data.base, &ch)?;
        if moved.sub(&old) != expected {
            return Err(NcdefError::CompatibilityViolated(format!(
                "twist-change defect formula fails on {ch:?}"
            )));
        }
    }
    for ch in cover.chains(3) {
        let before = data.defect_h(ch[0], ch[1], ch[2])?;
        let after = new.defect_h(ch[0], ch[1], ch[2])?;
        if !before.sub(&after).is_zero() {
            return Err(NcdefError::CompatibilityViolated(format!(
                "twist change moved the algebra gluing on {ch:?}"
            )));
        }
    }
    NCDeformation::new(new)
}

/// Recognises a twist increment of the form
/// `t_kji = φ⁰_kj(s_ji) − s_ki + s_kj` and returns the exponents `s`, or
/// `None` when no such presentation exists (per maximal-ideal slot).
pub fn twist_coboundary(cover: &Cover, t: &TwistChange) -> Result<Option<TwistExponent>> {
    let alg = match t.values().next() {
        Some(v) => v.alg.clone(),
        None => return Ok(Some(BTreeMap::new())),
    };
    let mut slots: std::collections::BTreeSet<usize> = Default::default();
    for v in t.values() {
        if v.comps.contains_key(&0) {
            return Err(NcdefError::CompatibilityViolated(
                "twist increment must vanish at the unit slot".into(),
            ));
        }
        slots.extend(v.comps.keys().copied());
    }
    let mut out: TwistExponent = BTreeMap::new();
    for slot in slots {
        let mut c = SectionCochain::zero(0, 2);
        for (&(i, j, k), v) in t {
            if let Some(p) = v.comps.get(&slot) {
                c.set(vec![i, j, k], Section::scalar(&cover.charts[k].ring, p.clone()));
            }
        }
        let solved = match is_coboundary(cover, &c) {
            Err(NcdefError::NotClosed(_)) => return Ok(None),
            other => other?,
        };
        match solved {
            Some(prim) => {
                for pair in cover.chains(2) {
                    let (i, j) = (pair[0], pair[1]);
                    if let Some(sec) = prim.get(&[i, j]) {
                        let ring = &cover.charts[j].ring;
                        let poly = sec
                            .terms
                            .get(&Vec::new())
                            .cloned()
                            .unwrap_or_else(|| MultiPoly::zero(ring));
                        out.entry((i, j))
                            .or_insert_with(|| RElem::zero(&alg, ring))
                            .add_comp(slot, poly);
                    }
                }
            }
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}
