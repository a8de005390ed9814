//! Staged obstruction classes of a candidate lift over a small extension,
//! with in-place repairs when a stage vanishes, and lift extension.
//!
//! Stages, each conditional on the previous ones vanishing:
//!   1. per-chart associator class in `H⁰(∧³T)`,
//!   2. gluing-symbol class in `Ȟ¹(∧²T)`,
//!   3. (twisted) twist-compatibility class in `Ȟ³(O)`,
//!   4. transitivity class in `Ȟ²(T)`.
//! The extension torsor acts through `J ⊗ (H⁰(∧²T) ⊕ Ȟ¹(T) [⊕ Ȟ²(O)])`.

use std::sync::Arc;

use crate::artin::SmallExtension;
use crate::cech::{cech_d_sections, is_coboundary};
use crate::error::{NcdefError, Result};
use crate::geometry::cohomology::SectionCochain;
use crate::geometry::section::{jacobian_inverse, Section};
use crate::geometry::{ChartId, Cover};
use crate::hochschild::{hkr_inverse, solve_coboundary_batch, Cochain};
use crate::poly::{unit_exp, MultiPoly};
use crate::scalar::Scalar;

use super::{CandidateLift, CorrectionMap, DeformationData, NCDeformation};

/// Bounds for the Hochschild primitive searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveBounds {
    pub order: usize,
    pub degree: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObstructionStage {
    Associativity,
    GluingSymbol,
    TwistCompatibility,
    Transitivity,
}

/// A Čech cohomology class valued in `∧^p T` (`p = 0` meaning functions),
/// one representing cochain per basis vector of the extension kernel J.
#[derive(Clone)]
pub struct CechClass {
    pub p: usize,
    pub q: usize,
    pub per_j: Vec<SectionCochain>,
}

impl CechClass {
    pub fn is_zero(&self) -> bool {
        self.per_j.iter().all(|c| c.is_zero())
    }
}

#[derive(Clone)]
pub struct StageReport {
    pub stage: ObstructionStage,
    pub class: CechClass,
    pub vanishes: bool,
}

/// The staged obstruction computation: later stages are present only when
/// every earlier stage vanished.
#[derive(Clone)]
pub struct ObstructionReport {
    pub stages: Vec<StageReport>,
    pub obstructed: Option<ObstructionStage>,
}

impl ObstructionReport {
    pub fn unobstructed(&self) -> bool {
        self.obstructed.is_none()
    }
}

/// Extra first-order data when extending an unobstructed lift: a point of
/// the torsor direction for each J-basis vector.  Cochains must be
/// cocycles of the indicated bidegree; missing entries mean zero.
#[derive(Clone, Default)]
pub struct ExtensionChoice {
    /// `(p, q) = (2, 0)`: global bivector fields, shifting the products.
    pub bivector: Vec<SectionCochain>,
    /// `(p, q) = (1, 1)`: vector-valued cocycles, shifting the gluings.
    pub gluing: Vec<SectionCochain>,
    /// `(p, q) = (0, 2)`: function-valued cocycles, shifting the twist.
    pub twist: Vec<SectionCochain>,
}

impl ExtensionChoice {
    pub fn zero() -> Self {
        Default::default()
    }
}

/// Computes the staged obstruction classes of a candidate lift.
pub fn obstructions(cand: &CandidateLift) -> Result<ObstructionReport> {
    run(cand).map(|(report, _)| report)
}

/// Extends a deformation over a small extension.  Fails with
/// [`NcdefError::Obstructed`] when some obstruction class does not
/// vanish; otherwise returns a validated lift shifted by `choice`.
pub fn extend(
    d: &NCDeformation,
    ext: &Arc<SmallExtension>,
    choice: &ExtensionChoice,
) -> Result<NCDeformation> {
    let cand = super::lift_candidate(d, ext);
    let (report, repaired) = run(&cand)?;
    let mut data = match repaired {
        Some(data) => data,
        None => {
            return Err(NcdefError::Obstructed(format!(
                "obstruction at stage {:?}",
                report.obstructed.unwrap()
            )))
        }
    };
    apply_choice(&mut data, ext, choice)?;
    NCDeformation::new(data)
}

/// Shared engine: computes stages in order, repairing as it goes; returns
/// the repaired (valid) data when everything vanishes.
fn run(cand: &CandidateLift) -> Result<(ObstructionReport, Option<DeformationData>)> {
    let ext = &cand.ext;
    let cover = cand.data.cover.clone();
    let jd = ext.j_dim();
    let mut data = cand.data.clone();
    let mut stages = Vec::new();

    // ---- stage 1: per-chart associators ---------------------------------
    let mut f_parts: Vec<Vec<Cochain>> = Vec::new();
    let mut class1 = CechClass {
        p: 3,
        q: 0,
        per_j: vec![SectionCochain::zero(3, 0); jd],
    };
    for i in 0..cover.n_charts() {
        let parts = data.defect_f(i)?.j_cochains(ext)?;
        for (delta, f) in parts.iter().enumerate() {
            if !f.coboundary().is_zero() {
                return Err(NcdefError::IdentityViolation(format!(
                    "associator on chart {i} is not a Hochschild cocycle"
                )));
            }
            class1.per_j[delta].set(vec![i], f.hkr_class()?);
        }
        f_parts.push(parts);
    }
    for c in &class1.per_j {
        if !cech_d_sections(&cover, c)?.is_zero() {
            return Err(NcdefError::IdentityViolation(
                "associator classes are not transport-compatible".into(),
            ));
        }
    }
    let ok1 = class1.is_zero();
    stages.push(StageReport {
        stage: ObstructionStage::Associativity,
        class: class1,
        vanishes: ok1,
    });
    if !ok1 {
        return Ok((finish(stages, ObstructionStage::Associativity), None));
    }
    for (i, parts) in f_parts.iter().enumerate() {
        let sols = solve_retry_batch(parts)?;
        for (delta, (f, sol)) in parts.iter().zip(sols).enumerate() {
            if f.is_zero() {
                continue;
            }
            let mut b = sol;
            let wedge = b.wedge_symbol();
            if !wedge.is_zero() {
                b = b.sub(&hkr_inverse(&wedge, &field_hint(f))?);
            }
            add_correction(&mut data.mult[i], &ext.j_basis[delta], &b);
        }
    }
    for i in 0..cover.n_charts() {
        if !data.defect_f(i)?.is_zero() {
            return Err(NcdefError::IdentityViolation(format!(
                "associator repair left a residue on chart {i}"
            )));
        }
    }

    // ---- stage 2: gluing symbols ----------------------------------------
    let pairs = cover.chains(2);
    let mut class2 = CechClass {
        p: 2,
        q: 1,
        per_j: vec![SectionCochain::zero(2, 1); jd],
    };
    for pair in &pairs {
        let (i, j) = (pair[0], pair[1]);
        let slot_images = jacobian_inverse(&cover, i, j)?;
        let parts = data.defect_g(i, j)?.j_cochains(ext)?;
        for (delta, g) in parts.iter().enumerate() {
            if !g.coboundary().is_zero() {
                return Err(NcdefError::IdentityViolation(format!(
                    "gluing defect ({i},{j}) is not a cocycle with associative products"
                )));
            }
            class2.per_j[delta].set(vec![i, j], g.symbol_section(&slot_images));
        }
    }
    let mut primitives2 = Vec::new();
    let mut ok2 = true;
    for c in &class2.per_j {
        match is_coboundary(&cover, c)? {
            Some(beta) => primitives2.push(beta),
            None => {
                ok2 = false;
                primitives2.push(SectionCochain::zero(2, 0));
            }
        }
    }
    stages.push(StageReport {
        stage: ObstructionStage::GluingSymbol,
        class: class2,
        vanishes: ok2,
    });
    if !ok2 {
        return Ok((finish(stages, ObstructionStage::GluingSymbol), None));
    }
    for (delta, beta) in primitives2.iter().enumerate() {
        for i in 0..cover.n_charts() {
            if let Some(s) = beta.get(&[i]) {
                let b = hkr_inverse(s, &section_hint(s))?;
                add_correction(&mut data.mult[i], &ext.j_basis[delta], &b);
            }
        }
    }
    // with symbols gone, the gluing defects are exact: solve and absorb
    for pair in &pairs {
        let (i, j) = (pair[0], pair[1]);
        let slot_images = jacobian_inverse(&cover, i, j)?;
        let parts = data.defect_g(i, j)?.j_cochains(ext)?;
        let sols = solve_retry_batch(&parts)?;
        for (delta, (g, sol)) in parts.iter().zip(sols).enumerate() {
            if g.is_zero() {
                continue;
            }
            let mut c = sol;
            let symbol = c.symbol_section(&slot_images);
            if !symbol.is_zero() {
                c = c.sub(&derivation_cochain(&cover, i, j, &symbol)?);
            }
            add_correction(
                data.gluing.entry((i, j)).or_default(),
                &ext.j_basis[delta],
                &c,
            );
        }
    }
    for pair in &pairs {
        if !data.defect_g(pair[0], pair[1])?.is_zero() {
            return Err(NcdefError::IdentityViolation(format!(
                "gluing repair left a residue on ({},{})",
                pair[0], pair[1]
            )));
        }
    }

    // ---- stage 3 (twisted): twist compatibility -------------------------
    if data.is_twisted() {
        let mut class3 = CechClass {
            p: 0,
            q: 3,
            per_j: vec![SectionCochain::zero(0, 3); jd],
        };
        for ch in cover.chains(4) {
            let (i, j, k, l) = (ch[0], ch[1], ch[2], ch[3]);
            let parts = data.defect_sigma(i, j, k, l)?.j_parts(ext)?;
            let ring = &cover.charts[l].ring;
            for (delta, p) in parts.into_iter().enumerate() {
                if !p.is_zero() {
                    class3.per_j[delta].set(vec![i, j, k, l], Section::scalar(ring, p));
                }
            }
        }
        let mut primitives3 = Vec::new();
        let mut ok3 = true;
        for c in &class3.per_j {
            if !cech_d_sections(&cover, c)?.is_zero() {
                return Err(NcdefError::IdentityViolation(
                    "twist compatibility defect is not closed".into(),
                ));
            }
            match is_coboundary(&cover, c)? {
                Some(t) => primitives3.push(t),
                None => {
                    ok3 = false;
                    primitives3.push(SectionCochain::zero(0, 2));
                }
            }
        }
        stages.push(StageReport {
            stage: ObstructionStage::TwistCompatibility,
            class: class3,
            vanishes: ok3,
        });
        if !ok3 {
            return Ok((finish(stages, ObstructionStage::TwistCompatibility), None));
        }
        for (delta, prim) in primitives3.iter().enumerate() {
            for ch in cover.chains(3) {
                let (i, j, k) = (ch[0], ch[1], ch[2]);
                if let Some(s) = prim.get(&[i, j, k]) {
                    let poly = scalar_part(s);
                    let mut tau = data.tau(i, j, k);
                    for (&slot, coeff) in &ext.j_basis[delta].coords {
                        tau.add_comp(slot, poly.neg().scale(coeff));
                    }
                    data.set_tau(i, j, k, tau);
                }
            }
        }
        for ch in cover.chains(4) {
            if !data.defect_sigma(ch[0], ch[1], ch[2], ch[3])?.is_zero() {
                return Err(NcdefError::IdentityViolation(
                    "twist repair left a residue".into(),
                ));
            }
        }
    }

    // ---- stage 4: transitivity ------------------------------------------
    let triples = cover.chains(3);
    let mut class4 = CechClass {
        p: 1,
        q: 2,
        per_j: vec![SectionCochain::zero(1, 2); jd],
    };
    for ch in &triples {
        let (i, j, k) = (ch[0], ch[1], ch[2]);
        let slot_images = jacobian_inverse(&cover, i, k)?;
        let parts = data.defect_h(i, j, k)?.j_cochains(ext)?;
        for (delta, h) in parts.iter().enumerate() {
            if !h.coboundary().is_zero() {
                return Err(NcdefError::IdentityViolation(format!(
                    "transitivity defect ({i},{j},{k}) is not a derivation"
                )));
            }
            class4.per_j[delta].set(vec![i, j, k], h.symbol_section(&slot_images));
        }
    }
    let mut primitives4 = Vec::new();
    let mut ok4 = true;
    for c in &class4.per_j {
        if !cech_d_sections(&cover, c)?.is_zero() {
            return Err(NcdefError::IdentityViolation(
                "transitivity symbols are not closed".into(),
            ));
        }
        match is_coboundary(&cover, c)? {
            Some(g) => primitives4.push(g),
            None => {
                ok4 = false;
                primitives4.push(SectionCochain::zero(1, 1));
            }
        }
    }
    stages.push(StageReport {
        stage: ObstructionStage::Transitivity,
        class: class4,
        vanishes: ok4,
    });
    if !ok4 {
        return Ok((finish(stages, ObstructionStage::Transitivity), None));
    }
    for (delta, prim) in primitives4.iter().enumerate() {
        for pair in &pairs {
            let (i, j) = (pair[0], pair[1]);
            if let Some(s) = prim.get(&[i, j]) {
                let c = derivation_cochain(&cover, i, j, &s.neg())?;
                add_correction(
                    data.gluing.entry((i, j)).or_default(),
                    &ext.j_basis[delta],
                    &c,
                );
            }
        }
    }
    for ch in &triples {
        if !data.defect_h(ch[0], ch[1], ch[2])?.is_zero() {
            return Err(NcdefError::IdentityViolation(format!(
                "transitivity repair left a residue on {ch:?}"
            )));
        }
    }

    let report = ObstructionReport {
        stages,
        obstructed: None,
    };
    Ok((report, Some(data)))
}

fn finish(stages: Vec<StageReport>, at: ObstructionStage) -> ObstructionReport {
    ObstructionReport {
        stages,
        obstructed: Some(at),
    }
}

fn apply_choice(
    data: &mut DeformationData,
    ext: &SmallExtension,
    choice: &ExtensionChoice,
) -> Result<()> {
    let cover = data.cover.clone();
    let check = |cs: &[SectionCochain], p: usize, q: usize| -> Result<()> {
        if cs.is_empty() {
            return Ok(());
        }
        if cs.len() != ext.j_dim() {
            return Err(NcdefError::IncompatibleData(
                "extension choice must give one cochain per J-basis vector".into(),
            ));
        }
        for c in cs {
            if (c.p, c.q) != (p, q) {
                return Err(NcdefError::IncompatibleData(format!(
                    "extension choice of bidegree ({},{}), expected ({p},{q})",
                    c.p, c.q
                )));
            }
            if !cech_d_sections(&cover, c)?.is_zero() {
                return Err(NcdefError::NotClosed("extension choice cochain".into()));
            }
        }
        Ok(())
    };
    check(&choice.bivector, 2, 0)?;
    check(&choice.gluing, 1, 1)?;
    check(&choice.twist, 0, 2)?;
    if !choice.twist.is_empty() && !data.is_twisted() {
        return Err(NcdefError::IncompatibleData(
            "twist choice on an untwisted deformation".into(),
        ));
    }
    for (delta, c) in choice.bivector.iter().enumerate() {
        for i in 0..cover.n_charts() {
            if let Some(s) = c.get(&[i]) {
                let b = hkr_inverse(s, &section_hint(s))?;
                add_correction(&mut data.mult[i], &ext.j_basis[delta], &b);
            }
        }
    }
    for (delta, c) in choice.gluing.iter().enumerate() {
        for pair in cover.chains(2) {
            let (i, j) = (pair[0], pair[1]);
            if let Some(s) = c.get(&[i, j]) {
                let op = derivation_cochain(&cover, i, j, s)?;
                add_correction(
                    data.gluing.entry((i, j)).or_default(),
                    &ext.j_basis[delta],
                    &op,
                );
            }
        }
    }
    for (delta, c) in choice.twist.iter().enumerate() {
        for ch in cover.chains(3) {
            let (i, j, k) = (ch[0], ch[1], ch[2]);
            if let Some(s) = c.get(&[i, j, k]) {
                let poly = scalar_part(s);
                let mut tau = data.tau(i, j, k);
                for (&slot, coeff) in &ext.j_basis[delta].coords {
                    tau.add_comp(slot, poly.scale(coeff));
                }
                data.set_tau(i, j, k, tau);
            }
        }
    }
    Ok(())
}

/// The order-1 operator `x ↦ w(φ_ji(x))` for a vector field `w` on chart
/// j, as a transported arity-1 cochain `A_i → A_j`.
pub fn derivation_cochain(
    cover: &Cover,
    i: ChartId,
    j: ChartId,
    w: &Section,
) -> Result<Cochain> {
    assert_eq!(w.p, 1, "derivation_cochain takes a vector field");
    let images = cover.transport_images(i, j)?;
    let src = &cover.charts[i].ring;
    let tgt = &cover.charts[j].ring;
    let nv = src.nvars();
    let mut out = Cochain::zero(1, src, tgt, images.clone());
    for a in 0..nv {
        let mut coeff = MultiPoly::zero(tgt);
        for (key, s) in &w.terms {
            coeff = coeff.add(&s.mul(&images[a].derivative(key[0])));
        }
        out.add_term(vec![unit_exp(nv, a, 1)], coeff);
    }
    Ok(out)
}

/// Adds `j_elem ⊗ c` to a correction map, distributing the R′-coordinates
/// of the kernel element.
fn add_correction(map: &mut CorrectionMap, j_elem: &crate::artin::ArtinElem, c: &Cochain) {
    for (&slot, coeff) in &j_elem.coords {
        let scaled = c.scale(coeff);
        match map.get_mut(&slot) {
            Some(e) => {
                *e = e.add(&scaled);
                if e.is_zero() {
                    map.remove(&slot);
                }
            }
            None => {
                if !scaled.is_zero() {
                    map.insert(slot, scaled);
                }
            }
        }
    }
}

/// Solves `dB_δ = c_δ` for all kernel slots of a chart or pair at once —
/// the cochains share one shape, so a single elimination serves every
/// right-hand side.  Zero inputs get zero primitives; the search bounds
/// widen a few times if needed.
fn solve_retry_batch(cs: &[Cochain]) -> Result<Vec<Cochain>> {
    if cs.is_empty() {
        return Ok(Vec::new());
    }
    let mut bounds = SolveBounds { order: 1, degree: 1 };
    for c in cs {
        let b = bounds_for(c);
        bounds.order = bounds.order.max(b.order);
        bounds.degree = bounds.degree.max(b.degree);
    }
    for _ in 0..3 {
        match solve_coboundary_batch(cs, bounds.order, bounds.degree) {
            Ok(sols) => {
                return sols
                    .into_iter()
                    .map(|s| {
                        s.ok_or_else(|| {
                            NcdefError::IdentityViolation(
                                "vanishing symbol but no Hochschild primitive".into(),
                            )
                        })
                    })
                    .collect()
            }
            Err(NcdefError::BoundsTooSmall { .. }) => {
                bounds.order += 1;
                bounds.degree += 2;
            }
            Err(e) => return Err(e),
        }
    }
    Err(NcdefError::BoundsTooSmall {
        order: bounds.order,
        degree: bounds.degree,
    })
}

/// Search bounds derived from the cocycle's own shape.
pub fn bounds_for(c: &Cochain) -> SolveBounds {
    let mut order = 1usize;
    let mut degree = 1i64;
    for (slots, coeff) in &c.terms {
        let o: i64 = slots.iter().map(|d| d.iter().sum::<i64>()).sum();
        order = order.max(o as usize);
        degree = degree.max(coeff.laurent_degree() + 1);
    }
    SolveBounds { order, degree }
}

fn field_hint(c: &Cochain) -> Scalar {
    c.terms
        .values()
        .flat_map(|p| p.terms.values())
        .next()
        .cloned()
        .unwrap_or_else(Scalar::one)
}

fn section_hint(s: &Section) -> Scalar {
    s.terms
        .values()
        .flat_map(|p| p.terms.values())
        .next()
        .cloned()
        .unwrap_or_else(Scalar::one)
}

fn scalar_part(s: &Section) -> MultiPoly {
    assert_eq!(s.p, 0);
    s.terms
        .get(&Vec::new())
        .cloned()
        .unwrap_or_else(|| MultiPoly::zero(&s.ring))
}
