//! Gluing deformations over fiber products of Artin bases, and the
//! truncated semi-universal base: parameters from first-order data,
//! relations appended degree by degree from obstruction coordinates.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::artin::{
    artin_quotient, elem_basis, fiber_product, small_extension, AlgebraMap, ArtinElem,
    ArtinLocalAlgebra,
};
use crate::error::{NcdefError, Result};
use crate::geometry::cohomology::{sheaf_cohomology, SectionCochain, Window};
use crate::geometry::{ChartId, Cover};
use crate::hochschild::{hkr_inverse, Cochain};
use crate::linalg::Matrix;
use crate::poly::{Exp, MultiPoly, PolyRing};
use crate::scalar::Scalar;

use super::equiv::{apply_iso_data, Equivalence};
use super::obstruct::{derivation_cochain, ExtensionChoice, ObstructionStage};
use super::relem::RElem;
use super::{lift_candidate, CorrectionMap, DeformationData, NCDeformation, Twist};

// ---- gluing over fiber products -------------------------------------------

/// Pointwise solver for coefficients of the fiber product: finds `x` with
/// `π_1(x) = v_1` and `π_2(x) = v_2`.
struct PairSolver {
    rp: Arc<ArtinLocalAlgebra>,
    pi1: AlgebraMap,
    pi2: AlgebraMap,
    stacked: Matrix,
}

impl PairSolver {
    fn new(
        rp: &Arc<ArtinLocalAlgebra>,
        r1: &Arc<ArtinLocalAlgebra>,
        r2: &Arc<ArtinLocalAlgebra>,
    ) -> Result<Self> {
        let pi1 = AlgebraMap::identity_params(rp.clone(), r1.clone())?;
        let pi2 = AlgebraMap::identity_params(rp.clone(), r2.clone())?;
        let m1 = pi1.matrix();
        let m2 = pi2.matrix();
        let mut stacked = Matrix::zero(r1.dim() + r2.dim(), rp.dim());
        for c in 0..rp.dim() {
            for r in 0..r1.dim() {
                stacked.set(r, c, m1.at(r, c).clone());
            }
            for r in 0..r2.dim() {
                stacked.set(r1.dim() + r, c, m2.at(r, c).clone());
            }
        }
        Ok(PairSolver {
            rp: rp.clone(),
            pi1,
            pi2,
            stacked,
        })
    }

    fn solve(&self, v1: &ArtinElem, v2: &ArtinElem) -> Result<ArtinElem> {
        let mut rhs = vec![Scalar::zero(); self.pi1.tgt.dim() + self.pi2.tgt.dim()];
        for (&s, c) in &v1.coords {
            rhs[s] = c.clone();
        }
        for (&s, c) in &v2.coords {
            rhs[self.pi1.tgt.dim() + s] = c.clone();
        }
        let x = self.stacked.solve(&rhs).ok_or_else(|| {
            NcdefError::NotGluable("coefficients have no common preimage".into())
        })?;
        let mut out = crate::artin::elem_zero(&self.rp);
        for (slot, c) in x.into_iter().enumerate() {
            if !c.is_zero() {
                out.coords.insert(slot, c);
            }
        }
        Ok(out)
    }
}

/// Per-term coefficient elements of a correction map.
fn corr_by_key(
    map: Option<&CorrectionMap>,
    alg: &Arc<ArtinLocalAlgebra>,
) -> BTreeMap<(Vec<Exp>, Exp), ArtinElem> {
    let mut out: BTreeMap<(Vec<Exp>, Exp), ArtinElem> = BTreeMap::new();
    let Some(map) = map else { return out };
    for (&slot, c) in map {
        for (slots, coeff) in &c.terms {
            for (e, v) in &coeff.terms {
                let entry = out
                    .entry((slots.clone(), e.clone()))
                    .or_insert_with(|| crate::artin::elem_zero(alg));
                *entry = entry.add(&elem_basis(alg, slot).scale(v));
            }
        }
    }
    out
}

fn merged_correction(
    solver: &PairSolver,
    shape: &Cochain,
    m1: Option<&CorrectionMap>,
    m2: Option<&CorrectionMap>,
) -> Result<CorrectionMap> {
    let k1 = corr_by_key(m1, &solver.pi1.tgt);
    let k2 = corr_by_key(m2, &solver.pi2.tgt);
    let zero1 = crate::artin::elem_zero(&solver.pi1.tgt);
    let zero2 = crate::artin::elem_zero(&solver.pi2.tgt);
    let keys: std::collections::BTreeSet<_> = k1.keys().chain(k2.keys()).cloned().collect();
    let mut out = CorrectionMap::new();
    for key in keys {
        let x = solver.solve(k1.get(&key).unwrap_or(&zero1), k2.get(&key).unwrap_or(&zero2))?;
        for (&slot, c) in &x.coords {
            let e = out
                .entry(slot)
                .or_insert_with(|| Cochain::zero(shape.arity, &shape.src, &shape.tgt, shape.transport.clone()));
            e.add_term(
                key.0.clone(),
                MultiPoly::monomial(&shape.tgt, key.1.clone(), c.clone()),
            );
        }
    }
    out.retain(|_, c| !c.is_zero());
    Ok(out)
}

/// Lifts an equivalence over `R0` through a surjection `π: R → R0`.
fn lift_equivalence(
    eq: &Equivalence,
    r: &Arc<ArtinLocalAlgebra>,
    r0: &Arc<ArtinLocalAlgebra>,
) -> Result<Equivalence> {
    let pi = AlgebraMap::identity_params(r.clone(), r0.clone())?;
    let m = pi.matrix();
    let lift_slot = |slot: usize| -> Result<ArtinElem> {
        let mut rhs = vec![Scalar::zero(); r0.dim()];
        rhs[slot] = Scalar::one();
        let x = m
            .solve(&rhs)
            .ok_or_else(|| NcdefError::NotGluable("identification does not lift".into()))?;
        let mut out = crate::artin::elem_zero(r);
        for (s, c) in x.into_iter().enumerate() {
            if !c.is_zero() {
                out.coords.insert(s, c);
            }
        }
        Ok(out)
    };
    let mut out = Equivalence {
        theta: vec![BTreeMap::new(); eq.theta.len()],
        rho: BTreeMap::new(),
    };
    for (i, map) in eq.theta.iter().enumerate() {
        for (&slot, c) in map {
            for (&s, v) in &lift_slot(slot)?.coords {
                let e = out.theta[i]
                    .entry(s)
                    .or_insert_with(|| Cochain::zero(c.arity, &c.src, &c.tgt, c.transport.clone()));
                *e = e.add(&c.scale(v));
            }
        }
    }
    for (&pair, rho) in &eq.rho {
        let mut lifted = RElem::one(r, &rho.ring);
        for (&slot, p) in &rho.comps {
            if slot == 0 {
                continue;
            }
            for (&s, v) in &lift_slot(slot)?.coords {
                lifted.add_comp(s, p.scale(v));
            }
        }
        out.rho.insert(pair, lifted);
    }
    Ok(out)
}

/// Glues two deformations along an identification of their common
/// truncation, producing a deformation over the fiber product base.
pub fn glue(
    d1: &NCDeformation,
    d2: &NCDeformation,
    r0: &Arc<ArtinLocalAlgebra>,
    iso: &Equivalence,
) -> Result<NCDeformation> {
    if !d1.cover().same_cover(d2.cover()) {
        return Err(NcdefError::IncompatibleData("covers differ".into()));
    }
    if d1.data().is_twisted() != d2.data().is_twisted() {
        return Err(NcdefError::IncompatibleData(
            "cannot glue twisted with untwisted data".into(),
        ));
    }
    let cover = d1.cover().clone();
    // check the identification over R0
    let down1 = AlgebraMap::identity_params(d1.base().clone(), r0.clone())?;
    let down2 = AlgebraMap::identity_params(d2.base().clone(), r0.clone())?;
    let t1 = d1.data().map_base(&down1)?;
    let t2 = d2.data().map_base(&down2)?;
    let moved = apply_iso_data(&t1, iso).map_err(|e| {
        NcdefError::NotGluable(format!("identification is not an equivalence: {e}"))
    })?;
    if !moved.same_data(&t2) {
        return Err(NcdefError::NotGluable(
            "identification does not match the truncations".into(),
        ));
    }
    // move d1 so the truncations agree on the nose
    let lifted = lift_equivalence(iso, d1.base(), r0)?;
    let g1 = apply_iso_data(d1.data(), &lifted)?;
    let g2 = d2.data();

    let rp = fiber_product(d1.base(), d2.base(), r0)?;
    let solver = PairSolver::new(&rp, d1.base(), d2.base())?;
    let mut out = DeformationData {
        base: rp.clone(),
        cover: cover.clone(),
        mult: Vec::new(),
        gluing: BTreeMap::new(),
        twist: None,
    };
    for i in 0..cover.n_charts() {
        let ring = &cover.charts[i].ring;
        let shape = Cochain::zero_endo(2, ring);
        out.mult
            .push(merged_correction(&solver, &shape, Some(&g1.mult[i]), Some(&g2.mult[i]))?);
    }
    for pair in cover.chains(2) {
        let (i, j) = (pair[0], pair[1]);
        let shape = Cochain::zero(
            1,
            &cover.charts[i].ring,
            &cover.charts[j].ring,
            cover.transport_images(i, j)?,
        );
        let merged = merged_correction(
            &solver,
            &shape,
            g1.gluing.get(&(i, j)),
            g2.gluing.get(&(i, j)),
        )?;
        if !merged.is_empty() {
            out.gluing.insert((i, j), merged);
        }
    }
    if g1.is_twisted() {
        let mut tau = BTreeMap::new();
        for ch in cover.chains(3) {
            let key = (ch[0], ch[1], ch[2]);
            let ring = &cover.charts[ch[2]].ring;
            let v1 = g1.tau(key.0, key.1, key.2);
            let v2 = g2.tau(key.0, key.1, key.2);
            let mut merged = RElem::zero(&rp, ring);
            let exps: std::collections::BTreeSet<Exp> = v1
                .comps
                .values()
                .chain(v2.comps.values())
                .flat_map(|p| p.terms.keys().cloned())
                .collect();
            for e in exps {
                let collect = |v: &RElem, alg: &Arc<ArtinLocalAlgebra>| -> ArtinElem {
                    let mut out = crate::artin::elem_zero(alg);
                    for (&slot, p) in &v.comps {
                        if let Some(c) = p.terms.get(&e) {
                            out = out.add(&elem_basis(alg, slot).scale(c));
                        }
                    }
                    out
                };
                let x = solver.solve(
                    &collect(&v1, &solver.pi1.tgt),
                    &collect(&v2, &solver.pi2.tgt),
                )?;
                for (&slot, c) in &x.coords {
                    merged.add_comp(slot, MultiPoly::monomial(ring, e.clone(), c.clone()));
                }
            }
            let one = RElem::one(&rp, ring);
            if merged != one {
                tau.insert(key, merged);
            }
        }
        out.twist = Some(Twist { tau });
    }
    let glued = NCDeformation::new(out)?;
    // the construction is a section of both truncations; check it
    let back1 = glued.data().map_base(&solver.pi1)?;
    let back2 = glued.data().map_base(&solver.pi2)?;
    if !back1.same_data(&g1) || !back2.same_data(g2) {
        return Err(NcdefError::NotGluable(
            "glued deformation does not restrict to the factors".into(),
        ));
    }
    Ok(glued)
}

// ---- truncated semi-universal base ----------------------------------------

/// A truncated hull: parameter names, relations (zero entries meaning "no
/// relation found up to the truncation order"), the Artin base they
/// present, and the family over it.
pub struct HullResult {
    pub params: Vec<String>,
    pub relations: Vec<MultiPoly>,
    pub base: Arc<ArtinLocalAlgebra>,
    pub family: NCDeformation,
    /// Tangent dimensions `(dim H⁰(∧²T), dim Ȟ¹(T), dim Ȟ²(O))`.
    pub t1_dims: (usize, usize, usize),
    /// Obstruction dimensions `(dim H⁰(∧³T), dim Ȟ¹(∧²T), dim Ȟ²(T), dim Ȟ³(O))`.
    pub t2_dims: (usize, usize, usize, usize),
}

struct T2Basis {
    /// `(p, q, representative)` per direction.
    dirs: Vec<(usize, usize, SectionCochain)>,
    cap: Option<i64>,
}

impl T2Basis {
    /// Coordinates of a closed cochain's class on the directions of
    /// matching bidegree; `None` when the class escapes the span (which
    /// would mean the representative basis is not a basis).
    fn coordinates(&self, cover: &Cover, c: &SectionCochain) -> Result<Vec<Scalar>> {
        let mut out = vec![Scalar::zero(); self.dirs.len()];
        if c.is_zero() {
            return Ok(out);
        }
        let idx: Vec<usize> = self
            .dirs
            .iter()
            .enumerate()
            .filter(|(_, (p, q, _))| (*p, *q) == (c.p, c.q))
            .map(|(n, _)| n)
            .collect();
        let mut chars = c.characters(cover);
        for &n in &idx {
            chars.extend(self.dirs[n].2.characters(cover));
        }
        for chi in chars {
            let cc = crate::geometry::cohomology::char_complex(cover, c.p, chi.clone(), self.cap, c.q + 1);
            let target = cc.coords(&c.character_part(cover, &chi))?;
            if target.iter().all(|v| v.is_zero()) {
                continue;
            }
            // columns: representatives of this character, then coboundaries
            let mut cols: Vec<Vec<Scalar>> = Vec::new();
            let mut col_dirs: Vec<Option<usize>> = Vec::new();
            for &n in &idx {
                let part = self.dirs[n].2.character_part(cover, &chi);
                cols.push(cc.coords(&part)?);
                col_dirs.push(Some(n));
            }
            if c.q > 0 {
                let dm = &cc.d[c.q - 1];
                for b in 0..dm.cols {
                    cols.push((0..dm.rows).map(|r| dm.at(r, b).clone()).collect());
                    col_dirs.push(None);
                }
            }
            let mut m = Matrix::zero(target.len(), cols.len());
            for (j, col) in cols.iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    m.set(r, j, v.clone());
                }
            }
            let x = m.solve(&target).ok_or_else(|| {
                NcdefError::IdentityViolation(
                    "obstruction class escapes the chosen basis".into(),
                )
            })?;
            for (j, v) in x.into_iter().enumerate() {
                if let Some(n) = col_dirs[j] {
                    out[n] += v;
                }
            }
        }
        Ok(out)
    }
}

/// Computes the truncated semi-universal base of the cover: parameters
/// from first-order deformations, relations accumulated degree by degree
/// from obstruction-class coordinates, and the family over the result.
pub fn hull(
    cover: &Arc<Cover>,
    twisted: bool,
    order: usize,
    window: Option<Window>,
) -> Result<HullResult> {
    assert!(order >= 1);
    let h2t = sheaf_cohomology(cover, 2, window)?;
    let h1t = sheaf_cohomology(cover, 1, window)?;
    let h0t = sheaf_cohomology(cover, 0, window)?;
    let h3t = sheaf_cohomology(cover, 3, window)?;
    let cap = match window {
        Some(Window::DegreeCap(c)) => Some(c),
        _ => None,
    };

    // tangent directions
    let mut gens: Vec<(usize, usize, SectionCochain)> = Vec::new();
    for r in &h2t.reps[0] {
        gens.push((2, 0, r.clone()));
    }
    for r in &h1t.reps[1] {
        gens.push((1, 1, r.clone()));
    }
    let t1_dims = (
        h2t.h[0],
        h1t.h[1],
        if twisted { h0t.h[2] } else { 0 },
    );
    if twisted {
        for r in &h0t.reps[2] {
            gens.push((0, 2, r.clone()));
        }
    }
    let n = gens.len();

    // obstruction directions
    let mut dirs: Vec<(usize, usize, SectionCochain)> = Vec::new();
    for r in &h3t.reps[0] {
        dirs.push((3, 0, r.clone()));
    }
    for r in &h2t.reps[1] {
        dirs.push((2, 1, r.clone()));
    }
    for r in &h1t.reps[2] {
        dirs.push((1, 2, r.clone()));
    }
    let t2_dims = (
        h3t.h[0],
        h2t.h[1],
        h1t.h[2],
        if twisted { h0t.h[3] } else { 0 },
    );
    if twisted {
        for r in &h0t.reps[3] {
            dirs.push((0, 3, r.clone()));
        }
    }
    let t2 = T2Basis { dirs, cap };
    let m = t2.dirs.len();

    let params: Vec<String> = (1..=n.max(1)).map(|i| format!("t{i}")).collect();
    let names: Vec<&str> = params.iter().map(|s| s.as_str()).collect();
    let pring = PolyRing::polynomial(&names);
    let mut relations: Vec<MultiPoly> = vec![MultiPoly::zero(&pring); m];

    if n == 0 {
        // rigid: the hull is the residue field
        let base = artin_quotient(&names, vec![MultiPoly::var(&pring, 0)], 1)?;
        let data = if twisted {
            DeformationData::trivial_twisted(&base, cover)
        } else {
            DeformationData::trivial(&base, cover)
        };
        return Ok(HullResult {
            params: vec![],
            relations: vec![],
            base: base.clone(),
            family: NCDeformation::new(data)?,
            t1_dims,
            t2_dims,
        });
    }

    // first-order family
    let r1 = artin_quotient(&names, vec![], 1)?;
    let mut data = if twisted {
        DeformationData::trivial_twisted(&r1, cover)
    } else {
        DeformationData::trivial(&r1, cover)
    };
    for (nu, (p, q, rep)) in gens.iter().enumerate() {
        let slot = (0..r1.dim())
            .find(|&s| *r1.basis_exp(s) == crate::poly::unit_exp(n, nu, 1))
            .expect("first-order slot");
        match (p, q) {
            (2, 0) => {
                for i in 0..cover.n_charts() {
                    if let Some(s) = rep.get(&[i]) {
                        let hint = s
                            .terms
                            .values()
                            .flat_map(|f| f.terms.values())
                            .next()
                            .cloned()
                            .unwrap_or_else(Scalar::one);
                        let b = hkr_inverse(s, &hint)?;
                        data.mult[i].insert(slot, b);
                    }
                }
            }
            (1, 1) => {
                for pair in cover.chains(2) {
                    let (i, j) = (pair[0], pair[1]);
                    if let Some(s) = rep.get(&[i, j]) {
                        let op = derivation_cochain(cover, i, j, s)?;
                        data.gluing.entry((i, j)).or_default().insert(slot, op);
                    }
                }
            }
            (0, 2) => {
                for ch in cover.chains(3) {
                    let key: (ChartId, ChartId, ChartId) = (ch[0], ch[1], ch[2]);
                    if let Some(s) = rep.get(&ch) {
                        let ring = &cover.charts[key.2].ring;
                        let poly = s
                            .terms
                            .get(&Vec::new())
                            .cloned()
                            .unwrap_or_else(|| MultiPoly::zero(ring));
                        let mut tau = data.tau(key.0, key.1, key.2);
                        tau.add_comp(slot, poly);
                        data.set_tau(key.0, key.1, key.2, tau);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    let mut family = NCDeformation::new(data)?;

    // lift degree by degree, appending relations on obstruction
    for d in 2..=order {
        let mut done = false;
        for _attempt in 0..=m + 1 {
            let rels: Vec<MultiPoly> = relations.iter().filter(|f| !f.is_zero()).cloned().collect();
            let rd = artin_quotient(&names, rels, d)?;
            let map = AlgebraMap::identity_params(rd.clone(), family.base().clone())?;
            let ext = Arc::new(small_extension(rd, family.base().clone(), map)?);
            match super::obstruct::extend(&family, &ext, &ExtensionChoice::zero()) {
                Ok(f) => {
                    family = f;
                    done = true;
                    break;
                }
                Err(NcdefError::Obstructed(_)) => {
                    let report = super::obstruct::obstructions(&lift_candidate(&family, &ext))?;
                    let stage = report.obstructed.expect("extend failed");
                    let sr = report
                        .stages
                        .iter()
                        .find(|s| s.stage == stage)
                        .expect("stage report");
                    let mut progressed = false;
                    for (delta, class) in sr.class.per_j.iter().enumerate() {
                        if class.is_zero() {
                            continue;
                        }
                        let coords = t2.coordinates(cover, class)?;
                        let mono = monomial_of(&ext.j_basis[delta], &pring)?;
                        for (dir, v) in coords.into_iter().enumerate() {
                            if !v.is_zero() {
                                relations[dir] =
                                    relations[dir].add(&mono.scale(&v));
                                progressed = true;
                            }
                        }
                    }
                    if !progressed {
                        return Err(NcdefError::Obstructed(format!(
                            "obstruction at degree {d}, stage {stage:?}, with no class coordinates"
                        )));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        if !done {
            return Err(NcdefError::Obstructed(format!(
                "relation updates did not converge at degree {d}"
            )));
        }
    }
    // suppress the untouched rows of the relation vector
    let relations: Vec<MultiPoly> = relations.into_iter().filter(|f| !f.is_zero()).collect();
    Ok(HullResult {
        params,
        relations,
        base: family.base().clone(),
        family,
        t1_dims,
        t2_dims,
    })
}

/// The J-basis element as a parameter-ring monomial (kernel generators of
/// monomial truncations are single monomials).
fn monomial_of(e: &ArtinElem, pring: &Arc<PolyRing>) -> Result<MultiPoly> {
    if e.coords.len() != 1 {
        return Err(NcdefError::Unsupported(
            "kernel basis element is not a single monomial".into(),
        ));
    }
    let (&slot, c) = e.coords.iter().next().unwrap();
    Ok(MultiPoly::monomial(
        pring,
        e.alg.basis_exp(slot).clone(),
        c.clone(),
    ))
}

#[allow(unused)]
fn stage_bidegree(stage: ObstructionStage) -> (usize, usize) {
    match stage {
        ObstructionStage::Associativity => (3, 0),
        ObstructionStage::GluingSymbol => (2, 1),
        ObstructionStage::TwistCompatibility => (0, 3),
        ObstructionStage::Transitivity => (1, 2),
    }
}
