//! Elements and polydifferential operators with Artin-ring coefficients:
//! the raw material of deformed chart algebras `R ⊗ A_i`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::artin::{elem_basis, elem_zero, ArtinElem, ArtinLocalAlgebra, SmallExtension};
use crate::error::Result;
use crate::hochschild::{apply_multi_derivative, compose, Cochain};
use crate::poly::{Exp, MultiPoly, PolyRing};
use crate::scalar::Scalar;

/// An element of `R ⊗ A`: chart-ring coefficients indexed by the basis of
/// the Artin algebra.
#[derive(Clone, PartialEq)]
pub struct RElem {
    pub alg: Arc<ArtinLocalAlgebra>,
    pub ring: Arc<PolyRing>,
    pub comps: BTreeMap<usize, MultiPoly>,
}

impl RElem {
    pub fn zero(alg: &Arc<ArtinLocalAlgebra>, ring: &Arc<PolyRing>) -> Self {
        RElem {
            alg: alg.clone(),
            ring: ring.clone(),
            comps: BTreeMap::new(),
        }
    }

    /// `1 ⊗ p`.
    pub fn from_poly(alg: &Arc<ArtinLocalAlgebra>, p: &MultiPoly) -> Self {
        let mut out = RElem::zero(alg, &p.ring);
        out.add_comp(0, p.clone());
        out
    }

    pub fn one(alg: &Arc<ArtinLocalAlgebra>, ring: &Arc<PolyRing>) -> Self {
        RElem::from_poly(alg, &MultiPoly::one(ring))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn add_comp(&mut self, slot: usize, p: MultiPoly) {
        if p.is_zero() {
            return;
        }
        let e = self
            .comps
            .entry(slot)
            .or_insert_with(|| MultiPoly::zero(&self.ring));
        *e = e.add(&p);
        if e.is_zero() {
            self.comps.remove(&slot);
        }
    }

    pub fn add(&self, rhs: &RElem) -> RElem {
        let mut out = self.clone();
        for (&s, p) in &rhs.comps {
            out.add_comp(s, p.clone());
        }
        out
    }

    pub fn neg(&self) -> RElem {
        let mut out = RElem::zero(&self.alg, &self.ring);
        for (&s, p) in &self.comps {
            out.comps.insert(s, p.neg());
        }
        out
    }

    pub fn sub(&self, rhs: &RElem) -> RElem {
        self.add(&rhs.neg())
    }

    /// Multiplies by an element of R.
    pub fn scale_artin(&self, r: &ArtinElem) -> RElem {
        let mut out = RElem::zero(&self.alg, &self.ring);
        for (&s, p) in &self.comps {
            let prod = r.mul(&elem_basis(&self.alg, s));
            for (&t, c) in &prod.coords {
                out.add_comp(t, p.scale(c));
            }
        }
        out
    }

    /// The part with coefficients in the maximal ideal.
    pub fn m_part(&self) -> RElem {
        let mut out = RElem::zero(&self.alg, &self.ring);
        for (&s, p) in &self.comps {
            if self.alg.basis_degree(s) >= 1 {
                out.comps.insert(s, p.clone());
            }
        }
        out
    }

    /// Splits into J-basis coordinates; errors when some coefficient does
    /// not lie in J.
    pub fn j_parts(&self, ext: &SmallExtension) -> Result<Vec<MultiPoly>> {
        assert_eq!(self.alg, ext.source);
        let mut out = vec![MultiPoly::zero(&self.ring); ext.j_dim()];
        let mut by_exp: BTreeMap<Exp, ArtinElem> = BTreeMap::new();
        for (&s, p) in &self.comps {
            for (e, c) in &p.terms {
                let entry = by_exp
                    .entry(e.clone())
                    .or_insert_with(|| elem_zero(&self.alg));
                *entry = entry.add(&elem_basis(&self.alg, s).scale(c));
            }
        }
        for (e, r) in by_exp {
            for (delta, c) in ext.j_coords(&r)?.into_iter().enumerate() {
                if !c.is_zero() {
                    out[delta].add_term(e.clone(), c);
                }
            }
        }
        Ok(out)
    }

    /// Pushes coefficients through a base change `R → R1`.
    pub fn map_base(&self, map: &crate::artin::AlgebraMap) -> RElem {
        let mut out = RElem::zero(&map.tgt, &self.ring);
        for (&s, p) in &self.comps {
            for (&t, c) in &map.apply_basis(s).coords {
                out.add_comp(t, p.scale(c));
            }
        }
        out
    }
}

impl std::fmt::Debug for RElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&s, p) in &self.comps {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono = MultiPoly::monomial(
                &self.alg.ring,
                self.alg.basis_exp(s).clone(),
                Scalar::one(),
            );
            write!(f, "({mono})⊗({p})")?;
        }
        Ok(())
    }
}

/// A polydifferential cochain with coefficients in an Artin algebra:
/// `Σ (basis slot) ⊗ (plain cochain)`, all components sharing one shape.
#[derive(Clone)]
pub struct RCochain {
    pub alg: Arc<ArtinLocalAlgebra>,
    pub arity: usize,
    pub src: Arc<PolyRing>,
    pub tgt: Arc<PolyRing>,
    pub transport: Vec<MultiPoly>,
    pub comps: BTreeMap<usize, Cochain>,
}

impl RCochain {
    pub fn zero(
        alg: &Arc<ArtinLocalAlgebra>,
        arity: usize,
        src: &Arc<PolyRing>,
        tgt: &Arc<PolyRing>,
        transport: Vec<MultiPoly>,
    ) -> Self {
        RCochain {
            alg: alg.clone(),
            arity,
            src: src.clone(),
            tgt: tgt.clone(),
            transport,
            comps: BTreeMap::new(),
        }
    }

    pub fn zero_cochain(&self) -> Cochain {
        Cochain::zero(self.arity, &self.src, &self.tgt, self.transport.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|c| c.is_zero())
    }

    pub fn add_comp(&mut self, slot: usize, c: &Cochain) {
        if c.is_zero() {
            return;
        }
        assert_eq!(c.arity, self.arity);
        assert_eq!(c.transport, self.transport);
        let zero = self.zero_cochain();
        let e = self.comps.entry(slot).or_insert(zero);
        *e = e.add(c);
        if e.is_zero() {
            self.comps.remove(&slot);
        }
    }

    pub fn add(&self, rhs: &RCochain) -> RCochain {
        let mut out = self.clone();
        for (&s, c) in &rhs.comps {
            out.add_comp(s, c);
        }
        out
    }

    pub fn neg(&self) -> RCochain {
        let mut out = RCochain::zero(&self.alg, self.arity, &self.src, &self.tgt, self.transport.clone());
        for (&s, c) in &self.comps {
            out.comps.insert(s, c.neg());
        }
        out
    }

    pub fn sub(&self, rhs: &RCochain) -> RCochain {
        self.add(&rhs.neg())
    }

    /// Adds `r ⊗ c` distributing the Artin element over basis slots.
    pub fn add_scaled(&mut self, r: &ArtinElem, c: &Cochain) {
        for (&t, k) in &r.coords {
            self.add_comp(t, &c.scale(k));
        }
    }

    /// Splits into J-basis-indexed plain cochains; errors when some term
    /// coefficient does not lie in J.
    pub fn j_cochains(&self, ext: &SmallExtension) -> Result<Vec<Cochain>> {
        assert_eq!(self.alg, ext.source);
        let mut out = vec![self.zero_cochain(); ext.j_dim()];
        let mut by_key: BTreeMap<(Vec<Exp>, Exp), ArtinElem> = BTreeMap::new();
        for (&s, c) in &self.comps {
            for (slots, coeff) in &c.terms {
                for (e, v) in &coeff.terms {
                    let entry = by_key
                        .entry((slots.clone(), e.clone()))
                        .or_insert_with(|| elem_zero(&self.alg));
                    *entry = entry.add(&elem_basis(&self.alg, s).scale(v));
                }
            }
        }
        for ((slots, e), r) in by_key {
            for (delta, v) in ext.j_coords(&r)?.into_iter().enumerate() {
                if !v.is_zero() {
                    out[delta].add_term(slots.clone(), MultiPoly::monomial(&self.tgt, e.clone(), v));
                }
            }
        }
        Ok(out)
    }

    /// Pushes coefficients through a base change.
    pub fn map_base(&self, map: &crate::artin::AlgebraMap) -> RCochain {
        let mut out = RCochain::zero(&map.tgt, self.arity, &self.src, &self.tgt, self.transport.clone());
        for (&s, c) in &self.comps {
            out.add_scaled(&map.apply_basis(s), c);
        }
        out
    }
}

impl std::fmt::Debug for RCochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&s, c) in &self.comps {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono = MultiPoly::monomial(
                &self.alg.ring,
                self.alg.basis_exp(s).clone(),
                Scalar::one(),
            );
            write!(f, "({mono})⊗[{c:?}]")?;
        }
        Ok(())
    }
}

/// `outer ∘ (inner_1 ⊗ … ⊗ inner_m)` with Artin-coefficient mixing.
pub fn rc_compose(outer: &RCochain, inners: &[&RCochain]) -> Result<RCochain> {
    assert_eq!(outer.arity, inners.len());
    let alg = &outer.alg;
    let arity: usize = inners.iter().map(|g| g.arity).sum();
    // result transport = outer transport applied to the shared inner one
    let transport: Result<Vec<MultiPoly>> = inners[0]
        .transport
        .iter()
        .map(|m| m.substitute(&outer.tgt, &outer.transport))
        .collect();
    let mut out = RCochain::zero(alg, arity, &inners[0].src, &outer.tgt, transport?);
    // enumerate slot tuples (outer slot, inner slots...)
    for (&m, oc) in &outer.comps {
        let mut tuples: Vec<(ArtinElem, Vec<&Cochain>)> =
            vec![(elem_basis(alg, m), Vec::new())];
        for g in inners {
            let mut next = Vec::new();
            for (r, cs) in &tuples {
                for (&n, ic) in &g.comps {
                    let r2 = r.mul(&elem_basis(alg, n));
                    if r2.is_zero() {
                        continue;
                    }
                    let mut cs2 = cs.clone();
                    cs2.push(ic);
                    next.push((r2, cs2));
                }
            }
            tuples = next;
        }
        for (r, cs) in tuples {
            let owned: Vec<Cochain> = cs.into_iter().cloned().collect();
            let composed = compose(oc, &owned)?;
            out.add_scaled(&r, &composed);
        }
    }
    Ok(out)
}

/// Applies an arity-1 operator to an `R ⊗ A` element.
pub fn rc_apply(op: &RCochain, x: &RElem) -> Result<RElem> {
    assert_eq!(op.arity, 1);
    assert_eq!(op.src, x.ring);
    let mut out = RElem::zero(&op.alg, &op.tgt);
    for (&m, c) in &op.comps {
        for (&n, p) in &x.comps {
            let r = elem_basis(&op.alg, m).mul(&elem_basis(&op.alg, n));
            if r.is_zero() {
                continue;
            }
            let val = c.evaluate(std::slice::from_ref(p))?;
            for (&t, k) in &r.coords {
                out.add_comp(t, val.scale(k));
            }
        }
    }
    Ok(out)
}

/// Fixes argument `pos` of a cochain to a source-ring element, lowering
/// the arity by one.
pub fn partial_apply(c: &Cochain, pos: usize, val: &MultiPoly) -> Result<Cochain> {
    assert!(pos < c.arity);
    let mut out = Cochain::zero(c.arity - 1, &c.src, &c.tgt, c.transport.clone());
    for (slots, coeff) in &c.terms {
        let der = apply_multi_derivative(val, &slots[pos]);
        if der.is_zero() {
            continue;
        }
        let factor = der.substitute(&c.tgt, &c.transport)?;
        let rest: Vec<Exp> = slots
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, e)| e.clone())
            .collect();
        out.add_term(rest, coeff.mul(&factor));
    }
    Ok(out)
}

/// Fixes argument `pos` of an arity-2 operator to an `R ⊗ A` element.
pub fn rc_partial(rc: &RCochain, pos: usize, val: &RElem) -> Result<RCochain> {
    assert_eq!(rc.arity, 2);
    assert_eq!(rc.src, val.ring);
    let mut out = RCochain::zero(&rc.alg, 1, &rc.src, &rc.tgt, rc.transport.clone());
    for (&m, c) in &rc.comps {
        for (&n, p) in &val.comps {
            let r = elem_basis(&rc.alg, m).mul(&elem_basis(&rc.alg, n));
            if r.is_zero() {
                continue;
            }
            out.add_scaled(&r, &partial_apply(c, pos, p)?);
        }
    }
    Ok(out)
}
