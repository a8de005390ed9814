//! Artin local algebras `R = k[t_1..t_n]/(I + m^{N+1})` with explicit
//! truncation order, small extensions, and fiber products.
//!
//! Normal forms are computed by exact linear algebra on the finite
//! monomial window of degree <= N: the ideal is a linear subspace closed
//! under multiplication by the parameters, and the reduced echelon form
//! of that subspace gives a canonical normal form for every monomial.

use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{NcdefError, Result};
use crate::linalg::{subspace_intersection, Matrix};
use crate::poly::{Exp, MultiPoly, PolyRing};
use crate::scalar::Scalar;

/// A truncated Artin local k-algebra with a fixed monomial basis.
#[derive(Debug)]
pub struct ArtinLocalAlgebra {
    pub ring: Arc<PolyRing>,
    pub ideal: Vec<MultiPoly>,
    pub order: usize,
    /// All monomials of total degree <= order, graded order.
    pub monomials: Vec<Exp>,
    mono_index: HashMap<Exp, usize>,
    /// Indices (into `monomials`) of the k-basis of R.
    pub basis: Vec<usize>,
    /// monomial index -> basis slot, for basis monomials.
    basis_slot: Vec<Option<usize>>,
    /// monomial index -> normal form as (basis slot, coefficient) pairs.
    normal: Vec<Vec<(usize, Scalar)>>,
}

/// An element of an [`ArtinLocalAlgebra`], in basis coordinates.
#[derive(Clone, PartialEq)]
pub struct ArtinElem {
    pub alg: Arc<ArtinLocalAlgebra>,
    pub coords: BTreeMap<usize, Scalar>,
}

impl PartialEq for ArtinLocalAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.order == other.order && self.basis == other.basis
            && self.normal == other.normal
    }
}

fn enumerate_monomials(nvars: usize, order: usize) -> Vec<Exp> {
    let mut out: Vec<Exp> = vec![];
    let mut cur = vec![0i64; nvars];
    fn rec(out: &mut Vec<Exp>, cur: &mut Exp, var: usize, left: i64) {
        if var == cur.len() {
            out.push(cur.clone());
            return;
        }
        for d in 0..=left {
            cur[var] = d;
            rec(out, cur, var + 1, left - d);
        }
        cur[var] = 0;
    }
    rec(&mut out, &mut cur, 0, order as i64);
    out.sort_by_key(|e| (e.iter().sum::<i64>(), e.clone()));
    out
}

/// Constructs `k[params]/(ideal_gens + m^{order+1})`.
pub fn artin_quotient(
    params: &[&str],
    ideal_gens: Vec<MultiPoly>,
    order: usize,
) -> Result<Arc<ArtinLocalAlgebra>> {
    let ring = PolyRing::polynomial(params);
    for g in &ideal_gens {
        if !g.constant_term().is_zero() {
            return Err(NcdefError::InvalidIdeal(format!(
                "generator {g} has nonzero constant term"
            )));
        }
    }
    ArtinLocalAlgebra::build(ring, ideal_gens, order)
}

impl ArtinLocalAlgebra {
    pub fn build(
        ring: Arc<PolyRing>,
        ideal_gens: Vec<MultiPoly>,
        order: usize,
    ) -> Result<Arc<Self>> {
        if order < 1 {
            return Err(NcdefError::InvalidIdeal("order must be >= 1".into()));
        }
        let gens: Vec<MultiPoly> = ideal_gens
            .iter()
            .map(|g| {
                let mut h = MultiPoly::zero(&ring);
                for (e, c) in &g.terms {
                    if e.iter().sum::<i64>() <= order as i64 {
                        h.add_term(e.clone(), c.clone());
                    }
                }
                h
            })
            .collect();
        let monomials = enumerate_monomials(ring.nvars(), order);
        let mono_index: HashMap<Exp, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        // Span of the ideal in the monomial window.
        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        for g in &gens {
            if g.is_zero() {
                continue;
            }
            for m in &monomials {
                let mut row = vec![Scalar::zero(); monomials.len()];
                let mut nonzero = false;
                for (e, c) in &g.terms {
                    let prod: Exp = e.iter().zip(m).map(|(a, b)| a + b).collect();
                    if prod.iter().sum::<i64>() <= order as i64 {
                        row[mono_index[&prod]] += c.clone();
                        nonzero = true;
                    }
                }
                if nonzero {
                    rows.push(row);
                }
            }
        }
        Self::from_ideal_rows(ring, gens, order, monomials, mono_index, rows)
    }

    /// Builds the quotient directly from a spanning set of the ideal
    /// subspace (used by fiber products, where the intersection ideal is
    /// known only as a subspace).
    fn from_ideal_rows(
        ring: Arc<PolyRing>,
        ideal: Vec<MultiPoly>,
        order: usize,
        monomials: Vec<Exp>,
        mono_index: HashMap<Exp, usize>,
        rows: Vec<Vec<Scalar>>,
    ) -> Result<Arc<Self>> {
        let n = monomials.len();
        let mut normal: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); n];
        let mut basis_slot: Vec<Option<usize>> = vec![None; n];
        let (basis, pivots, reduced) = if rows.is_empty() {
            ((0..n).collect::<Vec<_>>(), Vec::new(), Matrix::zero(0, n))
        } else {
            let mut m = Matrix::from_rows(rows);
            let pivots = m.rref();
            let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
            let basis: Vec<usize> = (0..n).filter(|c| !pivot_set.contains(c)).collect();
            (basis, pivots, m)
        };
        if basis.is_empty() || monomials[basis[0]].iter().any(|&e| e != 0) {
            return Err(NcdefError::InvalidIdeal(
                "quotient does not contain 1: R/M is not k".into(),
            ));
        }
        for (slot, &mi) in basis.iter().enumerate() {
            basis_slot[mi] = Some(slot);
            normal[mi] = vec![(slot, Scalar::one())];
        }
        for (r, &pc) in pivots.iter().enumerate() {
            let mut nf = Vec::new();
            for (slot, &bi) in basis.iter().enumerate() {
                let v = reduced.at(r, bi);
                if !v.is_zero() {
                    nf.push((slot, -v.clone()));
                }
            }
            normal[pc] = nf;
        }
        Ok(Arc::new(ArtinLocalAlgebra {
            ring,
            ideal,
            order,
            monomials,
            mono_index,
            basis,
            basis_slot,
            normal,
        }))
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Exponent vector of the basis monomial in the given slot.
    pub fn basis_exp(&self, slot: usize) -> &Exp {
        &self.monomials[self.basis[slot]]
    }

    pub fn basis_degree(&self, slot: usize) -> i64 {
        self.basis_exp(slot).iter().sum()
    }

    /// Slots of the maximal-ideal basis (degree >= 1 monomials).
    pub fn maximal_ideal_slots(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&s| self.basis_degree(s) >= 1).collect()
    }

    /// Normal form of a monomial given by its exponent vector.
    pub fn normal_form_exp(&self, e: &Exp) -> Vec<(usize, Scalar)> {
        if e.iter().sum::<i64>() > self.order as i64 {
            return Vec::new();
        }
        self.normal[self.mono_index[e]].clone()
    }

    pub fn is_basis_monomial(&self, e: &Exp) -> bool {
        e.iter().sum::<i64>() <= self.order as i64
            && self.basis_slot[self.mono_index[e]].is_some()
    }
}

pub fn elem_zero(alg: &Arc<ArtinLocalAlgebra>) -> ArtinElem {
    ArtinElem {
        alg: alg.clone(),
        coords: BTreeMap::new(),
    }
}

pub fn elem_one(alg: &Arc<ArtinLocalAlgebra>) -> ArtinElem {
    elem_from_poly(alg, &MultiPoly::one(&alg.ring))
}

pub fn elem_param(alg: &Arc<ArtinLocalAlgebra>, i: usize) -> ArtinElem {
    elem_from_poly(alg, &MultiPoly::var(&alg.ring, i))
}

pub fn elem_basis(alg: &Arc<ArtinLocalAlgebra>, slot: usize) -> ArtinElem {
    let mut e = elem_zero(alg);
    e.coords.insert(slot, Scalar::one());
    e
}

pub fn elem_from_poly(alg: &Arc<ArtinLocalAlgebra>, p: &MultiPoly) -> ArtinElem {
    assert_eq!(p.ring, alg.ring);
    let mut out = elem_zero(alg);
    for (e, c) in &p.terms {
        for (slot, f) in alg.normal_form_exp(e) {
            out.add_coord(slot, f * c.clone());
        }
    }
    out
}

impl ArtinElem {
    fn add_coord(&mut self, slot: usize, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let e = self.coords.entry(slot).or_insert_with(Scalar::zero);
        *e += c;
        if e.is_zero() {
            self.coords.remove(&slot);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn add(&self, rhs: &ArtinElem) -> ArtinElem {
        let mut out = self.clone();
        for (&s, c) in &rhs.coords {
            out.add_coord(s, c.clone());
        }
        out
    }

    pub fn neg(&self) -> ArtinElem {
        self.scale(&-Scalar::one())
    }

    pub fn sub(&self, rhs: &ArtinElem) -> ArtinElem {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: &Scalar) -> ArtinElem {
        let mut out = elem_zero(&self.alg);
        for (&slot, c) in &self.coords {
            out.add_coord(slot, c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, rhs: &ArtinElem) -> ArtinElem {
        let alg = &self.alg;
        let mut out = elem_zero(alg);
        for (&s1, c1) in &self.coords {
            for (&s2, c2) in &rhs.coords {
                let e: Exp = alg
                    .basis_exp(s1)
                    .iter()
                    .zip(alg.basis_exp(s2))
                    .map(|(a, b)| a + b)
                    .collect();
                for (slot, f) in alg.normal_form_exp(&e) {
                    out.add_coord(slot, f * c1.clone() * c2.clone());
                }
            }
        }
        out
    }

    pub fn to_poly(&self) -> MultiPoly {
        let mut p = MultiPoly::zero(&self.alg.ring);
        for (&s, c) in &self.coords {
            p.add_term(self.alg.basis_exp(s).clone(), c.clone());
        }
        p
    }

    pub fn constant_coord(&self) -> Scalar {
        self.coords.get(&0).cloned().unwrap_or_else(Scalar::zero)
    }
}

impl std::fmt::Debug for ArtinElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

/// A local k-algebra homomorphism between Artin algebras, given by
/// parameter images.
#[derive(Clone, Debug)]
pub struct AlgebraMap {
    pub src: Arc<ArtinLocalAlgebra>,
    pub tgt: Arc<ArtinLocalAlgebra>,
    pub images: Vec<ArtinElem>,
}

impl AlgebraMap {
    pub fn new(
        src: Arc<ArtinLocalAlgebra>,
        tgt: Arc<ArtinLocalAlgebra>,
        images: Vec<ArtinElem>,
    ) -> Result<Self> {
        if images.len() != src.ring.nvars() {
            return Err(NcdefError::IncompatibleData(
                "parameter image count mismatch".into(),
            ));
        }
        for im in &images {
            if !im.constant_coord().is_zero() {
                return Err(NcdefError::InvalidBaseChange(
                    "parameter image has nonzero constant term (map is not local)".into(),
                ));
            }
        }
        Ok(AlgebraMap { src, tgt, images })
    }

    /// The map with the same parameter names (truncation / quotient map).
    pub fn identity_params(src: Arc<ArtinLocalAlgebra>, tgt: Arc<ArtinLocalAlgebra>) -> Result<Self> {
        assert_eq!(src.ring.vars, tgt.ring.vars);
        let images = (0..tgt.ring.nvars()).map(|i| elem_param(&tgt, i)).collect();
        AlgebraMap::new(src, tgt, images)
    }

    /// Image of a source basis monomial.
    pub fn apply_basis(&self, slot: usize) -> ArtinElem {
        let e = self.src.basis_exp(slot).clone();
        let mut out = elem_one(&self.tgt);
        for (i, &p) in e.iter().enumerate() {
            for _ in 0..p {
                out = out.mul(&self.images[i]);
            }
        }
        out
    }

    pub fn apply(&self, x: &ArtinElem) -> ArtinElem {
        assert_eq!(x.alg, self.src);
        let mut out = elem_zero(&self.tgt);
        for (&s, c) in &x.coords {
            out = out.add(&self.apply_basis(s).scale(c));
        }
        out
    }

    /// Matrix of the map: columns indexed by source basis, rows by target.
    pub fn matrix(&self) -> Matrix {
        let mut m = Matrix::zero(self.tgt.dim(), self.src.dim());
        for s in 0..self.src.dim() {
            let im = self.apply_basis(s);
            for (&r, c) in &im.coords {
                m.set(r, s, c.clone());
            }
        }
        m
    }
}

/// A small extension `0 -> J -> R' -> R -> 0` with `M' J = 0`.
pub struct SmallExtension {
    pub source: Arc<ArtinLocalAlgebra>,
    pub target: Arc<ArtinLocalAlgebra>,
    pub map: AlgebraMap,
    /// Basis of the kernel J, as elements of R'.
    pub j_basis: Vec<ArtinElem>,
    /// For each target basis slot, a chosen preimage in R'.
    pub section: Vec<ArtinElem>,
}

/// Builds and verifies a small extension from a surjection `R' -> R`.
pub fn small_extension(
    source: Arc<ArtinLocalAlgebra>,
    target: Arc<ArtinLocalAlgebra>,
    map: AlgebraMap,
) -> Result<SmallExtension> {
    assert_eq!(map.src, source);
    assert_eq!(map.tgt, target);
    let m = map.matrix();
    if m.rank() != target.dim() {
        return Err(NcdefError::NotSurjective(
            "parameter assignment does not induce a surjection".into(),
        ));
    }
    let j_basis: Vec<ArtinElem> = m
        .kernel()
        .into_iter()
        .map(|v| {
            let mut e = elem_zero(&source);
            for (slot, c) in v.into_iter().enumerate() {
                e.add_coord(slot, c);
            }
            e
        })
        .collect();
    // M' J = 0, checked on every basis pair.
    for &ms in &source.maximal_ideal_slots() {
        let mb = elem_basis(&source, ms);
        for j in &j_basis {
            if !mb.mul(j).is_zero() {
                return Err(NcdefError::NotSmall(format!(
                    "M'·J != 0: {:?} · {:?} = {:?}",
                    mb,
                    j,
                    mb.mul(j)
                )));
            }
        }
    }
    let mut section = Vec::with_capacity(target.dim());
    for t in 0..target.dim() {
        let mut rhs = vec![Scalar::zero(); target.dim()];
        rhs[t] = Scalar::one();
        let x = m
            .solve(&rhs)
            .ok_or_else(|| NcdefError::NotSurjective("no preimage for basis element".into()))?;
        let mut e = elem_zero(&source);
        for (slot, c) in x.into_iter().enumerate() {
            e.add_coord(slot, c);
        }
        section.push(e);
    }
    Ok(SmallExtension {
        source,
        target,
        map,
        j_basis,
        section,
    })
}

impl SmallExtension {
    pub fn j_dim(&self) -> usize {
        self.j_basis.len()
    }

    /// Expresses an element of R' lying in J in J-basis coordinates;
    /// errors if it does not lie in J.
    pub fn j_coords(&self, x: &ArtinElem) -> Result<Vec<Scalar>> {
        let n = self.source.dim();
        let mut m = Matrix::zero(n, self.j_basis.len());
        for (col, j) in self.j_basis.iter().enumerate() {
            for (&r, c) in &j.coords {
                m.set(r, col, c.clone());
            }
        }
        let mut rhs = vec![Scalar::zero(); n];
        for (&r, c) in &x.coords {
            rhs[r] = c.clone();
        }
        m.solve(&rhs).ok_or_else(|| {
            NcdefError::IdentityViolation(format!("element {x:?} does not lie in J"))
        })
    }

    pub fn j_elem(&self, coords: &[Scalar]) -> ArtinElem {
        let mut e = elem_zero(&self.source);
        for (j, c) in self.j_basis.iter().zip(coords) {
            e = e.add(&j.scale(c));
        }
        e
    }
}

/// `P/I_1 ×_{P/(I_1+I_2)} P/I_2 ≅ P/(I_1 ∩ I_2)` for quotients of a
/// common parameter ring.
pub fn fiber_product(
    r1: &Arc<ArtinLocalAlgebra>,
    r2: &Arc<ArtinLocalAlgebra>,
    r0: &Arc<ArtinLocalAlgebra>,
) -> Result<Arc<ArtinLocalAlgebra>> {
    if r1.ring != r2.ring || r1.ring != r0.ring {
        return Err(NcdefError::IncompatibleData(
            "fiber product factors must be quotients of one parameter ring".into(),
        ));
    }
    let order = r1.order.max(r2.order);
    let monomials = enumerate_monomials(r1.ring.nvars(), order);
    let mono_index: HashMap<Exp, usize> = monomials
        .iter()
        .enumerate()
        .map(|(i, e)| (e.clone(), i))
        .collect();
    let n = monomials.len();
    // Effective ideal subspace of each factor in the common window,
    // including its own truncation monomials.
    let ideal_span = |r: &Arc<ArtinLocalAlgebra>| -> Vec<Vec<Scalar>> {
        let mut rows = Vec::new();
        for g in &r.ideal {
            for m in &monomials {
                let mut row = vec![Scalar::zero(); n];
                let mut nonzero = false;
                for (e, c) in &g.terms {
                    let prod: Exp = e.iter().zip(m).map(|(a, b)| a + b).collect();
                    if prod.iter().sum::<i64>() <= order as i64 {
                        row[mono_index[&prod]] += c.clone();
                        nonzero = true;
                    }
                }
                if nonzero {
                    rows.push(row);
                }
            }
        }
        for (i, e) in monomials.iter().enumerate() {
            if e.iter().sum::<i64>() > r.order as i64 {
                let mut row = vec![Scalar::zero(); n];
                row[i] = Scalar::one();
                rows.push(row);
            }
        }
        rows
    };
    let w1 = ideal_span(r1);
    let w2 = ideal_span(r2);
    // R0 must be P/(I_1 + I_2): the sum span must have the right rank.
    let w0 = ideal_span(r0);
    let mut sum = w1.clone();
    sum.extend(w2.iter().cloned());
    let rank_sum = Matrix::from_rows(sum.clone()).rank();
    let rank_w0 = Matrix::from_rows(w0).rank();
    if rank_sum != rank_w0 {
        return Err(NcdefError::IncompatibleData(
            "R0 is not the quotient by I_1 + I_2".into(),
        ));
    }
    let inter = subspace_intersection(&w1, &w2, n);
    // Present the intersection subspace rows as polynomials for the record.
    let ideal_polys: Vec<MultiPoly> = inter
        .iter()
        .map(|row| {
            let mut p = MultiPoly::zero(&r1.ring);
            for (i, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    p.add_term(monomials[i].clone(), c.clone());
                }
            }
            p
        })
        .collect();
    ArtinLocalAlgebra::from_ideal_rows(
        r1.ring.clone(),
        ideal_polys,
        order,
        monomials,
        mono_index,
        inter,
    )
}

/// JSON schema for algebra serialization.
#[derive(Serialize)]
pub struct ArtinJson {
    pub params: Vec<String>,
    pub ideal: Vec<String>,
    pub order: usize,
    pub dim: usize,
    pub basis: Vec<String>,
}

impl ArtinLocalAlgebra {
    pub fn to_json(&self) -> ArtinJson {
        ArtinJson {
            params: self.ring.vars.clone(),
            ideal: self.ideal.iter().map(|g| g.to_string()).collect(),
            order: self.order,
            dim: self.dim(),
            basis: (0..self.dim())
                .map(|s| {
                    let mut p = MultiPoly::zero(&self.ring);
                    p.add_term(self.basis_exp(s).clone(), Scalar::one());
                    p.to_string()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(ring: &Arc<PolyRing>, s: &str) -> MultiPoly {
        MultiPoly::parse(ring, s).unwrap()
    }

    #[test]
    fn dual_numbers() {
        let r = artin_quotient(&["t"], vec![], 1).unwrap();
        assert_eq!(r.dim(), 2);
        let t = elem_param(&r, 0);
        assert!(t.mul(&t).is_zero());
    }

    #[test]
    fn ideal_dominates_truncation() {
        let ring = PolyRing::polynomial(&["t"]);
        let r = artin_quotient(&["t"], vec![poly(&ring, "t^3")], 5).unwrap();
        assert_eq!(r.dim(), 3); // {1, t, t^2}
    }

    #[test]
    fn two_params_with_relation() {
        let ring = PolyRing::polynomial(&["t1", "t2"]);
        let r = artin_quotient(&["t1", "t2"], vec![poly(&ring, "t1*t2")], 2).unwrap();
        // {1, t1, t2, t1^2, t2^2}
        assert_eq!(r.dim(), 5);
        let t1 = elem_param(&r, 0);
        let t2 = elem_param(&r, 1);
        assert!(t1.mul(&t2).is_zero());
        assert!(!t1.mul(&t1).is_zero());
    }

    #[test]
    fn nonzero_constant_term_rejected() {
        let ring = PolyRing::polynomial(&["t"]);
        assert!(matches!(
            artin_quotient(&["t"], vec![poly(&ring, "1 + t")], 2),
            Err(NcdefError::InvalidIdeal(_))
        ));
    }

    #[test]
    fn small_extension_kernel() {
        let rp = artin_quotient(&["t"], vec![], 2).unwrap(); // k[t]/t^3
        let r = artin_quotient(&["t"], vec![], 1).unwrap(); // k[t]/t^2
        let map = AlgebraMap::identity_params(rp.clone(), r.clone()).unwrap();
        let e = small_extension(rp.clone(), r, map).unwrap();
        assert_eq!(e.j_dim(), 1);
        assert_eq!(e.j_basis[0].to_poly().to_string(), "t^2");
    }

    #[test]
    fn not_small_detected() {
        let rp = artin_quotient(&["t"], vec![], 3).unwrap(); // k[t]/t^4
        let r = artin_quotient(&["t"], vec![], 1).unwrap(); // k[t]/t^2
        let map = AlgebraMap::identity_params(rp.clone(), r.clone()).unwrap();
        assert!(matches!(
            small_extension(rp, r, map),
            Err(NcdefError::NotSmall(_))
        ));
    }

    #[test]
    fn small_extension_two_params() {
        // k[t1,t2]/(t1,t2)^3 -> k[t1,t2]/(t1,t2)^2, J = degree-2 monomials.
        let rp = artin_quotient(&["t1", "t2"], vec![], 2).unwrap();
        let r = artin_quotient(&["t1", "t2"], vec![], 1).unwrap();
        let map = AlgebraMap::identity_params(rp.clone(), r.clone()).unwrap();
        let e = small_extension(rp, r, map).unwrap();
        assert_eq!(e.j_dim(), 3);
    }

    #[test]
    fn fiber_product_one_variable() {
        let ring = PolyRing::polynomial(&["t"]);
        let r1 = artin_quotient(&["t"], vec![poly(&ring, "t^2")], 3).unwrap();
        let r2 = artin_quotient(&["t"], vec![poly(&ring, "t^3")], 3).unwrap();
        let r0 = artin_quotient(&["t"], vec![poly(&ring, "t^2")], 3).unwrap();
        let fp = fiber_product(&r1, &r2, &r0).unwrap();
        // (t^2) ∩ (t^3) = (t^3)
        assert_eq!(fp.dim(), 3);
    }

    #[test]
    fn fiber_product_identity_case() {
        let ring = PolyRing::polynomial(&["t"]);
        let r1 = artin_quotient(&["t"], vec![poly(&ring, "t^2")], 3).unwrap();
        let fp = fiber_product(&r1, &r1, &r1).unwrap();
        assert_eq!(fp.dim(), r1.dim());
    }

    #[test]
    fn fiber_product_two_variables() {
        let ring = PolyRing::polynomial(&["s", "t"]);
        let r1 = artin_quotient(&["s", "t"], vec![poly(&ring, "s")], 2).unwrap();
        let r2 = artin_quotient(&["s", "t"], vec![poly(&ring, "t")], 2).unwrap();
        let r0 = artin_quotient(&["s", "t"], vec![poly(&ring, "s"), poly(&ring, "t")], 2).unwrap();
        let fp = fiber_product(&r1, &r2, &r0).unwrap();
        // k[s,t]/(st) truncated at order 2: {1, s, t, s^2, t^2}
        assert_eq!(fp.dim(), 5);
    }

    #[test]
    fn normal_form_idempotent_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let ring = PolyRing::polynomial(&["t1", "t2"]);
        let r = artin_quotient(&["t1", "t2"], vec![poly(&ring, "t1*t2 - t2^2")], 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut x = elem_zero(&r);
            let mut y = elem_zero(&r);
            for s in 0..r.dim() {
                if rng.gen_bool(0.5) {
                    x.add_coord(s, Scalar::from_i64(rng.gen_range(-3..4)));
                }
                if rng.gen_bool(0.5) {
                    y.add_coord(s, Scalar::from_i64(rng.gen_range(-3..4)));
                }
            }
            // products of normalized elements are already normal
            let p = x.mul(&y);
            let q = elem_from_poly(&r, &p.to_poly());
            assert_eq!(p, q);
        }
    }
}
