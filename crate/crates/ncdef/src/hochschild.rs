//! Hochschild cochains in polydifferential form: evaluation, the
//! coboundary operator, composition, HKR symbol maps, and bounded
//! coboundary solving.
//!
//! A cochain `A_i^{⊗p} → A_j` is a finite sum of terms
//! `coeff · Π_s φ(∂^{D_s} x_s)` with `coeff ∈ A_j` and `φ = φ⁰_{ji}` the
//! transport (identity when i = j).  Two cochains are equal as operators
//! iff their canonical term maps agree: the transports are localizations,
//! hence injective, and monomial arguments separate the terms.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{NcdefError, Result};
use crate::geometry::Section;
use crate::poly::{unit_exp, Exp, MultiPoly, PolyRing};
use crate::scalar::Scalar;

/// A polydifferential Hochschild cochain.
#[derive(Clone, PartialEq)]
pub struct Cochain {
    pub arity: usize,
    pub src: Arc<PolyRing>,
    pub tgt: Arc<PolyRing>,
    /// Images of the source variables in the target (the transport φ).
    pub transport: Vec<MultiPoly>,
    /// Per-slot derivative multi-indices → coefficient in the target.
    pub terms: BTreeMap<Vec<Exp>, MultiPoly>,
}

impl Cochain {
    pub fn zero(arity: usize, src: &Arc<PolyRing>, tgt: &Arc<PolyRing>, transport: Vec<MultiPoly>) -> Self {
        assert_eq!(transport.len(), src.nvars());
        Cochain {
            arity,
            src: src.clone(),
            tgt: tgt.clone(),
            transport,
            terms: BTreeMap::new(),
        }
    }

    /// Zero cochain from a chart to itself (identity transport).
    pub fn zero_endo(arity: usize, ring: &Arc<PolyRing>) -> Self {
        let transport = (0..ring.nvars()).map(|i| MultiPoly::var(ring, i)).collect();
        Cochain::zero(arity, ring, ring, transport)
    }

    /// The identity operator as an arity-1 cochain.
    pub fn identity(ring: &Arc<PolyRing>) -> Self {
        let mut c = Cochain::zero_endo(1, ring);
        c.add_term(vec![vec![0; ring.nvars()]], MultiPoly::one(ring));
        c
    }

    /// A ring homomorphism (given by variable images) as an arity-1 cochain.
    pub fn from_hom(src: &Arc<PolyRing>, tgt: &Arc<PolyRing>, images: Vec<MultiPoly>) -> Self {
        let mut c = Cochain::zero(1, src, tgt, images);
        c.add_term(vec![vec![0; src.nvars()]], MultiPoly::one(tgt));
        c
    }

    /// The commutative multiplication as an arity-2 cochain.
    pub fn multiplication(ring: &Arc<PolyRing>) -> Self {
        let mut c = Cochain::zero_endo(2, ring);
        let z = vec![0i64; ring.nvars()];
        c.add_term(vec![z.clone(), z], MultiPoly::one(ring));
        c
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_identity_transport(&self) -> bool {
        self.src == self.tgt
            && self
                .transport
                .iter()
                .enumerate()
                .all(|(i, m)| *m == MultiPoly::var(&self.src, i))
    }

    pub fn add_term(&mut self, slots: Vec<Exp>, coeff: MultiPoly) {
        assert_eq!(slots.len(), self.arity);
        assert!(slots.iter().all(|d| d.len() == self.src.nvars() && d.iter().all(|&x| x >= 0)));
        assert_eq!(coeff.ring, self.tgt);
        if coeff.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(slots.clone())
            .or_insert_with(|| MultiPoly::zero(&self.tgt));
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&slots);
        }
    }

    fn same_shape(&self, rhs: &Cochain) {
        assert_eq!(self.arity, rhs.arity);
        assert_eq!(self.src, rhs.src);
        assert_eq!(self.tgt, rhs.tgt);
        assert_eq!(self.transport, rhs.transport);
    }

    pub fn add(&self, rhs: &Cochain) -> Cochain {
        self.same_shape(rhs);
        let mut out = self.clone();
        for (s, c) in &rhs.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Cochain {
        let mut out = Cochain::zero(self.arity, &self.src, &self.tgt, self.transport.clone());
        for (s, c) in &self.terms {
            out.terms.insert(s.clone(), c.neg());
        }
        out
    }

    pub fn sub(&self, rhs: &Cochain) -> Cochain {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, k: &Scalar) -> Cochain {
        let mut out = Cochain::zero(self.arity, &self.src, &self.tgt, self.transport.clone());
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.scale(k));
        }
        out
    }

    /// Multiplies every coefficient by a target-ring element.
    pub fn scale_poly(&self, f: &MultiPoly) -> Cochain {
        let mut out = Cochain::zero(self.arity, &self.src, &self.tgt, self.transport.clone());
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.mul(f));
        }
        out
    }

    /// Evaluates the cochain on ring elements of the source chart.
    pub fn evaluate(&self, args: &[MultiPoly]) -> Result<MultiPoly> {
        if args.len() != self.arity {
            return Err(NcdefError::ArityMismatch {
                expected: self.arity,
                got: args.len(),
            });
        }
        let mut out = MultiPoly::zero(&self.tgt);
        for (slots, coeff) in &self.terms {
            let mut acc = coeff.clone();
            for (s, d) in slots.iter().enumerate() {
                let der = apply_multi_derivative(&args[s], d);
                if der.is_zero() {
                    acc = MultiPoly::zero(&self.tgt);
                    break;
                }
                acc = acc.mul(&der.substitute(&self.tgt, &self.transport)?);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Post-composes with a ring map `tgt → new_tgt`.
    pub fn postcompose(&self, new_tgt: &Arc<PolyRing>, images: &[MultiPoly]) -> Result<Cochain> {
        assert_eq!(images.len(), self.tgt.nvars());
        let transport: Result<Vec<MultiPoly>> = self
            .transport
            .iter()
            .map(|m| m.substitute(new_tgt, images))
            .collect();
        let mut out = Cochain::zero(self.arity, &self.src, new_tgt, transport?);
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.substitute(new_tgt, images)?);
        }
        Ok(out)
    }

    /// Hochschild coboundary: arity p → p + 1, same transport.
    ///
    /// `(df)(x_0..x_p) = φ(x_0)·f(x_1..x_p) + Σ_{i=1}^p (−1)^i f(.., x_{i−1}x_i, ..)
    ///  + (−1)^{p+1} f(x_0..x_{p−1})·φ(x_p)`.
    pub fn coboundary(&self) -> Cochain {
        let p = self.arity;
        let nv = self.src.nvars();
        let zero_slot = vec![0i64; nv];
        let mut out = Cochain::zero(p + 1, &self.src, &self.tgt, self.transport.clone());
        for (slots, coeff) in &self.terms {
            // φ(x_0)·f(x_1..x_p)
            let mut s0 = vec![zero_slot.clone()];
            s0.extend(slots.iter().cloned());
            out.add_term(s0, coeff.clone());
            // (−1)^{p+1} f(x_0..x_{p−1})·φ(x_p)
            let mut sp = slots.clone();
            sp.push(zero_slot.clone());
            let sign = if (p + 1) % 2 == 0 { coeff.clone() } else { coeff.neg() };
            out.add_term(sp, sign);
            // middle terms: slot i−1 of f eats the product x_{i−1}·x_i.
            for i in 1..=p {
                let d = &slots[i - 1];
                for (beta, binom) in split_multi_index(d) {
                    let gamma: Exp = d.iter().zip(&beta).map(|(a, b)| a - b).collect();
                    let mut s = Vec::with_capacity(p + 1);
                    s.extend(slots[..i - 1].iter().cloned());
                    s.push(beta);
                    s.push(gamma);
                    s.extend(slots[i..].iter().cloned());
                    let c = coeff.scale(&Scalar::from_i64(binom));
                    out.add_term(s, if i % 2 == 0 { c } else { c.neg() });
                }
            }
        }
        out
    }

    /// First-order antisymmetrized symbol: the HKR image as a p-vector
    /// section on the target chart.  `slot_images[v]` gives the target
    /// vector field of the transported source derivation `∂_v` (pass the
    /// identity rows when source = target).
    pub fn symbol_section(&self, slot_images: &[Vec<MultiPoly>]) -> Section {
        let d_tgt = self.tgt.nvars();
        let mut out = Section::zero(&self.tgt, self.arity);
        for (slots, coeff) in &self.terms {
            let firsts: Option<Vec<usize>> = slots
                .iter()
                .map(|d| {
                    if d.iter().sum::<i64>() == 1 {
                        Some(d.iter().position(|&x| x == 1).unwrap())
                    } else {
                        None
                    }
                })
                .collect();
            let Some(vars) = firsts else { continue };
            // expand Π_s (Σ_w slot_images[v_s][w] ∂_w) into wedges
            let mut parts: Vec<(Vec<usize>, MultiPoly)> = vec![(vec![], coeff.clone())];
            for &v in &vars {
                let mut next = Vec::new();
                for (sel, c) in &parts {
                    for w in 0..d_tgt {
                        if slot_images[v][w].is_zero() {
                            continue;
                        }
                        let mut sel2 = sel.clone();
                        sel2.push(w);
                        next.push((sel2, c.mul(&slot_images[v][w])));
                    }
                }
                parts = next;
            }
            for (sel, c) in parts {
                out.add_wedge(sel, c);
            }
        }
        out
    }

    /// HKR class for a same-chart cocycle: the antisymmetrized first-order
    /// symbol as a section of `∧^p T`.  Errors when `dc ≠ 0`.
    pub fn hkr_class(&self) -> Result<Section> {
        assert!(
            self.has_identity_transport(),
            "hkr_class needs a same-chart cochain; use symbol_section with transport data"
        );
        if !self.coboundary().is_zero() {
            return Err(NcdefError::NotACocycle(format!("{self:?}")));
        }
        let d = self.src.nvars();
        let identity: Vec<Vec<MultiPoly>> = (0..d)
            .map(|v| {
                (0..d)
                    .map(|w| {
                        if v == w {
                            MultiPoly::one(&self.tgt)
                        } else {
                            MultiPoly::zero(&self.tgt)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(self.symbol_section(&identity))
    }

    /// The wedge part of the symbol without the cocycle check (used for
    /// normalizing primitives).
    pub fn wedge_symbol(&self) -> Section {
        let d = self.src.nvars();
        let identity: Vec<Vec<MultiPoly>> = (0..d)
            .map(|v| {
                (0..d)
                    .map(|w| {
                        if v == w {
                            MultiPoly::one(&self.tgt)
                        } else {
                            MultiPoly::zero(&self.tgt)
                        }
                    })
                    .collect()
            })
            .collect();
        self.symbol_section(&identity)
    }
}

impl std::fmt::Debug for Cochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (slots, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})⊗[")?;
            for (i, d) in slots.iter().enumerate() {
                if i > 0 {
                    write!(f, "|")?;
                }
                let mut any = false;
                for (v, &k) in d.iter().enumerate() {
                    if k > 0 {
                        if any {
                            write!(f, " ")?;
                        }
                        any = true;
                        if k == 1 {
                            write!(f, "d{}", self.src.vars[v])?;
                        } else {
                            write!(f, "d{}^{}", self.src.vars[v], k)?;
                        }
                    }
                }
                if !any {
                    write!(f, "1")?;
                }
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// `∂^d x`, iterated partial derivatives.
pub fn apply_multi_derivative(x: &MultiPoly, d: &Exp) -> MultiPoly {
    let mut out = x.clone();
    for (v, &k) in d.iter().enumerate() {
        for _ in 0..k {
            out = out.derivative(v);
            if out.is_zero() {
                return out;
            }
        }
    }
    out
}

/// All splittings β ≤ d with the product of binomial coefficients
/// `Π_v C(d_v, β_v)` (the multi-Leibniz weights).
fn split_multi_index(d: &Exp) -> Vec<(Exp, i64)> {
    let mut out: Vec<(Exp, i64)> = vec![(vec![], 1)];
    for &dv in d {
        let mut next = Vec::new();
        for (beta, c) in &out {
            for b in 0..=dv {
                let mut beta2 = beta.clone();
                beta2.push(b);
                next.push((beta2, c * binom(dv, b)));
            }
        }
        out = next;
    }
    out
}

fn binom(n: i64, k: i64) -> i64 {
    let mut r = 1i64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Composes `outer ∘ (inner_1 ⊗ … ⊗ inner_m)`: the outer slots consume
/// the inner outputs in order.  All inners must share source ring and
/// transport, and their target must be the outer's source.
pub fn compose(outer: &Cochain, inners: &[Cochain]) -> Result<Cochain> {
    assert_eq!(outer.arity, inners.len());
    let bottom = &inners.first().expect("compose needs at least one inner").src;
    let psi = &inners[0].transport;
    for g in inners {
        assert_eq!(&g.src, bottom);
        assert_eq!(&g.transport, psi);
        assert_eq!(g.tgt, outer.src);
    }
    // Result transport: φ_outer ∘ ψ.
    let transport: Result<Vec<MultiPoly>> = psi
        .iter()
        .map(|m| m.substitute(&outer.tgt, &outer.transport))
        .collect();
    let arity: usize = inners.iter().map(|g| g.arity).sum();
    let mut out = Cochain::zero(arity, bottom, &outer.tgt, transport?);
    // Pre-differentiate each inner against each outer slot multi-index.
    for (outer_slots, c_f) in &outer.terms {
        // per outer slot s: list of (mid coefficient, slot multi-indices of inner s)
        let mut per_slot: Vec<Vec<(MultiPoly, Vec<Exp>)>> = Vec::with_capacity(outer.arity);
        for (s, d) in outer_slots.iter().enumerate() {
            per_slot.push(differentiate_inner(&inners[s], d));
        }
        // combine across slots
        let mut acc: Vec<(MultiPoly, Vec<Exp>)> = vec![(c_f.clone(), vec![])];
        for opts in &per_slot {
            let mut next = Vec::new();
            for (coeff, slots) in &acc {
                for (mid_c, inner_slots) in opts {
                    let lifted = mid_c.substitute(&outer.tgt, &outer.transport)?;
                    if lifted.is_zero() {
                        continue;
                    }
                    let mut slots2 = slots.clone();
                    slots2.extend(inner_slots.iter().cloned());
                    next.push((coeff.mul(&lifted), slots2));
                }
            }
            acc = next;
        }
        for (coeff, slots) in acc {
            out.add_term(slots, coeff);
        }
    }
    Ok(out)
}

/// Applies `∂^d` (in the mid ring) to the inner cochain's evaluation
/// expression, returning terms (mid coefficient, per-argument multi-indices).
fn differentiate_inner(inner: &Cochain, d: &Exp) -> Vec<(MultiPoly, Vec<Exp>)> {
    let mid = &inner.tgt;
    let mut state: Vec<(MultiPoly, Vec<Exp>)> = inner
        .terms
        .iter()
        .map(|(slots, c)| (c.clone(), slots.clone()))
        .collect();
    for (v, &k) in d.iter().enumerate() {
        for _ in 0..k {
            let mut next: Vec<(MultiPoly, Vec<Exp>)> = Vec::new();
            for (coeff, slots) in &state {
                // product rule: derivative of the coefficient...
                let dc = coeff.derivative(v);
                if !dc.is_zero() {
                    next.push((dc, slots.clone()));
                }
                // ...or of one argument factor ψ(∂^{E_t} x_t), via the
                // chain rule through the transport monomials.
                for (t, _) in slots.iter().enumerate() {
                    for (w, img) in inner.transport.iter().enumerate() {
                        let dimg = img.derivative(v);
                        if dimg.is_zero() {
                            continue;
                        }
                        let mut slots2 = slots.clone();
                        slots2[t] = slots2[t]
                            .iter()
                            .zip(unit_exp(inner.src.nvars(), w, 1))
                            .map(|(a, b)| a + b)
                            .collect();
                        next.push((coeff.mul(&dimg), slots2));
                    }
                }
            }
            // merge duplicates
            let mut merged: BTreeMap<Vec<Exp>, MultiPoly> = BTreeMap::new();
            for (c, s) in next {
                let e = merged.entry(s).or_insert_with(|| MultiPoly::zero(mid));
                *e = e.add(&c);
            }
            state = merged
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(s, c)| (c, s))
                .collect();
        }
    }
    state
}

/// Converts a p-vector section to the cochain `(1/p!)·Σ_π sgn(π) ∂^⊗`
/// whose HKR class is the section.  Errors in prime-field mode when `p!`
/// is not invertible.
pub fn hkr_inverse(s: &Section, characteristic_hint: &Scalar) -> Result<Cochain> {
    let ring = &s.ring;
    let p = s.p;
    let mut fact = 1i64;
    for i in 1..=p as i64 {
        fact *= i;
    }
    // In prime-field mode the hint carries the characteristic, so the
    // invertibility of p! is checked here rather than at a later panic.
    let one = match characteristic_hint.characteristic() {
        0 => Scalar::one(),
        q => Scalar::fp(1, q)?,
    };
    let inv_fact = one
        .div_int(fact)
        .map_err(|_| NcdefError::PrimeField(format!("{p}! is not invertible in this field")))?;
    let mut out = Cochain::zero_endo(p, ring);
    for (key, coeff) in &s.terms {
        for (perm, sign) in permutations_signed(key) {
            let slots: Vec<Exp> = perm
                .iter()
                .map(|&v| unit_exp(ring.nvars(), v, 1))
                .collect();
            let c = coeff.scale(&(inv_fact.clone() * Scalar::from_i64(sign)));
            out.add_term(slots, c);
        }
    }
    Ok(out)
}

fn permutations_signed(key: &[usize]) -> Vec<(Vec<usize>, i64)> {
    let n = key.len();
    if n == 0 {
        return vec![(vec![], 1)];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    permute_rec(&mut idx, 0, 1, key, &mut out);
    out
}

fn permute_rec(idx: &mut Vec<usize>, k: usize, sign: i64, key: &[usize], out: &mut Vec<(Vec<usize>, i64)>) {
    let n = idx.len();
    if k == n {
        out.push((idx.iter().map(|&i| key[i]).collect(), sign));
        return;
    }
    for i in k..n {
        let s = if i == k { sign } else { -sign };
        idx.swap(k, i);
        permute_rec(idx, k + 1, s, key, out);
        idx.swap(k, i);
    }
}

/// Solves `dB = c` by exact linear algebra over the finite space of
/// primitives with per-term derivative order ≤ `max_order` and coefficient
/// degree ≤ `max_degree`.
///
/// Returns `Ok(None)` when the HKR class of `c` is nonzero (no primitive
/// exists), `Err(BoundsTooSmall)` when the class vanishes but no primitive
/// fits in the bounds.
pub fn solve_coboundary(
    c: &Cochain,
    max_order: usize,
    max_degree: i64,
) -> Result<Option<Cochain>> {
    let mut out = solve_coboundary_batch(std::slice::from_ref(c), max_order, max_degree)?;
    Ok(out.pop().unwrap())
}

/// Batch form of [`solve_coboundary`] for cocycles sharing one shape
/// (arity, rings, transport): the elimination over the primitive basis is
/// done once and each input only contributes a right-hand side.
pub fn solve_coboundary_batch(
    cs: &[Cochain],
    max_order: usize,
    max_degree: i64,
) -> Result<Vec<Option<Cochain>>> {
    let mut out: Vec<Option<Cochain>> = vec![None; cs.len()];
    let mut live = Vec::new();
    for (idx, c) in cs.iter().enumerate() {
        assert!(c.arity >= 1);
        if !c.coboundary().is_zero() {
            return Err(NcdefError::NotACocycle(format!("{c:?}")));
        }
        if c.is_zero() {
            out[idx] = Some(Cochain::zero(
                c.arity - 1,
                &c.src,
                &c.tgt,
                c.transport.clone(),
            ));
        } else {
            live.push(idx);
        }
    }
    let Some(&first) = live.first() else {
        return Ok(out);
    };
    let model = &cs[first];
    for &idx in &live[1..] {
        let c = &cs[idx];
        if c.arity != model.arity || c.transport != model.transport {
            return Err(NcdefError::IncompatibleData(
                "batched coboundary solve needs cocycles of one shape".into(),
            ));
        }
    }
    let basis = primitive_basis(model, max_order, max_degree);
    let images: Vec<Cochain> = basis.iter().map(|b| b.coboundary()).collect();
    // Assemble the linear system on the union of term keys.
    let mut keys: std::collections::BTreeSet<(Vec<Exp>, Exp)> = Default::default();
    let collect = |cc: &Cochain, keys: &mut std::collections::BTreeSet<(Vec<Exp>, Exp)>| {
        for (slots, coeff) in &cc.terms {
            for e in coeff.terms.keys() {
                keys.insert((slots.clone(), e.clone()));
            }
        }
    };
    for &idx in &live {
        collect(&cs[idx], &mut keys);
    }
    for im in &images {
        collect(im, &mut keys);
    }
    let keys: Vec<_> = keys.into_iter().collect();
    let kidx: std::collections::HashMap<_, usize> =
        keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    let to_vec = |cc: &Cochain| -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); keys.len()];
        for (slots, coeff) in &cc.terms {
            for (e, s) in &coeff.terms {
                v[kidx[&(slots.clone(), e.clone())]] = s.clone();
            }
        }
        v
    };
    let mut m = crate::linalg::Matrix::zero(keys.len(), basis.len());
    for (col, im) in images.iter().enumerate() {
        for (row, val) in to_vec(im).into_iter().enumerate() {
            m.set(row, col, val);
        }
    }
    let rhs: Vec<Vec<Scalar>> = live.iter().map(|&idx| to_vec(&cs[idx])).collect();
    for (&idx, sol) in live.iter().zip(m.solve_many(&rhs)) {
        let c = &cs[idx];
        match sol {
            Some(x) => {
                let mut b = Cochain::zero(c.arity - 1, &c.src, &c.tgt, c.transport.clone());
                for (cand, coef) in basis.iter().zip(&x) {
                    if !coef.is_zero() {
                        b = b.add(&cand.scale(coef));
                    }
                }
                out[idx] = Some(b);
            }
            None => {
                if c.has_identity_transport() && !c.hkr_class()?.is_zero() {
                    out[idx] = None;
                } else {
                    return Err(NcdefError::BoundsTooSmall {
                        order: max_order,
                        degree: max_degree,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Candidate primitives: all single-term cochains of arity `c.arity − 1`
/// within the bounds (derivative orders ≥ 1 per slot, Σ orders ≤
/// max_order, coefficient a legal monomial of Laurent degree ≤ max_degree).
fn primitive_basis(c: &Cochain, max_order: usize, max_degree: i64) -> Vec<Cochain> {
    let arity = c.arity - 1;
    let nv = c.src.nvars();
    let slot_choices = multi_indices_up_to(nv, max_order as i64);
    let mut slot_lists: Vec<Vec<Exp>> = vec![vec![]];
    for _ in 0..arity {
        let mut next = Vec::new();
        for l in &slot_lists {
            let used: i64 = l.iter().map(|d| d.iter().sum::<i64>()).sum();
            for d in &slot_choices {
                let tot = d.iter().sum::<i64>();
                if tot >= 1 && used + tot <= max_order as i64 {
                    let mut l2 = l.clone();
                    l2.push(d.clone());
                    next.push(l2);
                }
            }
        }
        slot_lists = next;
    }
    let monos = legal_monomials(&c.tgt, max_degree);
    let mut out = Vec::new();
    for slots in &slot_lists {
        for m in &monos {
            let mut b = Cochain::zero(arity, &c.src, &c.tgt, c.transport.clone());
            b.add_term(slots.clone(), MultiPoly::monomial(&c.tgt, m.clone(), Scalar::one()));
            out.push(b);
        }
    }
    out
}

fn multi_indices_up_to(nv: usize, total: i64) -> Vec<Exp> {
    let mut out = vec![vec![]];
    for _ in 0..nv {
        let mut next = Vec::new();
        for e in &out {
            let used: i64 = e.iter().sum();
            for k in 0..=(total - used) {
                let mut e2 = e.clone();
                e2.push(k);
                next.push(e2);
            }
        }
        out = next;
    }
    out
}

fn legal_monomials(ring: &Arc<PolyRing>, max_degree: i64) -> Vec<Exp> {
    let nv = ring.nvars();
    let mut out = vec![vec![]];
    for v in 0..nv {
        let lo = if ring.inverted.contains(&v) { -max_degree } else { 0 };
        let mut next = Vec::new();
        for e in &out {
            let used: i64 = e.iter().map(|x: &i64| x.abs()).sum();
            for k in lo..=max_degree {
                if used + k.abs() <= max_degree {
                    let mut e2 = e.clone();
                    e2.push(k);
                    next.push(e2);
                }
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring2() -> Arc<PolyRing> {
        PolyRing::polynomial(&["x", "y"])
    }

    fn dxdy(ring: &Arc<PolyRing>) -> Cochain {
        // c(f,g) = ∂_x f · ∂_y g
        let mut c = Cochain::zero_endo(2, ring);
        c.add_term(vec![vec![1, 0], vec![0, 1]], MultiPoly::one(ring));
        c
    }

    #[test]
    fn evaluate_single_derivative() {
        let r = PolyRing::polynomial(&["x"]);
        let mut c = Cochain::zero_endo(1, &r);
        c.add_term(vec![vec![1]], MultiPoly::one(&r));
        let v = c.evaluate(&[MultiPoly::parse(&r, "x^2").unwrap()]).unwrap();
        assert_eq!(v.to_string(), "2*x");
    }

    #[test]
    fn evaluate_mixed_derivatives() {
        let r = ring2();
        let c = dxdy(&r);
        let v = c
            .evaluate(&[
                MultiPoly::parse(&r, "x^2").unwrap(),
                MultiPoly::parse(&r, "y^3").unwrap(),
            ])
            .unwrap();
        assert_eq!(v.to_string(), "6*x*y^2");
    }

    #[test]
    fn arity_mismatch_detected() {
        let r = ring2();
        let c = dxdy(&r);
        assert!(matches!(
            c.evaluate(&[MultiPoly::one(&r)]),
            Err(NcdefError::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn derivation_is_a_cocycle() {
        let r = ring2();
        let mut c = Cochain::zero_endo(1, &r);
        c.add_term(vec![vec![1, 0]], MultiPoly::one(&r));
        assert!(c.coboundary().is_zero());
    }

    #[test]
    fn arity0_coboundary_vanishes() {
        let r = ring2();
        let mut c = Cochain::zero_endo(0, &r);
        c.add_term(vec![], MultiPoly::parse(&r, "x*y + 2").unwrap());
        assert!(c.coboundary().is_zero());
    }

    #[test]
    fn multiplication_operator_coboundary() {
        // c = multiplication by x: dc(y,z) = x·y·z with empty slots.
        let r = ring2();
        let mut c = Cochain::zero_endo(1, &r);
        c.add_term(vec![vec![0, 0]], MultiPoly::var(&r, 0));
        let dc = c.coboundary();
        let mut expect = Cochain::zero_endo(2, &r);
        expect.add_term(vec![vec![0, 0], vec![0, 0]], MultiPoly::var(&r, 0));
        assert_eq!(dc, expect);
    }

    #[test]
    fn hkr_of_first_order_skew() {
        let r = ring2();
        let c = dxdy(&r);
        let s = c.hkr_class().unwrap();
        let mut expect = Section::zero(&r, 2);
        expect.add_wedge(vec![0, 1], MultiPoly::one(&r));
        assert_eq!(s, expect);
    }

    #[test]
    fn hkr_kills_symmetric() {
        let r = ring2();
        let mut c = Cochain::zero_endo(2, &r);
        c.add_term(vec![vec![1, 0], vec![1, 0]], MultiPoly::one(&r));
        assert!(c.hkr_class().unwrap().is_zero());
    }

    #[test]
    fn hkr_inverse_roundtrip() {
        let r = ring2();
        let mut s = Section::zero(&r, 2);
        s.add_wedge(vec![0, 1], MultiPoly::parse(&r, "x + 3").unwrap());
        let c = hkr_inverse(&s, &Scalar::one()).unwrap();
        assert_eq!(c.hkr_class().unwrap(), s);
    }

    #[test]
    fn compose_with_identities_is_identity() {
        let r = ring2();
        let c = dxdy(&r);
        let id = Cochain::identity(&r);
        let composed = compose(&c, &[id.clone(), id]).unwrap();
        assert_eq!(composed, c);
    }

    #[test]
    fn compose_respects_evaluation() {
        // (f ∘ (g ⊗ id))(a,b) = f(g(a), b) on sample arguments.
        let r = ring2();
        let f = dxdy(&r);
        let mut g = Cochain::zero_endo(1, &r);
        g.add_term(vec![vec![2, 0]], MultiPoly::var(&r, 1)); // g(a) = y·∂_x²a
        let comp = compose(&f, &[g.clone(), Cochain::identity(&r)]).unwrap();
        let a = MultiPoly::parse(&r, "x^3 + x*y").unwrap();
        let b = MultiPoly::parse(&r, "y^2 + x").unwrap();
        let lhs = comp.evaluate(&[a.clone(), b.clone()]).unwrap();
        let rhs = f.evaluate(&[g.evaluate(&[a]).unwrap(), b]).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn solve_coboundary_roundtrip() {
        let r = ring2();
        let mut b = Cochain::zero_endo(1, &r);
        b.add_term(vec![vec![1, 1]], MultiPoly::var(&r, 0));
        let db = b.coboundary();
        let found = solve_coboundary(&db, 3, 2).unwrap().unwrap();
        assert_eq!(found.coboundary(), db);
    }

    #[test]
    fn solve_coboundary_obstructed_by_hkr() {
        let r = ring2();
        let c = dxdy(&r); // nonzero HKR class, no primitive
        assert!(solve_coboundary(&c, 3, 2).unwrap().is_none());
    }

    #[test]
    fn solve_coboundary_zero() {
        let r = ring2();
        let c = Cochain::zero_endo(2, &r);
        let b = solve_coboundary(&c, 2, 2).unwrap().unwrap();
        assert!(b.is_zero());
    }

    fn arb_cochain(arity: usize) -> impl Strategy<Value = Cochain> {
        let slot = prop::collection::vec(0i64..3, 2).prop_filter("order<=2", |d| d.iter().sum::<i64>() <= 2);
        let term = (
            prop::collection::vec(slot, arity),
            (0i64..3, 0i64..3),
            -3i64..4,
        );
        prop::collection::vec(term, 0..4).prop_map(move |terms| {
            let r = ring2();
            let mut c = Cochain::zero_endo(arity, &r);
            for (slots, (a, b), k) in terms {
                c.add_term(slots, MultiPoly::monomial(&r, vec![a, b], Scalar::from_i64(k)));
            }
            c
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn d_squared_zero(c in arb_cochain(2)) {
            prop_assert!(c.coboundary().coboundary().is_zero());
        }

        #[test]
        fn d_squared_zero_arity1(c in arb_cochain(1)) {
            prop_assert!(c.coboundary().coboundary().is_zero());
        }

        #[test]
        fn hkr_kills_coboundaries(c in arb_cochain(1)) {
            prop_assert!(c.coboundary().hkr_class().unwrap().is_zero());
        }

        #[test]
        fn coboundary_matches_definition(c in arb_cochain(2), xe in 0i64..3, ye in 0i64..3, ze in 0i64..2) {
            // evaluate(dc, ·) against the alternating-sum formula.
            let r = ring2();
            let x = MultiPoly::monomial(&r, vec![xe, 1], Scalar::from_i64(2));
            let y = MultiPoly::monomial(&r, vec![1, ye], Scalar::from_i64(3));
            let z = MultiPoly::monomial(&r, vec![ze, ze], Scalar::one());
            let dc = c.coboundary();
            let lhs = dc.evaluate(&[x.clone(), y.clone(), z.clone()]).unwrap();
            let rhs = x.mul(&c.evaluate(&[y.clone(), z.clone()]).unwrap())
                .sub(&c.evaluate(&[x.mul(&y), z.clone()]).unwrap())
                .add(&c.evaluate(&[x.clone(), y.mul(&z)]).unwrap())
                .sub(&c.evaluate(&[x, y]).unwrap().mul(&z));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
