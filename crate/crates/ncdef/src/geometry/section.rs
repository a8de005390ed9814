//! Polyvector-field sections on a chart and their restriction along the
//! poset (chain rule through the Jacobian of the monomial substitution).

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ChartId, Cover};
use crate::error::{NcdefError, Result};
use crate::poly::{MultiPoly, PolyRing};
use crate::scalar::Scalar;

/// A section of `∧^p T` on one chart: coefficient polynomials indexed by
/// strictly increasing p-subsets of the chart derivations.  `p = 0` is a
/// plain ring element (key `[]`).
#[derive(Clone, PartialEq)]
pub struct Section {
    pub ring: Arc<PolyRing>,
    pub p: usize,
    pub terms: BTreeMap<Vec<usize>, MultiPoly>,
}

impl Section {
    pub fn zero(ring: &Arc<PolyRing>, p: usize) -> Self {
        Section {
            ring: ring.clone(),
            p,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(ring: &Arc<PolyRing>, f: MultiPoly) -> Self {
        let mut s = Section::zero(ring, 0);
        s.add_wedge(vec![], f);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `f · ∂_{key}` where `key` may be unsorted; sorting introduces
    /// the sign of the permutation, repeated indices give zero.
    pub fn add_wedge(&mut self, mut key: Vec<usize>, f: MultiPoly) {
        assert_eq!(key.len(), self.p, "wedge degree mismatch");
        if f.is_zero() {
            return;
        }
        // Bubble sort, tracking the sign.
        let mut sign = 1i64;
        let n = key.len();
        for i in 0..n {
            for j in 0..n.saturating_sub(1 + i) {
                if key[j] > key[j + 1] {
                    key.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        if key.windows(2).any(|w| w[0] == w[1]) {
            return;
        }
        let f = if sign < 0 { f.neg() } else { f };
        let entry = self
            .terms
            .entry(key.clone())
            .or_insert_with(|| MultiPoly::zero(&self.ring));
        *entry = entry.add(&f);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, rhs: &Section) -> Section {
        assert_eq!(self.p, rhs.p);
        let mut out = self.clone();
        for (k, f) in &rhs.terms {
            out.add_wedge(k.clone(), f.clone());
        }
        out
    }

    pub fn neg(&self) -> Section {
        let mut out = Section::zero(&self.ring, self.p);
        for (k, f) in &self.terms {
            out.terms.insert(k.clone(), f.neg());
        }
        out
    }

    pub fn sub(&self, rhs: &Section) -> Section {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: &Scalar) -> Section {
        let mut out = Section::zero(&self.ring, self.p);
        for (k, f) in &self.terms {
            out.add_wedge(k.clone(), f.scale(s));
        }
        out
    }

    /// Splits the section by lattice character of its monomial terms.
    pub fn by_character(&self, cover: &Cover, chart: ChartId) -> BTreeMap<Vec<i64>, Section> {
        let ch = &cover.charts[chart];
        let mut out: BTreeMap<Vec<i64>, Section> = BTreeMap::new();
        for (key, f) in &self.terms {
            for (e, c) in &f.terms {
                let mut chi = ch.char_of_exp(e, cover.lattice_rank);
                for &w in key {
                    for (r, &v) in ch.var_chars[w].iter().enumerate() {
                        chi[r] -= v;
                    }
                }
                out.entry(chi)
                    .or_insert_with(|| Section::zero(&self.ring, self.p))
                    .add_wedge(key.clone(), MultiPoly::monomial(&self.ring, e.clone(), c.clone()));
            }
        }
        out
    }
}

impl std::fmt::Debug for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if k.is_empty() {
                write!(f, "{c}")?;
            } else {
                let wedge = k
                    .iter()
                    .map(|&i| format!("d{}", self.ring.vars[i]))
                    .collect::<Vec<_>>()
                    .join("^");
                write!(f, "({c})*{wedge}")?;
            }
        }
        Ok(())
    }
}

/// Determinant by Laplace expansion (matrices here are tiny).
fn poly_det(m: &[Vec<MultiPoly>], ring: &Arc<PolyRing>) -> MultiPoly {
    let n = m.len();
    if n == 0 {
        return MultiPoly::one(ring);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = MultiPoly::zero(ring);
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<MultiPoly>> = (1..n)
            .map(|r| (0..n).filter(|&cc| cc != c).map(|cc| m[r][cc].clone()).collect())
            .collect();
        let term = m[0][c].mul(&poly_det(&minor, ring));
        det = if c % 2 == 0 { det.add(&term) } else { det.sub(&term) };
    }
    det
}

/// Inverse of the Jacobian of the restriction `i → j`: entry `[b][c]`
/// gives the `∂_{y_c}` component of the transported `∂_{x_b}`.
pub fn jacobian_inverse(cover: &Cover, i: ChartId, j: ChartId) -> Result<Vec<Vec<MultiPoly>>> {
    let images = cover.transport_images(i, j)?;
    let ring = &cover.charts[j].ring;
    let d = images.len();
    assert_eq!(d, cover.charts[j].dim());
    let jac: Vec<Vec<MultiPoly>> = (0..d)
        .map(|b| (0..d).map(|c| images[b].derivative(c)).collect())
        .collect();
    let det = poly_det(&jac, ring);
    let det_inv = det.monomial_inverse().map_err(|_| {
        NcdefError::IncompatibleData(format!(
            "restriction {i}→{j} has non-unit Jacobian determinant {det}"
        ))
    })?;
    let mut inv = vec![vec![MultiPoly::zero(ring); d]; d];
    for b in 0..d {
        for c in 0..d {
            // The transported ∂_{x_b} is the b-th column of J⁻¹:
            // inv[b][c] = (J⁻¹)_{cb} = cofactor(b, c) / det.
            let minor: Vec<Vec<MultiPoly>> = (0..d)
                .filter(|&r| r != b)
                .map(|r| {
                    (0..d)
                        .filter(|&cc| cc != c)
                        .map(|cc| jac[r][cc].clone())
                        .collect()
                })
                .collect();
            let mut cof = poly_det(&minor, ring).mul(&det_inv);
            if (b + c) % 2 == 1 {
                cof = cof.neg();
            }
            inv[b][c] = cof;
        }
    }
    Ok(inv)
}

/// Restricts a section from chart `i` to a deeper chart `j ≥ i`:
/// coefficients through `φ⁰_{ji}`, derivations through the chain rule.
pub fn restrict(cover: &Cover, s: &Section, i: ChartId, j: ChartId) -> Result<Section> {
    if i == j {
        return Ok(s.clone());
    }
    if !cover.less(i, j) {
        return Err(NcdefError::NotComparable(format!("{i} and {j}")));
    }
    let images = cover.transport_images(i, j)?;
    let ring = &cover.charts[j].ring;
    let mut out = Section::zero(ring, s.p);
    if s.p == 0 {
        for (_, f) in &s.terms {
            out.add_wedge(vec![], f.substitute(ring, &images)?);
        }
        return Ok(out);
    }
    let k = jacobian_inverse(cover, i, j)?;
    let d = ring.nvars();
    for (key, f) in &s.terms {
        let base = f.substitute(ring, &images)?;
        // Expand the wedge of transported derivations.
        let mut parts: Vec<(Vec<usize>, MultiPoly)> = vec![(vec![], base)];
        for &b in key {
            let mut next = Vec::new();
            for (sel, coeff) in &parts {
                for c in 0..d {
                    if k[b][c].is_zero() || sel.contains(&c) {
                        continue;
                    }
                    let mut sel2 = sel.clone();
                    sel2.push(c);
                    next.push((sel2, coeff.mul(&k[b][c])));
                }
            }
            parts = next;
        }
        for (sel, coeff) in parts {
            out.add_wedge(sel, coeff);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{affine_chain, proj};
    use super::*;

    #[test]
    fn restrict_identity_chart_var() {
        // ∂_u on U0 of proj(1) restricted to U01 is still ∂_u.
        let x = proj(1).unwrap();
        let mut s = Section::zero(&x.charts[0].ring, 1);
        s.add_wedge(vec![0], MultiPoly::one(&x.charts[0].ring));
        let r = restrict(&x, &s, 0, 2).unwrap();
        let mut expect = Section::zero(&x.charts[2].ring, 1);
        expect.add_wedge(vec![0], MultiPoly::one(&x.charts[2].ring));
        assert_eq!(r, expect);
    }

    #[test]
    fn restrict_chain_rule_inverts() {
        // ∂_v on U1 of proj(1) restricted to U01 is −u² ∂_u.
        let x = proj(1).unwrap();
        let mut s = Section::zero(&x.charts[1].ring, 1);
        s.add_wedge(vec![0], MultiPoly::one(&x.charts[1].ring));
        let r = restrict(&x, &s, 1, 2).unwrap();
        let mut expect = Section::zero(&x.charts[2].ring, 1);
        expect.add_wedge(
            vec![0],
            MultiPoly::monomial(&x.charts[2].ring, vec![2], Scalar::from_i64(-1)),
        );
        assert_eq!(r, expect);
    }

    #[test]
    fn restrict_composes_along_chains() {
        let x = affine_chain(3).unwrap();
        let ring = &x.charts[0].ring;
        let mut s = Section::zero(ring, 2);
        s.add_wedge(vec![0, 1], MultiPoly::parse(ring, "x*y + z^2").unwrap());
        s.add_wedge(vec![1, 2], MultiPoly::parse(ring, "3*x").unwrap());
        let via = restrict(&x, &restrict(&x, &s, 0, 1).unwrap(), 1, 3).unwrap();
        let direct = restrict(&x, &s, 0, 3).unwrap();
        assert_eq!(via, direct);
    }

    #[test]
    fn restrict_incomparable_errors() {
        let x = proj(1).unwrap();
        let s = Section::zero(&x.charts[0].ring, 1);
        assert!(matches!(
            restrict(&x, &s, 0, 1),
            Err(NcdefError::NotComparable(_))
        ));
    }

    #[test]
    fn wedge_antisymmetry() {
        let x = proj(2).unwrap();
        let ring = &x.charts[0].ring;
        let mut s = Section::zero(ring, 2);
        s.add_wedge(vec![1, 0], MultiPoly::one(ring));
        s.add_wedge(vec![0, 1], MultiPoly::one(ring));
        assert!(s.is_zero());
        s.add_wedge(vec![0, 0], MultiPoly::one(ring));
        assert!(s.is_zero());
    }
}
