//! Čech cohomology of `∧^p T` over the chart poset, computed per lattice
//! character by finite exact linear algebra.
//!
//! The complex has one slot per strictly increasing chain of the poset;
//! the value of a chain lives on its deepest chart.  The differential is
//! the alternating face sum, with the restriction map applied to the face
//! that forgets the deepest index.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::section::{restrict, Section};
use super::{ChartId, Cover, CoverKind};
use crate::error::{NcdefError, Result};
use crate::linalg::Matrix;
use crate::poly::{Exp, MultiPoly};
use crate::scalar::Scalar;

/// Character enumeration strategy.
#[derive(Debug, Clone, Copy)]
pub enum Window {
    /// Complete toric cover: all characters with `|χ_i| ≤ w`, with a
    /// zero-cohomology check on the boundary shell.
    Box(i64),
    /// Affine cover slice: coefficient total degree ≤ cap (finite only
    /// for unlocalized charts).
    DegreeCap(i64),
}

impl Window {
    /// Default box half-width: the chart presentations only involve
    /// exponents in {-1,0,1}, expanded by p + q + 2 per the window rule.
    pub fn auto_box(cover: &Cover, p: usize) -> Window {
        Window::Box(1 + p as i64 + cover.max_cech_degree() as i64 + 2)
    }
}

/// A level-q Čech cochain of `∧^p T` sections over the poset.
#[derive(Clone, PartialEq)]
pub struct SectionCochain {
    pub p: usize,
    pub q: usize,
    pub values: BTreeMap<Vec<ChartId>, Section>,
}

impl SectionCochain {
    pub fn zero(p: usize, q: usize) -> Self {
        SectionCochain {
            p,
            q,
            values: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(|s| s.is_zero())
    }

    pub fn set(&mut self, chain: Vec<ChartId>, s: Section) {
        assert_eq!(chain.len(), self.q + 1);
        assert_eq!(s.p, self.p);
        if s.is_zero() {
            self.values.remove(&chain);
        } else {
            self.values.insert(chain, s);
        }
    }

    pub fn get(&self, chain: &[ChartId]) -> Option<&Section> {
        self.values.get(chain)
    }

    pub fn add(&self, rhs: &SectionCochain) -> SectionCochain {
        assert_eq!((self.p, self.q), (rhs.p, rhs.q));
        let mut out = self.clone();
        for (k, s) in &rhs.values {
            let cur = out
                .values
                .get(k)
                .cloned()
                .unwrap_or_else(|| Section::zero(&s.ring, self.p));
            out.set(k.clone(), cur.add(s));
        }
        out
    }

    pub fn neg(&self) -> SectionCochain {
        let mut out = SectionCochain::zero(self.p, self.q);
        for (k, s) in &self.values {
            out.set(k.clone(), s.neg());
        }
        out
    }

    pub fn sub(&self, rhs: &SectionCochain) -> SectionCochain {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, c: &Scalar) -> SectionCochain {
        let mut out = SectionCochain::zero(self.p, self.q);
        for (k, s) in &self.values {
            out.set(k.clone(), s.scale(c));
        }
        out
    }

    /// Characters occurring in any value (computed on each value's own
    /// chart; restriction preserves characters, so this is well defined).
    pub fn characters(&self, cover: &Cover) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        for (chain, s) in &self.values {
            let top = *chain.last().unwrap();
            out.extend(s.by_character(cover, top).into_keys());
        }
        out
    }

    /// The χ-isotypic part of the cochain.
    pub fn character_part(&self, cover: &Cover, chi: &[i64]) -> SectionCochain {
        let mut out = SectionCochain::zero(self.p, self.q);
        for (chain, s) in &self.values {
            let top = *chain.last().unwrap();
            if let Some(part) = s.by_character(cover, top).remove(chi) {
                out.set(chain.clone(), part);
            }
        }
        out
    }
}

impl std::fmt::Debug for SectionCochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "cochain(p={}, q={}) {{", self.p, self.q)?;
        for (k, s) in &self.values {
            writeln!(f, "  {k:?}: {s:?}")?;
        }
        write!(f, "}}")
    }
}

/// The finite complex of one character: bases of each `C^q` and the
/// differential matrices.
pub struct CharComplex<'a> {
    pub cover: &'a Cover,
    pub p: usize,
    pub chi: Vec<i64>,
    pub chains: Vec<Vec<Vec<ChartId>>>,
    /// Per level: (chain index, derivation subset, coefficient monomial).
    pub bases: Vec<Vec<(usize, Vec<usize>, Exp)>>,
    /// `d[q]: C^q → C^{q+1}`; the top one has zero rows.
    pub d: Vec<Matrix>,
    index: Vec<HashMap<(usize, Vec<usize>), usize>>,
    chain_index: Vec<HashMap<Vec<ChartId>, usize>>,
}

fn subsets_of_size(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur = vec![];
    fn rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, start: usize, n: usize, p: usize) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(out, cur, i + 1, n, p);
            cur.pop();
        }
    }
    rec(&mut out, &mut cur, 0, n, p);
    out
}

/// The coefficient monomial of the (chart, W, χ) slot, if a legal one
/// exists (0- or 1-dimensional per slot).
fn section_monomial(
    cover: &Cover,
    chart: ChartId,
    w: &[usize],
    chi: &[i64],
    cap: Option<i64>,
) -> Option<Exp> {
    let ch = &cover.charts[chart];
    let mut target = chi.to_vec();
    for &v in w {
        for (r, &x) in ch.var_chars[v].iter().enumerate() {
            target[r] += x;
        }
    }
    let m = ch.monomial_with_char(&target)?;
    for (b, &e) in m.iter().enumerate() {
        if e < 0 && !ch.ring.inverted.contains(&b) {
            return None;
        }
    }
    if let Some(cap) = cap {
        if m.iter().sum::<i64>() > cap {
            return None;
        }
    }
    Some(m)
}

/// Builds the per-character complex up to Čech degree `qmax`.
pub fn char_complex<'a>(
    cover: &'a Cover,
    p: usize,
    chi: Vec<i64>,
    cap: Option<i64>,
    qmax: usize,
) -> CharComplex<'a> {
    let mut chains = Vec::new();
    let mut bases = Vec::new();
    let mut index = Vec::new();
    let mut chain_index = Vec::new();
    for q in 0..=qmax {
        let ch: Vec<Vec<ChartId>> = cover.chains(q + 1);
        let ci: HashMap<Vec<ChartId>, usize> =
            ch.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let mut basis = Vec::new();
        let mut idx = HashMap::new();
        for (cidx, chain) in ch.iter().enumerate() {
            let top = *chain.last().unwrap();
            for w in subsets_of_size(cover.charts[top].dim(), p) {
                if let Some(m) = section_monomial(cover, top, &w, &chi, cap) {
                    idx.insert((cidx, w.clone()), basis.len());
                    basis.push((cidx, w, m));
                }
            }
        }
        chains.push(ch);
        bases.push(basis);
        index.push(idx);
        chain_index.push(ci);
    }
    let mut d = Vec::new();
    for q in 0..=qmax {
        let rows = if q < qmax { bases[q + 1].len() } else { 0 };
        let mut m = Matrix::zero(rows, bases[q].len());
        if q < qmax {
            for (tau_idx, tau) in chains[q + 1].iter().enumerate() {
                for k in 0..tau.len() {
                    let face: Vec<ChartId> = tau
                        .iter()
                        .enumerate()
                        .filter(|(pos, _)| *pos != k)
                        .map(|(_, &c)| c)
                        .collect();
                    let face_idx = chain_index[q][&face];
                    let sign = if k % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                    if k < tau.len() - 1 {
                        // Same deepest chart: identity on slots.
                        for (col, (cidx, w, _)) in bases[q].iter().enumerate() {
                            if *cidx != face_idx {
                                continue;
                            }
                            if let Some(&row) = index[q + 1].get(&(tau_idx, w.clone())) {
                                let cur = m.at(row, col).clone();
                                m.set(row, col, cur + sign.clone());
                            }
                        }
                    } else {
                        // Deepest face: transport from tau[q] to tau[q+1].
                        let from = tau[tau.len() - 2];
                        let to = *tau.last().unwrap();
                        for (col, (cidx, w, mono)) in bases[q].iter().enumerate() {
                            if *cidx != face_idx {
                                continue;
                            }
                            let mut s = Section::zero(&cover.charts[from].ring, p);
                            s.add_wedge(
                                w.clone(),
                                MultiPoly::monomial(
                                    &cover.charts[from].ring,
                                    mono.clone(),
                                    Scalar::one(),
                                ),
                            );
                            let r = restrict(cover, &s, from, to)
                                .expect("transport along a chain must exist");
                            for (w2, coeff) in &r.terms {
                                let row = index[q + 1]
                                    .get(&(tau_idx, w2.clone()))
                                    .copied()
                                    .expect("restricted term must be a basis slot");
                                let (_, _, m2) = &bases[q + 1][row];
                                for (e, c) in &coeff.terms {
                                    assert_eq!(
                                        e, m2,
                                        "character-preserving restriction hit a different monomial: chi={:?} from={from} to={to} w={w:?} mono={mono:?} w2={w2:?}",
                                        chi
                                    );
                                    let cur = m.at(row, col).clone();
                                    m.set(row, col, cur + sign.clone() * c.clone());
                                }
                            }
                        }
                    }
                }
            }
        }
        d.push(m);
    }
    CharComplex {
        cover,
        p,
        chi,
        chains,
        bases,
        d,
        index,
        chain_index,
    }
}

impl<'a> CharComplex<'a> {
    pub fn dim_c(&self, q: usize) -> usize {
        self.bases[q].len()
    }

    pub fn h(&self, q: usize) -> usize {
        let z = self.dim_c(q) - self.d[q].rank();
        let b = if q == 0 { 0 } else { self.d[q - 1].rank() };
        z - b
    }

    /// Coordinates of a χ-pure cochain on the `C^q` basis.
    pub fn coords(&self, c: &SectionCochain) -> Result<Vec<Scalar>> {
        let q = c.q;
        let mut v = vec![Scalar::zero(); self.dim_c(q)];
        for (chain, s) in &c.values {
            let Some(&cidx) = self.chain_index[q].get(chain) else {
                return Err(NcdefError::IncompatibleData(format!(
                    "tuple {chain:?} is not a poset chain"
                )));
            };
            for (w, coeff) in &s.terms {
                for (e, sc) in &coeff.terms {
                    let Some(&slot) = self.index[q].get(&(cidx, w.clone())) else {
                        return Err(NcdefError::IncompatibleData(
                            "section term outside the character slot".into(),
                        ));
                    };
                    let (_, _, m) = &self.bases[q][slot];
                    if e != m {
                        return Err(NcdefError::IncompatibleData(
                            "section monomial does not match its character slot".into(),
                        ));
                    }
                    v[slot] += sc.clone();
                }
            }
        }
        Ok(v)
    }

    pub fn cochain_from_coords(&self, q: usize, v: &[Scalar]) -> SectionCochain {
        let mut out = SectionCochain::zero(self.p, q);
        for (slot, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (cidx, w, m) = &self.bases[q][slot];
            let chain = self.chains[q][*cidx].clone();
            let top = *chain.last().unwrap();
            let ring = &self.cover.charts[top].ring;
            let mut s = out
                .values
                .get(&chain)
                .cloned()
                .unwrap_or_else(|| Section::zero(ring, self.p));
            s.add_wedge(w.clone(), MultiPoly::monomial(ring, m.clone(), c.clone()));
            out.set(chain, s);
        }
        out
    }

    /// Representatives of `H^q`: kernel vectors independent modulo the
    /// image of `d^{q-1}`.
    pub fn h_reps(&self, q: usize) -> Vec<Vec<Scalar>> {
        let ker = self.d[q].kernel();
        let n = self.dim_c(q);
        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        if q > 0 {
            let dm = &self.d[q - 1];
            for col in 0..dm.cols {
                let v: Vec<Scalar> = (0..dm.rows).map(|r| dm.at(r, col).clone()).collect();
                rows.push(v);
            }
            rows = crate::linalg::independent_subset(rows, n);
        }
        let mut reps = Vec::new();
        for v in ker {
            let mut test = rows.clone();
            test.push(v.clone());
            let rank = Matrix::from_rows(test.clone()).rank();
            if rank > rows.len() {
                rows = test;
                reps.push(v);
            }
        }
        reps
    }

    /// Solves `d x = v` for a level-q cochain `v`; None if not a boundary.
    pub fn solve_preimage(&self, q: usize, v: &[Scalar]) -> Option<Vec<Scalar>> {
        if q == 0 {
            return if v.iter().all(|c| c.is_zero()) {
                Some(vec![])
            } else {
                None
            };
        }
        self.d[q - 1].solve(v)
    }
}

/// Cohomology dimensions and Čech-cocycle bases of `∧^p T`.
pub struct CohomologyResult {
    pub p: usize,
    /// `h[q]` for q = 0..=max(3, top degree).
    pub h: Vec<usize>,
    pub reps: Vec<Vec<SectionCochain>>,
}

fn box_chars(l: usize, w: i64, sum_zero: bool) -> Vec<Vec<i64>> {
    let mut out = vec![];
    let mut cur = vec![0i64; l];
    fn rec(out: &mut Vec<Vec<i64>>, cur: &mut Vec<i64>, i: usize, w: i64, sum_zero: bool) {
        if i == cur.len() {
            if !sum_zero || cur.iter().sum::<i64>() == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in -w..=w {
            cur[i] = v;
            rec(out, cur, i + 1, w, sum_zero);
        }
    }
    rec(&mut out, &mut cur, 0, w, sum_zero);
    out
}

fn cap_chars(l: usize, cap: i64) -> Vec<Vec<i64>> {
    let mut out = vec![];
    let mut cur = vec![0i64; l];
    fn rec(out: &mut Vec<Vec<i64>>, cur: &mut Vec<i64>, i: usize, cap: i64) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in -1..=cap {
            cur[i] = v;
            rec(out, cur, i + 1, cap);
        }
    }
    rec(&mut out, &mut cur, 0, cap);
    out
}

/// Exact dimensions of `H^q(X, ∧^p T)` with explicit cocycle bases.
pub fn sheaf_cohomology(
    cover: &Cover,
    p: usize,
    window: Option<Window>,
) -> Result<CohomologyResult> {
    let window = window.unwrap_or_else(|| match cover.kind {
        CoverKind::Affine => Window::DegreeCap(0),
        _ => Window::auto_box(cover, p),
    });
    let qmax = cover.max_cech_degree();
    let report_len = (qmax + 1).max(4);
    let (chars, cap, shell_w) = match window {
        Window::Box(w) => {
            if cover.kind == CoverKind::Affine {
                return Err(NcdefError::InfiniteDimensional(
                    "affine covers need a degree-cap window".into(),
                ));
            }
            (box_chars(cover.lattice_rank, w, cover.sum_zero), None, Some(w))
        }
        Window::DegreeCap(cap) => {
            if cover
                .charts
                .iter()
                .any(|c| !c.ring.inverted.is_empty())
            {
                return Err(NcdefError::InfiniteDimensional(
                    "degree-capped cohomology needs unlocalized charts".into(),
                ));
            }
            (cap_chars(cover.lattice_rank, cap), Some(cap), None)
        }
    };
    let mut h = vec![0usize; report_len];
    let mut reps: Vec<Vec<SectionCochain>> = vec![vec![]; report_len];
    for chi in chars {
        let cx = char_complex(cover, p, chi.clone(), cap, qmax);
        if (0..=qmax).all(|q| cx.dim_c(q) == 0) {
            continue;
        }
        for q in 0..=qmax {
            let hq = cx.h(q);
            if hq == 0 {
                continue;
            }
            if let Some(w) = shell_w {
                if chi.iter().any(|x| x.abs() == w) {
                    return Err(NcdefError::WindowTooSmall(chi));
                }
            }
            h[q] += hq;
            for v in cx.h_reps(q) {
                reps[q].push(cx.cochain_from_coords(q, &v));
            }
        }
    }
    Ok(CohomologyResult { p, h, reps })
}

#[cfg(test)]
mod tests {
    use super::super::{affine, p1xp1, proj};
    use super::*;

    #[test]
    fn proj1_tangent() {
        let x = proj(1).unwrap();
        let r = sheaf_cohomology(&x, 1, None).unwrap();
        assert_eq!(&r.h[..2], &[3, 0]);
        assert_eq!(r.reps[0].len(), 3);
    }

    #[test]
    fn proj1_structure_sheaf_and_wedge2() {
        let x = proj(1).unwrap();
        let o = sheaf_cohomology(&x, 0, None).unwrap();
        assert_eq!(&o.h[..2], &[1, 0]);
        let w2 = sheaf_cohomology(&x, 2, None).unwrap();
        assert!(w2.h.iter().all(|&d| d == 0));
    }

    #[test]
    fn proj2_structure_sheaf() {
        let x = proj(2).unwrap();
        let o = sheaf_cohomology(&x, 0, None).unwrap();
        assert_eq!(&o.h[..4], &[1, 0, 0, 0]);
    }

    #[test]
    fn affine_plane_bivector_slices() {
        let x = affine(2).unwrap();
        let cap0 = sheaf_cohomology(&x, 2, Some(Window::DegreeCap(0))).unwrap();
        assert_eq!(cap0.h[0], 1);
        let cap1 = sheaf_cohomology(&x, 2, Some(Window::DegreeCap(1))).unwrap();
        assert_eq!(cap1.h[0], 3);
    }

    #[test]
    fn affine_box_window_rejected() {
        let x = affine(2).unwrap();
        assert!(matches!(
            sheaf_cohomology(&x, 1, Some(Window::Box(3))),
            Err(NcdefError::InfiniteDimensional(_))
        ));
    }

    #[test]
    fn p1xp1_structure_sheaf() {
        let x = p1xp1().unwrap();
        let o = sheaf_cohomology(&x, 0, None).unwrap();
        assert_eq!(&o.h[..4], &[1, 0, 0, 0]);
    }

    #[test]
    fn reps_are_cocycles() {
        // every reported representative solves d(rep) = 0 in its complex.
        let x = proj(1).unwrap();
        let r = sheaf_cohomology(&x, 1, None).unwrap();
        for rep in &r.reps[0] {
            for chi in rep.characters(&x) {
                let cx = char_complex(&x, 1, chi.clone(), None, x.max_cech_degree());
                let v = cx.coords(&rep.character_part(&x, &chi)).unwrap();
                let d = &cx.d[0];
                for row in 0..d.rows {
                    let mut acc = Scalar::zero();
                    for col in 0..d.cols {
                        acc += d.at(row, col).clone() * v[col].clone();
                    }
                    assert!(acc.is_zero());
                }
            }
        }
    }
}
