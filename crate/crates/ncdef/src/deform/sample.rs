//! Seeded random generators for the verification suites: polydifferential
//! cochains, candidate lifts with kernel-level noise, coherent twisted
//! chains, finite posets and integer-vector cocycles.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artin::{artin_quotient, small_extension, AlgebraMap, SmallExtension};
use crate::cech::{cech_d, FinitePoset, OrderedCochain, VecSystem};
use crate::error::Result;
use crate::geometry::{affine_chain, Cover};
use crate::hochschild::Cochain;
use crate::poly::{Exp, MultiPoly, PolyRing};
use crate::scalar::Scalar;

use super::equiv::apply_iso_data;
use super::relem::RElem;
use super::{lift_candidate, CandidateLift, DeformationData, Equivalence, NCDeformation};

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn flip(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }

    /// A nonzero small integer scalar.
    pub fn scalar(&mut self) -> Scalar {
        let mut v = 0i64;
        while v == 0 {
            v = self.rng.gen_range(-3..=3);
        }
        Scalar::from_i64(v)
    }

    /// A 1–2-term polynomial with nonnegative exponents of total degree at
    /// most `max_deg`.
    pub fn poly(&mut self, ring: &Arc<PolyRing>, max_deg: i64) -> MultiPoly {
        let nv = ring.nvars();
        let mut p = MultiPoly::zero(ring);
        for _ in 0..=self.below(2) {
            let mut e = vec![0i64; nv];
            for _ in 0..self.below(max_deg as usize + 1) {
                e[self.below(nv)] += 1;
            }
            p.add_term(e, self.scalar());
        }
        p
    }

    /// A random polydifferential cochain of the given shape, every slot
    /// differentiated at least once (derivative order ≤ `max_order` per
    /// slot, coefficient degree ≤ `max_deg`).
    pub fn cochain_like(&mut self, shape: &Cochain, max_order: usize, max_deg: i64) -> Cochain {
        let nv = shape.src.nvars();
        let mut c = shape.clone();
        for _ in 0..=self.below(2) {
            let slots: Vec<Exp> = (0..shape.arity)
                .map(|_| {
                    let mut e = vec![0i64; nv];
                    for _ in 0..=self.below(max_order) {
                        e[self.below(nv)] += 1;
                    }
                    e
                })
                .collect();
            c.add_term(slots, self.poly(&shape.tgt, max_deg));
        }
        c
    }

    fn endo_shape(cover: &Cover, i: usize, arity: usize) -> Cochain {
        Cochain::zero_endo(arity, &cover.charts[i].ring)
    }

    /// A random Hochschild 2-cocycle on chart `i`: bidifferential terms
    /// `p · ∂ᵤ ⊗ ∂ᵥ` (closed because both factors are derivations) plus the
    /// differential of a random 1-cochain.
    fn mult_cocycle(&mut self, cover: &Cover, i: usize) -> Cochain {
        let ring = &cover.charts[i].ring;
        let nv = ring.nvars();
        let mut c = self
            .cochain_like(&Self::endo_shape(cover, i, 1), 2, 2)
            .coboundary();
        for _ in 0..=self.below(2) {
            let mut eu = vec![0i64; nv];
            eu[self.below(nv)] = 1;
            let mut ev = vec![0i64; nv];
            ev[self.below(nv)] = 1;
            c.add_term(vec![eu, ev], self.poly(ring, 2));
        }
        c
    }

    fn glue_shape(cover: &Cover, i: usize, j: usize) -> Result<Cochain> {
        Ok(Cochain::zero(
            1,
            &cover.charts[i].ring,
            &cover.charts[j].ring,
            cover.transport_images(i, j)?,
        ))
    }

    /// `k[t]/t³ → k[t]/t²`.
    pub fn order_two_extension(&mut self) -> Result<Arc<SmallExtension>> {
        let src = artin_quotient(&["t"], vec![], 2)?;
        let tgt = artin_quotient(&["t"], vec![], 1)?;
        let map = AlgebraMap::identity_params(src.clone(), tgt.clone())?;
        Ok(Arc::new(small_extension(src, tgt, map)?))
    }

    /// A random candidate lift over `k[t]/t³ → k[t]/t²`: a valid
    /// first-order deformation (a random conjugate of random single-chart
    /// correction data), lifted verbatim and perturbed by random
    /// kernel-slot cochains.
    pub fn candidate(&mut self, cover: &Arc<Cover>) -> Result<CandidateLift> {
        let ext = self.order_two_extension()?;
        let mut data = DeformationData::trivial(&ext.target, cover);
        if cover.n_charts() == 1 {
            let c = self.mult_cocycle(cover, 0);
            data.mult[0].insert(1, c);
        }
        let mut eq = Equivalence::identity(cover);
        for i in 0..cover.n_charts() {
            if self.flip() {
                let c = self.cochain_like(&Self::endo_shape(cover, i, 1), 2, 2);
                eq.theta[i].insert(1, c);
            }
        }
        let data = apply_iso_data(&data, &eq)?;
        let d = NCDeformation::new(data)?;
        let mut cand = lift_candidate(&d, &ext);
        self.perturb_kernel(&mut cand, false)?;
        Ok(cand)
    }

    /// A random twisted candidate on the chain cover with `d + 1` charts:
    /// the twist is a coboundary of random units (so its cocycle defect
    /// vanishes identically at the source), conjugated by a random chart
    /// isomorphism, then perturbed at kernel slots.  With `perturb_twist`
    /// the twist itself receives kernel-level noise, which breaks the
    /// cocycle condition but none of the coboundary identities.
    pub fn twisted_chain_candidate(
        &mut self,
        d: usize,
        perturb_twist: bool,
    ) -> Result<CandidateLift> {
        let cover = affine_chain(d)?;
        let ext = self.order_two_extension()?;
        let mut prime = DeformationData::trivial_twisted(&ext.source, &cover);
        let mut units: BTreeMap<(usize, usize), RElem> = BTreeMap::new();
        for pair in cover.chains(2) {
            let (i, j) = (pair[0], pair[1]);
            let ring = &cover.charts[j].ring;
            let mut u = RElem::one(&ext.source, ring);
            u.add_comp(1, self.poly(ring, 2));
            if self.flip() {
                u.add_comp(2, self.poly(ring, 2));
            }
            units.insert((i, j), u);
        }
        for ch in cover.chains(3) {
            let (i, j, k) = (ch[0], ch[1], ch[2]);
            let moved = prime.relem_glue(j, k, &units[&(i, j)])?;
            let prod = prime.relem_mul(k, &moved, &units[&(j, k)])?;
            let inv = prime.relem_inverse(k, &units[&(i, k)])?;
            prime.set_tau(i, j, k, prime.relem_mul(k, &prod, &inv)?);
        }
        let mut eq = Equivalence::identity(&cover);
        for i in 0..cover.n_charts() {
            if self.flip() {
                let c = self.cochain_like(&Self::endo_shape(&cover, i, 1), 1, 1);
                eq.theta[i].insert(1, c);
            }
        }
        let data = apply_iso_data(&prime, &eq)?;
        // the induced data downstairs must be a deformation
        let beta = AlgebraMap::identity_params(ext.source.clone(), ext.target.clone())?;
        NCDeformation::new(data.map_base(&beta)?)?;
        let mut cand = CandidateLift { data, ext };
        self.perturb_kernel(&mut cand, perturb_twist)?;
        Ok(cand)
    }

    /// Adds random cochains at the top (kernel) slot of every structure.
    fn perturb_kernel(&mut self, cand: &mut CandidateLift, perturb_twist: bool) -> Result<()> {
        let cover = cand.data.cover.clone();
        let slot = cand.ext.source.dim() - 1;
        debug_assert!(cand.ext.source.basis_degree(slot) >= 1);
        for i in 0..cover.n_charts() {
            if self.flip() {
                let c = self.cochain_like(&Self::endo_shape(&cover, i, 2), 2, 2);
                let e = cand.data.mult[i]
                    .entry(slot)
                    .or_insert_with(|| Self::endo_shape(&cover, i, 2));
                *e = e.add(&c);
            }
        }
        for pair in cover.chains(2) {
            let (i, j) = (pair[0], pair[1]);
            if self.flip() {
                let shape = Self::glue_shape(&cover, i, j)?;
                let c = self.cochain_like(&shape, 2, 2);
                let e = cand
                    .data
                    .gluing
                    .entry((i, j))
                    .or_default()
                    .entry(slot)
                    .or_insert(shape);
                *e = e.add(&c);
            }
        }
        if perturb_twist && cand.data.is_twisted() {
            for ch in cover.chains(3) {
                let (i, j, k) = (ch[0], ch[1], ch[2]);
                if self.flip() {
                    let mut tau = cand.data.tau(i, j, k);
                    tau.add_comp(slot, self.poly(&cover.charts[k].ring, 2));
                    cand.data.set_tau(i, j, k, tau);
                }
            }
        }
        Ok(())
    }

    /// A random poset with joins on 2–`max` elements.
    pub fn poset(&mut self, max: usize) -> FinitePoset {
        assert!(max >= 2);
        for _ in 0..1000 {
            let n = 2 + self.below(max - 1);
            let mut leq = vec![vec![false; n]; n];
            for (i, row) in leq.iter_mut().enumerate() {
                row[i] = true;
            }
            for i in 0..n {
                for j in i + 1..n {
                    if self.flip() {
                        leq[i][j] = true;
                    }
                }
            }
            // transitive closure (indices already topologically sorted)
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if leq[i][k] && leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
            if let Ok(p) = FinitePoset::new(leq) {
                return p;
            }
        }
        // fallback: a chain always works
        let n = max;
        FinitePoset::new((0..n).map(|i| (0..n).map(|j| i <= j).collect()).collect()).unwrap()
    }

    fn vec_value(&mut self, dim: usize) -> Vec<i64> {
        (0..dim).map(|_| self.rng.gen_range(-4..=4)).collect()
    }

    /// A random ordered cochain on strictly increasing `n`-tuples.
    pub fn vec_cochain(&mut self, sys: &VecSystem, n: usize) -> OrderedCochain<Vec<i64>> {
        let mut c = OrderedCochain::new(n);
        for chain in sys.poset.chains(n) {
            if self.flip() {
                c.set(chain, self.vec_value(sys.dim));
            }
        }
        c
    }

    /// A random ordered cocycle: for `n = 1`, constant on comparability
    /// components; for `n ≥ 2`, the differential of a random `(n−1)`-cochain.
    pub fn vec_cocycle(&mut self, sys: &VecSystem, n: usize) -> Result<OrderedCochain<Vec<i64>>> {
        if n == 1 {
            let m = sys.poset.size();
            let mut comp: Vec<usize> = (0..m).collect();
            // union-find-free closure: propagate minima over comparable pairs
            loop {
                let mut changed = false;
                for i in 0..m {
                    for j in 0..m {
                        if (sys.poset.leq[i][j] || sys.poset.leq[j][i]) && comp[i] != comp[j] {
                            let c = comp[i].min(comp[j]);
                            comp[i] = c;
                            comp[j] = c;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            let mut values: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
            let mut c = OrderedCochain::new(1);
            for i in 0..m {
                let v = values
                    .entry(comp[i])
                    .or_insert_with(|| self.vec_value(sys.dim))
                    .clone();
                c.set(vec![i], v);
            }
            return Ok(c);
        }
        let prim = self.vec_cochain(sys, n - 1);
        cech_d(sys, &prim)
    }

    /// 1–3 random monomials of total degree between 1 and `max_deg`.
    pub fn monomial_ideal(&mut self, ring: &Arc<PolyRing>, max_deg: usize) -> Vec<MultiPoly> {
        let nv = ring.nvars();
        let mut out = Vec::new();
        for _ in 0..=self.below(3) {
            let mut e = vec![0i64; nv];
            for _ in 0..=self.below(max_deg) {
                e[self.below(nv)] += 1;
            }
            out.push(MultiPoly::monomial(ring, e, Scalar::one()));
        }
        out
    }
}
