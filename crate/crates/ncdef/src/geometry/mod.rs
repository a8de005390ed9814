//! Charts, covers as posets with max, restriction maps, and the built-in
//! toric varieties (affine spaces, projective spaces, products).
//!
//! Every chart ring is a monomial localization of a polynomial ring, and
//! every chart variable carries a character in a fixed lattice ℤ^L.  The
//! restriction map between comparable charts is the unique monomial
//! substitution matching characters, which makes transitivity automatic
//! and lets cohomology decompose by character.

pub mod cohomology;
pub mod section;

pub use cohomology::{sheaf_cohomology, CharComplex, CohomologyResult, SectionCochain, Window};
pub use section::Section;

use serde::Serialize;
use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{NcdefError, Result};
use crate::linalg::Matrix;
use crate::poly::{Exp, MultiPoly, PolyRing};
use crate::scalar::Scalar;

pub type ChartId = usize;

/// An affine chart `U_i = Spec A_i` with character data for its variables.
#[derive(Debug, Clone)]
pub struct Chart {
    pub name: String,
    pub ring: Arc<PolyRing>,
    /// Character of each chart variable in ℤ^L.
    pub var_chars: Vec<Vec<i64>>,
}

impl Chart {
    /// Dimension of the chart (rank of the free module of derivations).
    pub fn dim(&self) -> usize {
        self.ring.nvars()
    }

    /// The unique Laurent monomial exponent with the given character, if
    /// it exists over ℤ (the variable characters are independent).
    pub fn monomial_with_char(&self, chi: &[i64]) -> Option<Exp> {
        let l = chi.len();
        let d = self.dim();
        let mut m = Matrix::zero(l, d);
        for (c, vc) in self.var_chars.iter().enumerate() {
            for r in 0..l {
                m.set(r, c, Scalar::from_i64(vc[r]));
            }
        }
        let rhs: Vec<Scalar> = chi.iter().map(|&x| Scalar::from_i64(x)).collect();
        let sol = m.solve(&rhs)?;
        let mut e = Vec::with_capacity(d);
        for s in &sol {
            e.push(scalar_to_i64(s)?);
        }
        Some(e)
    }

    /// Character of a monomial exponent vector.
    pub fn char_of_exp(&self, e: &Exp, lattice_rank: usize) -> Vec<i64> {
        let mut chi = vec![0i64; lattice_rank];
        for (b, &p) in e.iter().enumerate() {
            for (r, &v) in self.var_chars[b].iter().enumerate() {
                chi[r] += p * v;
            }
        }
        chi
    }
}

fn scalar_to_i64(s: &Scalar) -> Option<i64> {
    use num_traits::{One, ToPrimitive};
    match s {
        Scalar::Q(r) if r.denom().is_one() => r.numer().to_i64(),
        _ => None,
    }
}

/// Which family the cover belongs to; controls character enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverKind {
    /// Affine space (single chart) or an affine chain of localizations.
    Affine,
    /// Projective space: characters live in the sum-zero sublattice.
    Proj,
    /// Product of projective lines: full lattice.
    Product,
}

/// A cover of a variety: a poset of charts with joins, plus restriction
/// maps `φ⁰_{ji}: A_i → A_j` for `i < j` (i.e. `U_i ⊃ U_j`).
#[derive(Debug)]
pub struct Cover {
    pub name: String,
    pub kind: CoverKind,
    pub charts: Vec<Chart>,
    pub lattice_rank: usize,
    /// In sum-zero covers, characters satisfy Σχ = 0.
    pub sum_zero: bool,
    leq: Vec<Vec<bool>>,
    join: Vec<Vec<Option<ChartId>>>,
    /// Images of chart-i variables in chart j, for each i < j.
    transports: HashMap<(ChartId, ChartId), Vec<MultiPoly>>,
}

impl Cover {
    /// Whether two cover handles present the same variety (builders are
    /// deterministic, so the name identifies the structure).
    pub fn same_cover(&self, other: &Cover) -> bool {
        std::ptr::eq(self, other) || self.name == other.name
    }

    /// `i ≤ j` in the poset, i.e. `U_i ⊇ U_j`.
    pub fn leq(&self, i: ChartId, j: ChartId) -> bool {
        self.leq[i][j]
    }

    pub fn less(&self, i: ChartId, j: ChartId) -> bool {
        i != j && self.leq[i][j]
    }

    /// `max{i,j}`: the chart of `U_i ∩ U_j`, when the opens meet.
    pub fn join(&self, i: ChartId, j: ChartId) -> Option<ChartId> {
        self.join[i][j]
    }

    pub fn n_charts(&self) -> usize {
        self.charts.len()
    }

    /// Variable images of the restriction `A_i → A_j`; `i ≤ j` required.
    pub fn transport_images(&self, i: ChartId, j: ChartId) -> Result<Vec<MultiPoly>> {
        if i == j {
            return Ok((0..self.charts[i].dim())
                .map(|v| MultiPoly::var(&self.charts[i].ring, v))
                .collect());
        }
        self.transports
            .get(&(i, j))
            .cloned()
            .ok_or_else(|| NcdefError::NotComparable(format!("{i} and {j}")))
    }

    /// Applies `φ⁰_{ji}` to a ring element.
    pub fn transport_poly(&self, p: &MultiPoly, i: ChartId, j: ChartId) -> Result<MultiPoly> {
        if i == j {
            return Ok(p.clone());
        }
        let images = self.transport_images(i, j)?;
        p.substitute(&self.charts[j].ring, &images)
    }

    /// All strictly increasing chains with exactly `len` elements,
    /// in deterministic order.
    pub fn chains(&self, len: usize) -> Vec<Vec<ChartId>> {
        let mut out: Vec<Vec<ChartId>> = vec![];
        if len == 0 {
            return out;
        }
        let mut stack: Vec<Vec<ChartId>> = (0..self.n_charts()).map(|i| vec![i]).collect();
        while let Some(c) = stack.pop() {
            if c.len() == len {
                out.push(c);
                continue;
            }
            let last = *c.last().unwrap();
            for j in 0..self.n_charts() {
                if self.less(last, j) {
                    let mut c2 = c.clone();
                    c2.push(j);
                    stack.push(c2);
                }
            }
        }
        out.sort();
        out
    }

    /// Length of the longest chain, minus one (top Čech degree).
    pub fn max_cech_degree(&self) -> usize {
        let mut q = 0;
        while !self.chains(q + 2).is_empty() {
            q += 1;
        }
        q
    }

    /// Structural checks: joins exist for intersecting pairs, restriction
    /// transitivity on generators, and invertible Jacobians.
    pub fn verify(&self) -> Result<()> {
        for i in 0..self.n_charts() {
            for j in 0..self.n_charts() {
                if self.join(i, j) != self.join(j, i) {
                    return Err(NcdefError::IncompatibleData(format!(
                        "join not commutative at ({i},{j})"
                    )));
                }
                if self.leq(i, j) && self.join(i, j) != Some(j) {
                    return Err(NcdefError::IncompatibleData(format!(
                        "join({i},{j}) should be {j}"
                    )));
                }
            }
        }
        for chain in self.chains(3) {
            let (i, j, k) = (chain[0], chain[1], chain[2]);
            for v in 0..self.charts[i].dim() {
                let x = MultiPoly::var(&self.charts[i].ring, v);
                let via_j = self.transport_poly(&self.transport_poly(&x, i, j)?, j, k)?;
                let direct = self.transport_poly(&x, i, k)?;
                if via_j != direct {
                    return Err(NcdefError::IncompatibleData(format!(
                        "transitivity fails on chain {i}<{j}<{k}, var {v}"
                    )));
                }
            }
        }
        for (&(i, j), _) in &self.transports {
            // Jacobian of the substitution must be invertible in A_j.
            section::jacobian_inverse(self, i, j)?;
        }
        Ok(())
    }
}

fn var_names(d: usize) -> Vec<String> {
    if d <= 3 {
        ["x", "y", "z"][..d].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=d).map(|i| format!("x{i}")).collect()
    }
}

fn build_cover(
    name: String,
    kind: CoverKind,
    charts: Vec<Chart>,
    lattice_rank: usize,
    sum_zero: bool,
    leq: Vec<Vec<bool>>,
) -> Result<Arc<Cover>> {
    let n = charts.len();
    let mut join = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let ubs: Vec<ChartId> = (0..n).filter(|&k| leq[i][k] && leq[j][k]).collect();
            join[i][j] = ubs.iter().copied().find(|&k| ubs.iter().all(|&k2| leq[k][k2]));
        }
    }
    let mut transports = HashMap::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || !leq[i][j] {
                continue;
            }
            let mut images = Vec::with_capacity(charts[i].dim());
            for vc in &charts[i].var_chars {
                let e = charts[j].monomial_with_char(vc).ok_or_else(|| {
                    NcdefError::IncompatibleData(format!(
                        "no monomial image of a chart-{i} variable in chart {j}"
                    ))
                })?;
                images.push(MultiPoly::monomial(&charts[j].ring, e, Scalar::one()));
            }
            transports.insert((i, j), images);
        }
    }
    let cover = Arc::new(Cover {
        name,
        kind,
        charts,
        lattice_rank,
        sum_zero,
        leq,
        join,
        transports,
    });
    cover.verify()?;
    Ok(cover)
}

/// Affine d-space: a single chart `k[x_1..x_d]`.
pub fn affine(d: usize) -> Result<Arc<Cover>> {
    if d < 1 {
        return Err(NcdefError::Unsupported("affine(d) needs d >= 1".into()));
    }
    let names = var_names(d);
    let ring = PolyRing::new(names.clone(), Default::default());
    let chart = Chart {
        name: "U".into(),
        ring,
        var_chars: (0..d).map(|i| unit_char(d, i)).collect(),
    };
    build_cover(
        format!("affine({d})"),
        CoverKind::Affine,
        vec![chart],
        d,
        false,
        vec![vec![true]],
    )
}

/// Affine d-space covered by a chain of localizations: chart m inverts
/// `x_1..x_m`, so the poset is the (d+1)-chain `0 < 1 < … < d`.  Used for
/// exercising deep Čech degrees on an affine variety.
pub fn affine_chain(d: usize) -> Result<Arc<Cover>> {
    if d < 1 {
        return Err(NcdefError::Unsupported("affine_chain(d) needs d >= 1".into()));
    }
    let names = var_names(d);
    let mut charts = Vec::new();
    for m in 0..=d {
        let inverted = (0..m).collect();
        charts.push(Chart {
            name: format!("U{m}"),
            ring: PolyRing::new(names.clone(), inverted),
            var_chars: (0..d).map(|i| unit_char(d, i)).collect(),
        });
    }
    let n = d + 1;
    let leq = (0..n).map(|i| (0..n).map(|j| i <= j).collect()).collect();
    build_cover(format!("affine_chain({d})"), CoverKind::Affine, charts, d, false, leq)
}

fn unit_char(l: usize, i: usize) -> Vec<i64> {
    let mut c = vec![0i64; l];
    c[i] = 1;
    c
}

/// Projective n-space via the standard atlas: charts are indexed by the
/// nonempty subsets `S ⊆ {0..n}` (the intersections of standard charts),
/// ordered by inclusion; `max = union`.
pub fn proj(n: usize) -> Result<Arc<Cover>> {
    if n < 1 {
        return Err(NcdefError::Unsupported("proj(n) needs n >= 1".into()));
    }
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << (n + 1)))
        .map(|mask| (0..=n).filter(|b| mask >> b & 1 == 1).collect())
        .collect();
    subsets.sort_by_key(|s| (s.len(), s.clone()));
    let l = n + 1;
    let mut charts = Vec::new();
    for s in &subsets {
        let a0 = s[0];
        let vars: Vec<usize> = (0..=n).filter(|&b| b != a0).collect();
        let names: Vec<String> = vars.iter().map(|b| format!("x{b}")).collect();
        let inverted = vars
            .iter()
            .enumerate()
            .filter(|(_, b)| s.contains(b))
            .map(|(i, _)| i)
            .collect();
        let var_chars = vars
            .iter()
            .map(|&b| {
                let mut c = vec![0i64; l];
                c[b] = 1;
                c[a0] = -1;
                c
            })
            .collect();
        charts.push(Chart {
            name: format!("U{}", s.iter().map(|b| b.to_string()).collect::<String>()),
            ring: PolyRing::new(names, inverted),
            var_chars,
        });
    }
    let m = subsets.len();
    let leq = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| subsets[i].iter().all(|b| subsets[j].contains(b)))
                .collect()
        })
        .collect();
    build_cover(format!("proj({n})"), CoverKind::Proj, charts, l, true, leq)
}

/// `P¹ × P¹` via the product of standard atlases; poset is the product of
/// two copies of the `proj(1)` poset, `max` is taken componentwise.
pub fn p1xp1() -> Result<Arc<Cover>> {
    let subsets: Vec<Vec<usize>> = vec![vec![0], vec![1], vec![0, 1]];
    let mut idx = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            idx.push((a, b));
        }
    }
    idx.sort_by_key(|&(a, b)| (subsets[a].len() + subsets[b].len(), a, b));
    let mut charts = Vec::new();
    for &(a, b) in &idx {
        let mut inverted = std::collections::BTreeSet::new();
        if subsets[a].len() == 2 {
            inverted.insert(0);
        }
        if subsets[b].len() == 2 {
            inverted.insert(1);
        }
        // u = X_1/X_0 on the 0-chart of the first factor, its inverse on
        // the 1-chart; likewise v on the second factor.
        let cu = if subsets[a][0] == 0 { 1 } else { -1 };
        let cv = if subsets[b][0] == 0 { 1 } else { -1 };
        charts.push(Chart {
            name: format!(
                "U{}x{}",
                subsets[a].iter().map(|x| x.to_string()).collect::<String>(),
                subsets[b].iter().map(|x| x.to_string()).collect::<String>()
            ),
            ring: PolyRing::new(vec!["u".into(), "v".into()], inverted),
            var_chars: vec![vec![cu, 0], vec![0, cv]],
        });
    }
    let m = idx.len();
    let sub = |x: usize, y: usize| subsets[x].iter().all(|b| subsets[y].contains(b));
    let leq = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| sub(idx[i].0, idx[j].0) && sub(idx[i].1, idx[j].1))
                .collect()
        })
        .collect();
    build_cover("p1xp1".into(), CoverKind::Product, charts, 2, false, leq)
}

/// Parses a variety name: `affine:d`, `proj:n`, `affine_chain:d`, or
/// `p1xp1` (the canonical `affine(d)`-style names are accepted too, so
/// serialized cover names round-trip).
pub fn builtin_variety(name: &str) -> Result<Arc<Cover>> {
    let parse_arg = |s: &str| -> Result<usize> {
        s.trim_end_matches(')')
            .parse()
            .map_err(|_| NcdefError::Unsupported(format!("bad variety parameter in {name}")))
    };
    for (family, build) in [
        ("affine", affine as fn(usize) -> Result<Arc<Cover>>),
        ("affine_chain", affine_chain),
        ("proj", proj),
    ] {
        for sep in [":", "("] {
            if let Some(d) = name.strip_prefix(&format!("{family}{sep}")) {
                return build(parse_arg(d)?);
            }
        }
    }
    if name == "p1xp1" || name == "product(proj(1),proj(1))" {
        p1xp1()
    } else {
        Err(NcdefError::Unsupported(format!("unknown variety {name}")))
    }
}

/// JSON form of a cover: poset relation, chart presentations,
/// substitution maps as strings.
#[derive(Serialize)]
pub struct CoverJson {
    pub name: String,
    pub charts: Vec<ChartJson>,
    pub relation: Vec<(usize, usize)>,
    pub restrictions: Vec<RestrictionJson>,
}

#[derive(Serialize)]
pub struct ChartJson {
    pub name: String,
    pub vars: Vec<String>,
    pub inverted: Vec<usize>,
}

#[derive(Serialize)]
pub struct RestrictionJson {
    pub from: usize,
    pub to: usize,
    pub images: Vec<String>,
}

impl Cover {
    pub fn to_json(&self) -> CoverJson {
        let mut relation = vec![];
        let mut restrictions = vec![];
        for i in 0..self.n_charts() {
            for j in 0..self.n_charts() {
                if self.less(i, j) {
                    relation.push((i, j));
                    restrictions.push(RestrictionJson {
                        from: i,
                        to: j,
                        images: self.transports[&(i, j)]
                            .iter()
                            .map(|p| p.to_string())
                            .collect(),
                    });
                }
            }
        }
        CoverJson {
            name: self.name.clone(),
            charts: self
                .charts
                .iter()
                .map(|c| ChartJson {
                    name: c.name.clone(),
                    vars: c.ring.vars.clone(),
                    inverted: c.ring.inverted.iter().copied().collect(),
                })
                .collect(),
            relation,
            restrictions,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_is_single_chart() {
        let x = affine(2).unwrap();
        assert_eq!(x.n_charts(), 1);
        assert_eq!(x.charts[0].ring.vars, vec!["x", "y"]);
        assert_eq!(x.max_cech_degree(), 0);
    }

    #[test]
    fn proj1_atlas() {
        let x = proj(1).unwrap();
        assert_eq!(x.n_charts(), 3);
        // charts: {0}, {1}, {0,1}; U0 and U1 incomparable, both below U01.
        assert!(x.less(0, 2) && x.less(1, 2));
        assert!(!x.leq(0, 1) && !x.leq(1, 0));
        assert_eq!(x.join(0, 1), Some(2));
        // v on U1 maps to u^{-1} on U01.
        let v = MultiPoly::var(&x.charts[1].ring, 0);
        let img = x.transport_poly(&v, 1, 2).unwrap();
        assert_eq!(img.to_string(), "x1^-1");
    }

    #[test]
    fn proj2_poset_count() {
        let x = proj(2).unwrap();
        assert_eq!(x.n_charts(), 7);
        assert_eq!(x.chains(2).len(), 12);
        assert_eq!(x.chains(3).len(), 6);
        assert_eq!(x.max_cech_degree(), 2);
    }

    #[test]
    fn joins_are_semilattice() {
        for x in [proj(2).unwrap(), p1xp1().unwrap()] {
            let n = x.n_charts();
            for i in 0..n {
                assert_eq!(x.join(i, i), Some(i));
                for j in 0..n {
                    assert_eq!(x.join(i, j), x.join(j, i));
                    for k in 0..n {
                        let a = x.join(i, j).and_then(|m| x.join(m, k));
                        let b = x.join(j, k).and_then(|m| x.join(i, m));
                        assert_eq!(a, b);
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_variety_rejected() {
        assert!(matches!(
            builtin_variety("grassmannian:2:4"),
            Err(NcdefError::Unsupported(_))
        ));
    }

    #[test]
    fn affine_chain_poset() {
        let x = affine_chain(2).unwrap();
        assert_eq!(x.n_charts(), 3);
        assert_eq!(x.max_cech_degree(), 2);
        assert!(x.charts[2].ring.inverted.len() == 2);
    }
}
