//! JSON round-trip for deformations: base-algebra block, per-chart
//! multiplication corrections, per-pair gluing corrections and the twist
//! block.  Covers are referenced by their builtin name; base-basis slots
//! are stored as monomial exponent vectors so files survive basis
//! re-enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::artin::{artin_quotient, ArtinLocalAlgebra};
use crate::error::{NcdefError, Result};
use crate::geometry::builtin_variety;
use crate::hochschild::Cochain;
use crate::poly::{Exp, MultiPoly, PolyRing};

use super::relem::RElem;
use super::{CorrectionMap, DeformationData, NCDeformation};

#[derive(Serialize, Deserialize)]
pub struct BaseJson {
    pub params: Vec<String>,
    #[serde(default)]
    pub ideal: Vec<String>,
    pub order: usize,
}

/// One polydifferential term: derivative multi-index per slot, coefficient
/// in the target chart ring.
#[derive(Serialize, Deserialize)]
pub struct TermJson {
    pub slots: Vec<Exp>,
    pub coeff: String,
}

/// The correction cochain attached to one base-basis monomial.
#[derive(Serialize, Deserialize)]
pub struct CorrectionJson {
    pub monomial: Exp,
    pub terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
pub struct GluingJson {
    pub from: usize,
    pub to: usize,
    pub corrections: Vec<CorrectionJson>,
}

#[derive(Serialize, Deserialize)]
pub struct ComponentJson {
    pub monomial: Exp,
    pub value: String,
}

#[derive(Serialize, Deserialize)]
pub struct TwistJson {
    pub chain: (usize, usize, usize),
    pub components: Vec<ComponentJson>,
}

#[derive(Serialize, Deserialize)]
pub struct DeformationJson {
    pub cover: String,
    pub twisted: bool,
    pub base: BaseJson,
    pub mult: Vec<Vec<CorrectionJson>>,
    pub gluing: Vec<GluingJson>,
    #[serde(default)]
    pub twist: Vec<TwistJson>,
}

fn corrections_json(alg: &ArtinLocalAlgebra, corr: &CorrectionMap) -> Vec<CorrectionJson> {
    corr.iter()
        .map(|(&slot, c)| CorrectionJson {
            monomial: alg.basis_exp(slot).clone(),
            terms: c
                .terms
                .iter()
                .filter(|(_, coeff)| !coeff.is_zero())
                .map(|(slots, coeff)| TermJson {
                    slots: slots.clone(),
                    coeff: coeff.to_string(),
                })
                .collect(),
        })
        .collect()
}

pub fn deformation_to_json(data: &DeformationData) -> DeformationJson {
    let alg = &data.base;
    DeformationJson {
        cover: data.cover.name.clone(),
        twisted: data.is_twisted(),
        base: BaseJson {
            params: alg.ring.vars.clone(),
            ideal: alg.ideal.iter().map(|g| g.to_string()).collect(),
            order: alg.order,
        },
        mult: data.mult.iter().map(|m| corrections_json(alg, m)).collect(),
        gluing: data
            .gluing
            .iter()
            .map(|(&(i, j), corr)| GluingJson {
                from: i,
                to: j,
                corrections: corrections_json(alg, corr),
            })
            .collect(),
        twist: data
            .twist
            .as_ref()
            .map(|t| {
                t.tau
                    .iter()
                    .map(|(&(i, j, k), tau)| TwistJson {
                        chain: (i, j, k),
                        components: tau
                            .comps
                            .iter()
                            .filter(|(_, v)| !v.is_zero())
                            .map(|(&slot, v)| ComponentJson {
                                monomial: alg.basis_exp(slot).clone(),
                                value: v.to_string(),
                            })
                            .collect(),
                    })
                    .collect()
            })
            .unwrap_or_default(),
    }
}

fn slot_of(alg: &ArtinLocalAlgebra, e: &Exp) -> Result<usize> {
    (0..alg.dim())
        .find(|&s| alg.basis_exp(s) == e)
        .ok_or_else(|| NcdefError::Invalid(format!("{e:?} is not a basis monomial of the base")))
}

fn corrections_from(
    alg: &ArtinLocalAlgebra,
    shape: &Cochain,
    list: &[CorrectionJson],
) -> Result<CorrectionMap> {
    let mut out: CorrectionMap = BTreeMap::new();
    for cj in list {
        let slot = slot_of(alg, &cj.monomial)?;
        let mut c = shape.clone();
        for t in &cj.terms {
            if t.slots.len() != shape.arity {
                return Err(NcdefError::ArityMismatch {
                    expected: shape.arity,
                    got: t.slots.len(),
                });
            }
            c.add_term(t.slots.clone(), MultiPoly::parse(&shape.tgt, &t.coeff)?);
        }
        if out.insert(slot, c).is_some() {
            return Err(NcdefError::Invalid(format!(
                "duplicate correction for base monomial {:?}",
                cj.monomial
            )));
        }
    }
    Ok(out)
}

/// Rebuilds and validates the deformation from its JSON form.
pub fn deformation_from_json(j: &DeformationJson) -> Result<NCDeformation> {
    let cover = builtin_variety(&j.cover)?;
    let params: Vec<&str> = j.base.params.iter().map(|s| s.as_str()).collect();
    let pring = PolyRing::polynomial(&params);
    let gens: Result<Vec<MultiPoly>> = j
        .base
        .ideal
        .iter()
        .map(|s| MultiPoly::parse(&pring, s))
        .collect();
    let base = artin_quotient(&params, gens?, j.base.order)?;
    let mut data = if j.twisted {
        DeformationData::trivial_twisted(&base, &cover)
    } else {
        DeformationData::trivial(&base, &cover)
    };
    if j.mult.len() != cover.n_charts() {
        return Err(NcdefError::Invalid(format!(
            "{} charts of corrections for a {}-chart cover",
            j.mult.len(),
            cover.n_charts()
        )));
    }
    for (i, list) in j.mult.iter().enumerate() {
        let shape = Cochain::zero_endo(2, &cover.charts[i].ring);
        data.mult[i] = corrections_from(&base, &shape, list)?;
    }
    for gj in &j.gluing {
        if !cover.less(gj.from, gj.to) {
            return Err(NcdefError::NotComparable(format!("{} and {}", gj.from, gj.to)));
        }
        let shape = Cochain::zero(
            1,
            &cover.charts[gj.from].ring,
            &cover.charts[gj.to].ring,
            cover.transport_images(gj.from, gj.to)?,
        );
        let corr = corrections_from(&base, &shape, &gj.corrections)?;
        if data.gluing.insert((gj.from, gj.to), corr).is_some() {
            return Err(NcdefError::Invalid(format!(
                "duplicate gluing block for ({}, {})",
                gj.from, gj.to
            )));
        }
    }
    for tj in &j.twist {
        if !j.twisted {
            return Err(NcdefError::Invalid("twist block on an untwisted file".into()));
        }
        let (i, jj, k) = tj.chain;
        if !(cover.less(i, jj) && cover.less(jj, k)) {
            return Err(NcdefError::NotComparable(format!("chain ({i},{jj},{k})")));
        }
        let ring = &cover.charts[k].ring;
        let mut tau = RElem::zero(&base, ring);
        for comp in &tj.components {
            tau.add_comp(slot_of(&base, &comp.monomial)?, MultiPoly::parse(ring, &comp.value)?);
        }
        data.set_tau(i, jj, k, tau);
    }
    NCDeformation::new(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::sample::Sampler;
    use crate::geometry::{affine_chain, proj};

    fn roundtrip(data: &DeformationData) -> NCDeformation {
        let j = deformation_to_json(data);
        let text = serde_json::to_string_pretty(&j).unwrap();
        let back: DeformationJson = serde_json::from_str(&text).unwrap();
        deformation_from_json(&back).unwrap()
    }

    #[test]
    fn trivial_deformation_round_trips() {
        let x = proj(1).unwrap();
        let base = artin_quotient(&["t"], vec![], 2).unwrap();
        let d = NCDeformation::new(DeformationData::trivial(&base, &x)).unwrap();
        let d2 = roundtrip(d.data());
        assert!(d.data().same_data(d2.data()));
    }

    #[test]
    fn a_random_twisted_deformation_round_trips() {
        let mut s = Sampler::new(11);
        let cand = s.twisted_chain_candidate(3, false).unwrap();
        // the induced data downstairs is a valid twisted deformation
        let beta = crate::artin::AlgebraMap::identity_params(
            cand.ext.source.clone(),
            cand.ext.target.clone(),
        )
        .unwrap();
        let down = cand.data.map_base(&beta).unwrap();
        let j = deformation_to_json(&down);
        let text = serde_json::to_string(&j).unwrap();
        let back: DeformationJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.cover, affine_chain(3).unwrap().name);
        let d2 = deformation_from_json(&back).unwrap();
        assert!(down.same_data(d2.data()));
    }

    #[test]
    fn malformed_blocks_are_rejected() {
        let x = proj(1).unwrap();
        let base = artin_quotient(&["t"], vec![], 1).unwrap();
        let d = DeformationData::trivial(&base, &x);
        let mut j = deformation_to_json(&d);
        j.gluing.push(GluingJson {
            from: 1,
            to: 0, // not comparable in this direction
            corrections: vec![],
        });
        assert!(deformation_from_json(&j).is_err());
    }
}
