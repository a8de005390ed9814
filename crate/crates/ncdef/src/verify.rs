//! Named randomized verification suites: seeded, deterministic batches of
//! exact identity checks with counterexample reporting.

use crate::artin::elem_basis;
use crate::cech::{cech_d, extend_sn, unorder_pairwise, VecSystem};
use crate::deform::lemmas::lemma_df_check;
use crate::deform::sample::Sampler;
use crate::deform::{defects, CandidateLift};
use crate::error::{NcdefError, Result};
use crate::geometry::{affine, proj};
use crate::hochschild::{compose, Cochain};

/// Result of one suite run: number of cases generated, number of identity
/// instances verified, and the first counterexample if any.
pub struct SuiteOutcome {
    pub suite: String,
    pub seed: u64,
    pub cases: usize,
    pub identities: usize,
    pub failure: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

pub const SUITES: &[&str] = &["lemma-df", "sn-extension"];

/// Runs a named suite with the given seed.  `Err` means the suite could
/// not be set up; a failing identity is reported in the outcome.
pub fn run_suite(suite: &str, seed: u64) -> Result<SuiteOutcome> {
    match suite {
        "lemma-df" => lemma_df_suite(seed),
        "sn-extension" => sn_suite(seed),
        other => Err(NcdefError::Unsupported(format!(
            "unknown suite {other:?}; available: {SUITES:?}"
        ))),
    }
}

/// Defect-coboundary identities on random candidate lifts over
/// `k[t]/t³ → k[t]/t²`: untwisted on the affine plane and the projective
/// line, twisted on 5-element chains (with and without twist noise).
fn lemma_df_suite(seed: u64) -> Result<SuiteOutcome> {
    let mut s = Sampler::new(seed);
    let mut out = SuiteOutcome {
        suite: "lemma-df".into(),
        seed,
        cases: 0,
        identities: 0,
        failure: None,
    };
    let plane = affine(2)?;
    let line = proj(1)?;
    let check = |out: &mut SuiteOutcome, what: &str, cand| {
        out.cases += 1;
        match lemma_df_check(&cand) {
            Ok(n) => out.identities += n,
            Err(e) => {
                out.failure.get_or_insert(format!("{what}: {e}"));
            }
        };
    };
    for rep in 0..26 {
        if out.failure.is_some() {
            break;
        }
        check(&mut out, &format!("affine(2) lift #{rep}"), s.candidate(&plane)?);
        check(&mut out, &format!("proj(1) lift #{rep}"), s.candidate(&line)?);
    }
    for rep in 0..4 {
        if out.failure.is_some() {
            break;
        }
        let noisy = rep % 2 == 1;
        check(
            &mut out,
            &format!("twisted 5-chain lift #{rep} (twist noise: {noisy})"),
            s.twisted_chain_candidate(4, noisy)?,
        );
    }
    for rep in 0..3 {
        if out.failure.is_some() {
            break;
        }
        let cand = s.twisted_chain_candidate(3, rep == 1)?;
        out.cases += 1;
        if let Err(e) = gluing_change_cases(&mut s, &cand, &mut out.identities) {
            out.failure = Some(format!("twisted gluing-change #{rep}: {e}"));
        }
    }
    Ok(out)
}

/// Adding kernel-level corrections `c_ji` to the gluings moves the
/// transitivity defect by exactly `φ⁰_kj c_ji − c_ki + c_kj φ⁰_ji`.
fn gluing_change_cases(
    s: &mut Sampler,
    cand: &CandidateLift,
    identities: &mut usize,
) -> Result<()> {
    let cover = cand.data.cover.clone();
    let ext = &cand.ext;
    let slot = ext.source.dim() - 1;
    let scales = ext.j_coords(&elem_basis(&ext.source, slot))?;
    let before = defects(cand)?;
    let mut shifted = CandidateLift {
        data: cand.data.clone(),
        ext: ext.clone(),
    };
    let mut c = std::collections::BTreeMap::new();
    for pair in cover.chains(2) {
        let (i, j) = (pair[0], pair[1]);
        let shape = Cochain::zero(
            1,
            &cover.charts[i].ring,
            &cover.charts[j].ring,
            cover.transport_images(i, j)?,
        );
        let cj = s.cochain_like(&shape, 2, 2);
        let e = shifted
            .data
            .gluing
            .entry((i, j))
            .or_default()
            .entry(slot)
            .or_insert(shape);
        *e = e.add(&cj);
        c.insert((i, j), cj);
    }
    let after = defects(&shifted)?;
    for ch in cover.chains(3) {
        let (i, j, k) = (ch[0], ch[1], ch[2]);
        let phi_ji = Cochain::from_hom(
            &cover.charts[i].ring,
            &cover.charts[j].ring,
            cover.transport_images(i, j)?,
        );
        let phi_kj = Cochain::from_hom(
            &cover.charts[j].ring,
            &cover.charts[k].ring,
            cover.transport_images(j, k)?,
        );
        let formula = compose(&phi_kj, &[c[&(i, j)].clone()])?
            .sub(&c[&(i, k)])
            .add(&compose(&c[&(j, k)], &[phi_ji])?);
        for (delta, scale) in scales.iter().enumerate() {
            let got = after.h[&(i, j, k)][delta].sub(&before.h[&(i, j, k)][delta]);
            if !got.sub(&formula.scale(scale)).is_zero() {
                return Err(NcdefError::IdentityViolation(format!(
                    "gluing-change formula fails on chain ({i},{j},{k}), kernel slot {delta}"
                )));
            }
            *identities += 1;
        }
    }
    Ok(())
}

/// Symmetrized extension of ordered cocycles on random posets: the
/// extension restricts to the input on increasing tuples, satisfies the
/// cocycle condition on arbitrary tuples, and agrees with the explicit
/// two-index rule.
fn sn_suite(seed: u64) -> Result<SuiteOutcome> {
    let mut s = Sampler::new(seed);
    let mut out = SuiteOutcome {
        suite: "sn-extension".into(),
        seed,
        cases: 0,
        identities: 0,
        failure: None,
    };
    'outer: for n in 1..=3usize {
        for rep in 0..50 {
            let sys = VecSystem {
                poset: s.poset(6),
                dim: 5,
            };
            let h = s.vec_cocycle(&sys, n)?;
            out.cases += 1;
            let loc = |msg: &str| format!("n={n}, poset #{rep}: {msg}");
            let ext = extend_sn(&sys, &h)?;
            // restriction to increasing tuples is the input
            for chain in sys.poset.chains(n) {
                if ext[&chain] != h.value(&sys, &chain) {
                    out.failure = Some(loc(&format!("restriction differs on {chain:?}")));
                    break 'outer;
                }
                out.identities += 1;
            }
            // full cocycle condition on arbitrary tuples with a join
            for (tuple, _) in &ext {
                for extra in 0..sys.poset.size() {
                    let mut t = tuple.clone();
                    t.push(extra);
                    if sys.poset.join_all(&t).is_none() {
                        continue;
                    }
                    let mut acc = vec![0i64; sys.dim];
                    for pos in 0..t.len() {
                        let face: Vec<usize> = t
                            .iter()
                            .enumerate()
                            .filter(|(p, _)| *p != pos)
                            .map(|(_, &x)| x)
                            .collect();
                        let v = &ext[&face];
                        for (a, b) in acc.iter_mut().zip(v) {
                            if pos % 2 == 0 {
                                *a += b;
                            } else {
                                *a -= b;
                            }
                        }
                    }
                    if acc.iter().any(|&v| v != 0) {
                        out.failure = Some(loc(&format!("cocycle condition fails on {t:?}")));
                        break 'outer;
                    }
                    out.identities += 1;
                }
            }
            // the explicit two-index rule agrees
            if n == 2 {
                for a in 0..sys.poset.size() {
                    for b in 0..sys.poset.size() {
                        if sys.poset.join(a, b).is_none() {
                            continue;
                        }
                        if unorder_pairwise(&sys, &h, b, a)? != ext[&vec![a, b]] {
                            out.failure =
                                Some(loc(&format!("pairwise rule differs on ({b},{a})")));
                            break 'outer;
                        }
                        out.identities += 1;
                    }
                }
            }
            // sanity: the generated cochain really is an ordered cocycle
            if !cech_d(&sys, &h)?.is_zero(&sys) {
                return Err(NcdefError::Invalid("generator produced a non-cocycle".into()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::sample::Sampler;
    use crate::deform::{check_defects, defects};
    use crate::geometry::proj;

    #[test]
    fn the_defect_suite_passes_on_its_default_seed() {
        let out = run_suite("lemma-df", 1).unwrap();
        assert!(out.passed(), "{:?}", out.failure);
        assert_eq!(out.cases, 59);
        assert!(out.identities > 0);
    }

    #[test]
    fn the_extension_suite_passes_on_its_default_seed() {
        let out = run_suite("sn-extension", 7).unwrap();
        assert!(out.passed(), "{:?}", out.failure);
        assert_eq!(out.cases, 150);
    }

    #[test]
    fn unknown_suites_are_rejected() {
        assert!(run_suite("no-such-suite", 0).is_err());
    }

    #[test]
    fn an_injected_sign_error_is_reported_with_its_tuple() {
        let line = proj(1).unwrap();
        let mut s = Sampler::new(3);
        let cand = s.candidate(&line).unwrap();
        let mut bundle = defects(&cand).unwrap();
        assert!(check_defects(&cand, &bundle).is_ok());
        for slots in bundle.g.values_mut() {
            for c in slots.iter_mut() {
                *c = c.neg();
            }
        }
        let msg = check_defects(&cand, &bundle).unwrap_err().to_string();
        assert!(msg.contains("dg identity fails on pair"), "unexpected report: {msg}");
    }
}
