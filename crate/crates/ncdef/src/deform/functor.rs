//! Behaviour of the staged obstruction classes under base change: for a
//! commuting square of small extensions, the classes of the pushed-forward
//! candidate are the images of the original classes under the induced map
//! on kernels.

use std::sync::Arc;

use crate::artin::{AlgebraMap, SmallExtension};
use crate::cech::same_class;
use crate::error::{NcdefError, Result};
use crate::geometry::cohomology::SectionCochain;

use super::obstruct::{obstructions, CechClass};
use super::CandidateLift;

/// A commuting square of small extensions: `lift` lives over
/// `E: R′ → R`, `ext1` is `E₁: R₁′ → R₁`, and the vertical maps are
/// `beta_src: R′ → R₁′` over `beta: R → R₁`.
pub struct BaseChangeDiagram {
    pub lift: CandidateLift,
    pub ext1: Arc<SmallExtension>,
    pub beta_src: AlgebraMap,
    pub beta: AlgebraMap,
}

impl BaseChangeDiagram {
    fn check_commutes(&self) -> Result<()> {
        let ext = &self.lift.ext;
        if self.beta_src.src != ext.source
            || self.beta_src.tgt != self.ext1.source
            || self.beta.src != ext.target
            || self.beta.tgt != self.ext1.target
        {
            return Err(NcdefError::InvalidBaseChange(
                "diagram corners do not match".into(),
            ));
        }
        for s in 0..ext.source.dim() {
            let down_then_over = self.beta.apply(&ext.map.apply_basis(s));
            let over_then_down = self.ext1.map.apply(&self.beta_src.apply_basis(s));
            if down_then_over != over_then_down {
                return Err(NcdefError::InvalidBaseChange(format!(
                    "square does not commute on basis slot {s}"
                )));
            }
        }
        Ok(())
    }

    /// The candidate over `E₁` obtained by base-changing all correction
    /// data along `beta_src`.
    pub fn pushforward(&self) -> Result<CandidateLift> {
        self.check_commutes()?;
        Ok(CandidateLift {
            data: self.lift.data.map_base(&self.beta_src)?,
            ext: self.ext1.clone(),
        })
    }
}

/// The image of a `J ⊗ H`-valued class under the induced map `J → J₁`.
fn map_class(diag: &BaseChangeDiagram, class: &CechClass) -> Result<CechClass> {
    let ext = &diag.lift.ext;
    let mut per_j: Vec<SectionCochain> =
        vec![SectionCochain::zero(class.p, class.q); diag.ext1.j_dim()];
    for (delta, c) in class.per_j.iter().enumerate() {
        let image = diag.beta_src.apply(&ext.j_basis[delta]);
        let coords = diag.ext1.j_coords(&image).map_err(|_| {
            NcdefError::InvalidBaseChange("base change does not carry J into J1".into())
        })?;
        for (d1, v) in coords.into_iter().enumerate() {
            if !v.is_zero() {
                per_j[d1] = per_j[d1].add(&c.scale(&v));
            }
        }
    }
    Ok(CechClass {
        p: class.p,
        q: class.q,
        per_j,
    })
}

/// Verifies that base change carries each staged obstruction class of the
/// candidate to the corresponding class of the pushed-forward candidate,
/// for every stage computed on both sides.
pub fn functoriality_check(diag: &BaseChangeDiagram) -> Result<bool> {
    let pushed = diag.pushforward()?;
    let report = obstructions(&diag.lift)?;
    let report1 = obstructions(&pushed)?;
    let cover = &diag.lift.data.cover;
    for sr in &report.stages {
        let Some(sr1) = report1.stages.iter().find(|s| s.stage == sr.stage) else {
            continue;
        };
        let mapped = map_class(diag, &sr.class)?;
        for (a, b) in mapped.per_j.iter().zip(&sr1.class.per_j) {
            if !same_class(cover, a, b)? {
                return Ok(false);
            }
        }
    }
    // a stage reached only on the pushed side cannot disagree; a stage
    // reached only on the original side was cut off by an obstruction,
    // whose image was checked above
    Ok(true)
}
