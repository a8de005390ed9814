//! Sparse multivariate polynomial arithmetic over [`Scalar`], with
//! monomial localization: a ring `k[x_1..x_d]` in which a chosen subset of
//! the variables is inverted.  Negative exponents are legal only on
//! inverted variables, which encodes the chart localizations of the
//! toric covers.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{NcdefError, Result};
use crate::scalar::Scalar;

/// Exponent vector; one entry per ring variable, negatives allowed on
/// inverted variables.
pub type Exp = Vec<i64>;

/// A polynomial ring with a localization set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyRing {
    pub vars: Vec<String>,
    /// Indices of inverted variables.
    pub inverted: BTreeSet<usize>,
}

impl PolyRing {
    pub fn new(vars: Vec<String>, inverted: BTreeSet<usize>) -> Arc<Self> {
        assert!(inverted.iter().all(|&i| i < vars.len()));
        Arc::new(PolyRing { vars, inverted })
    }

    pub fn polynomial(vars: &[&str]) -> Arc<Self> {
        PolyRing::new(vars.iter().map(|s| s.to_string()).collect(), BTreeSet::new())
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    fn legal_exp(&self, e: &Exp) -> bool {
        e.len() == self.nvars()
            && e.iter()
                .enumerate()
                .all(|(i, &x)| x >= 0 || self.inverted.contains(&i))
    }
}

/// A sparse polynomial; canonical form stores no zero coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    pub ring: Arc<PolyRing>,
    pub terms: BTreeMap<Exp, Scalar>,
}

impl MultiPoly {
    pub fn zero(ring: &Arc<PolyRing>) -> Self {
        MultiPoly {
            ring: ring.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: &Arc<PolyRing>, c: Scalar) -> Self {
        let mut p = MultiPoly::zero(ring);
        p.add_term(vec![0; ring.nvars()], c);
        p
    }

    pub fn one(ring: &Arc<PolyRing>) -> Self {
        MultiPoly::constant(ring, Scalar::one())
    }

    pub fn var(ring: &Arc<PolyRing>, i: usize) -> Self {
        MultiPoly::monomial(ring, unit_exp(ring.nvars(), i, 1), Scalar::one())
    }

    pub fn monomial(ring: &Arc<PolyRing>, e: Exp, c: Scalar) -> Self {
        let mut p = MultiPoly::zero(ring);
        p.add_term(e, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    pub fn add_term(&mut self, e: Exp, c: Scalar) {
        assert!(
            self.ring.legal_exp(&e),
            "illegal exponent {:?} in ring {:?}",
            e,
            self.ring.vars
        );
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e.clone()).or_insert_with(Scalar::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.ring, rhs.ring);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &MultiPoly) -> MultiPoly {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.ring);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.ring);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.ring, rhs.ring);
        let mut out = MultiPoly::zero(&self.ring);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exp = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn pow(&self, n: usize) -> MultiPoly {
        let mut out = MultiPoly::one(&self.ring);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.ring);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c.clone() * Scalar::from_i64(e[i]));
        }
        out
    }

    /// Inverse of a one-term unit; errors if the polynomial is not a
    /// monomial supported on inverted variables.
    pub fn monomial_inverse(&self) -> Result<MultiPoly> {
        if self.terms.len() != 1 {
            return Err(NcdefError::Invalid(format!(
                "not an invertible monomial: {self}"
            )));
        }
        let (e, c) = self.terms.iter().next().unwrap();
        let inv_e: Exp = e.iter().map(|&x| -x).collect();
        if !self.ring.legal_exp(&inv_e) {
            return Err(NcdefError::Invalid(format!(
                "monomial {self} is not a unit in this localization"
            )));
        }
        Ok(MultiPoly::monomial(&self.ring, inv_e, c.inv()?))
    }

    /// Ring homomorphism: substitute `images[i]` for variable `i`, landing
    /// in `target`.  A variable occurring with negative exponent must map
    /// to an invertible monomial.
    pub fn substitute(&self, target: &Arc<PolyRing>, images: &[MultiPoly]) -> Result<MultiPoly> {
        assert_eq!(images.len(), self.ring.nvars());
        let mut out = MultiPoly::zero(target);
        for (e, c) in &self.terms {
            let mut term = MultiPoly::constant(target, c.clone());
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let factor = if p > 0 {
                    images[i].pow(p as usize)
                } else {
                    images[i].monomial_inverse()?.pow((-p) as usize)
                };
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Max over terms of the sum of positive exponents.
    pub fn total_degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|e| e.iter().filter(|&&x| x > 0).sum::<i64>())
            .max()
            .unwrap_or(0)
    }

    /// Max over terms of the sum of absolute exponents (Laurent size).
    pub fn laurent_degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|x| x.abs()).sum::<i64>())
            .max()
            .unwrap_or(0)
    }

    pub fn constant_term(&self) -> Scalar {
        self.terms
            .get(&vec![0; self.ring.nvars()])
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    pub fn parse(ring: &Arc<PolyRing>, s: &str) -> Result<MultiPoly> {
        parse_poly(ring, s)
    }
}

pub fn unit_exp(n: usize, i: usize, p: i64) -> Exp {
    let mut e = vec![0; n];
    e[i] = p;
    e
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let mut parts = Vec::new();
            let constant = e.iter().all(|&x| x == 0);
            if constant || !(c.is_one() || (-c.clone()).is_one()) {
                parts.push(c.to_string_exact().trim_start_matches('-').to_string());
            }
            for (i, &p) in e.iter().enumerate() {
                if p == 1 {
                    parts.push(self.ring.vars[i].clone());
                } else if p != 0 {
                    parts.push(format!("{}^{}", self.ring.vars[i], p));
                }
            }
            let negative = c.to_string_exact().starts_with('-');
            if first {
                if negative {
                    write!(f, "-")?;
                }
                first = false;
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn parse_poly(ring: &Arc<PolyRing>, s: &str) -> Result<MultiPoly> {
    let s = s.trim();
    if s.is_empty() || s == "0" {
        return Ok(MultiPoly::zero(ring));
    }
    // Split into signed monomial chunks at top level.
    let mut chunks: Vec<(Scalar, String)> = Vec::new();
    let mut sign = Scalar::one();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            // A '-' directly after '^' is a negative exponent, not a term break.
            '+' | '-' if !cur.trim_end().ends_with('^') => {
                if !cur.trim().is_empty() {
                    chunks.push((sign.clone(), cur.trim().to_string()));
                    cur.clear();
                }
                sign = if ch == '-' { -Scalar::one() } else { Scalar::one() };
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        chunks.push((sign, cur.trim().to_string()));
    }
    let mut out = MultiPoly::zero(ring);
    for (sign, chunk) in chunks {
        let mut coeff = sign;
        let mut exp = vec![0i64; ring.nvars()];
        for factor in chunk.split('*') {
            let factor = factor.trim();
            if factor.is_empty() {
                continue;
            }
            if factor
                .chars()
                .next()
                .map(|c| c.is_ascii_digit())
                .unwrap_or(false)
            {
                coeff = coeff * Scalar::parse(factor)?;
            } else {
                let (name, pow) = match factor.split_once('^') {
                    Some((n, p)) => (
                        n.trim(),
                        p.trim()
                            .parse::<i64>()
                            .map_err(|_| NcdefError::Invalid(format!("bad power in {factor}")))?,
                    ),
                    None => (factor, 1),
                };
                let i = ring
                    .var_index(name)
                    .ok_or_else(|| NcdefError::Invalid(format!("unknown variable {name}")))?;
                exp[i] += pow;
            }
        }
        out.add_term(exp, coeff);
    }
    Ok(out)
}

impl Serialize for MultiPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring2() -> Arc<PolyRing> {
        PolyRing::polynomial(&["x", "y"])
    }

    fn laurent() -> Arc<PolyRing> {
        PolyRing::new(vec!["u".into()], [0usize].into_iter().collect())
    }

    #[test]
    fn parse_display_roundtrip() {
        let r = ring2();
        let p = MultiPoly::parse(&r, "2*x^2*y - 1/3*y + 5").unwrap();
        let q = MultiPoly::parse(&r, &p.to_string()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn laurent_inverse() {
        let r = laurent();
        let u = MultiPoly::var(&r, 0);
        let inv = u.monomial_inverse().unwrap();
        assert!(u.mul(&inv).sub(&MultiPoly::one(&r)).is_zero());
    }

    #[test]
    #[should_panic]
    fn negative_exponent_illegal_without_localization() {
        let r = ring2();
        let _ = MultiPoly::monomial(&r, vec![-1, 0], Scalar::one());
    }

    #[test]
    fn substitution_multiplicative() {
        // u |-> y^-1 into k[x,y,y^-1].
        let src = laurent();
        let tgt = PolyRing::new(
            vec!["x".into(), "y".into()],
            [1usize].into_iter().collect(),
        );
        let img = vec![MultiPoly::monomial(&tgt, vec![0, -1], Scalar::one())];
        let p = MultiPoly::parse(&src, "u^2 + 3*u^-1").unwrap();
        let q = p.substitute(&tgt, &img).unwrap();
        let expect = {
            let mut e = MultiPoly::monomial(&tgt, vec![0, -2], Scalar::one());
            e.add_term(vec![0, 1], Scalar::from_i64(3));
            e
        };
        assert_eq!(q, expect);

        // u |-> x*y^-1 requires inverting x for u^-1; must error, not panic.
        let img2 = vec![MultiPoly::monomial(&tgt, vec![1, -1], Scalar::one())];
        assert!(p.substitute(&tgt, &img2).is_err());
    }

    fn arb_poly(r: Arc<PolyRing>) -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec(((0i64..4, 0i64..4), -5i64..5), 0..5).prop_map(move |terms| {
            let mut p = MultiPoly::zero(&r);
            for ((a, b), c) in terms {
                p.add_term(vec![a, b], Scalar::from_i64(c));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(ring2()), b in arb_poly(ring2()), c in arb_poly(ring2())) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }

        #[test]
        fn leibniz(a in arb_poly(ring2()), b in arb_poly(ring2())) {
            let d = |p: &MultiPoly| p.derivative(0);
            prop_assert_eq!(d(&a.mul(&b)), d(&a).mul(&b).add(&a.mul(&d(&b))));
        }
    }
}
