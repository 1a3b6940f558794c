//! Multivariate integer polynomials, used to hold the squaring correction
//! terms of a coordinate system.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::int::Int;

/// A polynomial with integer coefficients in `arity` variables.
///
/// Terms are keyed by their exponent vector; zero coefficients are never
/// stored, so the zero polynomial has no terms.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(into = "PolynomialRepr", try_from = "PolynomialRepr")]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Vec<u32>, Int>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    arity: usize,
    terms: Vec<(Int, Vec<u32>)>,
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr {
            arity: p.arity,
            terms: p.terms.into_iter().map(|(e, c)| (c, e)).collect(),
        }
    }
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = String;
    fn try_from(r: PolynomialRepr) -> Result<Self, String> {
        let mut p = Polynomial::zero(r.arity);
        for (c, e) in r.terms {
            if e.len() != r.arity {
                return Err(format!(
                    "exponent vector of length {} in a polynomial of arity {}",
                    e.len(),
                    r.arity
                ));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Polynomial {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: Int) -> Self {
        let mut p = Polynomial::zero(arity);
        p.add_term(vec![0; arity], c);
        p
    }

    /// The variable `x_{index}` (zero-based).
    pub fn variable(arity: usize, index: usize) -> Self {
        assert!(index < arity, "variable index out of range");
        let mut e = vec![0; arity];
        e[index] = 1;
        let mut p = Polynomial::zero(arity);
        p.add_term(e, Int::ONE);
        p
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Int, Vec<u32>)>) -> Self {
        let mut p = Polynomial::zero(arity);
        for (c, e) in terms {
            assert_eq!(e.len(), arity, "exponent vector length must match arity");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Int) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of terms (monomials with non-zero coefficient).
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Int)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, other.arity);
        let mut out = Polynomial::zero(self.arity);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, k: &Int) -> Polynomial {
        let mut out = Polynomial::zero(self.arity);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    pub fn eval(&self, xs: &[Int]) -> Int {
        assert!(xs.len() >= self.arity, "not enough arguments");
        let mut acc = Int::ZERO;
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (x, &k) in xs.iter().zip(e) {
                if k > 0 {
                    m *= x.pow(k);
                }
            }
            acc += m;
        }
        acc
    }

    /// Highest variable index (zero-based) that occurs, if any.
    pub fn max_variable(&self) -> Option<usize> {
        self.terms
            .keys()
            .filter_map(|e| e.iter().rposition(|&k| k > 0))
            .max()
    }

    /// Drops trailing variables, failing if any of them occurs.
    pub fn truncate_arity(&self, arity: usize) -> Option<Polynomial> {
        if let Some(m) = self.max_variable() {
            if m >= arity {
                return None;
            }
        }
        Some(Polynomial {
            arity,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e[..arity].to_vec(), c.clone()))
                .collect(),
        })
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (e, c)) in self.terms.iter().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    if k == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, k)
                    }
                })
                .collect();
            let (neg, mag) = (c.is_negative(), c.abs());
            if n > 0 {
                f.write_str(if neg { " - " } else { " + " })?;
            } else if neg {
                f.write_str("-")?;
            }
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == Int::ONE {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, mono.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_eval() {
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let p = x.mul(&y).add(&x.scale(&Int::from(3)));
        assert_eq!(p.term_count(), 2);
        assert_eq!(p.eval(&[Int::from(2), Int::from(5)]), Int::from(16));
        assert_eq!(p.to_string(), "3*x1 + x1*x2");
    }

    #[test]
    fn cancellation_leaves_zero() {
        let x = Polynomial::variable(1, 0);
        let z = x.sub(&x);
        assert!(z.is_zero());
        assert_eq!(z.term_count(), 0);
        assert_eq!(z.to_string(), "0");
    }

    #[test]
    fn truncate_refuses_live_variables() {
        let p = Polynomial::variable(3, 2);
        assert!(p.truncate_arity(2).is_none());
        let q = Polynomial::variable(3, 1).truncate_arity(2).unwrap();
        assert_eq!(q.arity(), 2);
    }

    #[test]
    fn serde_round_trip() {
        let p = Polynomial::from_terms(2, [(Int::from(-4), vec![1, 1]), (Int::from(1), vec![2, 0])]);
        let s = serde_json::to_string(&p).unwrap();
        let back: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
