//! Ordinals in Cantor normal form, as far as rank bookkeeping needs them.
//!
//! An ordinal is a finite list of `(exponent, coefficient)` pairs with
//! strictly decreasing exponents and coefficients >= 1; the empty list is 0.
//! The value denoted is `sum w^e_i * c_i`.

use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct OrdinalCnf {
    /// `(exponent, coefficient)` in strictly decreasing exponent order.
    terms: Vec<(OrdinalCnf, u64)>,
}

impl OrdinalCnf {
    pub fn zero() -> Self {
        OrdinalCnf { terms: Vec::new() }
    }

    pub fn from_nat(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            OrdinalCnf {
                terms: vec![(Self::zero(), n)],
            }
        }
    }

    pub fn omega() -> Self {
        OrdinalCnf {
            terms: vec![(Self::from_nat(1), 1)],
        }
    }

    /// `w^exp * coeff` as a single-term ordinal.
    pub fn power(exp: OrdinalCnf, coeff: u64) -> Self {
        if coeff == 0 {
            return Self::zero();
        }
        OrdinalCnf {
            terms: vec![(exp, coeff)],
        }
    }

    /// Build from `(exponent, coefficient)` pairs; exponents must be
    /// strictly decreasing and coefficients positive.
    pub fn from_terms(terms: Vec<(OrdinalCnf, u64)>) -> Option<Self> {
        if terms.iter().any(|(_, c)| *c == 0) {
            return None;
        }
        if terms.windows(2).any(|w| w[1].0 >= w[0].0) {
            return None;
        }
        Some(OrdinalCnf { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(n)` when the ordinal is the finite ordinal `n`.
    pub fn nat_value(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(e, c)] if e.is_zero() => Some(*c),
            _ => None,
        }
    }

    pub fn succ(&self) -> Self {
        let mut terms = self.terms.clone();
        match terms.last_mut() {
            Some((e, c)) if e.is_zero() => *c += 1,
            _ => terms.push((Self::zero(), 1)),
        }
        OrdinalCnf { terms }
    }

    pub fn plus_nat(&self, n: u64) -> Self {
        let mut out = self.clone();
        for _ in 0..n {
            out = out.succ();
        }
        out
    }

    /// A successor ordinal is one whose last CNF term has exponent 0.
    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some((e, _)) if e.is_zero())
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && !self.is_successor()
    }

    /// Predecessor of a successor ordinal.
    pub fn pred(&self) -> Option<Self> {
        if !self.is_successor() {
            return None;
        }
        let mut terms = self.terms.clone();
        let last = terms.last_mut().unwrap();
        if last.1 > 1 {
            last.1 -= 1;
        } else {
            terms.pop();
        }
        Some(OrdinalCnf { terms })
    }

    /// Canonical fundamental sequence of a limit ordinal: an increasing
    /// sequence cofinal in `self`, obtained by decrementing the last CNF
    /// term. For `w` itself the sequence is 2, 3, 4, ... so that every
    /// element is a legal structure rank.
    pub fn fundamental(&self, i: usize) -> Self {
        assert!(self.is_limit(), "fundamental sequence of a non-limit");
        let (last_exp, last_coeff) = self.terms.last().unwrap().clone();
        let mut prefix = OrdinalCnf {
            terms: self.terms[..self.terms.len() - 1].to_vec(),
        };
        if last_coeff > 1 {
            prefix.terms.push((last_exp.clone(), last_coeff - 1));
        }
        let step = Self::fundamental_of_power(&last_exp, i);
        prefix.append_smaller(step)
    }

    /// Fundamental sequence of `w^exp` for `exp >= 1`.
    fn fundamental_of_power(exp: &OrdinalCnf, i: usize) -> Self {
        if let Some(pred) = exp.pred() {
            // w^(e'+1): approximate by w^e' * (i + 2).
            Self::power(pred, i as u64 + 2)
        } else {
            // exp is a limit: w^(exp_i).
            Self::power(exp.fundamental(i), 1)
        }
    }

    /// Append an ordinal strictly below `w^e` for every exponent `e`
    /// remaining in `self` (used internally by `fundamental`).
    fn append_smaller(mut self, tail: OrdinalCnf) -> Self {
        self.terms.extend(tail.terms);
        self
    }

    pub fn max(a: &OrdinalCnf, b: &OrdinalCnf) -> OrdinalCnf {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

impl PartialOrd for OrdinalCnf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdinalCnf {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(other.terms.iter()) {
            match a.0.cmp(&b.0) {
                Ordering::Equal => {}
                ord => return ord,
            }
            match a.1.cmp(&b.1) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl fmt::Display for OrdinalCnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exp, coeff) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if exp.is_zero() {
                write!(f, "{coeff}")?;
            } else if exp.nat_value() == Some(1) {
                if *coeff == 1 {
                    write!(f, "w")?;
                } else {
                    write!(f, "w*{coeff}")?;
                }
            } else {
                let e = match exp.nat_value() {
                    Some(n) => n.to_string(),
                    None => format!("({exp})"),
                };
                if *coeff == 1 {
                    write!(f, "w^{e}")?;
                } else {
                    write!(f, "w^{e}*{coeff}")?;
                }
            }
        }
        Ok(())
    }
}
