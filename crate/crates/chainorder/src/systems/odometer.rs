//! The dyadic odometer: `x -> x + 1` on the 2-adic integers.
//!
//! Points are rationals with odd denominator (dense in the 2-adics and
//! closed under the map and its inverse). The metric is the 2-adic one,
//! `d(p, q) = 2^-v` where `v` is the 2-adic valuation of `p - q`, so every
//! distance is an exact dyadic rational and strict comparisons are
//! decidable. Approach times reduce to a residue computation mod `2^m`.

use std::cmp::Ordering;

use num::integer::Integer;
use num::{BigInt, BigRational, One, Signed, Zero};

use super::{rat_from_str, rat_to_string, Point, System, SystemError};

#[derive(Debug, Clone, Copy)]
pub struct Odometer;

pub fn is_odd_denominator(r: &BigRational) -> bool {
    r.denom().is_odd()
}

fn rational_of(p: &Point) -> &BigRational {
    match p {
        Point::Odometer(r) => r,
        other => panic!("expected an odometer point, got {other:?}"),
    }
}

/// 2-adic valuation of a nonzero odd-denominator rational.
fn valuation(r: &BigRational) -> Option<u64> {
    if r.is_zero() {
        None
    } else {
        r.numer().trailing_zeros()
    }
}

fn dist_exact(p: &BigRational, q: &BigRational) -> BigRational {
    match valuation(&(p - q)) {
        None => BigRational::zero(),
        Some(v) => BigRational::new(BigInt::one(), BigInt::one() << v),
    }
}

/// Least `m >= 0` with `2^-m < eps`.
fn precision_exponent(eps: &BigRational) -> Result<u32, SystemError> {
    if !eps.is_positive() {
        return Err(SystemError::Invalid("eps must be positive".into()));
    }
    let mut m = 0u32;
    let mut val = BigRational::one();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    while val >= *eps {
        m += 1;
        val *= &half;
        if m > 20_000 {
            return Err(SystemError::Invalid(format!("eps {} is out of range", eps)));
        }
    }
    Ok(m)
}

fn mod_inverse(a: &BigInt, modulus: &BigInt) -> BigInt {
    let g = a.extended_gcd(modulus);
    assert!(g.gcd.is_one(), "inverse of a non-unit");
    g.x.mod_floor(modulus)
}

/// Least `j >= min_j` with `target + j = 0` in the 2-adics mod `2^m`,
/// i.e. `j` congruent to `-target` mod `2^m`.
fn residue_solve(target: &BigRational, m: u32, min_j: u64) -> Result<u64, SystemError> {
    if m == 0 {
        return Ok(min_j);
    }
    let modulus = BigInt::one() << m;
    let b_inv = mod_inverse(&target.denom().mod_floor(&modulus), &modulus);
    let r = ((-target.numer()) * b_inv).mod_floor(&modulus);
    let min = BigInt::from(min_j);
    let j = &min + (&r - &min).mod_floor(&modulus);
    u64::try_from(&j).map_err(|_| SystemError::Invalid(format!("approach time {j} overflows")))
}

impl System for Odometer {
    fn id(&self) -> String {
        "odometer".into()
    }

    fn step(&self, p: &Point) -> Point {
        Point::Odometer(rational_of(p) + BigRational::one())
    }

    fn inv_step(&self, p: &Point) -> Point {
        Point::Odometer(rational_of(p) - BigRational::one())
    }

    fn iterate(&self, p: &Point, n: i64) -> Point {
        Point::Odometer(rational_of(p) + BigRational::from_integer(BigInt::from(n)))
    }

    fn cmp_dist(&self, p: &Point, q: &Point, eps: &BigRational) -> Result<Ordering, SystemError> {
        Ok(dist_exact(rational_of(p), rational_of(q)).cmp(eps))
    }

    fn dist_bounds(&self, p: &Point, q: &Point) -> Result<(BigRational, BigRational), SystemError> {
        let d = dist_exact(rational_of(p), rational_of(q));
        Ok((d.clone(), d))
    }

    fn same_class(&self, p: &Point, q: &Point) -> bool {
        (rational_of(p) - rational_of(q)).is_integer()
    }

    fn forward_approach(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_j: u64,
    ) -> Result<u64, SystemError> {
        let m = precision_exponent(eps)?;
        // d(from + j, to) < eps  <=>  (from - to) + j = 0 mod 2^m
        residue_solve(&(rational_of(from) - rational_of(to)), m, min_j)
    }

    fn backward_approach(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_j: u64,
    ) -> Result<u64, SystemError> {
        let m = precision_exponent(eps)?;
        // d(from - j, to) < eps  <=>  (to - from) + j = 0 mod 2^m
        residue_solve(&(rational_of(to) - rational_of(from)), m, min_j)
    }

    fn orbit_offset(&self, base: &Point, p: &Point) -> Option<i64> {
        let diff = rational_of(p) - rational_of(base);
        if !diff.is_integer() {
            return None;
        }
        i64::try_from(diff.numer()).ok()
    }

    fn class_point(&self, denom: u64) -> Point {
        Point::Odometer(BigRational::new(BigInt::one(), BigInt::from(denom)))
    }

    fn parse_point(&self, s: &str) -> Result<Point, SystemError> {
        let r = rat_from_str(s)?;
        if !is_odd_denominator(&r) {
            return Err(SystemError::BadPoint(format!(
                "odometer points need an odd denominator, got {}",
                rat_to_string(&r)
            )));
        }
        Ok(Point::Odometer(r))
    }
}
