//! Exact transitive systems behind a common interface.
//!
//! Every concrete system implements [`System`] and is registered by name;
//! CLI and artifact code resolve `"odometer"` or `"rotation:<cf-spec>"`
//! through [`resolve`] at runtime. Distances are never floating point:
//! the odometer metric is exact dyadic arithmetic and the rotation metric
//! is an interval certified against continued-fraction convergents.

pub mod odometer;
pub mod rotation;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

pub use odometer::Odometer;
pub use rotation::{CfRule, Rotation};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("search cap exceeded: {0}")]
    SearchCapExceeded(String),
    #[error("invalid point: {0}")]
    BadPoint(String),
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("{0}")]
    Invalid(String),
}

/// An exact point of one of the implemented systems.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Point {
    /// Rational with odd denominator, read as a 2-adic integer.
    Odometer(BigRational),
    /// `seed + power * alpha (mod 1)` with `seed` rational in `[0, 1)`.
    Rotation { seed: BigRational, power: i64 },
}

impl Point {
    pub fn render(&self) -> String {
        match self {
            Point::Odometer(r) => rat_to_string(r),
            Point::Rotation { seed, power } => format!("({}, {})", rat_to_string(seed), power),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

pub fn rat_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_from_str(s: &str) -> Result<BigRational, SystemError> {
    let s = s.trim();
    let (num_s, den_s) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let numer: BigInt = num_s
        .parse()
        .map_err(|_| SystemError::BadPoint(format!("bad rational '{s}'")))?;
    let denom: BigInt = match den_s {
        Some(d) => d
            .parse()
            .map_err(|_| SystemError::BadPoint(format!("bad rational '{s}'")))?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(SystemError::BadPoint(format!("zero denominator in '{s}'")));
    }
    Ok(BigRational::new(numer, denom))
}

/// Exact transitive homeomorphism of a compact metric space.
///
/// Implementations must keep `step`/`inv_step` exact inverses and the
/// metric comparisons certified: `cmp_dist` may fail, but it never
/// guesses.
pub trait System: fmt::Debug + Send + Sync {
    /// Canonical spec string, resolvable through [`resolve`].
    fn id(&self) -> String;

    fn step(&self, p: &Point) -> Point;
    fn inv_step(&self, p: &Point) -> Point;
    fn iterate(&self, p: &Point, n: i64) -> Point;

    /// Certified three-way comparison of `d(p, q)` against `eps`.
    fn cmp_dist(&self, p: &Point, q: &Point, eps: &BigRational) -> Result<Ordering, SystemError>;

    /// Rational lower and upper bounds on `d(p, q)`; equal when exact.
    fn dist_bounds(&self, p: &Point, q: &Point) -> Result<(BigRational, BigRational), SystemError>;

    /// Whether the two-sided orbits of `p` and `q` intersect.
    fn same_class(&self, p: &Point, q: &Point) -> bool;

    /// Least `j >= min_j` with `d(f^j(from), to) < eps`.
    fn forward_approach(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_j: u64,
    ) -> Result<u64, SystemError>;

    /// Least `j >= min_j` with `d(f^-j(from), to) < eps`.
    fn backward_approach(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_j: u64,
    ) -> Result<u64, SystemError>;

    /// Least `h >= min_h` with `d(f^(h+1)(from), to) < eps`.
    fn hit_time(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_h: u64,
    ) -> Result<u64, SystemError> {
        Ok(self.forward_approach(from, to, eps, min_h + 1)? - 1)
    }

    /// `Some(j)` when `p = f^j(base)`, `None` when the points lie in
    /// different orbit classes (or the offset overflows).
    fn orbit_offset(&self, base: &Point, p: &Point) -> Option<i64>;

    /// Canonical representative `1/denom` of a fresh orbit class.
    fn class_point(&self, denom: u64) -> Point;

    /// Parse and validate a point for this system.
    fn parse_point(&self, s: &str) -> Result<Point, SystemError>;
}

/// Translation conjugacies; each commutes with its system's map exactly
/// and is an isometry, so transported families verify against the same
/// schedule.
#[derive(Clone, PartialEq, Debug)]
pub enum Conjugacy {
    /// `p -> p + c` with `c` an odd-denominator rational.
    OdometerTranslate(BigRational),
    /// `(s, n) -> (s + c mod 1, n)`.
    RotationTranslate(BigRational),
}

impl Conjugacy {
    pub fn validate(&self, system: &dyn System) -> Result<(), SystemError> {
        let id = system.id();
        match self {
            Conjugacy::OdometerTranslate(c) => {
                if !id.starts_with("odometer") {
                    return Err(SystemError::Invalid(format!(
                        "odometer translation applied to system '{id}'"
                    )));
                }
                if !odometer::is_odd_denominator(c) {
                    return Err(SystemError::Invalid(
                        "odometer translation needs an odd denominator".into(),
                    ));
                }
                Ok(())
            }
            Conjugacy::RotationTranslate(_) => {
                if !id.starts_with("rotation") {
                    return Err(SystemError::Invalid(format!(
                        "rotation translation applied to system '{id}'"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        match (self, p) {
            (Conjugacy::OdometerTranslate(c), Point::Odometer(r)) => Point::Odometer(r + c),
            (Conjugacy::RotationTranslate(c), Point::Rotation { seed, power }) => {
                let s = seed + c;
                let frac = &s - s.floor();
                Point::Rotation {
                    seed: frac,
                    power: *power,
                }
            }
            _ => panic!("conjugacy applied to a point of the wrong system"),
        }
    }
}

type SystemBuilder = fn(Option<&str>) -> Result<Arc<dyn System>, SystemError>;

pub struct SystemEntry {
    pub name: &'static str,
    pub summary: &'static str,
    build: SystemBuilder,
}

fn build_odometer(param: Option<&str>) -> Result<Arc<dyn System>, SystemError> {
    match param {
        None | Some("") => Ok(Arc::new(Odometer)),
        Some(p) => Err(SystemError::Invalid(format!(
            "odometer takes no parameter, got '{p}'"
        ))),
    }
}

fn build_rotation(param: Option<&str>) -> Result<Arc<dyn System>, SystemError> {
    let rule = match param {
        None | Some("") => CfRule::Golden,
        Some(p) => CfRule::parse(p)?,
    };
    Ok(Arc::new(Rotation::new(rule)))
}

const REGISTRY: &[SystemEntry] = &[
    SystemEntry {
        name: "odometer",
        summary: "the +1 map on the 2-adic integers, exact rational arithmetic",
        build: build_odometer,
    },
    SystemEntry {
        name: "rotation",
        summary: "irrational circle rotation, interval-certified; parameter selects the \
                  continued fraction (golden, sqrt2, periodic:a,b,...)",
        build: build_rotation,
    },
];

pub fn registry() -> &'static [SystemEntry] {
    REGISTRY
}

/// Resolve a system spec string like `odometer` or `rotation:golden`.
pub fn resolve(spec: &str) -> Result<Arc<dyn System>, SystemError> {
    let (name, param) = match spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (spec, None),
    };
    for entry in REGISTRY {
        if entry.name == name {
            return (entry.build)(param);
        }
    }
    Err(SystemError::UnknownSystem(spec.to_string()))
}
