//! Irrational circle rotation `x -> x + alpha (mod 1)`.
//!
//! `alpha` in `(0, 1)` is given by an eventually periodic continued
//! fraction rule, so it is a quadratic irrational computable to any
//! precision. A point is stored as `(seed, power)`, denoting
//! `seed + power * alpha mod 1`; orbit points share their seed, which
//! makes point equality and orbit-class membership exact. Distance
//! comparisons are decided by bracketing `alpha` between convergents and
//! refining until the interval falls on one side of the threshold; a
//! comparison that cannot be decided at maximal depth is an error, never
//! a guess. Approach searches are capped through the three-distance
//! structure of the orbit: once the convergent denominators `q` satisfy
//! `1/q_k + 1/q_{k+1} < eps`, any window of `q_k` consecutive iterates
//! meets every `eps`-ball.

use std::cmp::Ordering;

use num::{BigInt, BigRational, One, Signed, Zero};

use super::{rat_from_str, Point, System, SystemError};

const MAX_DEPTH: usize = 160;
const DEPTH_STEP: usize = 8;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CfRule {
    /// All partial quotients 1: `alpha = (sqrt(5) - 1) / 2`.
    Golden,
    /// All partial quotients 2: `alpha = sqrt(2) - 1`.
    Sqrt2,
    /// Repeating block of partial quotients, each >= 1.
    Periodic(Vec<u64>),
}

impl CfRule {
    pub fn parse(s: &str) -> Result<CfRule, SystemError> {
        match s {
            "golden" => Ok(CfRule::Golden),
            "sqrt2" => Ok(CfRule::Sqrt2),
            other => {
                if let Some(rest) = other.strip_prefix("periodic:") {
                    let terms = rest
                        .split(',')
                        .map(|x| x.trim().parse::<u64>())
                        .collect::<Result<Vec<u64>, _>>()
                        .map_err(|_| {
                            SystemError::Invalid(format!("bad continued-fraction spec '{other}'"))
                        })?;
                    if terms.is_empty() || terms.contains(&0) {
                        return Err(SystemError::Invalid(
                            "periodic continued fraction needs terms >= 1".into(),
                        ));
                    }
                    Ok(CfRule::Periodic(terms))
                } else {
                    Err(SystemError::Invalid(format!(
                        "unknown rotation parameter '{other}' (expected golden, sqrt2, or \
                         periodic:a,b,...)"
                    )))
                }
            }
        }
    }

    pub fn param(&self) -> String {
        match self {
            CfRule::Golden => "golden".into(),
            CfRule::Sqrt2 => "sqrt2".into(),
            CfRule::Periodic(v) => {
                let body = v
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                format!("periodic:{body}")
            }
        }
    }

    /// Partial quotient `a_i`, `i >= 1`.
    fn quotient(&self, i: usize) -> u64 {
        match self {
            CfRule::Golden => 1,
            CfRule::Sqrt2 => 2,
            CfRule::Periodic(v) => v[(i - 1) % v.len()],
        }
    }
}

#[derive(Debug)]
pub struct Rotation {
    rule: CfRule,
    /// Convergents `p_k / q_k` of `alpha = [0; a_1, a_2, ...]`.
    convergents: Vec<(BigInt, BigInt)>,
}

impl Rotation {
    pub fn new(rule: CfRule) -> Self {
        let mut convergents = Vec::with_capacity(MAX_DEPTH + 2);
        let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (BigInt::zero(), BigInt::one()); // a_0 = 0
        convergents.push((p.clone(), q.clone()));
        for i in 1..=MAX_DEPTH + 1 {
            let a = BigInt::from(rule.quotient(i));
            let p_next = &a * &p + &p_prev;
            let q_next = &a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
            convergents.push((p.clone(), q.clone()));
        }
        Rotation { rule, convergents }
    }

    fn parts<'a>(&self, p: &'a Point) -> (&'a BigRational, i64) {
        match p {
            Point::Rotation { seed, power } => (seed, *power),
            other => panic!("expected a rotation point, got {other:?}"),
        }
    }

    /// Rational bracket `lo < alpha < hi` from convergents `k`, `k+1`.
    fn bracket(&self, k: usize) -> (BigRational, BigRational) {
        let a = BigRational::new(self.convergents[k].0.clone(), self.convergents[k].1.clone());
        let b = BigRational::new(
            self.convergents[k + 1].0.clone(),
            self.convergents[k + 1].1.clone(),
        );
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Relative displacement of `p` against `q` as `(delta_seed, delta_power)`:
    /// the circle difference is `delta_seed + delta_power * alpha mod 1`.
    fn displacement(&self, p: &Point, q: &Point) -> (BigRational, i64) {
        let (sp, np) = self.parts(p);
        let (sq, nq) = self.parts(q);
        (sp - sq, np - nq)
    }

    fn cmp_displacement(
        &self,
        delta_seed: &BigRational,
        delta_power: i64,
        eps: &BigRational,
    ) -> Result<Ordering, SystemError> {
        if !eps.is_positive() {
            return Err(SystemError::Invalid("eps must be positive".into()));
        }
        if delta_power == 0 {
            return Ok(circle_dist_exact(delta_seed).cmp(eps));
        }
        let s = BigRational::from_integer(BigInt::from(delta_power));
        let mut depth = DEPTH_STEP;
        while depth < MAX_DEPTH {
            let (alo, ahi) = self.bracket(depth);
            let (xlo, xhi) = if delta_power > 0 {
                (delta_seed + &s * &alo, delta_seed + &s * &ahi)
            } else {
                (delta_seed + &s * &ahi, delta_seed + &s * &alo)
            };
            if &xhi - &xlo < BigRational::one() {
                let (dlo, dhi) = circle_dist_interval(&xlo, &xhi);
                if dhi < *eps {
                    return Ok(Ordering::Less);
                }
                if dlo > *eps {
                    return Ok(Ordering::Greater);
                }
            }
            depth += DEPTH_STEP;
        }
        Err(SystemError::PrecisionExhausted(format!(
            "could not separate |{} + {}*alpha| from {} at depth {}",
            delta_seed, delta_power, eps, MAX_DEPTH
        )))
    }

    /// Window length guaranteeing an `eps`-approach: the least `q_k` with
    /// `1/q_k + 1/q_{k+1} < eps` (a bound on the largest orbit gap).
    fn search_cap(&self, eps: &BigRational) -> Result<u64, SystemError> {
        if !eps.is_positive() {
            return Err(SystemError::Invalid("eps must be positive".into()));
        }
        for k in 1..MAX_DEPTH {
            let qk = &self.convergents[k].1;
            let qk1 = &self.convergents[k + 1].1;
            let gap = BigRational::new(BigInt::one(), qk.clone())
                + BigRational::new(BigInt::one(), qk1.clone());
            if gap < *eps {
                return u64::try_from(qk).map_err(|_| {
                    SystemError::SearchCapExceeded(format!(
                        "window {qk} for eps {eps} is out of range"
                    ))
                });
            }
        }
        Err(SystemError::SearchCapExceeded(format!(
            "no adequate convergent window for eps {eps}"
        )))
    }

    fn approach(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_j: u64,
        dir: i64,
    ) -> Result<u64, SystemError> {
        let cap = self.search_cap(eps)?;
        if cap > 50_000_000 {
            return Err(SystemError::SearchCapExceeded(format!(
                "window {cap} for eps {eps} is impractically large"
            )));
        }
        let (base_seed, base_power) = self.displacement(from, to);
        for off in 0..=cap {
            let j = min_j + off;
            let power = base_power + dir * i64::try_from(j).expect("approach index in range");
            if self.cmp_displacement(&base_seed, power, eps)? == Ordering::Less {
                return Ok(j);
            }
        }
        Err(SystemError::SearchCapExceeded(format!(
            "no approach within {cap} iterates (eps {eps})"
        )))
    }
}

/// Circle distance of an exactly known displacement.
fn circle_dist_exact(delta: &BigRational) -> BigRational {
    let frac = delta - delta.floor();
    let comp = BigRational::one() - &frac;
    if frac < comp {
        frac
    } else {
        comp
    }
}

/// Distance-to-integers interval for `X` in `[xlo, xhi]`, width < 1.
fn circle_dist_interval(xlo: &BigRational, xhi: &BigRational) -> (BigRational, BigRational) {
    let mut m = xlo.floor();
    let end = xhi.ceil();
    let mut dlo: Option<BigRational> = None;
    let mut dhi: Option<BigRational> = None;
    while m <= end {
        let alo = xlo - &m;
        let ahi = xhi - &m;
        let (ilo, ihi) = if !alo.is_positive() && !ahi.is_negative() {
            let mag = std::cmp::max(-&alo, ahi.clone());
            (BigRational::zero(), mag)
        } else if ahi.is_negative() {
            (-&ahi, -&alo)
        } else {
            (alo.clone(), ahi.clone())
        };
        dlo = Some(match dlo {
            Some(d) => std::cmp::min(d, ilo),
            None => ilo,
        });
        dhi = Some(match dhi {
            Some(d) => std::cmp::min(d, ihi),
            None => ihi,
        });
        m += BigRational::one();
    }
    (dlo.expect("nonempty range"), dhi.expect("nonempty range"))
}

impl System for Rotation {
    fn id(&self) -> String {
        format!("rotation:{}", self.rule.param())
    }

    fn step(&self, p: &Point) -> Point {
        let (seed, power) = self.parts(p);
        Point::Rotation {
            seed: seed.clone(),
            power: power.checked_add(1).expect("rotation power overflow"),
        }
    }

    fn inv_step(&self, p: &Point) -> Point {
        let (seed, power) = self.parts(p);
        Point::Rotation {
            seed: seed.clone(),
            power: power.checked_sub(1).expect("rotation power overflow"),
        }
    }

    fn iterate(&self, p: &Point, n: i64) -> Point {
        let (seed, power) = self.parts(p);
        Point::Rotation {
            seed: seed.clone(),
            power: power.checked_add(n).expect("rotation power overflow"),
        }
    }

    fn cmp_dist(&self, p: &Point, q: &Point, eps: &BigRational) -> Result<Ordering, SystemError> {
        let (ds, dn) = self.displacement(p, q);
        self.cmp_displacement(&ds, dn, eps)
    }

    fn dist_bounds(&self, p: &Point, q: &Point) -> Result<(BigRational, BigRational), SystemError> {
        let (ds, dn) = self.displacement(p, q);
        if dn == 0 {
            let d = circle_dist_exact(&ds);
            return Ok((d.clone(), d));
        }
        let s = BigRational::from_integer(BigInt::from(dn));
        let (alo, ahi) = self.bracket(MAX_DEPTH - 1);
        let (xlo, xhi) = if dn > 0 {
            (&ds + &s * &alo, &ds + &s * &ahi)
        } else {
            (&ds + &s * &ahi, &ds + &s * &alo)
        };
        if &xhi - &xlo >= BigRational::one() {
            return Err(SystemError::PrecisionExhausted(
                "displacement too coarse for distance bounds".into(),
            ));
        }
        Ok(circle_dist_interval(&xlo, &xhi))
    }

    fn same_class(&self, p: &Point, q: &Point) -> bool {
        let (sp, _) = self.parts(p);
        let (sq, _) = self.parts(q);
        sp == sq
    }

    fn forward_approach(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_j: u64,
    ) -> Result<u64, SystemError> {
        self.approach(from, to, eps, min_j, 1)
    }

    fn backward_approach(
        &self,
        from: &Point,
        to: &Point,
        eps: &BigRational,
        min_j: u64,
    ) -> Result<u64, SystemError> {
        self.approach(from, to, eps, min_j, -1)
    }

    fn orbit_offset(&self, base: &Point, p: &Point) -> Option<i64> {
        let (sb, nb) = self.parts(base);
        let (sp, np) = self.parts(p);
        if sb != sp {
            return None;
        }
        np.checked_sub(nb)
    }

    fn class_point(&self, denom: u64) -> Point {
        Point::Rotation {
            seed: BigRational::new(BigInt::one(), BigInt::from(denom)),
            power: 0,
        }
    }

    fn parse_point(&self, s: &str) -> Result<Point, SystemError> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(|| {
                SystemError::BadPoint(format!("rotation point must look like (p/q, n), got '{s}'"))
            })?;
        let (seed_s, power_s) = inner.split_once(',').ok_or_else(|| {
            SystemError::BadPoint(format!("rotation point must look like (p/q, n), got '{s}'"))
        })?;
        let seed = rat_from_str(seed_s)?;
        if seed.is_negative() || seed >= BigRational::one() {
            return Err(SystemError::BadPoint(format!(
                "rotation seed must lie in [0, 1), got '{seed_s}'"
            )));
        }
        let power: i64 = power_s
            .trim()
            .parse()
            .map_err(|_| SystemError::BadPoint(format!("bad rotation power '{power_s}'")))?;
        Ok(Point::Rotation { seed, power })
    }
}
