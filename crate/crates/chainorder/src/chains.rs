//! Chain values and the syntactic operators the constructions use.

use std::collections::HashMap;

use num::BigRational;
use thiserror::Error;

use crate::systems::Point;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("chains must contain at least one point")]
    Empty,
    #[error("concatenation requires matching eps bounds")]
    EpsMismatch,
    #[error("cannot strip the endpoints of a chain with fewer than 3 points")]
    TooShort,
}

/// One indexed chain with its bound. The hop inequality is checked by the
/// verifier, not assumed here; intermediate pieces (single points, block
/// segments) are legal values.
#[derive(Clone, PartialEq, Debug)]
pub struct EpsilonChain {
    pub points: Vec<Point>,
    pub eps: BigRational,
}

impl EpsilonChain {
    pub fn new(points: Vec<Point>, eps: BigRational) -> Result<Self, ChainError> {
        if points.is_empty() {
            return Err(ChainError::Empty);
        }
        Ok(EpsilonChain { points, eps })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &Point {
        self.points.first().expect("chains are nonempty")
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("chains are nonempty")
    }
}

/// `a` followed by `b`, sharing one eps bound. No hop check happens at
/// the junction; the caller owns that obligation.
pub fn concat(a: &EpsilonChain, b: &EpsilonChain) -> Result<EpsilonChain, ChainError> {
    if a.eps != b.eps {
        return Err(ChainError::EpsMismatch);
    }
    let mut points = a.points.clone();
    points.extend(b.points.iter().cloned());
    EpsilonChain::new(points, a.eps.clone())
}

/// Delete the first and the last point.
pub fn strip_endpoints(c: &EpsilonChain) -> Result<EpsilonChain, ChainError> {
    if c.len() < 3 {
        return Err(ChainError::TooShort);
    }
    EpsilonChain::new(c.points[1..c.len() - 1].to_vec(), c.eps.clone())
}

/// A finite-depth prefix of a complete sequence of chains from `x` to `y`.
#[derive(Clone, Debug)]
pub struct NestedFamily {
    pub x: Point,
    pub y: Point,
    /// `stages[n-1]` is the stage-`n` chain.
    pub stages: Vec<EpsilonChain>,
}

impl NestedFamily {
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn epsilons(&self) -> Vec<BigRational> {
        self.stages.iter().map(|s| s.eps.clone()).collect()
    }
}

/// The stable appearance order on the union of supports minus the
/// endpoints, reported as a partial order with a linearity flag.
#[derive(Clone, Debug)]
pub struct LimitOrder {
    /// All support points except the endpoints; sorted by the limit order
    /// when `linear` holds, otherwise in last-stage appearance order.
    pub elements: Vec<Point>,
    pub linear: bool,
    /// Sample pairs whose appearance order flips between stages.
    pub conflicts: Vec<(Point, Point)>,
    /// 1-based stage at which each element first appears.
    pub first_stage: HashMap<Point, usize>,
}

/// Compute the limit order by first-appearance position, comparing every
/// pair of stages that share elements. Non-linear outcomes are reported,
/// not rejected.
pub fn limit_order(fam: &NestedFamily) -> LimitOrder {
    let mut ids: HashMap<&Point, usize> = HashMap::new();
    let mut points: Vec<&Point> = Vec::new();
    for stage in &fam.stages {
        for p in &stage.points {
            if !ids.contains_key(p) {
                ids.insert(p, points.len());
                points.push(p);
            }
        }
    }
    let is_endpoint = |p: &Point| *p == fam.x || *p == fam.y;

    // first-appearance index of each interned point per stage
    let mut appearance: Vec<Vec<Option<usize>>> = Vec::with_capacity(fam.stages.len());
    for stage in &fam.stages {
        let mut app = vec![None; points.len()];
        for (i, p) in stage.points.iter().enumerate() {
            let id = ids[p];
            if app[id].is_none() {
                app[id] = Some(i);
            }
        }
        appearance.push(app);
    }

    let mut first_stage: HashMap<Point, usize> = HashMap::new();
    for (id, p) in points.iter().enumerate() {
        if is_endpoint(p) {
            continue;
        }
        for (s, app) in appearance.iter().enumerate() {
            if app[id].is_some() {
                first_stage.insert((*p).clone(), s + 1);
                break;
            }
        }
    }

    let mut conflicts: Vec<(Point, Point)> = Vec::new();
    'outer: for i in 0..fam.stages.len() {
        for j in i + 1..fam.stages.len() {
            // elements of both stages, minus endpoints, in stage-i order
            let mut common: Vec<usize> = (0..points.len())
                .filter(|&id| {
                    !is_endpoint(points[id])
                        && appearance[i][id].is_some()
                        && appearance[j][id].is_some()
                })
                .collect();
            common.sort_by_key(|&id| appearance[i][id]);
            for w in common.windows(2) {
                let (a, b) = (w[0], w[1]);
                if appearance[j][a] > appearance[j][b] {
                    conflicts.push((points[a].clone(), points[b].clone()));
                    if conflicts.len() >= 4 {
                        break 'outer;
                    }
                }
            }
        }
    }

    // every element must reach the final stage for all pairs to share one
    let last = appearance.last();
    let mut all_in_last = true;
    let mut elements: Vec<usize> = (0..points.len())
        .filter(|&id| !is_endpoint(points[id]))
        .collect();
    if let Some(last) = last {
        for &id in &elements {
            if last[id].is_none() {
                all_in_last = false;
            }
        }
        elements.sort_by_key(|&id| last[id].unwrap_or(usize::MAX));
    }

    LimitOrder {
        elements: elements.into_iter().map(|id| points[id].clone()).collect(),
        linear: conflicts.is_empty() && all_in_last,
        conflicts,
        first_stage,
    }
}
