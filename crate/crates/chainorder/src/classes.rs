//! Orbit-class allocation and lazily generated alpha-structures.
//!
//! The allocator hands out representatives `1/p` over the odd primes, in
//! order, skipping classes that meet the avoid set. Every seed it ever
//! issues lies in a fresh orbit class, so supports of anything built on
//! top are pairwise disjoint by construction. An alpha-structure is a
//! lazily forced tree of such seeds: a rank-2 node is a countable seed
//! list, a successor-rank node has children one rank down, and a
//! limit-rank node has children along the canonical fundamental sequence
//! of its rank. Forcing order is the single serialization point; one
//! allocator plus one forcing pattern reproduces identical structures.

use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::order::OrdinalCnf;
use crate::systems::{Point, System};

#[derive(Debug, Error)]
pub enum ClassError {
    #[error("structure rank must be at least 2, got {0}")]
    RankTooSmall(OrdinalCnf),
    #[error("a rank-2 structure has seeds, not children")]
    LeafHasNoChildren,
    #[error("seeds are enumerated on rank-2 structures only")]
    NotALeaf,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClassSeed {
    pub point: Point,
    /// Allocation counter at issue time.
    pub index: u64,
}

struct PrimeGen {
    primes: Vec<u64>,
    candidate: u64,
}

impl PrimeGen {
    fn new() -> Self {
        PrimeGen {
            primes: Vec::new(),
            candidate: 3,
        }
    }

    /// Next odd prime: 3, 5, 7, 11, ...
    fn next(&mut self) -> u64 {
        loop {
            let c = self.candidate;
            self.candidate += 2;
            if self
                .primes
                .iter()
                .take_while(|&&p| p * p <= c)
                .all(|&p| !c.is_multiple_of(p))
            {
                self.primes.push(c);
                return c;
            }
        }
    }
}

struct AllocCore {
    system: Arc<dyn System>,
    primes: PrimeGen,
    avoid: Vec<Point>,
    issued: u64,
}

impl AllocCore {
    fn next_admissible(&mut self, extra_avoid: &[Point]) -> ClassSeed {
        loop {
            let p = self.primes.next();
            let point = self.system.class_point(p);
            let clash = self
                .avoid
                .iter()
                .chain(extra_avoid.iter())
                .any(|a| self.system.same_class(a, &point));
            if clash {
                continue;
            }
            let index = self.issued;
            self.issued += 1;
            return ClassSeed { point, index };
        }
    }
}

/// Stateful source of pairwise-disjoint orbit classes.
pub struct ClassAllocator {
    core: Rc<RefCell<AllocCore>>,
}

impl ClassAllocator {
    /// `seed` offsets the start of the prime sequence; `avoid` registers
    /// classes (typically the endpoints) that must never be issued.
    pub fn new(system: Arc<dyn System>, seed: u64, avoid: Vec<Point>) -> Self {
        let mut primes = PrimeGen::new();
        for _ in 0..seed {
            primes.next();
        }
        ClassAllocator {
            core: Rc::new(RefCell::new(AllocCore {
                system,
                primes,
                avoid,
                issued: 0,
            })),
        }
    }

    pub fn system(&self) -> Arc<dyn System> {
        self.core.borrow().system.clone()
    }

    pub fn fresh_class(&self, avoid: &[ClassSeed]) -> ClassSeed {
        let pts: Vec<Point> = avoid.iter().map(|s| s.point.clone()).collect();
        self.fresh_class_avoiding_points(&pts)
    }

    pub fn fresh_class_avoiding_points(&self, avoid: &[Point]) -> ClassSeed {
        self.core.borrow_mut().next_admissible(avoid)
    }

    pub fn build_alpha(&self, rank: OrdinalCnf) -> Result<AlphaStructure, ClassError> {
        if rank < OrdinalCnf::from_nat(2) {
            return Err(ClassError::RankTooSmall(rank));
        }
        Ok(AlphaStructure {
            rank,
            node: Rc::new(Node::default()),
            core: self.core.clone(),
            filter: Vec::new(),
        })
    }
}

#[derive(Default)]
struct Node {
    seeds: RefCell<Vec<ClassSeed>>,
    children: RefCell<Vec<Rc<Node>>>,
}

/// A lazily forced alpha-structure view. `minus` produces a filtered view
/// sharing the same underlying tree, so disjointness across views is
/// preserved.
#[derive(Clone)]
pub struct AlphaStructure {
    rank: OrdinalCnf,
    node: Rc<Node>,
    core: Rc<RefCell<AllocCore>>,
    filter: Vec<Point>,
}

impl AlphaStructure {
    pub fn rank(&self) -> &OrdinalCnf {
        &self.rank
    }

    pub fn is_leaf(&self) -> bool {
        self.rank == OrdinalCnf::from_nat(2)
    }

    fn raw_seed(&self, i: usize) -> ClassSeed {
        let mut seeds = self.node.seeds.borrow_mut();
        while seeds.len() <= i {
            seeds.push(self.core.borrow_mut().next_admissible(&[]));
        }
        seeds[i].clone()
    }

    fn is_filtered(&self, seed: &ClassSeed) -> bool {
        let core = self.core.borrow();
        self.filter
            .iter()
            .any(|p| core.system.same_class(p, &seed.point))
    }

    /// `i`-th seed of a rank-2 structure, after filtering.
    pub fn seed(&self, i: usize) -> Result<ClassSeed, ClassError> {
        if !self.is_leaf() {
            return Err(ClassError::NotALeaf);
        }
        let mut found = 0;
        let mut raw = 0;
        loop {
            let s = self.raw_seed(raw);
            raw += 1;
            if self.is_filtered(&s) {
                continue;
            }
            if found == i {
                return Ok(s);
            }
            found += 1;
        }
    }

    pub fn child_rank(&self, i: usize) -> Result<OrdinalCnf, ClassError> {
        if self.is_leaf() {
            return Err(ClassError::LeafHasNoChildren);
        }
        if let Some(beta) = self.rank.pred() {
            Ok(beta)
        } else {
            Ok(self.rank.fundamental(i))
        }
    }

    pub fn child(&self, i: usize) -> Result<AlphaStructure, ClassError> {
        let rank = self.child_rank(i)?;
        let mut children = self.node.children.borrow_mut();
        while children.len() <= i {
            children.push(Rc::new(Node::default()));
        }
        Ok(AlphaStructure {
            rank,
            node: children[i].clone(),
            core: self.core.clone(),
            filter: self.filter.clone(),
        })
    }

    /// Filtered view with the classes of `removed` taken out of every leaf.
    pub fn minus(&self, removed: &[ClassSeed]) -> AlphaStructure {
        self.minus_points(&removed.iter().map(|s| s.point.clone()).collect::<Vec<_>>())
    }

    pub fn minus_points(&self, removed: &[Point]) -> AlphaStructure {
        let mut filter = self.filter.clone();
        filter.extend(removed.iter().cloned());
        AlphaStructure {
            rank: self.rank.clone(),
            node: self.node.clone(),
            core: self.core.clone(),
            filter,
        }
    }

    /// First class in the support: the first seed of the leftmost leaf.
    pub fn first_class(&self) -> Result<ClassSeed, ClassError> {
        if self.is_leaf() {
            self.seed(0)
        } else {
            self.child(0)?.first_class()
        }
    }

    /// Deterministic descent to a substructure of exactly `target` rank.
    pub fn descend_to_rank(&self, target: &OrdinalCnf) -> Result<AlphaStructure, ClassError> {
        if *target < OrdinalCnf::from_nat(2) || *target > self.rank {
            return Err(ClassError::RankTooSmall(target.clone()));
        }
        if self.rank == *target {
            return Ok(self.clone());
        }
        if self.rank.is_successor() {
            self.child(0)?.descend_to_rank(target)
        } else {
            let mut i = 0;
            loop {
                if self.child_rank(i)? >= *target {
                    return self.child(i)?.descend_to_rank(target);
                }
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::resolve;

    fn odo_alloc(seed: u64) -> ClassAllocator {
        ClassAllocator::new(resolve("odometer").unwrap(), seed, vec![])
    }

    #[test]
    fn first_three_fresh_classes() {
        let sys = resolve("odometer").unwrap();
        let alloc = odo_alloc(0);
        let a = alloc.fresh_class(&[]);
        let b = alloc.fresh_class(&[]);
        let c = alloc.fresh_class(&[]);
        assert_eq!(a.point, sys.parse_point("1/3").unwrap());
        assert_eq!(b.point, sys.parse_point("1/5").unwrap());
        assert_eq!(c.point, sys.parse_point("1/7").unwrap());
        assert!(!sys.same_class(&a.point, &b.point));
        assert!(!sys.same_class(&a.point, &c.point));
        assert!(!sys.same_class(&b.point, &c.point));
    }

    #[test]
    fn avoid_set_skips() {
        let sys = resolve("odometer").unwrap();
        let alloc = odo_alloc(0);
        let avoid = ClassSeed {
            point: sys.parse_point("1/3").unwrap(),
            index: 0,
        };
        let first = alloc.fresh_class(&[avoid]);
        assert_eq!(first.point, sys.parse_point("1/5").unwrap());
    }

    #[test]
    fn rotation_allocator_distinct_seeds() {
        let sys = resolve("rotation:golden").unwrap();
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let seeds: Vec<_> = (0..4).map(|_| alloc.fresh_class(&[])).collect();
        for i in 0..seeds.len() {
            for j in 0..i {
                assert!(!sys.same_class(&seeds[i].point, &seeds[j].point));
            }
        }
    }

    #[test]
    fn leaf_structure_disjoint() {
        let sys = resolve("odometer").unwrap();
        let alloc = odo_alloc(0);
        let a = alloc.build_alpha(OrdinalCnf::from_nat(2)).unwrap();
        let seeds: Vec<_> = (0..4).map(|i| a.seed(i).unwrap()).collect();
        for i in 0..4 {
            for j in 0..i {
                assert!(!sys.same_class(&seeds[i].point, &seeds[j].point));
            }
        }
    }

    #[test]
    fn rank_three_children_disjoint() {
        let sys = resolve("odometer").unwrap();
        let alloc = odo_alloc(0);
        let a = alloc.build_alpha(OrdinalCnf::from_nat(3)).unwrap();
        let mut all = Vec::new();
        for c in 0..3 {
            let child = a.child(c).unwrap();
            assert!(child.is_leaf());
            for i in 0..3 {
                all.push(child.seed(i).unwrap());
            }
        }
        assert_eq!(all.len(), 9);
        for i in 0..all.len() {
            for j in 0..i {
                assert!(!sys.same_class(&all[i].point, &all[j].point));
            }
        }
    }

    #[test]
    fn limit_rank_children_follow_fundamental_sequence() {
        let alloc = odo_alloc(0);
        let a = alloc.build_alpha(OrdinalCnf::omega()).unwrap();
        assert_eq!(a.child_rank(0).unwrap(), OrdinalCnf::from_nat(2));
        assert_eq!(a.child_rank(1).unwrap(), OrdinalCnf::from_nat(3));
        assert_eq!(a.child_rank(2).unwrap(), OrdinalCnf::from_nat(4));
    }

    #[test]
    fn minus_filters_leaves() {
        let sys = resolve("odometer").unwrap();
        let alloc = odo_alloc(0);
        let a = alloc.build_alpha(OrdinalCnf::from_nat(2)).unwrap();
        let s1 = a.seed(1).unwrap(); // 1/5
        let filtered = a.minus(std::slice::from_ref(&s1));
        for i in 0..6 {
            let s = filtered.seed(i).unwrap();
            assert!(!sys.same_class(&s.point, &s1.point));
        }
        // minus nothing is the identity view
        let same = a.minus(&[]);
        assert_eq!(same.seed(0).unwrap(), a.seed(0).unwrap());
    }

    #[test]
    fn descend_to_rank_from_limit() {
        let alloc = odo_alloc(0);
        let a = alloc.build_alpha(OrdinalCnf::omega().succ()).unwrap();
        let leaf = a.descend_to_rank(&OrdinalCnf::from_nat(2)).unwrap();
        assert!(leaf.is_leaf());
        let three = a.descend_to_rank(&OrdinalCnf::from_nat(3)).unwrap();
        assert_eq!(*three.rank(), OrdinalCnf::from_nat(3));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let run = |seed| {
            let alloc = odo_alloc(seed);
            let a = alloc.build_alpha(OrdinalCnf::from_nat(3)).unwrap();
            let mut pts = Vec::new();
            for c in 0..2 {
                let child = a.child(c).unwrap();
                for i in 0..2 {
                    pts.push(child.seed(i).unwrap().point);
                }
            }
            pts
        };
        assert_eq!(run(0), run(0));
        assert_ne!(run(0), run(3));
    }
}
