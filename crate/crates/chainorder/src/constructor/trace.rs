//! Construction traces: per-point addresses into the target term plus the
//! anchor and block bookkeeping the verifier replays.

use std::collections::BTreeMap;

use crate::order::NormIndex;
use crate::systems::{Conjugacy, Point};

/// Address of a support point inside the target term: a sequence of block
/// positions descending through nested sums, terminated by a leaf
/// coordinate. Leaf coordinates are `[segment, index]` pairs where
/// segment 0 is orbit material of the start anchor (`f^j`, `j >= 1`
/// relative to the local start point), segment 1 is middle material (the
/// orbit of a fresh class, or a recursive core), and segment 2 is orbit
/// material of the end anchor (`f^-s`, coordinate `-s`). Lexicographic
/// order on addresses is the intended limit order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Address(pub Vec<i64>);

impl Address {
    pub fn prefixed(&self, head: i64) -> Address {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(head);
        v.extend_from_slice(&self.0);
        Address(v)
    }
}

/// The three elementary pair shapes realizable between orbit-disjoint
/// endpoints: `w + k`, `h + w*`, and `h + z + k`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BasicCase {
    OmegaPlusK { k: u64 },
    HPlusOmegaStar { h: u64 },
    HZetaK { h: u64, k: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockSpan {
    pub pos: i64,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug)]
pub struct BlockTrace {
    pub pos: i64,
    /// Anchor the block starts from (`z_pos`; the block runs from its
    /// predecessor `f^-1(z_pos)`).
    pub anchor_from: Point,
    /// Anchor the block runs to (`z_(pos+1)`).
    pub anchor_to: Point,
    /// Explicit orbit padding wrapped around a recursive core; zero when
    /// the child realizes its padding natively.
    pub h_pad: u64,
    pub k_pad: u64,
    /// Observed sizes, at the final stage, of the block's runs inside the
    /// start-anchor and end-anchor classes (padding plus overhang).
    pub from_class_run: u64,
    pub to_class_run: u64,
    pub child: Box<TraceNode>,
}

#[derive(Clone, Debug)]
pub enum TraceNode {
    /// Exact orbit chain to `f^m` of the start point.
    Orbit { m: u64 },
    /// An elementary family; growing hit sequences recorded per stage.
    Basic {
        case: BasicCase,
        mid: Option<Point>,
        h_seq: Vec<u64>,
        k_seq: Vec<u64>,
    },
    /// An indexed concatenation of stripped block families.
    Sum {
        index: NormIndex,
        blocks: Vec<BlockTrace>,
        /// For each stage (1-based off the index), the block spans in
        /// that stage's chain coordinates.
        stage_blocks: Vec<Vec<BlockSpan>>,
    },
}

impl TraceNode {
    fn map_points(&mut self, f: &impl Fn(&Point) -> Point) {
        match self {
            TraceNode::Orbit { .. } => {}
            TraceNode::Basic { mid, .. } => {
                if let Some(m) = mid {
                    *m = f(m);
                }
            }
            TraceNode::Sum { blocks, .. } => {
                for b in blocks {
                    b.anchor_from = f(&b.anchor_from);
                    b.anchor_to = f(&b.anchor_to);
                    b.child.map_points(f);
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstructionTrace {
    pub addresses: BTreeMap<Point, Address>,
    pub root: TraceNode,
}

impl ConstructionTrace {
    /// Image of the trace under a conjugacy: keys move, addresses do not.
    pub fn transported(&self, conj: &Conjugacy) -> ConstructionTrace {
        let addresses = self
            .addresses
            .iter()
            .map(|(p, a)| (conj.apply(p), a.clone()))
            .collect();
        let mut root = self.root.clone();
        root.map_points(&|p| conj.apply(p));
        ConstructionTrace { addresses, root }
    }
}

/// Block positions present at stage `n` of an indexed sum: `n` blocks for
/// the infinite indices (two-sided for `z`, splitting `n` between the
/// sides), all `K` blocks for a finite index.
pub fn expected_positions(index: NormIndex, n: usize) -> Vec<i64> {
    match index {
        NormIndex::Fin(k) => (1..=k as i64).collect(),
        NormIndex::Omega => (1..=n as i64).collect(),
        NormIndex::OmegaStar => (-(n as i64)..=-1).collect(),
        NormIndex::Zeta => {
            let left = (n as i64 + 1) / 2;
            let right = n as i64 / 2;
            (-left..right).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_order_is_lexicographic() {
        let a = Address(vec![-2, 0, 1]);
        let b = Address(vec![-2, 1, 0]);
        let c = Address(vec![-1, 0, 1]);
        assert!(a < b && b < c);
        assert_eq!(a.prefixed(5).0, vec![5, -2, 0, 1]);
    }

    #[test]
    fn stage_position_laws() {
        assert_eq!(
            expected_positions(NormIndex::OmegaStar, 3),
            vec![-3, -2, -1]
        );
        assert_eq!(expected_positions(NormIndex::Omega, 2), vec![1, 2]);
        assert_eq!(expected_positions(NormIndex::Fin(3), 9), vec![1, 2, 3]);
        assert_eq!(expected_positions(NormIndex::Zeta, 1), vec![-1]);
        assert_eq!(expected_positions(NormIndex::Zeta, 2), vec![-1, 0]);
        assert_eq!(expected_positions(NormIndex::Zeta, 3), vec![-2, -1, 0]);
        assert_eq!(expected_positions(NormIndex::Zeta, 4), vec![-2, -1, 0, 1]);
        for n in 1..=8 {
            assert_eq!(expected_positions(NormIndex::Zeta, n).len(), n);
        }
    }
}
