//! Canonical block decomposition of sum terms.
//!
//! A sum is rewritten as an indexed family of blocks `h + core + k` where
//! every core is an infinite term and the finite summands of the original
//! presentation have been absorbed as padding on a neighboring core. A
//! finite run prefers to pad the core to its right (as a leading segment);
//! a run with no core to its right pads the core to its left (as a
//! trailing segment). Padding in front of `w` and after `w*` is dropped:
//! the padded block is order-isomorphic to the unpadded one.

use std::collections::BTreeMap;

use super::{IndexKind, OrderTerm, TermError};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlockSpec {
    pub h: u64,
    pub core: OrderTerm,
    pub k: u64,
}

impl BlockSpec {
    fn new(h: u64, core: OrderTerm, k: u64) -> Self {
        let (h, k) = match core {
            OrderTerm::Omega => (0, k),
            OrderTerm::OmegaStar => (h, 0),
            _ => (h, k),
        };
        BlockSpec { h, core, k }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NormIndex {
    Fin(usize),
    Omega,
    OmegaStar,
    Zeta,
}

#[derive(Clone, PartialEq, Debug)]
pub struct NormalizedSum {
    pub index: NormIndex,
    /// Exceptional blocks by position. Positions are 1-based for `Fin`
    /// and `Omega`, run through -1, -2, ... for `OmegaStar`, and cover a
    /// contiguous range starting at 0 for `Zeta`.
    pub except: BTreeMap<i64, BlockSpec>,
    /// Rule for every remaining negative position.
    pub neg_tail: Option<BlockSpec>,
    /// Rule for every remaining positive position.
    pub pos_tail: Option<BlockSpec>,
}

impl NormalizedSum {
    pub fn block_at(&self, pos: i64) -> &BlockSpec {
        if let Some(b) = self.except.get(&pos) {
            return b;
        }
        match self.index {
            NormIndex::Fin(_) => panic!("position {pos} outside the finite index range"),
            NormIndex::Omega => self.pos_tail.as_ref().expect("omega sum has a tail"),
            NormIndex::OmegaStar => self.neg_tail.as_ref().expect("omega* sum has a tail"),
            NormIndex::Zeta => {
                if pos < 0 {
                    self.neg_tail.as_ref().expect("zeta sum has a neg tail")
                } else {
                    self.pos_tail.as_ref().expect("zeta sum has a pos tail")
                }
            }
        }
    }
}

enum MidEntry {
    Finite(u64),
    Core(OrderTerm),
}

/// Decompose a normalized sum term into indexed blocks.
pub fn normalize_sum(t: &OrderTerm) -> Result<NormalizedSum, TermError> {
    let (index, head, tail, tail2) = match t {
        OrderTerm::Sum {
            index,
            head,
            tail,
            tail2,
        } => (*index, head, tail, tail2),
        other => {
            return Err(if other.finite_size().is_some() {
                TermError::FiniteOrder(format!("{other:?}"))
            } else {
                TermError::NotASum(format!("{other:?}"))
            })
        }
    };

    // Physical (left-to-right) middle section plus the infinite sides.
    let (left_tail, mid, right_tail): (Option<&OrderTerm>, Vec<&OrderTerm>, Option<&OrderTerm>) =
        match index {
            IndexKind::FinIdx => (None, head.iter().collect(), None),
            IndexKind::OmegaIdx => (
                None,
                head.iter().collect(),
                Some(tail.as_ref().expect("omega tail").as_ref()),
            ),
            IndexKind::OmegaStarIdx => (
                Some(tail.as_ref().expect("omega* tail").as_ref()),
                head.iter().rev().collect(),
                None,
            ),
            IndexKind::ZetaIdx => (
                Some(tail.as_ref().expect("zeta neg tail").as_ref()),
                head.iter().collect(),
                Some(tail2.as_ref().expect("zeta pos tail").as_ref()),
            ),
        };

    let mut entries: Vec<MidEntry> = Vec::new();
    for term in mid {
        match term.finite_size() {
            Some(0) => {}
            Some(c) => match entries.last_mut() {
                Some(MidEntry::Finite(acc)) => *acc += c,
                _ => entries.push(MidEntry::Finite(c)),
            },
            None => entries.push(MidEntry::Core(term.clone())),
        }
    }

    let mut blocks: Vec<BlockSpec> = Vec::new();
    let mut pending: u64 = 0;
    for e in entries {
        match e {
            MidEntry::Finite(c) => pending += c,
            MidEntry::Core(core) => {
                blocks.push(BlockSpec::new(pending, core, 0));
                pending = 0;
            }
        }
    }
    if pending > 0 {
        if let Some(rt) = right_tail {
            // materialize the first instance of the right tail
            blocks.push(BlockSpec::new(pending, rt.clone(), 0));
        } else if let Some(last) = blocks.last_mut() {
            *last = BlockSpec::new(last.h, last.core.clone(), last.k + pending);
        } else if let Some(lt) = left_tail {
            // materialize the last instance of the left tail
            blocks.push(BlockSpec::new(0, lt.clone(), pending));
        } else {
            return Err(TermError::FiniteOrder(format!("{t:?}")));
        }
    }

    let neg_tail = left_tail.map(|c| BlockSpec::new(0, c.clone(), 0));
    let pos_tail = right_tail.map(|c| BlockSpec::new(0, c.clone(), 0));

    let mut except = BTreeMap::new();
    let index = match index {
        IndexKind::FinIdx => {
            if blocks.is_empty() {
                return Err(TermError::FiniteOrder(format!("{t:?}")));
            }
            let k = blocks.len();
            for (i, b) in blocks.into_iter().enumerate() {
                except.insert(i as i64 + 1, b);
            }
            NormIndex::Fin(k)
        }
        IndexKind::OmegaIdx => {
            for (i, b) in blocks.into_iter().enumerate() {
                except.insert(i as i64 + 1, b);
            }
            NormIndex::Omega
        }
        IndexKind::OmegaStarIdx => {
            let m = blocks.len() as i64;
            for (i, b) in blocks.into_iter().enumerate() {
                except.insert(i as i64 - m, b);
            }
            NormIndex::OmegaStar
        }
        IndexKind::ZetaIdx => {
            for (i, b) in blocks.into_iter().enumerate() {
                except.insert(i as i64, b);
            }
            NormIndex::Zeta
        }
    };

    Ok(NormalizedSum {
        index,
        except,
        neg_tail,
        pos_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{normalize, parse_term};

    #[test]
    fn pure_tail_sum() {
        let t = parse_term("sum(w*; ; z)").unwrap();
        let n = normalize_sum(&t).unwrap();
        assert_eq!(n.index, NormIndex::OmegaStar);
        assert!(n.except.is_empty());
        assert_eq!(
            n.neg_tail,
            Some(BlockSpec {
                h: 0,
                core: OrderTerm::Zeta,
                k: 0
            })
        );
        assert_eq!(n.block_at(-7).core, OrderTerm::Zeta);
    }

    #[test]
    fn trailing_finite_pads_left_core() {
        // physical layout ... z z w 2: the trailing 2 pads the w on its left
        let t = parse_term("sum(w*; fin(2), w; z)").unwrap();
        let n = normalize_sum(&t).unwrap();
        assert_eq!(n.index, NormIndex::OmegaStar);
        assert_eq!(
            n.except.get(&-1),
            Some(&BlockSpec {
                h: 0,
                core: OrderTerm::Omega,
                k: 2
            })
        );
        assert_eq!(n.except.len(), 1);
        assert_eq!(n.block_at(-2).core, OrderTerm::Zeta);
        assert_eq!(n.block_at(-2).h, 0);
    }

    #[test]
    fn finite_index_blocks() {
        let t = parse_term("sum(fin; w, w*)").unwrap();
        let n = normalize_sum(&t).unwrap();
        assert_eq!(n.index, NormIndex::Fin(2));
        assert_eq!(n.block_at(1).core, OrderTerm::Omega);
        assert_eq!(n.block_at(2).core, OrderTerm::OmegaStar);
    }

    #[test]
    fn padding_before_omega_is_dropped() {
        // 2 + w repeated is order-isomorphic to w repeated
        let t = parse_term("sum(w; fin(2); w)").unwrap();
        let n = normalize_sum(&t).unwrap();
        assert_eq!(
            n.block_at(1),
            &BlockSpec {
                h: 0,
                core: OrderTerm::Omega,
                k: 0
            }
        );
    }

    #[test]
    fn single_padded_block() {
        // w + 3 as a finite-index sum normalizes to one padded omega block
        let t = parse_term("sum(fin; w, fin(3))").unwrap();
        let n = normalize_sum(&t).unwrap();
        assert_eq!(n.index, NormIndex::Fin(1));
        assert_eq!(
            n.block_at(1),
            &BlockSpec {
                h: 0,
                core: OrderTerm::Omega,
                k: 3
            }
        );
        // 2 + w* likewise
        let t = parse_term("sum(fin; fin(2), w*)").unwrap();
        let n = normalize_sum(&t).unwrap();
        assert_eq!(
            n.block_at(1),
            &BlockSpec {
                h: 2,
                core: OrderTerm::OmegaStar,
                k: 0
            }
        );
        // 1 + z + 2
        let t = parse_term("sum(fin; 1, z, fin(2))").unwrap();
        let n = normalize_sum(&t).unwrap();
        assert_eq!(
            n.block_at(1),
            &BlockSpec {
                h: 1,
                core: OrderTerm::Zeta,
                k: 2
            }
        );
    }

    #[test]
    fn rejects_finite_orders() {
        let t = normalize(parse_term("fin(4)").unwrap());
        assert!(matches!(normalize_sum(&t), Err(TermError::FiniteOrder(_))));
    }
}
