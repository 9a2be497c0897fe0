//! Finitely presented countable scattered order terms.
//!
//! A term is built from the atoms `0`, `1`, `fin(k)`, `w`, `w*`, `z` and
//! sums indexed by a finite set, by `w`, by `w*`, or by `z`. Infinite
//! index sets carry an eventually-constant tail rule: the head lists the
//! finitely many exceptional blocks and the tail repeats for every
//! remaining index. Head enumeration runs *inward from the endpoint the
//! index accumulates at*: for `w` the head lists blocks 1, 2, ... from the
//! left, for `w*` it lists blocks -1, -2, ... from the right, and for `z`
//! it lists blocks 0, 1, ... with two tails covering the far negative and
//! far positive sides.

pub mod cnf;
pub mod normal;
pub mod parse;

pub use cnf::OrdinalCnf;
pub use normal::{normalize_sum, BlockSpec, NormIndex, NormalizedSum};
pub use parse::{parse_term, render_term};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TermError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("invalid term at byte {pos}: {msg}")]
    Semantic { pos: usize, msg: String },
    #[error("term denotes a finite order: {0}")]
    FiniteOrder(String),
    #[error("term is not a sum: {0}")]
    NotASum(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum IndexKind {
    FinIdx,
    OmegaIdx,
    OmegaStarIdx,
    ZetaIdx,
}

impl IndexKind {
    pub fn token(self) -> &'static str {
        match self {
            IndexKind::FinIdx => "fin",
            IndexKind::OmegaIdx => "w",
            IndexKind::OmegaStarIdx => "w*",
            IndexKind::ZetaIdx => "z",
        }
    }

    pub fn is_infinite(self) -> bool {
        self != IndexKind::FinIdx
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum OrderTerm {
    Zero,
    One,
    /// Finite order on `k >= 2` elements (`fin(1)` normalizes to `One`).
    Fin(u64),
    Omega,
    OmegaStar,
    Zeta,
    Sum {
        index: IndexKind,
        head: Vec<OrderTerm>,
        /// Tail rule; for `ZetaIdx` this is the negative side.
        tail: Option<Box<OrderTerm>>,
        /// Positive-side tail rule, `ZetaIdx` only.
        tail2: Option<Box<OrderTerm>>,
    },
}

impl OrderTerm {
    pub fn is_zero(&self) -> bool {
        matches!(self, OrderTerm::Zero)
    }

    /// Number of elements when the term denotes a finite order. On
    /// normalized terms only the atoms `0`, `1`, `fin(k)` are finite.
    pub fn finite_size(&self) -> Option<u64> {
        match self {
            OrderTerm::Zero => Some(0),
            OrderTerm::One => Some(1),
            OrderTerm::Fin(k) => Some(*k),
            _ => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        !matches!(self, OrderTerm::Sum { .. })
    }

    /// Syntactic very-discreteness rank: 0 for the empty/singleton order,
    /// 1 for the atomic infinite orders and finite orders on >= 2 points,
    /// and one more than the largest summand rank for sums. On canonical
    /// terms this is the order's rank in the discrete hierarchy; in
    /// general it is an upper bound (no minimization over alternative
    /// presentations is attempted).
    pub fn vd_rank(&self) -> OrdinalCnf {
        match self {
            OrderTerm::Zero | OrderTerm::One => OrdinalCnf::zero(),
            OrderTerm::Fin(_) | OrderTerm::Omega | OrderTerm::OmegaStar | OrderTerm::Zeta => {
                OrdinalCnf::from_nat(1)
            }
            OrderTerm::Sum {
                head, tail, tail2, ..
            } => {
                let mut best = OrdinalCnf::zero();
                for t in head
                    .iter()
                    .chain(tail.iter().map(|b| b.as_ref()))
                    .chain(tail2.iter().map(|b| b.as_ref()))
                {
                    best = OrdinalCnf::max(&best, &t.vd_rank());
                }
                best.succ()
            }
        }
    }
}

/// Rewrite a term to canonical form. The rewrites are order-preserving:
/// zero summands are dropped, finite sums are spliced into their parent
/// sequence (associativity), adjacent finite summands merge, singleton
/// sums unwrap, and tails denoting finite orders collapse into the atom
/// the repeated run is isomorphic to (`w`, `w*`, or `z` absorbing a
/// repeated finite block).
pub fn normalize(term: OrderTerm) -> OrderTerm {
    match term {
        OrderTerm::Fin(0) => OrderTerm::Zero,
        OrderTerm::Fin(1) => OrderTerm::One,
        OrderTerm::Sum {
            index,
            head,
            tail,
            tail2,
        } => {
            let head: Vec<OrderTerm> = head
                .into_iter()
                .map(normalize)
                .filter(|t| !t.is_zero())
                .collect();
            match index {
                IndexKind::FinIdx => normalize_finite_sum(head),
                IndexKind::OmegaIdx => {
                    let tail = normalize(*tail.expect("omega sum has a tail"));
                    if tail.is_zero() {
                        return normalize_finite_sum(head);
                    }
                    if tail.finite_size().is_some() {
                        // head then fin+fin+... which is order-isomorphic to w
                        let mut entries = head;
                        entries.push(OrderTerm::Omega);
                        return normalize_finite_sum(entries);
                    }
                    let head = splice_and_merge(head);
                    OrderTerm::Sum {
                        index: IndexKind::OmegaIdx,
                        head,
                        tail: Some(Box::new(tail)),
                        tail2: None,
                    }
                }
                IndexKind::OmegaStarIdx => {
                    let tail = normalize(*tail.expect("omega* sum has a tail"));
                    if tail.is_zero() {
                        let mut entries = head;
                        entries.reverse(); // physical order
                        return normalize_finite_sum(entries);
                    }
                    if tail.finite_size().is_some() {
                        let mut entries = vec![OrderTerm::OmegaStar];
                        entries.extend(head.into_iter().rev());
                        return normalize_finite_sum(entries);
                    }
                    // Splice in physical order, then restore enumeration order.
                    let mut phys: Vec<OrderTerm> = head.into_iter().rev().collect();
                    phys = splice_and_merge(phys);
                    phys.reverse();
                    OrderTerm::Sum {
                        index: IndexKind::OmegaStarIdx,
                        head: phys,
                        tail: Some(Box::new(tail)),
                        tail2: None,
                    }
                }
                IndexKind::ZetaIdx => {
                    let neg = normalize(*tail.expect("zeta sum has a negative tail"));
                    let pos = normalize(*tail2.expect("zeta sum has a positive tail"));
                    match (neg.is_zero(), pos.is_zero()) {
                        (true, true) => normalize_finite_sum(head),
                        (true, false) => normalize(OrderTerm::Sum {
                            index: IndexKind::OmegaIdx,
                            head,
                            tail: Some(Box::new(pos)),
                            tail2: None,
                        }),
                        (false, true) => {
                            let mut h = head;
                            h.reverse();
                            normalize(OrderTerm::Sum {
                                index: IndexKind::OmegaStarIdx,
                                head: h,
                                tail: Some(Box::new(neg)),
                                tail2: None,
                            })
                        }
                        (false, false) => {
                            if neg.finite_size().is_some() {
                                // far negative side is fin repeated: isomorphic to w*
                                let mut h = vec![OrderTerm::OmegaStar];
                                h.extend(head);
                                return normalize(OrderTerm::Sum {
                                    index: IndexKind::OmegaIdx,
                                    head: h,
                                    tail: Some(Box::new(pos)),
                                    tail2: None,
                                });
                            }
                            if pos.finite_size().is_some() {
                                let mut h = head;
                                h.push(OrderTerm::Omega);
                                h.reverse();
                                return normalize(OrderTerm::Sum {
                                    index: IndexKind::OmegaStarIdx,
                                    head: h,
                                    tail: Some(Box::new(neg)),
                                    tail2: None,
                                });
                            }
                            let head = splice_and_merge(head);
                            OrderTerm::Sum {
                                index: IndexKind::ZetaIdx,
                                head,
                                tail: Some(Box::new(neg)),
                                tail2: Some(Box::new(pos)),
                            }
                        }
                    }
                }
            }
        }
        atom => atom,
    }
}

/// Splice finite-index sums into the surrounding physical sequence and
/// merge adjacent finite entries.
fn splice_and_merge(phys: Vec<OrderTerm>) -> Vec<OrderTerm> {
    let mut flat: Vec<OrderTerm> = Vec::with_capacity(phys.len());
    for entry in phys {
        match entry {
            OrderTerm::Sum {
                index: IndexKind::FinIdx,
                head,
                ..
            } => flat.extend(head),
            other => flat.push(other),
        }
    }
    let mut out: Vec<OrderTerm> = Vec::with_capacity(flat.len());
    for entry in flat {
        if let (Some(a), Some(b)) = (
            out.last().and_then(|t| t.finite_size()),
            entry.finite_size(),
        ) {
            out.pop();
            let merged = a + b;
            out.push(match merged {
                0 => continue,
                1 => OrderTerm::One,
                k => OrderTerm::Fin(k),
            });
        } else {
            out.push(entry);
        }
    }
    out
}

/// Canonicalize a finite concatenation given in physical order.
fn normalize_finite_sum(entries: Vec<OrderTerm>) -> OrderTerm {
    let mut entries = splice_and_merge(entries);
    match entries.len() {
        0 => OrderTerm::Zero,
        1 => entries.pop().unwrap(),
        _ => OrderTerm::Sum {
            index: IndexKind::FinIdx,
            head: entries,
            tail: None,
            tail2: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_w(head: Vec<OrderTerm>, tail: OrderTerm) -> OrderTerm {
        OrderTerm::Sum {
            index: IndexKind::OmegaIdx,
            head,
            tail: Some(Box::new(tail)),
            tail2: None,
        }
    }

    #[test]
    fn vd_rank_examples() {
        assert_eq!(OrderTerm::Omega.vd_rank(), OrdinalCnf::from_nat(1));
        assert_eq!(OrderTerm::One.vd_rank(), OrdinalCnf::zero());
        // w*w = w^2 has rank 2
        let w2 = sum_w(vec![], OrderTerm::Omega);
        assert_eq!(w2.vd_rank(), OrdinalCnf::from_nat(2));
        // tower of n nested w-sums has rank n
        let mut tower = OrderTerm::Omega;
        for n in 2..=6u64 {
            tower = sum_w(vec![], tower);
            assert_eq!(tower.vd_rank(), OrdinalCnf::from_nat(n));
        }
    }

    #[test]
    fn rank_of_sum_strictly_exceeds_blocks() {
        let inner = sum_w(vec![OrderTerm::Zeta], OrderTerm::Omega);
        let outer = sum_w(vec![inner.clone()], inner.clone());
        assert!(outer.vd_rank() > inner.vd_rank());
    }

    #[test]
    fn normalize_drops_zero_and_merges_fins() {
        let t = OrderTerm::Sum {
            index: IndexKind::FinIdx,
            head: vec![
                OrderTerm::Fin(2),
                OrderTerm::Zero,
                OrderTerm::Fin(3),
                OrderTerm::Omega,
            ],
            tail: None,
            tail2: None,
        };
        let n = normalize(t);
        assert_eq!(
            n,
            OrderTerm::Sum {
                index: IndexKind::FinIdx,
                head: vec![OrderTerm::Fin(5), OrderTerm::Omega],
                tail: None,
                tail2: None,
            }
        );
    }

    #[test]
    fn normalize_unwraps_singleton_and_finite_tails() {
        let t = OrderTerm::Sum {
            index: IndexKind::FinIdx,
            head: vec![OrderTerm::Omega, OrderTerm::Zero],
            tail: None,
            tail2: None,
        };
        assert_eq!(normalize(t), OrderTerm::Omega);

        // w-indexed sum of a repeated finite block is order-isomorphic to w
        let t = sum_w(vec![], OrderTerm::Fin(2));
        assert_eq!(normalize(t), OrderTerm::Omega);
    }

    #[test]
    fn normalize_idempotent_spot_checks() {
        let samples = vec![
            sum_w(vec![OrderTerm::Fin(2)], OrderTerm::Omega),
            OrderTerm::Sum {
                index: IndexKind::OmegaStarIdx,
                head: vec![OrderTerm::Fin(2), OrderTerm::Omega],
                tail: Some(Box::new(OrderTerm::Zeta)),
                tail2: None,
            },
            OrderTerm::Sum {
                index: IndexKind::ZetaIdx,
                head: vec![],
                tail: Some(Box::new(OrderTerm::Zeta)),
                tail2: Some(Box::new(OrderTerm::Zeta)),
            },
        ];
        for t in samples {
            let once = normalize(t);
            assert_eq!(normalize(once.clone()), once);
        }
    }
}
