//! Constructions of nested, acyclic, order-compatible chain families.
//!
//! Three entry points: exact orbit chains (finite targets), the three
//! elementary pair shapes, and the recursive realization of an arbitrary
//! normalized infinite term. Sums are assembled from stripped block
//! families glued at shared anchors: block `l` runs from `f^-1(z_l)` to
//! `z_(l+1)`, so consecutive blocks meet exactly and every junction hop
//! is bounded by two strict half-budget estimates. Child families run at
//! the halved schedule; the assembled stage `n` is then an `eps_n`-chain.

pub mod trace;

use std::collections::BTreeMap;
use std::sync::Arc;

use num::BigRational;
use thiserror::Error;

use crate::chains::{strip_endpoints, ChainError, EpsilonChain, NestedFamily};
use crate::classes::{AlphaStructure, ClassAllocator, ClassError, ClassSeed};
use crate::order::{
    normalize_sum, BlockSpec, NormIndex, NormalizedSum, OrderTerm, OrdinalCnf, TermError,
};
use crate::schedule::{EpsSchedule, ScheduleError};
use crate::systems::{Conjugacy, Point, System, SystemError};

pub use trace::{
    expected_positions, Address, BasicCase, BlockSpan, BlockTrace, ConstructionTrace, TraceNode,
};

/// Upper bound on the syntactic rank of accepted targets.
pub const RANK_BOUND: u64 = 16;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("term rank {rank} exceeds the configured bound {bound}")]
    RankBound { rank: OrdinalCnf, bound: u64 },
    #[error("structure rank {have} is below the required rank {need}")]
    StructureRank { have: OrdinalCnf, need: OrdinalCnf },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("internal construction error: {0}")]
    Internal(String),
}

pub struct Built {
    pub family: NestedFamily,
    pub trace: ConstructionTrace,
}

/// A family under construction, from some local start point to some local
/// end point. Addresses cover the interior support only.
struct SubFamily {
    stages: Vec<EpsilonChain>,
    addresses: BTreeMap<Point, Address>,
    node: TraceNode,
}

fn orbit_run(sys: &dyn System, base: &Point, lo: i64, hi: i64) -> Vec<Point> {
    (lo..=hi).map(|j| sys.iterate(base, j)).collect()
}

fn rank_needed(term: &OrderTerm) -> OrdinalCnf {
    OrdinalCnf::max(&OrdinalCnf::from_nat(2), &term.vd_rank())
}

fn insert_address(map: &mut BTreeMap<Point, Address>, p: Point, a: Address) {
    let prev = map.insert(p, a);
    debug_assert!(prev.is_none(), "address assigned twice");
}

// ---------------------------------------------------------------------
// Elementary pair families
// ---------------------------------------------------------------------

fn build_basic_family(
    sys: &dyn System,
    p: &Point,
    q: &Point,
    case: BasicCase,
    sched: &EpsSchedule,
    depth: usize,
    mid_source: &mut dyn FnMut() -> Result<ClassSeed, BuildError>,
) -> Result<SubFamily, BuildError> {
    if sys.same_class(p, q) {
        return Err(BuildError::Precondition(
            "endpoints share an orbit class; only orbit chains run inside one class".into(),
        ));
    }
    let mut addresses = BTreeMap::new();
    let mut stages = Vec::with_capacity(depth);

    match case {
        BasicCase::OmegaPlusK { k } => {
            let target = sys.iterate(q, -(k as i64));
            let mut h_seq: Vec<u64> = Vec::with_capacity(depth);
            let mut prev = 0u64;
            for n in 1..=depth {
                let eps = sched.eps(n);
                let h = sys.hit_time(p, &target, &eps, prev + 1)?;
                let mut pts = orbit_run(sys, p, 0, h as i64);
                pts.extend(orbit_run(sys, q, -(k as i64), 0));
                stages.push(EpsilonChain::new(pts, eps)?);
                h_seq.push(h);
                prev = h;
            }
            for j in 1..=prev {
                insert_address(
                    &mut addresses,
                    sys.iterate(p, j as i64),
                    Address(vec![0, j as i64]),
                );
            }
            for s in 1..=k {
                insert_address(
                    &mut addresses,
                    sys.iterate(q, -(s as i64)),
                    Address(vec![2, -(s as i64)]),
                );
            }
            Ok(SubFamily {
                stages,
                addresses,
                node: TraceNode::Basic {
                    case,
                    mid: None,
                    h_seq,
                    k_seq: vec![],
                },
            })
        }
        BasicCase::HPlusOmegaStar { h } => {
            let target = sys.iterate(p, h as i64 + 1);
            let mut k_seq: Vec<u64> = Vec::with_capacity(depth);
            let mut prev = 0u64;
            for n in 1..=depth {
                let eps = sched.eps(n);
                let k = sys.backward_approach(q, &target, &eps, prev + 1)?;
                let mut pts = orbit_run(sys, p, 0, h as i64);
                pts.extend(orbit_run(sys, q, -(k as i64), 0));
                stages.push(EpsilonChain::new(pts, eps)?);
                k_seq.push(k);
                prev = k;
            }
            for j in 1..=h {
                insert_address(
                    &mut addresses,
                    sys.iterate(p, j as i64),
                    Address(vec![0, j as i64]),
                );
            }
            for s in 1..=prev {
                insert_address(
                    &mut addresses,
                    sys.iterate(q, -(s as i64)),
                    Address(vec![2, -(s as i64)]),
                );
            }
            Ok(SubFamily {
                stages,
                addresses,
                node: TraceNode::Basic {
                    case,
                    mid: None,
                    h_seq: vec![],
                    k_seq,
                },
            })
        }
        BasicCase::HZetaK { h, k } => {
            let mid = mid_source()?;
            let z = mid.point.clone();
            if sys.same_class(&z, p) || sys.same_class(&z, q) {
                return Err(BuildError::Internal(
                    "middle class collides with an endpoint class".into(),
                ));
            }
            let into_target = sys.iterate(p, h as i64 + 1);
            let out_target = sys.iterate(q, -(k as i64));
            let mut k_seq: Vec<u64> = Vec::with_capacity(depth);
            let mut h_seq: Vec<u64> = Vec::with_capacity(depth);
            let (mut prev_k, mut prev_h) = (0u64, 0u64);
            for n in 1..=depth {
                let eps = sched.eps(n);
                let kn = sys.backward_approach(&z, &into_target, &eps, prev_k + 1)?;
                let hn = sys.hit_time(&z, &out_target, &eps, prev_h + 1)?;
                let mut pts = orbit_run(sys, p, 0, h as i64);
                pts.extend(orbit_run(sys, &z, -(kn as i64), hn as i64));
                pts.extend(orbit_run(sys, q, -(k as i64), 0));
                stages.push(EpsilonChain::new(pts, eps)?);
                k_seq.push(kn);
                h_seq.push(hn);
                prev_k = kn;
                prev_h = hn;
            }
            for j in 1..=h {
                insert_address(
                    &mut addresses,
                    sys.iterate(p, j as i64),
                    Address(vec![0, j as i64]),
                );
            }
            for t in -(prev_k as i64)..=(prev_h as i64) {
                insert_address(&mut addresses, sys.iterate(&z, t), Address(vec![1, t]));
            }
            for s in 1..=k {
                insert_address(
                    &mut addresses,
                    sys.iterate(q, -(s as i64)),
                    Address(vec![2, -(s as i64)]),
                );
            }
            Ok(SubFamily {
                stages,
                addresses,
                node: TraceNode::Basic {
                    case,
                    mid: Some(z),
                    h_seq,
                    k_seq,
                },
            })
        }
    }
}

fn case_for_atom(core: &OrderTerm, h: u64, k: u64) -> Result<BasicCase, BuildError> {
    match core {
        OrderTerm::Omega => {
            debug_assert_eq!(h, 0);
            Ok(BasicCase::OmegaPlusK { k })
        }
        OrderTerm::OmegaStar => {
            debug_assert_eq!(k, 0);
            Ok(BasicCase::HPlusOmegaStar { h })
        }
        OrderTerm::Zeta => Ok(BasicCase::HZetaK { h, k }),
        other => Err(BuildError::Internal(format!(
            "atomic block core expected, got {other:?}"
        ))),
    }
}

// ---------------------------------------------------------------------
// Block resources
// ---------------------------------------------------------------------

enum BlockMaterial {
    /// Rank-2 assembly: one shared leaf, striped by enumeration index.
    /// Anchors take the even seeds, middles the odd ones.
    Leaf {
        leaf: AlphaStructure,
        enum_idx: usize,
    },
    /// Deeper assembly: a dedicated child structure.
    Child(AlphaStructure),
}

impl BlockMaterial {
    fn anchor_class(&self) -> Result<ClassSeed, BuildError> {
        match self {
            BlockMaterial::Leaf { leaf, enum_idx } => Ok(leaf.seed(2 * enum_idx)?),
            BlockMaterial::Child(s) => Ok(s.first_class()?),
        }
    }

    fn mid_class(&self, p: &Point, q: &Point) -> Result<ClassSeed, BuildError> {
        match self {
            BlockMaterial::Leaf { leaf, enum_idx } => Ok(leaf.seed(2 * enum_idx + 1)?),
            BlockMaterial::Child(s) => Ok(s.minus_points(&[p.clone(), q.clone()]).first_class()?),
        }
    }

    fn child_structure(&self) -> Result<&AlphaStructure, BuildError> {
        match self {
            BlockMaterial::Child(s) => Ok(s),
            BlockMaterial::Leaf { .. } => Err(BuildError::Internal(
                "a rank-2 assembly cannot carry recursive cores".into(),
            )),
        }
    }
}

/// Canonical enumeration of positions, inward from the accumulation ends.
fn enum_index(index: NormIndex, pos: i64) -> usize {
    match index {
        NormIndex::Fin(_) | NormIndex::Omega => (pos - 1) as usize,
        NormIndex::OmegaStar => (-pos - 1) as usize,
        NormIndex::Zeta => {
            if pos >= 0 {
                (2 * pos) as usize
            } else {
                (-2 * pos - 1) as usize
            }
        }
    }
}

// ---------------------------------------------------------------------
// Sum assembly
// ---------------------------------------------------------------------

struct BuiltBlock {
    fam: SubFamily,
    h_pad: u64,
    k_pad: u64,
    anchor_from: Point,
    anchor_to: Point,
}

fn build_block_family(
    sys: &Arc<dyn System>,
    p: &Point,
    q: &Point,
    spec: &BlockSpec,
    sched: &EpsSchedule,
    depth: usize,
    material: &BlockMaterial,
) -> Result<(SubFamily, u64, u64), BuildError> {
    if spec.core.is_atom() {
        let case = case_for_atom(&spec.core, spec.h, spec.k)?;
        let fam = build_basic_family(sys.as_ref(), p, q, case, sched, depth, &mut || {
            material.mid_class(p, q)
        })?;
        return Ok((fam, 0, 0));
    }

    // explicit padding around a recursive core
    let (h, k) = (spec.h, spec.k);
    let p_core = sys.iterate(p, h as i64);
    let q_core = sys.iterate(q, -(k as i64));
    let core = build_term_family(
        sys,
        &p_core,
        &q_core,
        &spec.core,
        sched,
        depth,
        material.child_structure()?,
    )?;

    let pad_pref = if h > 0 {
        orbit_run(sys.as_ref(), p, 0, h as i64 - 1)
    } else {
        vec![]
    };
    let pad_suff = if k > 0 {
        orbit_run(sys.as_ref(), q, -(k as i64) + 1, 0)
    } else {
        vec![]
    };

    let mut stages = Vec::with_capacity(depth);
    for stage in &core.stages {
        let mut pts = pad_pref.clone();
        pts.extend(stage.points.iter().cloned());
        pts.extend(pad_suff.iter().cloned());
        stages.push(EpsilonChain::new(pts, stage.eps.clone())?);
    }

    let mut addresses = BTreeMap::new();
    for j in 1..=h {
        insert_address(
            &mut addresses,
            sys.iterate(p, j as i64),
            Address(vec![0, j as i64]),
        );
    }
    for s in 1..=k {
        insert_address(
            &mut addresses,
            sys.iterate(q, -(s as i64)),
            Address(vec![2, -(s as i64)]),
        );
    }
    for (pt, addr) in core.addresses {
        insert_address(&mut addresses, pt, addr.prefixed(1));
    }

    Ok((
        SubFamily {
            stages,
            addresses,
            node: core.node,
        },
        h,
        k,
    ))
}

fn sum_assembly(
    sys: &Arc<dyn System>,
    p: &Point,
    q: &Point,
    norm: &NormalizedSum,
    sched: &EpsSchedule,
    depth: usize,
    work: &AlphaStructure,
) -> Result<SubFamily, BuildError> {
    let index = norm.index;
    let child_sched = sched.halved();
    let block_positions = expected_positions(index, depth);

    // positions needing class material: every block, plus anchor-only
    // positions one beyond the accumulating side
    let mut mat_positions: Vec<i64> = block_positions.clone();
    match index {
        NormIndex::Omega => mat_positions.push(depth as i64 + 1),
        NormIndex::Zeta => mat_positions.push(depth as i64 / 2),
        NormIndex::Fin(_) | NormIndex::OmegaStar => {}
    }
    mat_positions.sort_by_key(|&l| enum_index(index, l));

    let block_set: std::collections::BTreeSet<i64> = block_positions.iter().copied().collect();
    let mut materials: BTreeMap<i64, BlockMaterial> = BTreeMap::new();
    let mut cursor = 0usize;
    for &pos in &mat_positions {
        let material = if work.is_leaf() {
            BlockMaterial::Leaf {
                leaf: work.clone(),
                enum_idx: enum_index(index, pos),
            }
        } else {
            let need = if block_set.contains(&pos) {
                rank_needed(&norm.block_at(pos).core)
            } else {
                OrdinalCnf::from_nat(2)
            };
            loop {
                let r = work.child_rank(cursor)?;
                if r >= need {
                    let child = work.child(cursor)?;
                    cursor += 1;
                    break BlockMaterial::Child(child);
                }
                cursor += 1;
            }
        };
        materials.insert(pos, material);
    }

    // anchors: z_pos for every block's start (pos) and end (pos + 1)
    let fp = sys.step(p);
    let mut anchors: BTreeMap<i64, Point> = BTreeMap::new();
    let near =
        |seed: &ClassSeed, target: &Point, bound: BigRational| -> Result<Point, BuildError> {
            let two = BigRational::from_integer(2.into());
            let j = sys.forward_approach(&seed.point, target, &(bound / two), 0)?;
            Ok(sys.iterate(&seed.point, j as i64))
        };
    match index {
        NormIndex::Fin(kcount) => {
            anchors.insert(1, fp.clone());
            anchors.insert(kcount as i64 + 1, q.clone());
            for pos in 2..=kcount as i64 {
                anchors.insert(pos, materials[&pos].anchor_class()?.point);
            }
        }
        NormIndex::Omega => {
            anchors.insert(1, fp.clone());
            for pos in 2..=depth as i64 + 1 {
                let seed = materials[&pos].anchor_class()?;
                anchors.insert(pos, near(&seed, q, sched.eps(pos as usize - 1))?);
            }
        }
        NormIndex::OmegaStar => {
            anchors.insert(0, q.clone());
            for pos in (-(depth as i64)..=-1).rev() {
                let seed = materials[&pos].anchor_class()?;
                anchors.insert(pos, near(&seed, &fp, sched.eps((-pos) as usize))?);
            }
        }
        NormIndex::Zeta => {
            let left = (depth as i64 + 1) / 2;
            let right = depth as i64 / 2;
            for pos in -left..=right {
                let seed = materials[&pos].anchor_class()?;
                let z = if pos < 0 {
                    let n = std::cmp::min(2 * (-pos) as usize, depth);
                    near(&seed, &fp, sched.eps(n))?
                } else {
                    let n = std::cmp::min(2 * pos as usize + 1, depth);
                    near(&seed, q, sched.eps(n))?
                };
                anchors.insert(pos, z);
            }
        }
    }

    // build every block in enumeration order
    let mut build_order = block_positions.clone();
    build_order.sort_by_key(|&l| enum_index(index, l));
    let mut blocks: BTreeMap<i64, BuiltBlock> = BTreeMap::new();
    for &pos in &build_order {
        let spec = norm.block_at(pos).clone();
        let z_from = anchors[&pos].clone();
        let z_to = anchors[&(pos + 1)].clone();
        let p_block = sys.inv_step(&z_from);
        let (fam, h_pad, k_pad) = build_block_family(
            sys,
            &p_block,
            &z_to,
            &spec,
            &child_sched,
            depth,
            &materials[&pos],
        )?;
        blocks.insert(
            pos,
            BuiltBlock {
                fam,
                h_pad,
                k_pad,
                anchor_from: z_from,
                anchor_to: z_to,
            },
        );
    }

    // assemble stages with spans
    let mut stages = Vec::with_capacity(depth);
    let mut stage_blocks = Vec::with_capacity(depth);
    for n in 1..=depth {
        let mut points = vec![p.clone()];
        let mut spans = Vec::new();
        for pos in expected_positions(index, n) {
            let block = &blocks[&pos];
            let s = strip_endpoints(&block.fam.stages[n - 1])?;
            spans.push(BlockSpan {
                pos,
                start: points.len(),
                len: s.len(),
            });
            points.extend(s.points);
        }
        points.push(q.clone());
        stages.push(EpsilonChain::new(points, sched.eps(n))?);
        stage_blocks.push(spans);
    }

    // merge addresses and record block traces
    let mut addresses = BTreeMap::new();
    let mut block_traces = Vec::new();
    for (&pos, block) in &blocks {
        for (pt, addr) in &block.fam.addresses {
            insert_address(&mut addresses, pt.clone(), addr.prefixed(pos));
        }
        let last = strip_endpoints(&block.fam.stages[depth - 1])?;
        let mut from_run = 0u64;
        let mut to_run = 0u64;
        for pt in &last.points {
            if sys.same_class(pt, &block.anchor_from) {
                from_run += 1;
            }
            if sys.same_class(pt, &block.anchor_to) {
                to_run += 1;
            }
        }
        block_traces.push(BlockTrace {
            pos,
            anchor_from: block.anchor_from.clone(),
            anchor_to: block.anchor_to.clone(),
            h_pad: block.h_pad,
            k_pad: block.k_pad,
            from_class_run: from_run,
            to_class_run: to_run,
            child: Box::new(block.fam.node.clone()),
        });
    }

    Ok(SubFamily {
        stages,
        addresses,
        node: TraceNode::Sum {
            index,
            blocks: block_traces,
            stage_blocks,
        },
    })
}

// ---------------------------------------------------------------------
// Recursive dispatch
// ---------------------------------------------------------------------

fn build_term_family(
    sys: &Arc<dyn System>,
    p: &Point,
    q: &Point,
    term: &OrderTerm,
    sched: &EpsSchedule,
    depth: usize,
    structure: &AlphaStructure,
) -> Result<SubFamily, BuildError> {
    if sys.same_class(p, q) {
        return Err(BuildError::Precondition(
            "infinite targets need orbit-disjoint endpoints".into(),
        ));
    }
    let structure = structure.minus_points(&[p.clone(), q.clone()]);
    match term {
        OrderTerm::Omega | OrderTerm::OmegaStar | OrderTerm::Zeta => {
            let case = case_for_atom(term, 0, 0)?;
            build_basic_family(sys.as_ref(), p, q, case, sched, depth, &mut || {
                Ok(structure.first_class()?)
            })
        }
        OrderTerm::Sum { .. } => {
            let norm = normalize_sum(term)?;
            if let NormIndex::Fin(1) = norm.index {
                let spec = norm.block_at(1);
                if spec.core.is_atom() {
                    let case = case_for_atom(&spec.core, spec.h, spec.k)?;
                    return build_basic_family(sys.as_ref(), p, q, case, sched, depth, &mut || {
                        Ok(structure.first_class()?)
                    });
                }
            }
            let need = rank_needed(term);
            if *structure.rank() < need {
                return Err(BuildError::StructureRank {
                    have: structure.rank().clone(),
                    need,
                });
            }
            let work = structure.descend_to_rank(&need)?;
            sum_assembly(sys, p, q, &norm, sched, depth, &work)
        }
        finite => Err(BuildError::Precondition(format!(
            "finite order {finite:?} is realized by an orbit chain, not a nested construction"
        ))),
    }
}

// ---------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------

/// Exact orbit chain from `x` to `f^m(x)`: every stage is the same chain,
/// every hop distance is zero, and the interior realizes the finite
/// ordinal `m - 1`.
pub fn build_orbit_chain(
    sys: &Arc<dyn System>,
    x: &Point,
    m: u64,
    sched: &EpsSchedule,
    depth: usize,
) -> Result<Built, BuildError> {
    if m < 1 {
        return Err(BuildError::Precondition("orbit chains need m >= 1".into()));
    }
    if depth == 0 {
        return Err(BuildError::ZeroDepth);
    }
    sched.check_depth(depth)?;
    let points = orbit_run(sys.as_ref(), x, 0, m as i64);
    let y = points.last().expect("nonempty run").clone();
    let stages = (1..=depth)
        .map(|n| EpsilonChain::new(points.clone(), sched.eps(n)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut addresses = BTreeMap::new();
    for j in 1..m {
        insert_address(
            &mut addresses,
            sys.iterate(x, j as i64),
            Address(vec![0, j as i64]),
        );
    }
    Ok(Built {
        family: NestedFamily {
            x: x.clone(),
            y,
            stages,
        },
        trace: ConstructionTrace {
            addresses,
            root: TraceNode::Orbit { m },
        },
    })
}

/// One of the three elementary pair families between orbit-disjoint
/// endpoints; the middle class for the two-sided case comes from the
/// allocator, avoiding the endpoint classes.
pub fn build_basic(
    sys: &Arc<dyn System>,
    x: &Point,
    y: &Point,
    case: BasicCase,
    sched: &EpsSchedule,
    depth: usize,
    allocator: &ClassAllocator,
) -> Result<Built, BuildError> {
    if depth == 0 {
        return Err(BuildError::ZeroDepth);
    }
    sched.check_depth(depth)?;
    let fam = build_basic_family(sys.as_ref(), x, y, case, sched, depth, &mut || {
        Ok(allocator.fresh_class_avoiding_points(&[x.clone(), y.clone()]))
    })?;
    Ok(Built {
        family: NestedFamily {
            x: x.clone(),
            y: y.clone(),
            stages: fam.stages,
        },
        trace: ConstructionTrace {
            addresses: fam.addresses,
            root: fam.node,
        },
    })
}

/// Realize a normalized infinite scattered term between orbit-disjoint
/// endpoints, drawing classes from the given structure.
pub fn build_scattered(
    sys: &Arc<dyn System>,
    x: &Point,
    y: &Point,
    term: &OrderTerm,
    sched: &EpsSchedule,
    depth: usize,
    structure: &AlphaStructure,
) -> Result<Built, BuildError> {
    if depth == 0 {
        return Err(BuildError::ZeroDepth);
    }
    sched.check_depth(depth)?;
    if term.finite_size().is_some() {
        return Err(BuildError::Precondition(
            "finite targets are realized by orbit chains".into(),
        ));
    }
    let rank = term.vd_rank();
    match rank.nat_value() {
        Some(n) if n <= RANK_BOUND => {}
        _ => {
            return Err(BuildError::RankBound {
                rank,
                bound: RANK_BOUND,
            })
        }
    }
    let need = rank_needed(term);
    if *structure.rank() < need {
        return Err(BuildError::StructureRank {
            have: structure.rank().clone(),
            need,
        });
    }
    let fam = build_term_family(sys, x, y, term, sched, depth, structure)?;
    Ok(Built {
        family: NestedFamily {
            x: x.clone(),
            y: y.clone(),
            stages: fam.stages,
        },
        trace: ConstructionTrace {
            addresses: fam.addresses,
            root: fam.node,
        },
    })
}

/// Route a target term: finite orders check `y = f^(k+1)(x)` and build
/// the orbit chain; infinite orders check orbit-disjointness and run the
/// recursive construction over a fresh structure of sufficient rank.
pub fn realize(
    sys: &Arc<dyn System>,
    x: &Point,
    y: &Point,
    term: &OrderTerm,
    sched: &EpsSchedule,
    depth: usize,
    allocator: &ClassAllocator,
) -> Result<Built, BuildError> {
    if let Some(size) = term.finite_size() {
        let m = size + 1;
        if *y != sys.iterate(x, m as i64) {
            return Err(BuildError::Precondition(format!(
                "a finite target of size {size} requires y = f^{m}(x) exactly"
            )));
        }
        return build_orbit_chain(sys, x, m, sched, depth);
    }
    if sys.same_class(x, y) {
        return Err(BuildError::Precondition(
            "infinite targets need orbit-disjoint endpoints".into(),
        ));
    }
    let structure = allocator.build_alpha(rank_needed(term))?;
    build_scattered(sys, x, y, term, sched, depth, &structure)
}

/// Push a family through a conjugacy. Implemented conjugacies are
/// isometries, so the image verifies against the identical schedule, and
/// addresses are carried over verbatim.
pub fn transport_family(
    sys: &dyn System,
    built: &Built,
    conj: &Conjugacy,
) -> Result<Built, BuildError> {
    conj.validate(sys)?;
    let stages = built
        .family
        .stages
        .iter()
        .map(|s| {
            EpsilonChain::new(
                s.points.iter().map(|p| conj.apply(p)).collect(),
                s.eps.clone(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Built {
        family: NestedFamily {
            x: conj.apply(&built.family.x),
            y: conj.apply(&built.family.y),
            stages,
        },
        trace: built.trace.transported(conj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::resolve;

    fn odo() -> Arc<dyn System> {
        resolve("odometer").unwrap()
    }

    fn pt(sys: &Arc<dyn System>, s: &str) -> Point {
        sys.parse_point(s).unwrap()
    }

    #[test]
    fn orbit_chain_examples() {
        let sys = odo();
        let x = pt(&sys, "0");
        let b = build_orbit_chain(&sys, &x, 1, &EpsSchedule::dyadic(), 3).unwrap();
        assert_eq!(b.family.y, pt(&sys, "1"));
        assert!(b.trace.addresses.is_empty());

        let b = build_orbit_chain(&sys, &x, 5, &EpsSchedule::dyadic(), 3).unwrap();
        assert_eq!(b.family.y, pt(&sys, "5"));
        assert_eq!(b.trace.addresses.len(), 4);
        assert_eq!(b.family.stages[0].points.len(), 6);

        assert!(build_orbit_chain(&sys, &x, 0, &EpsSchedule::dyadic(), 3).is_err());
    }

    #[test]
    fn basic_omega_hit_sequence_frozen() {
        // x = 0, y = 1/3, dyadic schedule: the minimal strictly increasing
        // hit sequence starts 2, 10, 26 (brute-force verified).
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let b = build_basic(
            &sys,
            &x,
            &y,
            BasicCase::OmegaPlusK { k: 0 },
            &EpsSchedule::dyadic(),
            3,
            &alloc,
        )
        .unwrap();
        match &b.trace.root {
            TraceNode::Basic { h_seq, .. } => assert_eq!(h_seq, &vec![2, 10, 26]),
            other => panic!("unexpected node {other:?}"),
        }
        // stage n is x, f(x), ..., f^(h_n)(x), y
        assert_eq!(b.family.stages[0].points.len(), 2 + 2);
        assert_eq!(b.family.stages[1].points.len(), 10 + 2);
        assert_eq!(b.family.stages[2].points.last().unwrap(), &y);
    }

    #[test]
    fn basic_omega_star_shape() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let b = build_basic(
            &sys,
            &x,
            &y,
            BasicCase::HPlusOmegaStar { h: 0 },
            &EpsSchedule::dyadic(),
            2,
            &alloc,
        )
        .unwrap();
        let (k1, k2) = match &b.trace.root {
            TraceNode::Basic { k_seq, .. } => (k_seq[0], k_seq[1]),
            _ => panic!(),
        };
        assert!(k1 < k2);
        // stage n is x, f^(-k_n)(y), ..., y
        let s1 = &b.family.stages[0].points;
        assert_eq!(s1[0], x);
        assert_eq!(s1[1], sys.iterate(&y, -(k1 as i64)));
        assert_eq!(*s1.last().unwrap(), y);
    }

    #[test]
    fn basic_zeta_interior_classes() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let b = build_basic(
            &sys,
            &x,
            &y,
            BasicCase::HZetaK { h: 1, k: 1 },
            &EpsSchedule::dyadic(),
            2,
            &alloc,
        )
        .unwrap();
        let mid = match &b.trace.root {
            TraceNode::Basic { mid: Some(m), .. } => m.clone(),
            _ => panic!("two-sided case records its middle point"),
        };
        assert!(!sys.same_class(&mid, &x) && !sys.same_class(&mid, &y));
        // interior classes: f(x), the mid orbit, f^-1(y)
        for p in &b.family.stages[1].points[1..b.family.stages[1].points.len() - 1] {
            assert!(sys.same_class(p, &x) || sys.same_class(p, &mid) || sys.same_class(p, &y));
        }
        assert!(b.family.stages[1].points.contains(&sys.step(&x)));
        assert!(b.family.stages[1].points.contains(&sys.inv_step(&y)));
    }

    #[test]
    fn same_class_endpoints_rejected() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "7");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let err = build_basic(
            &sys,
            &x,
            &y,
            BasicCase::OmegaPlusK { k: 0 },
            &EpsSchedule::dyadic(),
            2,
            &alloc,
        );
        assert!(matches!(err, Err(BuildError::Precondition(_))));
    }

    #[test]
    fn scattered_omega_star_of_zeta_block_growth() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = crate::order::parse_term("sum(w*; ; z)").unwrap();
        let b = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 2, &alloc).unwrap();
        match &b.trace.root {
            TraceNode::Sum {
                index,
                stage_blocks,
                ..
            } => {
                assert_eq!(*index, NormIndex::OmegaStar);
                assert_eq!(stage_blocks[0].len(), 1);
                assert_eq!(stage_blocks[0][0].pos, -1);
                let stage2: Vec<i64> = stage_blocks[1].iter().map(|s| s.pos).collect();
                assert_eq!(stage2, vec![-2, -1]);
            }
            other => panic!("expected a sum trace, got {other:?}"),
        }
        // the y-class points of stage 2 form a terminal run
        let pts = &b.family.stages[1].points;
        let in_y: Vec<usize> = pts
            .iter()
            .enumerate()
            .filter(|(_, p)| sys.same_class(p, &y))
            .map(|(i, _)| i)
            .collect();
        let m = pts.len() - 1;
        for (offset, idx) in in_y.iter().rev().enumerate() {
            assert_eq!(*idx, m - offset, "y-class points form a suffix");
        }
    }

    #[test]
    fn scattered_routes_padded_atoms_to_basic() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = crate::order::parse_term("sum(fin; w, fin(3))").unwrap();
        let b = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 2, &alloc).unwrap();
        match &b.trace.root {
            TraceNode::Basic {
                case: BasicCase::OmegaPlusK { k: 3 },
                ..
            } => {}
            other => panic!("expected the padded-atom route, got {other:?}"),
        }
    }

    #[test]
    fn finite_target_routing() {
        let sys = odo();
        let x = pt(&sys, "0");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = crate::order::parse_term("fin(4)").unwrap();
        // y = f^5(x) works
        let y = pt(&sys, "5");
        let b = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 2, &alloc).unwrap();
        assert_eq!(b.trace.addresses.len(), 4);
        // y off the forward orbit fails the precondition
        let bad = pt(&sys, "1/3");
        assert!(matches!(
            realize(&sys, &x, &bad, &term, &EpsSchedule::dyadic(), 2, &alloc),
            Err(BuildError::Precondition(_))
        ));
    }

    #[test]
    fn rank_guards() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);

        // a tower exceeding the configured bound is rejected
        let mut tower = String::from("w");
        for _ in 0..RANK_BOUND {
            tower = format!("sum(w; ; {tower})");
        }
        let term = crate::order::parse_term(&tower).unwrap();
        let structure = alloc.build_alpha(OrdinalCnf::omega()).unwrap();
        assert!(matches!(
            build_scattered(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 2, &structure),
            Err(BuildError::RankBound { .. })
        ));

        // a structure of insufficient rank is rejected
        let term = crate::order::parse_term("sum(w; ; sum(w; ; w))").unwrap();
        let small = alloc.build_alpha(OrdinalCnf::from_nat(2)).unwrap();
        assert!(matches!(
            build_scattered(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 2, &small),
            Err(BuildError::StructureRank { .. })
        ));
    }

    #[test]
    fn transport_preserves_addresses() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let b = build_basic(
            &sys,
            &x,
            &y,
            BasicCase::OmegaPlusK { k: 2 },
            &EpsSchedule::dyadic(),
            3,
            &alloc,
        )
        .unwrap();
        let c = Conjugacy::OdometerTranslate(crate::systems::rat_from_str("1/5").unwrap());
        let t = transport_family(sys.as_ref(), &b, &c).unwrap();
        assert_eq!(t.family.x, pt(&sys, "1/5"));
        assert_eq!(t.family.y, pt(&sys, "8/15"));
        let mut before: Vec<_> = b.trace.addresses.values().cloned().collect();
        let mut after: Vec<_> = t.trace.addresses.values().cloned().collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);

        let id = Conjugacy::OdometerTranslate(crate::systems::rat_from_str("0").unwrap());
        let same = transport_family(sys.as_ref(), &b, &id).unwrap();
        assert_eq!(same.family.stages[0].points, b.family.stages[0].points);
    }
}
