//! Independent checks of every property a chain family claims.
//!
//! The verifier works from raw points, the trace, and the target term
//! only: distances, supports, appearance orders, and class runs are all
//! recomputed here. Nothing is trusted from the constructor beyond the
//! address map and the anchor bookkeeping it is asked to validate.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::chains::{limit_order, NestedFamily};
use crate::constructor::{expected_positions, Address, BasicCase, ConstructionTrace, TraceNode};
use crate::order::{normalize_sum, NormIndex, OrderTerm};
use crate::systems::{Point, System};

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    pub detail: Option<String>,
}

impl CheckReport {
    fn ok(name: &'static str) -> Self {
        CheckReport {
            name,
            pass: true,
            detail: None,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        CheckReport {
            name,
            pass: false,
            detail: Some(detail),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<CheckReport>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Line-oriented `name=pass|fail` text, with first counterexamples.
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{}={}{}",
                c.name,
                if c.pass { "pass" } else { "fail" },
                c.detail
                    .as_deref()
                    .map(|d| format!(" # {d}"))
                    .unwrap_or_default()
            );
        }
        out
    }
}

/// Per-stage, per-hop strict inequality, plus positivity and strict
/// decrease of the schedule itself.
pub fn check_eps(sys: &dyn System, fam: &NestedFamily) -> CheckReport {
    const NAME: &str = "eps_chains";
    if fam.stages.is_empty() {
        return CheckReport::fail(NAME, "family has no stages".into());
    }
    let mut prev_eps = None;
    for (n, stage) in fam.stages.iter().enumerate() {
        if let Some(prev) = &prev_eps {
            if stage.eps >= *prev {
                return CheckReport::fail(
                    NAME,
                    format!("eps does not strictly decrease at stage {}", n + 1),
                );
            }
        }
        prev_eps = Some(stage.eps.clone());
        for i in 0..stage.points.len() - 1 {
            let image = sys.step(&stage.points[i]);
            match sys.cmp_dist(&image, &stage.points[i + 1], &stage.eps) {
                Ok(Ordering::Less) => {}
                Ok(ord) => {
                    let bounds = sys
                        .dist_bounds(&image, &stage.points[i + 1])
                        .map(|(lo, hi)| format!("[{lo}, {hi}]"))
                        .unwrap_or_else(|_| "?".into());
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "stage {} hop {}: d(f(x_i), x_i+1) {} eps={} (dist in {})",
                            n + 1,
                            i,
                            if ord == Ordering::Equal { "=" } else { ">" },
                            stage.eps,
                            bounds
                        ),
                    );
                }
                Err(e) => {
                    return CheckReport::fail(NAME, format!("stage {} hop {}: {e}", n + 1, i))
                }
            }
        }
    }
    CheckReport::ok(NAME)
}

/// Supports must grow with the stage index.
pub fn check_nested(fam: &NestedFamily) -> CheckReport {
    const NAME: &str = "nested_supports";
    for n in 0..fam.stages.len().saturating_sub(1) {
        let next: HashSet<&Point> = fam.stages[n + 1].points.iter().collect();
        for p in &fam.stages[n].points {
            if !next.contains(p) {
                return CheckReport::fail(
                    NAME,
                    format!("stage {} point {} missing from stage {}", n + 1, p, n + 2),
                );
            }
        }
    }
    CheckReport::ok(NAME)
}

/// No repeated interior points, no interior occurrence of an endpoint,
/// and every stage actually runs from `x` to `y`.
pub fn check_acyclic(fam: &NestedFamily) -> CheckReport {
    const NAME: &str = "acyclicity";
    for (n, stage) in fam.stages.iter().enumerate() {
        if stage.points.len() < 2 {
            return CheckReport::fail(NAME, format!("stage {} has fewer than 2 points", n + 1));
        }
        if stage.points[0] != fam.x || *stage.points.last().unwrap() != fam.y {
            return CheckReport::fail(NAME, format!("stage {} does not run from x to y", n + 1));
        }
        let interior = &stage.points[1..stage.points.len() - 1];
        let mut seen: HashSet<&Point> = HashSet::with_capacity(interior.len());
        for p in interior {
            if *p == fam.x || *p == fam.y {
                return CheckReport::fail(
                    NAME,
                    format!("stage {}: endpoint {} repeats in the interior", n + 1, p),
                );
            }
            if !seen.insert(p) {
                return CheckReport::fail(
                    NAME,
                    format!("stage {}: interior point {} repeats", n + 1, p),
                );
            }
        }
    }
    CheckReport::ok(NAME)
}

/// Appearance order of interior points never changes from one stage to
/// the next.
pub fn check_order_compatible(fam: &NestedFamily) -> CheckReport {
    const NAME: &str = "order_compatibility";
    for n in 0..fam.stages.len().saturating_sub(1) {
        let mut here: HashMap<&Point, usize> = HashMap::new();
        for (i, p) in fam.stages[n].points.iter().enumerate() {
            here.entry(p).or_insert(i);
        }
        let mut there: HashMap<&Point, usize> = HashMap::new();
        for (i, p) in fam.stages[n + 1].points.iter().enumerate() {
            there.entry(p).or_insert(i);
        }
        let mut elems: Vec<&Point> = here
            .keys()
            .copied()
            .filter(|p| **p != fam.x && **p != fam.y)
            .collect();
        elems.sort_by_key(|p| here[p]);
        let mut prev: Option<(usize, &Point)> = None;
        for p in elems {
            let Some(&j) = there.get(p) else {
                return CheckReport::fail(
                    NAME,
                    format!("stage {} point {} absent from stage {}", n + 1, p, n + 2),
                );
            };
            if let Some((pj, pp)) = prev {
                if j <= pj {
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "pair ({pp}, {p}) swaps order between stages {} and {}",
                            n + 1,
                            n + 2
                        ),
                    );
                }
            }
            prev = Some((j, p));
        }
    }
    CheckReport::ok(NAME)
}

/// Points in the class of `x` form the initial orbit run `x, f(x), ...`;
/// points in the class of `y` form the terminal run `..., f^-1(y), y`.
pub fn check_class_conditions(sys: &dyn System, fam: &NestedFamily) -> CheckReport {
    const NAME: &str = "class_conditions";
    for (n, stage) in fam.stages.iter().enumerate() {
        let pts = &stage.points;
        let m = pts.len() - 1;
        let x_positions: Vec<usize> = (0..=m)
            .filter(|&i| sys.same_class(&pts[i], &fam.x))
            .collect();
        for (run, &i) in x_positions.iter().enumerate() {
            if i != run {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "stage {}: x-class points are not an initial segment (gap before index {i})",
                        n + 1
                    ),
                );
            }
            if pts[i] != sys.iterate(&fam.x, i as i64) {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "stage {}: x-class point at index {i} is {} instead of f^{i}(x)",
                        n + 1,
                        pts[i]
                    ),
                );
            }
        }
        let y_positions: Vec<usize> = (0..=m)
            .filter(|&i| sys.same_class(&pts[i], &fam.y))
            .collect();
        for (run, &i) in y_positions.iter().rev().enumerate() {
            if i != m - run {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "stage {}: y-class points are not a terminal segment (gap after index {i})",
                        n + 1
                    ),
                );
            }
            let s = (m - i) as i64;
            if pts[i] != sys.iterate(&fam.y, -s) {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "stage {}: y-class point at index {i} is {} instead of f^-{s}(y)",
                        n + 1,
                        pts[i]
                    ),
                );
            }
        }
    }
    CheckReport::ok(NAME)
}

/// Which root the trace of a target term must carry.
enum ExpectedRoot {
    Orbit { m: u64 },
    Basic(BasicCase),
    Sum(NormIndex),
}

fn expected_root(term: &OrderTerm) -> Result<ExpectedRoot, String> {
    if let Some(size) = term.finite_size() {
        return Ok(ExpectedRoot::Orbit { m: size + 1 });
    }
    let basic_atom = |core: &OrderTerm, h: u64, k: u64| -> Option<BasicCase> {
        match core {
            OrderTerm::Omega => Some(BasicCase::OmegaPlusK { k }),
            OrderTerm::OmegaStar => Some(BasicCase::HPlusOmegaStar { h }),
            OrderTerm::Zeta => Some(BasicCase::HZetaK { h, k }),
            _ => None,
        }
    };
    if term.is_atom() {
        return basic_atom(term, 0, 0)
            .map(ExpectedRoot::Basic)
            .ok_or_else(|| format!("unexpected atomic target {term:?}"));
    }
    let norm = normalize_sum(term).map_err(|e| e.to_string())?;
    if let NormIndex::Fin(1) = norm.index {
        let spec = norm.block_at(1);
        if let Some(case) = basic_atom(&spec.core, spec.h, spec.k) {
            return Ok(ExpectedRoot::Basic(case));
        }
    }
    Ok(ExpectedRoot::Sum(norm.index))
}

fn strictly_increasing(seq: &[u64]) -> bool {
    seq.windows(2).all(|w| w[0] < w[1])
}

/// Rebuild the exact stage chain an elementary family must show. The
/// claimed length is checked against the actual stage first, so hostile
/// hit sequences cannot force huge allocations.
#[allow(clippy::too_many_arguments)]
fn basic_stage_points(
    sys: &dyn System,
    x: &Point,
    y: &Point,
    case: &BasicCase,
    mid: Option<&Point>,
    h_seq: &[u64],
    k_seq: &[u64],
    n: usize,
    actual_len: usize,
) -> Result<Vec<Point>, String> {
    let run = |base: &Point, lo: i64, hi: i64| -> Vec<Point> {
        (lo..=hi).map(|j| sys.iterate(base, j)).collect()
    };
    let claimed: u128;
    match case {
        BasicCase::OmegaPlusK { k } => {
            let h = *h_seq.get(n).ok_or("missing hit sequence entry")?;
            claimed = (h as u128 + 1) + (*k as u128 + 1);
            if claimed != actual_len as u128 {
                return Err(format!(
                    "stage length {actual_len} differs from claim {claimed}"
                ));
            }
            let mut pts = run(x, 0, h as i64);
            pts.extend(run(y, -(*k as i64), 0));
            Ok(pts)
        }
        BasicCase::HPlusOmegaStar { h } => {
            let k = *k_seq.get(n).ok_or("missing hit sequence entry")?;
            claimed = (*h as u128 + 1) + (k as u128 + 1);
            if claimed != actual_len as u128 {
                return Err(format!(
                    "stage length {actual_len} differs from claim {claimed}"
                ));
            }
            let mut pts = run(x, 0, *h as i64);
            pts.extend(run(y, -(k as i64), 0));
            Ok(pts)
        }
        BasicCase::HZetaK { h, k } => {
            let z = mid.ok_or("two-sided case without a middle point")?;
            let kn = *k_seq.get(n).ok_or("missing hit sequence entry")?;
            let hn = *h_seq.get(n).ok_or("missing hit sequence entry")?;
            claimed = (*h as u128 + 1) + (kn as u128 + hn as u128 + 1) + (*k as u128 + 1);
            if claimed != actual_len as u128 {
                return Err(format!(
                    "stage length {actual_len} differs from claim {claimed}"
                ));
            }
            let mut pts = run(x, 0, *h as i64);
            pts.extend(run(z, -(kn as i64), hn as i64));
            pts.extend(run(y, -(*k as i64), 0));
            Ok(pts)
        }
    }
}

/// The limit order must be linear, the trace addresses must be an order
/// isomorphism onto their image, and the per-stage composition must obey
/// the target's block-growth law.
pub fn check_realization(
    sys: &dyn System,
    fam: &NestedFamily,
    trace: &ConstructionTrace,
    term: &OrderTerm,
) -> CheckReport {
    const NAME: &str = "realization";
    let lo = limit_order(fam);
    if !lo.linear {
        let det = lo
            .conflicts
            .first()
            .map(|(a, b)| format!("limit order is not linear: ({a}, {b}) flip"))
            .unwrap_or_else(|| "limit order is not linear".into());
        return CheckReport::fail(NAME, det);
    }

    // addresses: total on the support, injective, order-isomorphic
    for p in &lo.elements {
        if !trace.addresses.contains_key(p) {
            return CheckReport::fail(NAME, format!("missing trace address for {p}"));
        }
    }
    let mut by_addr: Vec<(&Address, &Point)> = lo
        .elements
        .iter()
        .map(|p| (&trace.addresses[p], p))
        .collect();
    by_addr.sort();
    for w in by_addr.windows(2) {
        if w[0].0 == w[1].0 {
            return CheckReport::fail(
                NAME,
                format!("duplicate address for {} and {}", w[0].1, w[1].1),
            );
        }
    }
    for (i, (_, p)) in by_addr.iter().enumerate() {
        if *p != &lo.elements[i] {
            return CheckReport::fail(
                NAME,
                format!("address order disagrees with the limit order at position {i} ({p})"),
            );
        }
    }

    // census: the trace root must match the target's route and stage law
    let expected = match expected_root(term) {
        Ok(e) => e,
        Err(msg) => return CheckReport::fail(NAME, msg),
    };
    match (&expected, &trace.root) {
        (ExpectedRoot::Orbit { m }, TraceNode::Orbit { m: tm }) => {
            if m != tm {
                return CheckReport::fail(
                    NAME,
                    format!("orbit length {tm} differs from target {m}"),
                );
            }
            for (n, stage) in fam.stages.iter().enumerate() {
                if stage.points.len() as u128 != *m as u128 + 1 {
                    return CheckReport::fail(
                        NAME,
                        format!("stage {} is not the exact orbit chain", n + 1),
                    );
                }
            }
            let want: Vec<Point> = (0..=*m as i64).map(|j| sys.iterate(&fam.x, j)).collect();
            for (n, stage) in fam.stages.iter().enumerate() {
                if stage.points != want {
                    return CheckReport::fail(
                        NAME,
                        format!("stage {} is not the exact orbit chain", n + 1),
                    );
                }
            }
        }
        (
            ExpectedRoot::Basic(case),
            TraceNode::Basic {
                case: tc,
                mid,
                h_seq,
                k_seq,
            },
        ) => {
            if case != tc {
                return CheckReport::fail(
                    NAME,
                    format!("trace case {tc:?} differs from target case {case:?}"),
                );
            }
            match case {
                BasicCase::OmegaPlusK { .. } => {
                    if !strictly_increasing(h_seq) || h_seq.len() != fam.stages.len() {
                        return CheckReport::fail(
                            NAME,
                            "hit sequence not strictly increasing".into(),
                        );
                    }
                }
                BasicCase::HPlusOmegaStar { .. } => {
                    if !strictly_increasing(k_seq) || k_seq.len() != fam.stages.len() {
                        return CheckReport::fail(
                            NAME,
                            "hit sequence not strictly increasing".into(),
                        );
                    }
                }
                BasicCase::HZetaK { .. } => {
                    if !strictly_increasing(h_seq)
                        || !strictly_increasing(k_seq)
                        || h_seq.len() != fam.stages.len()
                        || k_seq.len() != fam.stages.len()
                    {
                        return CheckReport::fail(
                            NAME,
                            "hit sequences not strictly increasing".into(),
                        );
                    }
                }
            }
            for (n, stage) in fam.stages.iter().enumerate() {
                let want = match basic_stage_points(
                    sys,
                    &fam.x,
                    &fam.y,
                    case,
                    mid.as_ref(),
                    h_seq,
                    k_seq,
                    n,
                    stage.points.len(),
                ) {
                    Ok(w) => w,
                    Err(msg) => return CheckReport::fail(NAME, msg),
                };
                if stage.points != want {
                    return CheckReport::fail(
                        NAME,
                        format!("stage {} differs from the elementary pattern", n + 1),
                    );
                }
            }
        }
        (
            ExpectedRoot::Sum(index),
            TraceNode::Sum {
                index: ti,
                blocks,
                stage_blocks,
            },
        ) => {
            if index != ti {
                return CheckReport::fail(
                    NAME,
                    format!("trace index {ti:?} differs from target index {index:?}"),
                );
            }
            if stage_blocks.len() != fam.stages.len() {
                return CheckReport::fail(NAME, "trace covers a different depth".into());
            }
            // consecutive blocks share their junction anchor exactly
            let anchor_of: HashMap<i64, &Point> =
                blocks.iter().map(|b| (b.pos, &b.anchor_from)).collect();
            let mut anchors: Vec<(i64, &Point)> = Vec::with_capacity(blocks.len() + 1);
            for b in blocks {
                anchors.push((b.pos, &b.anchor_from));
                match anchor_of.get(&(b.pos + 1)) {
                    Some(next) => {
                        if **next != b.anchor_to {
                            return CheckReport::fail(
                                NAME,
                                format!(
                                    "blocks {} and {} disagree on their shared anchor",
                                    b.pos,
                                    b.pos + 1
                                ),
                            );
                        }
                    }
                    None => anchors.push((b.pos + 1, &b.anchor_to)),
                }
            }
            for (n, (stage, spans)) in fam.stages.iter().zip(stage_blocks).enumerate() {
                let want = expected_positions(*index, n + 1);
                let got: Vec<i64> = spans.iter().map(|s| s.pos).collect();
                if got != want {
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "stage {}: block positions {:?} differ from the growth law {:?}",
                            n + 1,
                            got,
                            want
                        ),
                    );
                }
                // spans tile the interior contiguously
                let mut at = 1usize;
                for s in spans {
                    if s.start != at || s.len == 0 {
                        return CheckReport::fail(
                            NAME,
                            format!("stage {}: block {} span is misplaced", n + 1, s.pos),
                        );
                    }
                    at = match at.checked_add(s.len) {
                        Some(v) if v <= stage.points.len() => v,
                        _ => {
                            return CheckReport::fail(
                                NAME,
                                format!("stage {}: block {} span overflows", n + 1, s.pos),
                            )
                        }
                    };
                }
                if at != stage.points.len() - 1 {
                    return CheckReport::fail(
                        NAME,
                        format!("stage {}: blocks do not tile the interior", n + 1),
                    );
                }
                // support size accounting, on distinct points
                let distinct: HashSet<&Point> = stage.points.iter().collect();
                let predicted = 2 + spans.iter().map(|s| s.len).sum::<usize>();
                if distinct.len() != predicted {
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "stage {}: support size {} differs from trace prediction {}",
                            n + 1,
                            distinct.len(),
                            predicted
                        ),
                    );
                }
                // anchor classes meet blocks only as the sanctioned runs:
                // block l holds an initial run f^0, f^1, ... of its own
                // start anchor and a terminal run ..., f^-2, f^-1 of its
                // end anchor, and no other block touches either class
                for span in spans {
                    let pts = &stage.points[span.start..span.start + span.len];
                    for &(m, z) in &anchors {
                        let hits: Vec<(usize, i64)> = pts
                            .iter()
                            .enumerate()
                            .filter_map(|(i, p)| sys.orbit_offset(z, p).map(|o| (i, o)))
                            .collect();
                        let ok = if m == span.pos {
                            hits.iter()
                                .enumerate()
                                .all(|(run, &(i, o))| i == run && o == run as i64)
                        } else if m == span.pos + 1 {
                            let r = hits.len();
                            hits.iter().enumerate().all(|(run, &(i, o))| {
                                i == span.len - r + run && o == run as i64 - r as i64
                            })
                        } else {
                            hits.is_empty()
                        };
                        if !ok {
                            return CheckReport::fail(
                                NAME,
                                format!(
                                    "stage {}: block {} meets the class of anchor {} \
                                     outside the sanctioned run",
                                    n + 1,
                                    span.pos,
                                    m
                                ),
                            );
                        }
                    }
                }
            }
        }
        (want, got) => {
            let want = match want {
                ExpectedRoot::Orbit { .. } => "orbit",
                ExpectedRoot::Basic(_) => "elementary",
                ExpectedRoot::Sum(_) => "sum",
            };
            return CheckReport::fail(
                NAME,
                format!("trace root {got:?} does not match the {want} route"),
            );
        }
    }

    CheckReport::ok(NAME)
}

/// Run the full suite in order.
pub fn verify_family(
    sys: &dyn System,
    fam: &NestedFamily,
    trace: &ConstructionTrace,
    term: &OrderTerm,
) -> Report {
    Report {
        checks: vec![
            check_eps(sys, fam),
            check_nested(fam),
            check_acyclic(fam),
            check_order_compatible(fam),
            check_class_conditions(sys, fam),
            check_realization(sys, fam, trace, term),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::EpsilonChain;
    use crate::classes::ClassAllocator;
    use crate::constructor::{build_basic, build_orbit_chain, realize};
    use crate::order::parse_term;
    use crate::schedule::EpsSchedule;
    use crate::systems::{rat_from_str, resolve};
    use std::sync::Arc;

    fn odo() -> Arc<dyn System> {
        resolve("odometer").unwrap()
    }

    fn pt(sys: &Arc<dyn System>, s: &str) -> Point {
        sys.parse_point(s).unwrap()
    }

    fn raw_family(
        sys: &Arc<dyn System>,
        stages: Vec<(Vec<&str>, &str)>,
        x: &str,
        y: &str,
    ) -> NestedFamily {
        NestedFamily {
            x: pt(sys, x),
            y: pt(sys, y),
            stages: stages
                .into_iter()
                .map(|(pts, eps)| {
                    EpsilonChain::new(
                        pts.into_iter().map(|p| pt(sys, p)).collect(),
                        rat_from_str(eps).unwrap(),
                    )
                    .unwrap()
                })
                .collect(),
        }
    }

    #[test]
    fn orbit_chain_passes_everything() {
        let sys = odo();
        let x = pt(&sys, "0");
        let b = build_orbit_chain(&sys, &x, 5, &EpsSchedule::dyadic(), 3).unwrap();
        let term = parse_term("fin(4)").unwrap();
        let report = verify_family(sys.as_ref(), &b.family, &b.trace, &term);
        assert!(report.all_pass(), "{}", report.lines());
    }

    #[test]
    fn exact_eps_tie_fails_strictness() {
        let sys = odo();
        // d(f(0), 3) = d(1, 3) = 1/2 which is exactly eps
        let fam = raw_family(&sys, vec![(vec!["0", "3"], "1/2")], "0", "3");
        let r = check_eps(sys.as_ref(), &fam);
        assert!(!r.pass);
        assert!(r.detail.unwrap().contains('='));
    }

    #[test]
    fn endpoint_in_interior_fails_acyclicity() {
        let sys = odo();
        let fam = raw_family(&sys, vec![(vec!["0", "1/3", "0", "1/5"], "2")], "0", "1/5");
        assert!(!check_acyclic(&fam).pass);
    }

    #[test]
    fn swap_fails_order_compatibility() {
        let sys = odo();
        let fam = raw_family(
            &sys,
            vec![
                (vec!["0", "1/3", "1/5", "1"], "2"),
                (vec!["0", "1/5", "1/3", "1"], "1"),
            ],
            "0",
            "1",
        );
        // eps increases here too, but order compatibility is what we probe
        assert!(!check_order_compatible(&fam).pass);
        assert!(check_nested(&fam).pass);
    }

    #[test]
    fn orbit_gap_fails_class_conditions() {
        let sys = odo();
        // stage [x, f^3(x), y]: the x-class points are not consecutive
        let fam = raw_family(&sys, vec![(vec!["0", "3", "1/3"], "2")], "0", "1/3");
        assert!(!check_class_conditions(sys.as_ref(), &fam).pass);
    }

    #[test]
    fn basic_family_realization_and_mutation() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = parse_term("sum(fin; w, fin(3))").unwrap();
        let b = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 4, &alloc).unwrap();
        let report = verify_family(sys.as_ref(), &b.family, &b.trace, &term);
        assert!(report.all_pass(), "{}", report.lines());

        // corrupt one interior point of the final stage
        let mut broken = b.family.clone();
        let last = broken.stages.len() - 1;
        let idx = broken.stages[last].points.len() / 2;
        broken.stages[last].points[idx] = pt(&sys, "977");
        let report = verify_family(sys.as_ref(), &broken, &b.trace, &term);
        assert!(!report.all_pass());
    }

    #[test]
    fn scattered_family_full_suite() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = parse_term("sum(w*; ; z)").unwrap();
        let b = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 3, &alloc).unwrap();
        let report = verify_family(sys.as_ref(), &b.family, &b.trace, &term);
        assert!(report.all_pass(), "{}", report.lines());
    }

    #[test]
    fn unsanctioned_anchor_class_material_fails_realization() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = parse_term("sum(w*; ; z)").unwrap();
        let b = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 2, &alloc).unwrap();
        assert!(check_realization(sys.as_ref(), &b.family, &b.trace, &term).pass);

        // plant a fresh y-class point inside block -2, carrying over the
        // displaced point's address so only the class discipline trips
        let span = match &b.trace.root {
            TraceNode::Sum { stage_blocks, .. } => stage_blocks[1][0],
            _ => panic!(),
        };
        assert_eq!(span.pos, -2);
        let mut family = b.family.clone();
        let mut trace = b.trace.clone();
        let idx = span.start + span.len / 2;
        let old = family.stages[1].points[idx].clone();
        let planted = sys.iterate(&y, -999);
        family.stages[1].points[idx] = planted.clone();
        let addr = trace.addresses.remove(&old).unwrap();
        trace.addresses.insert(planted, addr);

        let r = check_realization(sys.as_ref(), &family, &trace, &term);
        assert!(!r.pass);
        assert!(r.detail.unwrap().contains("sanctioned"));
    }

    #[test]
    fn basic_passes_for_both_directions_of_growth() {
        let sys = odo();
        let x = pt(&sys, "0");
        let y = pt(&sys, "1/3");
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        for (case, text) in [
            (BasicCase::OmegaPlusK { k: 0 }, "w"),
            (BasicCase::HPlusOmegaStar { h: 0 }, "w*"),
            (BasicCase::HZetaK { h: 0, k: 0 }, "z"),
        ] {
            let b = build_basic(&sys, &x, &y, case, &EpsSchedule::dyadic(), 5, &alloc).unwrap();
            let term = parse_term(text).unwrap();
            let report = verify_family(sys.as_ref(), &b.family, &b.trace, &term);
            assert!(report.all_pass(), "case {case:?}: {}", report.lines());
        }
    }
}
