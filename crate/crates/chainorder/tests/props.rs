//! Property tests for the algebraic layers: term round-trips, the total
//! order on ranks, exactness of the odometer arithmetic, and the chain
//! operators.

use std::cmp::Ordering;

use num::{BigInt, BigRational, One, Signed, Zero};
use proptest::prelude::*;

use chainorder::chains::{concat, limit_order, strip_endpoints, EpsilonChain, NestedFamily};
use chainorder::classes::ClassAllocator;
use chainorder::constructor::{build_basic, BasicCase};
use chainorder::order::{normalize, parse_term, render_term, IndexKind, OrderTerm, OrdinalCnf};
use chainorder::schedule::EpsSchedule;
use chainorder::systems::{resolve, Conjugacy, Point, System};

// ----------------------------------------------------------------------
// order terms
// ----------------------------------------------------------------------

fn term_strategy() -> impl Strategy<Value = OrderTerm> {
    let leaf = prop_oneof![
        Just(OrderTerm::Zero),
        Just(OrderTerm::One),
        (2u64..6).prop_map(OrderTerm::Fin),
        Just(OrderTerm::Omega),
        Just(OrderTerm::OmegaStar),
        Just(OrderTerm::Zeta),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(|head| OrderTerm::Sum {
                index: IndexKind::FinIdx,
                head,
                tail: None,
                tail2: None,
            }),
            (
                prop::collection::vec(inner.clone(), 0..3),
                inner.clone(),
                any::<bool>()
            )
                .prop_map(|(head, tail, star)| OrderTerm::Sum {
                    index: if star {
                        IndexKind::OmegaStarIdx
                    } else {
                        IndexKind::OmegaIdx
                    },
                    head,
                    tail: Some(Box::new(tail)),
                    tail2: None,
                }),
            (
                prop::collection::vec(inner.clone(), 0..3),
                inner.clone(),
                inner
            )
                .prop_map(|(head, neg, pos)| OrderTerm::Sum {
                    index: IndexKind::ZetaIdx,
                    head,
                    tail: Some(Box::new(neg)),
                    tail2: Some(Box::new(pos)),
                }),
        ]
    })
}

proptest! {
    #[test]
    fn parse_render_round_trip(t in term_strategy()) {
        let n = normalize(t);
        let back = parse_term(&render_term(&n)).expect("rendered terms parse");
        prop_assert_eq!(back, n);
    }

    #[test]
    fn normalize_is_idempotent(t in term_strategy()) {
        let once = normalize(t);
        prop_assert_eq!(normalize(once.clone()), once);
    }

    #[test]
    fn sum_rank_exceeds_block_ranks(t in term_strategy()) {
        let n = normalize(t);
        if let OrderTerm::Sum { head, tail, tail2, .. } = &n {
            let rank = n.vd_rank();
            for b in head.iter()
                .chain(tail.iter().map(|b| b.as_ref()))
                .chain(tail2.iter().map(|b| b.as_ref()))
            {
                prop_assert!(b.vd_rank() < rank);
            }
        }
    }
}

// ----------------------------------------------------------------------
// ordinal ranks
// ----------------------------------------------------------------------

fn cnf_strategy() -> impl Strategy<Value = OrdinalCnf> {
    prop::collection::btree_map(0u64..5, 1u64..9, 0..4).prop_map(|by_exp| {
        let terms: Vec<(OrdinalCnf, u64)> = by_exp
            .into_iter()
            .rev()
            .map(|(exp, coeff)| (OrdinalCnf::from_nat(exp), coeff))
            .collect();
        OrdinalCnf::from_terms(terms).expect("strictly decreasing by construction")
    })
}

/// Finite-base expansion of a CNF with small finite exponents.
fn expansion_value(c: &OrdinalCnf) -> Option<u128> {
    // parse the rendered form: terms "w^e*c", "w*c", "w", "n"
    const BASE: u128 = 1_000_000;
    let text = c.to_string();
    if text == "0" {
        return Some(0);
    }
    let mut total: u128 = 0;
    for part in text.split(" + ") {
        let (exp, coeff): (u32, u128) = if let Some(rest) = part.strip_prefix("w^") {
            let (e, c) = match rest.split_once('*') {
                Some((e, c)) => (e.parse().ok()?, c.parse().ok()?),
                None => (rest.parse().ok()?, 1),
            };
            (e, c)
        } else if let Some(rest) = part.strip_prefix("w*") {
            (1, rest.parse().ok()?)
        } else if part == "w" {
            (1, 1)
        } else {
            (0, part.parse().ok()?)
        };
        total += coeff * BASE.pow(exp);
    }
    Some(total)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn cnf_compare_total_order(a in cnf_strategy(), b in cnf_strategy(), c in cnf_strategy()) {
        // antisymmetry
        if a.cmp(&b) == Ordering::Equal {
            prop_assert_eq!(&a, &b);
        }
        prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
        // transitivity
        if a <= b && b <= c {
            prop_assert!(a <= c);
        }
        // agreement with the finite-base expansion oracle
        if let (Some(va), Some(vb)) = (expansion_value(&a), expansion_value(&b)) {
            prop_assert_eq!(a.cmp(&b), va.cmp(&vb));
        }
    }
}

// ----------------------------------------------------------------------
// odometer exactness
// ----------------------------------------------------------------------

fn rational_strategy() -> impl Strategy<Value = BigRational> {
    (
        -400i64..400,
        prop::sample::select(vec![1i64, 3, 5, 7, 9, 11, 15, 21, 45]),
    )
        .prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn odo_point() -> impl Strategy<Value = Point> {
    rational_strategy().prop_map(Point::Odometer)
}

fn dist(sys: &dyn System, p: &Point, q: &Point) -> BigRational {
    sys.dist_bounds(p, q).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn step_inverse_and_isometry(p in odo_point(), q in odo_point()) {
        let sys = resolve("odometer").unwrap();
        prop_assert_eq!(sys.inv_step(&sys.step(&p)), p.clone());
        prop_assert_eq!(sys.step(&sys.inv_step(&p)), p.clone());
        prop_assert_eq!(
            dist(sys.as_ref(), &sys.step(&p), &sys.step(&q)),
            dist(sys.as_ref(), &p, &q)
        );
    }

    #[test]
    fn ultrametric(p in odo_point(), q in odo_point(), r in odo_point()) {
        let sys = resolve("odometer").unwrap();
        let lhs = dist(sys.as_ref(), &p, &r);
        let rhs = std::cmp::max(dist(sys.as_ref(), &p, &q), dist(sys.as_ref(), &q, &r));
        prop_assert!(lhs <= rhs);
    }

    #[test]
    fn same_class_is_orbit_equivalence(p in odo_point(), q in odo_point(), n in -50i64..50) {
        let sys = resolve("odometer").unwrap();
        prop_assert!(sys.same_class(&p, &sys.iterate(&p, n)));
        prop_assert_eq!(sys.same_class(&p, &q), sys.same_class(&q, &p));
        if sys.same_class(&p, &q) {
            prop_assert!(sys.same_class(&sys.iterate(&p, n), &q));
        }
    }

    #[test]
    fn conjugacy_commutes_with_step(p in odo_point(), c in rational_strategy()) {
        let sys = resolve("odometer").unwrap();
        let h = Conjugacy::OdometerTranslate(c);
        prop_assert_eq!(h.apply(&sys.step(&p)), sys.step(&h.apply(&p)));
    }
}

proptest! {
    #[test]
    fn hit_time_matches_linear_search(
        from in rational_strategy(),
        to in rational_strategy(),
        e in 0u32..10,
        min_h in 0u64..12,
    ) {
        let sys = resolve("odometer").unwrap();
        let eps = BigRational::new(BigInt::one(), BigInt::one() << e);
        let closed = sys
            .hit_time(&Point::Odometer(from.clone()), &Point::Odometer(to.clone()), &eps, min_h)
            .unwrap();
        let mut h = min_h;
        let brute = loop {
            let diff = &from + BigRational::from_integer(BigInt::from(h + 1)) - &to;
            let hit = if diff.is_zero() {
                true
            } else {
                let mut a = diff.numer().clone();
                if a.is_negative() { a = -a; }
                let mut v = 0u32;
                while (&a % BigInt::from(2)).is_zero() { a /= BigInt::from(2); v += 1; }
                BigRational::new(BigInt::one(), BigInt::one() << v) < eps
            };
            if hit { break h; }
            h += 1;
        };
        prop_assert_eq!(closed, brute);
    }
}

// ----------------------------------------------------------------------
// rotation certification
// ----------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_step_is_isometric(
        s1 in 0i64..12, s2 in 0i64..12, a in -40i64..40, b in -40i64..40, e in 1u32..9
    ) {
        let sys = resolve("rotation:golden").unwrap();
        let p = Point::Rotation { seed: BigRational::new(BigInt::from(s1), BigInt::from(13)), power: a };
        let q = Point::Rotation { seed: BigRational::new(BigInt::from(s2), BigInt::from(13)), power: b };
        let eps = BigRational::new(BigInt::one(), BigInt::one() << e);
        let before = sys.cmp_dist(&p, &q, &eps).unwrap();
        let after = sys.cmp_dist(&sys.step(&p), &sys.step(&q), &eps).unwrap();
        prop_assert_eq!(before, after);
        prop_assert_eq!(sys.inv_step(&sys.step(&p)), p);
    }
}

// ----------------------------------------------------------------------
// chain operators and the limit order
// ----------------------------------------------------------------------

fn small_chain() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-20i64..20, 1..6)
}

proptest! {
    #[test]
    fn concat_associative_and_support_union(a in small_chain(), b in small_chain(), c in small_chain()) {
        let eps = BigRational::one();
        let mk = |v: &Vec<i64>| {
            EpsilonChain::new(
                v.iter().map(|n| Point::Odometer(BigRational::from_integer(BigInt::from(*n)))).collect(),
                eps.clone(),
            ).unwrap()
        };
        let (ca, cb, cc) = (mk(&a), mk(&b), mk(&c));
        let left = concat(&concat(&ca, &cb).unwrap(), &cc).unwrap();
        let right = concat(&ca, &concat(&cb, &cc).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(left.len(), ca.len() + cb.len() + cc.len());
        if ca.len() >= 3 {
            let stripped = strip_endpoints(&ca).unwrap();
            prop_assert_eq!(stripped.points.as_slice(), &ca.points[1..ca.len() - 1]);
        }
    }
}

/// Associativity rewrites do not move the rank of the canonical form.
#[test]
fn rank_invariant_under_flattening_spellings() {
    for (flat, nested) in [
        ("sum(fin; w, w*, z)", "sum(fin; w, sum(fin; w*, z))"),
        (
            "sum(fin; w, fin(3), w*)",
            "sum(fin; sum(fin; w, fin(3)), w*)",
        ),
        ("sum(w; w, w*; z)", "sum(w; sum(fin; w, w*); z)"),
    ] {
        let a = parse_term(flat).unwrap();
        let b = parse_term(nested).unwrap();
        assert_eq!(a, b, "{flat} vs {nested}");
        assert_eq!(a.vd_rank(), b.vd_rank());
    }
}

/// The reciprocal schedule drives the same constructions end to end.
#[test]
fn reciprocal_schedule_end_to_end() {
    let sys = resolve("odometer").unwrap();
    let x = sys.parse_point("0").unwrap();
    let y = sys.parse_point("1/3").unwrap();
    let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
    let term = parse_term("sum(w*; ; z)").unwrap();
    let built = chainorder::constructor::realize(
        &sys,
        &x,
        &y,
        &term,
        &EpsSchedule::reciprocal(),
        4,
        &alloc,
    )
    .unwrap();
    let report =
        chainorder::verifier::verify_family(sys.as_ref(), &built.family, &built.trace, &term);
    assert!(report.all_pass(), "{}", report.lines());
}

/// Appending further compatible stages never reorders settled pairs.
#[test]
fn limit_order_stabilizes_under_extension() {
    let sys = resolve("odometer").unwrap();
    let x = sys.parse_point("0").unwrap();
    let y = sys.parse_point("1/3").unwrap();
    let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
    let b = build_basic(
        &sys,
        &x,
        &y,
        BasicCase::HZetaK { h: 1, k: 2 },
        &EpsSchedule::dyadic(),
        5,
        &alloc,
    )
    .unwrap();
    let full = limit_order(&b.family);
    assert!(full.linear);
    for cut in 1..5 {
        let prefix = NestedFamily {
            x: b.family.x.clone(),
            y: b.family.y.clone(),
            stages: b.family.stages[..cut].to_vec(),
        };
        let lo = limit_order(&prefix);
        assert!(lo.linear);
        // the prefix order is the full order restricted to its elements
        let keep: Vec<&Point> = full
            .elements
            .iter()
            .filter(|p| lo.elements.contains(p))
            .collect();
        let got: Vec<&Point> = lo.elements.iter().collect();
        assert_eq!(keep, got, "prefix of depth {cut}");
    }
}
