mod common;

use std::collections::BTreeSet;

use badsieve::diagnostics::{
    check_common_point, class_quantities, determinant, diagnose, pigeonhole_search,
    principal_inequalities, slope_bound_check, split_collections, starred_checks, CommonPoint,
    DiagOptions, Verdict,
};
use badsieve::geometry::{intersect, lattice_residue, Line, RationalPoint};
use badsieve::sieve::{init, Params, SlopeClass};
use common::{golden, q};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn f(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

/// Expected verdict from a float comparison `lhs ≤ rhs`, or `None` when
/// the two sides are too close for floats to decide.
fn float_le(lhs: f64, rhs: f64) -> Option<Verdict> {
    let scale = lhs.abs().max(rhs.abs());
    if (lhs - rhs).abs() <= 1e-9 * scale {
        None
    } else if lhs <= rhs {
        Some(Verdict::Holds)
    } else {
        Some(Verdict::Fails)
    }
}

fn agree(got: Verdict, expected: Option<Verdict>, what: &str) {
    if let Some(e) = expected {
        assert_eq!(got, e, "{what}");
    }
}

fn lines(specs: &[(i64, i64, i64)]) -> Vec<Line> {
    specs
        .iter()
        .map(|&(a, b, c)| Line::new(a, b, c).unwrap())
        .collect()
}

const PHI: f64 = 0.618_033_988_749_894_9;

/// Four lines through `(x, y) = (3/5, 1/5)`.
fn pencil() -> (Vec<Line>, RationalPoint) {
    (
        lines(&[(1, 3, 0), (2, 1, -1), (0, 5, 1), (1, 8, 1)]),
        RationalPoint::new(3, 1, 5),
    )
}

#[test]
fn slope_bound_extremal_case_is_attained() {
    let rep = slope_bound_check(&q(16, 1), &q(16, 1), &q(4, 1), &q(1, 1));
    assert_eq!(rep.verdict, Verdict::Holds);
    assert!(rep.attained);
    let rep = slope_bound_check(&q(16, 1), &q(16, 1), &q(3, 1), &q(1, 1));
    assert_eq!(rep.verdict, Verdict::NotApplicable, "H = 9 < W");
}

proptest! {
    #[test]
    fn slope_bound_holds_whenever_premises_do(
        sn in 1i64..400, sd in 1i64..20, wn in 1i64..4000, wd in 1i64..20,
        an in -300i64..300, ad in 1i64..20, bn in 1i64..300, bd in 1i64..20,
    ) {
        let (sigma, w, a, b) = (q(sn, sd), q(wn, wd), q(an, ad), q(bn, bd));
        let (fs, fw, fa, fb) = (f(&sigma), f(&w), f(&a).abs(), f(&b));
        let premises = fb <= fs && fa * fa <= fs * fb && fb * (fa * fa).max(fb * fb) >= fw;
        let rep = slope_bound_check(&sigma, &w, &a, &b);
        if rep.verdict == Verdict::NotApplicable {
            // floats may misjudge only a boundary case
            prop_assert!(!premises || fb == fs || fa * fa == fs * fb || fb * (fa * fa).max(fb * fb) == fw);
        } else {
            prop_assert_eq!(rep.verdict, Verdict::Holds);
            prop_assert!(fa / fb <= (fs.powi(3) / fw).powf(0.25) * (1.0 + 1e-9));
        }
    }
}

#[test]
fn pencil_has_a_common_point_and_splits() {
    let (ls, p) = pencil();
    assert_eq!(check_common_point(&ls), CommonPoint::Point { point: p });
    for l in &ls {
        assert_eq!(lattice_residue(l, &p), 0);
    }
    // ω⁴ between the two smallest fourth powers of |ordinate − 1/5|
    let dists: Vec<f64> = ls
        .iter()
        .map(|l| ((l.a as f64 * PHI + l.c as f64) / l.b as f64 - 0.2).abs())
        .collect();
    let theta = golden();
    let omega4 = theta
        .value()
        .mul_rational(&q(0, 1))
        .add_rational(&q(1, 1_000_000));
    let (a, b) = split_collections(&ls, &p, &omega4, theta.value());
    let expect_a = dists.iter().filter(|d| d.powi(4) <= 1e-6).count();
    assert_eq!(a.len(), expect_a);
    assert_eq!(a.len() + b.len(), ls.len());
}

#[test]
fn principal_verdicts_match_float_evaluation() {
    let (ls, p) = pencil();
    let theta = golden();
    let gap = (5.0 * PHI - 3.0).abs();
    let (qf, mut evaluated) = (5.0f64, 0);
    for (kappa, delta) in [
        (q(8, 10_000), q(1, 10_000)),
        (q(1, 2), q(1, 100)),
        (q(1, 1), q(1, 1000)),
    ] {
        let params = Params::with_kappa(16u32, delta.clone(), kappa.clone(), false).unwrap();
        for n in 1..5u32 {
            for k in 0..=params.max_k() {
                let Some(cq) = class_quantities(&params, theta.value(), &p, k, n).unwrap() else {
                    continue;
                };
                let d = cq.d_k.to_f64().unwrap();
                let (kf, df, t) = (f(&kappa), f(&delta), 2f64.powi(k as i32) / 16.0);
                let c0 = 2.0 * kf / d * t;
                let w = 2f64.powi(k as i32) * 16f64.powi(n as i32 - 1);
                let omega4 = gap * c0.powi(3) / (qf.powi(4) * w);
                assert!((cq.omega_pow4.to_f64() / omega4 - 1.0).abs() < 1e-9);
                assert!((cq.sigma.to_f64() / (c0 / gap) - 1.0).abs() < 1e-9);
                assert!((cq.v_pow4.to_f64() / ((c0 / gap).powi(3) / w) - 1.0).abs() < 1e-9);

                let (split_a, _) = split_collections(&ls, &p, &cq.omega_pow4, theta.value());
                // the split, and the whole pencil as a collection large enough to open the gate
                for a_set in [split_a, ls.clone()] {
                    let rep = principal_inequalities(&a_set, &p, &cq, k, n, &params, 1 << 20);
                    let gated = a_set.len() as f64 >= 2.0 * d;
                    if gated {
                        evaluated += 1;
                        agree(
                            rep.first_principal,
                            float_le(qf * d * gap * gap, 12.0 * c0 * c0),
                            "first",
                        );
                        agree(
                            rep.gap_bound,
                            float_le(gap * gap * d.powi(3) * qf, 48.0 * kf * kf * t * t),
                            "gap",
                        );
                        let rhs = 3072.0 * kf.powi(8) * t.powi(6)
                            / (d.powi(9) * qf.powi(9) * 16f64.powi(2 * n as i32));
                        agree(
                            rep.omega_upper,
                            float_le(omega4 * omega4, rhs),
                            "omega upper",
                        );
                        if qf.powi(3) < 16f64.powi(2 * (n as i32 - 1)) {
                            agree(
                                rep.second_principal,
                                float_le(df.powi(4) / (16.0 * qf.powi(6)), omega4),
                                "second",
                            );
                        } else {
                            assert_eq!(rep.second_principal, Verdict::NotApplicable);
                        }
                    } else {
                        assert_eq!(rep.first_principal, Verdict::NotApplicable);
                        assert_eq!(rep.second_principal, Verdict::NotApplicable);
                    }
                    if !a_set.is_empty() {
                        assert_eq!(rep.lattice, Verdict::Holds);
                    }
                    assert_eq!(rep.pigeonhole.verdict, Verdict::Holds);
                }
            }
        }
    }
    assert!(evaluated > 0, "at least one gated instance");
}

#[test]
fn steep_checks_match_float_evaluation() {
    let (ls, _) = pencil();
    let theta = golden();
    let gap = (5.0 * PHI - 3.0).abs();
    for kappa in [q(1, 1), q(1, 100), q(27, 10_000)] {
        let params = Params::with_kappa(16u32, q(1, 10_000), kappa.clone(), false).unwrap();
        let kf = f(&kappa);
        let r = 16f64;
        for n in 2..6u32 {
            let l = 1u32;
            let rep = starred_checks(&ls, l, n, &params, theta.value());
            let (nf, lf) = (n as f64, l as f64);
            let sigma = kf * r.powf(lf) / gap;
            let v4 = sigma.powi(3) / r.powf(nf - 1.0);
            let omega4 = gap * kf.powi(3) * r.powf(3.0 * lf) / (5f64.powi(4) * r.powf(nf - 1.0));
            assert_eq!(
                rep.collection_a.unwrap() + rep.collection_b.unwrap(),
                ls.len()
            );
            assert_eq!(rep.single_b == Verdict::Holds, rep.collection_b == Some(1));
            agree(
                rep.gap_bound,
                float_le(gap / kf, r.powf((-110.0 * nf - 3152.0 * lf) / 330.0)),
                "gap",
            );
            // every line except the one with the smallest B (here B = 1)
            let rest: Vec<&Line> = ls.iter().filter(|x| x.b != 1).collect();
            let coeff = rest
                .iter()
                .all(|x| (x.b as f64) <= sigma && ((x.a * x.a) as f64) <= sigma * x.b as f64);
            assert_eq!(rep.coefficient_bounds == Verdict::Holds, coeff);
            let slope = rest.iter().all(|x| (x.a as f64 / x.b as f64).powi(4) <= v4);
            assert_eq!(rep.slope_bound == Verdict::Holds, slope);
            agree(
                rep.omega_first,
                float_le(
                    omega4 * 625.0 / kf.powi(4),
                    r.powf((-220.0 * nf - 1081.0 * lf + 165.0) / 165.0),
                ),
                "omega first",
            );
            let floor = 125u128 >= 16u128.pow(2 * (n - l - 1));
            assert_eq!(rep.denominator_floor == Verdict::Holds, floor);
            agree(
                rep.omega_second,
                float_le(
                    omega4 * r.powf(4.0 * nf) / kf.powi(4),
                    r.powf((-641.0 * lf + 605.0) / 165.0),
                ),
                "omega second",
            );
        }
    }
}

#[test]
fn single_steep_line_is_trivially_isolated() {
    let params = Params::with_kappa(16u32, q(1, 10_000), q(1, 1), false).unwrap();
    let rep = starred_checks(&lines(&[(1, 3, 0)]), 1, 3, &params, golden().value());
    assert_eq!(rep.single_b, Verdict::Holds);
    assert_eq!(rep.common_point, CommonPoint::NotApplicable);
}

fn normalize(a: i64, b: i64, c: i64) -> Option<Line> {
    if b == 0 {
        return None;
    }
    let g = a.gcd(&b).gcd(&c);
    let s = b.signum();
    Line::new(s * a / g, s * b / g, s * c / g).ok()
}

proptest! {
    #[test]
    fn pencils_share_a_point(
        a1 in -30i64..30, b1 in 1i64..30, c1 in -30i64..30,
        a2 in -30i64..30, b2 in 1i64..30, c2 in -30i64..30,
        u in -5i64..6, v in -5i64..6, shift in 1i64..5,
    ) {
        let (Some(l1), Some(l2)) = (normalize(a1, b1, c1), normalize(a2, b2, c2)) else {
            return Ok(());
        };
        prop_assume!(!l1.is_parallel_to(&l2));
        let p = intersect(&l1, &l2).unwrap();
        let Some(l3) = normalize(u * l1.a + v * l2.a, u * l1.b + v * l2.b, u * l1.c + v * l2.c) else {
            return Ok(());
        };
        prop_assume!(!l3.is_parallel_to(&l1) && !l3.is_parallel_to(&l2));
        prop_assert_eq!(check_common_point(&[l1, l2, l3]), CommonPoint::Point { point: p });
        prop_assert_eq!(lattice_residue(&l3, &p), 0);
        prop_assert_eq!(determinant(&l1, &l2, &l3), 0.into());

        // shifting C moves the line off the point
        let l4 = Line::new(l3.a, l3.b, l3.c + shift);
        if let Ok(l4) = l4 {
            let det = (l1.a * (-l2.b * l4.c + l4.b * l2.c) + l1.b * (l2.a * l4.c - l4.a * l2.c)
                + l1.c * (-l2.a * l4.b + l4.a * l2.b)) as i128;
            prop_assert!(det != 0);
            match check_common_point(&[l1, l2, l4]) {
                CommonPoint::Violation { determinant: d, .. } => prop_assert_eq!(d, det.to_string()),
                other => prop_assert!(false, "expected a violation, got {:?}", other),
            }
        }
    }

    #[test]
    fn pigeonhole_always_finds_a_small_line(p in -500i128..500, r in -500i128..500, qq in 1i128..5000) {
        let g = p.gcd(&r).gcd(&qq);
        let point = RationalPoint::new(p / g, r / g, qq / g);
        let rep = pigeonhole_search(&point, 1 << 30);
        prop_assert_eq!(rep.verdict, Verdict::Holds);
        let (a, b, c) = rep.witness.unwrap();
        let s = Roots::sqrt(&point.q) as i64;
        prop_assert!(a.abs() <= s && (0..=s).contains(&b) && (a, b) != (0, 0));
        prop_assert_eq!(a as i128 * point.p - b as i128 * point.r + c as i128 * point.q, 0);
        // no witness with a smaller B
        for b2 in 0..b {
            for a2 in -s..=s {
                if (a2, b2) != (0, 0) {
                    prop_assert!((a2 as i128 * point.p - b2 as i128 * point.r).rem_euclid(point.q) != 0);
                }
            }
        }
    }
}

#[test]
fn live_diagnostics_are_consistent() {
    let theta = golden();
    let configs = [
        (8u32, q(1, 100), q(1, 1), q(0, 1), 4u32),
        (16, q(1, 1000), q(1, 1), q(0, 1), 3),
        (4, q(1, 50), q(1, 2), q(1, 3), 5),
        (16, q(1, 10_000), q(27, 10_000), q(0, 1), 3),
    ];
    for (r, delta, kappa, start, depth) in configs {
        let params = Params::with_kappa(r, delta, kappa, false).unwrap();
        let mut state = init(&params, theta.value(), &start).unwrap();
        while state.level() < depth && !state.final_survivors().is_empty() {
            state.step_in_place().unwrap();
        }
        let d = diagnose(&state, &DiagOptions::default()).unwrap();
        assert!(!d.asymptotic_regime);
        let counts = state.counts();
        for (level, ledger) in d.levels.iter().zip(state.ledgers()) {
            let n = level.from_level as usize;
            let a = &level.attribution;
            assert!(a.consistent && a.buckets_match_ledger && a.bucket_sum_matches);
            assert_eq!(a.predicted, r as usize * counts[n - 1] - ledger.removed);
            assert_eq!(a.recounted, counts[n]);
            assert_eq!(a.buckets.values().sum::<usize>(), ledger.removed);
            assert!(level.counters.removed_max <= r);

            let groups: BTreeSet<(usize, u32)> = ledger
                .hits
                .iter()
                .filter(|h| h.crosses_parent && h.slope == SlopeClass::Bounded)
                .map(|h| (h.parent, h.k))
                .collect();
            assert_eq!(level.class_groups.len(), groups.len());
            assert_eq!(level.summary.class_groups, groups.len());
            for g in &level.class_groups {
                assert!(g.lines.iter().all(|l| l.b >= 1));
                if let (Some(a), Some(b)) = (g.collection_a, g.collection_b) {
                    assert_eq!(a + b, g.lines.len());
                }
                if let Some(pr) = &g.principal {
                    assert_ne!(
                        pr.lattice,
                        Verdict::Fails,
                        "first collection lines pass through the point"
                    );
                }
            }
        }
    }
}
