use std::f64::consts::FRAC_PI_2;

use conflict_core::aoc::{aoc_analytical, aoc_monte_carlo, conflict_region_bounds, GapPair};
use conflict_core::game::{
    augmented_closed_form, augmented_fixed_point, detect_conflict, Category, ModelKind, RewardMatrix,
};
use conflict_core::vehicle::{fit_polynomial, sample, Destination, VehicleState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODELS: [ModelKind; 5] = [
    ModelKind::Baseline,
    ModelKind::PureAltruism,
    ModelKind::Altruism,
    ModelKind::AugmentedAltruism,
    ModelKind::Svo,
];

/// A valid matrix: each agent's preferred cell beats every other cell.
fn matrix() -> impl Strategy<Value = RewardMatrix> {
    (
        0.05f64..5.0,
        0.05f64..5.0,
        -3.0f64..3.0,
        -3.0f64..3.0,
        prop::array::uniform4(0.01f64..6.0),
    )
        .prop_map(|(a, b, r121, r212, below)| {
            let (r211, r122) = (r121 + a, r212 + b);
            RewardMatrix::new([
                [(r211 - below[0], r122 - below[1]), (r121, r122)],
                [(r211, r212), (r211 - below[2], r122 - below[3])],
            ])
        })
}

fn coeff(kind: ModelKind) -> impl Strategy<Value = f64> {
    0.0..=kind.coefficient_span()
}

fn model() -> impl Strategy<Value = conflict_core::SocialModel> {
    prop::sample::select(MODELS.to_vec())
        .prop_flat_map(|k| (Just(k), coeff(k), coeff(k)))
        .prop_filter("augmented needs alpha1 alpha2 < 1", |(k, c1, c2)| {
            *k != ModelKind::AugmentedAltruism || c1 * c2 < 0.999
        })
        .prop_map(|(k, c1, c2)| k.with_coeffs(c1, c2))
}

fn mirror(c: Category) -> Category {
    match c {
        Category::AgreementRowYields => Category::AgreementColYields,
        Category::AgreementColYields => Category::AgreementRowYields,
        other => other,
    }
}

#[test]
fn fixed_point_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1);
    let mut checked = 0;
    while checked < 10_000 {
        let (a1, a2) = (rng.random::<f64>(), rng.random::<f64>());
        if a1 * a2 > 0.98 {
            continue;
        }
        let (r1, r2) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let fp = augmented_fixed_point(r1, r2, a1, a2, 1e-13).unwrap();
        let (c1, c2) = augmented_closed_form(r1, r2, a1, a2);
        assert!(
            (fp.r1 - c1).abs() < 1e-8 && (fp.r2 - c2).abs() < 1e-8,
            "{r1} {r2} {a1} {a2}"
        );
        checked += 1;
    }
}

#[test]
fn augmented_never_both_passive() {
    let m = RewardMatrix::lane_change().validate().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    for _ in 0..100_000 {
        let (a1, a2) = (rng.random::<f64>(), rng.random::<f64>());
        let out = detect_conflict(&ModelKind::AugmentedAltruism.with_coeffs(a1, a2), &m).unwrap();
        assert_ne!(out.category, Category::BothPassive, "({a1}, {a2})");
    }
}

#[test]
fn region_bounds_agree_with_decisions() {
    for kind in MODELS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED ^ kind as u64);
        let span = kind.coefficient_span();
        for _ in 0..10_000 {
            let (a, b) = (rng.random_range(0.1..5.0), rng.random_range(0.1..5.0));
            let (c1, c2) = (span * rng.random::<f64>(), span * rng.random::<f64>());
            if kind == ModelKind::AugmentedAltruism && c1 * c2 >= 1.0 {
                continue;
            }
            let bounds = conflict_region_bounds(kind, GapPair { a, b }, &[c1]).unwrap();
            let near_edge = bounds.rows[0]
                .intervals
                .iter()
                .any(|iv| (iv.lo - c2).abs() < 1e-9 || (iv.hi - c2).abs() < 1e-9);
            if near_edge {
                continue;
            }
            let m = RewardMatrix::from_gaps(a, b).validate().unwrap();
            let decided = detect_conflict(&kind.with_coeffs(c1, c2), &m).unwrap().conflict;
            assert_eq!(bounds.contains(0, c2), decided, "{kind} A={a} B={b} c=({c1}, {c2})");
        }
    }
}

#[test]
fn monte_carlo_ignores_thread_count() {
    let m = RewardMatrix::from_gaps(2.0, 0.7).validate().unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| aoc_monte_carlo(ModelKind::Svo, &m, 70_001, 42).unwrap())
    };
    assert_eq!(run(1), run(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn positive_affine_maps_keep_outcomes(m in matrix(), model in model(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
        let before = detect_conflict(&model, &m.validate().unwrap()).unwrap();
        let moved = m.map(|p| conflict_core::RewardPair::new(scale * p.row + shift, scale * p.col + shift));
        let after = detect_conflict(&model, &moved.validate().unwrap()).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn swapping_agents_mirrors_outcome(m in matrix(), model in model()) {
        let v = m.validate().unwrap();
        let here = detect_conflict(&model, &v).unwrap();
        let there = detect_conflict(&model.swapped(), &v.transposed()).unwrap();
        prop_assert_eq!(here.conflict, there.conflict);
        prop_assert_eq!(mirror(here.category), there.category);
    }

    #[test]
    fn aoc_is_scale_free_symmetric_and_bounded(a in 0.01f64..100.0, b in 0.01f64..100.0, k in 0.001f64..1000.0) {
        for kind in MODELS {
            let v = aoc_analytical(kind, GapPair { a, b }).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&v));
            let scaled = aoc_analytical(kind, GapPair { a: k * a, b: k * b }).unwrap().value;
            prop_assert!((v - scaled).abs() < 1e-12, "{} scale", kind);
            let flipped = aoc_analytical(kind, GapPair { a: b, b: a }).unwrap().value;
            prop_assert!((v - flipped).abs() < 1e-12, "{} symmetry", kind);
        }
    }

    #[test]
    fn polynomial_meets_boundary_conditions(
        x0 in 0.0f64..8.0, y0 in -50.0f64..50.0, v0 in 0.5f64..20.0, th0 in 0.9f64..2.2,
        ax in -3.0f64..3.0, ay in -3.0f64..3.0,
        dx in -4.0f64..4.0, v1 in 0.5f64..20.0, th1 in 0.9f64..2.2, t in 1.0f64..6.0,
    ) {
        let init = VehicleState::new(x0, y0, v0, th0);
        let dest = Destination { state: VehicleState::new(x0 + dx, 0.0, v1, th1), y_free: true };
        let poly = fit_polynomial(&init, (ax, ay), &dest, t).unwrap();
        for r in poly.boundary_residuals(&init, (ax, ay), &dest) {
            prop_assert!(r.abs() < 1e-6, "residual {}", r);
        }
    }

    #[test]
    fn sampling_ends_on_the_destination(
        x0 in 0.0f64..8.0, v0 in 1.0f64..20.0, dx in -4.0f64..4.0, v1 in 1.0f64..20.0, steps in 5usize..40,
    ) {
        let dt = 0.2;
        let t = steps as f64 * dt;
        let init = VehicleState::new(x0, 0.0, v0, FRAC_PI_2);
        let dest = Destination { state: VehicleState::new(x0 + dx, 0.0, v1, FRAC_PI_2), y_free: true };
        let traj = sample(&fit_polynomial(&init, (0.0, 0.0), &dest, t).unwrap(), dt).unwrap();
        prop_assert_eq!(traj.len(), steps + 1);
        let first = traj.states[0];
        let last = *traj.states.last().unwrap();
        prop_assert!((first.x - x0).abs() < 1e-9 && (first.v - v0).abs() < 1e-9);
        prop_assert!((last.x - dest.state.x).abs() < 1e-6);
        prop_assert!((last.v - v1).abs() < 1e-6);
        prop_assert!((last.theta - FRAC_PI_2).abs() < 1e-6);
    }
}
