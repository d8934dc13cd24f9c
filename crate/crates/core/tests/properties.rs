//! Property tests for the structural invariants: metric symmetry, rate
//! transforms, classification monotonicity, re-encoding amplitude
//! preservation, gluing determinism, and serialization round trips.

use proptest::prelude::*;

use shadowing::gluing::{GlueMode, GlueStrategy, GluingOracle, SystemBinding};
use shadowing::io;
use shadowing::maps::EndomorphismSpec;
use shadowing::parallel::product_exp_bound;
use shadowing::rate::RateFunction;
use shadowing::semigroup::{
    classify_pseudo, gap_profile, reencode_generators, GeneratorSet, PseudoTrajectory,
    Trajectory, Window,
};
use shadowing::space::{
    hausdorff_distance, set_distance, HausdorffVariant, Space, SpacePoint,
};

fn real_points() -> impl Strategy<Value = Vec<SpacePoint>> {
    prop::collection::vec(-100.0f64..100.0, 1..8)
        .prop_map(|v| v.into_iter().map(SpacePoint::real).collect())
}

fn labels() -> impl Strategy<Value = Vec<SpacePoint>> {
    prop::collection::vec(0usize..3, 1..6).prop_map(|v| {
        v.into_iter()
            .map(|i| SpacePoint::label(["1", "2", "3"][i]))
            .collect()
    })
}

proptest! {
    #[test]
    fn set_distance_is_symmetric(a in real_points(), b in real_points()) {
        let s = Space::RealLine;
        let ab = set_distance(&s, &a, &b).unwrap().value;
        let ba = set_distance(&s, &b, &a).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn set_distance_below_hausdorff(a in real_points(), b in real_points()) {
        let s = Space::RealLine;
        let d = set_distance(&s, &a, &b).unwrap().value;
        let h = hausdorff_distance(&s, &a, &b, HausdorffVariant::Standard).unwrap();
        prop_assert!(d <= h + 1e-12);
    }

    #[test]
    fn discrete_set_distance_is_zero_or_one(a in labels(), b in labels()) {
        let s = Space::finite(["1", "2", "3"]);
        let d = set_distance(&s, &a, &b).unwrap().value;
        prop_assert!(d == 0.0 || d == 1.0);
    }

    #[test]
    fn metric_axioms_on_samples(x in -100.0f64..100.0, y in -100.0f64..100.0) {
        let s = Space::RealLine;
        let px = SpacePoint::real(x);
        let py = SpacePoint::real(y);
        prop_assert_eq!(s.distance(&px, &px).unwrap(), 0.0);
        let d = s.distance(&px, &py).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, s.distance(&py, &px).unwrap());
    }

    #[test]
    fn envelope_is_idempotent(values in prop::collection::vec(0.0f64..2.0, 9)) {
        let phi = RateFunction::table(4, values, 0.1, 0.5).unwrap();
        let once = phi.monotone_envelope();
        let twice = once.monotone_envelope();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn symmetrize_is_even_and_at_most_doubles(values in prop::collection::vec(0.0f64..2.0, 9)) {
        let phi = RateFunction::table(4, values, 0.1, 0.5).unwrap();
        let sym = phi.symmetrize();
        for k in -4i64..=4 {
            prop_assert_eq!(sym.eval(k), sym.eval(-k));
        }
        let before = phi.phi_sum().unwrap();
        let after = sym.phi_sum().unwrap();
        prop_assert!(after >= before - 1e-12);
        prop_assert!(after <= 2.0 * before + 1e-12);
    }

    #[test]
    fn running_product_stays_below_exponential(b in prop::collection::vec(0.0f64..1.0, 0..50)) {
        prop_assert!(product_exp_bound(&b).unwrap().holds);
    }

    #[test]
    fn classification_is_monotone_in_eps(
        noise in prop::collection::vec(-0.05f64..0.05, 16),
        eps in 0.001f64..0.02,
    ) {
        let gens = GeneratorSet::new(
            Space::RealLine,
            [("g", EndomorphismSpec::affine(2.0, 0.0))],
        )
        .unwrap();
        let w = Window::new(0, 16).unwrap();
        let mut x = 1.0f64;
        let mut pts = vec![SpacePoint::real(x)];
        for n in &noise {
            x = 2.0 * x + n;
            pts.push(SpacePoint::real(x));
        }
        let y = PseudoTrajectory::new(w, pts, None).unwrap();
        let tight = classify_pseudo(&gens, &y, eps, None).unwrap();
        let loose = classify_pseudo(&gens, &y, eps * 3.0, None).unwrap();
        prop_assert!(!tight.is_u || loose.is_u);
        prop_assert!(!tight.is_a || loose.is_a);
    }

    #[test]
    fn reencoding_preserves_amplitudes(
        start in -2.0f64..2.0,
        jumps in prop::collection::vec(prop::option::of(0.01f64..0.5), 10),
    ) {
        let old = GeneratorSet::new(
            Space::RealLine,
            [("g", EndomorphismSpec::affine(2.0, 0.0))],
        )
        .unwrap();
        let new = GeneratorSet::new(
            Space::RealLine,
            [("h", EndomorphismSpec::affine(4.0, 0.0))],
        )
        .unwrap();
        let dict = std::collections::BTreeMap::from([(
            "h".to_string(),
            vec!["g".to_string(), "g".to_string()],
        )]);
        let w = Window::new(0, jumps.len() as i64).unwrap();
        let mut x = start;
        let mut pts = vec![SpacePoint::real(x)];
        for j in &jumps {
            x = 4.0 * x + j.unwrap_or(0.0);
            pts.push(SpacePoint::real(x));
        }
        let y = PseudoTrajectory::new(w, pts, None).unwrap();
        let z = reencode_generators(&y, &old, &new, &dict).unwrap();
        let before = gap_profile(&new, &y).unwrap().sorted_amplitudes();
        let after = gap_profile(&old, &z).unwrap().sorted_amplitudes();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn psi_with_equal_branches_is_affine(a in 0.1f64..3.0, c in -2.0f64..2.0) {
        let psi = EndomorphismSpec::psi(a, a, c, c);
        let aff = EndomorphismSpec::affine(a, c);
        for i in 0..1000 {
            let x = SpacePoint::real(-5.0 + 0.01 * i as f64);
            let u = psi.apply(&x).unwrap().as_real().unwrap();
            let v = aff.apply(&x).unwrap().as_real().unwrap();
            prop_assert!((u - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn preimage_of_invertible_map_inverts_apply(slope in 0.2f64..4.0, y in -50.0f64..50.0) {
        let f = EndomorphismSpec::affine(slope, 1.0);
        let target = SpacePoint::real(y);
        let pre = f.preimages(&target).unwrap();
        prop_assert_eq!(pre.len(), 1);
        let back = f.apply(&pre[0]).unwrap().as_real().unwrap();
        prop_assert!((back - y).abs() <= 1e-9);
    }

    #[test]
    fn glue_pair_is_deterministic(v in 0.5f64..2.0, gap in 0.01f64..0.3) {
        let gens = GeneratorSet::new(
            Space::RealLine,
            [("g", EndomorphismSpec::affine(2.0, 0.0))],
        )
        .unwrap();
        let oracle = GluingOracle::new(
            GlueMode::Strong,
            GlueStrategy::ExpandingPickForward,
            SystemBinding::Semigroup(gens),
        );
        let phi = RateFunction::geometric(0.5);
        let lw = Window::new(-6, -1).unwrap();
        let left_pts: Vec<SpacePoint> = lw
            .times()
            .map(|t| SpacePoint::real(v * 2f64.powi(t as i32)))
            .collect();
        let left = Trajectory::new(lw, left_pts, vec!["g".into(); lw.steps()]).unwrap();
        let rw = Window::new(0, 6).unwrap();
        let right_pts: Vec<SpacePoint> = rw
            .times()
            .map(|t| SpacePoint::real((v + gap) * 2f64.powi(t as i32)))
            .collect();
        let right = Trajectory::new(rw, right_pts, vec!["g".into(); rw.steps()]).unwrap();
        let once = oracle.glue_pair(&left, &right, &phi).unwrap();
        let twice = oracle.glue_pair(&left, &right, &phi).unwrap();
        prop_assert_eq!(once.trajectory.points(), twice.trajectory.points());
        prop_assert_eq!(once.errors, twice.errors);
    }

    #[test]
    fn trajectory_csv_round_trip(start in 0.1f64..3.0, len in 2usize..12) {
        let gens = GeneratorSet::new(
            Space::RealLine,
            [
                ("g1", EndomorphismSpec::affine(2.0, 0.0)),
                ("g2", EndomorphismSpec::affine(0.5, 0.0)),
            ],
        )
        .unwrap();
        let w = Window::new(0, len as i64).unwrap();
        let mut pts = vec![SpacePoint::real(start)];
        let mut word = Vec::new();
        for i in 0..len {
            let id = if i % 3 == 0 { "g2" } else { "g1" };
            let next = gens.get(id).unwrap().apply(pts.last().unwrap()).unwrap();
            pts.push(next);
            word.push(id.to_string());
        }
        let traj = Trajectory::new(w, pts, word).unwrap();
        let back = io::trajectory_from_csv(&Space::RealLine, &io::trajectory_to_csv(&traj)).unwrap();
        prop_assert_eq!(&back, &traj);
        back.validate(&gens).unwrap();
    }
}
