use ishikawa_lab::analysis::{render_csv, scalar_recursion, CsvTable};
use ishikawa_lab::anchor::solve_implicit;
use ishikawa_lab::engine::{make_ishikawa, make_mann, run, ProcessBase, StopRule, Variant};
use ishikawa_lab::operators::{DomainSpec, OperatorSpec};
use ishikawa_lab::schedules::ScheduleSpec;
use ishikawa_lab::space::{dual_norm, duality_map, generalized_duality_map, pairing, SpaceSpec, Vector};
use proptest::prelude::*;

fn space_and_point() -> impl Strategy<Value = (SpaceSpec, Vec<f64>)> {
    (1.1f64..6.0, 1usize..8).prop_flat_map(|(p, d)| {
        let space = SpaceSpec::new(d, p).unwrap();
        (Just(space), proptest::collection::vec(-1e3f64..1e3, d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn duality_identities((space, coords) in space_and_point()) {
        let x = space.vector(coords).unwrap();
        let j = duality_map(&x);
        let n = x.norm();
        prop_assert!((pairing(&x, &j).unwrap() - n * n).abs() <= 1e-10 * (n * n).max(1.0));
        prop_assert!((dual_norm(&j) - n).abs() <= 1e-10 * n.max(1.0));
    }

    #[test]
    fn duality_homogeneous_and_odd((space, coords) in space_and_point(), lam in 1e-3f64..1e3) {
        let x = space.vector(coords).unwrap();
        let jx = duality_map(&x);
        let gap = duality_map(&x.scale(lam)).distance(&jx.scale(lam)).unwrap();
        prop_assert!(gap <= 1e-12 * (lam * jx.norm()).max(1.0));
        prop_assert_eq!(duality_map(&x.scale(-1.0)), jx.scale(-1.0));
        prop_assert_eq!(generalized_duality_map(&x, 2.0).unwrap(), jx.clone());
    }

    #[test]
    fn gauge_duality_identities((space, coords) in space_and_point(), gauge in 1.2f64..4.0) {
        let x = space.vector(coords).unwrap();
        let j = generalized_duality_map(&x, gauge).unwrap();
        let n = x.norm();
        let lhs = pairing(&x, &j).unwrap();
        prop_assert!((lhs - n.powf(gauge)).abs() <= 1e-10 * n.powf(gauge).max(1.0));
        prop_assert!((dual_norm(&j) - n.powf(gauge - 1.0)).abs() <= 1e-10 * n.powf(gauge - 1.0).max(1.0));
    }

    #[test]
    fn schedules_are_pure(c in 0.01f64..1.0, rho in 0.0f64..3.0, offset in 1u64..5, n in 0u64..(1u64 << 31)) {
        let a = ScheduleSpec::power(c, rho, offset).unwrap();
        let b = ScheduleSpec::power(c, rho, offset).unwrap();
        prop_assert_eq!(a.eval(n).to_bits(), b.eval(n).to_bits());
        prop_assert_eq!(a.predicate_report(), b.predicate_report());
        let v = a.eval(n);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn recursion_nonnegative_and_monotone(a0 in 0.0f64..10.0, extra in 0.0f64..10.0, tau in 0.0f64..1.0, cb in 0.0f64..1.0) {
        let t = ScheduleSpec::constant(tau).unwrap();
        let b = ScheduleSpec::power(cb.max(1e-3), 2.0, 1).unwrap();
        let c = ScheduleSpec::geometric(0.5, 0.5).unwrap();
        let lo = scalar_recursion(a0, &t, &b, &c, 200).unwrap();
        let hi = scalar_recursion(a0 + extra, &t, &b, &c, 200).unwrap();
        for (l, h) in lo.iter().zip(&hi) {
            prop_assert!(*l >= 0.0);
            prop_assert!(l <= h);
        }
    }

    #[test]
    fn inner_contraction_law(t in 0.01f64..1.0, scale in 0.0f64..0.95, theta in 0.0f64..std::f64::consts::TAU, ox in -2.0f64..2.0, oy in -2.0f64..2.0) {
        let space = SpaceSpec::euclidean(2);
        let t_op = OperatorSpec::compose(
            OperatorSpec::box_clamp(vec![-1.0, -1.0], vec![1.0, 1.0]),
            OperatorSpec::rotation(theta, vec![0.0, 0.0]),
        );
        let f = OperatorSpec::homothety(scale, vec![ox, oy]);
        let s = solve_implicit(&t_op, &f, t, &space.vector(vec![3.0, -3.0]).unwrap(), 1e-11, None).unwrap();
        // violations of ‖z_{k+1} − z_k‖ ≤ (κ + 1e-12)‖z_k − z_{k−1}‖ beyond rounding
        prop_assert!(s.contraction_excess <= 64.0 * f64::EPSILON, "excess {}", s.contraction_excess);
        prop_assert!(s.iters <= s.budget.max(1));
    }
}

fn clamp_run_base(lo: Vec<f64>, hi: Vec<f64>, x0: Vec<f64>, seed: u64, iters: u64) -> ProcessBase {
    let space = SpaceSpec::new(lo.len(), 3.0).unwrap();
    let inner_lo: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + 0.25 * (h - l)).collect();
    let inner_hi: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + 0.75 * (h - l)).collect();
    ProcessBase {
        space,
        domain: DomainSpec::Box { lo, hi },
        t_op: OperatorSpec::box_clamp(inner_lo, inner_hi),
        x0: space.vector(x0).unwrap(),
        stop: StopRule { max_iters: iters, residual_tol: 0.0, divergence_radius: 1e6 },
        seed,
    }
}

fn box_and_points() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..4).prop_flat_map(|d| {
        (
            proptest::collection::vec(-3.0f64..0.0, d),
            proptest::collection::vec(0.1f64..3.0, d),
            proptest::collection::vec(0.0f64..1.0, d),
            proptest::collection::vec(0.0f64..1.0, d),
        )
    })
    .prop_map(|(lo, width, a, b)| {
        let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
        let pick = |s: &Vec<f64>| lo.iter().zip(&hi).zip(s).map(|((l, h), s)| l + s * (h - l)).collect::<Vec<f64>>();
        let (x0, u) = (pick(&a), pick(&b));
        (lo, hi, x0, u)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterates_stay_in_domain((lo, hi, x0, u) in box_and_points(), c in 0.05f64..1.0, beta in 0.05f64..1.0, seed in 0u64..1000) {
        let base = clamp_run_base(lo.clone(), hi.clone(), x0, seed, 200);
        let domain = base.domain.clone();
        let cfg = make_ishikawa(
            base,
            Variant::Anchored(u),
            ScheduleSpec::power(c, 1.0, 1).unwrap(),
            ScheduleSpec::constant(beta).unwrap(),
        ).unwrap();
        let traj = run(&cfg, None).unwrap();
        for s in &traj.steps {
            prop_assert!(domain.contains(&s.x, 1e-12));
            prop_assert!(domain.contains(&s.y, 1e-12));
        }
    }

    #[test]
    fn runs_are_deterministic_and_csv_round_trips((lo, hi, x0, u) in box_and_points(), c in 0.05f64..1.0, seed in 0u64..1000, steps in 0u64..60) {
        let cfg = make_mann(
            clamp_run_base(lo, hi, x0, seed, steps),
            Variant::Anchored(u.clone()),
            ScheduleSpec::power(c, 1.0, 1).unwrap(),
        ).unwrap();
        let q = Vector::new(cfg.space, u).unwrap();
        let a = run(&cfg, Some(&q)).unwrap();
        let b = run(&cfg, Some(&q)).unwrap();
        prop_assert_eq!(&a, &b);
        let text = render_csv(&a);
        prop_assert_eq!(text.lines().count() as u64, steps + 2);
        prop_assert_eq!(CsvTable::parse(&text).unwrap().render(), text);
    }
}
