use proptest::prelude::*;

use fraceig::cli::gridio::{grid_function_from_str, grid_function_to_string};
use fraceig::eigen::{picone_defect_with, WeightedProblem};
use fraceig::nonlocal::{exterior_tail, inscribed_ball_tail, Discretization, GridFunction, GridSpec, KernelParams, Weight};

const M: usize = 24;

fn kernel() -> impl Strategy<Value = KernelParams> {
    (0.1f64..0.95, 1.1f64..4.0).prop_map(|(s, p)| KernelParams::new(1, s, p).unwrap())
}

fn values(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, M)
}

fn grid() -> GridSpec {
    GridSpec::new(1, 1.0, M).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seminorm_is_p_homogeneous(k in kernel(), v in values(-1.0, 1.0), t in -4.0f64..4.0) {
        prop_assume!(t.abs() > 1e-3);
        let disc = Discretization::new(grid(), k).unwrap();
        let u = GridFunction::new(grid(), v).unwrap();
        let s = disc.seminorm(&u).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(rel(disc.seminorm(&u.scaled(t)).unwrap(), t.abs().powf(k.p()) * s) < 1e-11);
    }

    #[test]
    fn operator_is_odd_and_homogeneous(k in kernel(), v in values(-1.0, 1.0), t in 0.1f64..4.0) {
        let disc = Discretization::new(grid(), k).unwrap();
        let u = GridFunction::new(grid(), v).unwrap();
        let a = disc.apply(&u).unwrap();
        let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let at = disc.apply(&u.scaled(-t)).unwrap();
        for (x, y) in a.iter().zip(&at) {
            prop_assert!((y + t.powf(k.p() - 1.0) * x).abs() <= 1e-11 * t.powf(k.p() - 1.0) * scale);
        }
    }

    #[test]
    fn weak_form_equals_pairing_with_operator(k in kernel(), v in values(-1.0, 1.0), w in values(-1.0, 1.0)) {
        let disc = Discretization::new(grid(), k).unwrap();
        let u = GridFunction::new(grid(), v).unwrap();
        let phi = GridFunction::new(grid(), w).unwrap();
        prop_assert!(disc.weak_strong_residual(&u, &phi).unwrap() < 1e-12);
    }

    #[test]
    fn linear_form_is_symmetric(s in 0.1f64..0.95, v in values(-1.0, 1.0), w in values(-1.0, 1.0)) {
        let disc = Discretization::new(grid(), KernelParams::new(1, s, 2.0).unwrap()).unwrap();
        let u = GridFunction::new(grid(), v).unwrap();
        let phi = GridFunction::new(grid(), w).unwrap();
        let a = disc.nonlinear_form(&u, &phi).unwrap();
        let b = disc.nonlinear_form(&phi, &u).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + b.abs() + 1.0));
    }

    #[test]
    fn rayleigh_quotient_is_scale_invariant(k in kernel(), v in values(0.05, 1.0), t in 0.01f64..100.0) {
        let g = Weight::indicator_minus(1.0, 0.1, 0.6).unwrap();
        let pb = WeightedProblem::new(Discretization::new(grid(), k).unwrap(), &g);
        let u = GridFunction::new(grid(), v).unwrap();
        prop_assume!(pb.constraint(&u).unwrap() > 1e-6);
        let f = pb.rayleigh_quotient(&u).unwrap();
        prop_assert!(rel(pb.rayleigh_quotient(&u.scaled(t)).unwrap(), f) < 1e-11);
    }

    #[test]
    fn picone_defect_is_nonnegative(k in kernel(), a in values(0.01, 1.0), b in values(0.0, 1.0)) {
        let disc = Discretization::new(grid(), k).unwrap();
        let u = GridFunction::new(grid(), a).unwrap();
        let v = GridFunction::new(grid(), b).unwrap();
        let d = picone_defect_with(&disc, &u, &v, 1e-8).unwrap();
        prop_assert!(d >= -1e-10 * disc.seminorm(&v).unwrap().max(1e-300));
    }

    #[test]
    fn exterior_tail_below_inscribed_ball(k in kernel(), x in -0.99f64..0.99) {
        let exact = exterior_tail(&[x], 1.0, &k).unwrap();
        let ball = inscribed_ball_tail(1.0 - x.abs(), &k);
        prop_assert!(exact > 0.0);
        prop_assert!(exact <= ball * (1.0 + 1e-12));
    }

    #[test]
    fn grid_function_text_round_trip(v in prop::collection::vec(-1e300f64..1e300, M)) {
        let u = GridFunction::new(grid(), v).unwrap();
        let back = grid_function_from_str(&grid_function_to_string(&u)).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
