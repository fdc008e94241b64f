use degor_core::de::{de_residual, grid_around, residual_sweep, sign_gauge, GammaField, Point, TrivialField};
use degor_core::deform::{self, make_isotropic_d, omega_b_fields, random_symmetric, DeformationDirection, SpecialTriple};
use degor_core::exec::Exec;
use degor_core::fock::LoopElement;
use degor_core::hurwitz::{Hurwitz0Field, PolyMap};
use degor_core::linalg::{self, CMat, C64};
use degor_core::wave::{PathInU, WaveJet};
use proptest::prelude::*;

fn cplx(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b))
}

fn point(n: usize, r: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(cplx(r), n).prop_map(Point::new)
}

fn entries(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(cplx(1.0), n * n)
}

fn parity_matrix(n: usize, ell: usize, raw: Vec<C64>) -> CMat {
    let a = CMat::from_vec(n, n, raw);
    if ell % 2 == 1 {
        (&a + a.transpose()) * C64::new(0.5, 0.0)
    } else {
        (&a - a.transpose()) * C64::new(0.5, 0.0)
    }
}

fn signs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1.0 } else { -1.0 }), n)
}

fn quartic() -> Hurwitz0Field {
    Hurwitz0Field::new(PolyMap::power_minus_linear(4).unwrap()).unwrap().without_seed_cache()
}

fn hurwitz_triple(g: usize, seed: u64) -> SpecialTriple {
    let field = Hurwitz0Field::new(PolyMap::power_minus_linear(5).unwrap()).unwrap().without_seed_cache();
    let base = field.base_point();
    let end = base.offset(&[C64::new(0.1, 0.05), C64::new(-0.08, 0.0), C64::new(0.02, 0.1), C64::new(0.0, -0.05)]);
    omega_b_fields(&field, &make_isotropic_d(4, g, seed).unwrap(), &PathInU::straight(&base, &end, 30)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_is_sign_gauge_invariant(s in signs(3), off in point(3, 0.04)) {
        let base = quartic().base_point();
        let u = base.offset(off.coords());
        let plain = de_residual(&quartic(), &u, 1e-4).unwrap();
        let gauged = de_residual(&sign_gauge(quartic(), &s).unwrap(), &u, 1e-4).unwrap();
        prop_assert!((plain.max_flatness - gauged.max_flatness).abs() < 1e-12);
        prop_assert!((plain.max_translation - gauged.max_translation).abs() < 1e-12);
    }

    #[test]
    fn trivial_jet_satisfies_ladder(u in point(4, 1.0)) {
        prop_assert!(WaveJet::trivial(&u, 5).max_orthogonality_defect() < 1e-13);
    }

    #[test]
    fn delta_gamma_r_is_symmetric(u in point(3, 0.8), ell in 1usize..=4, raw in entries(3)) {
        let r = parity_matrix(3, ell, raw);
        let dir = DeformationDirection::lower(ell, r).unwrap();
        let dg = deform::delta_gamma_r(&WaveJet::trivial(&u, ell), &dir).unwrap();
        prop_assert!(linalg::symmetry_defect(&dg) < 1e-10);
    }

    #[test]
    fn wrong_parity_is_rejected(ell in 1usize..=4, raw in entries(3)) {
        let m = parity_matrix(3, ell + 1, raw);
        prop_assume!(linalg::max_abs(&m) > 1e-6);
        let is_parity_error = matches!(DeformationDirection::lower(ell, m), Err(degor_core::DegorError::ParityViolation { .. }));
        prop_assert!(is_parity_error);
    }

    #[test]
    fn shramchenko_matches_unit_slice(seed in 0u64..10_000) {
        let t = hurwitz_triple(2, 4);
        let m = random_symmetric(2, seed, 1.0);
        prop_assume!(linalg::det(&m).norm() > 1e-3);
        let inv = linalg::try_inverse(&m).unwrap();
        let a = deform::shramchenko_form(&t, &m).unwrap();
        let b = deform::special_flow(&t, &inv, C64::new(1.0, 0.0)).unwrap().gamma;
        prop_assert!(linalg::max_abs_diff(&a, &b) < 1e-9);
    }

    #[test]
    fn flow_keeps_b_symmetric_and_composes(seed in 0u64..10_000, e1 in -0.4f64..0.4, e2 in -0.4f64..0.4) {
        let t = hurwitz_triple(2, 4);
        let m = random_symmetric(2, seed, 1.0);
        let one = deform::special_flow(&t, &m, C64::new(e1, 0.0)).unwrap();
        prop_assert!(linalg::symmetry_defect(&one.b) < 1e-12);
        // the flow is the exponential of a constant vector field
        let two = deform::special_flow(&one, &m, C64::new(e2, 0.0)).unwrap();
        let direct = deform::special_flow(&t, &m, C64::new(e1 + e2, 0.0)).unwrap();
        prop_assert!(linalg::max_abs_diff(&two.gamma, &direct.gamma) < 1e-10);
        prop_assert!(linalg::max_abs_diff(&two.omega, &direct.omega) < 1e-10);
        prop_assert!(linalg::max_abs_diff(&two.b, &direct.b) < 1e-10);
    }

    #[test]
    fn tilde_gauge_turns_flow_into_shramchenko(seed in 0u64..10_000, er in -0.5f64..0.5, ei in -0.5f64..0.5) {
        let t = hurwitz_triple(2, 8);
        let m = random_symmetric(2, seed, 1.0);
        let eps = C64::new(er, ei);
        let tt = deform::tilde_gauge(&t).unwrap();
        let lhs = match deform::special_flow(&tt, &m, eps) { Ok(x) => x.gamma, Err(_) => return Ok(()) };
        let rhs = deform::shramchenko_form(&t, &(&m * -eps)).unwrap();
        prop_assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-8 * (1.0 + linalg::max_abs(&lhs)));
    }

    #[test]
    fn exponentials_are_twisted_orthogonal(ell in 1usize..=3, er in -0.5f64..0.5, upper in prop::bool::ANY, raw in entries(2)) {
        let m = parity_matrix(2, ell, raw);
        let dir = if upper { DeformationDirection::upper(ell, m) } else { DeformationDirection::lower(ell, m) }.unwrap();
        let a = LoopElement::exp_direction(&dir, C64::new(er, 0.0)).unwrap();
        prop_assert!(a.twisted_orthogonality_defect() < 1e-12);
    }

    #[test]
    fn point_json_roundtrip(u in point(5, 10.0)) {
        let s = serde_json::to_string(&u).unwrap();
        prop_assert_eq!(serde_json::from_str::<Point>(&s).unwrap(), u);
    }
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let field = quartic();
    let pts = grid_around(&field.base_point(), 0.05, 3);
    let a = residual_sweep(&field, &pts, 1e-4, Exec::Sequential).unwrap();
    let b = residual_sweep(&field, &pts, 1e-4, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trivial_field_residual_is_zero() {
    let f = TrivialField { n: 4 };
    assert_eq!(f.provenance(), degor_core::de::Provenance::Trivial);
    let r = de_residual(&f, &Point::zeros(4), 1e-4).unwrap();
    assert_eq!(r.max(), 0.0);
}
