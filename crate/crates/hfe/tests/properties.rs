use proptest::prelude::*;

use hfe::frames::{alpha, alpha_tilde, delta_l, delta_l_tilde, delta_l_wc, pfaffian, phi, phi_inv};
use hfe::gf2::Gf2System;
use hfe::groups::{ml_mul, mp_mul};
use hfe::linalg::{self, c, principal_sqrt, track_sqrt, CMat, C, ONE};
use hfe::report::fmt_float;
use hfe::{corpus, sampling, scenario, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn rel_m(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn laplace_det(m: &CMat) -> C {
    let n = m.nrows();
    if n == 0 {
        return ONE;
    }
    (0..n)
        .map(|j| {
            let minor = m.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            m[(0, j)] * sign * laplace_det(&minor)
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ml_product_is_associative(seed in any::<u64>(), n in 1usize..5) {
        let t = tol();
        let mut r = sampling::rng(seed);
        let [x, y, z] = [0; 3].map(|_| sampling::ml(n, &mut r, &t).unwrap());
        let left = ml_mul(&ml_mul(&x, &y, &t).unwrap(), &z, &t).unwrap();
        let right = ml_mul(&x, &ml_mul(&y, &z, &t).unwrap(), &t).unwrap();
        prop_assert!(rel_m(&left.a, &right.a) < 1e-12);
        prop_assert!(rel(left.z, right.z) < 1e-12);
        prop_assert!(rel(left.z * left.z, laplace_det(&left.a)) < 1e-9);
    }

    #[test]
    fn ml_inverse_is_the_identity_sheet(seed in any::<u64>(), n in 1usize..5) {
        let t = tol();
        let x = sampling::ml(n, &mut sampling::rng(seed), &t).unwrap();
        let e = ml_mul(&x, &x.inverse(&t).unwrap(), &t).unwrap();
        prop_assert!(rel_m(&e.a, &linalg::identity(n)) < 1e-9);
        prop_assert!(rel(e.z, ONE) < 1e-9);
    }

    #[test]
    fn tracked_root_follows_the_phase(omega in -40.0f64..40.0, radius in 0.2f64..5.0) {
        // f(t) = r e^{iωt} has the continuous root √r e^{iωt/2}.
        let f = |t: f64| Ok(C::from_polar(radius, omega * t));
        let s = track_sqrt(f, C::new(radius.sqrt(), 0.0), &tol()).unwrap();
        prop_assert!(rel(s, C::from_polar(radius.sqrt(), omega / 2.0)) < 1e-9);
    }

    #[test]
    fn principal_root_squares_back(re in -1e3f64..1e3, im in -1e3f64..1e3) {
        let w = c(re, im);
        let s = principal_sqrt(w);
        prop_assert!(s.re >= 0.0);
        prop_assert!((s * s - w).norm() <= 1e-12 * w.norm().max(1.0));
    }

    #[test]
    fn pfaffian_squares_to_det(seed in any::<u64>(), m in 1usize..4) {
        let mut r = sampling::rng(seed);
        let g = sampling::gl(2 * m, &mut r);
        let a = &g - g.transpose();
        let p = pfaffian(&a);
        prop_assert!(rel(p * p, laplace_det(&a)) < 1e-9);
    }

    #[test]
    fn gf2_solves_planted_systems(
        ncols in 1usize..90,
        planted in proptest::collection::vec(any::<bool>(), 90),
        rows in proptest::collection::vec(proptest::collection::vec(0usize..90, 1..6), 0..40),
    ) {
        let mut sys = Gf2System::new(ncols);
        for vars in &rows {
            let vars: Vec<usize> = vars.iter().map(|v| v % ncols).collect();
            let rhs = vars.iter().fold(false, |acc, &v| acc ^ planted[v]);
            sys.push(&vars, rhs);
        }
        let x = sys.solve().expect("a planted solution exists");
        prop_assert!(sys.satisfied_by(&x));
        prop_assert!(sys.satisfied_by(&planted[..ncols]));
        prop_assert!(sys.rank() <= ncols.min(sys.nrows()));
    }

    #[test]
    fn phi_roundtrips_on_the_ball(seed in any::<u64>(), n in 1usize..5) {
        let t = tol();
        let mut r = sampling::rng(seed);
        let w = sampling::ball(n, 0.99, &mut r);
        let cm = sampling::gl(n, &mut r);
        let (w2, c2) = phi(&phi_inv(&w, &cm), &t).unwrap();
        prop_assert!((&w2 - &w).norm() < 1e-10);
        prop_assert!(rel_m(&c2, &cm) < 1e-10);
    }

    #[test]
    fn alpha_tilde_is_a_cocycle(seed in any::<u64>(), n in 1usize..3) {
        let t = tol();
        let mut r = sampling::rng(seed);
        let g = sampling::mp(n, &mut r, &t).unwrap();
        let h = sampling::mp(n, &mut r, &t).unwrap();
        let w = sampling::ball(n, 0.8, &mut r);
        let (hw, _) = alpha(&h.g, &w, &t).unwrap();
        let gh = mp_mul(&g, &h, &t).unwrap();
        let lhs = alpha_tilde(&gh, &w, &t).unwrap();
        let rhs = ml_mul(&alpha_tilde(&g, &hw, &t).unwrap(), &alpha_tilde(&h, &w, &t).unwrap(), &t).unwrap();
        prop_assert!(rel_m(&lhs.a, &rhs.a) < 1e-8);
        prop_assert!(rel(lhs.z, rhs.z) < 1e-8);
    }

    #[test]
    fn reduced_root_squares_to_delta_l(seed in any::<u64>(), n in 1usize..4, k in 0usize..3) {
        prop_assume!(k < n);
        let t = tol();
        let mut r = sampling::rng(seed);
        let a = sampling::real_gl(k, &mut r);
        let x1 = sampling::reduced_meta_frame(n, &a, &mut r, &t).unwrap();
        let x2 = sampling::reduced_meta_frame(n, &a, &mut r, &t).unwrap();
        let dl = delta_l(&x1.project(), &x2.project(), k, &t).unwrap();
        let wc = delta_l_wc((&x1.w, &x1.c.a), (&x2.w, &x2.c.a), k, &t).unwrap();
        let root = delta_l_tilde(&x1, &x2, k, &t).unwrap();
        prop_assert!(rel(dl, wc) < 1e-9);
        prop_assert!(rel(root * root, dl) < 1e-9);
    }

    #[test]
    fn float_format_keeps_twelve_digits(x in -1e200f64..1e200) {
        let back: f64 = fmt_float(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }

    #[test]
    fn tolerance_overrides_need_positive_numbers(x in -10.0f64..10.0) {
        let mut t = tol();
        let ok = t.apply_override(&format!("rel={x}")).is_ok();
        prop_assert_eq!(ok, x > 0.0);
        if ok {
            prop_assert_eq!(t.rel, x);
        }
    }

    #[test]
    fn parse_rejects_garbage_without_panicking(s in "\\PC{0,200}") {
        let _ = scenario::parse(&s);
    }

    #[test]
    fn truncated_corpus_files_fail_cleanly(which in 0usize..5, cut in 0.0f64..1.0) {
        let text = corpus::SCENARIOS[which].1;
        let mut end = (text.len() as f64 * cut) as usize;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        if let Ok(sc) = scenario::parse(&text[..end]) {
            let _ = scenario::load(sc, tol());
        }
    }
}
