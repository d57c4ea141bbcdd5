use num_complex::Complex64;
use proptest::prelude::*;
use sl2kms::algebra::AlgebraElement;
use sl2kms::funcspace::{FunctionExpr, Term};
use sl2kms::parse::parse_element;
use sl2kms::repr::{represent, TruncatedRep};

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn freq() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), -2.0..2.0f64]
}

fn function() -> impl Strategy<Value = FunctionExpr> {
    prop::collection::vec((coeff(), 0..=3u32, freq()), 1..4)
        .prop_map(|ts| FunctionExpr::from_terms(ts.into_iter().map(|(c, p, t)| Term::new(c, p, t))))
}

/// Up to three monomials with `m, n ≤ 2`.
fn element() -> impl Strategy<Value = AlgebraElement> {
    prop::collection::vec((0..=2u32, 0..=2u32, function()), 1..4).prop_map(|ms| {
        ms.into_iter().fold(AlgebraElement::zero(), |acc, (m, n, f)| acc + AlgebraElement::monomial(m, n, f))
    })
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shifts_compose(f in function(), a in -5.0..5.0f64, b in -5.0..5.0f64) {
        prop_assert!(f.shift(a).shift(b).approx_eq(&f.shift(a + b), 1e-12));
    }

    #[test]
    fn shift_moves_argument(f in function(), a in -5.0..5.0f64, x in -5.0..5.0f64) {
        prop_assert!(close(f.shift(a).evaluate(x), f.evaluate(x - a), 1e-12));
    }

    #[test]
    fn function_product_commutes_and_associates(f in function(), g in function(), h in function()) {
        prop_assert!(f.multiply(&g).approx_eq(&g.multiply(&f), 1e-14));
        prop_assert!(f.multiply(&g).multiply(&h).approx_eq(&f.multiply(&g.multiply(&h)), 1e-12));
    }

    #[test]
    fn conjugation(f in function(), g in function(), x in -5.0..5.0f64) {
        prop_assert_eq!(f.conjugate().conjugate(), f.clone());
        prop_assert!(f.multiply(&g).conjugate().approx_eq(&f.conjugate().multiply(&g.conjugate()), 1e-14));
        prop_assert!(close(f.conjugate().evaluate(x), f.evaluate(x).conj(), 1e-14));
    }

    #[test]
    fn display_round_trips(a in element()) {
        let back = parse_element(&a.to_string()).unwrap();
        prop_assert!(back.approx_eq(&a, 1e-15), "{} vs {}", a, back);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn algebra_product_associates(a in element(), b in element(), c in element()) {
        let left = (&a * &b) * c.clone();
        let right = &a * &(&b * &c);
        prop_assert!(left.approx_eq(&right, 1e-12));
    }

    #[test]
    fn involution_reverses_products(a in element(), b in element()) {
        prop_assert!((&a * &b).involution().approx_eq(&(&b.involution() * &a.involution()), 1e-12));
        prop_assert!(a.involution().involution().approx_eq(&a, 1e-14));
    }

    #[test]
    fn automorphism_is_multiplicative(a in element(), b in element(), re in -2.0..2.0f64, im in -1.0..1.0f64) {
        let z = Complex64::new(re, im);
        let lhs = (&a * &b).apply_automorphism(z);
        let rhs = &a.apply_automorphism(z) * &b.apply_automorphism(z);
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn representation_is_homomorphic(a in element(), b in element(), lambda in 0.2..4.0f64) {
        let rep = TruncatedRep::new(lambda, 64).unwrap();
        let ab = represent(&(&a * &b), &rep);
        let prod = represent(&a, &rep) * represent(&b, &rep);
        let reach = (a.degree() + b.degree()) as usize;
        for p in 0..rep.dim() - 1 - reach {
            let (u, v) = (ab.column(p), prod.column(p));
            let scale = 1.0 + u.norm().max(v.norm());
            prop_assert!((u - v).norm() <= 1e-10 * scale, "column {}", p);
        }
    }

    #[test]
    fn involution_is_adjoint(a in element(), lambda in 0.2..4.0f64) {
        let rep = TruncatedRep::new(lambda, 64).unwrap();
        let star = represent(&a.involution(), &rep);
        let adj = represent(&a, &rep).adjoint();
        let reach = a.degree() as usize;
        for p in 0..rep.dim() - 1 - reach {
            let (u, v) = (star.column(p), adj.column(p));
            prop_assert!((u - v).norm() <= 1e-10 * (1.0 + u.norm().max(v.norm())), "column {}", p);
        }
    }
}
