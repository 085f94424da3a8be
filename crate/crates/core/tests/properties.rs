use proptest::prelude::*;
use rustc_hash::FxHashMap;

use cr_core::eval::{eval_complex, eval_exact, to_complex_point, Assignment};
use cr_core::expr::{vars_of, Expr};
use cr_core::forms::{Basis, CoframeStage, Form};
use cr_core::invariants::{compute_j, first_torsions, CrStructure, GroupParams};
use cr_core::jet::{apply_field, lie_bracket, make_frame, specialize_phi, JetContext, VectorField};
use cr_core::parser::{parse_expression, parse_phi};
use cr_core::poly::expand_canonical;
use cr_core::render::{render, Format};
use cr_core::sample::RealSampler;
use cr_core::scalar::GaussianRational;
use cr_core::var::{BaseVar, GroupVar, VarId};
use cr_core::zero::{is_identically_zero, ZeroMode, ZeroTester};

const BUDGET: usize = 2_000_000;

fn leaf(jets: bool, group: bool) -> BoxedStrategy<Expr> {
    let mut vars = vec![VarId::Z, VarId::ZB, VarId::U];
    if jets {
        vars.extend([Expr::jet(1, 0, 0), Expr::jet(0, 1, 0), Expr::jet(0, 0, 1), Expr::jet(1, 1, 0)]
            .iter()
            .map(|e| e.as_var().unwrap()));
    }
    if group {
        vars.extend([GroupVar::B, GroupVar::C, GroupVar::Cb].map(VarId::Group));
    }
    prop_oneof![
        proptest::sample::select(vars).prop_map(Expr::var),
        (-5i64..=5, 1i64..=4, -3i64..=3).prop_map(|(n, d, m)| Expr::rat(n, d) + Expr::imag(m, 2)),
    ]
    .boxed()
}

fn expr_with(jets: bool, group: bool) -> BoxedStrategy<Expr> {
    leaf(jets, group)
        .prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b.square() + Expr::int(2))),
                (inner.clone(), 2i64..=3).prop_map(|(a, n)| a.pow(n)),
                inner.prop_map(|a| a.conj()),
            ]
        })
        .boxed()
}

fn expr() -> BoxedStrategy<Expr> {
    expr_with(true, false)
}

fn canonical_zero(e: &Expr) -> bool {
    expand_canonical(e, BUDGET).expect("fits the budget").is_zero()
}

fn probably_zero(e: &Expr) -> bool {
    ZeroTester::new(12, 11).test_many(std::slice::from_ref(e)).unwrap()[0].is_zero()
}

fn points(roots: &[Expr], seed: u64, n: usize) -> Vec<Assignment> {
    let vars = vars_of(roots);
    let mut s = RealSampler::new(seed);
    (0..n).map(|_| s.draw(&vars, &Assignment::new())).collect()
}

fn same_value(a: &Expr, b: &Expr, seed: u64) -> bool {
    points(&[a.clone(), b.clone()], seed, 6).iter().all(|p| match (eval_exact(a, p), eval_exact(b, p)) {
        (Ok(x), Ok(y)) => x == y,
        _ => true,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugation_is_an_involutive_automorphism(a in expr(), b in expr()) {
        prop_assert!(canonical_zero(&(a.conj().conj() - &a)));
        prop_assert!(canonical_zero(&((&a * &b).conj() - a.conj() * b.conj())));
        prop_assert!(canonical_zero(&((&a + &b).conj() - a.conj() - b.conj())));
        prop_assert!(canonical_zero(&((&a / (b.square() + 2)).conj() - a.conj() / (b.conj().square() + 2))));
    }

    #[test]
    fn evaluation_commutes_with_substitution(e in expr(), by in expr(), seed in any::<u64>()) {
        let mut map = FxHashMap::default();
        map.insert(VarId::Z, by.clone());
        let substituted = e.substitute(&map);
        for p in points(&[e.clone(), by.clone()], seed, 4) {
            let (Ok(lhs), Ok(v)) = (eval_exact(&substituted, &p), eval_exact(&by, &p)) else { continue };
            let mut q = p.clone();
            q.insert(VarId::Z, v);
            if let Ok(rhs) = eval_exact(&e, &q) {
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn canonical_form_is_faithful_and_idempotent(e in expr(), seed in any::<u64>()) {
        let c = expand_canonical(&e, BUDGET).unwrap();
        prop_assert!(same_value(&c.to_expr(), &e, seed));
        prop_assert_eq!(expand_canonical(&c.to_expr(), BUDGET).unwrap(), c);
    }

    #[test]
    fn zero_test_modes_agree(a in expr(), b in expr(), seed in any::<u64>()) {
        let identity = (&a + &b).square() - a.square() - Expr::int(2) * &a * &b - b.square();
        let fresh = ZeroMode::Probabilistic { trials: 20, seed };
        prop_assert!(is_identically_zero(&identity, &ZeroMode::canonical()).unwrap().is_zero());
        prop_assert!(is_identically_zero(&identity, &fresh).unwrap().is_zero());
        let e = &a - &b;
        let exact = is_identically_zero(&e, &ZeroMode::canonical()).unwrap().is_zero();
        prop_assert_eq!(exact, is_identically_zero(&e, &fresh).unwrap().is_zero());
    }

    #[test]
    fn nonzero_verdicts_carry_a_checkable_witness(e in expr(), seed in any::<u64>()) {
        let v = is_identically_zero(&e, &ZeroMode::Probabilistic { trials: 20, seed }).unwrap();
        if let Some(w) = v.witness() {
            prop_assert!(!w.value.is_zero());
            prop_assert_eq!(eval_exact(&e, &w.point).unwrap(), w.value.clone());
        }
    }

    #[test]
    fn plain_rendering_parses_back(e in expr_with(true, true), seed in any::<u64>()) {
        let text = render(&e, Format::Plain).unwrap();
        let back = parse_expression(&text).unwrap();
        prop_assert!(same_value(&back, &e, seed), "{}", text);
    }

    #[test]
    fn parse_phi_accepts_exactly_the_real_expressions(e in expr_with(false, false)) {
        let real = &e + e.conj();
        let text = render(&real, Format::Plain).unwrap();
        prop_assert!(parse_phi(&text).is_ok());
        let text = render(&e, Format::Plain).unwrap();
        let is_real = canonical_zero(&(e.conj() - &e));
        prop_assert_eq!(parse_phi(&text).is_ok(), is_real);
    }

    #[test]
    fn exact_and_double_precision_agree(e in expr(), seed in any::<u64>()) {
        for p in points(std::slice::from_ref(&e), seed, 3) {
            let (Ok(x), Ok(y)) = (eval_exact(&e, &p), eval_complex(&e, &to_complex_point(&p))) else { continue };
            let x = x.to_complex64();
            prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0), "{} vs {}", x, y);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn total_derivatives_commute(e in expr()) {
        let ctx = JetContext::default();
        let d = |e: &Expr, v| ctx.total_derivative(e, v).unwrap();
        for (x, y) in [(BaseVar::Z, BaseVar::U), (BaseVar::Z, BaseVar::Zb), (BaseVar::Zb, BaseVar::U)] {
            prop_assert!(canonical_zero(&(d(&d(&e, x), y) - d(&d(&e, y), x))));
        }
    }

    #[test]
    fn total_derivative_intertwines_with_conjugation(e in expr()) {
        let ctx = JetContext::default();
        let lhs = ctx.total_derivative(&e, BaseVar::Z).unwrap().conj();
        let rhs = ctx.total_derivative(&e.conj(), BaseVar::Zb).unwrap();
        prop_assert!(canonical_zero(&(lhs - rhs)));
    }

    #[test]
    fn lie_bracket_satisfies_jacobi(
        x in [expr_with(false, false), expr_with(false, false), expr_with(false, false)],
        y in [expr_with(false, false), expr_with(false, false), expr_with(false, false)],
        w in [expr_with(false, false), expr_with(false, false), expr_with(false, false)],
    ) {
        let ctx = JetContext::default();
        let f = |c: [Expr; 3]| { let [a, b, d] = c; VectorField::new(a, b, d) };
        let (x, y, w) = (f(x), f(y), f(w));
        let br = |a: &VectorField, b: &VectorField| lie_bracket(&ctx, a, b).unwrap();
        let j = br(&x, &br(&y, &w)).add(&br(&y, &br(&w, &x))).add(&br(&w, &br(&x, &y)));
        for (c, _) in j.components() {
            prop_assert!(probably_zero(c));
        }
    }

    #[test]
    fn conjugation_intertwines_the_frame(e in expr()) {
        let ctx = JetContext::default();
        let frame = make_frame(&ctx).unwrap();
        let lhs = apply_field(&ctx, &frame.l, &e).unwrap().conj();
        let rhs = apply_field(&ctx, &frame.lbar, &e.conj()).unwrap();
        prop_assert!(probably_zero(&(lhs - rhs)));
    }

    #[test]
    fn specialization_is_a_homomorphism(a in expr(), b in expr()) {
        let phi = parse_phi("z*zb + u*z^2*zb^2 + u^2").unwrap();
        let s = |e: &Expr| specialize_phi(e, &phi).unwrap();
        prop_assert!(probably_zero(&(s(&(&a * &b)) - s(&a) * s(&b))));
        prop_assert!(probably_zero(&(s(&(&a + &b)) - s(&a) - s(&b))));
    }
}

fn lifted_coefs() -> impl Strategy<Value = Vec<Expr>> {
    proptest::collection::vec(expr_with(true, true), 7)
}

fn one_form(coefs: &[Expr], basis: Basis) -> Form {
    let pairs: Vec<(usize, Expr)> = coefs.iter().cloned().enumerate().collect();
    Form::one_form(basis, &pairs)
}

fn components_vanish(f: &Form) -> bool {
    f.terms().all(|(_, c)| probably_zero(c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn d_squared_vanishes(f in expr_with(true, true), coefs in lifted_coefs()) {
        let cr = CrStructure::generic().unwrap();
        let st = CoframeStage::lifted(&cr);
        let scalar = Form::scalar(f, Basis::Coordinate);
        prop_assert!(components_vanish(&st.d(&st.d(&scalar).unwrap()).unwrap()));
        let w = one_form(&coefs, Basis::Coordinate);
        prop_assert!(components_vanish(&st.d(&st.d(&w).unwrap()).unwrap()));
    }

    #[test]
    fn change_of_basis_round_trips(a in lifted_coefs(), b in lifted_coefs()) {
        let cr = CrStructure::generic().unwrap();
        let st = CoframeStage::lifted(&cr);
        for basis in [Basis::Coordinate, Basis::Lifted] {
            let w = one_form(&a, basis).wedge(&one_form(&b, basis)).unwrap();
            for f in [one_form(&a, basis), w] {
                let back = match basis {
                    Basis::Coordinate => st.to_coordinate_basis(&st.to_lifted_basis(&f).unwrap()).unwrap(),
                    Basis::Lifted => st.to_lifted_basis(&st.to_coordinate_basis(&f).unwrap()).unwrap(),
                };
                prop_assert!(components_vanish(&back.sub(&f).unwrap()));
            }
        }
    }

    #[test]
    fn wedge_is_graded_commutative(a in lifted_coefs(), b in lifted_coefs(), c in lifted_coefs()) {
        let (x, y, z) = (
            one_form(&a, Basis::Coordinate),
            one_form(&b, Basis::Coordinate),
            one_form(&c, Basis::Coordinate),
        );
        prop_assert!(components_vanish(&x.wedge(&x).unwrap()));
        prop_assert!(components_vanish(&x.wedge(&y).unwrap().add(&y.wedge(&x).unwrap()).unwrap()));
        let left = x.wedge(&y).unwrap().wedge(&z).unwrap();
        let right = x.wedge(&y.wedge(&z).unwrap()).unwrap();
        prop_assert!(components_vanish(&left.sub(&right).unwrap()));
        prop_assert!(components_vanish(&x.wedge(&y).unwrap().wedge(&z).unwrap().sub(&z.wedge(&x.wedge(&y).unwrap()).unwrap()).unwrap()));
    }

    #[test]
    fn torsions_are_weighted_homogeneous(l in 1i64..=9, m in 1i64..=9) {
        let cr = CrStructure::generic().unwrap();
        let gp = GroupParams::symbolic();
        let (lam, mu) = (Expr::int(l), Expr::int(m));
        let mut map = FxHashMap::default();
        for (g, k) in [(GroupVar::B, &lam), (GroupVar::C, &lam), (GroupVar::Bb, &mu), (GroupVar::Cb, &mu)] {
            map.insert(VarId::Group(g), k * Expr::var(VarId::Group(g)));
        }
        map.insert(VarId::Group(GroupVar::S), Expr::var(VarId::Group(GroupVar::S)) / (&lam * &mu));
        let t = first_torsions(&cr, &gp);
        let check = |e: &Expr, p: i64, q: i64| probably_zero(&(e.substitute(&map) - lam.pow(p) * mu.pow(q) * e));
        prop_assert!(check(&t.v1, -1, -1));
        prop_assert!(check(&t.v2, 0, -2));
        prop_assert!(check(&t.u1, -1, 0));
        prop_assert!(check(&compute_j(&cr, &gp).unwrap(), -1, -3));
    }
}

#[test]
fn precedence_follows_the_usual_conventions() {
    let parse = |s: &str| parse_expression(s).unwrap();
    let (a, b, c) = (Expr::var(VarId::Z), Expr::var(VarId::ZB), Expr::var(VarId::U));
    assert!(canonical_zero(&(parse("z+zb*u") - (&a + &b * &c))));
    assert!(canonical_zero(&(parse("z/zb/u") - (&a / &b) / &c)));
    assert!(parse_expression("z^2^3").is_err());
    assert!(canonical_zero(&(parse("-z^2") + a.square())));
}

#[test]
fn fixture_points_are_conjugate_consistent() {
    let e = Expr::var(VarId::Z) * Expr::jet(2, 1, 0);
    for p in points(&[e, Expr::var(VarId::U)], 3, 5) {
        assert_eq!(p[&VarId::ZB], p[&VarId::Z].conj());
        assert!(p[&VarId::U].is_real());
        let j = Expr::jet(2, 1, 0).as_var().unwrap();
        assert_eq!(p[&j.conj()], p[&j].conj());
        assert_ne!(p[&VarId::Z], GaussianRational::from_int(1000));
    }
}
