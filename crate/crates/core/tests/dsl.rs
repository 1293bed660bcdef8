use hypocalc::dsl::{differentiate, parse_symbol, preset, SymbolExpr};
use hypocalc::C64;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (-3.0f64..3.0).prop_map(|c| format!("{c:.3}")),
        Just("sin(x1)".to_string()),
        Just("cos(2*x1)".to_string()),
        Just("xi1".to_string()),
        Just("bracket(xi)".to_string()),
        Just("exp(cos(x1))".to_string()),
        (0.5f64..2.5).prop_map(|s| format!("bracket(xi)^{s:.2}")),
        Just("log(bracket(xi))".to_string()),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            inner.clone().prop_map(|a| format!("({a}) / (3 + sin(x1))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.prop_map(|a| format!("-({a})^2")),
        ]
    })
}

fn at(s: &SymbolExpr, x: f64, xi: f64) -> C64 {
    s.eval(&[x], &[xi]).unwrap()[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_derivatives_commute(text in expr(), x in 0.0f64..6.28, xi in -20.0f64..20.0) {
        let a = parse_symbol(&text, 1, 1).unwrap();
        let xi_x = differentiate(&differentiate(&a, &[1], &[0]).unwrap(), &[0], &[1]).unwrap();
        let x_xi = differentiate(&differentiate(&a, &[0], &[1]).unwrap(), &[1], &[0]).unwrap();
        let (u, v) = (at(&xi_x, x, xi), at(&x_xi, x, xi));
        prop_assert!((u - v).norm() <= 1e-12 * (1.0 + u.norm()), "{u} vs {v}");
    }

    #[test]
    fn derivatives_match_central_differences(text in expr(), x in 0.0f64..6.28, xi in -10.0f64..10.0) {
        let a = parse_symbol(&text, 1, 1).unwrap();
        let h = 1e-4;
        let scale = at(&a, x, xi).norm() + 1.0;
        let fd_xi = (at(&a, x, xi + h) - at(&a, x, xi - h)) / (2.0 * h);
        let fd_x = (at(&a, x + h, xi) - at(&a, x - h, xi)) / (2.0 * h);
        let d_xi = at(&differentiate(&a, &[1], &[0]).unwrap(), x, xi);
        let d_x = at(&differentiate(&a, &[0], &[1]).unwrap(), x, xi);
        for (d, fd) in [(d_xi, fd_xi), (d_x, fd_x)] {
            if d.norm() > 1e-2 * scale {
                prop_assert!((d - fd).norm() <= 1e-6 * d.norm(), "{text}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn print_then_parse_evaluates_identically(text in expr(), x in 0.0f64..6.28, xi in -50.0f64..50.0) {
        let a = parse_symbol(&text, 1, 1).unwrap();
        let b = parse_symbol(&a.to_string(), 1, 1).unwrap();
        prop_assert_eq!(at(&a, x, xi), at(&b, x, xi));
    }
}

#[test]
fn commuting_derivatives_in_two_dimensions() {
    let a = parse_symbol("(2 + sin(x1) * cos(x2)) * bracket(xi)^3 + xi1 * xi2 * cos(x1 - x2)", 2, 1).unwrap();
    let lhs = differentiate(&differentiate(&a, &[1, 0], &[0, 0]).unwrap(), &[0, 1], &[1, 1]).unwrap();
    let rhs = differentiate(&a, &[1, 1], &[1, 1]).unwrap();
    for (x, xi) in [([0.1, 2.0], [1.0, -3.0]), ([5.0, 0.4], [-7.5, 0.25])] {
        let (u, v) = (lhs.eval(&x, &xi).unwrap()[0], rhs.eval(&x, &xi).unwrap()[0]);
        assert!((u - v).norm() <= 1e-12 * (1.0 + u.norm()));
    }
}

#[test]
fn matrix_entries_differentiate_independently() {
    let a = parse_symbol("[[xi1^2, sin(x1)], [0, bracket(xi)]]", 1, 2).unwrap();
    let d = differentiate(&a, &[1], &[0]).unwrap();
    let v = d.eval(&[0.3], &[2.0]).unwrap();
    assert!((v[0] - 4.0).norm() < 1e-14);
    assert!(v[1].norm() < 1e-15 && v[2].norm() < 1e-15);
    assert!((v[3] - 2.0 / 5f64.sqrt()).norm() < 1e-14);
}

#[test]
fn presets_are_periodic_symbols() {
    for name in ["bracket_power 2", "variable_laplace", "rotated phase 0.5", "jordan2"] {
        let k = if name == "jordan2" { 2 } else { 1 };
        let a = preset(name, 1).unwrap();
        assert_eq!(a.k(), k);
        let u = a.eval(&[0.3], &[4.0]).unwrap();
        let v = a.eval(&[0.3 + std::f64::consts::TAU], &[4.0]).unwrap();
        for (p, q) in u.iter().zip(&v) {
            assert!((p - q).norm() <= 1e-12 * (1.0 + p.norm()));
        }
    }
}

#[test]
fn index_out_of_range_is_rejected() {
    assert!(parse_symbol("sin(x2)", 1, 1).is_err());
    assert!(parse_symbol("xi3", 2, 1).is_err());
    assert!(parse_symbol("foo(xi1)", 1, 1).is_err());
}
