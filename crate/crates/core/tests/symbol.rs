use hypocalc::dsl::parse_symbol;
use hypocalc::symbol::{sample, seminorm, SymbolClassParams, TorusGrid};
use hypocalc::C64;
use proptest::prelude::*;

const SYMBOLS: [&str; 5] = [
    "(2+sin(x1))*(1+xi1^2)+5",
    "bracket(xi)^1.5 * exp(cos(x1))",
    "xi1 * cos(3*x1) + bracket(xi)",
    "log(bracket(xi)) * (1 + 0.5*sin(x1))",
    "exp(i*x1) * xi1^2 / bracket(xi)",
];

fn class2() -> SymbolClassParams {
    SymbolClassParams::new(2.0, 1.0, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seminorms_are_homogeneous(
        idx in 0usize..SYMBOLS.len(),
        re in -5.0f64..5.0,
        im in -5.0f64..5.0,
        al in 0usize..3,
        be in 0usize..3,
    ) {
        let g = TorusGrid::new(1, 16).unwrap();
        let a = parse_symbol(SYMBOLS[idx], 1, 1).unwrap();
        let c = C64::new(re, im);
        let q = seminorm::<f64>(&a, &[al], &[be], class2(), &g).unwrap();
        let qc = seminorm::<f64>(&a.scaled(c), &[al], &[be], class2(), &g).unwrap();
        prop_assert!((qc - c.norm() * q).abs() <= 1e-12 * (c.norm() * q).max(1e-300));
    }
}

#[test]
fn seminorms_grow_with_the_grid() {
    for text in SYMBOLS {
        let a = parse_symbol(text, 1, 1).unwrap();
        for (al, be) in [(0, 0), (1, 0), (0, 1), (2, 1)] {
            let mut prev = 0.0;
            for p in [8, 16, 32, 64] {
                let q = seminorm::<f64>(&a, &[al], &[be], class2(), &TorusGrid::new(1, p).unwrap()).unwrap();
                assert!(q >= prev, "{text} ({al},{be}) P={p}: {q} < {prev}");
                prev = q;
            }
        }
    }
}

#[test]
fn x_independent_symbols_have_no_x_seminorms() {
    let g = TorusGrid::new(2, 16).unwrap();
    let a = parse_symbol("bracket(xi)^2 + xi1*xi2 + 1", 2, 1).unwrap();
    for beta in [[1, 0], [0, 1], [1, 1], [0, 2]] {
        for alpha in [[0, 0], [1, 0], [0, 1]] {
            assert!(seminorm::<f64>(&a, &alpha, &beta, class2(), &g).unwrap() <= 1e-12);
        }
    }
    assert!(seminorm::<f64>(&a, &[0, 0], &[0, 0], class2(), &g).unwrap() > 0.5);
}

#[test]
fn exponential_growth_is_outside_every_class() {
    let a = parse_symbol("exp(xi1)", 1, 1).unwrap();
    for m in [2.0, 8.0] {
        let class = SymbolClassParams::new(m, 1.0, 0.0).unwrap();
        let qs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&p| seminorm::<f64>(&a, &[0], &[0], class, &TorusGrid::new(1, p).unwrap()).unwrap())
            .collect();
        assert!(qs.windows(2).all(|w| w[1].is_finite() && w[1] > 10.0 * w[0]), "{qs:?}");
        assert!(qs[2] > 1e9 * qs[0], "{qs:?}");
    }
}

#[test]
fn lattice_seminorm_tracks_exact_seminorm() {
    let g = TorusGrid::new(1, 64).unwrap();
    let a = parse_symbol("(2+sin(x1))*(1+xi1^2)", 1, 1).unwrap().with_class(class2());
    let tab = sample::<f64>(&a, &g).unwrap();
    let exact = seminorm::<f64>(&a, &[0], &[1], class2(), &g).unwrap();
    let lattice = tab.seminorm(&[0], &[1], class2(), 0).unwrap();
    assert!((exact - lattice).abs() < 1e-10);
    // second central difference of a quadratic is exact
    let e2 = seminorm::<f64>(&a, &[2], &[0], class2(), &g).unwrap();
    let l2 = tab.seminorm(&[2], &[0], class2(), 2).unwrap();
    assert!(l2 <= e2 * (1.0 + 1e-12) && l2 > 0.99 * e2);
}

#[test]
fn rejects_bad_class() {
    assert!(SymbolClassParams::new(1.0, 0.5, 0.7).is_err());
    assert!(SymbolClassParams::new(1.0, 0.0, 0.0).is_err());
    assert!(TorusGrid::new(1, 12).is_err());
}
