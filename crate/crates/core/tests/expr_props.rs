use proptest::prelude::*;

use subcheck::corpus;
use subcheck::expr::{eval_jet2, parse, BinOp, Expr, Func, Node, Params};
use subcheck::theorems::sample_points;

const N: usize = 4;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0..N).prop_map(Node::Var),
        (-3.0..3.0f64).prop_map(Node::Num),
        (0..20i32).prop_map(|k| Node::Num(k as f64)),
        Just(Node::Pi),
    ]
    .prop_map(|n| Expr::new(n, 0))
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        prop_oneof![
            inner.clone().prop_map(|e| Node::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Node::Binary(o, Box::new(a), Box::new(b))),
            (inner.clone(), -3..5i32).prop_map(|(e, k)| Node::Pow(Box::new(e), k)),
            (prop::sample::select(Func::ALL.to_vec()), inner).prop_map(|(f, e)| Node::Call(f, Box::new(e))),
        ]
        .prop_map(|n| Expr::new(n, 0))
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_round_trip(
        e in expr(),
        points in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, N), 10),
    ) {
        let text = e.to_string();
        let back = parse(&text, N).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        let params = Params::new();
        for p in &points {
            let Ok(a) = e.eval_f64(p, &params) else { continue };
            if !a.is_finite() {
                continue;
            }
            let b = back.eval_f64(p, &params).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            prop_assert!(close(a, b, 1e-12), "{text} at {p:?}: {a} vs {b}");
        }
    }

    #[test]
    fn hessian_symmetric_and_constants_flat(e in expr(), p in prop::collection::vec(-2.0..2.0f64, N)) {
        let Ok(j) = eval_jet2(&e, &p, &Params::new()) else { return Ok(()) };
        let h = j.hessian();
        for (i, row) in h.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                prop_assert!(close(v, h[k][i], 1e-12));
            }
        }
        if e.max_variable() == 0 {
            prop_assert!(j.gradient().iter().all(|&g| g == 0.0));
            prop_assert!(h.iter().flatten().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn precedence() {
    let none = Params::new();
    assert_eq!(parse("2+3*4", 1).unwrap().eval_f64(&[0.0], &none).unwrap(), 14.0);
    assert_eq!(parse("-x1^2", 1).unwrap().eval_f64(&[2.0], &none).unwrap(), -4.0);
    assert_eq!(parse("8/4/2", 1).unwrap().eval_f64(&[0.0], &none).unwrap(), 1.0);
    assert_eq!(parse("5-3-1", 1).unwrap().eval_f64(&[0.0], &none).unwrap(), 1.0);
}

#[test]
fn exp_sin_matches_central_differences() {
    let e = parse("exp(x1)*sin(x2)", 2).unwrap();
    let p = [0.3, 1.1];
    let j = eval_jet2(&e, &p, &Params::new()).unwrap();
    let (fd, _) = central(&e, &p, 1e-5);
    for (a, b) in j.gradient().iter().zip(&fd) {
        assert!(close(*a, *b, 1e-6), "{a} vs {b}");
    }
}

/// Central-difference gradient and Hessian (the latter from differences of
/// the exact gradient).
fn central(e: &Expr, p: &[f64], h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let none = Params::new();
    let n = p.len();
    let shifted = |i: usize, s: f64| {
        let mut q = p.to_vec();
        q[i] += s;
        q
    };
    let grad = (0..n)
        .map(|i| (e.eval_f64(&shifted(i, h), &none).unwrap() - e.eval_f64(&shifted(i, -h), &none).unwrap()) / (2.0 * h))
        .collect();
    let hess = (0..n)
        .map(|i| {
            let gp = eval_jet2(e, &shifted(i, h), &none).unwrap().gradient();
            let gm = eval_jet2(e, &shifted(i, -h), &none).unwrap().gradient();
            gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    (grad, hess)
}

fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-3)
}

#[test]
fn corpus_expressions_match_finite_differences() {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for entry in corpus::load_all_bundled(&Params::new()).unwrap() {
        for inst in &entry.instances {
            for e in &inst.expressions {
                for p in &sample_points(&inst.bounds, 5, 7) {
                    let j = eval_jet2(e, p, &Params::new()).unwrap();
                    let (g, h) = central(e, p, 1e-5);
                    let (jg, jh) = (j.gradient(), j.hessian());
                    let gscale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let hscale = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
                    for i in 0..p.len() {
                        worst = worst.max(rel_err(jg[i], g[i], gscale));
                        for k in 0..p.len() {
                            worst = worst.max(rel_err(jh[i][k], h[i][k], hscale));
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100, "only {checked} evaluations");
    assert!(worst < 1e-6, "worst relative error {worst:e}");
}
