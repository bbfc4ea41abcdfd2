use proptest::prelude::*;

use subcheck::expr::parse;
use subcheck::geometry::{christoffel, lie_bracket, riemann, ExprField, GeometryError, MetricField, VectorField};
use subcheck::real::{Dual, Real};

/// Warp functions of the first coordinate(s), positive on the sampled box.
fn warp() -> impl Strategy<Value = String> {
    (0..4usize, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(k, a, b)| match k {
        0 => format!("exp(({a:?})*x1)"),
        1 => format!("1.5 + ({a:?})*x1^2 + ({b:?})*x2"),
        2 => format!("2 + sin(({a:?})*x1 + ({b:?})*x2)"),
        _ => format!("sqrt(1 + x1^2 + ({b:?})^2*x2^2)"),
    })
}

fn warped(n1: usize, n2: usize, w: &str) -> MetricField {
    MetricField::warped(n1, n2, parse(w, n1 + n2).unwrap()).unwrap()
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.8..0.8f64, n)
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

/// Quadratic vector field on R^n with random coefficients.
fn poly_field(n: usize) -> impl Strategy<Value = ExprField> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 1 + 2 * n), n).prop_map(move |rows| {
        let texts: Vec<String> = rows
            .iter()
            .map(|c| {
                let mut t = format!("({:?})", c[0]);
                for i in 0..n {
                    t += &format!(
                        " + ({:?})*x{} + ({:?})*x{}*x{}",
                        c[1 + i],
                        i + 1,
                        c[1 + n + i],
                        i + 1,
                        (i + 1) % n + 1
                    );
                }
                t
            })
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        ExprField::parse(&refs).unwrap()
    })
}

struct Bracket<'a>(&'a ExprField, &'a ExprField);

impl VectorField for Bracket<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval<T: Real>(&self, p: &[T]) -> Result<Vec<T>, GeometryError> {
        lie_bracket(self.0, self.1, p)
    }
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn christoffel_symmetric(w in warp(), p in point(4)) {
        let g = warped(2, 2, &w);
        let gamma = christoffel::<f64>(&g, &p).unwrap();
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!(near(gamma.get(k, i, j), gamma.get(k, j, i), 1e-13));
                }
            }
        }
    }

    #[test]
    fn metric_compatible(w in warp(), p in point(4)) {
        // ∂_k g_ij = Γ^l_{ki} g_lj + Γ^l_{kj} g_il
        let g = warped(2, 2, &w);
        let gm = g.eval(&p).unwrap();
        let gamma = christoffel::<f64>(&g, &p).unwrap();
        for k in 0..4 {
            let e: Vec<f64> = (0..4).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
            let dg = g.eval(&Dual::seed(&p, &e)).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let rhs: f64 = (0..4)
                        .map(|l| gamma.get(l, k, i) * gm[(l, j)] + gamma.get(l, k, j) * gm[(i, l)])
                        .sum();
                    prop_assert!(near(dg[(i, j)].tangent_value(), rhs, 1e-12));
                }
            }
        }
    }

    #[test]
    fn first_bianchi_and_curvature_symmetries(
        w in warp(), p in point(4), x in vector(4), y in vector(4), z in vector(4), v in vector(4),
    ) {
        let r = riemann(&warped(2, 2, &w), &p).unwrap();
        let a = r.apply(&x, &y, &z);
        let b = r.apply(&y, &z, &x);
        let c = r.apply(&z, &x, &y);
        for i in 0..4 {
            prop_assert!((a[i] + b[i] + c[i]).abs() < 1e-9, "{:?}", (a[i], b[i], c[i]));
        }
        let rxyzv = r.covariant(&x, &y, &z, &v);
        prop_assert!(near(rxyzv, -r.covariant(&y, &x, &z, &v), 1e-10));
        prop_assert!(near(rxyzv, -r.covariant(&x, &y, &v, &z), 1e-10));
        prop_assert!(near(rxyzv, r.covariant(&z, &v, &x, &y), 1e-9));
    }

    #[test]
    fn bracket_antisymmetric(x in poly_field(3), y in poly_field(3), p in point(3)) {
        let xy = lie_bracket::<f64, _, _>(&x, &y, &p).unwrap();
        let yx = lie_bracket::<f64, _, _>(&y, &x, &p).unwrap();
        for i in 0..3 {
            prop_assert!(near(xy[i], -yx[i], 1e-14));
        }
    }

    #[test]
    fn jacobi_identity(x in poly_field(3), y in poly_field(3), z in poly_field(3), p in point(3)) {
        let a = lie_bracket::<f64, _, _>(&x, &Bracket(&y, &z), &p).unwrap();
        let b = lie_bracket::<f64, _, _>(&y, &Bracket(&z, &x), &p).unwrap();
        let c = lie_bracket::<f64, _, _>(&z, &Bracket(&x, &y), &p).unwrap();
        for i in 0..3 {
            prop_assert!((a[i] + b[i] + c[i]).abs() < 1e-12 * (1.0 + a[i].abs() + b[i].abs() + c[i].abs()));
        }
    }
}
