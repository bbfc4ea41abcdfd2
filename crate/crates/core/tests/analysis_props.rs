use std::f64::consts::FRAC_PI_2;

use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subcheck::expr::parse;
use subcheck::geometry::{standard_j, MetricField};
use subcheck::submersion::{even_dimension_check, split_d1_d2, SubmersionMap, Verdict};

/// `x ↦ rows · x` on R^m with the flat metric and standard J.
fn linear_map(rows: &[Vec<f64>]) -> SubmersionMap {
    let m = rows[0].len();
    let comps = rows
        .iter()
        .map(|r| {
            let t: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(i, c)| format!("({c:?})*x{}", i + 1))
                .collect();
            parse(&t.join(" + "), m).unwrap()
        })
        .collect();
    SubmersionMap::new(comps, MetricField::euclidean(m), standard_j(m).unwrap()).unwrap()
}

fn orthonormal_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    (0..n).map(|i| q.column(i).iter().copied().collect()).collect()
}

/// Random unitary of C^k as a real 2k×2k matrix commuting with the standard J.
fn random_unitary(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| {
        Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let u = a.qr().q();
    DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let z = u[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (1, 0) => z.im,
            _ => -z.im,
        }
    })
}

fn unit(m: usize, i: usize) -> Vec<f64> {
    (0..m).map(|j| if j == i { 1.0 } else { 0.0 }).collect()
}

/// Horizontal basis of a map on C^(b1 + 2 b2 + b3) whose fiber is b1
/// complex lines plus b2 slant planes of angle θ.
fn structured_horizontal(b1: usize, b2: usize, b3: usize, theta: f64) -> Vec<Vec<f64>> {
    let m = 2 * (b1 + 2 * b2 + b3);
    let (c, s) = (theta.cos(), theta.sin());
    let mut h = Vec::new();
    for k in 0..b2 {
        let base = 2 * (b1 + 2 * k);
        h.push(unit(m, base + 3));
        let mut w = vec![0.0; m];
        w[base + 1] = -s;
        w[base + 2] = c;
        h.push(w);
    }
    for k in 0..b3 {
        let base = 2 * (b1 + 2 * b2 + k);
        h.push(unit(m, base));
        h.push(unit(m, base + 1));
    }
    h
}

fn rotate(u: &DMatrix<f64>, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| (u * nalgebra::DVector::from_column_slice(r)).iter().copied().collect())
        .collect()
}

#[test]
fn even_dimension_randomized_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut with_angle = 0;
    for trial in 0..1000 {
        let k = rng.gen_range(2..=4usize);
        let m = 2 * k;
        let n = rng.gen_range(1..m);
        let map = linear_map(&orthonormal_rows(&mut rng, n, m));
        let p: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = split_d1_d2(&map, &p).unwrap();
        if let Some(theta) = a.theta {
            let angled = a.verdict.has_angle() && theta < FRAC_PI_2 - 1e-6;
            if angled {
                with_angle += 1;
                assert!(n % 2 == 0, "trial {trial}: {:?} with θ = {theta} onto R^{n}", a.verdict);
            }
        }
        if let Some(ok) = even_dimension_check(&map, &a) {
            assert!(ok, "trial {trial}: theorem conclusion failed");
        }
        assert!(a.algebraic_residuals().iter().all(|&r| r < 1e-9), "trial {trial}");
    }
    assert!(with_angle > 50, "search too narrow: {with_angle} maps with an angle");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn structured_maps_classify_as_built(
        seed in any::<u64>(),
        b1 in 0..3usize,
        b2 in 0..3usize,
        b3 in 0..2usize,
        theta in 0.1..1.45f64,
    ) {
        prop_assume!(b2 + b3 > 0 && b1 + b2 > 0 && b1 + 2 * b2 + b3 <= 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = b1 + 2 * b2 + b3;
        let u = random_unitary(&mut rng, k);
        let map = linear_map(&rotate(&u, &structured_horizontal(b1, b2, b3, theta)));
        let p: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = split_d1_d2(&map, &p).unwrap();

        let expected = match (b1, b2) {
            (_, 0) => Verdict::Invariant,
            (0, _) => Verdict::Slant,
            _ => Verdict::SemiSlant,
        };
        prop_assert_eq!(a.verdict, expected);
        prop_assert_eq!(a.dims(), (2 * b1, 2 * b2));
        if b2 > 0 {
            prop_assert!((a.theta.unwrap() - theta).abs() < 1e-8);
            prop_assert!(a.jhat_residual().unwrap() < 1e-8);
            let coeffs: Vec<f64> = (0..a.d2.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            prop_assert!((a.direct_cos_angle(&coeffs) - theta.cos()).abs() < 1e-8);
        }
        prop_assert_eq!(even_dimension_check(&map, &a), Some(true));
        prop_assert!(a.algebraic_residuals().iter().all(|&r| r < 1e-9));
        prop_assert!(a.subspace_residuals().iter().all(|&r| r < 1e-9), "{:?}", a.subspace_residuals());
    }
}
