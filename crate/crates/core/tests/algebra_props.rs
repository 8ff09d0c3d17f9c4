//! Property tests for the polynomial layer.

use proptest::prelude::*;
use randinv::algebra::{real_roots, Poly, PolyMatrix};

fn poly_strategy(max_deg: usize) -> impl Strategy<Value = Poly<f64>> {
    proptest::collection::vec(-2.0..2.0f64, 1..=max_deg + 1).prop_map(Poly::new)
}

/// Sorted, well-separated roots starting near -3. Long runs of mutually
/// clustered roots are excluded on purpose: a run of k roots with tiny
/// gaps acts like a k-fold multiple root, whose locations are not
/// determined by f64 coefficients to anything like 1e-6 (an isolated tight
/// pair is fine; see `nearby_pair_resolved`).
fn planted_roots() -> impl Strategy<Value = Vec<f64>> {
    (1usize..=10).prop_flat_map(|n| {
        (proptest::collection::vec(0.15..0.8f64, n), -3.0..-2.0f64).prop_map(
            |(gaps, start)| {
                let mut x = start;
                gaps.into_iter()
                    .map(|g| {
                        x += g;
                        x
                    })
                    .collect()
            },
        )
    })
}

proptest! {
    #[test]
    fn product_evaluates_like_factor_product(
        a in poly_strategy(6),
        b in poly_strategy(6),
        xs in proptest::collection::vec(-2.0..2.0f64, 100),
    ) {
        let ab = &a * &b;
        let deg = (a.coeffs().len() + b.coeffs().len()) as i32;
        for x in xs {
            let want = a.eval(x) * b.eval(x);
            let got = ab.eval(x);
            let scale = (1.0 + a.max_abs_coeff())
                * (1.0 + b.max_abs_coeff())
                * x.abs().max(1.0).powi(deg);
            prop_assert!((got - want).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn planted_roots_recovered(roots in planted_roots()) {
        let p = Poly::from_roots(&roots);
        let found = real_roots(&p, 1e-9).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        for (f, r) in found.iter().zip(&roots) {
            prop_assert!((f - r).abs() <= 1e-6, "{} vs planted {}", f, r);
        }
    }

    #[test]
    fn adjugate_identity_on_symmetric_quadratic_matrices(
        k in 2usize..=4,
        seed_coeffs in proptest::collection::vec(-1.0..1.0f64, 48),
    ) {
        let mut it = seed_coeffs.into_iter().cycle();
        let mut entries = vec![Poly::zero(); k * k];
        for i in 0..k {
            for j in i..k {
                let e = Poly::new(vec![
                    it.next().unwrap(),
                    it.next().unwrap(),
                    it.next().unwrap(),
                ]);
                entries[i * k + j] = e.clone();
                entries[j * k + i] = e;
            }
        }
        let s = PolyMatrix::from_entries(k, entries);
        let (det, adj) = s.det_adj().unwrap();

        // Degree bound: each entry quadratic, so det has degree <= 2k.
        prop_assert!(det.degree().unwrap_or(0) <= 2 * k);

        let prod = s.matmul(&adj);
        let scale = det.max_abs_coeff().max(1.0);
        for i in 0..k {
            for j in 0..k {
                let expected = if i == j { det.clone() } else { Poly::zero() };
                let diff = &prod.entry(i, j).clone() - &expected;
                prop_assert!(
                    diff.max_abs_coeff() <= 1e-9 * scale,
                    "S*adj != det*I at ({}, {}), defect {}",
                    i, j, diff.max_abs_coeff()
                );
            }
        }
    }
}

#[test]
fn nearby_pair_resolved() {
    // Two roots 1e-3 apart are well separated relative to the achievable
    // accuracy and must both be found.
    let p = Poly::<f64>::from_roots(&[2.0, 2.001]);
    let r = real_roots(&p, 1e-9).unwrap();
    assert_eq!(r.len(), 2);
    assert!((r[0] - 2.0).abs() <= 1e-6);
    assert!((r[1] - 2.001).abs() <= 1e-6);
}

#[test]
fn algebra_works_in_f32() {
    let p = Poly::<f32>::from_roots(&[1.0, -1.5]);
    let roots = real_roots(&p, 1e-4).unwrap();
    assert_eq!(roots.len(), 2);
    assert!((roots[0] + 1.5).abs() < 1e-5);
    assert!((roots[1] - 1.0).abs() < 1e-5);
}
