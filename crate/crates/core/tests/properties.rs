//! Randomized algebraic properties of the public API.

use lotap::ar::{predict_next, ArCoefficients};
use lotap::data::{read_series, write_series, TensorSeries};
use lotap::tensor::{conj_transpose, fft_mode3, identity_tensor, ifft_mode3_real, t_product};
use lotap::tsvd::{truncated_tsvd, tubal_rank};
use lotap::{Dims, Tensor3};
use num_complex::Complex64;
use proptest::prelude::*;

fn tensor(n1: usize, n2: usize, n3: usize) -> impl Strategy<Value = Tensor3> {
    prop::collection::vec(-4.0f64..4.0, n1 * n2 * n3)
        .prop_map(move |v| Tensor3::from_real(Dims::new(n1, n2, n3).unwrap(), v).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..5, 1usize..5, 1usize..6)
}

/// Circular convolution of frontal slices along the third mode.
fn naive_t_product(x: &Tensor3, y: &Tensor3) -> Vec<Complex64> {
    let (a, b) = (x.dims(), y.dims());
    let mut out = vec![Complex64::default(); a.n1 * b.n2 * a.n3];
    for k in 0..a.n3 {
        for j in 0..b.n2 {
            for i in 0..a.n1 {
                let mut s = Complex64::default();
                for q in 0..a.n3 {
                    for l in 0..a.n2 {
                        s += x.get(i, l, (k + a.n3 - q) % a.n3) * y.get(l, j, q);
                    }
                }
                out[k * a.n1 * b.n2 + j * a.n1 + i] = s;
            }
        }
    }
    out
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t_product_is_circular_convolution(
        (x, y) in (dims(), 1usize..5).prop_flat_map(|((n1, n2, n3), n4)| (tensor(n1, n2, n3), tensor(n2, n4, n3)))
    ) {
        let got = t_product(&x, &y).unwrap().to_complex_vec();
        prop_assert!(max_diff(&got, &naive_t_product(&x, &y)) < 1e-10);
    }

    #[test]
    fn t_product_is_associative(
        (x, y, z) in dims().prop_flat_map(|(n1, n2, n3)| (tensor(n1, n2, n3), tensor(n2, n1, n3), tensor(n1, 2, n3)))
    ) {
        let left = t_product(&t_product(&x, &y).unwrap(), &z).unwrap();
        let right = t_product(&x, &t_product(&y, &z).unwrap()).unwrap();
        prop_assert!(max_diff(&left.to_complex_vec(), &right.to_complex_vec()) < 1e-9);
    }

    #[test]
    fn transpose_reverses_products(
        (x, y) in dims().prop_flat_map(|(n1, n2, n3)| (tensor(n1, n2, n3), tensor(n2, 3, n3)))
    ) {
        let left = conj_transpose(&t_product(&x, &y).unwrap());
        let right = t_product(&conj_transpose(&y), &conj_transpose(&x)).unwrap();
        prop_assert!(max_diff(&left.to_complex_vec(), &right.to_complex_vec()) < 1e-10);
    }

    #[test]
    fn identity_is_neutral(x in dims().prop_flat_map(|(n1, n2, n3)| tensor(n1, n2, n3))) {
        let d = x.dims();
        let left = t_product(&identity_tensor(d.n1, d.n3).unwrap(), &x).unwrap();
        let right = t_product(&x, &identity_tensor(d.n2, d.n3).unwrap()).unwrap();
        prop_assert!(max_diff(&left.to_complex_vec(), &x.to_complex_vec()) < 1e-12);
        prop_assert!(max_diff(&right.to_complex_vec(), &x.to_complex_vec()) < 1e-12);
    }

    #[test]
    fn fourier_round_trip_is_real(x in dims().prop_flat_map(|(n1, n2, n3)| tensor(n1, n2, n3))) {
        let back = ifft_mode3_real(&fft_mode3(&x)).unwrap();
        prop_assert!(max_diff(&back.to_complex_vec(), &x.to_complex_vec()) < 1e-12);
    }

    #[test]
    fn truncation_error_shrinks_with_rank(x in dims().prop_flat_map(|(n1, n2, n3)| tensor(n1, n2, n3))) {
        let d = x.dims();
        let full = d.n1.min(d.n2);
        let mut last = f64::INFINITY;
        for r in 1..=full {
            let err = truncated_tsvd(&x, r).unwrap().reconstruct().unwrap().sub(&x).unwrap().fro_norm();
            prop_assert!(err <= last + 1e-9 * (1.0 + x.fro_norm()));
            last = err;
        }
        prop_assert!(last <= 1e-9 * (1.0 + x.fro_norm()));
        prop_assert!(tubal_rank(&x, 1e-10) <= full);
    }

    #[test]
    fn prediction_is_linear_in_history(
        a in prop::collection::vec(-1.0f64..1.0, 1..4),
        h in prop::collection::vec(tensor(2, 3, 2), 4),
        g in prop::collection::vec(tensor(2, 3, 2), 4),
        c in -3.0f64..3.0,
    ) {
        let coeffs = ArCoefficients::new(a).unwrap();
        let mixed: Vec<Tensor3> = h.iter().zip(&g).map(|(p, q)| p.scale(c).add(q).unwrap()).collect();
        let lhs = predict_next(&coeffs, &mixed).unwrap();
        let rhs = predict_next(&coeffs, &h).unwrap().scale(c).add(&predict_next(&coeffs, &g).unwrap()).unwrap();
        prop_assert!(max_diff(&lhs.to_complex_vec(), &rhs.to_complex_vec()) < 1e-12);
    }

    #[test]
    fn series_binary_round_trip_is_exact(slices in (dims(), 1usize..5).prop_flat_map(|((n1, n2, n3), t)| prop::collection::vec(tensor(n1, n2, n3), t))) {
        let series = TensorSeries::new(slices).unwrap();
        let mut bytes = Vec::new();
        write_series(&mut bytes, &series).unwrap();
        let back = read_series(&mut bytes.as_slice(), bytes.len() as u64).unwrap();
        prop_assert_eq!(back.slices(), series.slices());
    }
}
