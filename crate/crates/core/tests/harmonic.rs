mod common;

use common::{naive_dft, set, synth};
use hss_core::harmonic::{permute_grouping_vector, toeplitz_from_fourier, FourierSeries, Grouping, GroupingLayout, HarmonicSignal};
use hss_core::linalg::{self, CMat, C64};
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = (f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64)
}

/// Conjugate-symmetric coefficient list of a real signal of order `h`.
fn real_coeffs(h: usize, raw: &[(f64, f64)]) -> Vec<(i64, C64)> {
    let mut out = vec![(0, C64::new(raw[0].0, 0.0))];
    for k in 1..=h {
        let c = C64::new(raw[k].0, raw[k].1);
        out.push((k as i64, c));
        out.push((-(k as i64), c.conj()));
    }
    out
}

fn scalar_series(c: &[(i64, C64)]) -> FourierSeries {
    FourierSeries::from_coefficients(1, 1, c.iter().map(|&(h, z)| (h, CMat::from_fn(1, 1, |_, _| z)))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // toeplitz(a) x agrees with sampling a(t) x(t) and taking the DFT
    #[test]
    fn product_matches_time_domain(
        hmax in prop::sample::select(vec![3usize, 8, 25]),
        split in 0.0..1.0f64,
        a_raw in prop::collection::vec(coeff(), 26),
        x_raw in prop::collection::vec((coeff(), coeff()), 51),
    ) {
        let ha = ((hmax as f64) * split).floor() as usize;
        let hx = hmax - ha;
        let a = real_coeffs(ha, &a_raw);
        let x: Vec<(i64, C64)> = (-(hx as i64)..=hx as i64)
            .map(|h| { let (r, i) = x_raw[(h + hx as i64) as usize]; (h, C64::new(r.0 + i.0, r.1 - i.1)) })
            .collect();
        let s = set(hmax);
        let t = toeplitz_from_fourier(&scalar_series(&a), s).unwrap();
        let sig = HarmonicSignal::from_orders(s, 1, x.iter().map(|&(h, z)| (h, vec![z]))).unwrap();
        let y = t.apply(&sig).unwrap();
        let n = 4 * (2 * hmax + 1);
        let prod: Vec<C64> = (0..n).map(|k| synth(&a, k, n) * synth(&x, k, n)).collect();
        for h in -(hmax as i64)..=hmax as i64 {
            let err = (y.coefficient(h, 0) - naive_dft(&prod, h)).norm();
            prop_assert!(err <= 1e-9, "order {h}: {err:e}");
        }
    }

    #[test]
    fn lift_is_linear(
        hmax in 0usize..6,
        a_raw in prop::collection::vec(coeff(), 6),
        b_raw in prop::collection::vec(coeff(), 6),
        alpha in coeff(),
        beta in coeff(),
    ) {
        let s = set(hmax);
        let a = scalar_series(&real_coeffs(hmax.min(5), &a_raw));
        let b = scalar_series(&real_coeffs(hmax.min(5), &b_raw));
        let (al, be) = (C64::new(alpha.0, alpha.1), C64::new(beta.0, beta.1));
        let combo = FourierSeries::linear_combination(al, &a, be, &b).unwrap();
        let lhs = toeplitz_from_fourier(&combo, s).unwrap();
        let ta = toeplitz_from_fourier(&a, s).unwrap();
        let tb = toeplitz_from_fourier(&b, s).unwrap();
        let rhs = linalg::add(&linalg::scaled(ta.matrix(), al), &linalg::scaled(tb.matrix(), be));
        prop_assert!(linalg::max_abs_diff(lhs.matrix(), &rhs) <= 1e-14);
    }

    // a real time-domain series maps real signals to real signals
    #[test]
    fn real_series_preserve_conjugate_symmetry(
        hmax in 1usize..7,
        a_raw in prop::collection::vec(coeff(), 8),
        x_raw in prop::collection::vec(coeff(), 8),
    ) {
        let s = set(hmax);
        let a = scalar_series(&real_coeffs(hmax.min(3), &a_raw));
        let x = real_coeffs(hmax, &x_raw);
        let sig = HarmonicSignal::from_orders(s, 1, x.iter().map(|&(h, z)| (h, vec![z]))).unwrap();
        let y = toeplitz_from_fourier(&a, s).unwrap().apply(&sig).unwrap();
        for h in 0..=hmax as i64 {
            prop_assert!((y.coefficient(h, 0) - y.coefficient(-h, 0).conj()).norm() <= 1e-12);
        }
    }

    #[test]
    fn regrouping_is_an_orthogonal_involution(
        hmax in 0usize..5,
        dims in prop::collection::vec(1usize..4, 1..5),
    ) {
        let s = set(hmax);
        let hm = GroupingLayout::new(Grouping::HarmonicMajor, dims.clone(), s);
        let nm = hm.with_ordering(Grouping::NodeMajor);
        let p = hm.permutation_to(Grouping::NodeMajor);
        let q = nm.permutation_to(Grouping::HarmonicMajor);
        let n = p.len();
        let mut seen = vec![false; n];
        for &i in &p { prop_assert!(!seen[i]); seen[i] = true; }
        for i in 0..n { prop_assert_eq!(p[q[i]], i); }
        let pm = hm.permutation_matrix(Grouping::NodeMajor);
        let ppt = &pm * pm.transpose();
        for i in 0..n { for j in 0..n {
            prop_assert_eq!(ppt[(i, j)], if i == j { 1.0 } else { 0.0 });
        }}
        let v: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let (there, lay) = permute_grouping_vector(&hm, &v, Grouping::NodeMajor).unwrap();
        prop_assert_eq!(&lay, &nm);
        let (back, _) = permute_grouping_vector(&nm, &there, Grouping::HarmonicMajor).unwrap();
        prop_assert_eq!(back, v);
    }
}
