mod common;

use common::{naive_dft, set, synth};
use hss_core::cider::builtin::{pq_l, vf_lc, PqLParams, ThreePhase, VfLcParams};
use hss_core::cider::{PqReference, ReferencePlugin, TransformSpec};
use hss_core::harmonic::HarmonicSignal;
use hss_core::linalg::{self, C64};

fn pq_params() -> PqLParams {
    PqLParams {
        l: 5e-3,
        r: 0.2,
        kp: 20.0,
        ki: 2000.0,
        p: 5000.0,
        q: 1000.0,
        phase: 0.0,
    }
}

fn unbalanced(amplitude: f64) -> ThreePhase {
    ThreePhase {
        amplitude,
        phase: -0.02,
        unbalance: 0.05,
    }
}

fn coeffs(sig: &HarmonicSignal, ch: usize) -> Vec<(i64, C64)> {
    sig.index_set().orders().map(|h| (h, sig.coefficient(h, ch))).collect()
}

// the linearised reference predicts the true response to second order
#[test]
fn pq_reference_linearisation_is_second_order() {
    let hmax = 20;
    let cider = pq_l("pq", "n", &pq_params(), &unbalanced(320.0)).unwrap().assemble(set(hmax)).unwrap();
    let op = &cider.operating_point;
    let plugin = PqReference::default();
    let w_rho: Vec<Vec<(i64, C64)>> = (0..2).map(|c| coeffs(&op.w_rho, c)).collect();
    let w_sigma: Vec<Vec<(i64, C64)>> = (0..2).map(|c| coeffs(&op.w_sigma, c)).collect();
    // a real perturbation at orders 0, 1 and 3, of the size of the voltage
    let delta: Vec<Vec<(i64, C64)>> = vec![
        vec![(0, C64::new(120.0, 0.0)), (1, C64::new(30.0, -20.0)), (-1, C64::new(30.0, 20.0))],
        vec![(0, C64::new(-80.0, 0.0)), (3, C64::new(10.0, 15.0)), (-3, C64::new(10.0, -15.0))],
    ];
    let n = 512;
    let real_at = |sig: &[Vec<(i64, C64)>], k: usize| -> Vec<f64> { sig.iter().map(|c| synth(c, k, n).re).collect() };
    let base: Vec<Vec<f64>> = (0..n)
        .map(|k| plugin.evaluate(&real_at(&w_rho, k), &real_at(&w_sigma, k)).unwrap())
        .collect();

    let error = |eps: f64| -> f64 {
        let pert = HarmonicSignal::from_orders(
            set(hmax),
            2,
            (-3..=3i64).map(|h| {
                let pick = |c: &Vec<(i64, C64)>| c.iter().find(|x| x.0 == h).map_or(C64::new(0.0, 0.0), |x| x.1 * eps);
                (h, vec![pick(&delta[0]), pick(&delta[1])])
            }),
        )
        .unwrap();
        let linear = cider.r_rho.apply(&pert).unwrap();
        let diff: Vec<Vec<C64>> = (0..n)
            .map(|k| {
                let mut r = real_at(&w_rho, k);
                let d = real_at(&delta, k);
                for c in 0..2 {
                    r[c] += eps * d[c];
                }
                let v = plugin.evaluate(&r, &real_at(&w_sigma, k)).unwrap();
                v.iter().zip(&base[k]).map(|(a, b)| C64::new(a - b, 0.0)).collect()
            })
            .collect();
        let mut worst = 0.0f64;
        for c in 0..2 {
            let samples: Vec<C64> = diff.iter().map(|v| v[c]).collect();
            for h in -10..=10i64 {
                worst = worst.max((naive_dft(&samples, h) - linear.coefficient(h, c)).norm());
            }
        }
        worst
    };
    let ratio = error(1e-3) / error(1e-4);
    assert!((80.0..=120.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn ports_partition_the_disturbance() {
    let s = set(3);
    let len = s.len();
    let c = pq_l("pq", "n", &pq_params(), &unbalanced(320.0)).unwrap().assemble(s).unwrap();
    let op = &c.operating_point;
    assert_eq!(c.model.port("gamma").unwrap().dim(), 3 * len);
    assert_eq!(c.model.port("sigma").unwrap().dim(), op.w_sigma.channels() * len);
    assert_eq!(
        c.model.port("o").unwrap().dim(),
        (op.w_kappa.channels() + op.w_pi.channels() + op.w_sigma.channels()) * len
    );
    assert_eq!(c.model.outputs(), 3 * len);
}

#[test]
fn park_transforms_act_at_plus_minus_one() {
    let park = TransformSpec::Park { phase: 0.3 }.series(3).unwrap();
    let inv = TransformSpec::InversePark { phase: 0.3 }.series(2).unwrap();
    assert_eq!(park.support(), vec![-1, 1]);
    assert_eq!(inv.support(), vec![-1, 1]);
    for k in 0..7 {
        let t = k as f64 * 0.0031;
        let p = park.evaluate(t, 50.0);
        let q = inv.evaluate(t, 50.0);
        assert!(linalg::max_abs_diff(&(&p * &q), &linalg::identity(2)) <= 1e-14);
        assert!(p.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).all(|z| z.im.abs() <= 1e-15));
    }
}

#[test]
fn reassembly_is_bit_identical() {
    let p = VfLcParams {
        l: 2e-3,
        r: 0.1,
        c: 5e-5,
        kp_v: 0.05,
        ki_v: 20.0,
        kp_i: 10.0,
        ki_i: 1000.0,
        v_ref: [325.0, 0.0],
        phase: 0.0,
    };
    let spec = vf_lc("gf", "s", &p, &unbalanced(20.0)).unwrap();
    let a = spec.assemble(set(4)).unwrap();
    let b = spec.assemble(set(4)).unwrap();
    assert!(linalg::bit_equal(a.model.a(), b.model.a()));
    for (x, y) in a.model.inputs().iter().zip(b.model.inputs()) {
        assert!(linalg::bit_equal(&x.e, &y.e) && linalg::bit_equal(&x.f, &y.f));
    }
}
