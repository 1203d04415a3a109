use std::collections::BTreeSet;
use std::f64::consts::PI;

use polystretch::shell_noise::{Phase, Quadrant, TOL_PSD};
use polystretch::{enumerate_shell, Tensor2, Vec2};

/// Independent enumeration by scanning the bounding box.
fn brute_force_shell(n: i64) -> BTreeSet<(i64, i64)> {
    let mut out = BTreeSet::new();
    for k1 in -2 * n..=2 * n {
        for k2 in -2 * n..=2 * n {
            let s = (k1 * k1 + k2 * k2) as f64;
            let norm = s.sqrt();
            if (k1, k2) != (0, 0) && norm >= n as f64 - 1e-9 && norm <= 2.0 * n as f64 + 1e-9 {
                out.insert((k1, k2));
            }
        }
    }
    out
}

fn in_plus_half(k1: i64, k2: i64) -> bool {
    (k1 >= 0 && k2 > 0) || (k1 > 0 && k2 <= 0)
}

#[test]
fn enumeration_matches_brute_force() {
    for n in 1..=12u32 {
        let model = enumerate_shell(n, 1.0).unwrap();
        let got: BTreeSet<(i64, i64)> = model.modes().iter().map(|m| (m.k[0] as i64, m.k[1] as i64)).collect();
        assert_eq!(got.len(), model.len(), "duplicates at N={n}");
        assert_eq!(got, brute_force_shell(n as i64), "N={n}");
        for m in model.modes() {
            let (k1, k2) = (m.k[0] as f64, m.k[1] as f64);
            assert_eq!(m.theta, 1.0 / (k1 * k1 + k2 * k2));
            let expected = if in_plus_half(m.k[0] as i64, m.k[1] as i64) { Phase::Cos } else { Phase::Sin };
            assert_eq!(m.phase, expected);
        }
    }
}

#[test]
fn first_shell_values() {
    let model = enumerate_shell(1, 1.0).unwrap();
    assert_eq!(model.len(), 12);
    let m11 = model.modes().iter().find(|m| m.k == [1, 1]).unwrap();
    assert_eq!(m11.theta, 0.5);
    let zero = enumerate_shell(1, 0.0).unwrap();
    assert_eq!(zero.len(), 12);
    assert!(zero.modes().iter().all(|m| m.theta == 0.0));
    assert_eq!(zero.alpha_n(), 0.0);
    assert_eq!(model.alpha_n(), 21.0 / 32.0);
}

#[test]
fn canonical_order() {
    let model = enumerate_shell(9, 1.0).unwrap();
    let keys: Vec<(i64, [i32; 2])> = model.modes().iter().map(|m| (m.norm_sq(), m.k)).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn quadrants_tile_the_punctured_lattice() {
    let lim = 128i64;
    for k1 in -lim..=lim {
        for k2 in -lim..=lim {
            if k1 * k1 + k2 * k2 > lim * lim {
                continue;
            }
            let preds = [
                k1 >= 0 && k2 > 0,
                k1 < 0 && k2 >= 0,
                k1 <= 0 && k2 < 0,
                k1 > 0 && k2 <= 0,
            ];
            let count = preds.iter().filter(|&&p| p).count();
            let q = Quadrant::of([k1, k2]);
            if (k1, k2) == (0, 0) {
                assert_eq!(count, 0);
                assert!(q.is_none());
            } else {
                assert_eq!(count, 1, "k=({k1},{k2})");
                let idx = preds.iter().position(|&p| p).unwrap();
                let expected = [Quadrant::PlusPlus, Quadrant::MinusPlus, Quadrant::MinusMinus, Quadrant::PlusMinus][idx];
                assert_eq!(q, Some(expected));
            }
        }
    }
}

#[test]
fn sigma_examples() {
    let model = enumerate_shell(1, 1.0).unwrap();
    let m = model.modes().iter().find(|m| m.k == [1, 0]).unwrap();
    assert_eq!(m.phase, Phase::Cos);
    assert_eq!(m.sigma(Vec2::ZERO), Vec2::new(0.0, m.theta));
    assert!(m.sigma(Vec2::new(PI / 2.0, 0.0)).norm() < 1e-16);
    let v = m.grad_sigma_r(Vec2::new(PI / 2.0, 0.0), Vec2::new(1.0, 0.0));
    assert!((v - Vec2::new(0.0, -m.theta)).norm() < 1e-16);
}

fn test_points() -> Vec<Vec2> {
    (0..7)
        .flat_map(|i| (0..7).map(move |j| Vec2::new(0.37 + 0.9 * i as f64, 0.11 + 0.87 * j as f64)))
        .collect()
}

#[test]
fn fields_are_transverse_and_bounded() {
    let model = enumerate_shell(5, 1.3).unwrap();
    let r = Vec2::new(0.7, -1.9);
    for x in test_points() {
        let sig = model.sigma_eval(x);
        let grad = model.grad_sigma_r_eval(x, r);
        assert_eq!(sig.len(), model.len());
        for ((m, s), g) in model.modes().iter().zip(&sig).zip(&grad) {
            let k = m.wavevector();
            assert!(s.dot(k).abs() <= 1e-15 * m.theta * k.norm_sq());
            assert!(g.norm() <= m.theta * k.norm() * r.norm() * (1.0 + 1e-14));
        }
        assert!(model.grad_sigma_r_eval(x, Vec2::ZERO).iter().all(|g| *g == Vec2::ZERO));
    }
}

#[test]
fn divergence_free_by_central_differences() {
    let model = enumerate_shell(3, 1.0).unwrap();
    let h = 1e-4;
    for x in test_points() {
        for m in model.modes() {
            let dx = (m.sigma(x + Vec2::new(h, 0.0)).x - m.sigma(x - Vec2::new(h, 0.0)).x) / (2.0 * h);
            let dy = (m.sigma(x + Vec2::new(0.0, h)).y - m.sigma(x - Vec2::new(0.0, h)).y) / (2.0 * h);
            let scale = m.theta * m.wavevector().norm_sq();
            assert!((dx + dy).abs() <= 1e-8 * scale + 1e-12, "k={:?}", m.k);
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let model = enumerate_shell(2, 1.0).unwrap();
    let h = 1e-5;
    for x in test_points().into_iter().step_by(5) {
        for m in model.modes() {
            let g = m.gradient(x);
            let d1 = (m.sigma(x + Vec2::new(h, 0.0)) - m.sigma(x - Vec2::new(h, 0.0))) * (0.5 / h);
            let d2 = (m.sigma(x + Vec2::new(0.0, h)) - m.sigma(x - Vec2::new(0.0, h))) * (0.5 / h);
            let fd = Tensor2::new(d1.x, d2.x, d1.y, d2.y);
            assert!((g - fd).max_abs() < 1e-8, "k={:?}", m.k);
        }
    }
}

#[test]
fn covariance_at_origin_is_isotropic() {
    for n in [1, 4, 16] {
        let model = enumerate_shell(n, 1.0).unwrap();
        let q0 = model.covariance_q(Vec2::ZERO);
        let alpha = model.alpha_n();
        assert!((q0 - Tensor2::IDENTITY * (2.0 * alpha)).max_abs() <= 1e-12 * alpha.max(1e-300));
        assert!(q0.xy.abs() <= 1e-12 && q0.yx.abs() <= 1e-12);
    }
}

#[test]
fn mirror_symmetry_on_grid() {
    let model = enumerate_shell(16, 1.0).unwrap();
    for i in 0..32 {
        for j in 0..32 {
            let z = Vec2::new(2.0 * PI * i as f64 / 32.0, 2.0 * PI * j as f64 / 32.0);
            let d = (model.covariance_q(z) - model.covariance_q(-z)).frobenius_norm();
            assert!(d <= 1e-12, "z={z:?} d={d}");
        }
    }
}

#[test]
fn covariance_gradient_vanishes_at_origin() {
    let model = enumerate_shell(4, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for h in [1e-2, 5e-3, 2.5e-3] {
        let mut worst: f64 = 0.0;
        for e in [Vec2::new(h, 0.0), Vec2::new(0.0, h)] {
            let d = (model.covariance_q(e) - model.covariance_q(-e)) * (0.5 / h);
            worst = worst.max(d.max_abs());
        }
        assert!(worst <= 1e-10, "h={h} worst={worst}");
        assert!(worst <= prev + 1e-12);
        prev = worst;
    }
}

#[test]
fn stretching_covariance_first_shell() {
    let model = enumerate_shell(1, 1.0).unwrap();
    let s = model.stretching_covariance_sum(Vec2::new(1.0, 0.0));
    assert!((s - Tensor2::diag(0.25, 1.5)).max_abs() < 1e-15);
    assert_eq!(model.stretching_covariance_sum(Vec2::ZERO), Tensor2::ZERO);
}

#[test]
fn stretching_covariance_is_position_independent() {
    let model = enumerate_shell(6, 1.0).unwrap();
    let r = Vec2::new(0.3, 1.1);
    let exact = model.stretching_covariance_sum(r);
    assert!(exact.is_symmetric(0.0));
    assert!(exact.is_psd(TOL_PSD));
    for x in test_points() {
        let at = model.stretching_covariance_at(x, r);
        assert!((at - exact).max_abs() <= 1e-13 * exact.max_abs(), "x={x:?}");
    }
}

#[test]
fn field_sums_match_direct_sums() {
    let model = enumerate_shell(7, 0.8).unwrap();
    let dw: Vec<f64> = (0..model.len()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
    let mut trig = Default::default();
    for x in test_points().into_iter().step_by(7) {
        let (v, g) = model.field_sums(x, &dw, &mut trig);
        let mut v_ref = Vec2::ZERO;
        let mut g_ref = Tensor2::ZERO;
        for (m, w) in model.modes().iter().zip(&dw) {
            v_ref += m.sigma(x) * *w;
            g_ref += m.gradient(x) * *w;
        }
        assert!((v - v_ref).norm() < 1e-12);
        assert!((g - g_ref).max_abs() < 1e-12);
    }
}

#[test]
fn lattice_sums_do_not_depend_on_thread_count() {
    let model = enumerate_shell(64, 1.0).unwrap();
    let r = Vec2::new(0.6, 0.8);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (model.alpha_n(), model.stretching_covariance_sum(r)))
    };
    let base = run(1);
    for t in [2, 3, 8] {
        let other = run(t);
        assert_eq!(base.0.to_bits(), other.0.to_bits());
        assert_eq!(base.1.to_array().map(f64::to_bits), other.1.to_array().map(f64::to_bits));
    }
}
