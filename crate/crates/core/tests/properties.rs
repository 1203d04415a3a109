use polystretch::covariance::{analytic_a, analytic_q};
use polystretch::tail_stats::{ccdf, hill_fit};
use polystretch::{Tensor2, Vec2};
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = Vec2> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #[test]
    fn q_squares_to_a(r in vec2(), a in 0.0..4.0f64) {
        let q = analytic_q(r, a);
        let aa = analytic_a(r, a);
        let scale = aa.frobenius_norm().max(f64::MIN_POSITIVE);
        prop_assert!((q.matmul(&q) - aa).frobenius_norm() <= 1e-12 * scale);
    }

    #[test]
    fn a_and_q_rotate_with_r(r in vec2(), angle in -10.0..10.0f64) {
        let g = Tensor2::rotation(angle);
        let gr = g.apply(r);
        let scale = r.norm_sq().max(1e-300);
        prop_assert!((analytic_a(gr, 1.0) - analytic_a(r, 1.0).rotated(angle)).max_abs() <= 1e-12 * scale);
        prop_assert!((analytic_q(gr, 1.0) - analytic_q(r, 1.0).rotated(angle)).max_abs() <= 1e-12 * scale.sqrt());
    }

    #[test]
    fn hill_is_scale_invariant(seed in 0u64..1000, e in -20i32..20, c in 0.001..1000.0f64) {
        let s: Vec<f64> = (0..2000).map(|i| {
            let u = ((i as u64 * 2654435761 + seed * 97) % 1_000_003) as f64 / 1_000_003.0;
            (1.0 - u).powf(-0.5) + 1e-9 * i as f64
        }).collect();
        let base = hill_fit(&s, 0.05).unwrap();
        let pow2 = 2f64.powi(e);
        let exact: Vec<f64> = s.iter().map(|x| x * pow2).collect();
        prop_assert_eq!(hill_fit(&exact, 0.05).unwrap(), base);
        let scaled: Vec<f64> = s.iter().map(|x| x * c).collect();
        let fit = hill_fit(&scaled, 0.05).unwrap();
        prop_assert_eq!(fit.k, base.k);
        prop_assert!((fit.q_hat - base.q_hat).abs() <= 1e-12 * base.q_hat);
    }

    #[test]
    fn ccdf_is_non_increasing(s in prop::collection::vec(0.0..1e6f64, 1..300), n in 2usize..64) {
        let pts = ccdf(&s, n).unwrap();
        for w in pts.windows(2) {
            prop_assert!(w[1].level >= w[0].level);
            prop_assert!(w[1].survival <= w[0].survival);
        }
        prop_assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p.survival)));
    }
}
