//! Property suites for the loss functions: finite-difference gradients,
//! parity fixed points, permutation invariance, and the relation between
//! the combined and single-group penalties.

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use fairsel_core::losses::{
    bce_loss, parity_loss_combined, parity_loss_global, parity_loss_pairwise,
};

fn numeric_grad(probs: &[f64], loss: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-6;
    (0..probs.len())
        .map(|i| {
            let mut plus = probs.to_vec();
            let mut minus = probs.to_vec();
            plus[i] += h;
            minus[i] -= h;
            (loss(&plus) - loss(&minus)) / (2.0 * h)
        })
        .collect()
}

fn assert_grad_close(analytic: &[f64], numeric: &[f64], context: &str) {
    for (k, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-4);
        assert!(rel < 1e-6, "{context} coordinate {k}: {a:e} vs {n:e}");
    }
}

#[test]
fn gradients_match_finite_differences_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(20240917);
    for trial in 0..50 {
        let n = rng.random_range(4..=32);
        let probs: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let labels: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
        let mut race: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let mut country: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        race[0] = true;
        race[1] = false;
        country[0] = true;
        country[1] = false;
        let (w_r, w_c) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));

        let bce = bce_loss(&probs, &labels).unwrap();
        assert_grad_close(
            &bce.grad,
            &numeric_grad(&probs, |p| bce_loss(p, &labels).unwrap().scalar),
            &format!("bce trial {trial}"),
        );

        let pairwise = parity_loss_pairwise(&probs, &race).unwrap();
        assert_grad_close(
            &pairwise.grad,
            &numeric_grad(&probs, |p| parity_loss_pairwise(p, &race).unwrap().scalar),
            &format!("pairwise trial {trial}"),
        );

        let combined = parity_loss_combined(&probs, &race, &country, w_r, w_c).unwrap();
        assert_grad_close(
            &combined.grad,
            &numeric_grad(&probs, |p| {
                parity_loss_combined(p, &race, &country, w_r, w_c)
                    .unwrap()
                    .scalar
            }),
            &format!("combined trial {trial}"),
        );

        let global = parity_loss_global(&probs, &country).unwrap();
        assert_grad_close(
            &global.grad,
            &numeric_grad(&probs, |p| parity_loss_global(p, &country).unwrap().scalar),
            &format!("global trial {trial}"),
        );
    }
}

#[test]
fn parity_fixed_points_are_exact() {
    // Equal group and complement means.
    let probs = [0.3, 0.7, 0.5, 0.5, 0.2, 0.8];
    let mask = [true, true, false, false, true, true];
    let pairwise = parity_loss_pairwise(&probs, &mask).unwrap();
    assert!(pairwise.scalar.abs() <= 1e-12);
    assert!(pairwise.grad.iter().all(|g| g.abs() <= 1e-12));

    // Group mean equal to the global mean.
    let probs = [0.2, 0.8, 0.5, 0.4, 0.6];
    let mask = [true, true, false, false, false];
    let global = parity_loss_global(&probs, &mask).unwrap();
    assert!(global.scalar.abs() <= 1e-12);
    assert!(global.grad.iter().all(|g| g.abs() <= 1e-12));
}

fn masked_vector() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (4usize..24).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..0.99, n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(probs, mut mask)| {
                mask[0] = true;
                mask[1] = false;
                (probs, mask)
            })
    })
}

proptest! {
    #[test]
    fn fairness_losses_are_non_negative((probs, mask) in masked_vector()) {
        prop_assert!(parity_loss_pairwise(&probs, &mask).unwrap().scalar >= 0.0);
        prop_assert!(parity_loss_global(&probs, &mask).unwrap().scalar >= 0.0);
    }

    #[test]
    fn joint_permutation_leaves_losses_unchanged(
        (probs, mask) in masked_vector(),
        shift in 1usize..8,
    ) {
        let n = probs.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let probs_p: Vec<f64> = perm.iter().map(|&i| probs[i]).collect();
        let mask_p: Vec<bool> = perm.iter().map(|&i| mask[i]).collect();
        let base = parity_loss_pairwise(&probs, &mask).unwrap().scalar;
        let permuted = parity_loss_pairwise(&probs_p, &mask_p).unwrap().scalar;
        prop_assert!((base - permuted).abs() <= 1e-12);

        let base = parity_loss_global(&probs, &mask).unwrap().scalar;
        let permuted = parity_loss_global(&probs_p, &mask_p).unwrap().scalar;
        prop_assert!((base - permuted).abs() <= 1e-12);
    }

    #[test]
    fn combined_equals_single_group_when_masks_coincide(
        (probs, mask) in masked_vector(),
        w_r in 0.05f64..0.95,
    ) {
        let w_c = 1.0 - w_r;
        let combined = parity_loss_combined(&probs, &mask, &mask, w_r, w_c).unwrap();
        let single = parity_loss_global(&probs, &mask).unwrap();
        prop_assert!((combined.scalar - single.scalar).abs() <= 1e-12);
    }
}
