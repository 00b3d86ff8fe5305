//! Property tests for the pool math: value and amount identities that must
//! hold for any liquidity, range, and price.

use clamp_core::{divergence_loss, hold_value, position_amounts, position_value, PriceRange};
use proptest::prelude::*;

fn assert_rel(actual: f64, expected: f64, tol: f64) {
    let scale = expected.abs().max(1.0);
    assert!(
        (actual - expected).abs() <= tol * scale,
        "expected {expected}, got {actual}"
    );
}

fn log_price() -> impl Strategy<Value = f64> {
    (-4.0..4.0f64).prop_map(|e| 10f64.powf(e))
}

fn liquidity() -> impl Strategy<Value = f64> {
    (-1.0..6.0f64).prop_map(|e| 10f64.powf(e))
}

/// A bounded range plus a price that may sit below, inside, or above it.
fn range_and_price() -> impl Strategy<Value = (PriceRange, f64)> {
    (log_price(), 1.02..50.0f64, -0.5..1.5f64).prop_map(|(lower, width, u)| {
        let range = PriceRange::new(lower, lower * width).unwrap();
        (range, lower * width.powf(u))
    })
}

proptest! {
    #[test]
    fn value_equals_held_amounts((range, price) in range_and_price(), l in liquidity()) {
        let direct = position_value(l, &range, price).unwrap();
        let via_amounts = hold_value(&position_amounts(l, &range, price).unwrap(), price).unwrap();
        assert_rel(via_amounts, direct, 1e-12);
    }

    #[test]
    fn value_is_nondecreasing_in_price((range, price) in range_and_price(), l in liquidity(), step in 1.0..10.0f64) {
        let low = position_value(l, &range, price).unwrap();
        let high = position_value(l, &range, price * step).unwrap();
        prop_assert!(low <= high * (1.0 + 1e-12));
    }

    #[test]
    fn out_of_range_holds_one_token((range, _) in range_and_price(), l in liquidity()) {
        let at_lower = position_amounts(l, &range, range.lower).unwrap();
        let at_upper = position_amounts(l, &range, range.upper).unwrap();
        prop_assert_eq!(at_lower.quote, 0.0);
        prop_assert_eq!(at_upper.base, 0.0);
        let below = position_amounts(l, &range, range.lower * 0.5).unwrap();
        prop_assert_eq!(below.base, at_lower.base);
        prop_assert_eq!(below.quote, 0.0);
        let above = position_amounts(l, &range, range.upper * 2.0).unwrap();
        prop_assert_eq!(above.quote, at_upper.quote);
        prop_assert_eq!(above.base, 0.0);
    }

    #[test]
    fn divergence_loss_is_never_a_gain((range, deploy) in range_and_price(), l in liquidity(), step in 0.05..20.0f64) {
        let price = deploy * step;
        let dl = divergence_loss(l, &range, deploy, price).unwrap();
        prop_assert!(dl <= 1e-12, "divergence loss came out positive: {dl}");
        prop_assert!(dl >= -1.0);
    }

    #[test]
    fn divergence_loss_vanishes_at_deployment((range, deploy) in range_and_price(), l in liquidity()) {
        prop_assert_eq!(divergence_loss(l, &range, deploy, deploy).unwrap(), 0.0);
    }

    #[test]
    fn full_range_loss_matches_closed_form(deploy in log_price(), l in liquidity(), step in 0.05..20.0f64) {
        let range = PriceRange::full_range();
        let dl = divergence_loss(l, &range, deploy, deploy * step).unwrap();
        let closed = 2.0 * step.sqrt() / (1.0 + step) - 1.0;
        assert_rel(dl, closed, 1e-9);
    }
}
