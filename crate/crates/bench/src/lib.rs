//! Shared fixtures for the risk engine benchmarks.

use clamp_core::{
    build_position, BorrowPolicy, Position, PriceRange, ProtocolParams, TokenAmounts, UserCapital,
};

/// A leveraged quote-borrowing position on a wide volatile range, deployed
/// at 1000 with the price well inside the range.
pub fn volatile_position() -> Position {
    let range = PriceRange::new(250.0, 4000.0).unwrap();
    let capital = UserCapital::new(1.0, 300.0).unwrap();
    build_position(&capital, range, 50.0, 1000.0, BorrowPolicy::QuoteOnly).unwrap()
}

/// A deleveraged position sitting between the critical and liquidation
/// margins at price 1000, ready for a partial liquidation.
pub fn liquidatable_position() -> Position {
    let debt = TokenAmounts::new(0.12, 180.0).unwrap();
    let collateral = TokenAmounts::new(0.2, 160.0).unwrap();
    Position::new(
        0.0,
        PriceRange::new(250.0, 4000.0).unwrap(),
        collateral,
        debt,
        1000.0,
    )
    .unwrap()
}

pub fn default_params() -> ProtocolParams {
    let params = ProtocolParams {
        liq_margin: 1.3,
        target_margin: 1.6,
        liq_bonus: 0.05,
        deleverage_margin: 1.45,
        min_init_margin: 1.8,
        price_delta: 0.1,
        max_position_liquidity: f64::INFINITY,
        max_global_liquidity: f64::INFINITY,
        full_liq_below: None,
    };
    params.validate().unwrap();
    params
}

/// Log-spaced price grid from `low` to `high` inclusive.
pub fn log_grid(low: f64, high: f64, points: usize) -> Vec<f64> {
    let ratio = (high / low).powf(1.0 / (points - 1) as f64);
    let mut prices = Vec::with_capacity(points);
    let mut p = low;
    for _ in 0..points {
        prices.push(p);
        p *= ratio;
    }
    prices
}
