//! Audits resistance to spot-price manipulation: swapping the pool price
//! away from the oracle price can only push token amounts into the
//! position, never drain value out of it when value is measured at the
//! oracle price.
//!
//! A manipulation swap moves the pool composition along the liquidity
//! curve. The audit values the composition change at the oracle price
//! only; swap fees, which would make an attack strictly more expensive,
//! are ignored.

use serde::Serialize;

use crate::clmm::{check_liquidity, check_price};
use crate::error::Result;
use crate::margin::margin_level;
use crate::position::Position;

/// Token flows into a liquidity range as the pool price moves, with
/// opposite signs: one token enters while the other leaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapDelta {
    pub delta_base: f64,
    pub delta_quote: f64,
    pub price_before: f64,
    pub price_after: f64,
}

impl SwapDelta {
    /// Net value of the flows at `price`.
    pub fn value_at(&self, price: f64) -> f64 {
        self.delta_base * price + self.delta_quote
    }
}

/// Composition change of in-range liquidity `liquidity` as the price moves
/// from `price_before` to `price_after`.
///
/// The square-root gap is evaluated as the price gap over the root sum,
/// which keeps full relative accuracy when the two prices nearly coincide;
/// subtracting the rounded roots directly would not.
pub fn swap_delta(liquidity: f64, price_before: f64, price_after: f64) -> Result<SwapDelta> {
    check_liquidity(liquidity)?;
    check_price(price_before)?;
    check_price(price_after)?;
    let s_before = price_before.sqrt();
    let s_after = price_after.sqrt();
    let s_gap = (price_after - price_before) / (s_after + s_before);
    Ok(SwapDelta {
        delta_base: -liquidity * s_gap / (s_after * s_before),
        delta_quote: liquidity * s_gap,
        price_before,
        price_after,
    })
}

/// Value gained by in-range liquidity when a swap moves the pool price
/// from `price` to `price_after`, measured at the pre-move price.
///
/// Equal to the token flows valued at `price`, evaluated in the factored
/// form `liquidity * gap^2 / sqrt(price_after)` for the square-root gap
/// between the prices, so the result is never negative and a no-op swap
/// yields exactly zero.
pub fn swap_value_delta(liquidity: f64, price: f64, price_after: f64) -> Result<f64> {
    check_liquidity(liquidity)?;
    check_price(price)?;
    check_price(price_after)?;
    let s_before = price.sqrt();
    let s_after = price_after.sqrt();
    let s_gap = (price_after - price) / (s_after + s_before);
    Ok(liquidity * s_gap * s_gap / s_after)
}

/// Effect of manipulating the pool to one target price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetAudit {
    pub target_price: f64,
    pub delta_base: f64,
    pub delta_quote: f64,
    /// Change in asset value, priced at the oracle.
    pub value_delta: f64,
    /// Margin level after the manipulation, still priced at the oracle.
    pub margin_after: f64,
}

/// Manipulation audit of one position across a list of target prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub oracle_price: f64,
    pub asset_value: f64,
    pub margin: f64,
    pub targets: Vec<TargetAudit>,
    /// Worst value change across all targets; a sound position never sees
    /// a meaningful negative here.
    pub min_value_delta: Option<f64>,
}

/// Values the composition change a manipulation to each target price
/// would force on the position, at the oracle price.
///
/// The pool amounts already clamp at the range bounds, so a target on the
/// same out-of-range side as the oracle changes nothing at all, and a
/// cross-range move only counts the in-range stretch. Debt is priced at
/// the oracle and untouched, so the margin level can only rise.
pub fn audit_position(
    pos: &Position,
    oracle_price: f64,
    targets: &[f64],
) -> Result<AuditReport> {
    check_price(oracle_price)?;
    for &t in targets {
        check_price(t)?;
    }
    let asset_value = pos.asset_value(oracle_price);
    let margin = margin_level(pos, oracle_price);
    let debt = pos.debt_value(oracle_price);

    let lower = pos.range.lower;
    let upper = pos.range.upper;
    let clamped_oracle = oracle_price.clamp(lower, upper);
    let s_oracle = clamped_oracle.sqrt();

    let mut audits = Vec::with_capacity(targets.len());
    for &target_price in targets {
        let clamped_target = target_price.clamp(lower, upper);
        let delta = swap_delta(pos.liquidity, clamped_oracle, clamped_target)?;

        // Value the flows at the oracle price as two parts with definite
        // signs: the slippage square of the in-range stretch, plus the
        // distance of an out-of-range oracle from its clamp, which always
        // points along the flow. Neither part can round below zero, so
        // the sum cannot either.
        let s_target = clamped_target.sqrt();
        let s_gap = (clamped_target - clamped_oracle) / (s_target + s_oracle);
        let slippage = pos.liquidity * s_gap * s_gap / s_target;
        let clamp_shift =
            pos.liquidity * s_gap * (clamped_oracle - oracle_price) / (s_oracle * s_target);
        let value_delta = slippage + clamp_shift;

        let margin_after = if debt == 0.0 {
            f64::INFINITY
        } else {
            (asset_value + value_delta) / debt
        };
        audits.push(TargetAudit {
            target_price,
            delta_base: delta.delta_base,
            delta_quote: delta.delta_quote,
            value_delta,
            margin_after,
        });
    }

    let min_value_delta = audits
        .iter()
        .map(|a| a.value_delta)
        .min_by(|x, y| x.partial_cmp(y).unwrap());

    Ok(AuditReport {
        oracle_price,
        asset_value,
        margin,
        targets: audits,
        min_value_delta,
    })
}
