//! Price-path simulation: walks a position along an explicit price list,
//! firing the protocol deleverage trigger and the liquidation flow.

use clamp_core::{deleverage, liquidate, margin_level, Position, ProtocolParams};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceAction {
    None,
    Deleverage,
    Liquidate,
}

impl TraceAction {
    pub fn label(self) -> &'static str {
        match self {
            TraceAction::None => "none",
            TraceAction::Deleverage => "deleverage",
            TraceAction::Liquidate => "liquidate",
        }
    }
}

/// One trace row. A price step emits one event per action it triggered,
/// or a single idle event; `margin` is sampled when the trigger check ran,
/// `margin_after` after the action took effect.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub price: f64,
    pub margin: f64,
    pub action: TraceAction,
    pub repaid_value: f64,
    pub bonus_value: f64,
    pub bad_debt: f64,
    pub margin_after: f64,
    pub cumulative_bad_debt: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulationTrace {
    pub admin_failure: bool,
    pub events: Vec<TraceEvent>,
    pub deleverages: u32,
    pub liquidations: u32,
    pub total_bad_debt: f64,
    pub final_margin: f64,
}

/// Runs the trigger flow over `path`. With the admin system up, the
/// protocol deleverages as soon as the margin drops below the deleverage
/// threshold, well before liquidation. With `admin_failure` set that
/// trigger is dead: liquidators deleverage and liquidate within the same
/// step once the margin crosses the liquidation threshold.
pub fn simulate(
    pos: &Position,
    path: &[f64],
    params: &ProtocolParams,
    admin_failure: bool,
) -> Result<(SimulationTrace, Position), CliError> {
    let mut pos = *pos;
    let mut events = Vec::new();
    let mut cumulative_bad_debt = 0.0;
    let mut deleverages = 0u32;
    let mut liquidations = 0u32;

    for (step, &price) in path.iter().enumerate() {
        let margin = margin_level(&pos, price);
        let step_start = events.len();

        if !admin_failure && pos.liquidity > 0.0 && margin < params.deleverage_margin {
            let (next, repaid) = deleverage(&pos, price);
            events.push(TraceEvent {
                step,
                price,
                margin,
                action: TraceAction::Deleverage,
                repaid_value: repaid,
                bonus_value: 0.0,
                bad_debt: 0.0,
                margin_after: margin_level(&next, price),
                cumulative_bad_debt,
            });
            deleverages += 1;
            pos = next;
        }

        let current = margin_level(&pos, price);
        if current < params.liq_margin {
            if pos.liquidity > 0.0 {
                // Admin failure: the liquidators deleverage first, within
                // the same step.
                let (next, repaid) = deleverage(&pos, price);
                events.push(TraceEvent {
                    step,
                    price,
                    margin: current,
                    action: TraceAction::Deleverage,
                    repaid_value: repaid,
                    bonus_value: 0.0,
                    bad_debt: 0.0,
                    margin_after: margin_level(&next, price),
                    cumulative_bad_debt,
                });
                deleverages += 1;
                pos = next;
            }
            let at_liquidation = margin_level(&pos, price);
            // A position whose assets are already gone has nothing left to
            // seize; its bad debt was reported when the assets ran out, so
            // it must not be liquidated (and counted) again.
            if at_liquidation < params.liq_margin
                && pos.has_debt()
                && pos.asset_value(price) > 0.0
            {
                let (next, outcome) =
                    liquidate(&pos, price, params).map_err(CliError::analysis)?;
                cumulative_bad_debt += outcome.bad_debt;
                events.push(TraceEvent {
                    step,
                    price,
                    margin: at_liquidation,
                    action: TraceAction::Liquidate,
                    repaid_value: outcome.repaid_value,
                    bonus_value: outcome.bonus_value,
                    bad_debt: outcome.bad_debt,
                    margin_after: margin_level(&next, price),
                    cumulative_bad_debt,
                });
                liquidations += 1;
                pos = next;
            }
        }

        if events.len() == step_start {
            events.push(TraceEvent {
                step,
                price,
                margin,
                action: TraceAction::None,
                repaid_value: 0.0,
                bonus_value: 0.0,
                bad_debt: 0.0,
                margin_after: margin,
                cumulative_bad_debt,
            });
        }
    }

    let final_price = path.last().copied().unwrap_or(pos.deploy_price);
    let trace = SimulationTrace {
        admin_failure,
        events,
        deleverages,
        liquidations,
        total_bad_debt: cumulative_bad_debt,
        final_margin: margin_level(&pos, final_price),
    };
    Ok((trace, pos))
}
