//! Protocol state transitions and configuration: position-creation checks,
//! proportional reduction, deleveraging, liquidation, and the supply-pool
//! interest curve.
//!
//! All transitions execute at a given oracle price with no slippage or
//! swap fees: conversions between the two tokens are valued at that price
//! only. Each operation returns a new position value; nothing is mutated
//! in place.

use serde::{Deserialize, Serialize};

use crate::clmm::TokenAmounts;
use crate::error::{Error, Result};
use crate::margin::margin_level;
use crate::position::Position;

/// Risk thresholds and caps governing creation, deleveraging, and
/// liquidation.
///
/// The critical margin is `1 + liq_bonus`: below it a full liquidation
/// cannot cover both the debt and the liquidator bonus. Thresholds must
/// satisfy `1 < 1 + liq_bonus < liq_margin < target_margin`, and the
/// deleverage trigger sits above the liquidation threshold so deleveraging
/// gets a chance to run first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Margin level below which liquidation becomes possible.
    pub liq_margin: f64,
    /// Margin level a partial liquidation restores.
    pub target_margin: f64,
    /// Fraction of the repaid value paid to the liquidator.
    pub liq_bonus: f64,
    /// Margin level below which the position is forcibly deleveraged.
    pub deleverage_margin: f64,
    /// Minimum margin level required at creation.
    pub min_init_margin: f64,
    /// Relative price shift used by the creation safety check.
    pub price_delta: f64,
    /// Per-position liquidity cap; infinite means uncapped.
    #[serde(default = "uncapped")]
    pub max_position_liquidity: f64,
    /// Pool-wide liquidity cap; infinite means uncapped.
    #[serde(default = "uncapped")]
    pub max_global_liquidity: f64,
    /// Margin level below which the position is liquidated in full rather
    /// than restored to the target. Defaults to halfway between the
    /// critical and liquidation margins.
    #[serde(default)]
    pub full_liq_below: Option<f64>,
}

fn uncapped() -> f64 {
    f64::INFINITY
}

impl ProtocolParams {
    /// The margin level `1 + liq_bonus` at which assets exactly cover debt
    /// plus bonus.
    pub fn critical_margin(&self) -> f64 {
        1.0 + self.liq_bonus
    }

    /// The full-liquidation cutoff, defaulted when not configured.
    pub fn full_liq_threshold(&self) -> f64 {
        self.full_liq_below
            .unwrap_or(0.5 * (self.liq_margin + self.critical_margin()))
    }

    /// Checks every parameter invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if !(self.liq_bonus > 0.0 && self.liq_bonus.is_finite()) {
            violations.push(format!("liq_bonus must be positive, got {}", self.liq_bonus));
        }
        if !(self.liq_margin > self.critical_margin()) {
            violations.push(format!(
                "liq_margin {} must exceed the critical margin {}",
                self.liq_margin,
                self.critical_margin()
            ));
        }
        if !(self.target_margin > self.liq_margin) {
            violations.push(format!(
                "target_margin {} must exceed liq_margin {}",
                self.target_margin, self.liq_margin
            ));
        }
        if !(self.deleverage_margin > self.liq_margin) {
            violations.push(format!(
                "deleverage_margin {} must exceed liq_margin {}",
                self.deleverage_margin, self.liq_margin
            ));
        }
        if !(self.min_init_margin > 1.0) {
            violations.push(format!(
                "min_init_margin must exceed 1.0, got {}",
                self.min_init_margin
            ));
        }
        if !(self.price_delta > 0.0 && self.price_delta < 1.0) {
            violations.push(format!(
                "price_delta must lie in (0, 1), got {}",
                self.price_delta
            ));
        }
        if !(self.max_position_liquidity > 0.0) {
            violations.push(format!(
                "max_position_liquidity must be positive, got {}",
                self.max_position_liquidity
            ));
        }
        if !(self.max_global_liquidity > 0.0) {
            violations.push(format!(
                "max_global_liquidity must be positive, got {}",
                self.max_global_liquidity
            ));
        }
        if let Some(cutoff) = self.full_liq_below {
            if !(cutoff >= self.critical_margin() && cutoff <= self.liq_margin) {
                violations.push(format!(
                    "full_liq_below {} must lie between the critical margin {} and liq_margin {}",
                    cutoff,
                    self.critical_margin(),
                    self.liq_margin
                ));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(violations.join("; ")))
        }
    }
}

/// One failed creation assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CreationViolation {
    PriceOutsideRange {
        price: f64,
        lower: f64,
        upper: f64,
    },
    UnsafeUnderPriceDelta {
        shifted_price: f64,
        margin: f64,
        required: f64,
    },
    BelowInitialMargin {
        margin: f64,
        required: f64,
    },
    PositionLiquidityCap {
        liquidity: f64,
        cap: f64,
    },
    GlobalLiquidityCap {
        liquidity: f64,
        current: f64,
        cap: f64,
    },
}

impl std::fmt::Display for CreationViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CreationViolation::PriceOutsideRange { price, lower, upper } => write!(
                f,
                "deployment price {price} lies outside the position range [{lower}, {upper}]"
            ),
            CreationViolation::UnsafeUnderPriceDelta {
                shifted_price,
                margin,
                required,
            } => write!(
                f,
                "margin {margin} at shifted price {shifted_price} does not exceed liq_margin {required}"
            ),
            CreationViolation::BelowInitialMargin { margin, required } => write!(
                f,
                "margin {margin} at deployment does not exceed min_init_margin {required}"
            ),
            CreationViolation::PositionLiquidityCap { liquidity, cap } => {
                write!(f, "liquidity {liquidity} exceeds the per-position cap {cap}")
            }
            CreationViolation::GlobalLiquidityCap {
                liquidity,
                current,
                cap,
            } => write!(
                f,
                "liquidity {liquidity} on top of current pool liquidity {current} exceeds the global cap {cap}"
            ),
        }
    }
}

/// Evaluates every creation assertion and returns all violations; an empty
/// list means the position may be created.
pub fn check_creation(
    pos: &Position,
    params: &ProtocolParams,
    current_global_liquidity: f64,
) -> Vec<CreationViolation> {
    let mut violations = Vec::new();
    let p0 = pos.deploy_price;

    if p0 < pos.range.lower || p0 > pos.range.upper {
        violations.push(CreationViolation::PriceOutsideRange {
            price: p0,
            lower: pos.range.lower,
            upper: pos.range.upper,
        });
    }

    let down = (1.0 - params.price_delta) * p0;
    let up = (1.0 + params.price_delta) * p0;
    let m_down = margin_level(pos, down);
    let m_up = margin_level(pos, up);
    let (shifted_price, margin) = if m_down <= m_up { (down, m_down) } else { (up, m_up) };
    if !(margin > params.liq_margin) {
        violations.push(CreationViolation::UnsafeUnderPriceDelta {
            shifted_price,
            margin,
            required: params.liq_margin,
        });
    }

    let m0 = margin_level(pos, p0);
    if !(m0 > params.min_init_margin) {
        violations.push(CreationViolation::BelowInitialMargin {
            margin: m0,
            required: params.min_init_margin,
        });
    }

    if pos.liquidity > params.max_position_liquidity {
        violations.push(CreationViolation::PositionLiquidityCap {
            liquidity: pos.liquidity,
            cap: params.max_position_liquidity,
        });
    }

    if current_global_liquidity + pos.liquidity > params.max_global_liquidity {
        violations.push(CreationViolation::GlobalLiquidityCap {
            liquidity: pos.liquidity,
            current: current_global_liquidity,
            cap: params.max_global_liquidity,
        });
    }

    violations
}

/// Value accounting of a proportional reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionOutcome {
    pub fraction: f64,
    pub removed_value: f64,
    pub repaid_value: f64,
    pub freed_value: f64,
}

/// Scales a healthy position down by fraction `k`: liquidity, collateral,
/// and debt all shrink to `(1-k)` of themselves, so the margin level is
/// unchanged and `k` times the position equity is freed.
pub fn reduce(
    pos: &Position,
    k: f64,
    price: f64,
    params: &ProtocolParams,
) -> Result<(Position, ReductionOutcome)> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!(
            "reduction fraction must lie in (0, 1), got {k}"
        )));
    }
    let margin = margin_level(pos, price);
    if !(margin > params.liq_margin) {
        return Err(Error::UnhealthyPosition {
            margin,
            threshold: params.liq_margin,
        });
    }
    let keep = 1.0 - k;
    let reduced = Position {
        liquidity: keep * pos.liquidity,
        range: pos.range,
        collateral: TokenAmounts {
            base: keep * pos.collateral.base,
            quote: keep * pos.collateral.quote,
        },
        debt: TokenAmounts {
            base: keep * pos.debt.base,
            quote: keep * pos.debt.quote,
        },
        deploy_price: pos.deploy_price,
    };
    let removed_value = k * pos.asset_value(price);
    let repaid_value = k * pos.debt_value(price);
    let outcome = ReductionOutcome {
        fraction: k,
        removed_value,
        repaid_value,
        freed_value: removed_value - repaid_value,
    };
    Ok((reduced, outcome))
}

/// Withdraws all liquidity at `price` and nets each token against the debt
/// on the same side, without swapping. Returns the deleveraged position
/// and the value repaid.
///
/// The result holds no pool liquidity, and on each token either the
/// collateral or the debt is zero. For positions with margin above 1 the
/// margin level can only rise; with no overlap between held tokens and
/// owed tokens it stays exactly put.
pub fn deleverage(pos: &Position, price: f64) -> (Position, f64) {
    let withdrawn = pos.pool_amounts(price);
    let total_base = pos.collateral.base + withdrawn.base;
    let total_quote = pos.collateral.quote + withdrawn.quote;

    let repay_base = total_base.min(pos.debt.base);
    let repay_quote = total_quote.min(pos.debt.quote);

    let deleveraged = Position {
        liquidity: 0.0,
        range: pos.range,
        collateral: TokenAmounts {
            base: total_base - repay_base,
            quote: total_quote - repay_quote,
        },
        debt: TokenAmounts {
            base: pos.debt.base - repay_base,
            quote: pos.debt.quote - repay_quote,
        },
        deploy_price: pos.deploy_price,
    };
    (deleveraged, repay_base * price + repay_quote)
}

/// Fraction `k` of assets a liquidation may claim at margin level
/// `margin`: zero at or above the liquidation threshold, the
/// target-restoring fraction between the critical and liquidation
/// thresholds, and `1/(1+bonus)` at or below the critical margin. The
/// middle branch is continuous with the last at the critical margin.
pub fn liquidation_fraction(margin: f64, params: &ProtocolParams) -> f64 {
    let critical = params.critical_margin();
    if margin >= params.liq_margin {
        0.0
    } else if margin <= critical {
        1.0 / (1.0 + params.liq_bonus)
    } else {
        (params.target_margin - margin) / ((params.target_margin - critical) * margin)
    }
}

/// Value accounting of a liquidation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiquidationOutcome {
    /// Fraction of assets whose value repays debt; the liquidator consumes
    /// `(1 + bonus)` times this fraction.
    pub fraction: f64,
    pub repaid_value: f64,
    pub bonus_value: f64,
    pub residual_assets: f64,
    pub residual_debt: f64,
    /// Margin after the liquidation; absent when no debt remains.
    pub post_margin: Option<f64>,
    /// Debt value left with no assets backing it.
    pub bad_debt: f64,
}

fn scale_amounts(amounts: &TokenAmounts, factor: f64) -> TokenAmounts {
    if factor <= 0.0 {
        TokenAmounts::zero()
    } else {
        TokenAmounts {
            base: amounts.base * factor,
            quote: amounts.quote * factor,
        }
    }
}

/// Liquidates a fully deleveraged position at the oracle price.
///
/// Above the liquidation threshold nothing happens. Between the
/// full-liquidation cutoff and the threshold, just enough assets are sold
/// to restore the target margin. Below the cutoff the whole debt is
/// repaid. At or below the critical margin `1 + bonus` the assets cannot
/// cover debt plus bonus: the bonus is reserved first, the remainder
/// repays debt, and what cannot be repaid is reported as bad debt.
pub fn liquidate(
    pos: &Position,
    price: f64,
    params: &ProtocolParams,
) -> Result<(Position, LiquidationOutcome)> {
    if pos.liquidity > 0.0 {
        return Err(Error::NotDeleveraged(pos.liquidity));
    }
    let assets = pos.asset_value(price);
    let debt = pos.debt_value(price);

    if debt == 0.0 {
        let outcome = LiquidationOutcome {
            fraction: 0.0,
            repaid_value: 0.0,
            bonus_value: 0.0,
            residual_assets: assets,
            residual_debt: 0.0,
            post_margin: None,
            bad_debt: 0.0,
        };
        return Ok((*pos, outcome));
    }

    let margin = assets / debt;
    if margin >= params.liq_margin {
        let outcome = LiquidationOutcome {
            fraction: 0.0,
            repaid_value: 0.0,
            bonus_value: 0.0,
            residual_assets: assets,
            residual_debt: debt,
            post_margin: Some(margin),
            bad_debt: 0.0,
        };
        return Ok((*pos, outcome));
    }

    let critical = params.critical_margin();
    let (fraction, repaid_value, bonus_value, residual_assets, residual_debt) =
        if margin <= critical {
            // Assets cannot cover debt plus bonus: pay the bonus first,
            // repay with the rest. Everything is consumed.
            let bonus = (params.liq_bonus * debt).min(assets);
            let repaid = assets - bonus;
            let k = 1.0 / (1.0 + params.liq_bonus);
            (k, repaid, bonus, 0.0, (debt - repaid).max(0.0))
        } else if margin < params.full_liq_threshold() {
            let leftover = (assets - (1.0 + params.liq_bonus) * debt).max(0.0);
            (1.0 / margin, debt, params.liq_bonus * debt, leftover, 0.0)
        } else {
            let k = liquidation_fraction(margin, params);
            let repaid = (k * assets).min(debt);
            let bonus = params.liq_bonus * repaid;
            let leftover = (assets - repaid - bonus).max(0.0);
            (k, repaid, bonus, leftover, (debt - repaid).max(0.0))
        };
    let bad_debt = if residual_assets == 0.0 { residual_debt } else { 0.0 };

    let after = Position {
        liquidity: 0.0,
        range: pos.range,
        collateral: scale_amounts(&pos.collateral, residual_assets / assets),
        debt: scale_amounts(&pos.debt, residual_debt / debt),
        deploy_price: pos.deploy_price,
    };
    let outcome = LiquidationOutcome {
        fraction,
        repaid_value,
        bonus_value,
        residual_assets,
        residual_debt,
        post_margin: if residual_debt > 0.0 {
            Some(residual_assets / residual_debt)
        } else {
            None
        },
        bad_debt,
    };
    Ok((after, outcome))
}

/// One knot of the interest curve: the annualized rate at a utilization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateKnot {
    pub utilization: f64,
    pub rate: f64,
}

/// Piecewise-linear interest curve over pool utilization, kinked at its
/// knots. Must span utilization 0 through 1 with non-decreasing rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterestCurve {
    pub knots: Vec<RateKnot>,
}

impl InterestCurve {
    pub fn new(knots: Vec<RateKnot>) -> Result<Self> {
        let curve = InterestCurve { knots };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.len() < 2 {
            return Err(Error::InvalidParams(
                "interest curve needs at least two knots".into(),
            ));
        }
        let first = self.knots.first().unwrap();
        let last = self.knots.last().unwrap();
        if first.utilization != 0.0 || last.utilization != 1.0 {
            return Err(Error::InvalidParams(format!(
                "interest curve must span utilization 0 to 1, got {} to {}",
                first.utilization, last.utilization
            )));
        }
        for knot in &self.knots {
            if !(knot.rate >= 0.0 && knot.rate.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "interest rate must be finite and >= 0, got {}",
                    knot.rate
                )));
            }
        }
        for pair in self.knots.windows(2) {
            if pair[1].utilization <= pair[0].utilization {
                return Err(Error::InvalidParams(
                    "interest curve knots must have strictly increasing utilization".into(),
                ));
            }
            if pair[1].rate < pair[0].rate {
                return Err(Error::InvalidParams(
                    "interest curve rates must be non-decreasing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Annualized borrow rate at `utilization`, interpolated linearly between
/// the curve's knots and exact at the knots themselves.
pub fn interest_rate(utilization: f64, curve: &InterestCurve) -> Result<f64> {
    if !(0.0..=1.0).contains(&utilization) {
        return Err(Error::Domain(format!(
            "utilization must lie in [0, 1], got {utilization}"
        )));
    }
    for knot in &curve.knots {
        if knot.utilization == utilization {
            return Ok(knot.rate);
        }
    }
    let segment = curve
        .knots
        .windows(2)
        .find(|pair| utilization > pair[0].utilization && utilization < pair[1].utilization)
        .expect("curve spans [0, 1]");
    let t = (utilization - segment[0].utilization)
        / (segment[1].utilization - segment[0].utilization);
    Ok(segment[0].rate + t * (segment[1].rate - segment[0].rate))
}
