//! Binary search for the largest liquidity a user's capital can safely
//! carry: the most liquidity whose margin level stays at or above a
//! threshold at both ends of a target price interval, which the
//! no-local-minima property extends to the whole interval.

use serde::{Deserialize, Serialize};

use crate::clmm::{check_price, position_amounts, PriceRange};
use crate::error::{Error, Result};
use crate::margin::margin_level;
use crate::position::{build_position, BorrowPolicy, UserCapital};

/// Tuning of the bracketed binary search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Relative width of the liquidity bracket at which the search stops.
    pub rel_tolerance: f64,
    /// Iteration budget for the bisection phase.
    pub max_iterations: u32,
    /// Factor by which the upper bracket grows until the condition fails.
    pub bracket_growth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tolerance: 1e-9,
            max_iterations: 200,
            bracket_growth: 2.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "solver tolerance must be positive, got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParams(
                "solver needs at least one iteration".into(),
            ));
        }
        if !(self.bracket_growth > 1.0 && self.bracket_growth.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "bracket growth must exceed 1, got {}",
                self.bracket_growth
            )));
        }
        Ok(())
    }
}

/// Multiplicative half-width of a price interval centered on the
/// deployment price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeFactor(f64);

impl RangeFactor {
    pub fn new(factor: f64) -> Result<Self> {
        if !(factor > 1.0 && factor.is_finite()) {
            return Err(Error::Domain(format!(
                "range factor must be finite and exceed 1, got {factor}"
            )));
        }
        Ok(RangeFactor(factor))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// The geometric interval `(p0/r, p0*r)` around a deployment price.
pub fn interval_from_factor(deploy_price: f64, factor: RangeFactor) -> Result<(f64, f64)> {
    check_price(deploy_price)?;
    let r = factor.get();
    Ok((deploy_price / r, deploy_price * r))
}

/// Largest liquidity such that the position built from `capital` under
/// `policy` keeps its margin level at or above `threshold` at both ends of
/// `interval` (and therefore everywhere inside it).
///
/// Liquidity up to the self-funded level carries no debt and is always
/// safe; past it the endpoint margins fall as liquidity grows, so the
/// first failing bracket is bisected down to the configured tolerance and
/// the certified-safe side is returned. A single-token borrow policy caps
/// feasible liquidity at what the user can fund on the non-borrowed side;
/// if the margin condition still holds at that cap, the cap is the
/// answer. A policy that admits no positive liquidity at all is a bracket
/// failure.
pub fn max_safe_liquidity(
    capital: &UserCapital,
    range: PriceRange,
    deploy_price: f64,
    policy: BorrowPolicy,
    interval: (f64, f64),
    threshold: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    cfg.validate()?;
    check_price(deploy_price)?;
    let (p_low, p_high) = interval;
    if !(p_low > 0.0 && p_low <= deploy_price && deploy_price <= p_high) || !p_high.is_finite() {
        return Err(Error::Domain(format!(
            "interval must satisfy 0 < p_low <= deploy price <= p_high < inf, got ({p_low}, {p_high}) around {deploy_price}"
        )));
    }
    if !(threshold > 1.0 && threshold.is_finite()) {
        return Err(Error::Domain(format!(
            "margin threshold must be finite and exceed 1, got {threshold}"
        )));
    }

    let unit = position_amounts(1.0, &range, deploy_price)?;
    let mut self_funded = f64::INFINITY;
    if unit.base > 0.0 {
        self_funded = self_funded.min(capital.base / unit.base);
    }
    if unit.quote > 0.0 {
        self_funded = self_funded.min(capital.quote / unit.quote);
    }
    debug_assert!(self_funded.is_finite());

    let cap = match policy {
        BorrowPolicy::QuoteOnly if unit.base > 0.0 => capital.base / unit.base,
        BorrowPolicy::BaseOnly if unit.quote > 0.0 => capital.quote / unit.quote,
        _ => f64::INFINITY,
    };
    if cap == 0.0 {
        return Err(Error::BracketFailure(format!(
            "policy {policy:?} admits no positive liquidity: the non-borrowed side starts empty"
        )));
    }

    let min_endpoint_margin = |liquidity: f64| -> Option<f64> {
        let pos = build_position(capital, range, liquidity, deploy_price, policy).ok()?;
        let low = margin_level(&pos, p_low);
        let high = if p_high > p_low {
            margin_level(&pos, p_high)
        } else {
            low
        };
        Some(low.min(high))
    };
    let safe = |liquidity: f64| min_endpoint_margin(liquidity).is_some_and(|m| m >= threshold);

    // Rounding in (capital / unit) * unit can overshoot the capital by an
    // ulp and make the exactly self-funded level infeasible under a
    // single-sided policy, so back off slightly; zero is always safe.
    let mut lo = self_funded * (1.0 - 4.0 * f64::EPSILON);
    if !safe(lo) {
        lo = 0.0;
    }
    let mut hi = if self_funded > 0.0 { self_funded } else { 1.0 };
    #[cfg(debug_assertions)]
    let mut last_margin = f64::INFINITY;
    let mut bracketed = false;
    for _ in 0..4096 {
        hi = (hi * cfg.bracket_growth).min(cap);
        match min_endpoint_margin(hi) {
            Some(m) if m >= threshold => {
                #[cfg(debug_assertions)]
                {
                    assert!(
                        hi <= self_funded || m <= last_margin * (1.0 + 1e-9),
                        "endpoint margin rose from {last_margin} to {m} as liquidity grew to {hi}"
                    );
                    last_margin = m;
                }
                lo = hi;
                if hi >= cap {
                    return Ok(cap);
                }
                if hi > 1e285 {
                    return Ok(f64::INFINITY);
                }
            }
            _ => {
                bracketed = true;
                break;
            }
        }
    }
    if !bracketed {
        return Err(Error::BracketFailure(
            "margin condition never failed while growing the bracket".into(),
        ));
    }

    for _ in 0..cfg.max_iterations {
        if hi - lo <= cfg.rel_tolerance * hi {
            return Ok(lo);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(lo);
        }
        if safe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence(cfg.max_iterations))
}
