//! Margin-level evaluation, leverage conversion, the no-local-minima
//! derivative analysis, endpoint safety certification, and liquidation
//! price bounds.
//!
//! The margin level M(P) is the ratio of asset value (pool position plus
//! extra collateral) to debt value at price P. In square-root-price
//! coordinates the in-range asset value is a quadratic and the debt a
//! quadratic with no linear term, which makes M a rational function whose
//! derivative numerator is itself a quadratic with a strictly negative
//! leading coefficient. Its lower root is never positive, so M has no
//! local minimum over positive prices: checking an interval's endpoints
//! certifies every price between them.

use serde::Serialize;

use crate::clmm::check_price;
use crate::error::{Error, Result};
use crate::position::Position;

/// Margin level at `price`: asset value over debt value.
///
/// Returns the infinity sentinel for debt-free positions, which are safe
/// at every price.
pub fn margin_level(pos: &Position, price: f64) -> f64 {
    let debt = pos.debt_value(price);
    if debt == 0.0 {
        return f64::INFINITY;
    }
    pos.asset_value(price) / debt
}

/// Converts a margin level into a leverage factor, `1 + 1/(M - 1)`.
///
/// Defined only above a margin level of 1.0; at 1.0 the implied leverage
/// is infinite. An infinite margin level maps to leverage 1 (unlevered).
pub fn leverage(margin: f64) -> Result<f64> {
    if !(margin > 1.0) {
        return Err(Error::LeverageUndefined(margin));
    }
    if margin == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(1.0 + 1.0 / (margin - 1.0))
}

/// Coefficients of the margin level as a rational function of the square
/// root of the price, valid while the position is in range, plus the
/// critical points of its derivative.
///
/// Asset value is `asset_quad*S^2 + asset_lin*S + asset_const` and debt is
/// `debt_quad*S^2 + debt_const` for `S = sqrt(P)`. The derivative of their
/// ratio has numerator `slope_quad*S^2 + slope_lin*S + slope_const` with
/// `slope_quad < 0`, so the ratio falls away on both sides of the root
/// `local_max_sqrt` and can only rise through `local_min_sqrt`, which is
/// never positive. Hence no local minimum exists at any positive price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeAnalysis {
    pub asset_quad: f64,
    pub asset_lin: f64,
    pub asset_const: f64,
    pub debt_quad: f64,
    pub debt_const: f64,
    pub slope_quad: f64,
    pub slope_lin: f64,
    pub slope_const: f64,
    /// Root where the slope turns from falling to rising; always <= 0,
    /// outside the price domain.
    pub local_min_sqrt: f64,
    /// Root where the slope turns from rising to falling; the unique
    /// interior maximum of the margin level, always >= 0.
    pub local_max_sqrt: f64,
}

fn sqrt_space_coeffs(pos: &Position) -> (f64, f64, f64, f64, f64) {
    let sa = pos.range.sqrt_lower();
    let sb = pos.range.sqrt_upper();
    let a = pos.collateral.base - pos.liquidity / sb;
    let b = 2.0 * pos.liquidity;
    let c = pos.collateral.quote - pos.liquidity * sa;
    let d = pos.debt.base;
    let e = pos.debt.quote;
    (a, b, c, d, e)
}

/// Analyzes the in-range margin-level derivative for a position with
/// liquidity and base-token debt.
pub fn derivative_analysis(pos: &Position) -> Result<DerivativeAnalysis> {
    if pos.liquidity == 0.0 {
        return Err(Error::AnalysisPrecondition(
            "position has no liquidity".into(),
        ));
    }
    if pos.debt.base == 0.0 {
        return Err(Error::AnalysisPrecondition(
            "position has no base-token debt, margin is monotone in price".into(),
        ));
    }
    let (a, b, c, d, e) = sqrt_space_coeffs(pos);
    let slope_quad = -b * d;
    let slope_lin = 2.0 * (a * e - c * d);
    let slope_const = b * e;

    let disc = slope_lin * slope_lin - 4.0 * slope_quad * slope_const;
    let sq = disc.sqrt();
    let (local_min_sqrt, local_max_sqrt) = if sq == 0.0 {
        let root = -slope_lin / (2.0 * slope_quad);
        (root, root)
    } else {
        let q = if slope_lin >= 0.0 {
            -(slope_lin + sq) / 2.0
        } else {
            (sq - slope_lin) / 2.0
        };
        let r1 = q / slope_quad;
        let r2 = slope_const / q;
        (r1.min(r2), r1.max(r2))
    };

    Ok(DerivativeAnalysis {
        asset_quad: a,
        asset_lin: b,
        asset_const: c,
        debt_quad: d,
        debt_const: e,
        slope_quad,
        slope_lin,
        slope_const,
        local_min_sqrt,
        local_max_sqrt,
    })
}

/// Certifies that the margin level stays at or above `threshold` across
/// `[p_low, p_high]` by checking the endpoints only, which the
/// no-local-minima property makes sufficient.
pub fn check_interval_safety(pos: &Position, p_low: f64, p_high: f64, threshold: f64) -> bool {
    assert!(
        p_low > 0.0 && p_low < p_high && p_high.is_finite(),
        "interval must satisfy 0 < p_low < p_high < inf, got ({p_low}, {p_high})"
    );
    margin_level(pos, p_low) >= threshold && margin_level(pos, p_high) >= threshold
}

/// Prices at which the margin level descends to a threshold, on either
/// side of the deployment price.
///
/// `lower = 0` means the margin never reaches the threshold for any price
/// drop; `upper = inf` means the same for any price rise. A debt-free
/// position gets both sentinels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceBounds {
    pub lower: f64,
    pub upper: f64,
}

fn solve_quadratic_positive_roots(qa: f64, qb: f64, qc: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    if qa.abs() < 1e-300 {
        if qb != 0.0 {
            let r = -qc / qb;
            if r > 0.0 {
                roots.push(r);
            }
        }
        return roots;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return roots;
    }
    let sq = disc.sqrt();
    if sq == 0.0 {
        let r = -qb / (2.0 * qa);
        if r > 0.0 {
            roots.push(r);
        }
        return roots;
    }
    let q = if qb >= 0.0 {
        -(qb + sq) / 2.0
    } else {
        (sq - qb) / 2.0
    };
    for r in [q / qa, if q == 0.0 { f64::NAN } else { qc / q }] {
        if r > 0.0 && r.is_finite() {
            roots.push(r);
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Positive square-root-price roots of `asset(S) = threshold * debt(S)`
/// for the in-range branch, sorted ascending.
fn in_range_threshold_roots(pos: &Position, threshold: f64) -> Vec<f64> {
    let (a, b, c, d, e) = sqrt_space_coeffs(pos);
    solve_quadratic_positive_roots(a - threshold * d, b, c - threshold * e)
}

/// Crossing price on the below-range branch, where assets are
/// `(pool base + collateral base)*P + collateral quote` and both sides are
/// linear in P. Callers must have bracketed a sign change on the branch.
fn below_range_root(pos: &Position, threshold: f64) -> f64 {
    let sa = pos.range.sqrt_lower();
    let sb = pos.range.sqrt_upper();
    let total_base = pos.liquidity * (1.0 / sa - 1.0 / sb) + pos.collateral.base;
    let slope = total_base - threshold * pos.debt.base;
    debug_assert!(slope != 0.0, "bracketed linear crossing needs nonzero slope");
    (threshold * pos.debt.quote - pos.collateral.quote) / slope
}

/// Crossing price on the above-range branch, where assets are
/// `collateral base*P + (pool quote + collateral quote)`.
fn above_range_root(pos: &Position, threshold: f64) -> f64 {
    let sa = pos.range.sqrt_lower();
    let sb = pos.range.sqrt_upper();
    let total_quote = pos.liquidity * (sb - sa) + pos.collateral.quote;
    let slope = pos.collateral.base - threshold * pos.debt.base;
    debug_assert!(slope != 0.0, "bracketed linear crossing needs nonzero slope");
    (threshold * pos.debt.quote - total_quote) / slope
}

/// Bisects the margin level against `threshold` between a price known safe
/// and a price known unsafe. Used as a fallback when a closed-form root is
/// lost to boundary rounding.
fn bisect_crossing(pos: &Position, threshold: f64, p_safe: f64, p_unsafe: f64) -> f64 {
    let mut safe = p_safe;
    let mut unsafe_p = p_unsafe;
    for _ in 0..200 {
        let mid = 0.5 * (safe + unsafe_p);
        if mid == safe || mid == unsafe_p {
            break;
        }
        if margin_level(pos, mid) >= threshold {
            safe = mid;
        } else {
            unsafe_p = mid;
        }
    }
    0.5 * (safe + unsafe_p)
}

const BOUNDARY_SLOP: f64 = 1e-12;

fn lower_crossing(pos: &Position, threshold: f64) -> f64 {
    let range = &pos.range;
    let p0 = pos.deploy_price;

    if p0 >= range.upper && margin_level(pos, range.upper) < threshold {
        return above_range_root(pos, threshold);
    }

    if p0 > range.lower {
        let top = p0.min(range.upper);
        let top_s = top.sqrt();
        let floor = range.lower * (1.0 - BOUNDARY_SLOP);
        let candidate = in_range_threshold_roots(pos, threshold)
            .into_iter()
            .filter(|r| *r <= top_s && r * r >= floor)
            .next_back();
        if let Some(root) = candidate {
            return root * root;
        }
        if range.lower == 0.0 {
            return 0.0;
        }
        if margin_level(pos, range.lower) < threshold {
            return bisect_crossing(pos, threshold, top, range.lower);
        }
    }

    if range.lower > 0.0 && threshold * pos.debt.quote > pos.collateral.quote {
        return below_range_root(pos, threshold);
    }
    0.0
}

fn upper_crossing(pos: &Position, threshold: f64) -> f64 {
    let range = &pos.range;
    let p0 = pos.deploy_price;

    if p0 <= range.lower && margin_level(pos, range.lower) < threshold {
        return below_range_root(pos, threshold);
    }

    if p0 < range.upper {
        let bottom = p0.max(range.lower);
        let bottom_s = bottom.sqrt() * (1.0 - BOUNDARY_SLOP);
        let cap = range.upper * (1.0 + BOUNDARY_SLOP);
        let candidate = in_range_threshold_roots(pos, threshold)
            .into_iter()
            .find(|r| *r >= bottom_s && r * r <= cap);
        if let Some(root) = candidate {
            return root * root;
        }
        if range.upper == f64::INFINITY {
            return f64::INFINITY;
        }
        if margin_level(pos, range.upper) < threshold {
            return bisect_crossing(pos, threshold, bottom, range.upper);
        }
    }

    if pos.collateral.base < threshold * pos.debt.base {
        return above_range_root(pos, threshold);
    }
    f64::INFINITY
}

/// Prices on each side of the deployment price at which the margin level
/// falls to `threshold`.
///
/// The position must be strictly healthy at its deployment price.
/// Out-of-range crossings come from exact linear solves; in-range
/// crossings from the square-root-space quadratic, squared at the end,
/// with a bisection fallback if rounding pushes a root past a range
/// boundary. Sentinels (`0`, `inf`) mean the margin never descends to the
/// threshold on that side.
pub fn price_bounds(pos: &Position, threshold: f64) -> Result<PriceBounds> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::Domain(format!(
            "margin threshold must be positive and finite, got {threshold}"
        )));
    }
    if !pos.has_debt() {
        return Ok(PriceBounds {
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    let margin = margin_level(pos, pos.deploy_price);
    if !(margin > threshold) {
        return Err(Error::UnsafeAtDeployment {
            margin,
            price: pos.deploy_price,
            threshold,
        });
    }
    Ok(PriceBounds {
        lower: lower_crossing(pos, threshold),
        upper: upper_crossing(pos, threshold),
    })
}

/// One point of a sampled margin curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginSample {
    pub price: f64,
    pub margin: f64,
    pub in_range: bool,
}

/// Margin level sampled over a price grid, optionally annotated with the
/// liquidation price bounds for a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginCurve {
    pub samples: Vec<MarginSample>,
    pub threshold: Option<f64>,
    pub bounds: Option<PriceBounds>,
}

/// Samples the margin level over `grid` (strictly increasing, positive).
///
/// When a threshold is given and the position is healthy at deployment,
/// the curve carries the matching price bounds; otherwise the annotation
/// is omitted.
pub fn margin_curve(pos: &Position, grid: &[f64], threshold: Option<f64>) -> Result<MarginCurve> {
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Domain(format!(
                "price grid must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    for &p in grid {
        check_price(p)?;
    }
    let samples = grid
        .iter()
        .map(|&price| MarginSample {
            price,
            margin: margin_level(pos, price),
            in_range: pos.range.contains(price),
        })
        .collect();
    let bounds = threshold.and_then(|t| price_bounds(pos, t).ok());
    Ok(MarginCurve {
        samples,
        threshold,
        bounds,
    })
}
