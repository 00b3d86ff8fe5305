//! Constant-product concentrated-liquidity primitives: square-root prices,
//! token amounts held by a range position, position and hold-portfolio
//! values, and divergence loss.
//!
//! All math runs in double precision. Prices are quoted as quote units per
//! base unit, and the natural coordinate for most formulas is the square
//! root of the price. A full-range position is the pair `(0, +inf)`; the
//! branch formulas take the corresponding limits without special casing.
//!
//! A position below its range (price at or under the lower bound) is held
//! entirely in the base token, and above its range entirely in the quote
//! token. Some informal descriptions of CL pools state the opposite
//! orientation; the value formula used here is the one consistent with the
//! virtual-reserve algebra, and amounts and values agree with it exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square root of a price, the coordinate in which CL formulas are linear.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SqrtPrice(f64);

impl SqrtPrice {
    /// Wraps an already-rooted value. Must be non-negative (zero and
    /// positive infinity act as range-bound sentinels).
    pub fn new(s: f64) -> Result<Self> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::Domain(format!("sqrt price must be >= 0, got {s}")));
        }
        Ok(SqrtPrice(s))
    }

    /// Takes the square root of a price.
    pub fn from_price(price: f64) -> Result<Self> {
        if price.is_nan() || price < 0.0 {
            return Err(Error::Domain(format!("price must be >= 0, got {price}")));
        }
        Ok(SqrtPrice(price.sqrt()))
    }

    /// The rooted value itself.
    pub fn value(self) -> f64 {
        self.0
    }

    /// Squares back to a price.
    pub fn price(self) -> f64 {
        self.0 * self.0
    }
}

/// Price interval a position provides liquidity over.
///
/// `lower` may be zero and `upper` may be infinite; `(0, +inf)` is the
/// full-range position equivalent to an unconcentrated pool share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRange {
    pub lower: f64,
    pub upper: f64,
}

impl PriceRange {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::Domain("price range bounds must not be NaN".into()));
        }
        if lower < 0.0 {
            return Err(Error::Domain(format!(
                "range lower bound must be >= 0, got {lower}"
            )));
        }
        if upper <= lower {
            return Err(Error::Domain(format!(
                "range upper bound must exceed lower bound, got ({lower}, {upper})"
            )));
        }
        Ok(PriceRange { lower, upper })
    }

    /// The `(0, +inf)` range covering every price.
    pub fn full_range() -> Self {
        PriceRange {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn is_full_range(&self) -> bool {
        self.lower == 0.0 && self.upper == f64::INFINITY
    }

    /// Whether the price sits strictly inside the range, where the position
    /// holds both tokens.
    pub fn contains(&self, price: f64) -> bool {
        self.lower < price && price < self.upper
    }

    pub fn sqrt_lower(&self) -> f64 {
        self.lower.sqrt()
    }

    pub fn sqrt_upper(&self) -> f64 {
        self.upper.sqrt()
    }
}

/// A pair of real token balances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TokenAmounts {
    pub base: f64,
    pub quote: f64,
}

impl TokenAmounts {
    pub fn new(base: f64, quote: f64) -> Result<Self> {
        if !(base >= 0.0 && base.is_finite()) || !(quote >= 0.0 && quote.is_finite()) {
            return Err(Error::Domain(format!(
                "token amounts must be finite and >= 0, got ({base}, {quote})"
            )));
        }
        Ok(TokenAmounts { base, quote })
    }

    pub fn zero() -> Self {
        TokenAmounts {
            base: 0.0,
            quote: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.base == 0.0 && self.quote == 0.0
    }
}

pub(crate) fn check_price(price: f64) -> Result<()> {
    if !(price > 0.0) || !price.is_finite() {
        return Err(Error::Domain(format!(
            "price must be positive and finite, got {price}"
        )));
    }
    Ok(())
}

pub(crate) fn check_liquidity(liquidity: f64) -> Result<()> {
    if !(liquidity >= 0.0) || !liquidity.is_finite() {
        return Err(Error::Domain(format!(
            "liquidity must be finite and >= 0, got {liquidity}"
        )));
    }
    Ok(())
}

pub(crate) fn amounts_raw(liquidity: f64, range: &PriceRange, price: f64) -> TokenAmounts {
    let sa = range.sqrt_lower();
    let sb = range.sqrt_upper();
    if price <= range.lower {
        TokenAmounts {
            base: liquidity * (1.0 / sa - 1.0 / sb),
            quote: 0.0,
        }
    } else if price >= range.upper {
        TokenAmounts {
            base: 0.0,
            quote: liquidity * (sb - sa),
        }
    } else {
        let s = price.sqrt();
        TokenAmounts {
            base: liquidity * (1.0 / s - 1.0 / sb),
            quote: liquidity * (s - sa),
        }
    }
}

/// Real token amounts a position of `liquidity` over `range` holds at
/// `price`.
///
/// Below the range the position is entirely base token, above it entirely
/// quote token, and in between it holds the virtual reserves minus the
/// constant offsets fixed by the range bounds.
pub fn position_amounts(liquidity: f64, range: &PriceRange, price: f64) -> Result<TokenAmounts> {
    check_liquidity(liquidity)?;
    check_price(price)?;
    Ok(amounts_raw(liquidity, range, price))
}

pub(crate) fn value_raw(liquidity: f64, range: &PriceRange, price: f64) -> f64 {
    let sa = range.sqrt_lower();
    let sb = range.sqrt_upper();
    if price <= range.lower {
        liquidity * (1.0 / sa - 1.0 / sb) * price
    } else if price >= range.upper {
        liquidity * (sb - sa)
    } else {
        let s = price.sqrt();
        liquidity * (2.0 * s - sa - price / sb)
    }
}

/// Value of a position in quote units at `price`, fees excluded.
///
/// Piecewise in the price: linear in `price` below the range, constant
/// above it, and concave in between. Continuous at both range bounds.
pub fn position_value(liquidity: f64, range: &PriceRange, price: f64) -> Result<f64> {
    check_liquidity(liquidity)?;
    check_price(price)?;
    Ok(value_raw(liquidity, range, price))
}

/// Value in quote units of holding a fixed pair of token balances at
/// `price`. Linear in the price.
pub fn hold_value(amounts: &TokenAmounts, price: f64) -> Result<f64> {
    check_price(price)?;
    Ok(amounts.base * price + amounts.quote)
}

/// Relative divergence loss of a position deployed at `deploy_price` and
/// observed at `price`: the position's value versus holding the deployed
/// token composition untouched, minus one.
///
/// Zero at the deployment price, non-positive everywhere else. Returns a
/// domain error when the hold value is zero (a zero-liquidity position).
pub fn divergence_loss(
    liquidity: f64,
    range: &PriceRange,
    deploy_price: f64,
    price: f64,
) -> Result<f64> {
    let deployed = position_amounts(liquidity, range, deploy_price)?;
    let held = hold_value(&deployed, price)?;
    if held == 0.0 {
        return Err(Error::Domain(
            "divergence loss undefined: hold value is zero".into(),
        ));
    }
    let current = hold_value(&position_amounts(liquidity, range, price)?, price)?;
    Ok((current - held) / held)
}
