//! Leveraged position construction and the price evolution of its assets
//! and debt.
//!
//! A position is built from the user's own capital plus borrowed tokens.
//! Construction never swaps: the user funds what they can on each side,
//! the borrow policy decides which deficits may be covered by debt, and
//! any surplus user tokens stay attached as extra collateral.

use serde::{Deserialize, Serialize};

use crate::clmm::{
    amounts_raw, check_liquidity, check_price, position_amounts, value_raw, PriceRange,
    TokenAmounts,
};
use crate::error::{Error, Result};

/// Which tokens may be borrowed to fund a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorrowPolicy {
    /// Borrow only the quote token; the user must cover the base side.
    QuoteOnly,
    /// Borrow only the base token; the user must cover the quote side.
    BaseOnly,
    /// Borrow the per-token deficit on both sides.
    BothProportional,
}

/// Tokens the user brings of their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserCapital {
    pub base: f64,
    pub quote: f64,
}

impl UserCapital {
    pub fn new(base: f64, quote: f64) -> Result<Self> {
        if !(base >= 0.0 && base.is_finite()) || !(quote >= 0.0 && quote.is_finite()) {
            return Err(Error::Domain(format!(
                "user capital must be finite and >= 0 per token, got ({base}, {quote})"
            )));
        }
        if base == 0.0 && quote == 0.0 {
            return Err(Error::Domain("user capital must not be empty".into()));
        }
        Ok(UserCapital { base, quote })
    }

    /// Value of the capital in quote units at `price`.
    pub fn value(&self, price: f64) -> f64 {
        self.base * price + self.quote
    }
}

/// A leveraged CL position: pool liquidity, extra collateral, and the debt
/// backing it, together with the price it was deployed at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub liquidity: f64,
    pub range: PriceRange,
    pub collateral: TokenAmounts,
    pub debt: TokenAmounts,
    pub deploy_price: f64,
}

impl Position {
    pub fn new(
        liquidity: f64,
        range: PriceRange,
        collateral: TokenAmounts,
        debt: TokenAmounts,
        deploy_price: f64,
    ) -> Result<Self> {
        check_liquidity(liquidity)?;
        check_price(deploy_price)?;
        if !(collateral.base >= 0.0 && collateral.quote >= 0.0) {
            return Err(Error::Domain("collateral amounts must be >= 0".into()));
        }
        if !(debt.base >= 0.0 && debt.quote >= 0.0) {
            return Err(Error::Domain("debt amounts must be >= 0".into()));
        }
        if liquidity == 0.0 && collateral.is_zero() && !debt.is_zero() {
            return Err(Error::Domain(
                "a position with no liquidity and no collateral must carry no debt".into(),
            ));
        }
        Ok(Position {
            liquidity,
            range,
            collateral,
            debt,
            deploy_price,
        })
    }

    /// Value of everything backing the debt at `price`: the pool position
    /// plus the extra collateral.
    pub fn asset_value(&self, price: f64) -> f64 {
        assert!(
            price > 0.0 && price.is_finite(),
            "asset_value needs a positive finite price, got {price}"
        );
        value_raw(self.liquidity, &self.range, price)
            + self.collateral.base * price
            + self.collateral.quote
    }

    /// Value of the debt at `price`. Linear in the price, and constant when
    /// only the quote token is owed.
    pub fn debt_value(&self, price: f64) -> f64 {
        assert!(
            price > 0.0 && price.is_finite(),
            "debt_value needs a positive finite price, got {price}"
        );
        self.debt.base * price + self.debt.quote
    }

    /// Real token amounts the pool position holds at `price` (collateral
    /// excluded).
    pub fn pool_amounts(&self, price: f64) -> TokenAmounts {
        assert!(
            price > 0.0 && price.is_finite(),
            "pool_amounts needs a positive finite price, got {price}"
        );
        amounts_raw(self.liquidity, &self.range, price)
    }

    pub fn has_debt(&self) -> bool {
        !self.debt.is_zero()
    }
}

fn deficit(required: f64, available: f64) -> f64 {
    (required - available).max(0.0)
}

fn surplus(available: f64, required: f64) -> f64 {
    (available - required).max(0.0)
}

/// Builds a leveraged position at `deploy_price`: the pool amounts required
/// for `liquidity` are funded first from `capital`, the remainder is
/// borrowed per `policy`, and leftover user tokens become extra collateral.
///
/// Fails with an infeasible-policy error when the policy forbids borrowing
/// a token the user cannot cover.
pub fn build_position(
    capital: &UserCapital,
    range: PriceRange,
    liquidity: f64,
    deploy_price: f64,
    policy: BorrowPolicy,
) -> Result<Position> {
    let required = position_amounts(liquidity, &range, deploy_price)?;

    let base_deficit = deficit(required.base, capital.base);
    let quote_deficit = deficit(required.quote, capital.quote);
    match policy {
        BorrowPolicy::QuoteOnly if base_deficit > 0.0 => {
            return Err(Error::InfeasiblePolicy {
                policy,
                token: "base",
                required: required.base,
                available: capital.base,
            });
        }
        BorrowPolicy::BaseOnly if quote_deficit > 0.0 => {
            return Err(Error::InfeasiblePolicy {
                policy,
                token: "quote",
                required: required.quote,
                available: capital.quote,
            });
        }
        _ => {}
    }

    let debt = TokenAmounts {
        base: base_deficit,
        quote: quote_deficit,
    };
    let collateral = TokenAmounts {
        base: surplus(capital.base, required.base),
        quote: surplus(capital.quote, required.quote),
    };
    Position::new(liquidity, range, collateral, debt, deploy_price)
}
