use thiserror::Error;

use crate::position::BorrowPolicy;

/// Errors produced by the risk engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input fell outside the domain of the operation (non-positive
    /// price, negative liquidity, malformed range, and the like).
    #[error("domain error: {0}")]
    Domain(String),

    /// The borrow policy forbids borrowing a token whose required amount
    /// exceeds what the user holds.
    #[error(
        "policy {policy:?} forbids borrowing {token}: position requires {required} but user holds {available}"
    )]
    InfeasiblePolicy {
        policy: BorrowPolicy,
        token: &'static str,
        required: f64,
        available: f64,
    },

    /// Margin at the deployment price does not exceed the requested
    /// threshold, so no price bounds bracketing the deployment exist.
    #[error("margin {margin} at deployment price {price} does not exceed threshold {threshold}")]
    UnsafeAtDeployment {
        margin: f64,
        price: f64,
        threshold: f64,
    },

    /// Leverage is undefined at or below a margin level of 1.0.
    #[error("leverage is undefined for margin level {0} (must exceed 1.0)")]
    LeverageUndefined(f64),

    /// Derivative analysis requires positive liquidity and base-token debt.
    #[error("derivative analysis precondition violated: {0}")]
    AnalysisPrecondition(String),

    /// Operation requires a healthy position (margin above the liquidation
    /// threshold).
    #[error("position unhealthy: margin {margin} is not above threshold {threshold}")]
    UnhealthyPosition { margin: f64, threshold: f64 },

    /// Liquidation requires a fully deleveraged position.
    #[error("position still holds liquidity {0}; deleverage before liquidating")]
    NotDeleveraged(f64),

    /// The search could not bracket a solution.
    #[error("solver failed to bracket a solution: {0}")]
    BracketFailure(String),

    /// The search exhausted its iteration budget.
    #[error("solver did not converge within {0} iterations")]
    NonConvergence(u32),

    /// A parameter set violates one of its invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
