//! Risk engine for leveraged concentrated-liquidity positions.
//!
//! The library models a position in a constant-product CL pool that is
//! partly funded by borrowed tokens: it values the position and its debt
//! at any price, derives margin levels and the prices at which they hit a
//! liquidation threshold, sizes the largest liquidity a given capital can
//! safely carry across a price interval, executes the protocol
//! transitions (reduce, deleverage, liquidate), and audits the position's
//! resistance to spot-price manipulation.
//!
//! Everything is plain double-precision math over immutable values; no
//! operation touches shared state, so all of it is safe to run in
//! parallel across scenarios or grid points.

pub mod clmm;
pub mod error;
pub mod manipulation;
pub mod margin;
pub mod position;
pub mod protocol;
pub mod solver;

pub use clmm::{
    divergence_loss, hold_value, position_amounts, position_value, PriceRange, SqrtPrice,
    TokenAmounts,
};
pub use error::{Error, Result};
pub use manipulation::{audit_position, swap_delta, swap_value_delta, AuditReport, SwapDelta, TargetAudit};
pub use margin::{
    check_interval_safety, derivative_analysis, leverage, margin_curve, margin_level,
    price_bounds, DerivativeAnalysis, MarginCurve, MarginSample, PriceBounds,
};
pub use position::{build_position, BorrowPolicy, Position, UserCapital};
pub use protocol::{
    check_creation, deleverage, interest_rate, liquidate, liquidation_fraction, reduce,
    CreationViolation, InterestCurve, LiquidationOutcome, ProtocolParams, RateKnot,
    ReductionOutcome,
};
pub use solver::{interval_from_factor, max_safe_liquidity, RangeFactor, SolverConfig};
