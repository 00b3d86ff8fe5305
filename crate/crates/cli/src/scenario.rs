//! Scenario files: the JSON input describing one position, the protocol
//! parameters, and the analyses to run on it.

use std::fs;
use std::path::Path;

use clamp_core::{
    build_position, interval_from_factor, max_safe_liquidity, BorrowPolicy, Position, PriceRange,
    ProtocolParams, RangeFactor, SolverConfig, UserCapital,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub position: PositionSpec,
    pub protocol: ProtocolParams,
    #[serde(default)]
    pub analyses: AnalysisRequests,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionSpec {
    pub capital: CapitalSpec,
    pub range: RangeSpec,
    pub liquidity: LiquiditySpec,
    pub deploy_price: f64,
    pub policy: BorrowPolicy,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapitalSpec {
    pub base: f64,
    pub quote: f64,
}

/// Price range; a missing or null upper bound means unbounded.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub lower: f64,
    #[serde(default)]
    pub upper: Option<f64>,
}

/// Either a fixed liquidity or the keyword `"solve"`, which sizes the
/// position with the max-liquidity solver settings.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum LiquiditySpec {
    Fixed(f64),
    Keyword(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRequests {
    #[serde(default)]
    pub check_create: Option<CheckCreateRequest>,
    #[serde(default)]
    pub margin_curve: Option<MarginCurveRequest>,
    #[serde(default)]
    pub bounds: Option<BoundsRequest>,
    #[serde(default)]
    pub max_liquidity: Option<MaxLiquidityRequest>,
    #[serde(default)]
    pub simulate: Option<SimulateRequest>,
    #[serde(default)]
    pub audit_manipulation: Option<AuditRequest>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCreateRequest {
    /// Liquidity already deployed pool-wide, for the global cap check.
    #[serde(default)]
    pub global_liquidity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginCurveRequest {
    pub grid: GridSpec,
    /// Threshold whose price bounds annotate the curve.
    #[serde(default)]
    pub threshold: Option<f64>,
}

/// Either an explicit price list or a generated grid.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Explicit {
        prices: Vec<f64>,
    },
    Generated {
        start: f64,
        stop: f64,
        points: u32,
        #[serde(default)]
        spacing: Spacing,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsRequest {
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxLiquidityRequest {
    pub interval: IntervalSpec,
    pub threshold: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// Safety interval: explicit endpoints or a symmetric factor around the
/// deployment price.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum IntervalSpec {
    Endpoints { low: f64, high: f64 },
    Factor { factor: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub path: Vec<f64>,
    /// Disables the protocol deleverage trigger so liquidators must
    /// deleverage themselves; the --admin-failure flag forces this on.
    #[serde(default)]
    pub admin_failure: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRequest {
    pub targets: Vec<f64>,
    /// Price the oracle reports; defaults to the deployment price.
    #[serde(default)]
    pub oracle_price: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: FormatSpec,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatSpec {
    Json,
    Csv,
    #[default]
    Both,
}

/// A parsed, validated scenario with the position already built.
#[derive(Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub position: Position,
    /// Set when the position liquidity came from the solver.
    pub solved_liquidity: Option<f64>,
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    resolve(config)
}

fn invalid(msg: String) -> CliError {
    CliError::Validation(msg)
}

/// Validates every part of the scenario, then builds the position,
/// running the liquidity solver when the scenario asks for it.
pub fn resolve(config: ScenarioConfig) -> Result<Scenario, CliError> {
    config
        .protocol
        .validate()
        .map_err(|e| invalid(format!("protocol: {e}")))?;

    let spec = &config.position;
    let range = PriceRange::new(spec.range.lower, spec.range.upper.unwrap_or(f64::INFINITY))
        .map_err(|e| invalid(format!("position.range: {e}")))?;
    let capital = UserCapital::new(spec.capital.base, spec.capital.quote)
        .map_err(|e| invalid(format!("position.capital: {e}")))?;
    if !(spec.deploy_price > 0.0 && spec.deploy_price.is_finite()) {
        return Err(invalid(format!(
            "position.deploy_price must be a positive finite price, got {}",
            spec.deploy_price
        )));
    }

    validate_requests(&config.analyses, spec.deploy_price)?;

    let (liquidity, solved) = match &spec.liquidity {
        LiquiditySpec::Fixed(l) => {
            if !(l.is_finite() && *l >= 0.0) {
                return Err(invalid(format!(
                    "position.liquidity must be finite and >= 0, got {l}"
                )));
            }
            (*l, None)
        }
        LiquiditySpec::Keyword(word) if word == "solve" => {
            let request = config.analyses.max_liquidity.as_ref().ok_or_else(|| {
                invalid(
                    "position.liquidity is \"solve\" but the scenario has no max_liquidity \
                     analysis to take the interval and threshold from"
                        .to_string(),
                )
            })?;
            let interval = resolve_interval(request, spec.deploy_price)?;
            let l = max_safe_liquidity(
                &capital,
                range,
                spec.deploy_price,
                spec.policy,
                interval,
                request.threshold,
                &request.solver,
            )
            .map_err(CliError::analysis)?;
            if !l.is_finite() {
                return Err(CliError::Analysis(
                    "solved liquidity is unbounded; the position cannot be built from it"
                        .to_string(),
                ));
            }
            (l, Some(l))
        }
        LiquiditySpec::Keyword(word) => {
            return Err(invalid(format!(
                "position.liquidity must be a number or \"solve\", got \"{word}\""
            )));
        }
    };

    let position = build_position(&capital, range, liquidity, spec.deploy_price, spec.policy)
        .map_err(|e| invalid(format!("position: {e}")))?;

    Ok(Scenario {
        config,
        position,
        solved_liquidity: solved,
    })
}

pub fn resolve_interval(
    request: &MaxLiquidityRequest,
    deploy_price: f64,
) -> Result<(f64, f64), CliError> {
    match request.interval {
        IntervalSpec::Endpoints { low, high } => Ok((low, high)),
        IntervalSpec::Factor { factor } => {
            let factor = RangeFactor::new(factor)
                .map_err(|e| invalid(format!("max_liquidity.interval.factor: {e}")))?;
            interval_from_factor(deploy_price, factor)
                .map_err(|e| invalid(format!("max_liquidity.interval: {e}")))
        }
    }
}

fn check_prices(what: &str, prices: &[f64]) -> Result<(), CliError> {
    for &p in prices {
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid(format!(
                "{what} must contain only positive finite prices, got {p}"
            )));
        }
    }
    Ok(())
}

fn validate_requests(requests: &AnalysisRequests, deploy_price: f64) -> Result<(), CliError> {
    if let Some(check) = &requests.check_create {
        if !(check.global_liquidity >= 0.0 && check.global_liquidity.is_finite()) {
            return Err(invalid(format!(
                "check_create.global_liquidity must be finite and >= 0, got {}",
                check.global_liquidity
            )));
        }
    }
    if let Some(curve) = &requests.margin_curve {
        grid_prices(&curve.grid)?;
        if let Some(t) = curve.threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!(
                    "margin_curve.threshold must be a positive finite margin, got {t}"
                )));
            }
        }
    }
    if let Some(bounds) = &requests.bounds {
        if bounds.thresholds.is_empty() {
            return Err(invalid("bounds.thresholds must not be empty".to_string()));
        }
        for &t in &bounds.thresholds {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!(
                    "bounds.thresholds must be positive finite margins, got {t}"
                )));
            }
        }
    }
    if let Some(solve) = &requests.max_liquidity {
        solve
            .solver
            .validate()
            .map_err(|e| invalid(format!("max_liquidity.solver: {e}")))?;
        if !(solve.threshold > 1.0 && solve.threshold.is_finite()) {
            return Err(invalid(format!(
                "max_liquidity.threshold must be finite and exceed 1, got {}",
                solve.threshold
            )));
        }
        let (low, high) = resolve_interval(solve, deploy_price)?;
        if !(low > 0.0 && low <= deploy_price && deploy_price <= high && high.is_finite()) {
            return Err(invalid(format!(
                "max_liquidity.interval ({low}, {high}) must be finite and bracket the \
                 deployment price {deploy_price}"
            )));
        }
    }
    if let Some(simulate) = &requests.simulate {
        check_prices("simulate.path", &simulate.path)?;
    }
    if let Some(audit) = &requests.audit_manipulation {
        check_prices("audit_manipulation.targets", &audit.targets)?;
        if let Some(oracle) = audit.oracle_price {
            check_prices("audit_manipulation.oracle_price", &[oracle])?;
        }
    }
    Ok(())
}

/// Materializes the requested margin-curve grid as a strictly increasing
/// price list.
pub fn grid_prices(grid: &GridSpec) -> Result<Vec<f64>, CliError> {
    match grid {
        GridSpec::Explicit { prices } => {
            if prices.len() < 2 {
                return Err(invalid(
                    "margin_curve.grid.prices needs at least two prices".to_string(),
                ));
            }
            check_prices("margin_curve.grid.prices", prices)?;
            if !prices.windows(2).all(|w| w[0] < w[1]) {
                return Err(invalid(
                    "margin_curve.grid.prices must be strictly increasing".to_string(),
                ));
            }
            Ok(prices.clone())
        }
        GridSpec::Generated {
            start,
            stop,
            points,
            spacing,
        } => {
            if !(*start > 0.0 && start.is_finite() && stop.is_finite() && start < stop) {
                return Err(invalid(format!(
                    "margin_curve.grid needs 0 < start < stop, got start={start}, stop={stop}"
                )));
            }
            if *points < 2 {
                return Err(invalid(format!(
                    "margin_curve.grid.points must be at least 2, got {points}"
                )));
            }
            let n = *points as usize;
            let prices: Vec<f64> = (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    match spacing {
                        Spacing::Log => start * (stop / start).powf(t),
                        Spacing::Linear => start + (stop - start) * t,
                    }
                })
                .collect();
            if !prices.windows(2).all(|w| w[0] < w[1]) {
                return Err(invalid(format!(
                    "margin_curve.grid with {points} points over ({start}, {stop}) collapses \
                     adjacent prices; use fewer points or a wider span"
                )));
            }
            Ok(prices)
        }
    }
}
