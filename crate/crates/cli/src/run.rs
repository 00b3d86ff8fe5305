//! Verb execution: each analysis reads the resolved scenario, runs the
//! engine, and writes its report files.

use std::path::{Path, PathBuf};

use clamp_core::{
    audit_position, build_position, check_creation, margin_curve, margin_level, price_bounds,
    CreationViolation, MarginCurve, UserCapital,
};
use serde::Serialize;

use crate::error::CliError;
use crate::report::{csv_document, format_float, write_report, OutputFormat, PositionSummary, Report};
use crate::scenario::{self, FormatSpec, Scenario};
use crate::simulate::{simulate, SimulationTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    CheckCreate,
    MarginCurve,
    Bounds,
    MaxLiquidity,
    Simulate,
    AuditManipulation,
}

impl Verb {
    pub fn label(self) -> &'static str {
        match self {
            Verb::CheckCreate => "check-create",
            Verb::MarginCurve => "margin-curve",
            Verb::Bounds => "bounds",
            Verb::MaxLiquidity => "max-liquidity",
            Verb::Simulate => "simulate",
            Verb::AuditManipulation => "audit-manipulation",
        }
    }

    const ALL: [Verb; 6] = [
        Verb::CheckCreate,
        Verb::MarginCurve,
        Verb::Bounds,
        Verb::MaxLiquidity,
        Verb::Simulate,
        Verb::AuditManipulation,
    ];
}

/// Flag-level overrides; a set flag wins over the scenario file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: Option<OutputFormat>,
    pub admin_failure: bool,
}

impl RunOptions {
    fn effective_format(&self, scenario: &Scenario) -> OutputFormat {
        self.format.unwrap_or(match scenario.config.output.format {
            FormatSpec::Json => OutputFormat::Json,
            FormatSpec::Csv => OutputFormat::Csv,
            FormatSpec::Both => OutputFormat::Both,
        })
    }
}

fn report<T: Serialize>(verb: Verb, stem: &str, scenario: &Scenario, result: T) -> Report<T> {
    Report {
        verb: verb.label(),
        scenario: stem.to_string(),
        position: PositionSummary::of(&scenario.position),
        result,
    }
}

#[derive(Debug, Serialize)]
struct CheckCreateResult {
    global_liquidity: f64,
    ok: bool,
    violations: Vec<CreationViolation>,
}

#[derive(Debug, Serialize)]
struct BoundsEntry {
    threshold: f64,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Serialize)]
struct MaxLiquidityResult {
    threshold: f64,
    interval_low: f64,
    interval_high: f64,
    unbounded: bool,
    solved_liquidity: f64,
    margin_at_low: Option<f64>,
    margin_at_high: Option<f64>,
}

fn margin_curve_csv(curve: &MarginCurve) -> String {
    csv_document(
        "price,margin,in_range",
        curve.samples.iter().map(|s| {
            vec![
                format_float(s.price),
                format_float(s.margin),
                s.in_range.to_string(),
            ]
        }),
    )
}

fn trace_csv(trace: &SimulationTrace) -> String {
    csv_document(
        "step,price,margin,action,repaid_value,bonus_value,bad_debt,margin_after,cumulative_bad_debt",
        trace.events.iter().map(|e| {
            vec![
                e.step.to_string(),
                format_float(e.price),
                format_float(e.margin),
                e.action.label().to_string(),
                format_float(e.repaid_value),
                format_float(e.bonus_value),
                format_float(e.bad_debt),
                format_float(e.margin_after),
                format_float(e.cumulative_bad_debt),
            ]
        }),
    )
}

/// Runs one verb against the scenario. The scenario must request the
/// matching analysis; reports land in the output directory under
/// `<stem>-<verb>.json` / `.csv`.
pub fn execute(
    verb: Verb,
    scenario: &Scenario,
    stem: &str,
    opts: &RunOptions,
) -> Result<Vec<PathBuf>, CliError> {
    let missing = || {
        CliError::Validation(format!(
            "the scenario requests no {} analysis",
            verb.label()
        ))
    };
    let format = opts.effective_format(scenario);
    let out = opts.out_dir.as_path();
    let requests = &scenario.config.analyses;
    let pos = &scenario.position;

    match verb {
        Verb::CheckCreate => {
            let request = requests.check_create.as_ref().ok_or_else(missing)?;
            let violations =
                check_creation(pos, &scenario.config.protocol, request.global_liquidity);
            let result = CheckCreateResult {
                global_liquidity: request.global_liquidity,
                ok: violations.is_empty(),
                violations,
            };
            write_report(out, stem, format, &report(verb, stem, scenario, result), None)
        }
        Verb::MarginCurve => {
            let request = requests.margin_curve.as_ref().ok_or_else(missing)?;
            let prices = scenario::grid_prices(&request.grid)?;
            let curve =
                margin_curve(pos, &prices, request.threshold).map_err(CliError::analysis)?;
            let csv = margin_curve_csv(&curve);
            write_report(
                out,
                stem,
                format,
                &report(verb, stem, scenario, curve),
                Some(csv),
            )
        }
        Verb::Bounds => {
            let request = requests.bounds.as_ref().ok_or_else(missing)?;
            let entries = request
                .thresholds
                .iter()
                .map(|&threshold| {
                    price_bounds(pos, threshold)
                        .map(|b| BoundsEntry {
                            threshold,
                            lower: b.lower,
                            upper: b.upper,
                        })
                        .map_err(CliError::analysis)
                })
                .collect::<Result<Vec<_>, _>>()?;
            write_report(out, stem, format, &report(verb, stem, scenario, entries), None)
        }
        Verb::MaxLiquidity => {
            let request = requests.max_liquidity.as_ref().ok_or_else(missing)?;
            let spec = &scenario.config.position;
            let capital = UserCapital::new(spec.capital.base, spec.capital.quote)
                .expect("capital was validated when the scenario loaded");
            let interval = scenario::resolve_interval(request, spec.deploy_price)?;
            let solved = clamp_core::max_safe_liquidity(
                &capital,
                pos.range,
                spec.deploy_price,
                spec.policy,
                interval,
                request.threshold,
                &request.solver,
            )
            .map_err(CliError::analysis)?;

            let endpoint_margins = if solved.is_finite() {
                build_position(&capital, pos.range, solved, spec.deploy_price, spec.policy)
                    .ok()
                    .map(|p| (margin_level(&p, interval.0), margin_level(&p, interval.1)))
            } else {
                None
            };
            let result = MaxLiquidityResult {
                threshold: request.threshold,
                interval_low: interval.0,
                interval_high: interval.1,
                unbounded: solved.is_infinite(),
                solved_liquidity: solved,
                margin_at_low: endpoint_margins.map(|m| m.0),
                margin_at_high: endpoint_margins.map(|m| m.1),
            };
            write_report(out, stem, format, &report(verb, stem, scenario, result), None)
        }
        Verb::Simulate => {
            let request = requests.simulate.as_ref().ok_or_else(missing)?;
            let admin_failure = request.admin_failure || opts.admin_failure;
            let (trace, _) = simulate(pos, &request.path, &scenario.config.protocol, admin_failure)?;
            let csv = trace_csv(&trace);
            write_report(
                out,
                stem,
                format,
                &report(verb, stem, scenario, trace),
                Some(csv),
            )
        }
        Verb::AuditManipulation => {
            let request = requests.audit_manipulation.as_ref().ok_or_else(missing)?;
            let oracle = request.oracle_price.unwrap_or(pos.deploy_price);
            let audit =
                audit_position(pos, oracle, &request.targets).map_err(CliError::analysis)?;
            let csv = csv_document(
                "target_price,delta_base,delta_quote,value_delta,margin_after",
                audit.targets.iter().map(|t| {
                    vec![
                        format_float(t.target_price),
                        format_float(t.delta_base),
                        format_float(t.delta_quote),
                        format_float(t.value_delta),
                        format_float(t.margin_after),
                    ]
                }),
            );
            write_report(
                out,
                stem,
                format,
                &report(verb, stem, scenario, audit),
                Some(csv),
            )
        }
    }
}

#[derive(Debug, Serialize)]
struct RunSummaryEntry {
    verb: &'static str,
    files: Vec<String>,
}

/// Runs every analysis the scenario requests, in a fixed order, then
/// writes a run summary naming the files produced. A scenario with no
/// analyses yields an empty summary.
pub fn execute_all(
    scenario: &Scenario,
    stem: &str,
    opts: &RunOptions,
) -> Result<Vec<PathBuf>, CliError> {
    let requested = |verb: Verb| -> bool {
        let requests = &scenario.config.analyses;
        match verb {
            Verb::CheckCreate => requests.check_create.is_some(),
            Verb::MarginCurve => requests.margin_curve.is_some(),
            Verb::Bounds => requests.bounds.is_some(),
            Verb::MaxLiquidity => requests.max_liquidity.is_some(),
            Verb::Simulate => requests.simulate.is_some(),
            Verb::AuditManipulation => requests.audit_manipulation.is_some(),
        }
    };

    let mut written = Vec::new();
    let mut summary = Vec::new();
    for verb in Verb::ALL {
        if !requested(verb) {
            continue;
        }
        let files = execute(verb, scenario, stem, opts)?;
        summary.push(RunSummaryEntry {
            verb: verb.label(),
            files: files.iter().map(|p| file_name(p)).collect(),
        });
        written.extend(files);
    }

    // The summary itself is always JSON.
    let path = write_report(
        &opts.out_dir,
        stem,
        OutputFormat::Json,
        &report_run_summary(stem, scenario, summary),
        None,
    )?;
    written.extend(path);
    Ok(written)
}

fn report_run_summary(
    stem: &str,
    scenario: &Scenario,
    entries: Vec<RunSummaryEntry>,
) -> Report<Vec<RunSummaryEntry>> {
    Report {
        verb: "run",
        scenario: stem.to_string(),
        position: PositionSummary::of(&scenario.position),
        result: entries,
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
