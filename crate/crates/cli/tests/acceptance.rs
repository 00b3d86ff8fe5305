//! Acceptance gate for the risk engine.
//!
//! Every criterion the engine must satisfy runs here as an independent
//! check with seeded sampling, so the whole gate is deterministic. Each
//! criterion prints exactly one pass or fail line (visible with
//! `--nocapture`), all criteria run even when an early one fails, and the
//! gate itself fails if any line does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use clamp_core::{
    build_position, deleverage, derivative_analysis, divergence_loss, interval_from_factor,
    leverage, liquidate, liquidation_fraction, margin_level, max_safe_liquidity,
    position_amounts, price_bounds, reduce, swap_delta, swap_value_delta, BorrowPolicy, Position,
    PriceRange, ProtocolParams, RangeFactor, SolverConfig, TokenAmounts, UserCapital,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

type Check = fn() -> Result<(), String>;

#[test]
fn acceptance() {
    let criteria: &[(&str, Check)] = &[
        ("01 leverage identity", leverage_identity),
        ("02 in-interval safety", in_interval_safety),
        ("03 margin slope root signs", margin_slope_root_signs),
        ("04 liquidation bound round trip", liquidation_bound_round_trip),
        ("05 max-liquidity certification", max_liquidity_certification),
        ("06 reduction invariance", reduction_invariance),
        ("07 deleverage monotonicity", deleverage_monotonicity),
        ("08 liquidation restoration", liquidation_restoration),
        ("09 manipulation cost non-negativity", manipulation_cost_non_negativity),
        ("10 divergence-loss margin limit", divergence_loss_margin_limit),
        ("11 batch interface determinism", batch_interface_determinism),
    ];

    println!();
    let mut failures = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  criterion {name} ({secs:.2}s)"),
            Err(msg) => {
                println!("FAIL  criterion {name} ({secs:.2}s): {msg}");
                failures.push(name.to_string());
            }
        }
    }
    assert!(
        failures.is_empty(),
        "acceptance criteria failed: {}",
        failures.join(", ")
    );
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gen_price_range(rng: &mut ChaCha8Rng) -> PriceRange {
    let lower = 10f64.powf(rng.gen_range(-2.0..2.0));
    let width = rng.gen_range(1.05..50.0);
    PriceRange::new(lower, lower * width).unwrap()
}

fn gen_policy(rng: &mut ChaCha8Rng) -> BorrowPolicy {
    match rng.gen_range(0u8..3) {
        0 => BorrowPolicy::QuoteOnly,
        1 => BorrowPolicy::BaseOnly,
        _ => BorrowPolicy::BothProportional,
    }
}

/// A position deployed in or near its range under a random policy, funding
/// a random fraction of the borrowed side out of pocket.
fn gen_position(rng: &mut ChaCha8Rng) -> Position {
    loop {
        let range = gen_price_range(rng);
        let t = rng.gen_range(-0.5..1.5);
        let deploy = range.lower * (range.upper / range.lower).powf(t);
        let liquidity = 10f64.powf(rng.gen_range(-1.0..6.0));
        let Ok(required) = position_amounts(liquidity, &range, deploy) else {
            continue;
        };
        let fraction = rng.gen_range(0.05..0.95);
        let extra = rng.gen_range(0.0..0.5);
        let policy = gen_policy(rng);
        let capital = match policy {
            BorrowPolicy::QuoteOnly => {
                UserCapital::new(required.base * (1.0 + extra), fraction * required.quote)
            }
            BorrowPolicy::BaseOnly => {
                UserCapital::new(fraction * required.base, required.quote * (1.0 + extra))
            }
            BorrowPolicy::BothProportional => {
                UserCapital::new(fraction * required.base, fraction * required.quote)
            }
        }
        .unwrap();
        if let Ok(pos) = build_position(&capital, range, liquidity, deploy, policy) {
            return pos;
        }
    }
}

fn gen_indebted_position(rng: &mut ChaCha8Rng) -> Position {
    loop {
        let pos = gen_position(rng);
        if pos.has_debt() {
            return pos;
        }
    }
}

fn gen_params(rng: &mut ChaCha8Rng, full_liq_at_critical: bool) -> ProtocolParams {
    let liq_bonus = rng.gen_range(0.01..0.2);
    let critical = 1.0 + liq_bonus;
    let liq_margin = critical + rng.gen_range(0.05..0.5);
    let params = ProtocolParams {
        liq_margin,
        target_margin: liq_margin + rng.gen_range(0.05..0.5),
        liq_bonus,
        deleverage_margin: liq_margin + rng.gen_range(0.01..0.3),
        min_init_margin: 1.0 + rng.gen_range(0.1..2.0),
        price_delta: rng.gen_range(0.01..0.3),
        max_position_liquidity: f64::INFINITY,
        max_global_liquidity: f64::INFINITY,
        full_liq_below: full_liq_at_critical.then_some(critical),
    };
    params.validate().unwrap();
    params
}

/// A deleveraged position whose margin at `price` is exactly `margin`,
/// holding both tokens in the collateral and owing both in the debt.
fn pinned_margin_position(margin: f64, price: f64, base_share: f64, debt_value: f64) -> Position {
    let assets = margin * debt_value;
    let collateral =
        TokenAmounts::new(base_share * assets / price, (1.0 - base_share) * assets).unwrap();
    let debt = TokenAmounts::new(0.4 * debt_value / price, 0.6 * debt_value).unwrap();
    Position::new(
        0.0,
        PriceRange::new(0.5, 2.0).unwrap(),
        collateral,
        debt,
        price,
    )
    .unwrap()
}

/// Bisection reference for the price at which the margin level crosses
/// `threshold` when walking away from `start` by `factor` steps; `None`
/// when no crossing appears within ninety steps.
fn crossing_oracle(pos: &Position, threshold: f64, start: f64, factor: f64) -> Option<f64> {
    let mut inside = start;
    let mut outside = start;
    let mut found = false;
    for _ in 0..90 {
        outside *= factor;
        if !(outside > 0.0 && outside.is_finite()) {
            break;
        }
        if margin_level(pos, outside) < threshold {
            found = true;
            break;
        }
        inside = outside;
    }
    if !found {
        return None;
    }
    let (mut safe, mut unsafe_side) = (inside, outside);
    for _ in 0..200 {
        let mid = 0.5 * (safe + unsafe_side);
        if mid == safe || mid == unsafe_side {
            break;
        }
        if margin_level(pos, mid) >= threshold {
            safe = mid;
        } else {
            unsafe_side = mid;
        }
    }
    Some(0.5 * (safe + unsafe_side))
}

/// A margin level of 1.5 corresponds to a leverage of exactly 3.
fn leverage_identity() -> Result<(), String> {
    let lev = leverage(1.5).map_err(|e| e.to_string())?;
    ensure!(lev == 3.0, "leverage(1.5) returned {lev}, expected exactly 3");
    Ok(())
}

/// Across 10^4 random positions and price triples P1 < P2 < P3, the margin
/// at the middle price never falls below the smaller endpoint margin
/// (within 1e-9 relative), so endpoint checks certify whole intervals.
fn in_interval_safety() -> Result<(), String> {
    let mut rng = rng(0x_AC02);
    let start = Instant::now();
    for case in 0..10_000 {
        let pos = gen_position(&mut rng);
        let mid = (pos.range.lower * pos.range.upper).sqrt();
        let mut prices = [0.0f64; 3];
        loop {
            for p in prices.iter_mut() {
                *p = mid * 10f64.powf(rng.gen_range(-1.5..1.5));
            }
            prices.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if prices[0] < prices[1] && prices[1] < prices[2] {
                break;
            }
        }
        let m1 = margin_level(&pos, prices[0]);
        let m2 = margin_level(&pos, prices[1]);
        let m3 = margin_level(&pos, prices[2]);
        let floor = m1.min(m3);
        ensure!(
            m2 >= floor * (1.0 - 1e-9),
            "case {case}: margin dips inside the interval: M({})={m1}, M({})={m2}, M({})={m3}",
            prices[0],
            prices[1],
            prices[2]
        );
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "runtime {secs:.1}s exceeds the 10 s budget");
    Ok(())
}

/// For 10^4 in-range positions owing base tokens, the slope numerator of
/// the margin level opens downward with a non-negative constant term and a
/// non-positive lower root, and margin grids show no interior local
/// minimum.
fn margin_slope_root_signs() -> Result<(), String> {
    let mut rng = rng(0x_AC03);
    let start = Instant::now();
    for case in 0..10_000 {
        let pos = loop {
            let range = gen_price_range(&mut rng);
            let t = rng.gen_range(0.05..0.95);
            let deploy = range.lower * (range.upper / range.lower).powf(t);
            let liquidity = 10f64.powf(rng.gen_range(-1.0..6.0));
            let Ok(required) = position_amounts(liquidity, &range, deploy) else {
                continue;
            };
            if required.base <= 0.0 {
                continue;
            }
            let fraction = rng.gen_range(0.05..0.9);
            let policy = if rng.gen_bool(0.5) {
                BorrowPolicy::BaseOnly
            } else {
                BorrowPolicy::BothProportional
            };
            let capital = match policy {
                BorrowPolicy::BaseOnly => UserCapital::new(
                    fraction * required.base,
                    required.quote * (1.0 + rng.gen_range(0.0..0.5)),
                ),
                _ => UserCapital::new(fraction * required.base, fraction * required.quote),
            }
            .unwrap();
            let Ok(pos) = build_position(&capital, range, liquidity, deploy, policy) else {
                continue;
            };
            if pos.debt.base > 0.0 {
                break pos;
            }
        };

        let analysis = derivative_analysis(&pos).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            analysis.slope_quad < 0.0,
            "case {case}: quadratic slope coefficient {} is not negative",
            analysis.slope_quad
        );
        ensure!(
            analysis.slope_const >= 0.0,
            "case {case}: constant slope coefficient {} is negative",
            analysis.slope_const
        );
        ensure!(
            analysis.local_min_sqrt <= 0.0,
            "case {case}: lower slope root {} is positive, a local minimum would exist",
            analysis.local_min_sqrt
        );

        let deploy = pos.deploy_price;
        let points = 61;
        let lo = deploy / 8.0;
        let ratio = (deploy * 8.0 / lo).powf(1.0 / (points - 1) as f64);
        let mut margins = Vec::with_capacity(points);
        let mut p = lo;
        for _ in 0..points {
            margins.push(margin_level(&pos, p));
            p *= ratio;
        }
        for i in 1..points - 1 {
            let dip = margins[i] < margins[i - 1] * (1.0 - 1e-12)
                && margins[i] < margins[i + 1] * (1.0 - 1e-12);
            ensure!(
                !dip,
                "case {case}: interior local minimum at grid point {i}: {} < {} and {}",
                margins[i],
                margins[i - 1],
                margins[i + 1]
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "runtime {secs:.1}s exceeds the 30 s budget");
    Ok(())
}

/// For 10^3 positions healthy at deployment and thresholds below their
/// current margin, the margin at each finite liquidation bound reproduces
/// the threshold within 1e-7 relative, and the bounds agree with a
/// bisection reference to the same tolerance.
fn liquidation_bound_round_trip() -> Result<(), String> {
    let mut rng = rng(0x_AC04);
    for case in 0..1_000 {
        let (pos, m0) = loop {
            let pos = gen_indebted_position(&mut rng);
            let m0 = margin_level(&pos, pos.deploy_price);
            if m0.is_finite() && m0 > 1.01 {
                break (pos, m0);
            }
        };
        let threshold = 1.0 + rng.gen_range(0.1..0.9) * (m0 - 1.0);
        let bounds = price_bounds(&pos, threshold).map_err(|e| format!("case {case}: {e}"))?;

        let oracle_down = crossing_oracle(&pos, threshold, pos.deploy_price, 0.5);
        if bounds.lower > 0.0 {
            let m = margin_level(&pos, bounds.lower);
            ensure!(
                rel_close(m, threshold, 1e-7),
                "case {case}: margin {m} at lower bound {} misses threshold {threshold}",
                bounds.lower
            );
            let reference = oracle_down
                .ok_or_else(|| format!("case {case}: no reference for lower bound"))?;
            ensure!(
                rel_close(bounds.lower, reference, 1e-7),
                "case {case}: lower bound {} disagrees with bisection {reference}",
                bounds.lower
            );
        } else {
            ensure!(
                oracle_down.is_none(),
                "case {case}: engine reports no lower bound but bisection finds {}",
                oracle_down.unwrap()
            );
        }

        let oracle_up = crossing_oracle(&pos, threshold, pos.deploy_price, 2.0);
        if bounds.upper.is_finite() {
            let m = margin_level(&pos, bounds.upper);
            ensure!(
                rel_close(m, threshold, 1e-7),
                "case {case}: margin {m} at upper bound {} misses threshold {threshold}",
                bounds.upper
            );
            let reference =
                oracle_up.ok_or_else(|| format!("case {case}: no reference for upper bound"))?;
            ensure!(
                rel_close(bounds.upper, reference, 1e-7),
                "case {case}: upper bound {} disagrees with bisection {reference}",
                bounds.upper
            );
        } else {
            ensure!(
                oracle_up.is_none(),
                "case {case}: engine reports no upper bound but bisection finds {}",
                oracle_up.unwrap()
            );
        }
    }
    Ok(())
}

/// For 200 random instances the solved maximum liquidity certifies at the
/// interval endpoints: the weaker endpoint margin lands in
/// [threshold, threshold*(1+1e-6)] and liquidity 1e-4 higher violates it.
fn max_liquidity_certification() -> Result<(), String> {
    let mut rng = rng(0x_AC05);
    let start = Instant::now();
    let cfg = SolverConfig::default();
    for case in 0..200 {
        let lower = 10f64.powf(rng.gen_range(-2.0..2.0));
        let width = rng.gen_range(1.1..32.0);
        let range = PriceRange::new(lower, lower * width).unwrap();
        let deploy = lower * width.powf(rng.gen_range(0.1..0.9));
        let capital = UserCapital::new(
            10f64.powf(rng.gen_range(-1.0..3.0)),
            10f64.powf(rng.gen_range(-1.0..3.0)),
        )
        .unwrap();
        let factor = RangeFactor::new(rng.gen_range(1.02..3.0)).unwrap();
        let interval = interval_from_factor(deploy, factor).map_err(|e| e.to_string())?;
        let threshold = rng.gen_range(1.05..4.0);

        let solved = max_safe_liquidity(
            &capital,
            range,
            deploy,
            BorrowPolicy::BothProportional,
            interval,
            threshold,
            &cfg,
        )
        .map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            solved.is_finite() && solved > 0.0,
            "case {case}: solved liquidity {solved} is not positive and finite"
        );

        let min_margin = |liquidity: f64| -> Result<f64, String> {
            let pos = build_position(
                &capital,
                range,
                liquidity,
                deploy,
                BorrowPolicy::BothProportional,
            )
            .map_err(|e| format!("case {case}: {e}"))?;
            Ok(margin_level(&pos, interval.0).min(margin_level(&pos, interval.1)))
        };

        let certified = min_margin(solved)?;
        ensure!(
            certified >= threshold && certified <= threshold * (1.0 + 1e-6),
            "case {case}: margin {certified} at solved liquidity misses [{threshold}, {}]",
            threshold * (1.0 + 1e-6)
        );
        let violated = min_margin(solved * (1.0 + 1e-4))?;
        ensure!(
            violated < threshold,
            "case {case}: margin {violated} at 1.0001x the solved liquidity still meets {threshold}"
        );
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "runtime {secs:.1}s exceeds the 30 s budget");
    Ok(())
}

/// Scaling a healthy position down leaves the margin level unchanged to
/// 1e-12 relative and frees strictly positive value.
fn reduction_invariance() -> Result<(), String> {
    let mut rng = rng(0x_AC06);
    for case in 0..1_000 {
        let params = gen_params(&mut rng, false);
        let pos = loop {
            let pos = gen_indebted_position(&mut rng);
            let m = margin_level(&pos, pos.deploy_price);
            if m.is_finite() && m > params.liq_margin {
                break pos;
            }
        };
        let price = pos.deploy_price;
        let before = margin_level(&pos, price);
        let k = rng.gen_range(0.01..0.99);
        let (reduced, outcome) =
            reduce(&pos, k, price, &params).map_err(|e| format!("case {case}: {e}"))?;
        let after = margin_level(&reduced, price);
        ensure!(
            rel_close(after, before, 1e-12),
            "case {case}: margin moved from {before} to {after} on a {k:.3} reduction"
        );
        ensure!(
            outcome.freed_value > 0.0,
            "case {case}: freed value {} is not positive",
            outcome.freed_value
        );
    }
    Ok(())
}

/// Deleveraging strictly raises the margin whenever the position is above
/// water and some withdrawn token actually repays debt; with no overlap
/// between held and owed tokens the margin stays put.
fn deleverage_monotonicity() -> Result<(), String> {
    let mut rng = rng(0x_AC07);
    for case in 0..1_000 {
        let (pos, before) = loop {
            let range = gen_price_range(&mut rng);
            let t = rng.gen_range(0.1..0.9);
            let deploy = range.lower * (range.upper / range.lower).powf(t);
            let liquidity = 10f64.powf(rng.gen_range(-1.0..6.0));
            let Ok(required) = position_amounts(liquidity, &range, deploy) else {
                continue;
            };
            let fraction = rng.gen_range(0.05..0.95);
            let policy = gen_policy(&mut rng);
            let capital = match policy {
                BorrowPolicy::QuoteOnly => {
                    UserCapital::new(required.base, fraction * required.quote)
                }
                BorrowPolicy::BaseOnly => {
                    UserCapital::new(fraction * required.base, required.quote)
                }
                BorrowPolicy::BothProportional => {
                    UserCapital::new(fraction * required.base, fraction * required.quote)
                }
            }
            .unwrap();
            let Ok(pos) = build_position(&capital, range, liquidity, deploy, policy) else {
                continue;
            };
            if !pos.has_debt() {
                continue;
            }
            let m = margin_level(&pos, deploy);
            if m.is_finite() && m > 1.0001 {
                break (pos, m);
            }
        };
        let price = pos.deploy_price;
        let total = pos.pool_amounts(price);
        let repay_base = (pos.collateral.base + total.base).min(pos.debt.base);
        let repay_quote = (pos.collateral.quote + total.quote).min(pos.debt.quote);
        ensure!(
            repay_base > 0.0 || repay_quote > 0.0,
            "case {case}: generator produced no token overlap"
        );
        let (post, repaid_value) = deleverage(&pos, price);
        ensure!(
            repaid_value > 0.0,
            "case {case}: repaid value {repaid_value} is not positive"
        );
        let after = margin_level(&post, price);
        ensure!(
            after > before,
            "case {case}: margin did not rise: {before} -> {after}"
        );
    }

    // Disjoint case: a quote-only debt against a pool that has slid below
    // its range holds base tokens alone, so nothing overlaps and nothing
    // is repaid.
    for case in 0..200 {
        let (pos, price) = loop {
            let range = gen_price_range(&mut rng);
            let t = rng.gen_range(0.1..0.9);
            let deploy = range.lower * (range.upper / range.lower).powf(t);
            let liquidity = 10f64.powf(rng.gen_range(-1.0..6.0));
            let Ok(required) = position_amounts(liquidity, &range, deploy) else {
                continue;
            };
            if required.quote <= 0.0 {
                continue;
            }
            let capital = UserCapital::new(
                required.base * (1.0 + rng.gen_range(0.0..0.5)),
                rng.gen_range(0.05..0.95) * required.quote,
            )
            .unwrap();
            let Ok(pos) =
                build_position(&capital, range, liquidity, deploy, BorrowPolicy::QuoteOnly)
            else {
                continue;
            };
            if pos.debt.quote > 0.0 && pos.debt.base == 0.0 {
                let price = range.lower * rng.gen_range(0.2..0.9);
                break (pos, price);
            }
        };
        let before = margin_level(&pos, price);
        let (post, repaid_value) = deleverage(&pos, price);
        ensure!(
            repaid_value == 0.0,
            "case {case}: disjoint tokens still repaid {repaid_value}"
        );
        let after = margin_level(&post, price);
        ensure!(
            rel_close(after, before, 1e-12),
            "case {case}: margin moved from {before} to {after} with nothing repaid"
        );
    }
    Ok(())
}

/// Liquidating a position between the critical and liquidation margins
/// restores the target margin to 1e-9 relative; the claimable fraction is
/// continuous at the critical margin; bad debt appears exactly when the
/// margin sits below one plus the bonus.
fn liquidation_restoration() -> Result<(), String> {
    let mut rng = rng(0x_AC08);
    for case in 0..1_000 {
        let params = gen_params(&mut rng, true);
        let critical = params.critical_margin();
        let margin = critical + rng.gen_range(0.001..0.999) * (params.liq_margin - critical);
        let price = 10f64.powf(rng.gen_range(-2.0..2.0));
        let pos = pinned_margin_position(
            margin,
            price,
            rng.gen_range(0.0..1.0),
            10f64.powf(rng.gen_range(-1.0..3.0)),
        );
        let (_, outcome) =
            liquidate(&pos, price, &params).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            outcome.fraction > 0.0 && outcome.fraction < 1.0,
            "case {case}: liquidation fraction {} is not in (0, 1)",
            outcome.fraction
        );
        ensure!(
            outcome.bad_debt == 0.0,
            "case {case}: bad debt {} above the critical margin",
            outcome.bad_debt
        );
        let post = outcome
            .post_margin
            .ok_or_else(|| format!("case {case}: no post margin reported"))?;
        ensure!(
            rel_close(post, params.target_margin, 1e-9),
            "case {case}: post margin {post} misses target {}",
            params.target_margin
        );

        let just_above = critical * (1.0 + 1e-9);
        let k = liquidation_fraction(just_above, &params);
        let limit = 1.0 / (1.0 + params.liq_bonus);
        ensure!(
            rel_close(k, limit, 1e-6),
            "case {case}: fraction {k} at the critical margin misses {limit}"
        );
    }

    // Bad debt iff the margin is below one plus the bonus.
    for case in 0..1_000 {
        let params = gen_params(&mut rng, true);
        let critical = params.critical_margin();
        let margin = rng.gen_range(0.3..params.liq_margin * 0.999);
        if (margin - critical).abs() <= 1e-9 * critical {
            continue;
        }
        let price = 10f64.powf(rng.gen_range(-2.0..2.0));
        let pos = pinned_margin_position(
            margin,
            price,
            rng.gen_range(0.0..1.0),
            10f64.powf(rng.gen_range(-1.0..3.0)),
        );
        let actual = margin_level(&pos, price);
        if (actual - critical).abs() <= 1e-9 * critical {
            continue;
        }
        let (_, outcome) =
            liquidate(&pos, price, &params).map_err(|e| format!("case {case}: {e}"))?;
        let expected = actual < critical;
        ensure!(
            (outcome.bad_debt > 0.0) == expected,
            "case {case}: margin {actual} vs critical {critical} but bad debt is {}",
            outcome.bad_debt
        );
    }
    Ok(())
}

/// Over 10^5 random swaps the attacker's outlay is non-negative, zero
/// exactly when the price does not move, and matches the closed form
/// L*(sqrt(P)-sqrt(P'))^2/sqrt(P') to 1e-9 relative.
fn manipulation_cost_non_negativity() -> Result<(), String> {
    let mut rng = rng(0x_AC09);
    for case in 0..100_000 {
        let liquidity = 10f64.powf(rng.gen_range(-1.0..6.0));
        let p = 10f64.powf(rng.gen_range(-3.0..3.0));
        let q = if case % 10 == 0 {
            p
        } else {
            10f64.powf(rng.gen_range(-3.0..3.0))
        };
        let cost = swap_value_delta(liquidity, p, q).map_err(|e| format!("case {case}: {e}"))?;
        if p == q {
            ensure!(cost == 0.0, "case {case}: standing still cost {cost}");
            continue;
        }
        ensure!(
            cost > 0.0,
            "case {case}: moving {p} -> {q} cost {cost}, expected positive"
        );
        let closed = liquidity * (p.sqrt() - q.sqrt()).powi(2) / q.sqrt();
        ensure!(
            rel_close(cost, closed, 1e-9),
            "case {case}: cost {cost} disagrees with closed form {closed}"
        );
        let literal = swap_delta(liquidity, p, q)
            .map_err(|e| format!("case {case}: {e}"))?
            .value_at(p);
        ensure!(
            rel_close(literal, closed, 1e-9),
            "case {case}: token flows value {literal} disagrees with closed form {closed}"
        );
    }
    Ok(())
}

/// As the user's own stake shrinks toward zero under proportional
/// borrowing, the margin level converges to one plus the relative
/// divergence loss: the sup gap over a price grid falls monotonically
/// toward zero across stakes 0.5, 0.05, ..., 0.00005.
fn divergence_loss_margin_limit() -> Result<(), String> {
    let range = PriceRange::new(0.5, 2.0).unwrap();
    let deploy = 1.0;
    let liquidity = 1_000.0;
    let required = position_amounts(liquidity, &range, deploy).map_err(|e| e.to_string())?;

    let points = 100;
    let lo = 0.2f64;
    let ratio = (5.0f64 / lo).powf(1.0 / (points - 1) as f64);

    let mut sups = Vec::new();
    for k in 0..5 {
        let stake = 0.5 * 10f64.powi(-k);
        let capital =
            UserCapital::new(stake * required.base, stake * required.quote).unwrap();
        let pos = build_position(
            &capital,
            range,
            liquidity,
            deploy,
            BorrowPolicy::BothProportional,
        )
        .map_err(|e| e.to_string())?;
        let mut sup = 0.0f64;
        let mut price = lo;
        for _ in 0..points {
            let margin = margin_level(&pos, price);
            let loss =
                divergence_loss(liquidity, &range, deploy, price).map_err(|e| e.to_string())?;
            sup = sup.max((margin - loss - 1.0).abs());
            price *= ratio;
        }
        ensure!(sup.is_finite(), "stake {stake}: sup gap is not finite");
        sups.push(sup);
    }
    for k in 1..sups.len() {
        ensure!(
            sups[k] < sups[k - 1],
            "sup gap did not fall: {} then {}",
            sups[k - 1],
            sups[k]
        );
    }
    ensure!(
        sups[4] < 1e-3,
        "sup gap {} at the smallest stake is not near zero",
        sups[4]
    );
    Ok(())
}

fn run_cli(args: &[&str], scenario: &Path, out: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_clamp-risk");
    let output = Command::new(bin)
        .args(args)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| format!("spawning the binary: {e}"))?;
    if !output.status.success() {
        return Err(format!(
            "{} exited with {:?}: {}",
            args.join(" "),
            output.status.code(),
            String::from_utf8_lossy(&output.stderr).trim()
        ));
    }
    Ok(())
}

fn dir_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| format!("reading {}: {e}", dir.display()))?;
    for entry in entries {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let bytes =
            std::fs::read(entry.path()).map_err(|e| format!("reading {name}: {e}"))?;
        files.push((name, bytes));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

fn load_json(path: &Path) -> Result<serde_json::Value, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| format!("parsing {}: {e}", path.display()))
}

/// The shipped example scenarios produce byte-identical reports across two
/// runs; the crash-path trace deleverages before it liquidates; bad debt
/// appears only under the admin-failure flag, leaving the final margin
/// below one plus the liquidation bonus.
fn batch_interface_determinism() -> Result<(), String> {
    let scenario_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let work = std::env::temp_dir().join(format!("clamp-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&work);

    for name in ["stable_pair", "volatile_pair", "crash_path"] {
        let scenario = scenario_dir.join(format!("{name}.json"));
        let first = work.join(name).join("a");
        let second = work.join(name).join("b");
        run_cli(&["run"], &scenario, &first)?;
        run_cli(&["run"], &scenario, &second)?;
        let a = dir_files(&first)?;
        let b = dir_files(&second)?;
        ensure!(!a.is_empty(), "{name}: no reports were written");
        ensure!(
            a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.0 == y.0),
            "{name}: the two runs wrote different file sets"
        );
        for ((file, bytes_a), (_, bytes_b)) in a.iter().zip(&b) {
            ensure!(
                bytes_a == bytes_b,
                "{name}: {file} differs between two identical runs"
            );
        }
    }

    let crash = scenario_dir.join("crash_path.json");
    let critical = {
        let scenario = load_json(&crash)?;
        let bonus = scenario["protocol"]["liq_bonus"]
            .as_f64()
            .ok_or("crash scenario lacks a liquidation bonus")?;
        1.0 + bonus
    };

    let trace = load_json(&work.join("crash_path/a/crash_path-simulate.json"))?;
    let events = trace["result"]["events"]
        .as_array()
        .ok_or("crash trace has no events")?;
    let action_of = |e: &serde_json::Value| e["action"].as_str().unwrap_or("").to_string();
    let first_deleverage = events.iter().position(|e| action_of(e) == "deleverage");
    let first_liquidate = events.iter().position(|e| action_of(e) == "liquidate");
    let (del, liq) = match (first_deleverage, first_liquidate) {
        (Some(d), Some(l)) => (d, l),
        _ => return Err("crash trace lacks a deleverage or a liquidation".into()),
    };
    ensure!(
        del < liq,
        "crash trace liquidates (event {liq}) before it deleverages (event {del})"
    );
    let normal_bad_debt = trace["result"]["total_bad_debt"]
        .as_f64()
        .ok_or("crash trace has no bad debt total")?;
    ensure!(
        normal_bad_debt == 0.0,
        "orderly trigger flow produced bad debt {normal_bad_debt}"
    );

    let admin_out = work.join("crash_admin");
    run_cli(&["simulate", "--admin-failure"], &crash, &admin_out)?;
    let trace = load_json(&admin_out.join("crash_path-simulate.json"))?;
    let admin_bad_debt = trace["result"]["total_bad_debt"]
        .as_f64()
        .ok_or("admin-failure trace has no bad debt total")?;
    ensure!(
        admin_bad_debt > 0.0,
        "admin-failure flow produced no bad debt"
    );
    let final_margin = trace["result"]["final_margin"]
        .as_f64()
        .ok_or("admin-failure trace has no final margin")?;
    ensure!(
        final_margin < critical,
        "final margin {final_margin} is not below the critical level {critical}"
    );

    let _ = std::fs::remove_dir_all(&work);
    Ok(())
}
