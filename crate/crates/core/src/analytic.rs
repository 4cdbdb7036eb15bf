//! Closed-form average AoI for the broadcast and unicast strategies.
//!
//! Every per-UE result is assembled from the renewal quantities of one
//! reception cycle: the inter-reception time `Y`, the system time `T`
//! (waiting `W` plus serving `S`) and the geometric attempt count `H`,
//! combined as `Δ = E[Y²] / (2 E[Y]) + E[T]`.
//!
//! The `*_with_epsilon` functions take the block error rate explicitly so the
//! formulas can be exercised without going through the link model. The
//! unicast variants take the per-UE serving times `M_k' = M_k + M_L` in round
//! robin order and a 0-based UE index.
//!
//! Exponentials of the form `1 − e^{−λM}` are always evaluated through
//! `expm1`, so the small-λ end stays finite without special casing.

use serde::Serialize;

use crate::error::{ensure_positive, invalid, AoiError, Result};
use crate::fbl::{block_error_rate, LinkBudget};
use crate::numeric::{doubled_exp_residual, one_minus_exp, truncated_exp_gap};
use crate::system::{StrategyKind, SystemConfig};

/// Results are refused once `ε` gets this close to 1.
pub const DIVERGENCE_MARGIN: f64 = 1e-12;
/// Largest `λ·M` before `e^{λM}` terms leave the f64 range.
const MAX_EXPONENT: f64 = 700.0;

/// Renewal quantities behind one UE's average AoI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalDiagnostics {
    /// `E[T]`, generation to reception.
    pub mean_t: f64,
    /// `E[W]`, time spent in the buffer.
    pub mean_w: f64,
    /// `E[S]`, start of service to reception by this UE.
    pub mean_s: f64,
    /// `E[Y]`, time between receptions.
    pub mean_y: f64,
    /// `E[Y²]`.
    pub mean_y2: f64,
    /// `E[H]`, transmissions per successful reception.
    pub mean_attempts: f64,
}

impl RenewalDiagnostics {
    /// `E[Y²] / (2 E[Y]) + E[T]`.
    pub fn average_aoi(&self) -> f64 {
        self.mean_y2 / (2.0 * self.mean_y) + self.mean_t
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
    }
    if epsilon >= 1.0 - DIVERGENCE_MARGIN {
        return Err(AoiError::DivergentAoi { epsilon });
    }
    Ok(())
}

fn check_unicast(serving: &[f64], lambda: f64, ue: usize, epsilon: f64) -> Result<()> {
    if serving.is_empty() {
        return Err(AoiError::Empty);
    }
    if ue >= serving.len() {
        return Err(AoiError::UeOutOfRange {
            index: ue,
            n_ues: serving.len(),
        });
    }
    for &m in serving {
        ensure_positive("serving_time", m)?;
    }
    ensure_positive("gen_rate", lambda)?;
    check_epsilon(epsilon)
}

/// `(1+ε) / (2(1−ε))`
fn error_factor(epsilon: f64) -> f64 {
    (1.0 + epsilon) / (2.0 * (1.0 - epsilon))
}

/// Serving times in the order they are visited after UE `ue`, ending with `ue`
/// itself: `M'_{k_n}` for `k = 1..N`.
fn rotated(serving: &[f64], ue: usize) -> Vec<f64> {
    let n = serving.len();
    (1..=n).map(|k| serving[(ue + k) % n]).collect()
}

// ---------------------------------------------------------------------------
// DNP

pub fn dnp_diagnostics(serving: &[f64], lambda: f64, ue: usize, epsilon: f64) -> Result<RenewalDiagnostics> {
    check_unicast(serving, lambda, ue, epsilon)?;
    let cycle: f64 = serving.iter().sum();
    let x = lambda * cycle;
    let e = (-x).exp();
    let busy = one_minus_exp(x);
    let base = cycle + e / lambda;
    let mean_w = busy / lambda - cycle * e;
    let mean_s: f64 = serving[..=ue].iter().sum();
    let mean_y = base / (1.0 - epsilon);
    let mean_y2 = base * base * (1.0 + epsilon) / (1.0 - epsilon).powi(2)
        + e * (2.0 - e) / ((1.0 - epsilon) * lambda * lambda);
    Ok(RenewalDiagnostics {
        mean_t: mean_s + mean_w,
        mean_w,
        mean_s,
        mean_y,
        mean_y2,
        mean_attempts: 1.0 / (1.0 - epsilon),
    })
}

/// Average AoI of UE `ue` under DNP.
pub fn dnp_with_epsilon(serving: &[f64], lambda: f64, ue: usize, epsilon: f64) -> Result<f64> {
    check_unicast(serving, lambda, ue, epsilon)?;
    let cycle: f64 = serving.iter().sum();
    let x = lambda * cycle;
    let e = (-x).exp();
    let later: f64 = serving[ue + 1..].iter().sum();
    Ok(error_factor(epsilon) * (cycle + e / lambda)
        + e * (2.0 - e) / (2.0 * (lambda * lambda * cycle + lambda * e))
        - later
        + (1.0 / lambda + cycle) * one_minus_exp(x))
}

/// DNP as `λ → ∞`.
pub fn dnp_zero_wait_with_epsilon(serving: &[f64], ue: usize, epsilon: f64) -> Result<f64> {
    check_unicast(serving, 1.0, ue, epsilon)?;
    let cycle: f64 = serving.iter().sum();
    let later: f64 = serving[ue + 1..].iter().sum();
    Ok(error_factor(epsilon) * cycle + cycle - later)
}

// ---------------------------------------------------------------------------
// DPB

struct DpbParts {
    cycle: f64,
    /// Mean idle time per cycle, `ξ`.
    xi: f64,
    busy: f64,
    e: f64,
    seq: Vec<f64>,
}

fn dpb_parts(serving: &[f64], lambda: f64, ue: usize) -> DpbParts {
    let seq = rotated(serving, ue);
    let cycle: f64 = seq.iter().sum();
    let x = lambda * cycle;
    let e = (-x).exp();
    let busy = one_minus_exp(x);
    let started: f64 = seq.iter().map(|&m| one_minus_exp(lambda * m) / lambda).sum();
    DpbParts {
        cycle,
        xi: e * started / busy,
        busy,
        e,
        seq,
    }
}

/// `Σ_{κ=k}^{N−1} M'_{κ_n}` for each `k`: the visit order up to (but
/// excluding) the final visit to the tagged UE.
fn dpb_tails(seq: &[f64]) -> Vec<f64> {
    let n = seq.len();
    let mut tails = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        acc += seq[i];
        tails[i] = acc;
    }
    tails
}

pub fn dpb_diagnostics(serving: &[f64], lambda: f64, ue: usize, epsilon: f64) -> Result<RenewalDiagnostics> {
    check_unicast(serving, lambda, ue, epsilon)?;
    let p = dpb_parts(serving, lambda, ue);
    let n = p.seq.len();
    let tails = dpb_tails(&p.seq);
    let mut mean_w = p.busy / lambda;
    for i in 0..n - 1 {
        mean_w -= p.seq[i] * (-lambda * tails[i]).exp();
    }
    mean_w -= p.seq[n - 1] * p.e;
    let mean_s: f64 = p
        .seq
        .iter()
        .zip(&tails)
        .map(|(&m, &t)| m * (-lambda * t).exp() * one_minus_exp(lambda * (p.cycle - t)) / p.busy)
        .sum();
    let b = p.cycle + p.xi;
    let mean_y = b / (1.0 - epsilon);
    let mean_y2 = (1.0 + epsilon) / (1.0 - epsilon).powi(2) * b * b
        + p.xi * (2.0 - lambda * p.xi) / (lambda * (1.0 - epsilon));
    Ok(RenewalDiagnostics {
        mean_t: mean_w + mean_s,
        mean_w,
        mean_s,
        mean_y,
        mean_y2,
        mean_attempts: 1.0 / (1.0 - epsilon),
    })
}

/// Average AoI of UE `ue` under DPB.
pub fn dpb_with_epsilon(serving: &[f64], lambda: f64, ue: usize, epsilon: f64) -> Result<f64> {
    check_unicast(serving, lambda, ue, epsilon)?;
    let p = dpb_parts(serving, lambda, ue);
    let tails = dpb_tails(&p.seq);
    let carried: f64 = p
        .seq
        .iter()
        .zip(&tails)
        .map(|(&m, &t)| m * p.e * one_minus_exp(lambda * t) / p.busy)
        .sum();
    let b = p.cycle + p.xi;
    Ok(error_factor(epsilon) * b + p.busy / lambda
        + p.xi * (2.0 - lambda * p.xi) / (2.0 * lambda * b)
        - carried
        + serving[ue] * p.busy)
}

/// DPB as `λ → ∞`.
pub fn dpb_zero_wait_with_epsilon(serving: &[f64], ue: usize, epsilon: f64) -> Result<f64> {
    check_unicast(serving, 1.0, ue, epsilon)?;
    let cycle: f64 = serving.iter().sum();
    Ok(error_factor(epsilon) * cycle + serving[ue])
}

// ---------------------------------------------------------------------------
// DPS

struct DpsParts {
    /// `p_k / (1 − p_k) = e^{λM'} − 1` in visit order.
    odds: Vec<f64>,
    seq: Vec<f64>,
    odds_sum: f64,
    busy: f64,
    /// `E[S]`
    serve: f64,
    /// `Var(B)`, the bracketed second-moment block.
    var_b: f64,
}

fn dps_parts(serving: &[f64], lambda: f64, ue: usize) -> Result<DpsParts> {
    let seq = rotated(serving, ue);
    let n = seq.len();
    if let Some(&m) = seq.iter().find(|&&m| lambda * m > MAX_EXPONENT) {
        return Err(AoiError::Overflow { exponent: lambda * m });
    }
    let cycle: f64 = seq.iter().sum();
    let x = lambda * cycle;
    let e = (-x).exp();
    let busy = one_minus_exp(x);
    let odds: Vec<f64> = seq.iter().map(|&m| (lambda * m).exp_m1()).collect();
    let odds_sum: f64 = odds.iter().sum();
    let psi = e * odds_sum / busy;
    let l2 = lambda * lambda;

    // Σ_{κ=k+1}^{N} M'_{κ_n}
    let mut serve = 0.0;
    let mut after = 0.0;
    for i in (0..n).rev() {
        serve += seq[i] * (-lambda * after).exp() * one_minus_exp(lambda * (cycle - after)) / busy;
        after += seq[i];
    }

    let mut bracket = psi * (2.0 - psi) / l2;
    for &m in &seq {
        bracket += doubled_exp_residual(lambda * m) / l2;
    }
    let mut cross = 0.0;
    let mut prefix = 0.0;
    for i in 0..n {
        cross += odds[i] * prefix;
        // 1/λ − M'(1−p)/p = M' · (1/(λM') − 1/(e^{λM'} − 1))
        prefix += odds[i] * seq[i] * truncated_exp_gap(lambda * seq[i]);
    }
    bracket -= 2.0 * e / busy * cross;

    Ok(DpsParts {
        odds,
        seq,
        odds_sum,
        busy,
        serve,
        var_b: bracket,
    })
}

pub fn dps_diagnostics(serving: &[f64], lambda: f64, ue: usize, epsilon: f64) -> Result<RenewalDiagnostics> {
    check_unicast(serving, lambda, ue, epsilon)?;
    let p = dps_parts(serving, lambda, ue)?;
    let mean_b = p.odds_sum / (lambda * p.busy);
    Ok(RenewalDiagnostics {
        mean_t: p.serve,
        mean_w: 0.0,
        mean_s: p.serve,
        mean_y: mean_b / (1.0 - epsilon),
        mean_y2: (1.0 + epsilon) / (1.0 - epsilon).powi(2) * mean_b * mean_b + p.var_b / (1.0 - epsilon),
        mean_attempts: 1.0 / (1.0 - epsilon),
    })
}

/// Average AoI of UE `ue` under DPS.
pub fn dps_with_epsilon(serving: &[f64], lambda: f64, ue: usize, epsilon: f64) -> Result<f64> {
    check_unicast(serving, lambda, ue, epsilon)?;
    let p = dps_parts(serving, lambda, ue)?;
    debug_assert_eq!(p.odds.len(), p.seq.len());
    let first = (1.0 + epsilon) / (2.0 * lambda * p.busy * (1.0 - epsilon)) * p.odds_sum;
    // λe^{−λM_T}/(2ψ) with the e^{−λM_T} cancelled, finite for large λ.
    let third = lambda * p.busy / (2.0 * p.odds_sum) * p.var_b;
    let value = first + p.serve + third;
    if !value.is_finite() {
        let worst = serving.iter().fold(0.0_f64, |a, &m| a.max(m));
        return Err(AoiError::Overflow { exponent: lambda * worst });
    }
    Ok(value)
}

// ---------------------------------------------------------------------------
// Broadcast

fn check_broadcast(blocklength: f64, lambda: f64, epsilon: f64) -> Result<()> {
    ensure_positive("blocklength", blocklength)?;
    ensure_positive("gen_rate", lambda)?;
    check_epsilon(epsilon)
}

/// Broadcast non-preemptive AoI for a packet of `blocklength` channel uses.
pub fn brnp_with_epsilon(blocklength: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    check_broadcast(blocklength, lambda, epsilon)?;
    let m = blocklength;
    let e = (-lambda * m).exp();
    Ok(error_factor(epsilon) * (m + e / lambda)
        + (2.0 * e - e * e) / (2.0 * (lambda * lambda * m + lambda * e))
        + (1.0 / lambda + m) * one_minus_exp(lambda * m))
}

/// Broadcast preemptive AoI, `1 / (λ e^{−λM} (1−ε))`.
pub fn brps_with_epsilon(blocklength: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    check_broadcast(blocklength, lambda, epsilon)?;
    if lambda * blocklength > MAX_EXPONENT {
        return Err(AoiError::Overflow {
            exponent: lambda * blocklength,
        });
    }
    Ok((lambda * blocklength).exp() / (lambda * (1.0 - epsilon)))
}

pub fn aoi_brnp(link: &LinkBudget, lambda: f64) -> Result<f64> {
    brnp_with_epsilon(link.blocklength, lambda, block_error_rate(link)?.epsilon)
}

pub fn aoi_brps(link: &LinkBudget, lambda: f64) -> Result<f64> {
    brps_with_epsilon(link.blocklength, lambda, block_error_rate(link)?.epsilon)
}

// ---------------------------------------------------------------------------
// SystemConfig front end

fn unicast_epsilon(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    cfg.validate()?;
    Ok(block_error_rate(&cfg.unicast_link(ue)?)?.epsilon)
}

pub fn aoi_dnp(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let eps = unicast_epsilon(cfg, ue)?;
    dnp_with_epsilon(&cfg.serving_times(), cfg.gen_rate, ue, eps)
}

pub fn aoi_dpb(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let eps = unicast_epsilon(cfg, ue)?;
    dpb_with_epsilon(&cfg.serving_times(), cfg.gen_rate, ue, eps)
}

pub fn aoi_dps(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let eps = unicast_epsilon(cfg, ue)?;
    dps_with_epsilon(&cfg.serving_times(), cfg.gen_rate, ue, eps)
}

pub fn aoi_dnp_zero_wait(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let eps = unicast_epsilon(cfg, ue)?;
    dnp_zero_wait_with_epsilon(&cfg.serving_times(), ue, eps)
}

pub fn aoi_dpb_zero_wait(cfg: &SystemConfig, ue: usize) -> Result<f64> {
    let eps = unicast_epsilon(cfg, ue)?;
    dpb_zero_wait_with_epsilon(&cfg.serving_times(), ue, eps)
}

/// Per-UE AoI under any strategy, with ε supplied by the caller.
pub fn per_ue_aoi_with_epsilon(cfg: &SystemConfig, strategy: StrategyKind, ue: usize, epsilon: f64) -> Result<f64> {
    cfg.validate()?;
    cfg.check_ue(ue)?;
    let serving = cfg.serving_times();
    let lambda = cfg.gen_rate;
    match strategy {
        StrategyKind::Brnp => brnp_with_epsilon(cfg.broadcast_blocklength, lambda, epsilon),
        StrategyKind::Brps => brps_with_epsilon(cfg.broadcast_blocklength, lambda, epsilon),
        StrategyKind::Dnp => dnp_with_epsilon(&serving, lambda, ue, epsilon),
        StrategyKind::Dpb => dpb_with_epsilon(&serving, lambda, ue, epsilon),
        StrategyKind::Dps => dps_with_epsilon(&serving, lambda, ue, epsilon),
        StrategyKind::DnpZeroWait => dnp_zero_wait_with_epsilon(&serving, ue, epsilon),
        StrategyKind::DpbZeroWait => dpb_zero_wait_with_epsilon(&serving, ue, epsilon),
    }
}

/// Per-UE AoI with ε taken from the link model.
pub fn per_ue_aoi(cfg: &SystemConfig, strategy: StrategyKind, ue: usize) -> Result<f64> {
    cfg.validate()?;
    cfg.check_ue(ue)?;
    let link = if strategy.is_broadcast() {
        cfg.broadcast_link(ue)?
    } else {
        cfg.unicast_link(ue)?
    };
    per_ue_aoi_with_epsilon(cfg, strategy, ue, block_error_rate(&link)?.epsilon)
}

/// Arithmetic mean of per-UE averages.
pub fn system_average(per_ue: &[f64]) -> Result<f64> {
    if per_ue.is_empty() {
        return Err(AoiError::Empty);
    }
    if let Some(v) = per_ue.iter().find(|v| !v.is_finite()) {
        return Err(invalid("per_ue_aoi", format!("non-finite value {v}")));
    }
    Ok(per_ue.iter().sum::<f64>() / per_ue.len() as f64)
}

/// System-wide average AoI under `strategy`.
pub fn system_aoi(cfg: &SystemConfig, strategy: StrategyKind) -> Result<f64> {
    let per_ue = (0..cfg.n_ues())
        .map(|k| per_ue_aoi(cfg, strategy, k))
        .collect::<Result<Vec<_>>>()?;
    system_average(&per_ue)
}

/// Renewal quantities for a unicast strategy.
pub fn renewal_diagnostics(cfg: &SystemConfig, strategy: StrategyKind, ue: usize) -> Result<RenewalDiagnostics> {
    let eps = unicast_epsilon(cfg, ue)?;
    renewal_diagnostics_with_epsilon(cfg, strategy, ue, eps)
}

pub fn renewal_diagnostics_with_epsilon(
    cfg: &SystemConfig,
    strategy: StrategyKind,
    ue: usize,
    epsilon: f64,
) -> Result<RenewalDiagnostics> {
    cfg.validate()?;
    let serving = cfg.serving_times();
    match strategy {
        StrategyKind::Dnp => dnp_diagnostics(&serving, cfg.gen_rate, ue, epsilon),
        StrategyKind::Dpb => dpb_diagnostics(&serving, cfg.gen_rate, ue, epsilon),
        StrategyKind::Dps => dps_diagnostics(&serving, cfg.gen_rate, ue, epsilon),
        other => Err(AoiError::UnsupportedStrategy(other)),
    }
}
