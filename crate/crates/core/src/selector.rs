//! Choosing between broadcast and unicast.
//!
//! The remote-control threshold compares BRNP against DNP for homogeneous UEs
//! with negligible block error rate. The dynamic-system threshold compares
//! the expected zero-waiting ages of the two schemes over the PPP.

use serde::Serialize;

use crate::dynamic::DynamicConfig;
use crate::error::{ensure_positive, invalid, AoiError, Result};
use crate::fbl::harmonic_capacity;
use crate::numeric::{bisect, one_minus_exp, one_minus_exp_over};
use crate::system::SystemConfig;

const BISECT_ITERS: usize = 200;
const SCAN_POINTS: usize = 400;
const ALPHA_FLOOR: f64 = 1e-9;

/// Homogeneous remote-control system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemoteControlScenario {
    pub n_ues: usize,
    pub gen_rate: f64,
    /// Unicast cycle `M_T = N·(M_L + M_h)`.
    pub cycle: f64,
    /// `ρ = M_h / (M_L + M_h)`
    pub tx_ratio: f64,
}

impl RemoteControlScenario {
    pub fn new(n_ues: usize, gen_rate: f64, cycle: f64, tx_ratio: f64) -> Result<Self> {
        let sc = Self {
            n_ues,
            gen_rate,
            cycle,
            tx_ratio,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// From per-UE payload `bits`, coding rate and overhead.
    pub fn from_link(n_ues: usize, gen_rate: f64, bits: f64, coding_rate: f64, overhead: f64) -> Result<Self> {
        ensure_positive("coding_rate", coding_rate)?;
        let m = bits / coding_rate;
        Self::new(n_ues, gen_rate, n_ues as f64 * (m + overhead), m / (m + overhead))
    }

    /// Requires identical blocklengths across UEs.
    pub fn from_system(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.per_ue_blocklength[0];
        if cfg.per_ue_blocklength.iter().any(|&x| x != m) {
            return Err(invalid("per_ue_blocklength", "remote-control scenario needs equal blocklengths"));
        }
        Self::new(cfg.n_ues(), cfg.gen_rate, cfg.cycle_length(), cfg.tx_ratio(0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ues == 0 {
            return Err(invalid("n_ues", "need at least one UE"));
        }
        ensure_positive("gen_rate", self.gen_rate)?;
        ensure_positive("cycle", self.cycle)?;
        if !(self.tx_ratio > 0.0 && self.tx_ratio <= 1.0) {
            return Err(invalid("tx_ratio", format!("must lie in (0, 1], got {}", self.tx_ratio)));
        }
        Ok(())
    }

    /// Broadcast blocklength at information ratio `alpha`, `αρM_T`.
    pub fn broadcast_blocklength(&self, alpha: f64) -> f64 {
        alpha * self.tx_ratio * self.cycle
    }
}

/// `Ω(ω) = (2e^{−ω} − e^{−2ω})/(ω + e^{−ω}) − e^{−ω}`, with `Ω(0) = 0`.
pub fn omega(w: f64) -> f64 {
    if w.abs() < 1e-3 {
        let w2 = w * w;
        return w - 2.0 * w2 + 4.0 / 3.0 * w2 * w + w2 * w2 / 12.0;
    }
    let e = (-w).exp();
    e * (2.0 * one_minus_exp(w) - w) / (w + e)
}

/// BRNP minus the DNP system average, both with ε = 0, with the common `1/λ`
/// removed. Negative means broadcast is fresher.
pub fn alpha_residual(sc: &RemoteControlScenario, alpha: f64) -> f64 {
    let (lhs, rhs) = alpha_sides(sc, alpha);
    lhs - rhs
}

fn alpha_sides(sc: &RemoteControlScenario, alpha: f64) -> (f64, f64) {
    let lambda = sc.gen_rate;
    let n = sc.n_ues as f64;
    let m = sc.broadcast_blocklength(alpha);
    let x = lambda * m;
    let xt = lambda * sc.cycle;
    let lhs = (1.5 - (-x).exp()) * m + omega(x) / (2.0 * lambda);
    let rhs = ((2.0 * n + 1.0) / (2.0 * n) - (-xt).exp()) * sc.cycle + omega(xt) / (2.0 * lambda);
    (lhs, rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaThreshold {
    /// Smallest root; broadcast is fresher below it.
    pub alpha: f64,
    /// Residual at `alpha`.
    pub residual: f64,
    /// Magnitude of the unicast side, for relative certification.
    pub scale: f64,
    /// Every sign change found on the scan, in increasing order.
    pub roots: Vec<f64>,
    /// `alpha ≥ 1`: broadcast wins for every admissible ratio.
    pub broadcast_always: bool,
}

impl AlphaThreshold {
    pub fn multiple_roots(&self) -> bool {
        self.roots.len() > 1
    }
}

/// Root of [`alpha_residual`] on `(0, 1/ρ]`.
pub fn alpha_threshold(sc: &RemoteControlScenario) -> Result<AlphaThreshold> {
    sc.validate()?;
    let top = 1.0 / sc.tx_ratio;
    let f = |a: f64| alpha_residual(sc, a);
    let grid: Vec<f64> = (0..=SCAN_POINTS)
        .map(|i| ALPHA_FLOOR + (top - ALPHA_FLOOR) * i as f64 / SCAN_POINTS as f64)
        .collect();
    let mut values: Vec<f64> = grid.iter().map(|&a| f(a)).collect();
    let scale = alpha_sides(sc, top).1.abs().max(1.0);
    // With one UE the two sides meet exactly at the top of the range.
    if values[SCAN_POINTS].abs() <= 1e-12 * scale {
        values[SCAN_POINTS] = 0.0;
    }
    let mut roots = Vec::new();
    for i in 0..SCAN_POINTS {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a.signum() != b.signum() && b != 0.0 {
            roots.push(bisect(f, grid[i], grid[i + 1], BISECT_ITERS)?);
        }
    }
    if values[SCAN_POINTS] == 0.0 {
        roots.push(top);
    }
    let Some(&alpha) = roots.first() else {
        let direction = if values[0] < 0.0 { "broadcast" } else { "unicast" };
        return Err(AoiError::NoThreshold(format!("{direction} is fresher over the whole range")));
    };
    Ok(AlphaThreshold {
        alpha,
        residual: f(alpha),
        scale,
        roots,
        broadcast_always: alpha >= 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaLimits {
    /// `(2N+1)/(3Nρ)`, reached as `λ → ∞`.
    pub zero_waiting: f64,
    /// `(N+1)/(2Nρ)`, reached as `λ → 0`.
    pub sporadic: f64,
}

impl AlphaLimits {
    pub fn zero_waiting_saturates(&self) -> bool {
        self.zero_waiting > 1.0
    }

    pub fn sporadic_saturates(&self) -> bool {
        self.sporadic > 1.0
    }
}

pub fn alpha_threshold_limits(sc: &RemoteControlScenario) -> Result<AlphaLimits> {
    sc.validate()?;
    let n = sc.n_ues as f64;
    Ok(AlphaLimits {
        zero_waiting: (2.0 * n + 1.0) / (3.0 * n * sc.tx_ratio),
        sporadic: (n + 1.0) / (2.0 * n * sc.tx_ratio),
    })
}

/// Expected zero-waiting broadcast AoI,
/// `3/(2C_{D2})·((1 − e^{−Λ})·L_co + Λ·L_id)`.
pub fn expected_aoi_broadcast(cfg: &DynamicConfig) -> Result<f64> {
    cfg.validate()?;
    let c = cfg.outer_capacity();
    let pop = cfg.mean_population();
    Ok(1.5 / c * (one_minus_exp(pop) * cfg.common_bits + pop * cfg.individual_bits))
}

/// Expected zero-waiting unicast AoI,
/// `((1 − e^{−Λ})/2 + Λ)·((L_co + L_id)/C_Λ + M_L)`.
pub fn expected_aoi_unicast(cfg: &DynamicConfig) -> Result<f64> {
    let c_lambda = harmonic_capacity(cfg)?;
    let pop = cfg.mean_population();
    Ok((one_minus_exp(pop) / 2.0 + pop) * ((cfg.common_bits + cfg.individual_bits) / c_lambda + cfg.overhead))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaThreshold {
    /// Broadcast is preferred iff `β ≤ value`.
    pub value: f64,
    /// Both sides divided by `Λ`, so finite as `Λ → 0`.
    pub numerator: f64,
    pub denominator: f64,
    /// `2C_{D2}/(3C_Λ − 2C_{D2})`, the `M_L = 0`, large-`Λ` form.
    pub large_population: f64,
}

impl BetaThreshold {
    /// A negative threshold: unicast wins for every `β ≥ 0`.
    pub fn unicast_always(&self) -> bool {
        self.value < 0.0
    }
}

/// Individual-to-common ratio at which the expected ages of the two schemes
/// cross.
pub fn beta_threshold(cfg: &DynamicConfig) -> Result<BetaThreshold> {
    cfg.validate()?;
    let c_lambda = harmonic_capacity(cfg)?;
    let c_outer = cfg.outer_capacity();
    let g = one_minus_exp_over(cfg.mean_population());
    let numerator = (g + 2.0) / c_lambda - 3.0 * g / c_outer + (2.0 + g) * cfg.overhead / cfg.common_bits;
    let denominator = 3.0 / c_outer - (2.0 + g) / c_lambda;
    if !(denominator > 0.0) {
        return Err(AoiError::NoThreshold(format!(
            "broadcast age grows no faster in beta than unicast (denominator {denominator}); \
             broadcast is fresher for every beta above {}",
            numerator / denominator
        )));
    }
    Ok(BetaThreshold {
        value: numerator / denominator,
        numerator,
        denominator,
        large_population: 2.0 * c_outer / (3.0 * c_lambda - 2.0 * c_outer),
    })
}
