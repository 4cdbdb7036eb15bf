//! Monte Carlo model of the dynamic system: UEs scattered by a Poisson point
//! process over an annulus around the base station, all served under the
//! zero-waiting policy.

use std::f64::consts::{LOG2_E, PI};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, AoiError, Result};
use crate::fbl::{block_error_rate, LinkBudget};
use crate::seeding::{stream_rng, STREAM_GEOMETRY};
use crate::stats::{mean_ci, AoiEstimate};

/// Realizations drawn from one RNG stream in the parallel estimator.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicConfig {
    /// UEs per unit area, `λ_UE`.
    pub ue_intensity: f64,
    /// `D₁ ≥ 1`
    pub inner_radius: f64,
    /// `D₂ > D₁`
    pub outer_radius: f64,
    /// Path-loss exponent `η ≥ 2`.
    pub pathloss_exp: f64,
    /// Linear SNR at unit distance, `γ₀`.
    pub ref_snr: f64,
    /// Per-UE pre-processing time `M_L` (unicast only).
    pub overhead: f64,
    /// `L_co`
    pub common_bits: f64,
    /// `L_id`
    pub individual_bits: f64,
    /// Code at `c·C` instead of at capacity and charge the resulting block
    /// error rate. `None` means ε = 0 at capacity.
    #[serde(default)]
    pub rate_backoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Broadcast,
    Unicast,
}

impl DynamicConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("ue_intensity", self.ue_intensity)?;
        if !(self.inner_radius.is_finite() && self.inner_radius >= 1.0) {
            return Err(invalid("inner_radius", format!("must be >= 1, got {}", self.inner_radius)));
        }
        if !(self.outer_radius.is_finite() && self.outer_radius > self.inner_radius) {
            return Err(invalid(
                "outer_radius",
                format!("must exceed inner_radius, got {}", self.outer_radius),
            ));
        }
        if !(self.pathloss_exp.is_finite() && self.pathloss_exp >= 2.0) {
            return Err(invalid("pathloss_exp", format!("must be >= 2, got {}", self.pathloss_exp)));
        }
        ensure_positive("ref_snr", self.ref_snr)?;
        if !(self.overhead.is_finite() && self.overhead >= 0.0) {
            return Err(invalid("overhead", format!("must be >= 0, got {}", self.overhead)));
        }
        ensure_positive("common_bits", self.common_bits)?;
        if !(self.individual_bits.is_finite() && self.individual_bits >= 0.0) {
            return Err(invalid(
                "individual_bits",
                format!("must be >= 0, got {}", self.individual_bits),
            ));
        }
        if let Some(c) = self.rate_backoff {
            if !(c > 0.0 && c < 1.0) {
                return Err(invalid("rate_backoff", format!("must lie in (0, 1), got {c}")));
            }
        }
        Ok(())
    }

    /// Sets `γ₀` so that the SNR at the outer radius equals `snr`.
    pub fn with_outer_snr(mut self, snr: f64) -> Self {
        self.ref_snr = snr * self.outer_radius.powf(self.pathloss_exp);
        self
    }

    /// `Λ = λ_UE·π·(D₂² − D₁²)`
    pub fn mean_population(&self) -> f64 {
        self.ue_intensity * PI * (self.outer_radius.powi(2) - self.inner_radius.powi(2))
    }

    /// Sets `λ_UE` so that the mean UE count equals `lambda_pop`.
    pub fn with_mean_population(mut self, lambda_pop: f64) -> Self {
        self.ue_intensity = lambda_pop / (PI * (self.outer_radius.powi(2) - self.inner_radius.powi(2)));
        self
    }

    pub fn snr_at(&self, distance: f64) -> f64 {
        self.ref_snr * distance.powf(-self.pathloss_exp)
    }

    /// `γ_{D2}`
    pub fn outer_snr(&self) -> f64 {
        self.snr_at(self.outer_radius)
    }

    /// `C₀ = ½·log₂(1+γ₀)`
    pub fn reference_capacity(&self) -> f64 {
        0.5 * self.ref_snr.ln_1p() * LOG2_E
    }

    /// `C_{D2} = ½·log₂(1+γ_{D2})`, the broadcast rate.
    pub fn outer_capacity(&self) -> f64 {
        0.5 * self.outer_snr().ln_1p() * LOG2_E
    }

    /// High-SNR capacity `C₀ − (η/2)·log₂ d`.
    pub fn approx_capacity_at(&self, distance: f64) -> f64 {
        self.reference_capacity() - 0.5 * self.pathloss_exp * distance.log2()
    }

    /// Unicast capacity of a UE at `distance`, `½·log₂(γ₀ d^{−η})`.
    pub fn unicast_capacity_at(&self, distance: f64) -> f64 {
        0.5 * self.snr_at(distance).log2()
    }

    /// `β = L_id / L_co`
    pub fn beta(&self) -> f64 {
        self.individual_bits / self.common_bits
    }
}

/// Draws one PPP realization: `N ~ Poisson(Λ)` distances, uniform in area.
pub fn sample_realization(cfg: &DynamicConfig, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, 0, STREAM_GEOMETRY);
    Ok(sample_distances(cfg, &mut rng))
}

fn sample_distances<R: Rng + ?Sized>(cfg: &DynamicConfig, rng: &mut R) -> Vec<f64> {
    let pop = Poisson::new(cfg.mean_population()).expect("validated intensity");
    let n = pop.sample(rng) as usize;
    let d1 = cfg.inner_radius.powi(2);
    let span = cfg.outer_radius.powi(2) - d1;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (d1 + u * span).sqrt()
        })
        .collect()
}

/// Zero-waiting block error factor `(1+ε)/(2(1−ε))` and blocklength for one
/// link coded at `c·capacity`, or at capacity with ε = 0.
fn coded_link(cfg: &DynamicConfig, bits: f64, capacity: f64, snr: f64) -> Result<(f64, f64)> {
    match cfg.rate_backoff {
        None => Ok((0.5, bits / capacity)),
        Some(c) => {
            let m = bits / (c * capacity);
            let eps = block_error_rate(&LinkBudget::new(snr, bits, m)?)?.epsilon;
            if eps >= 1.0 - crate::analytic::DIVERGENCE_MARGIN {
                return Err(AoiError::DivergentAoi { epsilon: eps });
            }
            Ok(((1.0 + eps) / (2.0 * (1.0 - eps)), m))
        }
    }
}

/// System-average zero-waiting AoI of one realization.
///
/// Broadcast sends `L_co + N·L_id` bits at `C_{D2}` and gives `(3/2)·M`.
/// Unicast serves UEs nearest first with `L_co + L_id` bits each and
/// averages the per-UE DNP zero-waiting ages.
pub fn realization_aoi(cfg: &DynamicConfig, distances: &[f64], scheme: Scheme) -> Result<f64> {
    cfg.validate()?;
    if distances.is_empty() {
        return Err(AoiError::Empty);
    }
    let n = distances.len();
    match scheme {
        Scheme::Broadcast => {
            let bits = cfg.common_bits + n as f64 * cfg.individual_bits;
            let c = cfg.outer_capacity();
            if cfg.rate_backoff.is_none() {
                return Ok(1.5 * bits / c);
            }
            let mut total = 0.0;
            for &d in distances {
                let (factor, m) = coded_link(cfg, bits, c, cfg.snr_at(d))?;
                total += factor * m + m;
            }
            Ok(total / n as f64)
        }
        Scheme::Unicast => {
            let mut order = distances.to_vec();
            order.sort_by(f64::total_cmp);
            let bits = cfg.common_bits + cfg.individual_bits;
            let mut serving = Vec::with_capacity(n);
            let mut factors = Vec::with_capacity(n);
            for &d in &order {
                let c = cfg.unicast_capacity_at(d);
                if !(c > 0.0) {
                    return Err(AoiError::BeyondDecodableRange { distance: d });
                }
                let (factor, m) = coded_link(cfg, bits, c, cfg.snr_at(d))?;
                serving.push(m + cfg.overhead);
                factors.push(factor);
            }
            let cycle: f64 = serving.iter().sum();
            // (1+ε_k)/(2(1−ε_k))·M_T + M_T − Σ_{j>k} M_j'
            let mut later = 0.0;
            let mut total = 0.0;
            for k in (0..n).rev() {
                total += factors[k] * cycle + cycle - later;
                later += serving[k];
            }
            Ok(total / n as f64)
        }
    }
}

/// Expected system AoI over PPP realizations, with empty realizations
/// contributing zero.
pub fn expected_aoi_monte_carlo(
    cfg: &DynamicConfig,
    scheme: Scheme,
    realizations: usize,
    seed: u64,
) -> Result<AoiEstimate> {
    cfg.validate()?;
    if realizations < 100 {
        return Err(invalid("realizations", format!("need at least 100, got {realizations}")));
    }
    let chunks = realizations.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64, STREAM_GEOMETRY);
            let count = CHUNK.min(realizations - c * CHUNK);
            (0..count)
                .map(|_| {
                    let d = sample_distances(cfg, &mut rng);
                    if d.is_empty() {
                        Ok(0.0)
                    } else {
                        realization_aoi(cfg, &d, scheme)
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let samples: Vec<f64> = per_chunk.into_iter().flatten().collect();
    let ci = mean_ci(&samples)?;
    Ok(AoiEstimate {
        mean: ci.mean,
        ci_half_width: ci.half_width,
        replications: samples.len(),
        per_ue: Vec::new(),
    })
}
