//! Finite-blocklength link math and the special functions it needs.
//!
//! The block error rate uses the normal approximation
//!
//! ```text
//! ε(l, m, γ) = Q( (½·log2(1+γ) − l/m) / (log2(e)·sqrt(V/m)) )
//! ```
//!
//! where the dispersion term is `V = ½·(1 − 1/(1+γ²))` by default. The
//! textbook `(1+γ)²` denominator is available through [`DispersionForm`].

use std::f64::consts::{LN_2, LOG2_E};

use serde::{Deserialize, Serialize};

use crate::dynamic::DynamicConfig;
use crate::error::{ensure_positive, invalid, AoiError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Positive zero of Ei.
const EI_ROOT: f64 = 0.372_507_410_781_366_634_46;
/// Below this blocklength the normal approximation is loose.
pub const SHORT_BLOCK_LIMIT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionForm {
    /// `1 − 1/(1+γ²)`
    #[default]
    AsPrinted,
    /// `1 − 1/(1+γ)²`
    Squared,
}

/// One point-to-point link: received SNR, payload and blocklength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Linear received SNR.
    pub snr: f64,
    /// Payload in bits.
    pub info_bits: f64,
    /// Blocklength in channel uses.
    pub blocklength: f64,
    #[serde(default)]
    pub dispersion: DispersionForm,
}

impl LinkBudget {
    pub fn new(snr: f64, info_bits: f64, blocklength: f64) -> Result<Self> {
        let link = Self {
            snr,
            info_bits,
            blocklength,
            dispersion: DispersionForm::AsPrinted,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn with_dispersion(mut self, form: DispersionForm) -> Self {
        self.dispersion = form;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("snr", self.snr)?;
        if !(self.info_bits.is_finite() && self.info_bits >= 1.0) {
            return Err(invalid("info_bits", format!("must be >= 1, got {}", self.info_bits)));
        }
        if !(self.blocklength.is_finite() && self.blocklength >= 1.0) {
            return Err(invalid(
                "blocklength",
                format!("must be >= 1, got {}", self.blocklength),
            ));
        }
        Ok(())
    }

    pub fn coding_rate(&self) -> f64 {
        self.info_bits / self.blocklength
    }

    pub fn is_short_block(&self) -> bool {
        self.blocklength < SHORT_BLOCK_LIMIT
    }
}

/// Block error rate together with the approximation-regime flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockErrorRate {
    pub epsilon: f64,
    /// Blocklength below 100 channel uses, where the normal approximation is loose.
    pub short_block: bool,
}

/// AWGN capacity in bits per channel use.
pub fn capacity(snr: f64) -> f64 {
    0.5 * snr.ln_1p() * LOG2_E
}

/// Gaussian tail probability `P[Z > x]`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn block_error_rate(link: &LinkBudget) -> Result<BlockErrorRate> {
    link.validate()?;
    let g = link.snr;
    let shape = match link.dispersion {
        DispersionForm::AsPrinted => 1.0 - 1.0 / (1.0 + g * g),
        DispersionForm::Squared => 1.0 - 1.0 / ((1.0 + g) * (1.0 + g)),
    };
    let spread = LOG2_E * (shape / (2.0 * link.blocklength)).sqrt();
    let margin = capacity(g) - link.coding_rate();
    Ok(BlockErrorRate {
        epsilon: q_function(margin / spread),
        short_block: link.is_short_block(),
    })
}

/// Exponential integral `Ei(x) = −∫_{−x}^{∞} e^{−t}/t dt` (principal value for x > 0).
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(AoiError::EiSingularity);
    }
    if x.is_nan() {
        return Err(invalid("x", "NaN"));
    }
    if x < 0.0 {
        let z = -x;
        return Ok(-(scaled_e1(z) * (-z).exp()));
    }
    if (x - EI_ROOT).abs() < 0.15 {
        return Ok(ei_near_root(x));
    }
    if x <= 40.0 {
        return Ok(ei_series(x));
    }
    Ok(ei_asymptotic(x))
}

/// `e^z · E1(z)` for `z > 0`; stays finite where `E1` alone underflows.
pub(crate) fn scaled_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z <= 1.0 {
        // E1(z) = −γ − ln z − Σ (−z)^k / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        return (-EULER_GAMMA - z.ln() - sum) * z.exp();
    }
    // Modified Lentz evaluation of the continued fraction for e^z E1(z).
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn ei_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut k = 1.0;
    loop {
        term *= x / k;
        let add = term / k;
        sum += add;
        if add < 1e-17 * sum && k > x {
            break;
        }
        k += 1.0;
    }
    EULER_GAMMA + x.ln() + sum
}

fn ei_asymptotic(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 1.0;
    while k < x {
        let next = term * k / x;
        if next < 1e-17 {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    x.exp() / x * sum
}

/// Taylor expansion of `∫_{x0}^{x} e^t/t dt` around the zero of Ei, which
/// keeps full relative precision where the series would cancel.
fn ei_near_root(x: f64) -> f64 {
    let h = x - EI_ROOT;
    let e0 = EI_ROOT.exp();
    let mut coeff = e0 / EI_ROOT;
    let mut factorial = 1.0;
    let mut hp = h;
    let mut sum = coeff * hp;
    for k in 1..80 {
        factorial *= k as f64;
        coeff = (e0 / factorial - coeff) / EI_ROOT;
        hp *= h;
        let add = coeff * hp / (k + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Harmonic-mean capacity `C_Λ` over the annulus, `1/C_Λ = E[1/C_n]`, with the
/// high-SNR capacity `C(d) = C0 − (η/2)·log2 d` and UEs uniform in area.
///
/// The Ei closed form is evaluated through `e^z E1(z)` so that the
/// `2^{4 C0/η}` prefactor never overflows.
pub fn harmonic_capacity(cfg: &DynamicConfig) -> Result<f64> {
    cfg.validate()?;
    let (d1, d2, eta) = (cfg.inner_radius, cfg.outer_radius, cfg.pathloss_exp);
    let c_outer = cfg.approx_capacity_at(d2);
    if c_outer <= 0.0 {
        return Err(AoiError::HighSnrInvalid { capacity: c_outer });
    }
    let c_inner = cfg.approx_capacity_at(d1);
    let a = 4.0 * LN_2 / eta;
    // 2^{4C0/η} e^{−a C_D} = D², so each Ei term becomes D² · e^{z} E1(z).
    let bracket = d2 * d2 * scaled_e1(a * c_outer) - d1 * d1 * scaled_e1(a * c_inner);
    let inv = 4.0 * LN_2 / ((d2 * d2 - d1 * d1) * eta) * bracket;
    Ok(1.0 / inv)
}
