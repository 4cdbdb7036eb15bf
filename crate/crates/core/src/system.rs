//! Scenario description shared by the analytic and simulation layers.
//!
//! Time is measured in channel uses throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, AoiError, Result};
use crate::fbl::{block_error_rate, BlockErrorRate, DispersionForm, LinkBudget};

/// Transmission scheme plus packet-management strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Broadcast, non-preemptive.
    #[serde(rename = "BRNP")]
    Brnp,
    /// Broadcast, preemption in serving.
    #[serde(rename = "BRPS")]
    Brps,
    /// Unicast round robin, non-preemptive.
    #[serde(rename = "DNP")]
    Dnp,
    /// Unicast round robin, preemption in buffer.
    #[serde(rename = "DPB")]
    Dpb,
    /// Unicast round robin, preemption in serving.
    #[serde(rename = "DPS")]
    Dps,
    /// DNP in the zero-waiting limit (analytic only).
    #[serde(rename = "DNPZ")]
    DnpZeroWait,
    /// DPB in the zero-waiting limit (analytic only).
    #[serde(rename = "DPBZ")]
    DpbZeroWait,
}

impl StrategyKind {
    pub const SIMULATED: [StrategyKind; 5] = [
        StrategyKind::Brnp,
        StrategyKind::Brps,
        StrategyKind::Dnp,
        StrategyKind::Dpb,
        StrategyKind::Dps,
    ];

    pub fn is_broadcast(self) -> bool {
        matches!(self, StrategyKind::Brnp | StrategyKind::Brps)
    }

    pub fn is_zero_wait(self) -> bool {
        matches!(self, StrategyKind::DnpZeroWait | StrategyKind::DpbZeroWait)
    }

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Brnp => "BRNP",
            StrategyKind::Brps => "BRPS",
            StrategyKind::Dnp => "DNP",
            StrategyKind::Dpb => "DPB",
            StrategyKind::Dps => "DPS",
            StrategyKind::DnpZeroWait => "DNPZ",
            StrategyKind::DpbZeroWait => "DPBZ",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = AoiError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "BRNP" => StrategyKind::Brnp,
            "BRPS" => StrategyKind::Brps,
            "DNP" => StrategyKind::Dnp,
            "DPB" => StrategyKind::Dpb,
            "DPS" => StrategyKind::Dps,
            "DNPZ" => StrategyKind::DnpZeroWait,
            "DPBZ" => StrategyKind::DpbZeroWait,
            other => return Err(invalid("strategy", format!("unknown strategy `{other}`"))),
        })
    }
}

/// One base station serving `N` UEs.
///
/// Per-UE vectors are indexed from 0; UE `k` is served `k`-th in the round
/// robin cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Poisson status-update generation rate λ.
    pub gen_rate: f64,
    /// Per-UE payload `L_n` in bits (unicast).
    pub per_ue_bits: Vec<f64>,
    /// Per-UE blocklength `M_n` (unicast).
    pub per_ue_blocklength: Vec<f64>,
    /// Per-UE linear SNR `γ_n`.
    pub per_ue_snr: Vec<f64>,
    /// Pre-processing time `M_L` added to every unicast transmission.
    pub overhead: f64,
    /// Joint payload `L` of the broadcast packet.
    pub broadcast_bits: f64,
    /// Blocklength `M` of the broadcast packet.
    pub broadcast_blocklength: f64,
    #[serde(default)]
    pub dispersion: DispersionForm,
}

impl SystemConfig {
    /// All UEs share payload, coding rate and SNR. The broadcast packet
    /// carries `alpha · N · bits` at the same coding rate.
    pub fn homogeneous(
        n_ues: usize,
        gen_rate: f64,
        bits: f64,
        coding_rate: f64,
        snr: f64,
        overhead: f64,
        alpha: f64,
    ) -> Result<Self> {
        ensure_positive("coding_rate", coding_rate)?;
        let blocklength = bits / coding_rate;
        let joint = alpha * n_ues as f64 * bits;
        let cfg = Self {
            gen_rate,
            per_ue_bits: vec![bits; n_ues],
            per_ue_blocklength: vec![blocklength; n_ues],
            per_ue_snr: vec![snr; n_ues],
            overhead,
            broadcast_bits: joint,
            broadcast_blocklength: joint / coding_rate,
            dispersion: DispersionForm::AsPrinted,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_ues(&self) -> usize {
        self.per_ue_bits.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.per_ue_bits.len();
        if n == 0 {
            return Err(invalid("n_ues", "need at least one UE"));
        }
        if self.per_ue_blocklength.len() != n || self.per_ue_snr.len() != n {
            return Err(invalid(
                "per_ue",
                format!(
                    "list lengths differ: bits {}, blocklength {}, snr {}",
                    n,
                    self.per_ue_blocklength.len(),
                    self.per_ue_snr.len()
                ),
            ));
        }
        ensure_positive("gen_rate", self.gen_rate)?;
        for (name, list) in [
            ("per_ue_bits", &self.per_ue_bits),
            ("per_ue_blocklength", &self.per_ue_blocklength),
            ("per_ue_snr", &self.per_ue_snr),
        ] {
            for &v in list.iter() {
                ensure_positive(name, v)?;
            }
        }
        if !(self.overhead.is_finite() && self.overhead >= 0.0) {
            return Err(invalid("overhead", format!("must be >= 0, got {}", self.overhead)));
        }
        ensure_positive("broadcast_bits", self.broadcast_bits)?;
        ensure_positive("broadcast_blocklength", self.broadcast_blocklength)?;
        let alpha = self.information_ratio();
        if !(alpha > 0.0 && alpha <= 1.0 + 1e-12) {
            return Err(invalid("alpha", format!("information ratio must lie in (0, 1], got {alpha}")));
        }
        Ok(())
    }

    /// Serving times `M_k' = M_k + M_L`.
    pub fn serving_times(&self) -> Vec<f64> {
        self.per_ue_blocklength.iter().map(|m| m + self.overhead).collect()
    }

    /// Unicast cycle length `M_T`.
    pub fn cycle_length(&self) -> f64 {
        self.serving_times().iter().sum()
    }

    pub fn information_ratio(&self) -> f64 {
        self.broadcast_bits / self.per_ue_bits.iter().sum::<f64>()
    }

    /// `ρ_n = M_n / (M_L + M_n)`.
    pub fn tx_ratio(&self, ue: usize) -> f64 {
        let m = self.per_ue_blocklength[ue];
        m / (m + self.overhead)
    }

    pub fn unicast_link(&self, ue: usize) -> Result<LinkBudget> {
        self.check_ue(ue)?;
        Ok(LinkBudget::new(self.per_ue_snr[ue], self.per_ue_bits[ue], self.per_ue_blocklength[ue])?
            .with_dispersion(self.dispersion))
    }

    /// The broadcast packet as seen by UE `ue`.
    pub fn broadcast_link(&self, ue: usize) -> Result<LinkBudget> {
        self.check_ue(ue)?;
        Ok(
            LinkBudget::new(self.per_ue_snr[ue], self.broadcast_bits, self.broadcast_blocklength)?
                .with_dispersion(self.dispersion),
        )
    }

    pub fn unicast_error_rates(&self) -> Result<Vec<BlockErrorRate>> {
        (0..self.n_ues())
            .map(|k| block_error_rate(&self.unicast_link(k)?))
            .collect()
    }

    pub fn broadcast_error_rates(&self) -> Result<Vec<BlockErrorRate>> {
        (0..self.n_ues())
            .map(|k| block_error_rate(&self.broadcast_link(k)?))
            .collect()
    }

    /// Error rates seen by each UE under `strategy`.
    pub fn error_rates(&self, strategy: StrategyKind) -> Result<Vec<BlockErrorRate>> {
        if strategy.is_broadcast() {
            self.broadcast_error_rates()
        } else {
            self.unicast_error_rates()
        }
    }

    pub(crate) fn check_ue(&self, ue: usize) -> Result<()> {
        if ue < self.n_ues() {
            Ok(())
        } else {
            Err(AoiError::UeOutOfRange {
                index: ue,
                n_ues: self.n_ues(),
            })
        }
    }
}
