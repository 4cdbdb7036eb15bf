//! Discrete-event simulation of the base station and its UEs.
//!
//! Time is continuous and measured in channel uses. The buffer holds only the
//! newest update. Strategy semantics:
//!
//! * BRNP: one transmission of length `M` reaches every UE; arrivals during it
//!   overwrite the buffer.
//! * BRPS: an arrival abandons the running broadcast and starts the new one.
//! * DNP: each update is sent to UE 0, 1, ..., N−1 in turn; arrivals wait.
//! * DPB: arrivals wait only until the running transmission ends; the new
//!   update then takes over at the next UE and makes a full round of `N`.
//! * DPS: an arrival abandons the running transmission and restarts at the
//!   same UE, then makes a full round of `N`.
//!
//! The round-robin position persists across idle periods, so DPB and DPS
//! resume at the UE after the last one served. Every completed transmission
//! to UE `k` fails independently with probability `ε_k`.

mod engine;
mod queue;
mod trace;

use rand_distr::Exp;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::RenewalDiagnostics;
use crate::error::{ensure_positive, invalid, AoiError, Result};
use crate::seeding::{stream_rng, STREAM_ARRIVALS, STREAM_CHANNEL};
pub use crate::stats::AoiEstimate;
use crate::stats::{mean_ci, Interval};
use crate::system::{StrategyKind, SystemConfig};
use engine::{Arrivals, Engine, Params, ReplicationOutput};
pub use trace::{EventTrace, TraceEvent, TraceKind};

pub const DEFAULT_HORIZON: f64 = 2.0e6;
pub const DEFAULT_WARMUP: f64 = 0.1;
pub const DEFAULT_REPLICATIONS: usize = 20;
/// Post-warmup receptions needed per replication for renewal statistics.
pub const MIN_RENEWAL_SAMPLES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRun {
    pub cfg: SystemConfig,
    pub strategy: StrategyKind,
    pub horizon: f64,
    pub warmup_fraction: f64,
    pub replications: usize,
    pub seed: u64,
    /// Per-UE block error rates to use instead of the link model.
    pub epsilon_override: Option<Vec<f64>>,
    /// Deterministic generation instants replacing the Poisson process.
    pub arrival_times: Option<Vec<f64>>,
}

impl SimRun {
    pub fn new(cfg: SystemConfig, strategy: StrategyKind) -> Self {
        Self {
            cfg,
            strategy,
            horizon: DEFAULT_HORIZON,
            warmup_fraction: DEFAULT_WARMUP,
            replications: DEFAULT_REPLICATIONS,
            seed: 0,
            epsilon_override: None,
            arrival_times: None,
        }
    }

    pub fn horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn warmup_fraction(mut self, fraction: f64) -> Self {
        self.warmup_fraction = fraction;
        self
    }

    pub fn replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Uses `epsilon` for every UE.
    pub fn uniform_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon_override = Some(vec![epsilon; self.cfg.n_ues()]);
        self
    }

    pub fn arrival_times(mut self, times: Vec<f64>) -> Self {
        self.arrival_times = Some(times);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.strategy.is_zero_wait() {
            return Err(AoiError::UnsupportedStrategy(self.strategy));
        }
        ensure_positive("horizon", self.horizon)?;
        if !(0.0..=0.5).contains(&self.warmup_fraction) {
            return Err(invalid(
                "warmup_fraction",
                format!("must lie in [0, 0.5], got {}", self.warmup_fraction),
            ));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "need at least one"));
        }
        if let Some(eps) = &self.epsilon_override {
            if eps.len() != self.cfg.n_ues() || eps.iter().any(|e| !(0.0..1.0).contains(e)) {
                return Err(invalid("epsilon_override", "need one value in [0, 1) per UE"));
            }
        }
        if let Some(times) = &self.arrival_times {
            if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(invalid("arrival_times", "must be finite, non-negative and sorted"));
            }
        }
        let cycle = self.cycle();
        let window = self.horizon * (1.0 - self.warmup_fraction);
        if window < cycle {
            return Err(AoiError::InsufficientHorizon { window, cycle });
        }
        Ok(())
    }

    /// Length of one full service of an update.
    fn cycle(&self) -> f64 {
        if self.strategy.is_broadcast() {
            self.cfg.broadcast_blocklength
        } else {
            self.cfg.cycle_length()
        }
    }

    fn epsilons(&self) -> Result<Vec<f64>> {
        match &self.epsilon_override {
            Some(e) => Ok(e.clone()),
            None => Ok(self.cfg.error_rates(self.strategy)?.iter().map(|e| e.epsilon).collect()),
        }
    }

    fn replicate(&self, rep: usize, epsilon: &[f64], record_trace: bool) -> (ReplicationOutput, Option<Vec<TraceEvent>>) {
        let serving = self.cfg.serving_times();
        let params = Params {
            strategy: self.strategy,
            serving: &serving,
            broadcast_len: self.cfg.broadcast_blocklength,
            epsilon,
            horizon: self.horizon,
            warmup: self.warmup_fraction * self.horizon,
        };
        let arrivals = match &self.arrival_times {
            Some(times) => Arrivals::Scripted {
                times: times.clone(),
                next: 0,
            },
            None => Arrivals::Poisson {
                dist: Exp::new(self.cfg.gen_rate).expect("validated rate"),
                rng: stream_rng(self.seed, rep as u64, STREAM_ARRIVALS),
            },
        };
        let channel = stream_rng(self.seed, rep as u64, STREAM_CHANNEL);
        Engine::new(params, arrivals, channel, record_trace).run()
    }

    fn run_all(&self) -> Result<Vec<ReplicationOutput>> {
        self.validate()?;
        let eps = self.epsilons()?;
        Ok((0..self.replications)
            .into_par_iter()
            .map(|rep| self.replicate(rep, &eps, false).0)
            .collect())
    }
}

/// Time-average AoI per UE and system-wide, with 95% intervals across
/// replications.
pub fn simulate(run: &SimRun) -> Result<AoiEstimate> {
    let reps = run.run_all()?;
    let n = run.cfg.n_ues();
    let per_ue = (0..n)
        .map(|k| mean_ci(&reps.iter().map(|r| r.aoi[k]).collect::<Vec<_>>()))
        .collect::<Result<Vec<Interval>>>()?;
    let system: Vec<f64> = reps.iter().map(|r| r.aoi.iter().sum::<f64>() / n as f64).collect();
    let ci = mean_ci(&system)?;
    Ok(AoiEstimate {
        mean: ci.mean,
        ci_half_width: ci.half_width,
        replications: reps.len(),
        per_ue,
    })
}

/// Measured renewal statistics of one UE: replication means of the
/// per-reception averages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalMeasurement {
    pub mean: RenewalDiagnostics,
    /// 95% half-widths of each field.
    pub half_width: RenewalDiagnostics,
    /// Time-average AoI of the same UE.
    pub aoi: Interval,
    /// Post-warmup receptions, summed over replications.
    pub receptions: usize,
}

impl RenewalMeasurement {
    pub fn interval(&self, pick: fn(&RenewalDiagnostics) -> f64) -> Interval {
        Interval {
            mean: pick(&self.mean),
            half_width: pick(&self.half_width),
        }
    }
}

pub fn measure_renewals(run: &SimRun, ue: usize) -> Result<RenewalMeasurement> {
    run.cfg.check_ue(ue)?;
    let reps = run.run_all()?;
    let mut fields: [Vec<f64>; 6] = Default::default();
    let mut receptions = 0;
    for (i, r) in reps.iter().enumerate() {
        let s = r.renewals[ue];
        if s.count < MIN_RENEWAL_SAMPLES {
            return Err(AoiError::InsufficientRenewalSamples {
                found: s.count,
                needed: MIN_RENEWAL_SAMPLES,
                replication: i,
            });
        }
        receptions += s.count;
        let c = s.count as f64;
        for (slot, v) in fields.iter_mut().zip([s.t, s.w, s.s, s.y, s.y2, s.h]) {
            slot.push(v / c);
        }
    }
    let cis = fields.iter().map(|f| mean_ci(f)).collect::<Result<Vec<_>>>()?;
    let build = |g: fn(&Interval) -> f64| RenewalDiagnostics {
        mean_t: g(&cis[0]),
        mean_w: g(&cis[1]),
        mean_s: g(&cis[2]),
        mean_y: g(&cis[3]),
        mean_y2: g(&cis[4]),
        mean_attempts: g(&cis[5]),
    };
    let aoi = mean_ci(&reps.iter().map(|r| r.aoi[ue]).collect::<Vec<_>>())?;
    Ok(RenewalMeasurement {
        mean: build(|i| i.mean),
        half_width: build(|i| i.half_width),
        aoi,
        receptions,
    })
}

/// Full event trace of replication `rep`.
pub fn trace_replication(run: &SimRun, rep: usize) -> Result<EventTrace> {
    run.validate()?;
    let eps = run.epsilons()?;
    let (_, events) = run.replicate(rep, &eps, true);
    Ok(EventTrace {
        events: events.unwrap_or_default(),
    })
}
