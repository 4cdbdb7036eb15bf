//! Single-replication event loop.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::queue::{EventKind, EventQueue};
use super::trace::{TraceEvent, TraceKind};
use crate::system::StrategyKind;

#[derive(Debug, Clone, Copy)]
struct Update {
    id: u64,
    generated: f64,
}

#[derive(Debug, Clone, Copy)]
struct Service {
    update: Update,
    /// UE currently being transmitted to; unused for broadcast.
    ue: usize,
    /// Transmissions of this update still owed, including the running one.
    remaining: usize,
    /// Start of the update's first transmission.
    started: f64,
}

pub(crate) enum Arrivals {
    Poisson { dist: Exp<f64>, rng: ChaCha8Rng },
    Scripted { times: Vec<f64>, next: usize },
}

impl Arrivals {
    fn next_after(&mut self, now: f64) -> Option<f64> {
        match self {
            Arrivals::Poisson { dist, rng } => Some(now + dist.sample(rng)),
            Arrivals::Scripted { times, next } => {
                let t = times.get(*next).copied();
                *next += 1;
                t
            }
        }
    }
}

pub(crate) struct Params<'a> {
    pub strategy: StrategyKind,
    /// `M_k'` per UE.
    pub serving: &'a [f64],
    pub broadcast_len: f64,
    /// Block error rate seen by each UE under this strategy.
    pub epsilon: &'a [f64],
    pub horizon: f64,
    pub warmup: f64,
}

/// Sums over post-warmup receptions of one UE.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RenewalSums {
    pub count: usize,
    pub y: f64,
    pub y2: f64,
    pub t: f64,
    pub w: f64,
    pub s: f64,
    pub h: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ReplicationOutput {
    /// Time-average AoI per UE over the post-warmup window.
    pub aoi: Vec<f64>,
    pub renewals: Vec<RenewalSums>,
}

struct UeState {
    /// Generation time of the freshest received update.
    freshest: f64,
    /// Time up to which the age area has been accumulated.
    accounted_to: f64,
    area: f64,
    last_reception: Option<f64>,
    attempts: usize,
    sums: RenewalSums,
}

pub(crate) struct Engine<'a> {
    p: Params<'a>,
    now: f64,
    queue: EventQueue,
    arrivals: Arrivals,
    channel: ChaCha8Rng,
    buffer: Option<Update>,
    service: Option<Service>,
    /// Next UE in round-robin order; survives idle periods.
    pointer: usize,
    epoch: u64,
    next_id: u64,
    ues: Vec<UeState>,
    trace: Option<Vec<TraceEvent>>,
}

impl<'a> Engine<'a> {
    pub fn new(p: Params<'a>, arrivals: Arrivals, channel: ChaCha8Rng, record_trace: bool) -> Self {
        let n = p.serving.len();
        let ues = (0..n)
            .map(|_| UeState {
                freshest: 0.0,
                accounted_to: 0.0,
                area: 0.0,
                last_reception: None,
                attempts: 0,
                sums: RenewalSums::default(),
            })
            .collect();
        Self {
            p,
            now: 0.0,
            queue: EventQueue::default(),
            arrivals,
            channel,
            buffer: None,
            service: None,
            pointer: 0,
            epoch: 0,
            next_id: 0,
            ues,
            trace: record_trace.then(Vec::new),
        }
    }

    pub fn run(mut self) -> (ReplicationOutput, Option<Vec<TraceEvent>>) {
        if let Some(t) = self.arrivals.next_after(0.0) {
            self.queue.push(t, EventKind::Arrival);
        }
        while let Some(t) = self.queue.peek_time() {
            if t > self.p.horizon {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            self.now = ev.time;
            match ev.kind {
                EventKind::Arrival => self.on_arrival(),
                EventKind::Completion { epoch } if epoch == self.epoch => self.on_completion(),
                EventKind::Completion { .. } => {}
            }
        }
        let (horizon, warmup) = (self.p.horizon, self.p.warmup);
        for ue in &mut self.ues {
            ue.area += window_area(ue.freshest, ue.accounted_to, horizon, warmup, horizon);
        }
        let window = horizon - warmup;
        let out = ReplicationOutput {
            aoi: self.ues.iter().map(|u| u.area / window).collect(),
            renewals: self.ues.iter().map(|u| u.sums).collect(),
        };
        (out, self.trace)
    }

    fn n(&self) -> usize {
        self.p.serving.len()
    }

    fn log(&mut self, kind: TraceKind, ue: Option<usize>, update_id: Option<u64>) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent {
                time: self.now,
                kind,
                ue,
                update_id,
            });
        }
    }

    fn on_arrival(&mut self) {
        let update = Update {
            id: self.next_id,
            generated: self.now,
        };
        self.next_id += 1;
        self.log(TraceKind::Generate, None, Some(update.id));
        if let Some(t) = self.arrivals.next_after(self.now) {
            self.queue.push(t, EventKind::Arrival);
        }

        let Some(current) = self.service else {
            let first = match self.p.strategy {
                StrategyKind::Dnp => 0,
                _ => self.pointer,
            };
            self.begin(update, first);
            return;
        };
        match self.p.strategy {
            StrategyKind::Brnp | StrategyKind::Dnp | StrategyKind::Dpb => self.buffer = Some(update),
            StrategyKind::Brps | StrategyKind::Dps => {
                let ue = (!self.p.strategy.is_broadcast()).then_some(current.ue);
                self.log(TraceKind::Preempt, ue, Some(current.update.id));
                self.epoch += 1;
                self.begin(update, current.ue);
            }
            StrategyKind::DnpZeroWait | StrategyKind::DpbZeroWait => unreachable!("rejected before simulation"),
        }
    }

    /// Starts serving `update` with its first transmission to `ue`.
    fn begin(&mut self, update: Update, ue: usize) {
        let remaining = if self.p.strategy.is_broadcast() { 1 } else { self.n() };
        self.service = Some(Service {
            update,
            ue,
            remaining,
            started: self.now,
        });
        self.transmit();
    }

    fn transmit(&mut self) {
        let s = self.service.expect("transmit without service");
        let (duration, ue) = if self.p.strategy.is_broadcast() {
            (self.p.broadcast_len, None)
        } else {
            (self.p.serving[s.ue], Some(s.ue))
        };
        self.log(TraceKind::ServeStart, ue, Some(s.update.id));
        self.queue.push(self.now + duration, EventKind::Completion { epoch: self.epoch });
    }

    fn on_completion(&mut self) {
        let mut s = self.service.expect("completion without service");
        if self.p.strategy.is_broadcast() {
            for k in 0..self.n() {
                self.attempt(k, &s);
            }
            self.service = None;
            match self.buffer.take() {
                Some(next) => self.begin(next, 0),
                None => self.log(TraceKind::Idle, None, None),
            }
            return;
        }

        self.attempt(s.ue, &s);
        let next_ue = (s.ue + 1) % self.n();
        self.pointer = next_ue;
        s.remaining -= 1;
        match self.p.strategy {
            StrategyKind::Dnp => {
                if s.remaining > 0 {
                    self.continue_with(s, next_ue);
                } else if let Some(next) = self.buffer.take() {
                    self.begin(next, 0);
                } else {
                    self.go_idle();
                }
            }
            StrategyKind::Dpb => {
                if let Some(next) = self.buffer.take() {
                    self.begin(next, next_ue);
                } else if s.remaining > 0 {
                    self.continue_with(s, next_ue);
                } else {
                    self.go_idle();
                }
            }
            StrategyKind::Dps => {
                if s.remaining > 0 {
                    self.continue_with(s, next_ue);
                } else {
                    self.go_idle();
                }
            }
            _ => unreachable!("broadcast handled above"),
        }
    }

    fn continue_with(&mut self, mut s: Service, ue: usize) {
        s.ue = ue;
        self.service = Some(s);
        self.transmit();
    }

    fn go_idle(&mut self) {
        self.service = None;
        self.log(TraceKind::Idle, None, None);
    }

    /// One completed transmission of `s.update` to UE `k`.
    fn attempt(&mut self, k: usize, s: &Service) {
        let success = self.channel.random::<f64>() >= self.p.epsilon[k];
        self.log(TraceKind::ServeEnd { success }, Some(k), Some(s.update.id));
        let (now, horizon, warmup) = (self.now, self.p.horizon, self.p.warmup);
        let ue = &mut self.ues[k];
        ue.attempts += 1;
        if !success {
            return;
        }
        debug_assert!(s.update.generated >= ue.freshest);
        ue.area += window_area(ue.freshest, ue.accounted_to, now, warmup, horizon);
        ue.freshest = s.update.generated;
        ue.accounted_to = now;
        if let (Some(prev), true) = (ue.last_reception, now >= warmup) {
            let y = now - prev;
            let sums = &mut ue.sums;
            sums.count += 1;
            sums.y += y;
            sums.y2 += y * y;
            sums.t += now - s.update.generated;
            sums.w += s.started - s.update.generated;
            sums.s += now - s.started;
            sums.h += ue.attempts as f64;
        }
        ue.last_reception = Some(now);
        ue.attempts = 0;
    }
}

/// `∫ (t − freshest) dt` over `[from, to] ∩ [warmup, horizon]`.
fn window_area(freshest: f64, from: f64, to: f64, warmup: f64, horizon: f64) -> f64 {
    let a = from.max(warmup);
    let b = to.min(horizon);
    if b <= a {
        return 0.0;
    }
    (b - a) * (0.5 * (a + b) - freshest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_area_clips() {
        assert_eq!(window_area(0.0, 0.0, 10.0, 0.0, 100.0), 50.0);
        assert_eq!(window_area(0.0, 0.0, 10.0, 5.0, 100.0), 37.5);
        assert_eq!(window_area(0.0, 0.0, 10.0, 20.0, 100.0), 0.0);
        assert_eq!(window_area(2.0, 4.0, 10.0, 0.0, 8.0), 4.0 * 4.0);
    }
}
