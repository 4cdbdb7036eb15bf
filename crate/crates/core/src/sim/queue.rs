use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

/// Tie-break class for events at the same instant; lower fires first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum EventClass {
    Completion = 0,
    Arrival = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EventKind {
    Arrival,
    /// Carries the service epoch it was scheduled in; stale epochs are dropped.
    Completion { epoch: u64 },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Event {
    pub time: f64,
    pub kind: EventKind,
    class: EventClass,
    seq: u64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.class.cmp(&other.class))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Min-ordered pending events: by time, then completion before arrival, then
/// insertion order.
#[derive(Debug, Default)]
pub(crate) struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: f64, kind: EventKind) {
        let class = match kind {
            EventKind::Arrival => EventClass::Arrival,
            EventKind::Completion { .. } => EventClass::Completion,
        };
        self.heap.push(Reverse(Event {
            time,
            kind,
            class,
            seq: self.seq,
        }));
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }
}
