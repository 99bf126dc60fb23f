//! Signal ordering strategies and the first-fit driver.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::multischedule::{Multischedule, Placement, Problem};

/// Order in which signals are handed to the first-fit placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderingStrategy {
    /// Input order.
    FirstFit,
    /// Ascending period.
    Period,
    /// Ascending window width.
    Window,
    /// Descending length.
    Length,
    /// Stable sorts by descending length, ascending window, ascending period,
    /// then ascending node. The last sort dominates.
    Combined,
}

impl OrderingStrategy {
    pub const ALL: [OrderingStrategy; 5] = [
        OrderingStrategy::FirstFit,
        OrderingStrategy::Period,
        OrderingStrategy::Window,
        OrderingStrategy::Length,
        OrderingStrategy::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingStrategy::FirstFit => "ff",
            OrderingStrategy::Period => "ffp",
            OrderingStrategy::Window => "ffw",
            OrderingStrategy::Length => "ffl",
            OrderingStrategy::Combined => "ffc",
        }
    }
}

impl fmt::Display for OrderingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrderingStrategy::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

/// Returns signal indices in placement order.
pub fn sort_signals(problem: &Problem<'_>, strategy: OrderingStrategy) -> Vec<usize> {
    let signals = &problem.instance.signals;
    let windows = &problem.windows;
    let mut order: Vec<usize> = (0..signals.len()).collect();
    let by_length = |o: &mut Vec<usize>| o.sort_by_key(|&s| std::cmp::Reverse(signals[s].length_bits));
    let by_window = |o: &mut Vec<usize>| o.sort_by_key(|&s| windows[s].width());
    let by_period = |o: &mut Vec<usize>| o.sort_by_key(|&s| signals[s].period_us);
    let by_node = |o: &mut Vec<usize>| o.sort_by_key(|&s| signals[s].node);
    match strategy {
        OrderingStrategy::FirstFit => {}
        OrderingStrategy::Period => by_period(&mut order),
        OrderingStrategy::Window => by_window(&mut order),
        OrderingStrategy::Length => by_length(&mut order),
        OrderingStrategy::Combined => {
            by_length(&mut order);
            by_window(&mut order);
            by_period(&mut order);
            by_node(&mut order);
        }
    }
    order
}

#[derive(Debug, Clone)]
pub struct ScheduleResult {
    pub multischedule: Multischedule,
    pub strategy: OrderingStrategy,
    pub slot_count: usize,
    /// Time spent in the algorithm proper: exclusion matrices, ordering and
    /// placement.
    pub wall_time: Duration,
    /// Placement of each signal, by input index.
    pub placements: Vec<Placement>,
}

/// Runs the first-fit heuristic with the given ordering.
pub fn schedule(instance: &Instance, strategy: OrderingStrategy) -> Result<ScheduleResult> {
    let started = Instant::now();
    let problem = Problem::new(instance)?;
    let (multischedule, _) = schedule_problem(&problem, strategy);
    let wall_time = started.elapsed();
    let placements = multischedule
        .placements()
        .iter()
        .map(|p| p.expect("every signal is placed"))
        .collect();
    Ok(ScheduleResult {
        slot_count: multischedule.slot_count(),
        multischedule,
        strategy,
        wall_time,
        placements,
    })
}

/// First-fit on a prepared problem. Also returns the placement order.
pub fn schedule_problem(problem: &Problem<'_>, strategy: OrderingStrategy) -> (Multischedule, Vec<usize>) {
    let order = sort_signals(problem, strategy);
    let mut ms = Multischedule::new(&problem.instance.config, problem.instance.signals.len());
    for &signal in &order {
        ms.place_signal_to_schedule(problem, signal);
    }
    (ms, order)
}

impl ScheduleResult {
    pub fn to_document(&self, problem: &Problem<'_>) -> crate::document::ScheduleDocument {
        let mut doc = self.multischedule.to_document(problem);
        doc.strategy = Some(self.strategy.to_string());
        doc
    }
}
