//! The shared schedule of all variants and its placement primitives.
//!
//! A multischedule is a grid of multiframes indexed by (slot, cycle). Signals
//! that never appear in the same variant may overlap inside a multiframe, and
//! nodes that never appear in the same variant may share a slot. Every signal
//! has exactly one placement, so it sits at the same position in each native
//! schedule that uses it.

mod freebits;

pub use freebits::FreeBits;

use crate::document::{PlacementRecord, ScheduleDocument, SlotRecord};
use crate::error::Result;
use crate::exclusion::ExclusionMatrices;
use crate::model::{job_cycles, round_time_constraints, CycleWindow, FlexRayConfig, Instance};

/// An instance with its precomputed windows and exclusion matrices.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub instance: &'a Instance,
    pub windows: Vec<CycleWindow>,
    pub mems: ExclusionMatrices,
}

impl<'a> Problem<'a> {
    pub fn new(instance: &'a Instance) -> Result<Self> {
        let windows = instance
            .signals
            .iter()
            .map(|s| round_time_constraints(s, &instance.config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem {
            instance,
            windows,
            mems: ExclusionMatrices::compute(instance),
        })
    }

    #[inline]
    fn length(&self, signal: usize) -> u32 {
        self.instance.signals[signal].length_bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameEntry {
    pub signal: usize,
    pub offset_bits: u32,
}

/// One (cycle, slot) cell. Entries may overlap when their signals are
/// mutually exclusive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Multiframe {
    pub entries: Vec<FrameEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub index: usize,
    /// nmem indices of the nodes transmitting in this slot, pairwise
    /// non-conflicting.
    pub nodes: Vec<usize>,
    /// One multiframe per cycle of the hyperperiod.
    pub frames: Vec<Multiframe>,
}

/// Position of a signal's first job. Later jobs keep slot and offset and
/// repeat every period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Placement {
    pub slot: usize,
    pub first_cycle: u32,
    pub offset_bits: u32,
}

/// Where [`Multischedule::find_position_for_signal`] resumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchCursor {
    /// Slot 0, release cycle, offset 0.
    Start,
    /// Strictly after a previously returned candidate.
    After(Placement),
}

/// Smallest offset `>= from` where `signal` fits in `frame` without touching
/// any conflicting resident.
pub fn find_suitable_offset(frame: &Multiframe, signal: usize, problem: &Problem<'_>, from: u32) -> Option<u32> {
    let mut free = FreeBits::new(problem.instance.config.payload_bits);
    for entry in &frame.entries {
        if problem.mems.signals_conflict_at(entry.signal, signal) {
            free.mark(entry.offset_bits, entry.offset_bits + problem.length(entry.signal));
        }
    }
    free.first_free_run(problem.length(signal), from)
}

/// Whether `[offset, offset + C)` is clear of conflicting residents.
fn range_is_free(frame: &Multiframe, signal: usize, offset: u32, problem: &Problem<'_>) -> bool {
    let end = offset + problem.length(signal);
    frame.entries.iter().all(|e| {
        !problem.mems.signals_conflict_at(e.signal, signal)
            || e.offset_bits >= end
            || e.offset_bits + problem.length(e.signal) <= offset
    })
}

#[derive(Debug, Clone)]
pub struct Multischedule {
    config: FlexRayConfig,
    slots: Vec<Slot>,
    placements: Vec<Option<Placement>>,
}

impl Multischedule {
    pub fn new(config: &FlexRayConfig, signal_count: usize) -> Self {
        Multischedule {
            config: config.clone(),
            slots: Vec::new(),
            placements: vec![None; signal_count],
        }
    }

    pub fn config(&self) -> &FlexRayConfig {
        &self.config
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn placement(&self, signal: usize) -> Option<Placement> {
        self.placements[signal]
    }

    pub fn placements(&self) -> &[Option<Placement>] {
        &self.placements
    }

    /// Next candidate first-job position after `cursor`, in slot, cycle, then
    /// offset order. Slots holding a conflicting node are skipped whole.
    pub fn find_position_for_signal(
        &self,
        problem: &Problem<'_>,
        signal: usize,
        cursor: SearchCursor,
    ) -> Option<Placement> {
        let window = problem.windows[signal];
        let node = problem.mems.node_of_signal(signal);
        let (start_slot, start_cycle, start_offset) = match cursor {
            SearchCursor::Start => (0, window.release_cycle, 0),
            SearchCursor::After(p) => (p.slot, p.first_cycle, p.offset_bits + 1),
        };

        for slot in self.slots.iter().skip(start_slot) {
            if problem.mems.node_conflicts_with_any(node, &slot.nodes) {
                continue;
            }
            let resuming = slot.index == start_slot;
            let first = if resuming {
                start_cycle.max(window.release_cycle)
            } else {
                window.release_cycle
            };
            for cycle in first..=window.deadline_cycle {
                let from = if resuming && cycle == start_cycle {
                    start_offset
                } else {
                    0
                };
                let frame = &slot.frames[cycle as usize];
                if let Some(offset_bits) = find_suitable_offset(frame, signal, problem, from) {
                    return Some(Placement {
                        slot: slot.index,
                        first_cycle: cycle,
                        offset_bits,
                    });
                }
            }
        }
        None
    }

    /// Whether every job of `signal` fits at `candidate`.
    fn jobs_fit(&self, problem: &Problem<'_>, signal: usize, candidate: Placement) -> bool {
        let slot = &self.slots[candidate.slot];
        let node = problem.mems.node_of_signal(signal);
        if problem.mems.node_conflicts_with_any(node, &slot.nodes) {
            return false;
        }
        let period = problem.windows[signal].period_cycles;
        job_cycles(candidate.first_cycle, period, self.config.hyperperiod_cycles)
            .all(|cycle| range_is_free(&slot.frames[cycle as usize], signal, candidate.offset_bits, problem))
    }

    fn allocate_slot(&mut self) -> usize {
        let index = self.slots.len();
        self.slots.push(Slot {
            index,
            nodes: Vec::new(),
            frames: vec![Multiframe::default(); self.config.hyperperiod_cycles as usize],
        });
        index
    }

    fn commit(&mut self, problem: &Problem<'_>, signal: usize, placement: Placement) {
        debug_assert!(self.placements[signal].is_none(), "signal placed twice");
        let period = problem.windows[signal].period_cycles;
        let node = problem.mems.node_of_signal(signal);
        let slot = &mut self.slots[placement.slot];
        if !slot.nodes.contains(&node) {
            slot.nodes.push(node);
        }
        for cycle in job_cycles(placement.first_cycle, period, self.config.hyperperiod_cycles) {
            slot.frames[cycle as usize].entries.push(FrameEntry {
                signal,
                offset_bits: placement.offset_bits,
            });
        }
        self.placements[signal] = Some(placement);
    }

    /// Places `signal` at the first candidate whose every job fits, or at the
    /// start of a freshly allocated slot when no allocated slot admits it.
    pub fn place_signal_to_schedule(&mut self, problem: &Problem<'_>, signal: usize) -> Placement {
        let mut cursor = SearchCursor::Start;
        while let Some(candidate) = self.find_position_for_signal(problem, signal, cursor) {
            if self.jobs_fit(problem, signal, candidate) {
                self.commit(problem, signal, candidate);
                return candidate;
            }
            cursor = SearchCursor::After(candidate);
        }
        let slot = self.allocate_slot();
        let placement = Placement {
            slot,
            first_cycle: problem.windows[signal].release_cycle,
            offset_bits: 0,
        };
        self.commit(problem, signal, placement);
        placement
    }

    fn document(&self, problem: &Problem<'_>, keep: impl Fn(usize) -> bool) -> ScheduleDocument {
        let instance = problem.instance;
        let mut slots: Vec<SlotRecord> = self
            .slots
            .iter()
            .map(|s| SlotRecord {
                index: s.index,
                nodes: Vec::new(),
                placements: Vec::new(),
            })
            .collect();
        for (signal, placement) in self.placements.iter().enumerate() {
            let Some(p) = placement else { continue };
            if !keep(signal) {
                continue;
            }
            let period = problem.windows[signal].period_cycles;
            let record = &mut slots[p.slot];
            let node = instance.signals[signal].node;
            if !record.nodes.contains(&node) {
                record.nodes.push(node);
            }
            record.placements.push(PlacementRecord {
                signal: instance.signals[signal].id.clone(),
                first_cycle: p.first_cycle,
                offset_bits: p.offset_bits,
                cycles: Some(job_cycles(p.first_cycle, period, self.config.hyperperiod_cycles).collect()),
            });
        }
        for record in &mut slots {
            record.nodes.sort_unstable();
        }
        ScheduleDocument {
            config: self.config.clone(),
            strategy: None,
            variant: None,
            slots,
        }
    }

    /// The whole multischedule as a document. Placements within a slot are
    /// listed in signal input order.
    pub fn to_document(&self, problem: &Problem<'_>) -> ScheduleDocument {
        self.document(problem, |_| true)
    }

    /// The schedule of one variant: only its signals, at their shared
    /// positions. Slots it does not use are kept empty so indices line up.
    pub fn extract_native_schedule(&self, problem: &Problem<'_>, variant: usize) -> ScheduleDocument {
        let variants = &problem.instance.variants;
        let mut doc = self.document(problem, |s| variants.uses(s, variant));
        doc.variant = Some(variant);
        doc
    }
}
