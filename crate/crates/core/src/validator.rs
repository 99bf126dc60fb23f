//! Feasibility checks for schedule documents.
//!
//! Everything here is recomputed from the instance and the document alone:
//! time windows, co-occurrence of signals and nodes, and job cycles. Nothing
//! is shared with the placement code.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::document::ScheduleDocument;
use crate::error::{Error, Result};
use crate::model::{Instance, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// More than one node transmits in a slot of a native schedule.
    NodeExclusivity,
    /// Two signals of one variant share bits of a frame.
    BitOverlap,
    /// A signal extends past the frame payload.
    PayloadBounds,
    /// A signal is placed more than once, or its jobs are not exactly one per
    /// period.
    Periodicity,
    /// The first job lies outside the release/deadline window.
    TimeWindow,
    /// A signal used by a variant has no placement.
    MissingSignal,
    /// A slot of the multischedule hosts nodes that appear together in a
    /// variant, or a node it does not declare.
    SlotNodeConflict,
    /// Overlapping signals in the multischedule appear together in a variant.
    SmemOverlap,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self).expect("rule serializes");
        f.write_str(name.as_str().unwrap_or("unknown"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<u32>,
    pub signals: Vec<String>,
    pub message: String,
}

impl Violation {
    fn new(rule: Rule, message: impl Into<String>) -> Self {
        Violation {
            rule,
            variant: None,
            slot: None,
            cycle: None,
            signals: Vec::new(),
            message: message.into(),
        }
    }

    fn variant(mut self, v: usize) -> Self {
        self.variant = Some(v);
        self
    }

    fn slot(mut self, s: usize) -> Self {
        self.slot = Some(s);
        self
    }

    fn cycle(mut self, c: u32) -> Self {
        self.cycle = Some(c);
        self
    }

    fn signals<'a>(mut self, ids: impl IntoIterator<Item = &'a str>) -> Self {
        self.signals = ids.into_iter().map(str::to_string).collect();
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("violation serializes")
    }
}

/// One resolved placement: slot position, offset and the occupied cycles.
struct Resolved {
    slot: usize,
    offset: u32,
    cycles: Vec<u32>,
}

/// (signal, first bit, end bit) inside one frame.
type Resident = (usize, u32, u32);

/// Checks a multischedule document against `instance`, variant by variant and
/// as a whole. An empty list means feasible.
///
/// Fails only when the document references signals the instance lacks.
pub fn validate_multischedule(doc: &ScheduleDocument, instance: &Instance) -> Result<Vec<Violation>> {
    let cfg = &instance.config;
    let hyper = cfg.hyperperiod_cycles;
    let ids: HashMap<&str, usize> = instance
        .signals
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut violations = Vec::new();

    // Variants using each signal, sorted.
    let mut used_by: Vec<Vec<usize>> = vec![Vec::new(); instance.signals.len()];
    for v in 0..instance.variants.variant_count() {
        for &s in instance.variants.signals_of(v) {
            used_by[s].push(v);
        }
    }
    let together = |a: usize, b: usize| used_by[a].iter().any(|v| used_by[b].binary_search(v).is_ok());

    let mut resolved: Vec<Option<Resolved>> = (0..instance.signals.len()).map(|_| None).collect();
    for (slot_pos, slot) in doc.slots.iter().enumerate() {
        for rec in &slot.placements {
            let &s = ids
                .get(rec.signal.as_str())
                .ok_or_else(|| Error::UnknownSignal(rec.signal.clone()))?;
            let signal = &instance.signals[s];
            let id = signal.id.as_str();
            if resolved[s].is_some() {
                violations.push(
                    Violation::new(Rule::Periodicity, format!("signal {id} is placed more than once"))
                        .slot(slot.index)
                        .signals([id]),
                );
                continue;
            }

            let f = cfg.cycle_us;
            let period = (signal.period_us / f) as u32;
            let release = signal.release_us.div_ceil(f) as i64;
            let latest = (((signal.release_us + signal.deadline_us) / f) as i64 - 1)
                .min(release + i64::from(period) - 1)
                .min(i64::from(hyper) - 1);
            let first = i64::from(rec.first_cycle);
            if first < release || first > latest {
                violations.push(
                    Violation::new(
                        Rule::TimeWindow,
                        format!("first job of {id} in cycle {first}, allowed {release}..={latest}"),
                    )
                    .slot(slot.index)
                    .cycle(rec.first_cycle)
                    .signals([id]),
                );
            }

            let expected: BTreeSet<u32> = (0..hyper / period)
                .map(|k| rec.first_cycle % period + k * period)
                .collect();
            let actual: BTreeSet<u32> = match &rec.cycles {
                Some(c) => c.iter().copied().collect(),
                None => expected.clone(),
            };
            let duplicated = rec.cycles.as_ref().is_some_and(|c| c.len() != actual.len());
            if actual != expected || duplicated || rec.first_cycle >= hyper {
                violations.push(
                    Violation::new(
                        Rule::Periodicity,
                        format!("jobs of {id} in cycles {actual:?}, expected {expected:?}"),
                    )
                    .slot(slot.index)
                    .signals([id]),
                );
            }

            if u64::from(rec.offset_bits) + u64::from(signal.length_bits) > u64::from(cfg.payload_bits) {
                violations.push(
                    Violation::new(
                        Rule::PayloadBounds,
                        format!(
                            "{id} occupies bits {}..{} of a {}-bit payload",
                            rec.offset_bits,
                            rec.offset_bits + signal.length_bits,
                            cfg.payload_bits
                        ),
                    )
                    .slot(slot.index)
                    .signals([id]),
                );
            }

            if !slot.nodes.contains(&signal.node) {
                violations.push(
                    Violation::new(
                        Rule::SlotNodeConflict,
                        format!(
                            "{id} is sent by node {} which slot {} does not declare",
                            signal.node, slot.index
                        ),
                    )
                    .slot(slot.index)
                    .signals([id]),
                );
            }

            resolved[s] = Some(Resolved {
                slot: slot_pos,
                offset: rec.offset_bits,
                cycles: actual.into_iter().filter(|&c| c < hyper).collect(),
            });
        }
    }

    // Per-frame resident lists: (signal, start, end).
    let mut frames: HashMap<(usize, u32), Vec<Resident>> = HashMap::new();
    for (s, r) in resolved.iter().enumerate() {
        if let Some(r) = r {
            let end = r.offset + instance.signals[s].length_bits;
            for &c in &r.cycles {
                frames.entry((r.slot, c)).or_default().push((s, r.offset, end));
            }
        }
    }
    let mut frame_keys: Vec<(usize, u32)> = frames.keys().copied().collect();
    frame_keys.sort_unstable();

    // Multischedule level: node sets and overlaps.
    let node_variants = {
        let mut m: HashMap<NodeId, BTreeSet<usize>> = HashMap::new();
        for (s, signal) in instance.signals.iter().enumerate() {
            m.entry(signal.node).or_default().extend(used_by[s].iter().copied());
        }
        m
    };
    let nodes_together = |p: NodeId, q: NodeId| match (node_variants.get(&p), node_variants.get(&q)) {
        (Some(a), Some(b)) => p != q && !a.is_disjoint(b),
        _ => false,
    };
    for slot in &doc.slots {
        let mut nodes: BTreeSet<NodeId> = slot.nodes.iter().copied().collect();
        for rec in &slot.placements {
            nodes.insert(instance.signals[ids[rec.signal.as_str()]].node);
        }
        let nodes: Vec<NodeId> = nodes.into_iter().collect();
        for (i, &p) in nodes.iter().enumerate() {
            for &q in &nodes[i + 1..] {
                if nodes_together(p, q) {
                    violations.push(
                        Violation::new(
                            Rule::SlotNodeConflict,
                            format!("nodes {p} and {q} share slot {} but appear in one variant", slot.index),
                        )
                        .slot(slot.index),
                    );
                }
            }
        }
    }
    for key in &frame_keys {
        let residents = &frames[key];
        for (i, &(a, a0, a1)) in residents.iter().enumerate() {
            for &(b, b0, b1) in &residents[i + 1..] {
                if a0 < b1 && b0 < a1 && together(a, b) {
                    violations.push(
                        Violation::new(Rule::SmemOverlap, "overlapping signals appear in one variant")
                            .slot(doc.slots[key.0].index)
                            .cycle(key.1)
                            .signals([instance.signals[a].id.as_str(), instance.signals[b].id.as_str()]),
                    );
                }
            }
        }
    }

    // Native schedules.
    for v in 0..instance.variants.variant_count() {
        let members = instance.variants.signals_of(v);
        let mut slot_nodes: HashMap<usize, BTreeSet<NodeId>> = HashMap::new();
        for &s in members {
            match &resolved[s] {
                None => violations.push(
                    Violation::new(
                        Rule::MissingSignal,
                        format!("{} has no placement", instance.signals[s].id),
                    )
                    .variant(v)
                    .signals([instance.signals[s].id.as_str()]),
                ),
                Some(r) => {
                    slot_nodes.entry(r.slot).or_default().insert(instance.signals[s].node);
                }
            }
        }
        let mut slots: Vec<_> = slot_nodes.into_iter().filter(|(_, n)| n.len() > 1).collect();
        slots.sort_unstable_by_key(|(slot, _)| *slot);
        for (slot, nodes) in slots {
            violations.push(
                Violation::new(
                    Rule::NodeExclusivity,
                    format!(
                        "slot {} carries nodes {:?}",
                        doc.slots[slot].index,
                        nodes.iter().map(|n| n.0).collect::<Vec<_>>()
                    ),
                )
                .variant(v)
                .slot(doc.slots[slot].index),
            );
        }

        for key in &frame_keys {
            let mut residents: Vec<(u32, u32, usize)> = frames[key]
                .iter()
                .filter(|(s, _, _)| members.binary_search(s).is_ok())
                .map(|&(s, start, end)| (start, end, s))
                .collect();
            residents.sort_unstable();
            // Sweep: report each resident overlapping the one reaching furthest.
            let mut reach: Option<(u32, usize)> = None;
            for &(start, end, s) in &residents {
                if let Some((far, holder)) = reach {
                    if start < far {
                        violations.push(
                            Violation::new(Rule::BitOverlap, "signals share bits")
                                .variant(v)
                                .slot(doc.slots[key.0].index)
                                .cycle(key.1)
                                .signals([instance.signals[holder].id.as_str(), instance.signals[s].id.as_str()]),
                        );
                    }
                }
                if reach.is_none_or(|(far, _)| end > far) {
                    reach = Some((end, s));
                }
            }
        }
    }

    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::{PlacementRecord, SlotRecord};
    use crate::model::{FlexRayConfig, Signal, VariantMatrix};

    fn inst() -> Instance {
        let cfg = FlexRayConfig {
            cycle_us: 5000,
            hyperperiod_cycles: 2,
            payload_bits: 8,
            static_slots: 75,
            slot_us: 40,
        };
        let sig = |id: &str, node: u32, period: u64| Signal {
            id: id.into(),
            node: NodeId(node),
            period_us: period * 5000,
            length_bits: 4,
            release_us: 0,
            deadline_us: period * 5000,
        };
        Instance::new(
            cfg,
            vec![sig("a", 1, 1), sig("b", 1, 2), sig("c", 2, 2)],
            VariantMatrix::from_members(3, vec![vec![0, 1], vec![2]]),
            None,
        )
        .unwrap()
    }

    fn place(signal: &str, first: u32, offset: u32) -> PlacementRecord {
        PlacementRecord {
            signal: signal.into(),
            first_cycle: first,
            offset_bits: offset,
            cycles: None,
        }
    }

    fn doc(slots: Vec<(Vec<u32>, Vec<PlacementRecord>)>) -> ScheduleDocument {
        ScheduleDocument {
            config: inst().config,
            strategy: None,
            variant: None,
            slots: slots
                .into_iter()
                .enumerate()
                .map(|(index, (nodes, placements))| SlotRecord {
                    index,
                    nodes: nodes.into_iter().map(NodeId).collect(),
                    placements,
                })
                .collect(),
        }
    }

    fn rules(v: &[Violation]) -> BTreeSet<Rule> {
        v.iter().map(|v| v.rule).collect()
    }

    #[test]
    fn feasible_document_passes() {
        // c (node 2) is exclusive with node 1, so it may share slot 0 and overlap.
        let d = doc(vec![(
            vec![1, 2],
            vec![place("a", 0, 0), place("b", 1, 4), place("c", 0, 4)],
        )]);
        assert_eq!(validate_multischedule(&d, &inst()).unwrap(), vec![]);
    }

    #[test]
    fn unknown_signal_is_an_error() {
        let d = doc(vec![(vec![1], vec![place("zz", 0, 0)])]);
        assert!(matches!(
            validate_multischedule(&d, &inst()),
            Err(Error::UnknownSignal(_))
        ));
    }

    #[test]
    fn detects_each_rule_class() {
        let i = inst();
        let check = |d: ScheduleDocument, rule: Rule| {
            let v = validate_multischedule(&d, &i).unwrap();
            assert!(rules(&v).contains(&rule), "expected {rule:?} in {v:?}");
        };
        // overlap within variant 0
        check(
            doc(vec![(
                vec![1, 2],
                vec![place("a", 0, 0), place("b", 0, 2), place("c", 0, 4)],
            )]),
            Rule::BitOverlap,
        );
        check(
            doc(vec![(
                vec![1, 2],
                vec![place("a", 0, 0), place("b", 0, 2), place("c", 0, 4)],
            )]),
            Rule::SmemOverlap,
        );
        check(
            doc(vec![(
                vec![1, 2],
                vec![place("a", 0, 6), place("b", 1, 0), place("c", 0, 0)],
            )]),
            Rule::PayloadBounds,
        );
        check(
            doc(vec![(
                vec![1, 2],
                vec![place("a", 0, 0), place("b", 1, 4), place("b", 0, 4), place("c", 0, 4)],
            )]),
            Rule::Periodicity,
        );
        let mut wrong_jobs = place("b", 1, 4);
        wrong_jobs.cycles = Some(vec![0, 1]);
        check(
            doc(vec![(vec![1, 2], vec![place("a", 0, 0), wrong_jobs, place("c", 0, 4)])]),
            Rule::Periodicity,
        );
        check(
            doc(vec![(
                vec![1, 2],
                vec![place("a", 1, 0), place("b", 1, 4), place("c", 0, 4)],
            )]),
            Rule::TimeWindow,
        );
        check(
            doc(vec![(vec![1, 2], vec![place("a", 0, 0), place("c", 0, 4)])]),
            Rule::MissingSignal,
        );
        check(
            doc(vec![(
                vec![1],
                vec![place("a", 0, 0), place("b", 1, 4), place("c", 0, 4)],
            )]),
            Rule::SlotNodeConflict,
        );
    }

    #[test]
    fn node_exclusivity_per_variant() {
        // Both nodes in one variant, sharing slot 0.
        let cfg = inst().config;
        let sig = |id: &str, node: u32| Signal {
            id: id.into(),
            node: NodeId(node),
            period_us: 5000,
            length_bits: 4,
            release_us: 0,
            deadline_us: 5000,
        };
        let i = Instance::new(
            cfg,
            vec![sig("a", 1), sig("b", 2)],
            VariantMatrix::from_members(2, vec![vec![0, 1]]),
            None,
        )
        .unwrap();
        let d = doc(vec![(vec![1, 2], vec![place("a", 0, 0), place("b", 0, 4)])]);
        let v = validate_multischedule(&d, &i).unwrap();
        assert!(rules(&v).contains(&Rule::NodeExclusivity));
        assert!(rules(&v).contains(&Rule::SlotNodeConflict));
        let line = v[0].to_json_line();
        assert!(line.starts_with("{\"rule\":"), "{line}");
    }
}
