//! Independent oracles shared by the integration suites. Nothing here calls
//! into the placement code; exclusion relations are recomputed directly from
//! variant membership.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use flexsched::{FlexRayConfig, Instance, NodeId, ScheduleDocument, Signal, VariantMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CYCLE_US: u64 = 5000;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn example1() -> Instance {
    Instance::load(data_path("example1.json")).unwrap()
}

pub fn config(hyperperiod: u32, payload: u32) -> FlexRayConfig {
    FlexRayConfig {
        cycle_us: CYCLE_US,
        hyperperiod_cycles: hyperperiod,
        payload_bits: payload,
        static_slots: 75,
        slot_us: 40,
    }
}

/// Bounds for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_signals: usize,
    pub max_nodes: u32,
    pub max_variants: usize,
    /// log2 of the largest hyperperiod.
    pub max_hyper_log: u32,
    pub payload_bits: u32,
}

pub const MICRO: Shape = Shape {
    max_signals: 12,
    max_nodes: 3,
    max_variants: 4,
    max_hyper_log: 3,
    payload_bits: 8,
};

/// Random valid instance with releases and deadlines on arbitrary
/// microsecond values, so rounding is exercised too.
pub fn random_instance(seed: u64, shape: Shape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hyper = 1u32 << rng.gen_range(0..=shape.max_hyper_log);
    let cfg = config(hyper, shape.payload_bits);
    let n = rng.gen_range(0..=shape.max_signals);
    let nodes = rng.gen_range(1..=shape.max_nodes);
    let mut signals = Vec::with_capacity(n);
    for i in 0..n {
        let period_cycles = 1u64 << rng.gen_range(0..=hyper.trailing_zeros());
        let period_us = period_cycles * CYCLE_US;
        // Keep at least one full cycle between release and deadline.
        let release_us = rng.gen_range(0..=period_us.saturating_sub(CYCLE_US));
        let slack = rng.gen_range(0..CYCLE_US);
        let deadline_us =
            rng.gen_range(release_us.div_ceil(CYCLE_US) * CYCLE_US - release_us + CYCLE_US..=period_us + slack);
        signals.push(Signal {
            id: format!("s{i}"),
            node: NodeId(rng.gen_range(1..=nodes)),
            period_us,
            length_bits: rng.gen_range(1..=shape.payload_bits),
            release_us,
            deadline_us,
        });
    }
    let variants = rng.gen_range(1..=shape.max_variants);
    let mut members = vec![Vec::new(); variants];
    for s in 0..n {
        let mut used = false;
        for m in members.iter_mut() {
            if rng.gen_bool(0.5) {
                m.push(s);
                used = true;
            }
        }
        if !used {
            members[rng.gen_range(0..variants)].push(s);
        }
    }
    Instance::new(cfg, signals, VariantMatrix::from_members(n, members), None).unwrap()
}

/// Exclusion relations by a direct double loop over variants.
pub struct Relations {
    pub smem: Vec<Vec<bool>>,
    /// Keyed by node id.
    pub nmem: HashMap<(u32, u32), bool>,
}

impl Relations {
    pub fn of(instance: &Instance) -> Self {
        let n = instance.signals.len();
        let vc = instance.variants.variant_count();
        let uses = |s: usize, v: usize| instance.variants.signals_of(v).contains(&s);
        let smem: Vec<Vec<bool>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| a == b || (0..vc).any(|v| uses(a, v) && uses(b, v)))
                    .collect()
            })
            .collect();
        let mut nmem = HashMap::new();
        let nodes: Vec<u32> = instance.signals.iter().map(|s| s.node.0).collect();
        for &p in &nodes {
            for &q in &nodes {
                let hit = p != q && (0..n).any(|a| nodes[a] == p && (0..n).any(|b| nodes[b] == q && smem[a][b]));
                nmem.insert((p, q), hit);
            }
        }
        Relations { smem, nmem }
    }

    pub fn nodes_conflict(&self, p: u32, q: u32) -> bool {
        self.nmem.get(&(p, q)).copied().unwrap_or(false)
    }
}

/// First-job window in cycles, recomputed from the raw times.
pub fn window(signal: &Signal, cfg: &FlexRayConfig) -> Option<(u32, u32, u32)> {
    let f = cfg.cycle_us as i64;
    let period = (signal.period_us as i64) / f;
    let release = (signal.release_us as i64 + f - 1) / f;
    let deadline = ((signal.release_us + signal.deadline_us) as i64 / f - 1)
        .min(release + period - 1)
        .min(cfg.hyperperiod_cycles as i64 - 1);
    (deadline >= release).then_some((release as u32, deadline as u32, period as u32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub slot: usize,
    pub first_cycle: u32,
    pub offset: u32,
}

/// Whether two placed signals may coexist under the multischedule rules.
fn compatible(inst: &Instance, rel: &Relations, a: usize, pa: Pos, b: usize, pb: Pos) -> bool {
    if pa.slot != pb.slot {
        return true;
    }
    let (sa, sb) = (&inst.signals[a], &inst.signals[b]);
    if rel.nodes_conflict(sa.node.0, sb.node.0) {
        return false;
    }
    if !rel.smem[a][b] {
        return true;
    }
    let f = inst.config.cycle_us;
    let (ta, tb) = ((sa.period_us / f) as u32, (sb.period_us / f) as u32);
    // Periods are powers of two, so job sets meet iff phases agree modulo the
    // shorter period.
    let m = ta.min(tb);
    if pa.first_cycle % m != pb.first_cycle % m {
        return true;
    }
    pa.offset + sa.length_bits <= pb.offset || pb.offset + sb.length_bits <= pa.offset
}

/// Oracle verdict on a document: every signal placed once, in window, with
/// the exact periodic job set, inside the payload, declared nodes matching,
/// and all pairs compatible.
pub fn document_feasible(doc: &ScheduleDocument, inst: &Instance) -> bool {
    let rel = Relations::of(inst);
    let cfg = &inst.config;
    let mut pos: Vec<Option<Pos>> = vec![None; inst.signals.len()];
    for (slot_pos, slot) in doc.slots.iter().enumerate() {
        let mut used_nodes: Vec<NodeId> = Vec::new();
        for p in &slot.placements {
            let Some(s) = inst.signal_index(&p.signal) else {
                return false;
            };
            if pos[s].is_some() {
                return false;
            }
            let signal = &inst.signals[s];
            let Some((r, d, t)) = window(signal, cfg) else {
                return false;
            };
            if p.first_cycle < r || p.first_cycle > d || p.offset_bits + signal.length_bits > cfg.payload_bits {
                return false;
            }
            if let Some(cycles) = &p.cycles {
                let mut got = cycles.clone();
                got.sort_unstable();
                let want: Vec<u32> = (0..cfg.hyperperiod_cycles)
                    .filter(|c| c % t == p.first_cycle % t)
                    .collect();
                if got != want {
                    return false;
                }
            }
            if !used_nodes.contains(&signal.node) {
                used_nodes.push(signal.node);
            }
            pos[s] = Some(Pos {
                slot: slot_pos,
                first_cycle: p.first_cycle,
                offset: p.offset_bits,
            });
        }
        if used_nodes.iter().any(|n| !slot.nodes.contains(n)) {
            return false;
        }
        for n in &slot.nodes {
            if !used_nodes.contains(n) {
                used_nodes.push(*n);
            }
        }
        for (i, p) in used_nodes.iter().enumerate() {
            if used_nodes[i + 1..].iter().any(|q| rel.nodes_conflict(p.0, q.0)) {
                return false;
            }
        }
    }
    let Some(pos): Option<Vec<Pos>> = pos.into_iter().collect() else {
        return false;
    };
    (0..pos.len()).all(|a| (a + 1..pos.len()).all(|b| compatible(inst, &rel, a, pos[a], b, pos[b])))
}

/// Fewest slots of any feasible multischedule, by exhaustive search.
///
/// Offsets range over all admissible values, first cycles over the window,
/// and a signal may open at most one new slot beyond those already used.
/// Returns `None` when the search exceeds `budget` nodes.
pub fn optimum_slots(inst: &Instance, budget: u64) -> Option<usize> {
    let n = inst.signals.len();
    if n == 0 {
        return Some(0);
    }
    let rel = Relations::of(inst);
    let cfg = &inst.config;
    let windows: Vec<(u32, u32, u32)> = inst.signals.iter().map(|s| window(s, cfg).unwrap()).collect();
    // Big, frequent signals first prunes earlier.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| {
        let sig = &inst.signals[s];
        std::cmp::Reverse(u64::from(sig.length_bits) * u64::from(cfg.hyperperiod_cycles / windows[s].2))
    });

    // Pair relation inside one slot: no constraint, forbidden, or disjoint
    // bits required when phases agree modulo the given period.
    #[derive(Clone, Copy)]
    enum Pair {
        Free,
        Forbidden,
        Bits(u32),
    }
    let f = cfg.cycle_us;
    let pairs: Vec<Vec<Pair>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let (sa, sb) = (&inst.signals[a], &inst.signals[b]);
                    if rel.nodes_conflict(sa.node.0, sb.node.0) {
                        Pair::Forbidden
                    } else if rel.smem[a][b] {
                        Pair::Bits((sa.period_us.min(sb.period_us) / f) as u32)
                    } else {
                        Pair::Free
                    }
                })
                .collect()
        })
        .collect();

    struct Search {
        pairs: Vec<Vec<Pair>>,
        windows: Vec<(u32, u32, u32)>,
        lengths: Vec<u32>,
        payload: u32,
        order: Vec<usize>,
        placed: Vec<(usize, Pos)>,
        nodes_left: u64,
    }

    impl Search {
        fn fits(&mut self, k: usize, depth: usize, used: usize) -> Option<bool> {
            if depth == self.order.len() {
                return Some(true);
            }
            if self.nodes_left == 0 {
                return None;
            }
            self.nodes_left -= 1;
            let s = self.order[depth];
            let (r, d, _) = self.windows[s];
            let len = self.lengths[s];
            for slot in 0..k.min(used + 1) {
                let mates: Vec<(usize, Pos)> = self.placed.iter().copied().filter(|(_, p)| p.slot == slot).collect();
                if mates.iter().any(|&(b, _)| matches!(self.pairs[s][b], Pair::Forbidden)) {
                    continue;
                }
                for first_cycle in r..=d {
                    for offset in 0..=self.payload - len {
                        let ok = mates.iter().all(|&(b, pb)| match self.pairs[s][b] {
                            Pair::Bits(m) if first_cycle % m == pb.first_cycle % m => {
                                offset + len <= pb.offset || pb.offset + self.lengths[b] <= offset
                            }
                            _ => true,
                        });
                        if !ok {
                            continue;
                        }
                        self.placed.push((
                            s,
                            Pos {
                                slot,
                                first_cycle,
                                offset,
                            },
                        ));
                        let found = self.fits(k, depth + 1, used.max(slot + 1));
                        self.placed.pop();
                        match found {
                            Some(false) => {}
                            other => return other,
                        }
                    }
                }
            }
            Some(false)
        }
    }

    let mut search = Search {
        pairs,
        windows,
        lengths: inst.signals.iter().map(|s| s.length_bits).collect(),
        payload: cfg.payload_bits,
        order,
        placed: Vec::new(),
        nodes_left: budget,
    };
    for k in lower_bound(inst)..=n {
        if search.fits(k, 0, 0)? {
            return Some(k);
        }
    }
    unreachable!("one slot per signal is always feasible")
}

pub fn reference_schedule() -> ScheduleDocument {
    ScheduleDocument::load(data_path("example1_reference_schedule.json")).unwrap()
}

fn placement_mut<'a>(doc: &'a mut ScheduleDocument, signal: &str) -> &'a mut flexsched::PlacementRecord {
    doc.slots
        .iter_mut()
        .flat_map(|s| s.placements.iter_mut())
        .find(|p| p.signal == signal)
        .unwrap()
}

/// One single-fault copy of the Example 1 reference schedule per rule class
/// checked inside native schedules.
pub fn single_faults() -> Vec<(flexsched::Rule, ScheduleDocument)> {
    use flexsched::Rule;
    let base = reference_schedule();
    let mut out = Vec::new();

    // H joins node 1's slot; variant II then sees nodes 1 and 3 there.
    let mut doc = base.clone();
    let h = doc.slots[2].placements.pop().unwrap();
    doc.slots[2].nodes.retain(|n| n.0 != 3);
    doc.slots[0].placements.push(h);
    doc.slots[0].nodes.push(NodeId(3));
    out.push((Rule::NodeExclusivity, doc));

    // B onto A's bits.
    let mut doc = base.clone();
    placement_mut(&mut doc, "B").offset_bits = 0;
    out.push((Rule::BitOverlap, doc));

    // B past the payload end.
    let mut doc = base.clone();
    placement_mut(&mut doc, "B").offset_bits = 12;
    out.push((Rule::PayloadBounds, doc));

    // A loses a job.
    let mut doc = base.clone();
    placement_mut(&mut doc, "A").cycles = Some(vec![0, 1, 2]);
    out.push((Rule::Periodicity, doc));

    // D before its release cycle.
    let mut doc = base.clone();
    let d = placement_mut(&mut doc, "D");
    d.first_cycle = 0;
    d.cycles = Some(vec![0]);
    out.push((Rule::TimeWindow, doc));

    // G dropped.
    let mut doc = base;
    doc.slots[2].placements.retain(|p| p.signal != "G");
    doc.slots[2].nodes.retain(|n| n.0 != 2);
    out.push((Rule::MissingSignal, doc));

    out
}

/// Smallest offset where `len` bits avoid every `(start, end)` range, by
/// trying each offset in turn.
pub fn scan_offset(busy: &[(u32, u32)], len: u32, payload: u32) -> Option<u32> {
    (0..=payload.checked_sub(len)?).find(|&o| busy.iter().all(|&(a, b)| o + len <= a || b <= o))
}

/// Slots any multischedule needs: within one variant a slot carries a single
/// node, so each node's bit load in that variant needs its own slots.
pub fn lower_bound(inst: &Instance) -> usize {
    let cfg = &inst.config;
    let capacity = u64::from(cfg.hyperperiod_cycles) * u64::from(cfg.payload_bits);
    (0..inst.variants.variant_count())
        .map(|v| {
            let mut load: HashMap<NodeId, u64> = HashMap::new();
            for &s in inst.variants.signals_of(v) {
                let sig = &inst.signals[s];
                let jobs = u64::from(cfg.hyperperiod_cycles) * cfg.cycle_us / sig.period_us;
                *load.entry(sig.node).or_default() += jobs * u64::from(sig.length_bits);
            }
            load.values().map(|l| l.div_ceil(capacity) as usize).sum::<usize>()
        })
        .max()
        .unwrap_or(0)
        .max(usize::from(!inst.signals.is_empty()))
}
