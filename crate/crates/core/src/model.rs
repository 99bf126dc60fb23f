//! Instance representation: network configuration, signals, variant membership,
//! and the rounding of release dates and deadlines onto whole cycles.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FlexRay cycle counters are six bits wide.
pub const MAX_HYPERPERIOD_CYCLES: u32 = 64;

/// Identifier of the ECU transmitting a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlexRayConfig {
    /// Communication cycle duration in microseconds.
    pub cycle_us: u64,
    /// Number of distinct cycles before the schedule repeats.
    pub hyperperiod_cycles: u32,
    /// Frame payload in bits.
    pub payload_bits: u32,
    /// Static slots the network designer reserved. Results may exceed it.
    pub static_slots: u32,
    /// Static slot duration in microseconds; informational only.
    pub slot_us: u64,
}

impl FlexRayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cycle_us == 0 {
            return Err(Error::InvalidConfig("cycle_us must be positive".into()));
        }
        if !self.hyperperiod_cycles.is_power_of_two() || self.hyperperiod_cycles > MAX_HYPERPERIOD_CYCLES {
            return Err(Error::InvalidConfig(format!(
                "hyperperiod_cycles must be a power of two not above {MAX_HYPERPERIOD_CYCLES}, got {}",
                self.hyperperiod_cycles
            )));
        }
        if self.payload_bits == 0 {
            return Err(Error::InvalidConfig("payload_bits must be positive".into()));
        }
        Ok(())
    }
}

/// One periodic signal. All times are in microseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub id: String,
    pub node: NodeId,
    pub period_us: u64,
    pub length_bits: u32,
    pub release_us: u64,
    /// Maximum age at the consumer, measured from the release date.
    pub deadline_us: u64,
}

/// Binary signal x variant membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantMatrix {
    signal_count: usize,
    /// Sorted, deduplicated signal indices used by each variant.
    members: Vec<Vec<usize>>,
}

impl VariantMatrix {
    /// Builds the matrix from per-variant lists of signal indices.
    pub fn from_members(signal_count: usize, mut members: Vec<Vec<usize>>) -> Self {
        for list in &mut members {
            list.sort_unstable();
            list.dedup();
            assert!(
                list.last().is_none_or(|&s| s < signal_count),
                "variant references signal index out of range"
            );
        }
        VariantMatrix { signal_count, members }
    }

    pub fn signal_count(&self) -> usize {
        self.signal_count
    }

    pub fn variant_count(&self) -> usize {
        self.members.len()
    }

    pub fn uses(&self, signal: usize, variant: usize) -> bool {
        self.members[variant].binary_search(&signal).is_ok()
    }

    pub fn signals_of(&self, variant: usize) -> &[usize] {
        &self.members[variant]
    }

    /// Variant indices that use `signal`.
    pub fn variants_of(&self, signal: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.members.len()).filter(move |&v| self.uses(signal, v))
    }
}

/// Provenance recorded by the benchmark generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub profile: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SignalRecord {
    id: String,
    node: NodeId,
    period_us: u64,
    length_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    release_us: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deadline_us: Option<u64>,
}

/// On-disk form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceDocument {
    config: FlexRayConfig,
    signals: Vec<SignalRecord>,
    variants: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorInfo>,
}

/// A validated scheduling instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub config: FlexRayConfig,
    pub signals: Vec<Signal>,
    pub variants: VariantMatrix,
    pub generator: Option<GeneratorInfo>,
}

impl Instance {
    /// Validates the parts and assembles an instance.
    pub fn new(
        config: FlexRayConfig,
        signals: Vec<Signal>,
        variants: VariantMatrix,
        generator: Option<GeneratorInfo>,
    ) -> Result<Self> {
        config.validate()?;
        let mut seen = HashMap::with_capacity(signals.len());
        for (idx, signal) in signals.iter().enumerate() {
            if seen.insert(signal.id.as_str(), idx).is_some() {
                return Err(Error::DuplicateSignal(signal.id.clone()));
            }
            validate_signal(signal, &config)?;
        }
        if variants.signal_count() != signals.len() {
            return Err(Error::InvalidConfig(format!(
                "variant matrix covers {} signals, instance has {}",
                variants.signal_count(),
                signals.len()
            )));
        }
        let mut covered = vec![false; signals.len()];
        for v in 0..variants.variant_count() {
            for &s in variants.signals_of(v) {
                covered[s] = true;
            }
        }
        if let Some(s) = covered.iter().position(|c| !c) {
            return Err(Error::SignalWithoutVariant(signals[s].id.clone()));
        }
        Ok(Instance {
            config,
            signals,
            variants,
            generator,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn from_document(doc: InstanceDocument) -> Result<Self> {
        let signals: Vec<Signal> = doc
            .signals
            .into_iter()
            .map(|r| Signal {
                // Implicit deadline equals the period.
                deadline_us: r.deadline_us.unwrap_or(r.period_us),
                release_us: r.release_us.unwrap_or(0),
                id: r.id,
                node: r.node,
                period_us: r.period_us,
                length_bits: r.length_bits,
            })
            .collect();
        let index: HashMap<&str, usize> = signals.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        let mut members = Vec::with_capacity(doc.variants.len());
        for ids in &doc.variants {
            let mut list = Vec::with_capacity(ids.len());
            for id in ids {
                match index.get(id.as_str()) {
                    Some(&i) => list.push(i),
                    None => return Err(Error::UnknownSignal(id.clone())),
                }
            }
            members.push(list);
        }
        // Duplicate ids collapse in `index`; let `new` report them.
        let variants = VariantMatrix::from_members(signals.len(), members);
        Self::new(doc.config, signals, variants, doc.generator)
    }

    fn to_document(&self) -> InstanceDocument {
        InstanceDocument {
            config: self.config.clone(),
            signals: self
                .signals
                .iter()
                .map(|s| SignalRecord {
                    id: s.id.clone(),
                    node: s.node,
                    period_us: s.period_us,
                    length_bits: s.length_bits,
                    release_us: Some(s.release_us),
                    deadline_us: Some(s.deadline_us),
                })
                .collect(),
            variants: (0..self.variants.variant_count())
                .map(|v| {
                    self.variants
                        .signals_of(v)
                        .iter()
                        .map(|&s| self.signals[s].id.clone())
                        .collect()
                })
                .collect(),
            generator: self.generator.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("instance serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn signal_index(&self, id: &str) -> Option<usize> {
        self.signals.iter().position(|s| s.id == id)
    }

    /// Distinct transmitting nodes in ascending order.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.signals.iter().map(|s| s.node).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }
}

fn validate_signal(signal: &Signal, config: &FlexRayConfig) -> Result<()> {
    let invalid = |reason: &str| Error::InvalidSignal {
        id: signal.id.clone(),
        reason: reason.to_string(),
    };
    if signal.length_bits == 0 {
        return Err(invalid("length_bits must be positive"));
    }
    if signal.length_bits > config.payload_bits {
        return Err(Error::SignalExceedsPayload {
            id: signal.id.clone(),
            length_bits: signal.length_bits,
            payload_bits: config.payload_bits,
        });
    }
    if signal.deadline_us == 0 {
        return Err(invalid("deadline_us must be positive"));
    }
    let on_grid = signal.period_us.is_multiple_of(config.cycle_us) && {
        let cycles = signal.period_us / config.cycle_us;
        cycles.is_power_of_two() && cycles <= u64::from(config.hyperperiod_cycles)
    };
    if !on_grid {
        return Err(Error::PeriodOffGrid {
            id: signal.id.clone(),
            period_us: signal.period_us,
        });
    }
    Ok(())
}

/// Cycle-granular time window for the first job of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CycleWindow {
    pub release_cycle: u32,
    /// Last admissible cycle for the first job, inclusive.
    pub deadline_cycle: u32,
    pub period_cycles: u32,
}

impl CycleWindow {
    /// Number of admissible first-job cycles.
    pub fn width(&self) -> u32 {
        self.deadline_cycle - self.release_cycle + 1
    }

    pub fn contains(&self, cycle: u32) -> bool {
        (self.release_cycle..=self.deadline_cycle).contains(&cycle)
    }
}

/// Rounds release date up to the start of a cycle and the absolute deadline
/// down to the end of a cycle.
pub fn round_time_constraints(signal: &Signal, config: &FlexRayConfig) -> Result<CycleWindow> {
    let f = config.cycle_us;
    let period_cycles = (signal.period_us / f) as u32;
    let release = signal.release_us.div_ceil(f) as i64;
    let mut deadline = ((signal.release_us + signal.deadline_us) / f) as i64 - 1;
    deadline = deadline
        .min(release + i64::from(period_cycles) - 1)
        .min(i64::from(config.hyperperiod_cycles) - 1);
    if deadline < release {
        return Err(Error::EmptyWindow {
            id: signal.id.clone(),
            release_cycle: release,
            deadline_cycle: deadline,
        });
    }
    Ok(CycleWindow {
        release_cycle: release as u32,
        deadline_cycle: deadline as u32,
        period_cycles,
    })
}

/// Cycles occupied within one hyperperiod by a signal whose first job is in
/// `first_cycle`. Jobs past the hyperperiod end wrap to its start.
pub fn job_cycles(first_cycle: u32, period_cycles: u32, hyperperiod_cycles: u32) -> impl Iterator<Item = u32> {
    let phase = first_cycle % period_cycles;
    (0..hyperperiod_cycles / period_cycles).map(move |k| phase + k * period_cycles)
}
