//! Seeded generator for synthetic multi-variant benchmark instances.
//!
//! Signal parameters follow an SAE-like mix of 5, 10, 20 (sporadic, converted
//! to periodic), 100 and 1000 ms signals, where longer periods tend to carry
//! longer payloads. Periods are then rounded down onto the `cycle * 2^n` grid.
//! Randomness comes from ChaCha8 seeded with the profile name hash and the
//! user seed, so documents are reproducible byte for byte.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FlexRayConfig, GeneratorInfo, Instance, NodeId, Signal, VariantMatrix, MAX_HYPERPERIOD_CYCLES};

pub const CYCLE_US: u64 = 5_000;
pub const STATIC_SLOTS: u32 = 75;
pub const SLOT_US: u64 = 40;
pub const VARIANTS: usize = 20;
pub const VARIANT_PROB_MAX: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReleasePolicy {
    /// Every signal is released at time 0.
    None,
    /// Release at the start of one of the first five cycles.
    FirstFiveCycles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeadlinePolicy {
    /// Deadline equals the period.
    None,
    /// Uniform over the last third of the period.
    LastThirdOfPeriod,
    /// Uniform between one cycle and the period.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkProfile {
    pub name: &'static str,
    pub node_count: u32,
    /// Inclusive bounds on the number of signals.
    pub signal_count_range: (usize, usize),
    pub payload_bits: u32,
    pub release_policy: ReleasePolicy,
    pub deadline_policy: DeadlinePolicy,
    pub variants: usize,
    pub variant_prob_max: f64,
}

const DEFAULT_COUNT: (usize, usize) = (500, 1000);

const fn profile(
    name: &'static str,
    node_count: u32,
    signal_count_range: (usize, usize),
    payload_bits: u32,
    release_policy: ReleasePolicy,
    deadline_policy: DeadlinePolicy,
) -> BenchmarkProfile {
    BenchmarkProfile {
        name,
        node_count,
        signal_count_range,
        payload_bits,
        release_policy,
        deadline_policy,
        variants: VARIANTS,
        variant_prob_max: VARIANT_PROB_MAX,
    }
}

use DeadlinePolicy as D;
use ReleasePolicy as R;

static PROFILES: [BenchmarkProfile; 10] = [
    profile("set1", 3, DEFAULT_COUNT, 32, R::None, D::None),
    profile("set2", 3, DEFAULT_COUNT, 32, R::FirstFiveCycles, D::None),
    profile("set3", 3, DEFAULT_COUNT, 32, R::FirstFiveCycles, D::LastThirdOfPeriod),
    profile("set4", 3, DEFAULT_COUNT, 32, R::FirstFiveCycles, D::None),
    profile("set5", 6, DEFAULT_COUNT, 64, R::FirstFiveCycles, D::None),
    profile("set6", 6, (800, 1000), 32, R::FirstFiveCycles, D::None),
    profile("set7", 23, (850, 990), 32, R::None, D::None),
    profile("1ECU500", 1, (475, 525), 32, R::FirstFiveCycles, D::Random),
    profile("1ECU1000", 1, (950, 1050), 32, R::FirstFiveCycles, D::Random),
    profile("1ECU3000", 1, (2850, 3150), 128, R::FirstFiveCycles, D::Random),
];

impl BenchmarkProfile {
    pub fn all() -> &'static [BenchmarkProfile] {
        &PROFILES
    }

    pub fn by_name(name: &str) -> Result<&'static BenchmarkProfile> {
        PROFILES
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownProfile(name.to_string()))
    }

    fn check(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::ContradictoryProfile {
                profile: self.name.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.node_count == 0 {
            return fail("no nodes");
        }
        if self.signal_count_range.0 > self.signal_count_range.1 {
            return fail("empty signal count range");
        }
        if self.payload_bits == 0 {
            return fail("zero payload");
        }
        if self.variants == 0 && self.signal_count_range.1 > 0 {
            return fail("signals but no variants to assign them to");
        }
        if !(0.0..=1.0).contains(&self.variant_prob_max) {
            return fail("variant probability outside [0, 1]");
        }
        Ok(())
    }
}

/// Period class of the SAE-like mix: nominal period in ms, relative weight,
/// and inclusive length range in bits.
struct PeriodClass {
    period_ms: u64,
    weight: u32,
    length: (u32, u32),
}

const CLASSES: [PeriodClass; 5] = [
    PeriodClass {
        period_ms: 5,
        weight: 8,
        length: (1, 4),
    },
    PeriodClass {
        period_ms: 10,
        weight: 12,
        length: (1, 8),
    },
    PeriodClass {
        period_ms: 20,
        weight: 20,
        length: (1, 8),
    },
    PeriodClass {
        period_ms: 100,
        weight: 30,
        length: (9, 16),
    },
    PeriodClass {
        period_ms: 1000,
        weight: 30,
        length: (17, 24),
    },
];

/// Largest `cycle_us * 2^n` not above `raw_us`, clamped to
/// `[cycle_us, cycle_us * hyperperiod_cycles]`.
pub fn resample_period(raw_us: u64, cycle_us: u64, hyperperiod_cycles: u32) -> u64 {
    let max = cycle_us * u64::from(hyperperiod_cycles);
    let mut period = cycle_us;
    while period * 2 <= raw_us.min(max) {
        period *= 2;
    }
    period
}

fn seed_for(profile: &str, seed: u64) -> u64 {
    // FNV-1a over the profile name, mixed with the user seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in profile.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Generates one instance of `profile`; a pure function of its arguments.
pub fn generate_instance(profile: &BenchmarkProfile, seed: u64) -> Result<Instance> {
    profile.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(profile.name, seed));
    let config = FlexRayConfig {
        cycle_us: CYCLE_US,
        hyperperiod_cycles: MAX_HYPERPERIOD_CYCLES,
        payload_bits: profile.payload_bits,
        static_slots: STATIC_SLOTS,
        slot_us: SLOT_US,
    };
    let f = config.cycle_us;
    let count = rng.gen_range(profile.signal_count_range.0..=profile.signal_count_range.1);
    let total_weight: u32 = CLASSES.iter().map(|c| c.weight).sum();

    let mut signals = Vec::with_capacity(count);
    for i in 0..count {
        let node = NodeId(rng.gen_range(1..=profile.node_count));
        let mut pick = rng.gen_range(0..total_weight);
        let class = CLASSES
            .iter()
            .find(|c| {
                if pick < c.weight {
                    true
                } else {
                    pick -= c.weight;
                    false
                }
            })
            .expect("weights cover the range");
        let hi = class.length.1.min(profile.payload_bits);
        let lo = class.length.0.min(hi);
        let length_bits = rng.gen_range(lo..=hi);
        let period_us = resample_period(class.period_ms * 1000, f, config.hyperperiod_cycles);
        let release_us = match profile.release_policy {
            ReleasePolicy::None => 0,
            ReleasePolicy::FirstFiveCycles => rng.gen_range(0..5u64) * f,
        };
        // Deadlines shorter than a cycle would leave no admissible cycle.
        let deadline_us = match profile.deadline_policy {
            DeadlinePolicy::None => period_us,
            DeadlinePolicy::LastThirdOfPeriod => rng.gen_range((2 * period_us).div_ceil(3)..=period_us).max(f),
            DeadlinePolicy::Random => rng.gen_range(f..=period_us),
        };
        signals.push(Signal {
            id: format!("s{i}"),
            node,
            period_us,
            length_bits,
            release_us,
            deadline_us,
        });
    }

    let probabilities: Vec<f64> = (0..profile.variants)
        .map(|_| rng.gen_range(0.0..=profile.variant_prob_max))
        .collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); profile.variants];
    let variant_ids: Vec<usize> = (0..profile.variants).collect();
    for s in 0..count {
        let mut used = false;
        for (v, &p) in probabilities.iter().enumerate() {
            if rng.gen_bool(p) {
                members[v].push(s);
                used = true;
            }
        }
        if !used {
            let &v = variant_ids.choose(&mut rng).expect("at least one variant");
            members[v].push(s);
        }
    }

    Instance::new(
        config,
        signals,
        VariantMatrix::from_members(count, members),
        Some(GeneratorInfo {
            profile: profile.name.to_string(),
            seed,
        }),
    )
}
