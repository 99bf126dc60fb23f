//! Multi-variant FlexRay static segment scheduling.
//!
//! Signals shared by several vehicle variants are placed once in a shared
//! multischedule, so each occupies the same (cycle, slot, offset) in every
//! variant's native schedule. Placement is first fit over a configurable
//! signal ordering; the goal is to allocate as few static slots as possible.

pub mod benchgen;
pub mod cli;
pub mod document;
pub mod error;
pub mod exclusion;
pub mod model;
pub mod multischedule;
pub mod scheduler;
pub mod validator;

pub use document::{PlacementRecord, ScheduleDocument, SlotRecord};
pub use error::{Error, Result};
pub use exclusion::ExclusionMatrices;
pub use model::{round_time_constraints, CycleWindow, FlexRayConfig, Instance, NodeId, Signal, VariantMatrix};
pub use multischedule::{Multischedule, Placement, Problem};
pub use scheduler::{schedule, sort_signals, OrderingStrategy, ScheduleResult};
pub use validator::{validate_multischedule, Rule, Violation};
