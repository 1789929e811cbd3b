//! Self-rescue subsystem: clique-based wake-up scheduling, protocol message
//! accounting, slot-grid energy modelling, and emergency-report composition.
//!
//! The distributed protocol driven by the simulator lives in [`protocol`];
//! the pure scheduling math (usable without a simulation) lives in
//! [`schedule`] and [`overhead`].

pub mod emergency;
pub mod energy;
pub mod overhead;
pub mod protocol;
pub mod schedule;

pub use emergency::EmergencyReport;
pub use energy::EnergyModel;
pub use protocol::{ProtocolConfig, RescueMsg, RescueNode, ROUNDS_BEFORE_START};
pub use schedule::{assign_schedule, wake_stats, GroupSchedule, ScheduleError, SlotPattern, WakeStats};
