//! Step-by-step program state capture for teaching stack and heap memory.
//!
//! - [`microvm`] runs small java-like or c-like programs and captures a
//!   [`snapshot::Snapshot`] at every statement boundary.
//! - [`trace`] persists those snapshots, one file per step, and navigates
//!   them forwards and backwards.
//! - [`analysis`] turns a snapshot into the table view: reachable heap,
//!   change highlights, simplified type names, collapsed frames.

pub mod analysis;
pub mod clock;
pub mod microvm;
pub mod snapshot;
pub mod trace;

pub use clock::{Clock, FixedClock, SystemClock};
