//! Structural simulation of fault-tolerant FIR digital filters.
//!
//! The crate builds gate-level netlists for fixed-point FIR datapaths
//! (Vedic multipliers, carry-save accumulation), wraps them in five-way
//! modular redundancy under a selectable voter, and measures fault
//! masking and ECG denoising quality on the result.
//!
//! - [`circuit`] — netlist representation, combinational/clocked
//!   simulation, fault overlays, import/export.
//! - [`arith`] — netlist builders for adders and multipliers, verified
//!   against integer arithmetic.
//! - [`voters`] — the five 5-input voter constructions plus word-level
//!   voting and median fusion.
//! - [`fir`] — windowed-sinc design, coefficient quantization, the
//!   gate-level FIR datapath and its behavioral golden model.
//! - [`redundancy`] — five-way replication, fault-injection campaigns,
//!   analytic reliability.
//! - [`ecg`] — synthetic ECG traces, noise injection, denoising metrics
//!   and the end-to-end pipeline.
//! - [`resources`] — structural primitive census and the reference
//!   utilization comparison table.

pub mod arith;
pub mod circuit;
pub mod ecg;
pub mod fir;
pub mod redundancy;
pub mod resources;
pub mod rng;
pub mod voters;

pub use circuit::{FaultMode, FaultOverlay, Gate, GateKind, NetId, Netlist, SimState};
pub use voters::VoterKind;
