//! Deterministic industrial-facility simulation and a six-layer hazard-response
//! stack: perception math, hazard understanding, memory, a ReAct tool loop,
//! grid planning with MPPI, and kinematic locomotion with its reward terms.

pub mod eventlog;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod locomotion;
pub mod memory;
pub mod orchestra;
pub mod perception;
pub mod planning;
pub mod rng;
pub mod understanding;
pub mod worldsim;
