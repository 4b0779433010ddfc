//! Simulation and analysis of a spiking neuromorphic thermoregulator.
//!
//! The crate is organised bottom-up:
//!
//! * [`hybrid`]: generic hybrid systems (flow map, flow/jump sets, jump
//!   maps) and an event-locating Dormand–Prince solver producing hybrid arcs;
//! * [`circuit`]: component equations of the regulator circuit: NTC
//!   thermistor, MOSFET gate voltages and drain current, neuron capacitors,
//!   buffers, low-pass filter, amplifier and plant;
//! * [`models`]: the two hybrid models of the closed loop, one resolving
//!   every spike as a fast continuous discharge and one treating spikes as
//!   instantaneous pulses;
//! * [`averaged`]: the averaged input curve `ũ(T)`, set point, linear slope,
//!   feedforward gain and averaged error dynamics;
//! * [`experiment`]: scenarios, config files, CSV/SVG output and the
//!   commands behind the `neurotherm` binary.

// `!(x > 0.0)` also rejects NaN; indexed loops mirror the stage formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod averaged;
pub mod circuit;
pub mod experiment;
pub mod hybrid;
pub mod models;
