//! Compile linear-optical setups into qubit circuits, simulate them on a
//! dense statevector, differentiate fidelity objectives with the
//! parameter-shift rule and optimize them.
//!
//! The crate is layered bottom-up:
//!
//! * [`encoding`] and [`pauli`] map bosonic modes and operators onto qubits.
//! * [`circuit`] is the gate IR with symbolic parameters and Trotterization.
//! * [`elements`] compiles optical elements into circuits.
//! * [`simulator`] runs circuits; [`fock_oracle`] is the independent reference.
//! * [`objectives`], [`gradients`] and [`optimizer`] build and maximize fidelities.
//! * [`setup_file`] reads the declarative TOML setup format used by the CLI.

pub mod circuit;
pub mod elements;
pub mod encoding;
pub mod error;
pub mod fock_oracle;
pub mod gradients;
pub mod objectives;
pub mod optimizer;
pub mod pauli;
pub mod setup_file;
pub mod simulator;
pub mod synthesis;

pub use circuit::{Axis, Gate, GateCircuit, ParamExpr, ParamValues};
pub use elements::{InitialState, OpticalElement, StateComponent};
pub use encoding::{Bitstring, FockState, ModeKey, PathSpec, SetupLayout};
pub use error::{Error, Result};
pub use fock_oracle::FockVector;
pub use objectives::{Evaluation, HeraldSpec, Objective, Observable, Trigger};
pub use pauli::{Pauli, PauliSum, PauliTerm};
pub use setup_file::Setup;
pub use simulator::StateVector;
