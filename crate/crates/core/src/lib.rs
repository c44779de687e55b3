//! Hypercausal computation stack.
//!
//! A backend maps an input to a present state `S_t`, a projector expands it
//! into `K` candidate futures `F_t`, and a policy collapses those into a
//! representative future `Ŝ_{t+1}`. Nodes compose into chains and DAGs; the
//! evaluation, optimizer and runtime modules supply losses, parameter
//! updates and callback/telemetry plumbing, and [`experiment`] wires them
//! into the drift-feedback run driven by the `hcs` CLI.

pub mod backend;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod hypercausal;
pub mod optim;
pub mod projectors;
pub mod registry;
pub mod runtime;
pub mod types;

pub use backend::{Backend, BitstringCounts, CircuitBackend, Convention, ReferenceBackend};
pub use error::{Error, Result};
pub use hypercausal::{GraphSpec, HCNode, Policy};
pub use projectors::{LinearProjector, Projector};
pub use registry::BackendRegistry;
pub use types::{BackendConfig, FutureSet, StateVector, TriadicOutput};
