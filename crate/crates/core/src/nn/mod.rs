//! Feedforward actor-critic network, Adam and checkpoints.
//!
//! Networks are layouts over a flat parameter slice, so the optimizer,
//! gradient clipping and serialization all work on plain vectors.

pub mod adam;
pub mod checkpoint;
pub mod mlp;
pub mod policy;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, PolicyParams, RngState, FORMAT_VERSION};
pub use mlp::{Activation, Dense, Mlp, MlpTrace};
pub use policy::{ActorCritic, ForwardCache, NetSpec};
