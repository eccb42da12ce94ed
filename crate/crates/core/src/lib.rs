//! Genuine multipartite entanglement of X states: maximally entangled mixed
//! states at fixed spectrum or purity, semidefinite certificates, and
//! log-det rank minimisation over quantum channels.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod mems;
pub mod qmat;
pub mod sdp;
pub mod xstate;

pub use error::{Error, Result};
pub use qmat::{CMatrix, HermitianMatrix};
pub use xstate::XState;
