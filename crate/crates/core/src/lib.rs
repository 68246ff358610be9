//! Threaded solution streams for nondeterministic goals.
//!
//! The crate builds up in layers:
//!
//! - [`term`]: immutable message payloads and variable bindings;
//! - [`goal`]: lazy, cancellable enumeration of nondeterministic goals;
//! - [`mailbox`]: blocking FIFO queues with selective receive;
//! - [`runtime`]: spawning goals onto OS threads that stream their solutions
//!   to a recipient, with recyclable IDs and asynchronous stop;
//! - [`hub`]: shared queues whose linked threads are torn down synchronously;
//! - [`combinators`]: racing alternatives and independent conjunctions;
//! - [`pipeline`]: staged execution of dependent conjunctions that preserves
//!   sequential enumeration order;
//! - [`bench`]: the measurement harness behind the `bench` binary.

pub mod bench;
pub mod combinators;
pub mod goal;
pub mod hub;
pub mod mailbox;
pub mod pipeline;
pub mod puzzles;
pub mod runtime;
pub mod term;

pub use combinators::{concurrent_and, first_solution};
pub use goal::{CancelToken, EngineFailure, Goal, CHECKPOINT_INTERVAL};
pub use mailbox::{Envelope, Mailbox, Payload};
pub use pipeline::{pipe_create, piped, piped_findall, seq_findall, PipeHandle, PipeResults};
pub use runtime::{
    Client, ClientId, HubId, Runtime, RuntimeConfig, RuntimeError, SenderId, ThreadCtx, ThreadId,
};
pub use term::{instantiate, term_variables, AnswerProjection, Atom, Bindings, Term};
