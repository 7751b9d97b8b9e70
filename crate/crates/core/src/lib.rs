//! Prototype-similarity traces and their verification against quantitative
//! temporal-logic specifications.
//!
//! The crate covers a small prototype classifier over latent patch grids
//! ([`proto`]), synthetic data ([`synth`]), trace extraction ([`trace_gen`]),
//! the trace file format ([`trace`]), the TQTL language ([`tqtl`]) and the
//! built-in specifications with satisfaction reporting ([`specs`]).

pub mod canon;
pub mod label;
pub mod proto;
pub mod specs;
pub mod synth;
pub mod trace_gen;
pub mod trace;
pub mod tqtl;

pub use label::Label;
pub use trace::{read_trace, write_trace, ClassSource, FrameRecord, PrototypeMeta, Trace, TraceError};
