//! Short-Dot coded computation of linear transforms `A x` over `P`
//! unreliable processors, with the latency models and bounds used to compare
//! it against uncoded, repetition and MDS strategies.

pub mod bounds;
pub mod decode;
pub mod encode;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod io;
pub mod latency;
pub mod linalg;
pub mod params;
pub mod pattern;
pub mod poly;
pub mod strategies;

pub use decode::{decode, decode_with, decode_with_errors};
pub use encode::{
    encode, encode_chunked, encode_with, worker_dot, ChunkedTransform, EncodeOptions, EncodedTransform,
    SolveMethod, WorkerOutput, WorkerTask,
};
pub use error::{Error, ErrorClass, Result};
pub use generator::{build_generator, GeneratorKind, GeneratorMatrix, GeneratorSpec};
pub use params::{validate_params, CodeParams};
pub use pattern::SparsityPattern;
pub use strategies::{RecoveryRule, StrategyId, TaskPlan};
pub use bounds::{basic_lower_bound, check_achievability, lambda_cap, tight_lower_bound, BoundReport};
pub use latency::{monte_carlo, optimize_k, DelayModel, SimulationReport};
