//! Surface-code engine: Pauli strings, the `d = 2` worked example as state
//! vectors, a CHP stabilizer tableau, syndrome extraction circuits, an exact
//! minimum-weight matching decoder, and logical-error-rate Monte Carlo.

pub mod decoder;
pub mod lattice;
pub mod memory;
pub mod pauli;
pub mod statevec;
pub mod syndrome;
pub mod tableau;

use thiserror::Error;

pub use decoder::{minimum_weight_matching, mwpm_decode, Matching, PauliFrame};
pub use lattice::{CheckKind, SurfaceLattice};
pub use memory::{logical_error_rate, run_memory, LogicalErrorEstimate};
pub use pauli::{Letter, PauliString};
pub use statevec::{d2_codewords, logical_h_d2, measure_stabilizer};
pub use syndrome::{syndrome_cycle, NoiseModel, Syndrome, SyndromeHistory};
pub use tableau::{Gate, StabilizerTableau};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum QecError {
    #[error("code distance must be at least 2, got {0}")]
    Distance(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("qubit {q} out of range for {n} qubits")]
    Qubit { q: usize, n: usize },
    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),
    #[error("Pauli string {0} is not Hermitian")]
    NotHermitian(String),
    #[error("cannot parse Pauli string: {0}")]
    Parse(String),
    #[error("{defects} defects exceed the decoder limit of {limit}")]
    DecoderCapacity { defects: usize, limit: usize },
    #[error("invalid noise model: {0}")]
    Noise(String),
    #[error(transparent)]
    Linear(#[from] scq_core::qcore::QcoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
