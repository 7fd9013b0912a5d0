//! Simulator library for natural-orbitalizing VQE (NOization) and its
//! adaptive variant (NOA-VQE) on small fermionic lattice models.

pub mod adapt;
pub mod ansatz;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub(crate) mod la;
pub mod noization;
pub mod oracle;
pub mod pauli;
pub mod vqe;
pub mod seeding;
pub mod simulator;

pub use error::{Error, Result};
pub use hamiltonian::{build_hubbard, rotate_tensors, FermionTensors, HubbardSpec, OrbitalRotation};
pub use noization::{correlation_entropy, natural_orbital_transform, OneRdm};
pub use pauli::{Pauli, PauliString, PauliSum};
pub use simulator::{GateKind, GateOp, NoiseModel, QuantumState};
