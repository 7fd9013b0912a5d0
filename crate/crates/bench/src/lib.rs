//! Shared fixtures for the criterion benchmarks.

use novqe::hamiltonian::{build_hubbard, FermionTensors, HubbardSpec};

pub fn dimer() -> FermionTensors {
    build_hubbard(&HubbardSpec::chain(2, 1.0, 1.0)).expect("valid spec")
}

pub fn plaquette() -> FermionTensors {
    build_hubbard(&HubbardSpec::plaquette(1.0, 1.0)).expect("valid spec")
}
