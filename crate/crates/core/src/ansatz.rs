//! The three fixed circuit templates (product, fSim, LDCA) and growable
//! templates for the adaptive scheme.
//!
//! fSim and LDCA open with X gates on qubits `0..m/2` to pin the excitation
//! number, then lay a single brickwork layer over the pairs
//! `(0,1),(2,3),...` followed by `(1,2),(3,4),...`.

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::simulator::{GateKind, GateOp};

/// One gate slot in a template: a kind, target qubits, and the range of
/// parameter-vector entries it consumes.
#[derive(Clone, PartialEq, Debug)]
pub struct TemplateGate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub first_slot: usize,
}

/// Ordered parameterized gates with a parameter-count contract. The leading
/// `frozen_prefix` parameters are excluded from optimization and carry their
/// values in `frozen_values` (reference states for the adaptive scheme).
#[derive(Clone, PartialEq, Debug)]
pub struct CircuitTemplate {
    pub m: usize,
    gates: Vec<TemplateGate>,
    n_params: usize,
    frozen_prefix: usize,
    frozen_values: Vec<f64>,
}

impl CircuitTemplate {
    fn new(m: usize) -> Self {
        Self {
            m,
            gates: Vec::new(),
            n_params: 0,
            frozen_prefix: 0,
            frozen_values: Vec::new(),
        }
    }

    pub fn gates(&self) -> &[TemplateGate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn frozen_prefix(&self) -> usize {
        self.frozen_prefix
    }

    pub fn frozen_values(&self) -> &[f64] {
        &self.frozen_values
    }

    /// Number of parameters the optimizer may vary.
    pub fn free_params(&self) -> usize {
        self.n_params - self.frozen_prefix
    }

    fn push(&mut self, kind: GateKind, qubits: Vec<usize>) -> usize {
        let first_slot = self.n_params;
        self.n_params += kind.param_count();
        self.gates.push(TemplateGate {
            kind,
            qubits,
            first_slot,
        });
        first_slot
    }

    /// Freezes the current leading `count` parameters at the given values.
    pub fn freeze_prefix(&mut self, count: usize, values: &[f64]) -> Result<()> {
        if count > self.n_params || values.len() != count {
            return Err(Error::Config(format!(
                "cannot freeze {count} of {} parameters with {} values",
                self.n_params,
                values.len()
            )));
        }
        self.frozen_prefix = count;
        self.frozen_values = values.to_vec();
        Ok(())
    }

    /// Appends `exp(i theta G)` for a Hermitian Pauli generator; returns the
    /// new parameter slot.
    pub fn append_rotation(&mut self, generator: Vec<(f64, PauliString)>) -> Result<usize> {
        // Validate via the gate constructor, then record as a template slot.
        let gate = GateOp::pauli_rotation(generator, 0.0)?;
        Ok(self.push(gate.kind, gate.qubits))
    }

    /// Full parameter vector assembled from frozen values and free values.
    pub fn assemble_params(&self, free: &[f64]) -> Result<Vec<f64>> {
        if free.len() != self.free_params() {
            return Err(Error::DimensionMismatch {
                expected: self.free_params(),
                got: free.len(),
            });
        }
        let mut params = Vec::with_capacity(self.n_params);
        params.extend_from_slice(&self.frozen_values);
        params.extend_from_slice(free);
        Ok(params)
    }

    /// Binds and executes from |0...0>; mixed state when noise is enabled.
    pub fn simulate(
        &self,
        params: &[f64],
        noise: &crate::simulator::NoiseModel,
    ) -> Result<crate::simulator::QuantumState> {
        let gates = self.bind(params)?;
        crate::simulator::run_circuit(self.m, &gates, noise)
    }

    /// Binds a full parameter vector into concrete gates.
    pub fn bind(&self, params: &[f64]) -> Result<Vec<GateOp>> {
        if params.len() != self.n_params {
            return Err(Error::DimensionMismatch {
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(self
            .gates
            .iter()
            .map(|g| GateOp {
                kind: g.kind.clone(),
                qubits: g.qubits.clone(),
                params: params[g.first_slot..g.first_slot + g.kind.param_count()].to_vec(),
            })
            .collect())
    }
}

/// Brickwork pair layout for one layer on `m` qubits.
fn brickwork_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..m - 1).step_by(2).map(|q| (q, q + 1)).collect();
    pairs.extend((1..m - 1).step_by(2).map(|q| (q, q + 1)));
    pairs
}

/// Initial excitations for the half-filled templates: one fermion per site
/// with alternating spin (site-major modes). Occupying a single site's two
/// modes instead leaves part of the register outside the brickwork light
/// cone and pins the reachable energy well above the target state.
pub fn initial_excitations(m: usize) -> Vec<usize> {
    (0..m / 2).map(|site| 2 * site + (site % 2)).collect()
}

/// Product of RY rotations, one per qubit. Produces only factorized states.
pub fn build_product(m: usize) -> CircuitTemplate {
    let mut tpl = CircuitTemplate::new(m);
    for q in 0..m {
        tpl.push(GateKind::Ry, vec![q]);
    }
    tpl
}

/// X gates on the lower half of the register, then one brickwork layer of
/// excitation-number-preserving fSim gates (2 params each).
pub fn build_fsim(m: usize, layers: usize) -> Result<CircuitTemplate> {
    if m % 2 != 0 {
        return Err(Error::Config(format!("fsim ansatz needs even m, got {m}")));
    }
    let mut tpl = CircuitTemplate::new(m);
    for q in initial_excitations(m) {
        tpl.push(GateKind::X, vec![q]);
    }
    for _ in 0..layers {
        for (a, b) in brickwork_pairs(m) {
            tpl.push(GateKind::Fsim, vec![a, b]);
        }
    }
    Ok(tpl)
}

/// X gates on the lower half, then cycles of 5-parameter two-qubit blocks
/// (sequential ZZ, XX, YY, XY, YX rotations). One cycle repeats the
/// alternating brickwork m/2 times; fewer rounds cannot spread amplitude
/// across the register and demonstrably cap the reachable energy.
pub fn build_ldca(m: usize, cycles: usize) -> Result<CircuitTemplate> {
    if m % 2 != 0 {
        return Err(Error::Config(format!("ldca ansatz needs even m, got {m}")));
    }
    let mut tpl = CircuitTemplate::new(m);
    for q in initial_excitations(m) {
        tpl.push(GateKind::X, vec![q]);
    }
    for _ in 0..cycles {
        for _ in 0..m / 2 {
            for (a, b) in brickwork_pairs(m) {
                tpl.push(GateKind::LdcaBlock, vec![a, b]);
            }
        }
    }
    Ok(tpl)
}

/// Builds a fixed template by its CLI name.
pub fn by_name(name: &str, m: usize) -> Result<CircuitTemplate> {
    match name {
        "product" => Ok(build_product(m)),
        "fsim" => build_fsim(m, 1),
        "ldca" => build_ldca(m, 1),
        other => Err(Error::Config(format!(
            "unknown ansatz '{other}' (expected product | fsim | ldca)"
        ))),
    }
}

/// Single-string rotation gate `exp(i theta P)`; identity strings are
/// rejected.
pub fn pauli_rotation(p: &PauliString, theta: f64) -> Result<GateOp> {
    GateOp::pauli_rotation(vec![(1.0, p.clone())], theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliSum;
    use crate::simulator::{run_circuit, NoiseModel, QuantumState};

    fn total_number_operator(m: usize) -> PauliSum {
        // sum_p n_p = m/2 - 1/2 sum_p Z_p
        let terms = (0..m)
            .map(|q| {
                let mut letters = vec![crate::pauli::Pauli::I; m];
                letters[q] = crate::pauli::Pauli::Z;
                (-0.5, PauliString::new(letters))
            })
            .collect::<Vec<_>>();
        PauliSum::from_real_terms(m, m as f64 / 2.0, terms).unwrap()
    }

    #[test]
    fn product_template_shape() {
        let tpl = build_product(4);
        assert_eq!(tpl.gates().len(), 4);
        assert_eq!(tpl.n_params(), 4);
    }

    #[test]
    fn product_all_zero_angles_is_vacuum() {
        let tpl = build_product(4);
        let gates = tpl.bind(&[0.0; 4]).unwrap();
        let state = run_circuit(4, &gates, &NoiseModel::off()).unwrap();
        match state {
            QuantumState::Pure { amps, .. } => assert!((amps[0].norm() - 1.0).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn product_pi_angles_prepare_fock_state() {
        let tpl = build_product(4);
        let gates = tpl
            .bind(&[std::f64::consts::PI, std::f64::consts::PI, 0.0, 0.0])
            .unwrap();
        let state = run_circuit(4, &gates, &NoiseModel::off()).unwrap();
        match state {
            QuantumState::Pure { amps, .. } => {
                assert!((amps[0b0011].norm() - 1.0).abs() < 1e-12)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn fsim_template_counts() {
        let tpl = build_fsim(4, 1).unwrap();
        let fsim_gates = tpl
            .gates()
            .iter()
            .filter(|g| g.kind == GateKind::Fsim)
            .count();
        assert_eq!(fsim_gates, 3); // pairs (0,1), (2,3), (1,2)
        assert_eq!(tpl.n_params(), 6);
        let tpl8 = build_fsim(8, 1).unwrap();
        assert_eq!(tpl8.n_params(), 14); // 7 brickwork pairs
        assert!(build_fsim(3, 1).is_err());
    }

    #[test]
    fn ldca_template_counts() {
        // One cycle = m/2 brickwork rounds of 5-parameter blocks.
        let tpl = build_ldca(4, 1).unwrap();
        let blocks = tpl
            .gates()
            .iter()
            .filter(|g| g.kind == GateKind::LdcaBlock)
            .count();
        assert_eq!(blocks, 6);
        assert_eq!(tpl.n_params(), 30);
        assert_eq!(build_ldca(8, 1).unwrap().n_params(), 4 * 7 * 5);
        assert!(build_ldca(5, 1).is_err());
    }

    #[test]
    fn zero_parameter_templates_prepare_half_filled_fock_state() {
        // Neel pattern on the dimer: modes 0 (site 0 up) and 3 (site 1 down).
        assert_eq!(initial_excitations(4), vec![0, 3]);
        assert_eq!(initial_excitations(8), vec![0, 3, 4, 7]);
        for tpl in [build_fsim(4, 1).unwrap(), build_ldca(4, 1).unwrap()] {
            let gates = tpl.bind(&vec![0.0; tpl.n_params()]).unwrap();
            let state = run_circuit(4, &gates, &NoiseModel::off()).unwrap();
            match state {
                QuantumState::Pure { amps, .. } => {
                    assert!((amps[0b1001].norm() - 1.0).abs() < 1e-12)
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn fsim_preserves_particle_number() {
        use rand::{Rng, SeedableRng};
        let m = 4;
        let tpl = build_fsim(m, 1).unwrap();
        let n_op = total_number_operator(m);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let params: Vec<f64> = (0..tpl.n_params())
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            let gates = tpl.bind(&params).unwrap();
            let state = run_circuit(m, &gates, &NoiseModel::off()).unwrap();
            let n = state.expectation(&n_op).unwrap();
            assert!((n - (m as f64) / 2.0).abs() < 1e-10, "<N> = {n}");
            // Also check the state has support only on half-filled basis states.
            match &state {
                QuantumState::Pure { amps, .. } => {
                    for (i, a) in amps.iter().enumerate() {
                        if i.count_ones() as usize != m / 2 {
                            assert!(a.norm() < 1e-10);
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn freezing_and_binding() {
        let mut tpl = build_product(3);
        tpl.freeze_prefix(3, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(tpl.free_params(), 0);
        let slot = tpl
            .append_rotation(vec![(1.0, "XYI".parse().unwrap())])
            .unwrap();
        assert_eq!(slot, 3);
        assert_eq!(tpl.free_params(), 1);
        let full = tpl.assemble_params(&[0.9]).unwrap();
        assert_eq!(full, vec![0.1, 0.2, 0.3, 0.9]);
        let gates = tpl.bind(&full).unwrap();
        assert_eq!(gates.len(), 4);
        assert_eq!(gates[3].params, vec![0.9]);
    }

    #[test]
    fn by_name_rejects_unknown() {
        assert!(by_name("uccsd", 4).is_err());
        assert!(by_name("product", 4).is_ok());
    }
}
