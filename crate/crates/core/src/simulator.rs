//! Circuit execution on statevectors (noiseless) or density matrices
//! (depolarizing noise), and observable evaluation, exact or with simulated
//! finite shots.
//!
//! Noise placement: one depolarizing channel after every elementary gate.
//! Single-qubit gates get the 1q channel at `p1`; two-qubit gates get the
//! tensor-product channel, i.e. the 1q channel at `p2` on each of the two
//! qubits. Composite blocks are decomposed first and each constituent
//! rotation is followed by its own channel.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::la;
use crate::pauli::{Pauli, PauliString, PauliSum};

/// Simulated register: amplitudes for pure states, a density matrix when a
/// noise channel is in play.
#[derive(Clone, Debug)]
pub enum QuantumState {
    Pure { m: usize, amps: DVector<Complex64> },
    Mixed { m: usize, rho: DMatrix<Complex64> },
}

impl QuantumState {
    pub fn zero_pure(m: usize) -> Self {
        let dim = 1usize << m;
        let mut amps = DVector::zeros(dim);
        amps[0] = Complex64::new(1.0, 0.0);
        QuantumState::Pure { m, amps }
    }

    pub fn zero_mixed(m: usize) -> Self {
        let dim = 1usize << m;
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        QuantumState::Mixed { m, rho }
    }

    /// Computational-basis Fock state with the given modes occupied.
    pub fn fock_pure(m: usize, occupied: &[usize]) -> Self {
        let dim = 1usize << m;
        let mut amps = DVector::zeros(dim);
        let idx = occupied.iter().fold(0usize, |acc, &q| acc | (1 << q));
        amps[idx] = Complex64::new(1.0, 0.0);
        QuantumState::Pure { m, amps }
    }

    pub fn from_amps(m: usize, amps: DVector<Complex64>) -> Result<Self> {
        if amps.len() != 1 << m {
            return Err(Error::DimensionMismatch {
                expected: 1 << m,
                got: amps.len(),
            });
        }
        Ok(QuantumState::Pure { m, amps })
    }

    pub fn m(&self) -> usize {
        match self {
            QuantumState::Pure { m, .. } | QuantumState::Mixed { m, .. } => *m,
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, QuantumState::Mixed { .. })
    }

    /// Promotes a pure state to its density matrix; mixed states pass through.
    pub fn to_mixed(&self) -> QuantumState {
        match self {
            QuantumState::Mixed { .. } => self.clone(),
            QuantumState::Pure { m, amps } => {
                let rho = amps * amps.adjoint();
                QuantumState::Mixed { m: *m, rho }
            }
        }
    }

    /// Norm / trace / hermiticity / positivity checks, for tests.
    pub fn validate(&self) -> Result<()> {
        match self {
            QuantumState::Pure { amps, .. } => {
                let n = amps.norm();
                if (n - 1.0).abs() > 1e-10 {
                    return Err(Error::Config(format!("statevector norm {n} != 1")));
                }
            }
            QuantumState::Mixed { rho, .. } => {
                let tr: Complex64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
                if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
                    return Err(Error::Config(format!("density matrix trace {tr} != 1")));
                }
                let herm = (rho - rho.adjoint()).norm();
                if herm > 1e-10 {
                    return Err(Error::Hermiticity(format!(
                        "density matrix hermiticity residual {herm:.3e}"
                    )));
                }
                let (vals, _) = la::hermitian_eigen_asc(rho);
                if vals[0] < -1e-9 {
                    return Err(Error::Config(format!(
                        "density matrix has eigenvalue {:.3e}",
                        vals[0]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact expectation value of a Pauli sum, including its offset.
    pub fn expectation(&self, o: &PauliSum) -> Result<f64> {
        if o.m() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: o.m(),
            });
        }
        let mut total = Complex64::new(o.offset(), 0.0);
        match self {
            QuantumState::Pure { amps, .. } => {
                for (coeff, string) in o.terms() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..amps.len() {
                        let a = amps[i];
                        if a.norm_sqr() == 0.0 {
                            continue;
                        }
                        let (j, phase) = string.action(i);
                        acc += amps[j].conj() * phase * a;
                    }
                    total += acc * *coeff;
                }
            }
            QuantumState::Mixed { rho, .. } => {
                for (coeff, string) in o.terms() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..rho.nrows() {
                        let (sj, phase) = string.action(j);
                        acc += phase * rho[(j, sj)];
                    }
                    total += acc * *coeff;
                }
            }
        }
        debug_assert!(total.im.abs() < 1e-9, "imaginary expectation {}", total.im);
        Ok(total.re)
    }
}

/// Gate kinds. `PauliRot` implements `exp(i theta G)` for a Hermitian
/// generator `G = sum_k c_k P_k`; LDCA blocks decompose into five two-qubit
/// Pauli rotations.
#[derive(Clone, PartialEq, Debug)]
pub enum GateKind {
    X,
    Ry,
    Fsim,
    LdcaBlock,
    PauliRot { generator: Vec<(f64, PauliString)> },
}

impl GateKind {
    pub fn param_count(&self) -> usize {
        match self {
            GateKind::X => 0,
            GateKind::Ry | GateKind::PauliRot { .. } => 1,
            GateKind::Fsim => 2,
            GateKind::LdcaBlock => 5,
        }
    }
}

/// A gate bound to target qubits and concrete angles. For two-qubit gates the
/// first listed qubit is the low bit of the local 4x4 basis.
#[derive(Clone, PartialEq, Debug)]
pub struct GateOp {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

impl GateOp {
    pub fn x(q: usize) -> Self {
        GateOp {
            kind: GateKind::X,
            qubits: vec![q],
            params: vec![],
        }
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        GateOp {
            kind: GateKind::Ry,
            qubits: vec![q],
            params: vec![theta],
        }
    }

    pub fn fsim(a: usize, b: usize, theta: f64, phi: f64) -> Self {
        GateOp {
            kind: GateKind::Fsim,
            qubits: vec![a, b],
            params: vec![theta, phi],
        }
    }

    pub fn ldca_block(a: usize, b: usize, params: [f64; 5]) -> Self {
        GateOp {
            kind: GateKind::LdcaBlock,
            qubits: vec![a, b],
            params: params.to_vec(),
        }
    }

    /// `exp(i theta G)` for a Hermitian Pauli generator. The identity string
    /// is rejected; target qubits are the generator's support.
    pub fn pauli_rotation(generator: Vec<(f64, PauliString)>, theta: f64) -> Result<Self> {
        let mut support: Vec<usize> = Vec::new();
        for (_, s) in &generator {
            for q in s.support() {
                if !support.contains(&q) {
                    support.push(q);
                }
            }
        }
        support.sort_unstable();
        if support.is_empty() {
            return Err(Error::Config(
                "pauli rotation generator must be non-identity".into(),
            ));
        }
        Ok(GateOp {
            kind: GateKind::PauliRot { generator },
            qubits: support,
            params: vec![theta],
        })
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        for (i, &q) in self.qubits.iter().enumerate() {
            if q >= m {
                return Err(Error::Config(format!("qubit {q} out of range for m={m}")));
            }
            if self.qubits[..i].contains(&q) {
                return Err(Error::Config(format!("duplicate qubit {q} in gate")));
            }
        }
        if self.params.len() != self.kind.param_count() {
            return Err(Error::Config(format!(
                "gate expects {} params, got {}",
                self.kind.param_count(),
                self.params.len()
            )));
        }
        Ok(())
    }
}

/// Depolarizing noise parameters: `p1` after one-qubit gates, `p2` per qubit
/// inside the two-qubit channel.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub enabled: bool,
}

/// Randomized-benchmarking error rates for the reference superconducting
/// device (Sycamore, 2019): 0.16% one-qubit, 0.6% two-qubit.
pub const RB_EPS1_REFERENCE: f64 = 0.0016;
pub const RB_EPS2_REFERENCE: f64 = 0.006;

impl NoiseModel {
    pub fn off() -> Self {
        NoiseModel {
            p1: 0.0,
            p2: 0.0,
            enabled: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p1, self.p2] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("depolarizing probability {p}")));
            }
        }
        Ok(())
    }

    /// Scales the reference RB rates by `r` and converts; `r = 0` disables
    /// noise entirely.
    pub fn reference_scaled(r: f64) -> Result<Self> {
        if r == 0.0 {
            return Ok(NoiseModel::off());
        }
        rb_to_depolarizing(r * RB_EPS1_REFERENCE, r * RB_EPS2_REFERENCE)
    }
}

/// Converts RB error rates to depolarizing probabilities using
/// `p = (1 + 1/d)^-1`-style subspace scaling: `p1 = 3/2 eps1`,
/// `p2 = 1 - sqrt(1 - 5/4 eps2)`.
pub fn rb_to_depolarizing(eps1: f64, eps2: f64) -> Result<NoiseModel> {
    if eps1 < 0.0 || eps2 < 0.0 {
        return Err(Error::Domain(format!("negative RB rate ({eps1}, {eps2})")));
    }
    if eps2 > 0.8 {
        return Err(Error::Domain(format!(
            "eps2 = {eps2} puts the radicand below zero"
        )));
    }
    let model = NoiseModel {
        p1: 1.5 * eps1,
        p2: 1.0 - (1.0 - 1.25 * eps2).sqrt(),
        enabled: true,
    };
    model.validate()?;
    Ok(model)
}

/// Local basis index mask helpers for gate application.
fn support_mask(qs: &[usize]) -> usize {
    qs.iter().fold(0usize, |acc, &q| acc | (1 << q))
}

fn embed(base: usize, qs: &[usize], pattern: usize) -> usize {
    let mut idx = base;
    for (t, &q) in qs.iter().enumerate() {
        if (pattern >> t) & 1 == 1 {
            idx |= 1 << q;
        }
    }
    idx
}

fn apply_unitary_to_vector(amps: &mut DVector<Complex64>, u: &DMatrix<Complex64>, qs: &[usize]) {
    let k = qs.len();
    let block = 1usize << k;
    let mask = support_mask(qs);
    let dim = amps.len();
    let mut gathered = vec![Complex64::new(0.0, 0.0); block];
    for base in 0..dim {
        if base & mask != 0 {
            continue;
        }
        for p in 0..block {
            gathered[p] = amps[embed(base, qs, p)];
        }
        for (row, g) in (0..block).map(|row| {
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..block {
                acc += u[(row, col)] * gathered[col];
            }
            (row, acc)
        }) {
            amps[embed(base, qs, row)] = g;
        }
    }
}

/// `rho -> U rho U'` over the support qubits.
fn conjugate_density(rho: &mut DMatrix<Complex64>, u: &DMatrix<Complex64>, qs: &[usize]) {
    let dim = rho.nrows();
    let k = qs.len();
    let block = 1usize << k;
    let mask = support_mask(qs);
    let mut gathered = vec![Complex64::new(0.0, 0.0); block];
    // Left multiply: act on the row index of each column.
    for col in 0..dim {
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            for p in 0..block {
                gathered[p] = rho[(embed(base, qs, p), col)];
            }
            for row in 0..block {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..block {
                    acc += u[(row, c)] * gathered[c];
                }
                rho[(embed(base, qs, row), col)] = acc;
            }
        }
    }
    // Right multiply by U': act on the column index of each row with conj(U).
    for row in 0..dim {
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            for p in 0..block {
                gathered[p] = rho[(row, embed(base, qs, p))];
            }
            for colp in 0..block {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..block {
                    acc += u[(colp, c)].conj() * gathered[c];
                }
                rho[(row, embed(base, qs, colp))] = acc;
            }
        }
    }
}

/// One-qubit depolarizing channel at probability `p` on qubit `q`, in place.
/// Populations relax at rate 2p/3 toward the bit-flipped pair; coherences
/// involving qubit `q` are damped by (1 - 4p/3).
fn depolarize_qubit(rho: &mut DMatrix<Complex64>, q: usize, p: f64) {
    let dim = rho.nrows();
    let bit = 1usize << q;
    let keep = 1.0 - 2.0 * p / 3.0;
    let mix = 2.0 * p / 3.0;
    let damp = 1.0 - 4.0 * p / 3.0;
    for a in 0..dim {
        if a & bit != 0 {
            continue;
        }
        let a1 = a | bit;
        for b in 0..dim {
            if b & bit != 0 {
                continue;
            }
            let b1 = b | bit;
            let v00 = rho[(a, b)];
            let v11 = rho[(a1, b1)];
            rho[(a, b)] = v00.scale(keep) + v11.scale(mix);
            rho[(a1, b1)] = v11.scale(keep) + v00.scale(mix);
            rho[(a1, b)] = rho[(a1, b)].scale(damp);
            rho[(a, b1)] = rho[(a, b1)].scale(damp);
        }
    }
}

/// Dense local matrix of a Pauli generator over `support` qubits.
fn local_generator(generator: &[(f64, PauliString)], support: &[usize]) -> DMatrix<Complex64> {
    let k = support.len();
    let block = 1usize << k;
    let mut g = DMatrix::<Complex64>::zeros(block, block);
    for (coeff, string) in generator {
        for col in 0..block {
            let mut row = col;
            let mut phase = Complex64::new(1.0, 0.0);
            for (t, &q) in support.iter().enumerate() {
                let b = (col >> t) & 1;
                match string.letter(q) {
                    Pauli::I => {}
                    Pauli::X => row ^= 1 << t,
                    Pauli::Y => {
                        row ^= 1 << t;
                        phase *= if b == 0 {
                            Complex64::new(0.0, 1.0)
                        } else {
                            Complex64::new(0.0, -1.0)
                        };
                    }
                    Pauli::Z => {
                        if b == 1 {
                            phase = -phase;
                        }
                    }
                }
            }
            g[(row, col)] += phase * *coeff;
        }
    }
    g
}

/// Local unitary matrix of an elementary (non-composite) gate.
pub fn local_unitary(gate: &GateOp) -> Result<DMatrix<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match &gate.kind {
        GateKind::X => Ok(DMatrix::from_row_slice(2, 2, &[zero, one, one, zero])),
        GateKind::Ry => {
            let half = gate.params[0] / 2.0;
            let c = Complex64::new(half.cos(), 0.0);
            let s = Complex64::new(half.sin(), 0.0);
            Ok(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
        }
        GateKind::Fsim => {
            let theta = gate.params[0];
            let phi = gate.params[1];
            let c = Complex64::new(theta.cos(), 0.0);
            let ms = Complex64::new(0.0, -theta.sin());
            let ph = Complex64::new(phi.cos(), -phi.sin());
            let mut u = DMatrix::zeros(4, 4);
            u[(0, 0)] = one;
            u[(1, 1)] = c;
            u[(1, 2)] = ms;
            u[(2, 1)] = ms;
            u[(2, 2)] = c;
            u[(3, 3)] = ph;
            Ok(u)
        }
        GateKind::PauliRot { generator } => {
            let g = local_generator(generator, &gate.qubits);
            let theta = gate.params[0];
            let (vals, vecs) = la::hermitian_eigen_asc(&g);
            let phases = DMatrix::from_diagonal(&DVector::from_iterator(
                vals.len(),
                vals.iter()
                    .map(|&l| Complex64::new(0.0, theta * l).exp()),
            ));
            Ok(&vecs * phases * vecs.adjoint())
        }
        GateKind::LdcaBlock => Err(Error::Config(
            "ldca block must be decomposed before matrix construction".into(),
        )),
    }
}

/// Expands an LDCA block into its five two-qubit Pauli rotations
/// `exp(-i theta_k PP'/2)` in the order ZZ, XX, YY, XY, YX.
fn ldca_constituents(gate: &GateOp, m: usize) -> Vec<GateOp> {
    let a = gate.qubits[0];
    let b = gate.qubits[1];
    let pairs = [
        (Pauli::Z, Pauli::Z),
        (Pauli::X, Pauli::X),
        (Pauli::Y, Pauli::Y),
        (Pauli::X, Pauli::Y),
        (Pauli::Y, Pauli::X),
    ];
    pairs
        .iter()
        .zip(&gate.params)
        .map(|(&(pa, pb), &theta)| {
            let s = PauliString::from_sparse(m, &[(a, pa), (b, pb)]);
            GateOp::pauli_rotation(vec![(-0.5, s)], theta).expect("non-identity by construction")
        })
        .collect()
}

/// Applies a gate, then (when noise is enabled) the depolarizing channel that
/// matches the gate's arity. With noise enabled the state must be mixed.
pub fn apply_gate(state: &mut QuantumState, gate: &GateOp, noise: &NoiseModel) -> Result<()> {
    let m = state.m();
    gate.validate(m)?;
    if noise.enabled && !state.is_mixed() {
        return Err(Error::Config(
            "noisy simulation requires a density-matrix state".into(),
        ));
    }
    if gate.kind == GateKind::LdcaBlock {
        for sub in ldca_constituents(gate, m) {
            apply_gate(state, &sub, noise)?;
        }
        return Ok(());
    }
    let u = local_unitary(gate)?;
    match state {
        QuantumState::Pure { amps, .. } => apply_unitary_to_vector(amps, &u, &gate.qubits),
        QuantumState::Mixed { rho, .. } => {
            conjugate_density(rho, &u, &gate.qubits);
            if noise.enabled {
                match gate.qubits.len() {
                    1 => depolarize_qubit(rho, gate.qubits[0], noise.p1),
                    2 => {
                        depolarize_qubit(rho, gate.qubits[0], noise.p2);
                        depolarize_qubit(rho, gate.qubits[1], noise.p2);
                    }
                    n => {
                        return Err(Error::Config(format!(
                            "no noise channel defined for {n}-qubit gates"
                        )))
                    }
                }
            }
        }
    }
    Ok(())
}

/// Runs a bound gate list from |0...0>, pure or mixed per the noise flag.
pub fn run_circuit(m: usize, gates: &[GateOp], noise: &NoiseModel) -> Result<QuantumState> {
    let mut state = if noise.enabled {
        QuantumState::zero_mixed(m)
    } else {
        QuantumState::zero_pure(m)
    };
    for gate in gates {
        apply_gate(&mut state, gate, noise)?;
    }
    Ok(state)
}

/// Applies a weighted Pauli-string sum to a statevector.
pub fn apply_weighted_strings(
    terms: &[(f64, PauliString)],
    amps: &DVector<Complex64>,
) -> DVector<Complex64> {
    let mut out = DVector::zeros(amps.len());
    for (coeff, string) in terms {
        for i in 0..amps.len() {
            let a = amps[i];
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (j, phase) = string.action(i);
            out[j] += phase * a * *coeff;
        }
    }
    out
}

/// Applies a Pauli sum (terms + offset) to a statevector.
pub fn apply_pauli_sum(o: &PauliSum, amps: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = apply_weighted_strings(o.terms(), amps);
    out += amps.scale(o.offset());
    out
}

/// Left-multiplies a density matrix by a Pauli sum: `o * rho`.
pub fn apply_pauli_sum_left(o: &PauliSum, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let mut out = rho.scale(o.offset());
    for (coeff, string) in o.terms() {
        for i in 0..dim {
            let (si, phase) = string.action(i);
            for j in 0..dim {
                out[(si, j)] += phase * rho[(i, j)] * *coeff;
            }
        }
    }
    out
}

/// `Tr(mat * P)` for a single Pauli string.
pub fn trace_with_string(mat: &DMatrix<Complex64>, string: &PauliString) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..mat.nrows() {
        let (sj, phase) = string.action(j);
        acc += phase * mat[(j, sj)];
    }
    acc
}

/// Finite-shot estimate of `<o>`: each term's expectation is sampled as
/// `k ~ Binomial(n_i, (1 + <P_i>)/2)` and estimated by `2k/n_i - 1`.
/// Deterministic given the seed.
pub fn sampled_expectation(
    state: &QuantumState,
    o: &PauliSum,
    alloc: &[u64],
    seed: u64,
) -> Result<f64> {
    if alloc.len() != o.len() {
        return Err(Error::ShotAllocation(format!(
            "allocation has {} entries for {} terms",
            alloc.len(),
            o.len()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = o.offset();
    for ((coeff, string), &shots) in o.terms().iter().zip(alloc) {
        if shots == 0 {
            return Err(Error::ShotAllocation(format!(
                "zero shots allocated to term {string} with weight {coeff}"
            )));
        }
        let single = PauliSum::from_real_terms(o.m(), 0.0, vec![(1.0, string.clone())])?;
        let exact = state.expectation(&single)?;
        let p = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
        let k = Binomial::new(shots, p)
            .map_err(|e| Error::Domain(format!("binomial: {e}")))?
            .sample(&mut rng);
        let estimate = 2.0 * (k as f64) / (shots as f64) - 1.0;
        total += coeff * estimate;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn x_flips_zero_to_one() {
        let mut state = QuantumState::zero_pure(1);
        apply_gate(&mut state, &GateOp::x(0), &NoiseModel::off()).unwrap();
        match state {
            QuantumState::Pure { amps, .. } => {
                assert!((amps[1] - c(1.0, 0.0)).norm() < 1e-14);
                assert!(amps[0].norm() < 1e-14);
            }
            _ => panic!("expected pure"),
        }
    }

    #[test]
    fn identity_ry_with_noise_gives_closed_form_populations() {
        let p1 = 0.06;
        let noise = NoiseModel {
            p1,
            p2: 0.0,
            enabled: true,
        };
        let mut state = QuantumState::zero_mixed(1);
        apply_gate(&mut state, &GateOp::ry(0, 0.0), &noise).unwrap();
        match state {
            QuantumState::Mixed { rho, .. } => {
                assert!((rho[(0, 0)].re - (1.0 - 2.0 * p1 / 3.0)).abs() < 1e-14);
                assert!((rho[(1, 1)].re - 2.0 * p1 / 3.0).abs() < 1e-14);
            }
            _ => panic!("expected mixed"),
        }
    }

    #[test]
    fn maximally_mixed_state_is_a_fixed_point() {
        let m = 2;
        let dim = 1 << m;
        let rho = DMatrix::from_diagonal_element(dim, dim, c(1.0 / dim as f64, 0.0));
        let mut state = QuantumState::Mixed { m, rho: rho.clone() };
        let noise = NoiseModel {
            p1: 0.1,
            p2: 0.2,
            enabled: true,
        };
        apply_gate(&mut state, &GateOp::fsim(0, 1, 0.3, 0.7), &noise).unwrap();
        apply_gate(&mut state, &GateOp::ry(0, 1.1), &noise).unwrap();
        match state {
            QuantumState::Mixed { rho: out, .. } => assert!((out - rho).norm() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn rb_conversion_matches_formulas() {
        let n = rb_to_depolarizing(0.0, 0.0).unwrap();
        assert_eq!((n.p1, n.p2), (0.0, 0.0));
        let n = rb_to_depolarizing(0.0016, 0.006).unwrap();
        assert!((n.p1 - 0.0024).abs() < 1e-15);
        assert!((n.p2 - 0.003757057741).abs() < 1e-10);
        assert!(rb_to_depolarizing(0.0, 0.81).is_err());
        // Linear scaling of the inputs.
        let r = 0.01;
        let s = NoiseModel::reference_scaled(r).unwrap();
        assert!((s.p1 - 1.5 * r * 0.0016).abs() < 1e-15);
    }

    #[test]
    fn expectation_offset_only() {
        let state = QuantumState::zero_pure(2);
        let o = PauliSum::from_real_terms(2, 0.75, vec![]).unwrap();
        assert_eq!(state.expectation(&o).unwrap(), 0.75);
    }

    #[test]
    fn number_operator_on_fock_state() {
        // <n_0> on |10> (mode 0 occupied): n_0 = (1 - Z_0)/2.
        let state = QuantumState::fock_pure(2, &[0]);
        let o = PauliSum::from_real_terms(
            2,
            0.5,
            vec![(-0.5, "ZI".parse().unwrap())],
        )
        .unwrap();
        assert!((state.expectation(&o).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_and_mixed_noiseless_agree() {
        let gates = vec![
            GateOp::x(0),
            GateOp::ry(1, 0.7),
            GateOp::fsim(0, 1, 0.4, 0.9),
            GateOp::ldca_block(1, 2, [0.1, 0.2, 0.3, 0.4, 0.5]),
        ];
        let pure = run_circuit(3, &gates, &NoiseModel::off()).unwrap();
        let mut mixed = QuantumState::zero_mixed(3);
        for g in &gates {
            apply_gate(&mut mixed, g, &NoiseModel::off()).unwrap();
        }
        let o = PauliSum::from_real_terms(
            3,
            0.1,
            vec![
                (0.5, "XZX".parse().unwrap()),
                (-0.25, "ZZI".parse().unwrap()),
                (0.3, "IYY".parse().unwrap()),
            ],
        )
        .unwrap();
        let a = pure.expectation(&o).unwrap();
        let b = mixed.expectation(&o).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn gates_are_unitary() {
        let cases = vec![
            (GateOp::ry(0, 0.83), GateOp::ry(0, -0.83)),
            (GateOp::x(1), GateOp::x(1)),
            (GateOp::fsim(0, 2, 0.5, 1.2), GateOp::fsim(0, 2, -0.5, -1.2)),
            (
                GateOp::pauli_rotation(
                    vec![
                        (1.0, "XXI".parse().unwrap()),
                        (1.0, "YYI".parse().unwrap()),
                    ],
                    0.37,
                )
                .unwrap(),
                GateOp::pauli_rotation(
                    vec![
                        (1.0, "XXI".parse().unwrap()),
                        (1.0, "YYI".parse().unwrap()),
                    ],
                    -0.37,
                )
                .unwrap(),
            ),
        ];
        for (g, ginv) in cases {
            let mut state = run_circuit(
                3,
                &[GateOp::ry(0, 0.3), GateOp::ry(1, 1.1), GateOp::ry(2, -0.4)],
                &NoiseModel::off(),
            )
            .unwrap();
            let reference = state.clone();
            apply_gate(&mut state, &g, &NoiseModel::off()).unwrap();
            apply_gate(&mut state, &ginv, &NoiseModel::off()).unwrap();
            match (&state, &reference) {
                (QuantumState::Pure { amps: a, .. }, QuantumState::Pure { amps: b, .. }) => {
                    assert!((a - b).norm() < 1e-10)
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn channel_preserves_trace_and_positivity() {
        let noise = NoiseModel {
            p1: 0.05,
            p2: 0.08,
            enabled: true,
        };
        let gates = vec![
            GateOp::ry(0, 0.9),
            GateOp::fsim(0, 1, 0.6, 0.2),
            GateOp::ldca_block(0, 1, [0.3, -0.2, 0.5, 0.1, -0.4]),
        ];
        let state = run_circuit(2, &gates, &noise).unwrap();
        state.validate().unwrap();
    }

    #[test]
    fn pauli_rotation_rejects_identity() {
        let gen = vec![(1.0, PauliString::identity(2))];
        assert!(GateOp::pauli_rotation(gen, 0.1).is_err());
    }

    #[test]
    fn pauli_rotation_z_phase_on_basis_states() {
        // exp(i (pi/2) Z0) maps |0> -> i|0>, |1> -> -i|1>.
        let g = GateOp::pauli_rotation(
            vec![(1.0, "ZI".parse().unwrap())],
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let mut state = QuantumState::zero_pure(2);
        apply_gate(&mut state, &g, &NoiseModel::off()).unwrap();
        match &state {
            QuantumState::Pure { amps, .. } => {
                assert!((amps[0] - c(0.0, 1.0)).norm() < 1e-12)
            }
            _ => unreachable!(),
        }
        let mut state = QuantumState::fock_pure(2, &[0]);
        apply_gate(&mut state, &g, &NoiseModel::off()).unwrap();
        match &state {
            QuantumState::Pure { amps, .. } => {
                assert!((amps[1] - c(0.0, -1.0)).norm() < 1e-12)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn zero_angle_rotation_is_identity() {
        let g = GateOp::pauli_rotation(vec![(1.0, "XY".parse().unwrap())], 0.0).unwrap();
        let u = local_unitary(&g).unwrap();
        assert!((u - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn sampling_on_term_eigenstate_is_exact() {
        // |00> is a Z0Z1 eigenstate; any allocation reproduces the exact value.
        let state = QuantumState::zero_pure(2);
        let o = PauliSum::from_real_terms(2, -0.5, vec![(0.7, "ZZ".parse().unwrap())]).unwrap();
        for seed in 0..5 {
            let v = sampled_expectation(&state, &o, &[17], seed).unwrap();
            assert!((v - 0.2).abs() < 1e-15, "seed {seed}: {v}");
        }
    }

    #[test]
    fn sampling_rejects_zero_shot_terms() {
        let state = QuantumState::zero_pure(2);
        let o = PauliSum::from_real_terms(2, 0.0, vec![(0.7, "ZZ".parse().unwrap())]).unwrap();
        assert!(matches!(
            sampled_expectation(&state, &o, &[0], 1),
            Err(Error::ShotAllocation(_))
        ));
    }

    #[test]
    fn noisy_gate_on_pure_state_is_an_error() {
        let mut state = QuantumState::zero_pure(1);
        let noise = NoiseModel {
            p1: 0.1,
            p2: 0.1,
            enabled: true,
        };
        assert!(apply_gate(&mut state, &GateOp::x(0), &noise).is_err());
    }
}
