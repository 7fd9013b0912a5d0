//! Qubit-ADAPT circuit growth with commutator-gradient operator selection,
//! composed with the orbital-update loop into the adaptive scheme (NOA-VQE).

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_product, CircuitTemplate};
use crate::encoding::jordan_wigner;
use crate::error::{Error, Result};
use crate::hamiltonian::{rotate_tensors, FermionTensors, OrbitalRotation};
use crate::noization::{
    matrix_rows, measure_1rdm, natural_orbital_transform, NoizationStep, NoizationTrace, RdmMode,
    ENERGY_CONVERGENCE_TOL,
};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::seeding::derive_seed;
use crate::simulator::{
    apply_pauli_sum, apply_pauli_sum_left, apply_weighted_strings, trace_with_string, NoiseModel,
    QuantumState,
};
use crate::vqe::{run_vqe, run_vqe_warm, ShotBudget, VqeResult};

/// Growth stops once the largest pool gradient falls below this.
pub const GRADIENT_STOP_TOL: f64 = 1e-4;

/// One Hermitian pool generator (one or two Pauli strings).
#[derive(Clone, PartialEq, Debug)]
pub struct PoolGenerator {
    pub label: String,
    pub terms: Vec<(f64, PauliString)>,
}

/// The qubit-ADAPT operator pool. Enumeration order (normative for
/// tie-breaking and audit logs):
/// 1. `X_i X_j + Y_i Y_j` for all `i < j`,
/// 2. `X_i Y_j` for all ordered pairs `i != j` (the two orientations are
///    distinct operators),
/// 3. `Z_i Z_j` for all `i < j`,
/// 4. `X_i`, then `Y_i`, then `Z_i` for all `i`.
///
/// Size: `4 * C(m,2) + 3m`.
#[derive(Clone, Debug)]
pub struct OperatorPool {
    pub m: usize,
    generators: Vec<PoolGenerator>,
}

impl OperatorPool {
    pub fn standard(m: usize) -> Self {
        let mut generators = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                generators.push(PoolGenerator {
                    label: format!("X{i}X{j}+Y{i}Y{j}"),
                    terms: vec![
                        (1.0, PauliString::from_sparse(m, &[(i, Pauli::X), (j, Pauli::X)])),
                        (1.0, PauliString::from_sparse(m, &[(i, Pauli::Y), (j, Pauli::Y)])),
                    ],
                });
            }
        }
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                generators.push(PoolGenerator {
                    label: format!("X{i}Y{j}"),
                    terms: vec![(
                        1.0,
                        PauliString::from_sparse(m, &[(i, Pauli::X), (j, Pauli::Y)]),
                    )],
                });
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                generators.push(PoolGenerator {
                    label: format!("Z{i}Z{j}"),
                    terms: vec![(
                        1.0,
                        PauliString::from_sparse(m, &[(i, Pauli::Z), (j, Pauli::Z)]),
                    )],
                });
            }
        }
        for letter in [Pauli::X, Pauli::Y, Pauli::Z] {
            for i in 0..m {
                generators.push(PoolGenerator {
                    label: format!("{}{i}", letter.to_char()),
                    terms: vec![(1.0, PauliString::from_sparse(m, &[(i, letter)]))],
                });
            }
        }
        debug_assert_eq!(generators.len(), Self::expected_size(m));
        Self { m, generators }
    }

    pub fn expected_size(m: usize) -> usize {
        4 * m * (m - 1) / 2 + 3 * m
    }

    pub fn generators(&self) -> &[PoolGenerator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Commutator gradients `G_k = |<[H, P_k]>|`, computed exactly on the
/// simulated state (pure or mixed).
pub fn pool_gradients(state: &QuantumState, h: &PauliSum, pool: &OperatorPool) -> Result<Vec<f64>> {
    if h.m() != state.m() || pool.m != state.m() {
        return Err(Error::DimensionMismatch {
            expected: state.m(),
            got: h.m().max(pool.m),
        });
    }
    match state {
        QuantumState::Pure { amps, .. } => {
            let h_psi: DVector<Complex64> = apply_pauli_sum(h, amps);
            Ok(pool
                .generators
                .iter()
                .map(|g| {
                    let g_psi = apply_weighted_strings(&g.terms, amps);
                    2.0 * h_psi.dotc(&g_psi).im.abs()
                })
                .collect())
        }
        QuantumState::Mixed { rho, .. } => {
            let h_rho = apply_pauli_sum_left(h, rho);
            Ok(pool
                .generators
                .iter()
                .map(|g| {
                    let z: Complex64 = g
                        .terms
                        .iter()
                        .map(|(c, s)| trace_with_string(&h_rho, s) * *c)
                        .sum();
                    2.0 * z.im.abs()
                })
                .collect())
        }
    }
}

/// Optimizes a product (RY wall) circuit and freezes its parameters as the
/// reference state for circuit growth.
pub fn build_reference(
    m: usize,
    h: &PauliSum,
    budget: &ShotBudget,
    noise: &NoiseModel,
    seed: u64,
) -> Result<(CircuitTemplate, VqeResult)> {
    let tpl = build_product(m);
    let result = run_vqe(h, &tpl, budget, noise, seed)?;
    let mut frozen = tpl;
    frozen.freeze_prefix(m, &result.best_params)?;
    Ok((frozen, result))
}

/// Audit record for one accepted operator addition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub step: usize,
    pub pool_index: usize,
    pub label: String,
    pub gradient: f64,
    pub energy: f64,
}

/// Outcome of one adaptive circuit construction.
pub struct AdaptOutcome {
    pub template: CircuitTemplate,
    pub result: VqeResult,
    pub growth: Vec<GrowthRecord>,
}

/// Grows the circuit by repeatedly appending `exp(i theta P)` for the
/// highest-gradient pool generator (ties broken by lowest pool index) and
/// reoptimizing the non-frozen parameters warm-started from the previous
/// optimum (new angle at zero). Stops after `max_ops` additions or when the
/// largest gradient falls below [`GRADIENT_STOP_TOL`].
pub fn adapt_vqe(
    h: &PauliSum,
    reference: &CircuitTemplate,
    pool: &OperatorPool,
    max_ops: usize,
    budget: &ShotBudget,
    noise: &NoiseModel,
    seed: u64,
) -> Result<AdaptOutcome> {
    let mut tpl = reference.clone();
    let mut free: Vec<f64> = Vec::new();
    let mut growth: Vec<GrowthRecord> = Vec::new();

    let reference_params = tpl.assemble_params(&free)?;
    let reference_state = tpl.simulate(&reference_params, noise)?;
    let mut best = VqeResult {
        best_params: reference_params,
        best_energy: reference_state.expectation(h)?,
        trace: Vec::new(),
        evaluations_used: 0,
        optimizer: crate::vqe::OPTIMIZER_NAME.to_string(),
        sampled: !budget.exact_mode,
    };

    for step in 1..=max_ops {
        let params = tpl.assemble_params(&free)?;
        let state = tpl.simulate(&params, noise)?;
        let grads = pool_gradients(&state, h, pool)?;
        let (k, gmax) = grads
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        if gmax < GRADIENT_STOP_TOL {
            break;
        }
        tpl.append_rotation(pool.generators[k].terms.clone())?;
        let mut warm = free.clone();
        warm.push(0.0);
        let result = run_vqe_warm(h, &tpl, budget, noise, derive_seed(seed, step as u64), &warm)?;
        free = result.best_params[tpl.frozen_prefix()..].to_vec();
        growth.push(GrowthRecord {
            step,
            pool_index: k,
            label: pool.generators[k].label.clone(),
            gradient: gmax,
            energy: result.best_energy,
        });
        best = result;
    }
    Ok(AdaptOutcome {
        template: tpl,
        result: best,
        growth,
    })
}

/// The adaptive orbital-update scheme: K repetitions of
/// {reference VQE, circuit growth, 1-RDM measurement, basis rotation},
/// rebuilding the circuit from scratch at every step.
pub fn noa_vqe(
    h0: &FermionTensors,
    k: usize,
    max_ops: usize,
    budget: &ShotBudget,
    noise: &NoiseModel,
    seed: u64,
) -> Result<NoizationTrace> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let m = h0.m;
    let pool = OperatorPool::standard(m);
    let initial_obs = jordan_wigner(h0)?;
    let mut trace = NoizationTrace {
        m,
        initial_one_norm: initial_obs.one_norm(),
        initial_term_count: initial_obs.len(),
        initial_weights: initial_obs.weight_distribution(),
        steps: Vec::new(),
        early_stopped_at: None,
    };
    let mut h = h0.clone();
    let mut cumulative = OrbitalRotation::identity(m);
    let mut prev_energy: Option<f64> = None;

    for step in 0..k {
        let step_seed = derive_seed(seed, step as u64);
        let obs = jordan_wigner(&h)?;
        let (reference, ref_result) =
            build_reference(m, &obs, budget, noise, derive_seed(step_seed, 0))?;
        let adapt = adapt_vqe(
            &obs,
            &reference,
            &pool,
            max_ops,
            budget,
            noise,
            derive_seed(step_seed, 1),
        )?;
        let state = adapt.template.simulate(&adapt.result.best_params, noise)?;
        let mode = if budget.exact_mode {
            RdmMode::Exact
        } else {
            RdmMode::Sampled {
                shots_per_element: budget.per_eval_shots(),
            }
        };
        let rdm = measure_1rdm(&state, mode, derive_seed(step_seed, 2))?;
        let (rotation, noons) = natural_orbital_transform(&rdm);
        h = rotate_tensors(&h, &rotation)?;
        cumulative = cumulative.then(&rotation);
        let rotated_obs = jordan_wigner(&h)?;
        let energy = adapt.result.best_energy;
        trace.steps.push(NoizationStep {
            cumulative_rotation: matrix_rows(&cumulative.v),
            vqe: adapt.result,
            energy,
            rdm: matrix_rows(rdm.matrix()),
            noons,
            one_norm: rotated_obs.one_norm(),
            term_count: rotated_obs.len(),
            weights: rotated_obs.weight_distribution(),
            reference_energy: Some(ref_result.best_energy),
            growth: Some(adapt.growth),
        });
        let noiseless = budget.exact_mode && !noise.enabled;
        if let Some(prev) = prev_energy {
            if noiseless && (prev - energy).abs() < ENERGY_CONVERGENCE_TOL {
                trace.early_stopped_at = Some(step);
                break;
            }
        }
        prev_energy = Some(energy);
    }
    Ok(trace)
}
