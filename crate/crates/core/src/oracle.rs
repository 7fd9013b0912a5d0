//! Classical brute-force reference: dense many-body operator assembly, exact
//! diagonalization, and exact 1-RDMs. Every golden energy in the test suite
//! comes from here.
//!
//! The fermionic path builds ladder operators directly on Fock basis states
//! (occupation of mode `p` stored in bit `p`, parity string over lower bits);
//! it never touches the Pauli encoding, so it can cross-check it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::FermionTensors;
use crate::la;
use crate::noization::OneRdm;
use crate::pauli::PauliSum;

const MAX_MODES: usize = 10;

/// Dense matrix realization of a many-body operator on `m` modes.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub m: usize,
    pub matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        1 << self.m
    }

    /// Largest deviation from hermiticity, for sanity checks.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// Full spectrum, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        la::hermitian_eigen_asc(&self.matrix).0
    }
}

/// `c_p |i>`: requires bit `p` set; sign is the parity of lower bits.
#[inline]
pub(crate) fn annihilate(index: usize, p: usize) -> Option<(usize, f64)> {
    if (index >> p) & 1 == 0 {
        return None;
    }
    let parity = (index & ((1 << p) - 1)).count_ones();
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Some((index & !(1 << p), sign))
}

/// `c+_p |i>`: requires bit `p` clear; sign is the parity of lower bits.
#[inline]
pub(crate) fn create(index: usize, p: usize) -> Option<(usize, f64)> {
    if (index >> p) & 1 == 1 {
        return None;
    }
    let parity = (index & ((1 << p) - 1)).count_ones();
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Some((index | (1 << p), sign))
}

/// Dense creation operator matrix for mode `p` on `m` modes.
pub fn creation_matrix(m: usize, p: usize) -> DMatrix<Complex64> {
    let dim = 1 << m;
    let mut mat = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        if let Some((j, sign)) = create(i, p) {
            mat[(j, i)] = Complex64::new(sign, 0.0);
        }
    }
    mat
}

/// Assembles the second-quantized operator
/// `sum h1[pq] c+_p c_q + 1/2 sum h2[pqrs] c+_p c+_q c_r c_s + offset`
/// as a dense matrix via direct ladder-operator action.
pub fn assemble_fermionic(h: &FermionTensors) -> Result<DenseOperator> {
    if h.m > MAX_MODES {
        return Err(Error::Config(format!(
            "dense assembly limited to {MAX_MODES} modes, got {}",
            h.m
        )));
    }
    h.validate()?;
    let dim = 1usize << h.m;
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);

    let mut one_body = Vec::new();
    for p in 0..h.m {
        for q in 0..h.m {
            let v = h.h1[(p, q)];
            if v.norm() > 1e-16 {
                one_body.push((p, q, v));
            }
        }
    }
    let two_body = h.h2.nonzero(1e-16);

    for i in 0..dim {
        for &(p, q, v) in &one_body {
            if let Some((i1, s1)) = annihilate(i, q) {
                if let Some((j, s2)) = create(i1, p) {
                    mat[(j, i)] += v * (s1 * s2);
                }
            }
        }
        for &((p, q, r, s), v) in &two_body {
            let Some((i1, s1)) = annihilate(i, s) else { continue };
            let Some((i2, s2)) = annihilate(i1, r) else { continue };
            let Some((i3, s3)) = create(i2, q) else { continue };
            let Some((j, s4)) = create(i3, p) else { continue };
            mat[(j, i)] += v * (0.5 * s1 * s2 * s3 * s4);
        }
        mat[(i, i)] += Complex64::new(h.offset, 0.0);
    }
    Ok(DenseOperator { m: h.m, matrix: mat })
}

/// Dense matrix realization of a Pauli sum (the encoded path).
pub fn assemble_pauli(p: &PauliSum) -> DenseOperator {
    let dim = 1usize << p.m();
    let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
    for (coeff, string) in p.terms() {
        for i in 0..dim {
            let (j, phase) = string.action(i);
            mat[(j, i)] += phase * *coeff;
        }
    }
    for i in 0..dim {
        mat[(i, i)] += Complex64::new(p.offset(), 0.0);
    }
    DenseOperator { m: p.m(), matrix: mat }
}

/// Lowest eigenpair, optionally restricted to a fixed particle number.
/// The eigenvector phase is fixed (largest-amplitude entry real positive).
pub fn exact_ground_state(
    op: &DenseOperator,
    particle_sector: Option<usize>,
) -> Result<(f64, DVector<Complex64>)> {
    let dim = op.dim();
    if dim > 1024 {
        return Err(Error::Config(format!("dimension {dim} exceeds 1024")));
    }
    let resid = op.hermiticity_residual();
    if resid > 1e-9 {
        return Err(Error::Hermiticity(format!(
            "operator is not Hermitian: residual {resid:.3e}"
        )));
    }
    match particle_sector {
        None => {
            let (vals, vecs) = la::hermitian_eigen_asc(&op.matrix);
            let mut gs = vecs.column(0).into_owned();
            la::fix_column_phase(&mut gs);
            Ok((vals[0], gs))
        }
        Some(n) => {
            let keep: Vec<usize> = (0..dim).filter(|i| i.count_ones() as usize == n).collect();
            if keep.is_empty() {
                return Err(Error::EmptySector(n));
            }
            let k = keep.len();
            let mut sub = DMatrix::zeros(k, k);
            for (a, &i) in keep.iter().enumerate() {
                for (b, &j) in keep.iter().enumerate() {
                    sub[(a, b)] = op.matrix[(i, j)];
                }
            }
            let (vals, vecs) = la::hermitian_eigen_asc(&sub);
            let mut gs = DVector::zeros(dim);
            for (a, &i) in keep.iter().enumerate() {
                gs[i] = vecs[(a, 0)];
            }
            la::fix_column_phase(&mut gs);
            Ok((vals[0], gs))
        }
    }
}

/// Brute-force 1-RDM of a statevector: `D[pq] = <psi| c+_p c_q |psi>`.
pub fn exact_1rdm(state: &DVector<Complex64>, m: usize) -> OneRdm {
    let dim = 1usize << m;
    assert_eq!(state.len(), dim, "statevector length must be 2^m");
    let mut d = DMatrix::<Complex64>::zeros(m, m);
    for p in 0..m {
        for q in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..dim {
                let amp = state[i];
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                if let Some((i1, s1)) = annihilate(i, q) {
                    if let Some((j, s2)) = create(i1, p) {
                        acc += state[j].conj() * amp * (s1 * s2);
                    }
                }
            }
            d[(p, q)] = acc;
        }
    }
    OneRdm::from_matrix(d)
}
