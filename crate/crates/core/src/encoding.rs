//! Jordan-Wigner mapping of fermionic tensors to qubit observables, plus the
//! measurement-cost views (one-norm, weight distribution) and the bilinear
//! observables used to estimate 1-RDM entries on hardware.
//!
//! Mode `p` maps to qubit `p` with a Z string on qubits `0..p`:
//! `c+_p -> Z_0 ... Z_{p-1} (X_p - iY_p)/2`.

use num_complex::Complex64;

use crate::error::Result;
use crate::hamiltonian::FermionTensors;
use crate::pauli::{Pauli, PauliString, PauliSum};

#[derive(Clone, Copy, Debug)]
pub(crate) struct LadderOp {
    pub dagger: bool,
    pub mode: usize,
}

impl LadderOp {
    pub fn raise(mode: usize) -> Self {
        Self { dagger: true, mode }
    }

    pub fn lower(mode: usize) -> Self {
        Self { dagger: false, mode }
    }
}

/// The two JW branches of a single ladder operator.
fn jw_branches(op: LadderOp, m: usize) -> [(PauliString, Complex64); 2] {
    let mut x_letters = vec![Pauli::I; m];
    let mut y_letters = vec![Pauli::I; m];
    for q in 0..op.mode {
        x_letters[q] = Pauli::Z;
        y_letters[q] = Pauli::Z;
    }
    x_letters[op.mode] = Pauli::X;
    y_letters[op.mode] = Pauli::Y;
    let y_coeff = if op.dagger {
        Complex64::new(0.0, -0.5)
    } else {
        Complex64::new(0.0, 0.5)
    };
    [
        (PauliString::new(x_letters), Complex64::new(0.5, 0.0)),
        (PauliString::new(y_letters), y_coeff),
    ]
}

/// Expands `coeff * op_1 op_2 ... op_k` into weighted Pauli strings.
pub(crate) fn jw_product(
    m: usize,
    coeff: Complex64,
    ops: &[LadderOp],
) -> Vec<(PauliString, Complex64)> {
    let mut acc = vec![(PauliString::identity(m), coeff)];
    for &op in ops {
        let branches = jw_branches(op, m);
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (s, c) in &acc {
            for (b, bc) in &branches {
                let (prod, phase) = s.mul(b);
                next.push((prod, c * bc * phase));
            }
        }
        acc = next;
    }
    acc
}

/// Maps the fermionic tensors to a real-coefficient Pauli sum. Terms below
/// the pruning threshold are dropped; a residual imaginary coefficient above
/// tolerance signals a hermiticity bug upstream and is returned as an error.
pub fn jordan_wigner(h: &FermionTensors) -> Result<PauliSum> {
    h.validate()?;
    let m = h.m;
    let mut acc: Vec<(PauliString, Complex64)> = Vec::new();
    acc.push((
        PauliString::identity(m),
        Complex64::new(h.offset, 0.0),
    ));
    for p in 0..m {
        for q in 0..m {
            let v = h.h1[(p, q)];
            if v.norm() <= 1e-16 {
                continue;
            }
            acc.extend(jw_product(m, v, &[LadderOp::raise(p), LadderOp::lower(q)]));
        }
    }
    for ((p, q, r, s), v) in h.h2.nonzero(1e-16) {
        acc.extend(jw_product(
            m,
            v * 0.5,
            &[
                LadderOp::raise(p),
                LadderOp::raise(q),
                LadderOp::lower(r),
                LadderOp::lower(s),
            ],
        ));
    }
    PauliSum::from_complex_terms(m, acc)
}

/// One-norm of the encoded observable (identity excluded).
pub fn one_norm(p: &PauliSum) -> f64 {
    p.one_norm()
}

/// Sorted descending magnitudes of the Pauli coefficients.
pub fn weight_distribution(p: &PauliSum) -> Vec<f64> {
    p.weight_distribution()
}

/// Hermitian observables for one 1-RDM entry: returns `(re_obs, im_obs)`
/// with `D[pq] = <re_obs> + i <im_obs>`.
///
/// `re_obs` encodes `(c+_p c_q + c+_q c_p)/2` and `im_obs` encodes
/// `(c+_p c_q - c+_q c_p)/(2i)`; both have real Pauli coefficients.
pub fn rdm_observables(p: usize, q: usize, m: usize) -> Result<(PauliSum, PauliSum)> {
    assert!(p < m && q < m, "mode indices must be below m");
    let half = Complex64::new(0.5, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5);

    let mut re_acc = jw_product(m, half, &[LadderOp::raise(p), LadderOp::lower(q)]);
    re_acc.extend(jw_product(m, half, &[LadderOp::raise(q), LadderOp::lower(p)]));
    let re_obs = PauliSum::from_complex_terms(m, re_acc)?;

    let mut im_acc = jw_product(m, minus_half_i, &[LadderOp::raise(p), LadderOp::lower(q)]);
    im_acc.extend(jw_product(
        m,
        -minus_half_i,
        &[LadderOp::raise(q), LadderOp::lower(p)],
    ));
    let im_obs = PauliSum::from_complex_terms(m, im_acc)?;
    Ok((re_obs, im_obs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hubbard, HubbardSpec};

    #[test]
    fn zero_tensors_map_to_empty_sum() {
        let h = FermionTensors::zeros(4);
        let sum = jordan_wigner(&h).unwrap();
        assert!(sum.is_empty());
        assert_eq!(sum.offset(), 0.0);
    }

    #[test]
    fn single_hopping_term_expands_to_xx_plus_yy() {
        // -t (c+_0 c_1 + h.c.) on two modes -> (-t/2)(X0X1 + Y0Y1).
        let t = 0.7;
        let mut h = FermionTensors::zeros(2);
        h.h1[(0, 1)] = Complex64::new(-t, 0.0);
        h.h1[(1, 0)] = Complex64::new(-t, 0.0);
        let sum = jordan_wigner(&h).unwrap();
        assert_eq!(sum.len(), 2);
        assert_eq!(sum.offset(), 0.0);
        for (c, s) in sum.terms() {
            assert!((c + t / 2.0).abs() < 1e-12);
            let name = s.to_string();
            assert!(name == "XX" || name == "YY", "unexpected term {name}");
        }
    }

    #[test]
    fn dimer_u1_has_exactly_six_terms() {
        let h = build_hubbard(&HubbardSpec::chain(2, 1.0, 1.0)).unwrap();
        let sum = jordan_wigner(&h).unwrap();
        assert_eq!(sum.len(), 6);
        let mut hopping = 0;
        let mut zz = 0;
        for (c, s) in sum.terms() {
            match s.to_string().as_str() {
                "XZXI" | "YZYI" | "IXZX" | "IYZY" => {
                    assert!((c.abs() - 0.5).abs() < 1e-12);
                    hopping += 1;
                }
                "ZZII" | "IIZZ" => {
                    assert!((c - 0.25).abs() < 1e-12);
                    zz += 1;
                }
                other => panic!("unexpected term {other} with coeff {c}"),
            }
        }
        assert_eq!(hopping, 4);
        assert_eq!(zz, 2);
        assert!((sum.one_norm() - 2.5).abs() < 1e-12);
        // mu = U/2 cancels all single-qubit Z terms; offset = -U/2.
        assert!((sum.offset() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn dimer_weight_distribution_matches_golden() {
        let h = build_hubbard(&HubbardSpec::chain(2, 1.0, 1.0)).unwrap();
        let sum = jordan_wigner(&h).unwrap();
        let w = weight_distribution(&sum);
        assert_eq!(w, vec![0.5, 0.5, 0.5, 0.5, 0.25, 0.25]);
    }

    #[test]
    fn number_operator_observable() {
        let (re_obs, im_obs) = rdm_observables(0, 0, 2).unwrap();
        assert_eq!(re_obs.offset(), 0.5);
        assert_eq!(re_obs.len(), 1);
        let (c, s) = &re_obs.terms()[0];
        assert_eq!(s.to_string(), "ZI");
        assert!((c + 0.5).abs() < 1e-12);
        assert!(im_obs.is_empty());
        assert_eq!(im_obs.offset(), 0.0);
    }

    #[test]
    fn off_diagonal_bilinear_observables() {
        let (re_obs, im_obs) = rdm_observables(0, 1, 2).unwrap();
        // (c+_0 c_1 + c+_1 c_0)/2 = (X0X1 + Y0Y1)/4
        assert_eq!(re_obs.len(), 2);
        for (c, s) in re_obs.terms() {
            let name = s.to_string();
            assert!(name == "XX" || name == "YY");
            assert!((c - 0.25).abs() < 1e-12);
        }
        // (c+_0 c_1 - c+_1 c_0)/(2i): XY/YX combination with opposite signs.
        assert_eq!(im_obs.len(), 2);
        let mut names: Vec<(String, f64)> = im_obs
            .terms()
            .iter()
            .map(|(c, s)| (s.to_string(), *c))
            .collect();
        names.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(names[0].0, "XY");
        assert_eq!(names[1].0, "YX");
        assert!((names[0].1 + names[1].1).abs() < 1e-12, "opposite signs");
    }

    #[test]
    fn imag_observable_is_antisymmetric() {
        let m = 4;
        for p in 0..m {
            for q in 0..m {
                let (_, im_pq) = rdm_observables(p, q, m).unwrap();
                let (_, im_qp) = rdm_observables(q, p, m).unwrap();
                assert_eq!(im_pq.len(), im_qp.len());
                for ((c1, s1), (c2, s2)) in im_pq.terms().iter().zip(im_qp.terms()) {
                    assert_eq!(s1, s2);
                    assert!((c1 + c2).abs() < 1e-12);
                }
            }
        }
    }
}
