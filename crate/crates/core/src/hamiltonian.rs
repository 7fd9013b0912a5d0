//! Second-quantized fermionic Hamiltonians as dense one- and two-body tensors,
//! and single-particle basis rotations acting on them.
//!
//! Conventions, normative for the whole crate:
//! - Spin-orbital ordering is site-major: mode `p = 2*site + spin`, spin 0 = up.
//! - The two-body tensor enters as `(1/2) sum_pqrs h_pqrs c+_p c+_q c_r c_s`.
//! - An [`OrbitalRotation`] matrix `v` holds the new modes as columns in the
//!   old basis: `c+_new[a] = sum_p v[p][a] c+_old[p]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HERM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// Dense rank-4 complex tensor over `m` spin-orbitals.
#[derive(Clone, PartialEq, Debug)]
pub struct Tensor4 {
    m: usize,
    data: Vec<Complex64>,
}

impl Tensor4 {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![Complex64::new(0.0, 0.0); m * m * m * m],
        }
    }

    #[inline]
    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.m + q) * self.m + r) * self.m + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> Complex64 {
        self.data[self.idx(p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: Complex64) {
        let i = self.idx(p, q, r, s);
        self.data[i] = v;
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Entries with |value| above `tol`, as `((p, q, r, s), value)`.
    pub fn nonzero(&self, tol: f64) -> Vec<((usize, usize, usize, usize), Complex64)> {
        let mut out = Vec::new();
        for p in 0..self.m {
            for q in 0..self.m {
                for r in 0..self.m {
                    for s in 0..self.m {
                        let v = self.get(p, q, r, s);
                        if v.norm() > tol {
                            out.push(((p, q, r, s), v));
                        }
                    }
                }
            }
        }
        out
    }
}

/// One- and two-body tensors plus a scalar identity shift; the rotating
/// representation of the Hamiltonian.
#[derive(Clone, PartialEq, Debug)]
pub struct FermionTensors {
    pub m: usize,
    pub h1: DMatrix<Complex64>,
    pub h2: Tensor4,
    pub offset: f64,
}

impl FermionTensors {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            h1: DMatrix::zeros(m, m),
            h2: Tensor4::zeros(m),
            offset: 0.0,
        }
    }

    /// Checks hermiticity of both tensors and evenness of `m`.
    pub fn validate(&self) -> Result<()> {
        if self.m % 2 != 0 {
            return Err(Error::Config(format!(
                "spin-orbital count must be even, got {}",
                self.m
            )));
        }
        if self.h1.nrows() != self.m || self.h1.ncols() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: self.h1.nrows(),
            });
        }
        for p in 0..self.m {
            for q in 0..self.m {
                let d = self.h1[(p, q)] - self.h1[(q, p)].conj();
                if d.norm() > HERM_TOL {
                    return Err(Error::Hermiticity(format!(
                        "h1[{p}][{q}] != conj(h1[{q}][{p}]) by {:.3e}",
                        d.norm()
                    )));
                }
            }
        }
        for p in 0..self.m {
            for q in 0..self.m {
                for r in 0..self.m {
                    for s in 0..self.m {
                        let d = self.h2.get(p, q, r, s) - self.h2.get(s, r, q, p).conj();
                        if d.norm() > HERM_TOL {
                            return Err(Error::Hermiticity(format!(
                                "h2[{p}][{q}][{r}][{s}] != conj(h2[{s}][{r}][{q}][{p}]) by {:.3e}",
                                d.norm()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lattice geometry of a Hubbard model instance.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Chain,
    SquarePlaquette,
}

fn default_t() -> f64 {
    1.0
}

/// Hubbard model parameters. `mu` defaults to `u/2` (half filling).
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbardSpec {
    pub n_sites: usize,
    #[serde(default = "default_t")]
    pub t: f64,
    pub u: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub geometry: Geometry,
}

impl HubbardSpec {
    pub fn chain(n_sites: usize, t: f64, u: f64) -> Self {
        Self {
            n_sites,
            t,
            u,
            mu: None,
            geometry: Geometry::Chain,
        }
    }

    pub fn plaquette(t: f64, u: f64) -> Self {
        Self {
            n_sites: 4,
            t,
            u,
            mu: None,
            geometry: Geometry::SquarePlaquette,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    /// Effective chemical potential: `u/2` unless overridden.
    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(self.u / 2.0)
    }

    /// Spin-orbital count `M = 2N`.
    pub fn m(&self) -> usize {
        2 * self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites != 2 && self.n_sites != 4 {
            return Err(Error::Config(format!(
                "n_sites must be 2 or 4, got {}",
                self.n_sites
            )));
        }
        if self.geometry == Geometry::SquarePlaquette && self.n_sites != 4 {
            return Err(Error::Config(
                "square-plaquette geometry requires n_sites = 4".into(),
            ));
        }
        Ok(())
    }

    /// Nearest-neighbor bonds, each listed once.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        match self.geometry {
            Geometry::Chain => (0..self.n_sites - 1).map(|i| (i, i + 1)).collect(),
            // 4 sites on a square: a single 4-cycle.
            Geometry::SquarePlaquette => vec![(0, 1), (1, 2), (2, 3), (3, 0)],
        }
    }
}

/// Spin-orbital index for `(site, spin)`, site-major with spin 0 = up.
pub fn spin_orbital(site: usize, spin: usize) -> usize {
    2 * site + spin
}

/// Builds the Hubbard Hamiltonian tensors for the given spec.
pub fn build_hubbard(spec: &HubbardSpec) -> Result<FermionTensors> {
    spec.validate()?;
    let m = spec.m();
    let mu = spec.mu();
    let mut h = FermionTensors::zeros(m);

    for p in 0..m {
        h.h1[(p, p)] = Complex64::new(-mu, 0.0);
    }
    for (i, j) in spec.bonds() {
        for spin in 0..2 {
            let p = spin_orbital(i, spin);
            let q = spin_orbital(j, spin);
            h.h1[(p, q)] = Complex64::new(-spec.t, 0.0);
            h.h1[(q, p)] = Complex64::new(-spec.t, 0.0);
        }
    }
    // U n_up n_down = U c+_a c+_b c_b c_a with a = up, b = down mode of the
    // site; split symmetrically so the 1/2 prefactor reproduces it exactly.
    let u = Complex64::new(spec.u, 0.0);
    for i in 0..spec.n_sites {
        let a = spin_orbital(i, 0);
        let b = spin_orbital(i, 1);
        h.h2.set(a, b, b, a, u);
        h.h2.set(b, a, a, b, u);
    }
    h.validate()?;
    Ok(h)
}

/// Unitary single-particle basis change; columns are the new modes expressed
/// in the old basis.
#[derive(Clone, PartialEq, Debug)]
pub struct OrbitalRotation {
    pub v: DMatrix<Complex64>,
}

impl OrbitalRotation {
    pub fn identity(m: usize) -> Self {
        Self {
            v: DMatrix::identity(m, m),
        }
    }

    pub fn new(v: DMatrix<Complex64>) -> Result<Self> {
        let r = Self { v };
        r.validate()?;
        Ok(r)
    }

    pub fn m(&self) -> usize {
        self.v.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.v.nrows() != self.v.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.v.nrows(),
                got: self.v.ncols(),
            });
        }
        let m = self.v.nrows();
        let dev = (self.v.adjoint() * &self.v - DMatrix::<Complex64>::identity(m, m)).norm();
        if dev > UNITARY_TOL * (m as f64) {
            return Err(Error::Config(format!(
                "rotation is not unitary: |v'v - 1| = {dev:.3e}"
            )));
        }
        Ok(())
    }

    /// Composition equivalent to rotating by `self` first, then `next`.
    pub fn then(&self, next: &OrbitalRotation) -> OrbitalRotation {
        OrbitalRotation {
            v: &self.v * &next.v,
        }
    }
}

/// Rotates the tensors into the basis defined by `r`:
/// `h1 -> v' h1 v`, `h2[ijkl] -> sum conj(v[pi]) conj(v[qj]) h2[pqrs] v[rk] v[sl]`.
/// The scalar offset is unchanged.
pub fn rotate_tensors(h: &FermionTensors, r: &OrbitalRotation) -> Result<FermionTensors> {
    if r.m() != h.m {
        return Err(Error::DimensionMismatch {
            expected: h.m,
            got: r.m(),
        });
    }
    let m = h.m;
    let v = &r.v;
    let h1 = v.adjoint() * &h.h1 * v;

    // Contract one index at a time: O(m^5) per pass.
    let zero = Complex64::new(0.0, 0.0);
    let mut t = h.h2.clone();
    for pass in 0..4 {
        let mut next = Tensor4::zeros(m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let mut acc = zero;
                        for k in 0..m {
                            let (w, val) = match pass {
                                0 => (v[(k, a)].conj(), t.get(k, b, c, d)),
                                1 => (v[(k, b)].conj(), t.get(a, k, c, d)),
                                2 => (v[(k, c)], t.get(a, b, k, d)),
                                _ => (v[(k, d)], t.get(a, b, c, k)),
                            };
                            acc += w * val;
                        }
                        next.set(a, b, c, d, acc);
                    }
                }
            }
        }
        t = next;
    }

    let out = FermionTensors {
        m,
        h1,
        h2: t,
        offset: h.offset,
    };
    out.validate()?;
    Ok(out)
}
