//! Pauli strings and real-weighted Pauli sums.
//!
//! A [`PauliSum`] is the measurable form of an observable: a list of
//! `(coefficient, string)` terms plus a classical identity offset. The
//! all-identity string is never stored as a term; Hermitian observables keep
//! real coefficients only, and terms below [`PRUNE_THRESHOLD`] are dropped at
//! construction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Coefficients with smaller magnitude are pruned from a [`PauliSum`].
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Largest tolerated imaginary residue when symmetrizing to real coefficients.
pub const IMAG_TOL: f64 = 1e-10;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::Config(format!("invalid Pauli letter '{c}'"))),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Product of two letters: returns (letter, phase) with `a * b = phase * letter`.
    pub fn mul(self, other: Pauli) -> (Pauli, Complex64) {
        use Pauli::*;
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match (self, other) {
            (I, p) => (p, one),
            (p, I) => (p, one),
            (X, X) | (Y, Y) | (Z, Z) => (I, one),
            (X, Y) => (Z, i),
            (Y, X) => (Z, -i),
            (Y, Z) => (X, i),
            (Z, Y) => (X, -i),
            (Z, X) => (Y, i),
            (X, Z) => (Y, -i),
        }
    }
}

/// Tensor product of Pauli letters over a fixed qubit register.
///
/// Qubit `q` corresponds to `letters[q]`; basis indices use qubit `q` as bit
/// `q` (little-endian) everywhere in this crate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(m: usize) -> Self {
        Self {
            letters: vec![Pauli::I; m],
        }
    }

    /// Builds a string with the given letters placed on `qubits`, identity elsewhere.
    pub fn from_sparse(m: usize, placed: &[(usize, Pauli)]) -> Self {
        let mut letters = vec![Pauli::I; m];
        for &(q, p) in placed {
            letters[q] = p;
        }
        Self { letters }
    }

    pub fn m(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, q: usize) -> Pauli {
        self.letters[q]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Indices of qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// String product with phase: `self * other = phase * string`.
    pub fn mul(&self, other: &PauliString) -> (PauliString, Complex64) {
        debug_assert_eq!(self.m(), other.m());
        let mut phase = Complex64::new(1.0, 0.0);
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (p, ph) = a.mul(b);
                phase *= ph;
                p
            })
            .collect();
        (PauliString { letters }, phase)
    }

    /// Action on a computational basis state: `P |i> = phase * |j>`.
    pub fn action(&self, index: usize) -> (usize, Complex64) {
        let mut j = index;
        let mut phase = Complex64::new(1.0, 0.0);
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = (index >> q) & 1;
            match p {
                Pauli::I => {}
                Pauli::X => j ^= 1 << q,
                Pauli::Y => {
                    j ^= 1 << q;
                    phase *= if bit == 0 {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(0.0, -1.0)
                    };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        (j, phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.letters {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Result<Vec<Pauli>> = s.chars().map(Pauli::from_char).collect();
        Ok(Self { letters: letters? })
    }
}

/// Real-weighted sum of Pauli strings plus an identity offset.
#[derive(Clone, PartialEq, Debug)]
pub struct PauliSum {
    m: usize,
    terms: Vec<(f64, PauliString)>,
    offset: f64,
}

impl PauliSum {
    /// Empty sum (offset 0) on `m` qubits.
    pub fn empty(m: usize) -> Self {
        Self {
            m,
            terms: Vec::new(),
            offset: 0.0,
        }
    }

    /// Builds a sum from complex-accumulated terms, enforcing the invariants:
    /// identity goes to the offset, imaginary residues must stay below
    /// [`IMAG_TOL`], near-zero terms are pruned, terms are sorted canonically.
    pub fn from_complex_terms(
        m: usize,
        acc: impl IntoIterator<Item = (PauliString, Complex64)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (s, c) in acc {
            if s.m() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: s.m(),
                });
            }
            *merged.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let mut offset = 0.0;
        let mut terms = Vec::new();
        for (s, c) in merged {
            if c.im.abs() > IMAG_TOL {
                return Err(Error::Hermiticity(format!(
                    "residual imaginary coefficient {:.3e} on term {s}",
                    c.im
                )));
            }
            if s.is_identity() {
                offset += c.re;
            } else if c.re.abs() >= PRUNE_THRESHOLD {
                terms.push((c.re, s));
            }
        }
        Ok(Self { m, terms, offset })
    }

    /// Builds a sum from real terms, for tests and hand-assembled observables.
    pub fn from_real_terms(
        m: usize,
        offset: f64,
        terms: impl IntoIterator<Item = (f64, PauliString)>,
    ) -> Result<Self> {
        let acc = terms
            .into_iter()
            .map(|(c, s)| (s, Complex64::new(c, 0.0)))
            .chain(std::iter::once((
                PauliString::identity(m),
                Complex64::new(offset, 0.0),
            )));
        Self::from_complex_terms(m, acc)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of absolute coefficients over non-identity terms.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Absolute coefficients, sorted descending.
    pub fn weight_distribution(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.terms.iter().map(|(c, _)| c.abs()).collect();
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        w
    }
}

/// JSON form: `{"m": 4, "offset": -0.5, "terms": [[-0.5, "XZXI"], ...]}`.
#[derive(Serialize, Deserialize)]
struct PauliSumRepr {
    m: usize,
    offset: f64,
    terms: Vec<(f64, String)>,
}

impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PauliSumRepr {
            m: self.m,
            offset: self.offset,
            terms: self
                .terms
                .iter()
                .map(|(c, s)| (*c, s.to_string()))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PauliSumRepr::deserialize(deserializer)?;
        let terms: std::result::Result<Vec<(f64, PauliString)>, Error> = repr
            .terms
            .into_iter()
            .map(|(c, s)| Ok((c, s.parse::<PauliString>()?)))
            .collect();
        PauliSum::from_real_terms(repr.m, repr.offset, terms.map_err(D::Error::custom)?)
            .map_err(D::Error::custom)
    }
}
