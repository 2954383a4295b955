//! Complex-weighted Pauli strings and their sums.
//!
//! A [`PauliTerm`] stores only its non-identity factors, keyed by qubit index.
//! [`PauliSum`] keeps its terms canonical at all times: sorted by qubit
//! indices and then operator letters, equal strings merged, and negligible
//! coefficients dropped.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with a smaller magnitude are pruned during canonicalization.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Product `self * other` as `(phase, pauli)`; `None` is the identity.
    fn mul(self, other: Pauli) -> (Complex64, Option<Pauli>) {
        use Pauli::*;
        let i = Complex64::i();
        match (self, other) {
            (X, X) | (Y, Y) | (Z, Z) => (Complex64::new(1.0, 0.0), None),
            (X, Y) => (i, Some(Z)),
            (Y, X) => (-i, Some(Z)),
            (Y, Z) => (i, Some(X)),
            (Z, Y) => (-i, Some(X)),
            (Z, X) => (i, Some(Y)),
            (X, Z) => (-i, Some(Y)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    ops: BTreeMap<usize, Pauli>,
}

impl PauliTerm {
    pub fn identity(coeff: Complex64) -> Self {
        Self {
            coeff,
            ops: BTreeMap::new(),
        }
    }

    /// Builds a term from `(qubit, pauli)` factors. A qubit may appear once.
    pub fn new(coeff: Complex64, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut ops = BTreeMap::new();
        for &(q, p) in factors {
            if ops.insert(q, p).is_some() {
                return Err(Error::Validation(format!(
                    "qubit {q} appears twice in a Pauli term"
                )));
            }
        }
        Ok(Self { coeff, ops })
    }

    pub fn real(coeff: f64, factors: &[(usize, Pauli)]) -> Result<Self> {
        Self::new(Complex64::new(coeff, 0.0), factors)
    }

    pub fn ops(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.ops.iter().map(|(&q, &p)| (q, p))
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.ops.keys().copied()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.ops.keys().next_back().copied()
    }

    /// Canonical ordering key: qubit indices first, then operator letters.
    fn sort_key(&self) -> (Vec<usize>, Vec<Pauli>) {
        (
            self.ops.keys().copied().collect(),
            self.ops.values().copied().collect(),
        )
    }

    pub fn mul(&self, other: &PauliTerm) -> PauliTerm {
        let mut coeff = self.coeff * other.coeff;
        let mut ops = self.ops.clone();
        for (&q, &p) in &other.ops {
            match ops.get(&q) {
                None => {
                    ops.insert(q, p);
                }
                Some(&left) => {
                    let (phase, result) = left.mul(p);
                    coeff *= phase;
                    match result {
                        Some(r) => {
                            ops.insert(q, r);
                        }
                        None => {
                            ops.remove(&q);
                        }
                    }
                }
            }
        }
        PauliTerm { coeff, ops }
    }

    /// Bit masks `(x, z)` over basis indices of an `n`-qubit register, with
    /// qubit 0 the most significant bit. `Y` sets both masks.
    pub fn masks(&self, num_qubits: usize) -> (usize, usize) {
        let mut x = 0usize;
        let mut z = 0usize;
        for (&q, &p) in &self.ops {
            let bit = 1usize << (num_qubits - 1 - q);
            match p {
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                }
                Pauli::Z => z |= bit,
            }
        }
        (x, z)
    }

    /// Number of `Y` factors; contributes `i^count` when applying the string.
    pub fn y_count(&self) -> usize {
        self.ops.values().filter(|p| **p == Pauli::Y).count()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+.12}{:+.12}i)", self.coeff.re, self.coeff.im)?;
        if self.ops.is_empty() {
            return write!(f, " I");
        }
        for (q, p) in &self.ops {
            write!(f, " {}{}", p.letter(), q)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliSum {
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = PauliTerm>) -> Self {
        let mut sum = Self {
            terms: terms.into_iter().collect(),
        };
        sum.canonicalize();
        sum
    }

    pub fn identity(coeff: Complex64) -> Self {
        Self::from_terms([PauliTerm::identity(coeff)])
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn canonicalize(&mut self) {
        let mut merged: BTreeMap<(Vec<usize>, Vec<Pauli>), PauliTerm> = BTreeMap::new();
        for term in self.terms.drain(..) {
            merged
                .entry(term.sort_key())
                .and_modify(|t| t.coeff += term.coeff)
                .or_insert(term);
        }
        self.terms = merged
            .into_values()
            .filter(|t| t.coeff.norm() >= PRUNE_TOLERANCE)
            .collect();
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        PauliSum::from_terms(self.terms.iter().chain(other.terms.iter()).cloned())
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        PauliSum::from_terms(self.terms.iter().map(|t| PauliTerm {
            coeff: t.coeff * factor,
            ops: t.ops.clone(),
        }))
    }

    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        PauliSum::from_terms(
            self.terms
                .iter()
                .flat_map(|a| other.terms.iter().map(move |b| a.mul(b))),
        )
    }

    /// Hermitian conjugate. Pauli strings are Hermitian, so only the
    /// coefficients are conjugated.
    pub fn adjoint(&self) -> PauliSum {
        PauliSum::from_terms(self.terms.iter().map(|t| PauliTerm {
            coeff: t.coeff.conj(),
            ops: t.ops.clone(),
        }))
    }

    /// In canonical form a sum is Hermitian iff every coefficient is real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| t.coeff.im.abs() <= tol)
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.terms.iter().filter_map(PauliTerm::max_qubit).max()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.ops.values().all(|p| *p == Pauli::Z))
    }

    /// Projector onto `|0...0><0...0|` restricted to `qubits`, expanded as
    /// the product of `(I + Z_j) / 2`. Has `2^len` terms.
    pub fn zero_projector(qubits: &[usize]) -> PauliSum {
        let half = Complex64::new(0.5, 0.0);
        let mut acc = PauliSum::identity(Complex64::new(1.0, 0.0));
        for &q in qubits {
            let factor = PauliSum::from_terms([
                PauliTerm::identity(half),
                PauliTerm {
                    coeff: half,
                    ops: BTreeMap::from([(q, Pauli::Z)]),
                },
            ]);
            acc = acc.mul(&factor);
        }
        acc
    }

    /// Dense matrix on `num_qubits` qubits, row-major, qubit 0 most significant.
    pub fn to_dense(&self, num_qubits: usize) -> Vec<Vec<Complex64>> {
        let dim = 1usize << num_qubits;
        let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for term in &self.terms {
            let (x, z) = term.masks(num_qubits);
            let y_phase = Complex64::i().powu(term.y_count() as u32);
            for col in 0..dim {
                let row = col ^ x;
                let sign = if (col & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                m[row][col] += term.coeff * y_phase * sign;
            }
        }
        m
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
