//! Register layout for an optical setup and the binary occupation-number
//! encoding of bosonic modes onto qubits.
//!
//! Each `(path, mode)` slot owns a contiguous run of `qubits_per_mode`
//! qubits holding its photon count in binary, most significant bit first.
//! Slots are laid out path by path in the order given, modes in the order
//! given within a path. Qubit 0 is the most significant bit of a basis index.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliSum, PauliTerm};

/// One internal mode of one path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeKey {
    pub path: String,
    pub mode: i32,
}

impl ModeKey {
    pub fn new(path: impl Into<String>, mode: i32) -> Self {
        Self {
            path: path.into(),
            mode,
        }
    }
}

impl fmt::Display for ModeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.mode, self.path)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSpec {
    pub label: String,
    pub modes: Vec<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetupLayout {
    paths: Vec<PathSpec>,
    cutoff: u32,
    qubits_per_mode: usize,
    slots: Vec<ModeKey>,
    index: HashMap<ModeKey, usize>,
}

/// Bits needed to store occupations `0..=cutoff`.
pub fn qubits_for_cutoff(cutoff: u32) -> usize {
    let levels = cutoff as u64 + 1;
    (64 - (levels - 1).leading_zeros() as usize).max(1)
}

impl SetupLayout {
    pub fn new(paths: Vec<PathSpec>, cutoff: u32) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::Config("cutoff must be at least 1".into()));
        }
        if paths.is_empty() {
            return Err(Error::Config("layout needs at least one path".into()));
        }
        let mut slots = Vec::new();
        let mut index = HashMap::new();
        for p in &paths {
            if p.modes.is_empty() {
                return Err(Error::Config(format!("path `{}` has no modes", p.label)));
            }
            for &m in &p.modes {
                let key = ModeKey::new(p.label.clone(), m);
                if index.insert(key.clone(), slots.len()).is_some() {
                    return Err(Error::Config(format!("duplicate mode {key}")));
                }
                slots.push(key);
            }
        }
        let mut labels: Vec<_> = paths.iter().map(|p| &p.label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != paths.len() {
            return Err(Error::Config("duplicate path label".into()));
        }
        Ok(Self {
            paths,
            cutoff,
            qubits_per_mode: qubits_for_cutoff(cutoff),
            slots,
            index,
        })
    }

    /// Every path gets the same mode list.
    pub fn uniform(paths: &[&str], modes: &[i32], cutoff: u32) -> Result<Self> {
        Self::new(
            paths
                .iter()
                .map(|p| PathSpec {
                    label: p.to_string(),
                    modes: modes.to_vec(),
                })
                .collect(),
            cutoff,
        )
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn qubits_per_mode(&self) -> usize {
        self.qubits_per_mode
    }

    pub fn total_qubits(&self) -> usize {
        self.slots.len() * self.qubits_per_mode
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn slots(&self) -> &[ModeKey] {
        &self.slots
    }

    pub fn path(&self, label: &str) -> Result<&PathSpec> {
        self.paths
            .iter()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::Lookup(format!("unknown path `{label}`")))
    }

    pub fn slot(&self, path: &str, mode: i32) -> Result<usize> {
        self.index
            .get(&ModeKey::new(path, mode))
            .copied()
            .ok_or_else(|| Error::Lookup(format!("unknown mode ({mode},{path})")))
    }

    pub fn slot_qubits(&self, slot: usize) -> Range<usize> {
        let start = slot * self.qubits_per_mode;
        start..start + self.qubits_per_mode
    }

    pub fn qubit_range(&self, path: &str, mode: i32) -> Result<Range<usize>> {
        Ok(self.slot_qubits(self.slot(path, mode)?))
    }

    /// All qubits belonging to a path, in layout order.
    pub fn path_qubits(&self, path: &str) -> Result<Vec<usize>> {
        let spec = self.path(path)?;
        let mut qs = Vec::new();
        for &m in &spec.modes {
            qs.extend(self.qubit_range(path, m)?);
        }
        Ok(qs)
    }

    /// Slot indices of a path, in layout order.
    pub fn path_slots(&self, path: &str) -> Result<Vec<usize>> {
        let spec = self.path(path)?;
        spec.modes.iter().map(|&m| self.slot(path, m)).collect()
    }

    pub fn vacuum(&self) -> FockState {
        FockState(vec![0; self.slots.len()])
    }

    /// Builds a Fock state from `(path, mode, count)` triples; unlisted slots
    /// are empty.
    pub fn fock(&self, occupations: &[(&str, i32, u32)]) -> Result<FockState> {
        let mut state = self.vacuum();
        for &(p, m, n) in occupations {
            let s = self.slot(p, m)?;
            state.0[s] += n;
        }
        self.check_fock(&state)?;
        Ok(state)
    }

    pub fn check_fock(&self, fock: &FockState) -> Result<()> {
        if fock.0.len() != self.slots.len() {
            return Err(Error::Encoding(format!(
                "Fock state has {} slots, layout has {}",
                fock.0.len(),
                self.slots.len()
            )));
        }
        if let Some((s, &n)) = fock.0.iter().enumerate().find(|(_, &n)| n > self.cutoff) {
            return Err(Error::Encoding(format!(
                "occupation {n} of mode {} exceeds cutoff {}",
                self.slots[s], self.cutoff
            )));
        }
        Ok(())
    }

    /// Basis index of the encoded Fock state on a register of `num_qubits`
    /// qubits whose first `total_qubits()` qubits hold this layout.
    pub fn fock_to_index(&self, fock: &FockState, num_qubits: usize) -> Result<usize> {
        self.check_fock(fock)?;
        let q = self.qubits_per_mode;
        let mut idx = 0usize;
        for &n in &fock.0 {
            idx = (idx << q) | n as usize;
        }
        Ok(idx << (num_qubits - self.total_qubits()))
    }

    /// Decodes the layout part of a basis index. Occupations are raw binary
    /// values and may exceed the cutoff when the cutoff is not `2^k - 1`.
    pub fn index_to_fock(&self, index: usize, num_qubits: usize) -> FockState {
        let q = self.qubits_per_mode;
        let mask = (1usize << q) - 1;
        let mut rest = index >> (num_qubits - self.total_qubits());
        let mut occ = vec![0u32; self.slots.len()];
        for s in (0..self.slots.len()).rev() {
            occ[s] = (rest & mask) as u32;
            rest >>= q;
        }
        FockState(occ)
    }

    /// Total photons of the layout part of a basis index.
    pub fn photon_count_of_index(&self, index: usize, num_qubits: usize) -> u32 {
        let q = self.qubits_per_mode;
        let mask = (1usize << q) - 1;
        let mut rest = index >> (num_qubits - self.total_qubits());
        let mut total = 0;
        for _ in 0..self.slots.len() {
            total += (rest & mask) as u32;
            rest >>= q;
        }
        total
    }

    /// Human-readable label, e.g. `1@(-1,a) 2@(0,b)`; `vac` for the vacuum.
    pub fn fock_label(&self, fock: &FockState) -> String {
        let parts: Vec<String> = fock
            .0
            .iter()
            .zip(&self.slots)
            .filter(|(n, _)| **n > 0)
            .map(|(n, k)| format!("{n}@{k}"))
            .collect();
        if parts.is_empty() {
            "vac".to_string()
        } else {
            parts.join(" ")
        }
    }

    /// Inverse of [`SetupLayout::fock_label`].
    pub fn parse_fock_label(&self, label: &str) -> Result<FockState> {
        let mut state = self.vacuum();
        let label = label.trim();
        if label == "vac" {
            return Ok(state);
        }
        for part in label.split_whitespace() {
            let bad = || Error::Encoding(format!("malformed Fock label `{part}`"));
            let (count, rest) = part.split_once('@').ok_or_else(bad)?;
            let count: u32 = count.parse().map_err(|_| bad())?;
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(bad)?;
            let (mode, path) = inner.split_once(',').ok_or_else(bad)?;
            let mode: i32 = mode.trim().trim_start_matches('+').parse().map_err(|_| bad())?;
            let s = self.slot(path.trim(), mode)?;
            state.0[s] += count;
        }
        self.check_fock(&state)?;
        Ok(state)
    }
}

/// Occupation numbers indexed by layout slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(pub Vec<u32>);

impl FockState {
    pub fn total_photons(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn occupation(&self, slot: usize) -> u32 {
        self.0[slot]
    }
}

/// Qubit values in register order (qubit 0 first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring(pub Vec<bool>);

impl Bitstring {
    pub fn from_index(index: usize, num_qubits: usize) -> Self {
        Self(
            (0..num_qubits)
                .map(|q| (index >> (num_qubits - 1 - q)) & 1 == 1)
                .collect(),
        )
    }

    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Encoding(format!("invalid bit `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bitstring)
    }
}

pub fn fock_to_bitstring(layout: &SetupLayout, fock: &FockState) -> Result<Bitstring> {
    let n = layout.total_qubits();
    Ok(Bitstring::from_index(layout.fock_to_index(fock, n)?, n))
}

pub fn bitstring_to_fock(layout: &SetupLayout, bits: &Bitstring) -> Result<FockState> {
    if bits.len() != layout.total_qubits() {
        return Err(Error::Encoding(format!(
            "bitstring has {} qubits, layout has {}",
            bits.len(),
            layout.total_qubits()
        )));
    }
    let fock = layout.index_to_fock(bits.to_index(), bits.len());
    layout.check_fock(&fock)?;
    Ok(fock)
}

/// `|i><j|` on the given qubits (most significant first) as a Pauli sum.
///
/// This is the only place where the binary encoding meets Pauli operators;
/// every ladder and number operator is assembled from it.
pub fn outer_product(qubits: &[usize], i: u32, j: u32) -> PauliSum {
    let k = qubits.len();
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    let mut acc = PauliSum::identity(Complex64::new(1.0, 0.0));
    for (pos, &q) in qubits.iter().enumerate() {
        let shift = k - 1 - pos;
        let bi = (i >> shift) & 1;
        let bj = (j >> shift) & 1;
        let z = |c: Complex64| PauliTerm::new(c, &[(q, Pauli::Z)]).expect("single factor");
        let x = |c: Complex64| PauliTerm::new(c, &[(q, Pauli::X)]).expect("single factor");
        let y = |c: Complex64| PauliTerm::new(c, &[(q, Pauli::Y)]).expect("single factor");
        let factor = match (bi, bj) {
            // |0><0| = (I + Z)/2
            (0, 0) => PauliSum::from_terms([PauliTerm::identity(half), z(half)]),
            // |1><1| = (I - Z)/2
            (1, 1) => PauliSum::from_terms([PauliTerm::identity(half), z(-half)]),
            // |0><1| = (X + iY)/2
            (0, 1) => PauliSum::from_terms([x(half), y(half_i)]),
            // |1><0| = (X - iY)/2
            _ => PauliSum::from_terms([x(half), y(-half_i)]),
        };
        acc = acc.mul(&factor);
    }
    acc
}

/// Truncated creation operator `sum_n sqrt(n+1) |n+1><n|` for `n < cutoff`.
pub fn creation_operator(layout: &SetupLayout, path: &str, mode: i32) -> Result<PauliSum> {
    let qubits: Vec<usize> = layout.qubit_range(path, mode)?.collect();
    let mut acc = PauliSum::zero();
    for n in 0..layout.cutoff() {
        let amp = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
        acc = acc.add(&outer_product(&qubits, n + 1, n).scale(amp));
    }
    Ok(acc)
}

pub fn annihilation_operator(layout: &SetupLayout, path: &str, mode: i32) -> Result<PauliSum> {
    Ok(creation_operator(layout, path, mode)?.adjoint())
}

/// `sum_n n |n><n|` over physical occupations; contains only `I` and `Z`.
pub fn number_operator(layout: &SetupLayout, path: &str, mode: i32) -> Result<PauliSum> {
    let qubits: Vec<usize> = layout.qubit_range(path, mode)?.collect();
    let mut acc = PauliSum::zero();
    for n in 1..=layout.cutoff() {
        acc = acc.add(&outer_product(&qubits, n, n).scale(Complex64::new(n as f64, 0.0)));
    }
    Ok(acc)
}
