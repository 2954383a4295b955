//! Dense statevector engine.
//!
//! Basis index bit `n-1-q` holds qubit `q`, so qubit 0 is the most
//! significant bit, matching [`crate::encoding`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Axis, Gate, GateCircuit, ParamExpr, ParamValues};
use crate::encoding::{FockState, SetupLayout};
use crate::error::{Error, Result};
use crate::pauli::PauliSum;

pub const DEFAULT_MAX_QUBITS: usize = 24;
pub const MAX_QUBITS_ENV: &str = "QOPTIC_MAX_QUBITS";

/// Largest register the simulator accepts, from `QOPTIC_MAX_QUBITS` or 24.
pub fn max_qubits() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

fn check_size(n: usize) -> Result<()> {
    let limit = max_qubits();
    if n > limit {
        return Err(Error::Resource(format!(
            "{n} qubits exceed the simulator limit of {limit} (set {MAX_QUBITS_ENV} to raise it)"
        )));
    }
    Ok(())
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::Validation(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two. No
    /// normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Validation(format!(
                "amplitude count {dim} is not a power of two"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_size(num_qubits)?;
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn bit(&self, q: usize) -> usize {
        1usize << (self.num_qubits - 1 - q)
    }

    fn apply_matrix(&mut self, q: usize, m: [[Complex64; 2]; 2], control_mask: usize) {
        let bit = self.bit(q);
        let dim = self.amps.len();
        for base in (0..dim).step_by(2 * bit) {
            for i in base..base + bit {
                if i & control_mask != control_mask {
                    continue;
                }
                let j = i | bit;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_diagonal(&mut self, q: usize, d0: Complex64, d1: Complex64) {
        let bit = self.bit(q);
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { d0 } else { d1 };
        }
    }

    fn apply_pauli_exp(&mut self, x: usize, z: usize, y_count: usize, theta: f64) {
        let (s, c) = theta.sin_cos();
        let y_phase = Complex64::i().powu(y_count as u32);
        let sign = |j: usize| if (j & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let minus_i_s = Complex64::new(0.0, -s);
        if x == 0 {
            let plus = Complex64::new(c, -s);
            let minus = Complex64::new(c, s);
            for (j, a) in self.amps.iter_mut().enumerate() {
                *a *= if sign(j) > 0.0 { plus } else { minus };
            }
            return;
        }
        let top = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for j in 0..self.amps.len() {
            if j & top != 0 {
                continue;
            }
            let k = j ^ x;
            let aj = self.amps[j];
            let ak = self.amps[k];
            // P|k> = y_phase * sign(k) |j>
            self.amps[j] = c * aj + minus_i_s * y_phase * sign(k) * ak;
            self.amps[k] = c * ak + minus_i_s * y_phase * sign(j) * aj;
        }
    }

    fn swap_where(&mut self, select: impl Fn(usize) -> bool, partner: impl Fn(usize) -> usize) {
        for i in 0..self.amps.len() {
            if select(i) {
                self.amps.swap(i, partner(i));
            }
        }
    }

    /// Applies one gate; angles are resolved against `values`, then against
    /// the symbol table `fallback`.
    pub fn apply_gate(
        &mut self,
        gate: &Gate,
        values: &ParamValues,
        fallback: &ParamValues,
    ) -> Result<()> {
        let resolve = |e: &ParamExpr| -> Result<f64> {
            match e {
                ParamExpr::Const(c) => Ok(*c),
                ParamExpr::Affine {
                    name,
                    scale,
                    offset,
                } => values
                    .get(name)
                    .or_else(|| fallback.get(name))
                    .map(|v| scale * v + offset)
                    .ok_or_else(|| Error::Binding(name.clone())),
            }
        };
        for q in gate.qubits() {
            if q >= self.num_qubits {
                return Err(Error::Validation(format!(
                    "gate `{gate}` outside a {}-qubit state",
                    self.num_qubits
                )));
            }
        }
        match gate {
            Gate::X(q) => {
                let b = self.bit(*q);
                self.swap_where(|i| i & b == 0, |i| i | b);
            }
            Gate::H(q) => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                self.apply_matrix(*q, [[h, h], [h, -h]], 0);
            }
            Gate::PhaseS { qubit, angle } => {
                let t = resolve(angle)?;
                self.apply_diagonal(*qubit, ONE, Complex64::from_polar(1.0, t));
            }
            Gate::Rot { axis, qubit, angle } => {
                let t = resolve(angle)?;
                match axis {
                    Axis::Z => self.apply_diagonal(
                        *qubit,
                        Complex64::from_polar(1.0, -t / 2.0),
                        Complex64::from_polar(1.0, t / 2.0),
                    ),
                    _ => self.apply_matrix(*qubit, rotation(*axis, t), 0),
                }
            }
            Gate::ControlledRot {
                axis,
                controls,
                target,
                angle,
            } => {
                let t = resolve(angle)?;
                let mask = controls.iter().fold(0, |m, &c| m | self.bit(c));
                self.apply_matrix(*target, rotation(*axis, t), mask);
            }
            Gate::Swap(a, b) => {
                let (ba, bb) = (self.bit(*a), self.bit(*b));
                self.swap_where(|i| i & ba != 0 && i & bb == 0, |i| i ^ ba ^ bb);
            }
            Gate::Cnot { control, target } => {
                let (bc, bt) = (self.bit(*control), self.bit(*target));
                self.swap_where(|i| i & bc != 0 && i & bt == 0, |i| i | bt);
            }
            Gate::PauliExp {
                ops, coeff, angle, ..
            } => {
                let t = resolve(angle)? * coeff;
                let mut x = 0;
                let mut z = 0;
                let mut ny = 0;
                for &(q, p) in ops {
                    let b = self.bit(q);
                    match p {
                        crate::pauli::Pauli::X => x |= b,
                        crate::pauli::Pauli::Y => {
                            x |= b;
                            z |= b;
                            ny += 1;
                        }
                        crate::pauli::Pauli::Z => z |= b,
                    }
                }
                self.apply_pauli_exp(x, z, ny, t);
            }
        }
        Ok(())
    }
}

fn rotation(axis: Axis, t: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (t / 2.0).sin_cos();
    let re = |v: f64| Complex64::new(v, 0.0);
    let im = |v: f64| Complex64::new(0.0, v);
    match axis {
        Axis::X => [[re(c), im(-s)], [im(-s), re(c)]],
        Axis::Y => [[re(c), re(-s)], [re(s), re(c)]],
        Axis::Z => [[Complex64::from_polar(1.0, -t / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, t / 2.0)]],
    }
}

/// Runs `circuit` on `initial` using the circuit's own parameter values.
pub fn run(circuit: &GateCircuit, initial: &StateVector) -> Result<StateVector> {
    run_with(circuit, initial, &ParamValues::new())
}

/// Runs `circuit` with `values` overriding its symbol table.
pub fn run_with(
    circuit: &GateCircuit,
    initial: &StateVector,
    values: &ParamValues,
) -> Result<StateVector> {
    if initial.num_qubits != circuit.num_qubits() {
        return Err(Error::Validation(format!(
            "circuit has {} qubits, initial state has {}",
            circuit.num_qubits(),
            initial.num_qubits
        )));
    }
    let mut state = initial.clone();
    for g in circuit.gates() {
        state.apply_gate(g, values, circuit.params())?;
    }
    Ok(state)
}

/// Runs `circuit` from `|0...0>`.
pub fn run_from_zero(circuit: &GateCircuit, values: &ParamValues) -> Result<StateVector> {
    run_with(circuit, &StateVector::zeros(circuit.num_qubits())?, values)
}

/// Dense unitary of a small circuit, row-major, by running every basis state.
pub fn unitary(circuit: &GateCircuit, values: &ParamValues) -> Result<Vec<Vec<Complex64>>> {
    let n = circuit.num_qubits();
    if n > 12 {
        return Err(Error::Resource(format!("dense unitary of {n} qubits")));
    }
    let dim = 1usize << n;
    let mut m = vec![vec![ZERO; dim]; dim];
    for col in 0..dim {
        let out = run_with(circuit, &StateVector::basis(n, col)?, values)?;
        for (row, a) in out.amps.iter().enumerate() {
            m[row][col] = *a;
        }
    }
    Ok(m)
}

/// `<psi|H|psi>` for a Hermitian Pauli sum, evaluated term by term from the
/// bit masks without copying the state.
pub fn expectation(state: &StateVector, h: &PauliSum) -> Result<f64> {
    if !h.is_hermitian(1e-12) {
        return Err(Error::Validation(format!("observable is not Hermitian: {h}")));
    }
    if let Some(q) = h.max_qubit() {
        if q >= state.num_qubits {
            return Err(Error::Validation(format!(
                "observable acts on qubit {q} of a {}-qubit state",
                state.num_qubits
            )));
        }
    }
    let mut total = ZERO;
    for term in h.terms() {
        let (x, z) = term.masks(state.num_qubits);
        let y_phase = Complex64::i().powu(term.y_count() as u32);
        let mut acc = ZERO;
        for (j, a) in state.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let sign = if (j & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += state.amps[j ^ x].conj() * a * sign;
        }
        total += term.coeff * y_phase * acc;
    }
    if total.im.abs() > 1e-10 {
        return Err(Error::Validation(format!(
            "expectation has imaginary residue {:.3e}",
            total.im
        )));
    }
    Ok(total.re)
}

pub fn all_zero_probability(state: &StateVector) -> f64 {
    state.amps[0].norm_sqr()
}

/// Probability that every qubit in `qubits` reads 0.
pub fn zero_probability_on(state: &StateVector, qubits: &[usize]) -> f64 {
    let mask = qubits.iter().fold(0, |m, &q| m | state.bit(q));
    state
        .amps
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// `shots` i.i.d. computational-basis draws, returned as counts by basis
/// index. Deterministic for a fixed seed.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    let mut cumulative = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let last = state
        .amps
        .iter()
        .rposition(|a| a.norm_sqr() > 0.0)
        .unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.random::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= u).min(last);
        *counts.entry(idx).or_insert(0) += 1;
    }
    counts
}

/// Probability mass of basis states whose layout part decodes to a physical
/// Fock state (occupations within the cutoff) with `expected_photons` in total.
pub fn valid_state_fraction(state: &StateVector, layout: &SetupLayout, expected_photons: u32) -> f64 {
    let n = state.num_qubits;
    state
        .amps
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .filter(|(i, _)| {
            let fock = layout.index_to_fock(*i, n);
            fock.0.iter().all(|&c| c <= layout.cutoff()) && fock.total_photons() == expected_photons
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Marginal distribution over the layout qubits, keyed by raw decoded
/// occupations. Zero-probability entries are omitted.
pub fn decode(state: &StateVector, layout: &SetupLayout) -> Result<BTreeMap<FockState, f64>> {
    let n = state.num_qubits;
    if layout.total_qubits() > n {
        return Err(Error::Validation(format!(
            "layout needs {} qubits, state has {n}",
            layout.total_qubits()
        )));
    }
    let mut dist = BTreeMap::new();
    for (i, a) in state.amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            *dist.entry(layout.index_to_fock(i, n)).or_insert(0.0) += p;
        }
    }
    Ok(dist)
}

/// `1/2 sum |p - q|` over the union of both supports.
pub fn total_variation(p: &BTreeMap<FockState, f64>, q: &BTreeMap<FockState, f64>) -> f64 {
    let mut d: f64 = p
        .iter()
        .map(|(k, pv)| (pv - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum();
    d += q.iter().filter(|(k, _)| !p.contains_key(*k)).map(|(_, v)| v.abs()).sum::<f64>();
    d / 2.0
}
