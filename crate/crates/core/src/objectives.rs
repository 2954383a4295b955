//! Fidelity objectives as expectation-value trees over circuits.

use std::sync::Arc;

use num_complex::Complex64;

use crate::circuit::{Axis, Gate, GateCircuit, ParamExpr, ParamValues};
use crate::encoding::SetupLayout;
use crate::error::{Error, Result};
use crate::fock_oracle::{FockVector, DEGENERATE_THRESHOLD};
use crate::pauli::{Pauli, PauliSum};
use crate::simulator::{expectation, run_from_zero, zero_probability_on, StateVector};
use crate::synthesis::disentangler;

/// Trigger state of the heralding path.
#[derive(Clone, Debug, PartialEq)]
pub enum Trigger {
    /// Fixed occupations for the path's modes in layout order.
    Pattern(Vec<u32>),
    /// One photon spread over up to three modes with amplitudes
    /// `(cos a, sin a cos b, sin a sin b)`, truncated to the mode count.
    Chart { alpha: ParamExpr, beta: ParamExpr },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeraldSpec {
    pub path: String,
    pub trigger: Trigger,
}

impl HeraldSpec {
    pub fn angles(&self) -> Vec<&ParamExpr> {
        match &self.trigger {
            Trigger::Pattern(_) => vec![],
            Trigger::Chart { alpha, beta } => vec![alpha, beta],
        }
    }

    /// Trigger state as `(occupations over the path's modes, amplitude)`.
    pub fn trigger_amplitudes(
        &self,
        layout: &SetupLayout,
        values: &ParamValues,
    ) -> Result<Vec<(Vec<u32>, Complex64)>> {
        let modes = layout.path(&self.path)?.modes.len();
        match &self.trigger {
            Trigger::Pattern(p) => {
                if p.len() != modes {
                    return Err(Error::Config(format!(
                        "trigger pattern has {} entries, path `{}` has {modes} modes",
                        p.len(),
                        self.path
                    )));
                }
                if let Some(n) = p.iter().find(|&&n| n > layout.cutoff()) {
                    return Err(Error::Encoding(format!("trigger occupation {n} exceeds cutoff")));
                }
                Ok(vec![(p.clone(), Complex64::new(1.0, 0.0))])
            }
            Trigger::Chart { alpha, beta } => {
                let (a, b) = (alpha.value(values)?, beta.value(values)?);
                let amps: Vec<f64> = match modes {
                    1 => vec![1.0],
                    2 => vec![a.cos(), a.sin()],
                    3 => vec![a.cos(), a.sin() * b.cos(), a.sin() * b.sin()],
                    _ => {
                        return Err(Error::Unsupported(format!(
                            "trigger chart over {modes} modes"
                        )))
                    }
                };
                Ok(amps
                    .into_iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let mut occ = vec![0; modes];
                        occ[i] = 1;
                        (occ, Complex64::new(x, 0.0))
                    })
                    .collect())
            }
        }
    }
}

/// Measured operator of a leaf.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Pauli(PauliSum),
    /// `|0..0><0..0|` on the listed qubits, read directly from amplitudes.
    ZeroProjector(Vec<usize>),
}

impl Observable {
    pub fn evaluate(&self, state: &StateVector) -> Result<f64> {
        match self {
            Observable::Pauli(h) => expectation(state, h),
            Observable::ZeroProjector(qs) => Ok(zero_probability_on(state, qs)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Denominator of the outermost ratio, if any.
    pub denominator: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum Objective {
    Leaf {
        circuit: Arc<GateCircuit>,
        observable: Observable,
    },
    Ratio {
        numerator: Box<Objective>,
        denominator: Box<Objective>,
    },
}

impl Objective {
    pub fn leaf(circuit: Arc<GateCircuit>, observable: Observable) -> Self {
        Objective::Leaf {
            circuit,
            observable,
        }
    }

    pub fn ratio(numerator: Objective, denominator: Objective) -> Self {
        Objective::Ratio {
            numerator: Box::new(numerator),
            denominator: Box::new(denominator),
        }
    }

    /// Leaves in depth-first order, numerators before denominators.
    pub fn leaves(&self) -> Vec<(&Arc<GateCircuit>, &Observable)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a Arc<GateCircuit>, &'a Observable)>) {
        match self {
            Objective::Leaf {
                circuit,
                observable,
            } => out.push((circuit, observable)),
            Objective::Ratio {
                numerator,
                denominator,
            } => {
                numerator.collect_leaves(out);
                denominator.collect_leaves(out);
            }
        }
    }

    /// Distinct circuits (by identity) in first-use order, and for every leaf
    /// the index of its circuit.
    pub fn circuits(&self) -> (Vec<Arc<GateCircuit>>, Vec<usize>) {
        let mut distinct: Vec<Arc<GateCircuit>> = Vec::new();
        let mut index = Vec::new();
        for (c, _) in self.leaves() {
            match distinct.iter().position(|d| Arc::ptr_eq(d, c)) {
                Some(i) => index.push(i),
                None => {
                    index.push(distinct.len());
                    distinct.push(c.clone());
                }
            }
        }
        (distinct, index)
    }

    /// Sorted names of all parameters referenced by any leaf circuit.
    pub fn params(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .circuits()
            .0
            .iter()
            .flat_map(|c| c.referenced_params())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Evaluates every leaf; circuits shared between leaves run once.
    pub fn evaluate(&self, values: &ParamValues) -> Result<Evaluation> {
        let (circuits, index) = self.circuits();
        let states: Vec<StateVector> = circuits
            .iter()
            .map(|c| run_from_zero(c, values))
            .collect::<Result<_>>()?;
        let leaf_values: Vec<f64> = self
            .leaves()
            .iter()
            .zip(&index)
            .map(|((_, obs), &i)| obs.evaluate(&states[i]))
            .collect::<Result<_>>()?;
        self.combine(&leaf_values)
    }

    /// Tree value from leaf values given in [`Objective::leaves`] order.
    pub fn combine(&self, leaf_values: &[f64]) -> Result<Evaluation> {
        let mut cursor = 0;
        self.combine_at(leaf_values, &mut cursor)
    }

    fn combine_at(&self, leaf_values: &[f64], cursor: &mut usize) -> Result<Evaluation> {
        match self {
            Objective::Leaf { .. } => {
                let v = leaf_values[*cursor];
                *cursor += 1;
                Ok(Evaluation {
                    value: v,
                    denominator: None,
                })
            }
            Objective::Ratio {
                numerator,
                denominator,
            } => {
                let n = numerator.combine_at(leaf_values, cursor)?.value;
                let d = denominator.combine_at(leaf_values, cursor)?.value;
                if d < DEGENERATE_THRESHOLD {
                    return Err(Error::DegenerateFidelity(d));
                }
                Ok(Evaluation {
                    value: n / d,
                    denominator: Some(d),
                })
            }
        }
    }

    /// Derivative of the tree from leaf values and leaf derivatives, by the
    /// quotient rule at ratio nodes.
    pub fn combine_derivative(&self, leaf_values: &[f64], leaf_derivs: &[f64]) -> Result<f64> {
        let mut cursor = 0;
        Ok(self.derivative_at(leaf_values, leaf_derivs, &mut cursor)?.1)
    }

    fn derivative_at(
        &self,
        values: &[f64],
        derivs: &[f64],
        cursor: &mut usize,
    ) -> Result<(f64, f64)> {
        match self {
            Objective::Leaf { .. } => {
                let out = (values[*cursor], derivs[*cursor]);
                *cursor += 1;
                Ok(out)
            }
            Objective::Ratio {
                numerator,
                denominator,
            } => {
                let (n, dn) = numerator.derivative_at(values, derivs, cursor)?;
                let (d, dd) = denominator.derivative_at(values, derivs, cursor)?;
                if d < DEGENERATE_THRESHOLD {
                    return Err(Error::DegenerateFidelity(d));
                }
                Ok((n / d, (dn * d - n * dd) / (d * d)))
            }
        }
    }
}

/// `U` with `U|target> = |0...0>` up to phase, on the layout register.
pub fn target_disentangler(layout: &SetupLayout, target: &FockVector) -> Result<GateCircuit> {
    let n = layout.total_qubits();
    let amps: Vec<(usize, Complex64)> = target
        .amplitudes()
        .iter()
        .map(|(f, a)| Ok((layout.fock_to_index(f, n)?, *a)))
        .collect::<Result<_>>()?;
    disentangler(n, &amps)
}

/// Trigger preparation `U_p` on the trigger path's qubits. Its inverse maps
/// the trigger state to all zeros.
pub fn herald_trigger_circuit(layout: &SetupLayout, herald: &HeraldSpec) -> Result<GateCircuit> {
    let spec = layout.path(&herald.path)?;
    let mut circuit = GateCircuit::new(layout.total_qubits());
    match &herald.trigger {
        Trigger::Pattern(pattern) => {
            herald.trigger_amplitudes(layout, &ParamValues::new())?;
            let k = layout.qubits_per_mode();
            for (&m, &count) in spec.modes.iter().zip(pattern) {
                for (pos, q) in layout.qubit_range(&herald.path, m)?.enumerate() {
                    if (count >> (k - 1 - pos)) & 1 == 1 {
                        circuit.push(Gate::X(q))?;
                    }
                }
            }
        }
        Trigger::Chart { alpha, beta } => {
            if layout.cutoff() != 1 {
                return Err(Error::Unsupported(format!(
                    "trigger chart at cutoff {}",
                    layout.cutoff()
                )));
            }
            let qs = layout.path_qubits(&herald.path)?;
            if qs.is_empty() || qs.len() > 3 {
                return Err(Error::Unsupported(format!("trigger chart over {} modes", qs.len())));
            }
            circuit.push(Gate::X(qs[0]))?;
            if qs.len() >= 2 {
                push_givens(&mut circuit, qs[0], qs[1], alpha)?;
            }
            if qs.len() == 3 {
                circuit.push(Gate::ControlledRot {
                    axis: Axis::Y,
                    controls: vec![qs[1]],
                    target: qs[2],
                    angle: beta.times(2.0),
                })?;
                circuit.push(Gate::Cnot {
                    control: qs[2],
                    target: qs[1],
                })?;
            }
        }
    }
    Ok(circuit)
}

/// `exp(-i t (X_a Y_b - Y_a X_b)/2)`: `|10> -> cos t |10> + sin t |01>`.
fn push_givens(circuit: &mut GateCircuit, a: usize, b: usize, t: &ParamExpr) -> Result<()> {
    circuit.push(Gate::PauliExp {
        ops: vec![(a, Pauli::X), (b, Pauli::Y)],
        coeff: 0.5,
        angle: t.clone(),
        trotter: None,
    })?;
    circuit.push(Gate::PauliExp {
        ops: vec![(a, Pauli::Y), (b, Pauli::X)],
        coeff: -0.5,
        angle: t.clone(),
        trotter: None,
    })
}

/// Parity-transfer circuit: one ancilla per path after the layout qubits,
/// flipped to `|1>` and then CNOT-ed from every mode qubit of the path, so the
/// ancilla reads 0 exactly for odd photon numbers.
pub fn postselect_encoding(layout: &SetupLayout, paths: &[String]) -> Result<(GateCircuit, Vec<usize>)> {
    if layout.cutoff() != 1 {
        return Err(Error::Unsupported(format!(
            "parity post-selection at cutoff {} (needs one qubit per mode)",
            layout.cutoff()
        )));
    }
    let base = layout.total_qubits();
    let mut circuit = GateCircuit::new(base + paths.len());
    let mut ancillas = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let anc = base + i;
        circuit.push(Gate::X(anc))?;
        for q in layout.path_qubits(p)? {
            circuit.push(Gate::Cnot { control: q, target: anc })?;
        }
        ancillas.push(anc);
    }
    Ok((circuit, ancillas))
}

/// Ratio objective for heralded, post-selected fidelity.
///
/// Circuit: setup, `U_p^dagger` on the trigger path, parity encoding, then
/// the target disentangler. The numerator projects every qubit on zero; the
/// denominator only the trigger qubits and the ancillas, which the
/// disentangler does not touch, so both leaves share one circuit.
pub fn build_post_selected_fidelity(
    layout: &SetupLayout,
    setup_circuit: &GateCircuit,
    target: &FockVector,
    herald: &HeraldSpec,
    postsel: &[String],
) -> Result<Objective> {
    let mut seen = std::collections::BTreeSet::new();
    for p in postsel {
        layout.path(p)?;
        if p == &herald.path {
            return Err(Error::Config(format!("path `{p}` is both trigger and post-selected")));
        }
        if !seen.insert(p) {
            return Err(Error::Config(format!("path `{p}` post-selected twice")));
        }
    }
    let trigger_slots = layout.path_slots(&herald.path)?;
    if target
        .amplitudes()
        .keys()
        .any(|f| trigger_slots.iter().any(|&s| f.0[s] > 0))
    {
        return Err(Error::Validation(format!(
            "target places photons in the trigger path `{}`",
            herald.path
        )));
    }
    let (encoding, ancillas) = postselect_encoding(layout, postsel)?;
    let n = encoding.num_qubits();
    let mut circuit = setup_circuit.widened(n)?;
    circuit.append(&herald_trigger_circuit(layout, herald)?.inverse())?;
    circuit.append(&encoding)?;
    circuit.append(&target_disentangler(layout, target)?)?;
    let circuit = Arc::new(circuit);

    let mut herald_qubits = layout.path_qubits(&herald.path)?;
    herald_qubits.extend(&ancillas);
    Ok(Objective::ratio(
        Objective::leaf(circuit.clone(), Observable::ZeroProjector((0..n).collect())),
        Objective::leaf(circuit, Observable::ZeroProjector(herald_qubits)),
    ))
}

/// `|<target|setup>|^2` as the all-zero probability after the disentangler,
/// with the target given as `(basis index, amplitude)` pairs.
pub fn build_plain_fidelity_qubits(
    setup_circuit: &GateCircuit,
    target: &[(usize, Complex64)],
) -> Result<Objective> {
    let n = setup_circuit.num_qubits();
    let mut circuit = setup_circuit.clone();
    circuit.append(&disentangler(n, target)?)?;
    Ok(Objective::leaf(
        Arc::new(circuit),
        Observable::ZeroProjector((0..n).collect()),
    ))
}

pub fn build_plain_fidelity(
    layout: &SetupLayout,
    setup_circuit: &GateCircuit,
    target: &FockVector,
) -> Result<Objective> {
    let mut circuit = setup_circuit.clone();
    circuit.append(&target_disentangler(layout, target)?.widened(setup_circuit.num_qubits())?)?;
    let n = circuit.num_qubits();
    Ok(Objective::leaf(
        Arc::new(circuit),
        Observable::ZeroProjector((0..n).collect()),
    ))
}
