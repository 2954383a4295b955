//! Gate-level IR with symbolic affine parameters.
//!
//! Conventions: `Rot{axis}(t) = exp(-i t sigma/2)`, `PhaseS(t) = diag(1, e^{it})`
//! and `PauliExp{coeff, angle}` is `exp(-i angle coeff P)`. Gates are listed in
//! time order.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliSum};

/// Parameter assignments by name, in radians.
pub type ParamValues = BTreeMap<String, f64>;

/// `scale * value(name) + offset`, or a constant.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamExpr {
    Const(f64),
    Affine {
        name: String,
        scale: f64,
        offset: f64,
    },
}

impl ParamExpr {
    pub fn param(name: impl Into<String>) -> Self {
        ParamExpr::Affine {
            name: name.into(),
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            ParamExpr::Const(_) => None,
            ParamExpr::Affine { name, .. } => Some(name),
        }
    }

    /// Coefficient of the named parameter; zero for constants.
    pub fn scale(&self) -> f64 {
        match self {
            ParamExpr::Const(_) => 0.0,
            ParamExpr::Affine { scale, .. } => *scale,
        }
    }

    /// Multiplies the whole expression by `factor`.
    pub fn times(&self, factor: f64) -> Self {
        match self {
            ParamExpr::Const(c) => ParamExpr::Const(c * factor),
            ParamExpr::Affine {
                name,
                scale,
                offset,
            } => ParamExpr::Affine {
                name: name.clone(),
                scale: scale * factor,
                offset: offset * factor,
            },
        }
    }

    pub fn shifted(&self, delta: f64) -> Self {
        match self {
            ParamExpr::Const(c) => ParamExpr::Const(c + delta),
            ParamExpr::Affine {
                name,
                scale,
                offset,
            } => ParamExpr::Affine {
                name: name.clone(),
                scale: *scale,
                offset: offset + delta,
            },
        }
    }

    pub fn value(&self, values: &ParamValues) -> Result<f64> {
        match self {
            ParamExpr::Const(c) => Ok(*c),
            ParamExpr::Affine {
                name,
                scale,
                offset,
            } => values
                .get(name)
                .map(|v| scale * v + offset)
                .ok_or_else(|| Error::Binding(name.clone())),
        }
    }
}

impl From<f64> for ParamExpr {
    fn from(v: f64) -> Self {
        ParamExpr::Const(v)
    }
}

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamExpr::Const(c) => write!(f, "{c}"),
            ParamExpr::Affine {
                name,
                scale,
                offset,
            } => {
                if *scale == 1.0 {
                    write!(f, "{name}")?;
                } else if *scale == -1.0 {
                    write!(f, "-{name}")?;
                } else {
                    write!(f, "{scale}*{name}")?;
                }
                if *offset > 0.0 {
                    write!(f, "+{offset}")?;
                } else if *offset < 0.0 {
                    write!(f, "{offset}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// Position of a Pauli exponential inside a product formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrotterTag {
    pub step: usize,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    X(usize),
    H(usize),
    PhaseS {
        qubit: usize,
        angle: ParamExpr,
    },
    Rot {
        axis: Axis,
        qubit: usize,
        angle: ParamExpr,
    },
    /// Rotation on `target` applied when every control is `|1>`.
    ControlledRot {
        axis: Axis,
        controls: Vec<usize>,
        target: usize,
        angle: ParamExpr,
    },
    Swap(usize, usize),
    Cnot {
        control: usize,
        target: usize,
    },
    PauliExp {
        ops: Vec<(usize, Pauli)>,
        coeff: f64,
        angle: ParamExpr,
        trotter: Option<TrotterTag>,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X(q) | Gate::H(q) => vec![*q],
            Gate::PhaseS { qubit, .. } | Gate::Rot { qubit, .. } => vec![*qubit],
            Gate::ControlledRot {
                controls, target, ..
            } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::PauliExp { ops, .. } => ops.iter().map(|(q, _)| *q).collect(),
        }
    }

    pub fn angle(&self) -> Option<&ParamExpr> {
        match self {
            Gate::PhaseS { angle, .. }
            | Gate::Rot { angle, .. }
            | Gate::ControlledRot { angle, .. }
            | Gate::PauliExp { angle, .. } => Some(angle),
            _ => None,
        }
    }

    fn angle_mut(&mut self) -> Option<&mut ParamExpr> {
        match self {
            Gate::PhaseS { angle, .. }
            | Gate::Rot { angle, .. }
            | Gate::ControlledRot { angle, .. }
            | Gate::PauliExp { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// Copy of the gate with its angle shifted by `delta` radians.
    pub fn with_shifted_angle(&self, delta: f64) -> Gate {
        let mut g = self.clone();
        if let Some(a) = g.angle_mut() {
            *a = a.shifted(delta);
        }
        g
    }

    pub fn inverse(&self) -> Gate {
        let mut g = self.clone();
        if let Some(a) = g.angle_mut() {
            *a = a.times(-1.0);
        }
        g
    }

    /// Short mnemonic used in dumps and error messages.
    pub fn name(&self) -> String {
        match self {
            Gate::X(_) => "x".into(),
            Gate::H(_) => "h".into(),
            Gate::PhaseS { .. } => "phase_s".into(),
            Gate::Rot { axis, .. } => format!("r{}", axis.letter()),
            Gate::ControlledRot { axis, .. } => format!("cr{}", axis.letter()),
            Gate::Swap(..) => "swap".into(),
            Gate::Cnot { .. } => "cnot".into(),
            Gate::PauliExp { .. } => "pauli_exp".into(),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::X(q) | Gate::H(q) => write!(f, "{} q{q}", self.name()),
            Gate::PhaseS { qubit, angle } | Gate::Rot { qubit, angle, .. } => {
                write!(f, "{} q{qubit} {angle}", self.name())
            }
            Gate::ControlledRot {
                controls,
                target,
                angle,
                ..
            } => {
                let cs: Vec<String> = controls.iter().map(|c| format!("q{c}")).collect();
                write!(f, "{} [{}] q{target} {angle}", self.name(), cs.join(","))
            }
            Gate::Swap(a, b) => write!(f, "swap q{a} q{b}"),
            Gate::Cnot { control, target } => write!(f, "cnot q{control} q{target}"),
            Gate::PauliExp {
                ops,
                coeff,
                angle,
                trotter,
            } => {
                let s: Vec<String> = ops.iter().map(|(q, p)| format!("{}{q}", p.letter())).collect();
                write!(f, "pauli_exp {} {coeff} {angle}", s.join(" "))?;
                if let Some(t) = trotter {
                    write!(f, " step={}/{}", t.step + 1, t.steps)?;
                }
                Ok(())
            }
        }
    }
}

/// Ordered gate list on a fixed register plus a parameter symbol table.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GateCircuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    params: ParamValues,
}

impl GateCircuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            params: ParamValues::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Current parameter values.
    pub fn params(&self) -> &ParamValues {
        &self.params
    }

    /// Declares `name` (or updates its value).
    pub fn set_param(&mut self, name: impl Into<String>, value: f64) {
        self.params.insert(name.into(), value);
    }

    /// Appends a gate. Parameters it references are declared with value 0 if
    /// not yet known.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qs = gate.qubits();
        for (i, &q) in qs.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(Error::Validation(format!(
                    "gate `{gate}` touches qubit {q} outside a {}-qubit register",
                    self.num_qubits
                )));
            }
            if qs[..i].contains(&q) {
                return Err(Error::Validation(format!("gate `{gate}` repeats qubit {q}")));
            }
        }
        if let Gate::PauliExp { ops, .. } = &gate {
            if ops.is_empty() {
                return Err(Error::Validation("pauli_exp with an empty string".into()));
            }
        }
        if let Some(name) = gate.angle().and_then(|a| a.name()) {
            self.params.entry(name.to_string()).or_insert(0.0);
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other`. Parameter values from `other` are only
    /// used for names this circuit has not declared.
    pub fn append(&mut self, other: &GateCircuit) -> Result<()> {
        if other.num_qubits > self.num_qubits {
            return Err(Error::Validation(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        for (k, v) in &other.params {
            self.params.entry(k.clone()).or_insert(*v);
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// Same gates on a register of `num_qubits >= self.num_qubits()`.
    pub fn widened(&self, num_qubits: usize) -> Result<GateCircuit> {
        if num_qubits < self.num_qubits {
            return Err(Error::Validation(format!(
                "cannot shrink a {}-qubit circuit to {num_qubits} qubits",
                self.num_qubits
            )));
        }
        let mut c = self.clone();
        c.num_qubits = num_qubits;
        Ok(c)
    }

    /// Adjoint circuit: gates reversed, angles negated.
    pub fn inverse(&self) -> GateCircuit {
        GateCircuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            params: self.params.clone(),
        }
    }

    /// Replaces every parameter expression by its value. Assignments override
    /// the symbol table; a parameter missing from both is a binding error.
    pub fn bind(&self, assignments: &ParamValues) -> Result<GateCircuit> {
        let mut values = self.params.clone();
        values.extend(assignments.iter().map(|(k, v)| (k.clone(), *v)));
        let mut out = GateCircuit::new(self.num_qubits);
        for g in &self.gates {
            let mut g = g.clone();
            if let Some(a) = g.angle_mut() {
                *a = ParamExpr::Const(a.value(&values)?);
            }
            out.gates.push(g);
        }
        Ok(out)
    }

    /// Names of parameters referenced by at least one gate.
    pub fn referenced_params(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .gates
            .iter()
            .filter_map(|g| g.angle().and_then(|a| a.name()).map(str::to_string))
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Rewrites controlled rotations into CNOTs and single-qubit rotations.
    pub fn lower_controlled(&self) -> Result<GateCircuit> {
        let mut out = GateCircuit {
            num_qubits: self.num_qubits,
            gates: Vec::with_capacity(self.gates.len()),
            params: self.params.clone(),
        };
        for g in &self.gates {
            match g {
                Gate::ControlledRot { .. } => out.gates.extend(lower_controlled_rot(g)?),
                _ => out.gates.push(g.clone()),
            }
        }
        Ok(out)
    }

    /// Full lowering: Pauli exponentials become basis changes, CNOT ladders
    /// and `rz`; controlled rotations become CNOTs and rotations.
    pub fn lower(&self) -> Result<GateCircuit> {
        let mut out = GateCircuit {
            num_qubits: self.num_qubits,
            gates: Vec::with_capacity(self.gates.len()),
            params: self.params.clone(),
        };
        for g in &self.gates {
            match g {
                Gate::PauliExp { .. } => out.gates.extend(lower_pauliexp(g)?),
                Gate::ControlledRot { .. } => out.gates.extend(lower_controlled_rot(g)?),
                _ => out.gates.push(g.clone()),
            }
        }
        Ok(out)
    }

    /// Gate counts by mnemonic, sorted by name.
    pub fn gate_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for g in &self.gates {
            *counts.entry(g.name()).or_insert(0) += 1;
        }
        counts
    }
}

/// Stable text dump: a `qubits N` header, one `param` line per declared
/// parameter and one gate per line.
impl fmt::Display for GateCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for (k, v) in &self.params {
            writeln!(f, "param {k} {v}")?;
        }
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// First-order product formula for `exp(-i angle generator)`.
///
/// Identity terms only contribute a global phase and are dropped. The circuit
/// spans qubits `0..=max_qubit` of the generator.
pub fn trotterize(
    generator: &PauliSum,
    angle: &ParamExpr,
    steps: usize,
) -> Result<GateCircuit> {
    if steps == 0 {
        return Err(Error::Validation("Trotter steps must be at least 1".into()));
    }
    if !generator.is_hermitian(1e-12) {
        return Err(Error::Validation(format!(
            "generator is not Hermitian: {generator}"
        )));
    }
    let n = generator.max_qubit().map_or(0, |q| q + 1);
    let mut circuit = GateCircuit::new(n);
    let slice = angle.times(1.0 / steps as f64);
    for step in 0..steps {
        for term in generator.terms() {
            if term.is_identity() {
                continue;
            }
            circuit.push(Gate::PauliExp {
                ops: term.ops().collect(),
                coeff: term.coeff.re,
                angle: slice.clone(),
                trotter: Some(TrotterTag { step, steps }),
            })?;
        }
    }
    Ok(circuit)
}

/// Basis change, CNOT ladder, `rz(2 coeff angle)` on the last qubit, undo.
pub fn lower_pauliexp(gate: &Gate) -> Result<Vec<Gate>> {
    let Gate::PauliExp {
        ops, coeff, angle, ..
    } = gate
    else {
        return Err(Error::Validation(format!("`{gate}` is not a Pauli exponential")));
    };
    if ops.is_empty() {
        return Err(Error::Validation("pauli_exp with an empty string".into()));
    }
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for &(q, p) in ops {
        match p {
            Pauli::X => {
                pre.push(Gate::H(q));
                post.push(Gate::H(q));
            }
            Pauli::Y => {
                pre.push(Gate::Rot {
                    axis: Axis::X,
                    qubit: q,
                    angle: ParamExpr::Const(FRAC_PI_2),
                });
                post.push(Gate::Rot {
                    axis: Axis::X,
                    qubit: q,
                    angle: ParamExpr::Const(-FRAC_PI_2),
                });
            }
            Pauli::Z => {}
        }
    }
    let qubits: Vec<usize> = ops.iter().map(|(q, _)| *q).collect();
    let ladder: Vec<Gate> = qubits
        .windows(2)
        .map(|w| Gate::Cnot {
            control: w[0],
            target: w[1],
        })
        .collect();
    let mut out = pre;
    out.extend(ladder.iter().cloned());
    out.push(Gate::Rot {
        axis: Axis::Z,
        qubit: *qubits.last().expect("nonempty"),
        angle: angle.times(2.0 * coeff),
    });
    out.extend(ladder.into_iter().rev());
    out.extend(post);
    Ok(out)
}

/// Single-control rotation as `r(t/2)`, CNOT, `r(-t/2)`, CNOT, with an `h`
/// conjugation for the `x` axis.
pub fn lower_controlled_rot(gate: &Gate) -> Result<Vec<Gate>> {
    let Gate::ControlledRot {
        axis,
        controls,
        target,
        angle,
    } = gate
    else {
        return Err(Error::Validation(format!("`{gate}` is not a controlled rotation")));
    };
    let &[control] = controls.as_slice() else {
        return Err(Error::Unsupported(format!(
            "lowering `{gate}` with {} controls",
            controls.len()
        )));
    };
    let t = *target;
    let inner_axis = if *axis == Axis::X { Axis::Z } else { *axis };
    let mut out = Vec::new();
    if *axis == Axis::X {
        out.push(Gate::H(t));
    }
    out.push(Gate::Rot {
        axis: inner_axis,
        qubit: t,
        angle: angle.times(0.5),
    });
    out.push(Gate::Cnot { control, target: t });
    out.push(Gate::Rot {
        axis: inner_axis,
        qubit: t,
        angle: angle.times(-0.5),
    });
    out.push(Gate::Cnot { control, target: t });
    if *axis == Axis::X {
        out.push(Gate::H(t));
    }
    Ok(out)
}
