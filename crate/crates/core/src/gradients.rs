//! Parameter-shift gradients of objectives.
//!
//! For a gate `exp(-i t G)` whose generator has the two eigenvalues `+-r`
//! (up to a constant), `dE/dt = r [E(t + pi/(4r)) - E(t - pi/(4r))]`.
//! A parameter used by several gates collects one such term per occurrence,
//! weighted by the occurrence's affine coefficient.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::circuit::{Gate, GateCircuit, ParamValues};
use crate::error::{Error, Result};
use crate::objectives::{Evaluation, Objective};
use crate::simulator::StateVector;

/// How parametrized gates are mapped onto shift rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientPolicy {
    /// Controlled rotations are lowered first; every remaining gate has an
    /// exact two-eigenvalue rule.
    #[default]
    ParameterShift,
    /// No lowering, `r = 1/2` assumed for controlled rotations. Wrong
    /// whenever such a gate carries a parameter; kept as a regression fixture.
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftRule {
    /// Half the eigenvalue gap of the generator.
    pub r: f64,
}

impl ShiftRule {
    pub fn shift(&self) -> f64 {
        PI / (4.0 * self.r)
    }
}

/// Shift rule of a gate, `None` for gates without a free parameter.
pub fn shift_rule(gate: &Gate, policy: GradientPolicy) -> Result<Option<ShiftRule>> {
    let Some(angle) = gate.angle() else {
        return Ok(None);
    };
    if angle.name().is_none() || angle.scale() == 0.0 {
        return Ok(None);
    }
    match gate {
        Gate::PhaseS { .. } | Gate::Rot { .. } => Ok(Some(ShiftRule { r: 0.5 })),
        Gate::PauliExp { coeff, .. } if *coeff == 0.0 => Ok(None),
        Gate::PauliExp { coeff, .. } => Ok(Some(ShiftRule { r: coeff.abs() })),
        Gate::ControlledRot { .. } if policy == GradientPolicy::Naive => Ok(Some(ShiftRule { r: 0.5 })),
        _ => Err(Error::Differentiation(gate.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientResult {
    pub evaluation: Evaluation,
    pub gradient: Vec<f64>,
}

struct ShiftJob {
    circuit: usize,
    gate: usize,
    param: usize,
    weight: f64,
    delta: f64,
}

fn run_shifted(
    circuit: &GateCircuit,
    values: &ParamValues,
    shifted: Option<(usize, f64)>,
) -> Result<StateVector> {
    let mut state = StateVector::zeros(circuit.num_qubits())?;
    for (k, g) in circuit.gates().iter().enumerate() {
        match shifted {
            Some((idx, delta)) if idx == k => {
                state.apply_gate(&g.with_shifted_angle(delta), values, circuit.params())?
            }
            _ => state.apply_gate(g, values, circuit.params())?,
        }
    }
    Ok(state)
}

/// Objective value and its gradient with respect to `names`.
///
/// Shifted simulations run in parallel; results are combined in a fixed
/// order, so the output is deterministic.
pub fn gradient(
    objective: &Objective,
    names: &[String],
    values: &ParamValues,
    policy: GradientPolicy,
) -> Result<GradientResult> {
    let (circuits, leaf_circuit) = objective.circuits();
    let prepared: Vec<GateCircuit> = match policy {
        GradientPolicy::ParameterShift => circuits
            .iter()
            .map(|c| c.lower_controlled())
            .collect::<Result<_>>()?,
        GradientPolicy::Naive => circuits.iter().map(|c| (**c).clone()).collect(),
    };
    let leaves = objective.leaves();

    let leaf_values_for = |ci: usize, state: &StateVector, out: &mut Vec<f64>| -> Result<()> {
        for (leaf, &c) in leaves.iter().zip(&leaf_circuit) {
            if c == ci {
                out.push(leaf.1.evaluate(state)?);
            }
        }
        Ok(())
    };

    let base_states: Vec<StateVector> = prepared
        .par_iter()
        .map(|c| run_shifted(c, values, None))
        .collect::<Result<_>>()?;
    let base: Vec<f64> = leaves
        .iter()
        .zip(&leaf_circuit)
        .map(|(leaf, &c)| leaf.1.evaluate(&base_states[c]))
        .collect::<Result<_>>()?;
    let evaluation = objective.combine(&base)?;

    let mut jobs = Vec::new();
    for (ci, c) in prepared.iter().enumerate() {
        for (gi, g) in c.gates().iter().enumerate() {
            let Some(rule) = shift_rule(g, policy)? else {
                continue;
            };
            let angle = g.angle().expect("rule implies an angle");
            let Some(param) = names.iter().position(|n| Some(n.as_str()) == angle.name()) else {
                continue;
            };
            let s = rule.shift();
            for sign in [1.0, -1.0] {
                jobs.push(ShiftJob {
                    circuit: ci,
                    gate: gi,
                    param,
                    weight: sign * angle.scale() * rule.r,
                    delta: sign * s,
                });
            }
        }
    }

    let shifted: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|job| {
            let state = run_shifted(&prepared[job.circuit], values, Some((job.gate, job.delta)))?;
            let mut out = Vec::new();
            leaf_values_for(job.circuit, &state, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut grad = Vec::with_capacity(names.len());
    for p in 0..names.len() {
        let mut leaf_derivs = vec![0.0; leaves.len()];
        for (job, vals) in jobs.iter().zip(&shifted) {
            if job.param != p {
                continue;
            }
            let mut it = vals.iter();
            for (li, &c) in leaf_circuit.iter().enumerate() {
                if c == job.circuit {
                    leaf_derivs[li] += job.weight * it.next().expect("one value per leaf");
                }
            }
        }
        grad.push(objective.combine_derivative(&base, &leaf_derivs)?);
    }
    Ok(GradientResult {
        evaluation,
        gradient: grad,
    })
}

/// Central differences `(f(x+h) - f(x-h)) / 2h` per parameter.
pub fn finite_difference(
    objective: &Objective,
    names: &[String],
    values: &ParamValues,
    h: f64,
) -> Result<Vec<f64>> {
    names
        .iter()
        .map(|name| {
            let at = |delta: f64| -> Result<f64> {
                let mut v = values.clone();
                let x = *v.get(name).ok_or_else(|| Error::Binding(name.clone()))?;
                v.insert(name.clone(), x + delta);
                Ok(objective.evaluate(&v)?.value)
            };
            Ok((at(h)? - at(-h)?) / (2.0 * h))
        })
        .collect()
}
