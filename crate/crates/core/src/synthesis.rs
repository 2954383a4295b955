//! Circuits that map a sparse target state to `|0...0>`.
//!
//! The disentangler works in three stages:
//!
//! 1. `x` gates move the first support string to all zeros.
//! 2. CNOTs row-reduce the support strings over GF(2) until every string
//!    lives on a small set of pivot qubits.
//! 3. Uniformly controlled `rz`/`ry` cascades empty the pivot qubits from
//!    the last one to the first.
//!
//! Only qubits where some support string has a set bit are touched.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::circuit::{Axis, Gate, GateCircuit, ParamExpr};
use crate::error::{Error, Result};

const ANGLE_EPS: f64 = 1e-14;

/// Circuit `U` with `U|target> = e^{i g}|0...0>`. `target` lists
/// `(basis index, amplitude)` pairs on an `num_qubits` register; repeated
/// indices are summed.
pub fn disentangler(num_qubits: usize, target: &[(usize, Complex64)]) -> Result<GateCircuit> {
    let mut merged: BTreeMap<usize, Complex64> = BTreeMap::new();
    for &(i, a) in target {
        if num_qubits < usize::BITS as usize && i >> num_qubits != 0 {
            return Err(Error::Validation(format!(
                "basis index {i} outside a {num_qubits}-qubit register"
            )));
        }
        *merged.entry(i).or_insert(Complex64::new(0.0, 0.0)) += a;
    }
    merged.retain(|_, a| a.norm() > 1e-14);
    let norm: f64 = merged.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Validation(format!("target state has norm {norm}")));
    }

    let mut circuit = GateCircuit::new(num_qubits);
    let bit = |q: usize| 1usize << (num_qubits - 1 - q);
    let mut strings: Vec<(usize, Complex64)> = merged.into_iter().collect();

    let first = strings[0].0;
    for q in 0..num_qubits {
        if first & bit(q) != 0 {
            circuit.push(Gate::X(q))?;
        }
    }
    for s in &mut strings {
        s.0 ^= first;
    }

    let mut pivots: Vec<usize> = Vec::new();
    loop {
        let pivot_mask = pivots.iter().fold(0, |m, &p| m | bit(p));
        let Some(w) = strings.iter().map(|s| s.0).find(|w| w & !pivot_mask != 0) else {
            break;
        };
        let p = (0..num_qubits)
            .find(|&q| w & bit(q) != 0 && pivot_mask & bit(q) == 0)
            .expect("w has a bit outside the pivots");
        for t in 0..num_qubits {
            if t != p && !pivots.contains(&t) && w & bit(t) != 0 {
                circuit.push(Gate::Cnot { control: p, target: t })?;
                for s in &mut strings {
                    if s.0 & bit(p) != 0 {
                        s.0 ^= bit(t);
                    }
                }
            }
        }
        pivots.push(p);
    }
    pivots.sort_unstable();

    // Dense state on the pivots, pivots[0] most significant.
    let r = pivots.len();
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << r];
    for (s, a) in &strings {
        let mut idx = 0;
        for &p in &pivots {
            idx = (idx << 1) | usize::from(s & bit(p) != 0);
        }
        psi[idx] += a;
    }

    for k in (0..r).rev() {
        // controls pivots[0..k], target pivots[k]
        let groups = 1usize << k;
        let mut rz = Vec::with_capacity(groups);
        let mut ry = Vec::with_capacity(groups);
        let mut reduced = Vec::with_capacity(groups);
        for c in 0..groups {
            let a0 = psi[2 * c];
            let a1 = psi[2 * c + 1];
            let (r0, r1) = (a0.norm(), a1.norm());
            let p0 = if r0 > 0.0 { a0.arg() } else { a1.arg() };
            let p1 = if r1 > 0.0 { a1.arg() } else { p0 };
            rz.push(p0 - p1);
            ry.push(-2.0 * r1.atan2(r0));
            reduced.push(Complex64::from_polar(r0.hypot(r1), (p0 + p1) / 2.0));
        }
        let controls = &pivots[..k];
        uniformly_controlled(&mut circuit, Axis::Z, controls, pivots[k], &rz)?;
        uniformly_controlled(&mut circuit, Axis::Y, controls, pivots[k], &ry)?;
        psi = reduced;
    }
    Ok(circuit)
}

/// `preparation = disentangler^dagger`: maps `|0...0>` to the target up to a
/// global phase.
pub fn preparation(num_qubits: usize, target: &[(usize, Complex64)]) -> Result<GateCircuit> {
    Ok(disentangler(num_qubits, target)?.inverse())
}

/// Rotation on `target` whose angle is `angles[c]` when the controls read the
/// binary number `c` (first control most significant).
fn uniformly_controlled(
    circuit: &mut GateCircuit,
    axis: Axis,
    controls: &[usize],
    target: usize,
    angles: &[f64],
) -> Result<()> {
    if angles.iter().all(|a| a.abs() < ANGLE_EPS) {
        return Ok(());
    }
    let Some((&c1, rest)) = controls.split_first() else {
        circuit.push(Gate::Rot {
            axis,
            qubit: target,
            angle: ParamExpr::Const(angles[0]),
        })?;
        return Ok(());
    };
    let half = angles.len() / 2;
    let (t0, t1) = angles.split_at(half);
    let sum: Vec<f64> = t0.iter().zip(t1).map(|(a, b)| (a + b) / 2.0).collect();
    let diff: Vec<f64> = t0.iter().zip(t1).map(|(a, b)| (a - b) / 2.0).collect();
    uniformly_controlled(circuit, axis, rest, target, &sum)?;
    if diff.iter().any(|a| a.abs() >= ANGLE_EPS) {
        circuit.push(Gate::Cnot { control: c1, target })?;
        uniformly_controlled(circuit, axis, rest, target, &diff)?;
        circuit.push(Gate::Cnot { control: c1, target })?;
    }
    Ok(())
}
