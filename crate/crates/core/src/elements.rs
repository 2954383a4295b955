//! Optical elements and their compilation into gate circuits.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::circuit::{trotterize, Gate, GateCircuit, ParamExpr};
use crate::encoding::{annihilation_operator, creation_operator, FockState, ModeKey, SetupLayout};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliSum};
use crate::synthesis::preparation;

#[derive(Clone, Debug, PartialEq)]
pub enum OpticalElement {
    /// `exp(i theta sum_m (psi a_m^dag b_m + psi^* b_m^dag a_m))` with
    /// `psi = e^{i psi_phase}`.
    BeamSplitter {
        path_a: String,
        path_b: String,
        theta: ParamExpr,
        psi_phase: f64,
    },
    /// `e^{i n phi}` on one mode, or on every mode of the path when `mode`
    /// is `None`.
    PhaseShifter {
        path: String,
        mode: Option<i32>,
        phi: ParamExpr,
    },
    /// Phase shifter with angle `m phi` on mode `m`.
    DovePrism { path: String, phi: ParamExpr },
    PhotonicSwap { a: ModeKey, b: ModeKey },
    /// Swaps modes `+k` and `-k`.
    Mirror { path: String },
    /// Cyclic shift `m -> m+1` over the path's modes, top mode wrapping to
    /// the bottom.
    Hologram { path: String },
    /// `exp((omega/2)(a^dag b^dag - a b))`.
    PairSource {
        a: ModeKey,
        b: ModeKey,
        omega: ParamExpr,
    },
    /// Writes `count` into an empty mode (binary XOR on the occupation).
    PhotonInject { path: String, mode: i32, count: u32 },
}

impl OpticalElement {
    pub fn kind(&self) -> &'static str {
        match self {
            OpticalElement::BeamSplitter { .. } => "beam_splitter",
            OpticalElement::PhaseShifter { .. } => "phase_shifter",
            OpticalElement::DovePrism { .. } => "dove_prism",
            OpticalElement::PhotonicSwap { .. } => "swap",
            OpticalElement::Mirror { .. } => "mirror",
            OpticalElement::Hologram { .. } => "hologram",
            OpticalElement::PairSource { .. } => "pair_source",
            OpticalElement::PhotonInject { .. } => "inject",
        }
    }

    /// Parameter expressions the element depends on.
    pub fn angles(&self) -> Vec<&ParamExpr> {
        match self {
            OpticalElement::BeamSplitter { theta, .. } => vec![theta],
            OpticalElement::PhaseShifter { phi, .. } | OpticalElement::DovePrism { phi, .. } => {
                vec![phi]
            }
            OpticalElement::PairSource { omega, .. } => vec![omega],
            _ => vec![],
        }
    }

    /// Whether the element commutes with the total photon number.
    pub fn conserves_photons(&self) -> bool {
        !matches!(
            self,
            OpticalElement::PairSource { .. } | OpticalElement::PhotonInject { .. }
        )
    }
}

/// One factor of a product initial state. Factors must occupy disjoint modes.
#[derive(Clone, Debug, PartialEq)]
pub enum StateComponent {
    Photons(Vec<(ModeKey, u32)>),
    /// `sum_m |1_{m,a} 1_{s m,b}> / sqrt(d)` with `s = -1` when
    /// `anti_correlated`.
    BellPair {
        path_a: String,
        path_b: String,
        modes: Vec<i32>,
        anti_correlated: bool,
    },
    /// Explicit amplitudes over full-layout Fock states.
    Superposition(Vec<(FockState, Complex64)>),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InitialState {
    pub components: Vec<StateComponent>,
}

impl InitialState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn photons(occupations: &[(&str, i32, u32)]) -> Self {
        Self {
            components: vec![StateComponent::Photons(
                occupations
                    .iter()
                    .map(|&(p, m, n)| (ModeKey::new(p, m), n))
                    .collect(),
            )],
        }
    }

    fn component_terms(
        layout: &SetupLayout,
        component: &StateComponent,
    ) -> Result<Vec<(FockState, Complex64)>> {
        match component {
            StateComponent::Photons(occ) => {
                let mut f = layout.vacuum();
                for (k, n) in occ {
                    f.0[layout.slot(&k.path, k.mode)?] += n;
                }
                layout.check_fock(&f)?;
                Ok(vec![(f, Complex64::new(1.0, 0.0))])
            }
            StateComponent::BellPair {
                path_a,
                path_b,
                modes,
                anti_correlated,
            } => {
                if path_a == path_b {
                    return Err(Error::Config(format!("Bell pair on a single path `{path_a}`")));
                }
                if modes.is_empty() {
                    return Err(Error::Config("Bell pair needs at least one mode".into()));
                }
                let amp = Complex64::new(1.0 / (modes.len() as f64).sqrt(), 0.0);
                let sign = if *anti_correlated { -1 } else { 1 };
                modes
                    .iter()
                    .map(|&m| {
                        let f = layout.fock(&[(path_a, m, 1), (path_b, sign * m, 1)])?;
                        Ok((f, amp))
                    })
                    .collect()
            }
            StateComponent::Superposition(terms) => {
                for (f, _) in terms {
                    layout.check_fock(f)?;
                }
                let norm: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::Validation(format!(
                        "initial superposition has norm {norm}"
                    )));
                }
                Ok(terms.clone())
            }
        }
    }

    /// Full amplitude list as the product of all components.
    pub fn amplitudes(&self, layout: &SetupLayout) -> Result<Vec<(FockState, Complex64)>> {
        let mut used: BTreeSet<usize> = BTreeSet::new();
        let mut acc = vec![(layout.vacuum(), Complex64::new(1.0, 0.0))];
        for c in &self.components {
            let terms = Self::component_terms(layout, c)?;
            let slots: BTreeSet<usize> = terms
                .iter()
                .flat_map(|(f, _)| f.0.iter().enumerate().filter(|(_, n)| **n > 0).map(|(s, _)| s))
                .collect();
            if let Some(s) = slots.intersection(&used).next() {
                return Err(Error::Config(format!(
                    "initial-state components overlap on mode {}",
                    layout.slots()[*s]
                )));
            }
            used.extend(slots);
            let mut next = Vec::with_capacity(acc.len() * terms.len());
            for (f1, a1) in &acc {
                for (f2, a2) in &terms {
                    let occ = f1.0.iter().zip(&f2.0).map(|(x, y)| x + y).collect();
                    next.push((FockState(occ), a1 * a2));
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Total photon number if every component has a definite one.
    pub fn photon_number(&self, layout: &SetupLayout) -> Result<Option<u32>> {
        let amps = self.amplitudes(layout)?;
        let mut counts = amps
            .iter()
            .filter(|(_, a)| a.norm() > 1e-14)
            .map(|(f, _)| f.total_photons());
        let first = counts.next();
        Ok(match first {
            Some(n) if counts.all(|m| m == n) => Some(n),
            _ => None,
        })
    }
}

/// Gates preparing the initial state from `|0...0>`.
pub fn compile_initial_state(layout: &SetupLayout, initial: &InitialState) -> Result<GateCircuit> {
    // validates overlap and normalization
    initial.amplitudes(layout)?;
    let n = layout.total_qubits();
    let mut circuit = GateCircuit::new(n);
    for c in &initial.components {
        let terms = InitialState::component_terms(layout, c)?;
        let indexed: Vec<(usize, Complex64)> = terms
            .iter()
            .map(|(f, a)| Ok((layout.fock_to_index(f, n)?, *a)))
            .collect::<Result<_>>()?;
        circuit.append(&preparation(n, &indexed)?)?;
    }
    Ok(circuit)
}

fn check_mode_lists(layout: &SetupLayout, a: &str, b: &str) -> Result<Vec<i32>> {
    let ma = &layout.path(a)?.modes;
    let mb = &layout.path(b)?.modes;
    if a == b {
        return Err(Error::Config(format!("beam splitter needs two distinct paths, got `{a}` twice")));
    }
    if ma != mb {
        return Err(Error::Config(format!(
            "beam splitter paths `{a}` and `{b}` have different mode lists"
        )));
    }
    Ok(ma.clone())
}

/// Per-mode beam-splitter generator `psi a^dag b + psi^* b^dag a`.
pub fn beam_splitter_generator(
    layout: &SetupLayout,
    path_a: &str,
    path_b: &str,
    mode: i32,
    psi_phase: f64,
) -> Result<PauliSum> {
    let psi = Complex64::from_polar(1.0, psi_phase);
    let forward = creation_operator(layout, path_a, mode)?
        .mul(&annihilation_operator(layout, path_b, mode)?)
        .scale(psi);
    Ok(forward.add(&forward.adjoint()))
}

/// Beam splitter; compact exact form at cutoff 1, product formula otherwise.
pub fn compile_beam_splitter(
    layout: &SetupLayout,
    path_a: &str,
    path_b: &str,
    theta: &ParamExpr,
    psi_phase: f64,
    steps: usize,
) -> Result<GateCircuit> {
    if layout.cutoff() == 1 {
        compile_beam_splitter_compact(layout, path_a, path_b, theta, psi_phase)
    } else {
        compile_beam_splitter_trotter(layout, path_a, path_b, theta, psi_phase, steps)
    }
}

pub fn compile_beam_splitter_trotter(
    layout: &SetupLayout,
    path_a: &str,
    path_b: &str,
    theta: &ParamExpr,
    psi_phase: f64,
    steps: usize,
) -> Result<GateCircuit> {
    let modes = check_mode_lists(layout, path_a, path_b)?;
    let n = layout.total_qubits();
    let mut circuit = GateCircuit::new(n);
    for m in modes {
        let g = beam_splitter_generator(layout, path_a, path_b, m, psi_phase)?;
        circuit.append(&trotterize(&g, &theta.times(-1.0), steps)?.widened(n)?)?;
    }
    Ok(circuit)
}

/// Cutoff-1 form per mode: `e^{i theta (XX+YY)/2}` conjugated by phase gates
/// on path `b` carrying `psi`.
pub fn compile_beam_splitter_compact(
    layout: &SetupLayout,
    path_a: &str,
    path_b: &str,
    theta: &ParamExpr,
    psi_phase: f64,
) -> Result<GateCircuit> {
    if layout.cutoff() != 1 {
        return Err(Error::Unsupported(format!(
            "compact beam splitter at cutoff {}",
            layout.cutoff()
        )));
    }
    let modes = check_mode_lists(layout, path_a, path_b)?;
    let mut circuit = GateCircuit::new(layout.total_qubits());
    for m in modes {
        let qa = layout.qubit_range(path_a, m)?.start;
        let qb = layout.qubit_range(path_b, m)?.start;
        let pair = |p: Pauli| {
            let mut ops = vec![(qa, p), (qb, p)];
            ops.sort();
            ops
        };
        if psi_phase != 0.0 {
            circuit.push(Gate::PhaseS { qubit: qb, angle: ParamExpr::Const(psi_phase) })?;
        }
        for p in [Pauli::X, Pauli::Y] {
            circuit.push(Gate::PauliExp {
                ops: pair(p),
                coeff: -0.5,
                angle: theta.clone(),
                trotter: None,
            })?;
        }
        if psi_phase != 0.0 {
            circuit.push(Gate::PhaseS { qubit: qb, angle: ParamExpr::Const(-psi_phase) })?;
        }
    }
    Ok(circuit)
}

/// One `PhaseS(2^k phi)` per bit, most significant bit first.
pub fn compile_phase_shifter(
    layout: &SetupLayout,
    path: &str,
    mode: Option<i32>,
    phi: &ParamExpr,
) -> Result<GateCircuit> {
    let modes = match mode {
        Some(m) => vec![m],
        None => layout.path(path)?.modes.clone(),
    };
    let mut circuit = GateCircuit::new(layout.total_qubits());
    for m in modes {
        push_mode_phase(&mut circuit, layout, path, m, phi)?;
    }
    Ok(circuit)
}

fn push_mode_phase(
    circuit: &mut GateCircuit,
    layout: &SetupLayout,
    path: &str,
    mode: i32,
    phi: &ParamExpr,
) -> Result<()> {
    let range = layout.qubit_range(path, mode)?;
    let k = range.len();
    for (pos, q) in range.enumerate() {
        let weight = (1u64 << (k - 1 - pos)) as f64;
        circuit.push(Gate::PhaseS { qubit: q, angle: phi.times(weight) })?;
    }
    Ok(())
}

pub fn compile_dove_prism(layout: &SetupLayout, path: &str, phi: &ParamExpr) -> Result<GateCircuit> {
    let mut circuit = GateCircuit::new(layout.total_qubits());
    for &m in &layout.path(path)?.modes {
        if m != 0 {
            push_mode_phase(&mut circuit, layout, path, m, &phi.times(m as f64))?;
        }
    }
    Ok(circuit)
}

pub fn compile_photonic_swap(layout: &SetupLayout, a: &ModeKey, b: &ModeKey) -> Result<GateCircuit> {
    let ra = layout.qubit_range(&a.path, a.mode)?;
    let rb = layout.qubit_range(&b.path, b.mode)?;
    let mut circuit = GateCircuit::new(layout.total_qubits());
    if a != b {
        for (qa, qb) in ra.zip(rb) {
            circuit.push(Gate::Swap(qa, qb))?;
        }
    }
    Ok(circuit)
}

pub fn compile_mirror(layout: &SetupLayout, path: &str) -> Result<GateCircuit> {
    let modes = &layout.path(path)?.modes;
    let mut circuit = GateCircuit::new(layout.total_qubits());
    for &m in modes {
        if m == 0 {
            continue;
        }
        if !modes.contains(&-m) {
            return Err(Error::Config(format!(
                "mirror on `{path}` needs mode {} to pair with {m}",
                -m
            )));
        }
        if m > 0 {
            circuit.append(&compile_photonic_swap(
                layout,
                &ModeKey::new(path, m),
                &ModeKey::new(path, -m),
            )?)?;
        }
    }
    Ok(circuit)
}

/// Cyclic shift as a chain of adjacent swaps from the top of the mode list
/// down.
pub fn compile_hologram(layout: &SetupLayout, path: &str) -> Result<GateCircuit> {
    let mut modes = layout.path(path)?.modes.clone();
    modes.sort_unstable();
    let mut circuit = GateCircuit::new(layout.total_qubits());
    for w in modes.windows(2).rev() {
        circuit.append(&compile_photonic_swap(
            layout,
            &ModeKey::new(path, w[0]),
            &ModeKey::new(path, w[1]),
        )?)?;
    }
    Ok(circuit)
}

/// Hermitian generator `i(a^dag b^dag - a b)` of the pair source.
pub fn pair_source_generator(layout: &SetupLayout, a: &ModeKey, b: &ModeKey) -> Result<PauliSum> {
    if a == b {
        return Err(Error::Config(format!("pair source targets {a} twice")));
    }
    let create = creation_operator(layout, &a.path, a.mode)?
        .mul(&creation_operator(layout, &b.path, b.mode)?);
    let destroy = annihilation_operator(layout, &a.path, a.mode)?
        .mul(&annihilation_operator(layout, &b.path, b.mode)?);
    Ok(create
        .add(&destroy.scale(Complex64::new(-1.0, 0.0)))
        .scale(Complex64::i()))
}

pub fn compile_pair_source(
    layout: &SetupLayout,
    a: &ModeKey,
    b: &ModeKey,
    omega: &ParamExpr,
    steps: usize,
) -> Result<GateCircuit> {
    let g = pair_source_generator(layout, a, b)?;
    trotterize(&g, &omega.times(0.5), steps)?.widened(layout.total_qubits())
}

pub fn compile_photon_inject(layout: &SetupLayout, path: &str, mode: i32, count: u32) -> Result<GateCircuit> {
    if count > layout.cutoff() {
        return Err(Error::Encoding(format!(
            "injecting {count} photons exceeds cutoff {}",
            layout.cutoff()
        )));
    }
    let range = layout.qubit_range(path, mode)?;
    let k = range.len();
    let mut circuit = GateCircuit::new(layout.total_qubits());
    for (pos, q) in range.enumerate() {
        if (count >> (k - 1 - pos)) & 1 == 1 {
            circuit.push(Gate::X(q))?;
        }
    }
    Ok(circuit)
}

pub fn compile_element(layout: &SetupLayout, element: &OpticalElement, steps: usize) -> Result<GateCircuit> {
    match element {
        OpticalElement::BeamSplitter {
            path_a,
            path_b,
            theta,
            psi_phase,
        } => compile_beam_splitter(layout, path_a, path_b, theta, *psi_phase, steps),
        OpticalElement::PhaseShifter { path, mode, phi } => compile_phase_shifter(layout, path, *mode, phi),
        OpticalElement::DovePrism { path, phi } => compile_dove_prism(layout, path, phi),
        OpticalElement::PhotonicSwap { a, b } => compile_photonic_swap(layout, a, b),
        OpticalElement::Mirror { path } => compile_mirror(layout, path),
        OpticalElement::Hologram { path } => compile_hologram(layout, path),
        OpticalElement::PairSource { a, b, omega } => compile_pair_source(layout, a, b, omega, steps),
        OpticalElement::PhotonInject { path, mode, count } => compile_photon_inject(layout, path, *mode, *count),
    }
}

/// Concatenation of the compiled elements in listed order.
pub fn compile_setup(layout: &SetupLayout, elements: &[OpticalElement], steps: usize) -> Result<GateCircuit> {
    let mut circuit = GateCircuit::new(layout.total_qubits());
    for e in elements {
        circuit.append(&compile_element(layout, e, steps)?)?;
    }
    Ok(circuit)
}

/// Warnings for holograms whose top mode can already be occupied, where the
/// cyclic wrap departs from the physical shift.
pub fn hologram_diagnostics(
    layout: &SetupLayout,
    initial: &InitialState,
    elements: &[OpticalElement],
) -> Result<Vec<String>> {
    let amps = initial.amplitudes(layout)?;
    let mut out = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        let OpticalElement::Hologram { path } = e else {
            continue;
        };
        let Some(&top) = layout.path(path)?.modes.iter().max() else {
            continue;
        };
        let slot = layout.slot(path, top)?;
        let from_initial = amps.iter().any(|(f, a)| a.norm() > 1e-14 && f.0[slot] > 0);
        let from_source = elements[..i].iter().any(|e| match e {
            OpticalElement::PairSource { a, b, .. } => {
                let key = ModeKey::new(path.clone(), top);
                *a == key || *b == key
            }
            _ => false,
        });
        if from_initial || from_source {
            out.push(format!(
                "hologram on `{path}` (element {i}): top mode {top} can be occupied; its photons wrap to the lowest mode"
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ParamValues;
    use crate::simulator::{run_with, unitary, StateVector};

    fn basis(layout: &SetupLayout, occ: &[(&str, i32, u32)]) -> StateVector {
        let f = layout.fock(occ).unwrap();
        let n = layout.total_qubits();
        StateVector::basis(n, layout.fock_to_index(&f, n).unwrap()).unwrap()
    }

    fn amp_of(state: &StateVector, layout: &SetupLayout, occ: &[(&str, i32, u32)]) -> Complex64 {
        let f = layout.fock(occ).unwrap();
        state.amplitude(layout.fock_to_index(&f, layout.total_qubits()).unwrap())
    }

    fn vals(pairs: &[(&str, f64)]) -> ParamValues {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn beam_splitter_zero_angle_is_identity() {
        for cutoff in [1, 3] {
            let layout = SetupLayout::uniform(&["a", "b"], &[0], cutoff).unwrap();
            let c = compile_beam_splitter(&layout, "a", "b", &ParamExpr::Const(0.0), 0.4, 3).unwrap();
            let u = unitary(&c, &ParamValues::new()).unwrap();
            for (r, row) in u.iter().enumerate() {
                for (col, x) in row.iter().enumerate() {
                    let e = if r == col { 1.0 } else { 0.0 };
                    assert!((x - Complex64::new(e, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn balanced_beam_splitter_at_cutoff_one() {
        let layout = SetupLayout::uniform(&["a", "b"], &[0], 1).unwrap();
        let c = compile_beam_splitter(&layout, "a", "b", &ParamExpr::param("t"), 0.0, 1).unwrap();
        let out = run_with(&c, &basis(&layout, &[("a", 0, 1)]), &vals(&[("t", std::f64::consts::FRAC_PI_4)])).unwrap();
        assert!((amp_of(&out, &layout, &[("a", 0, 1)]).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((amp_of(&out, &layout, &[("b", 0, 1)]).norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn compact_and_trotter_forms_agree_at_cutoff_one() {
        let layout = SetupLayout::uniform(&["a", "b"], &[-1, 1], 1).unwrap();
        let v = vals(&[("t", 0.83)]);
        let t = ParamExpr::param("t");
        let gap = |phase: f64, steps: usize| {
            let compact = compile_beam_splitter_compact(&layout, "b", "a", &t, phase).unwrap();
            let trotter = compile_beam_splitter_trotter(&layout, "b", "a", &t, phase, steps).unwrap();
            let u1 = unitary(&compact, &v).unwrap();
            let u2 = unitary(&trotter, &v).unwrap();
            u1.iter()
                .zip(&u2)
                .flat_map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| (x - y).norm()))
                .fold(0.0, f64::max)
        };
        // real coupling: XX and YY commute, one step is exact
        assert!(gap(0.0, 1) < 1e-12);
        for phase in [0.7, -2.1] {
            let coarse = gap(phase, 4);
            let fine = gap(phase, 64);
            assert!(fine < coarse / 8.0, "{coarse} {fine}");
            assert!(fine < 1e-2);
        }
    }

    #[test]
    fn mismatched_modes_rejected() {
        let layout = SetupLayout::new(
            vec![
                crate::encoding::PathSpec { label: "a".into(), modes: vec![0, 1] },
                crate::encoding::PathSpec { label: "b".into(), modes: vec![0] },
            ],
            1,
        )
        .unwrap();
        assert!(matches!(
            compile_beam_splitter(&layout, "a", "b", &ParamExpr::Const(0.1), 0.0, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn phase_shifter_weights() {
        let layout = SetupLayout::uniform(&["a"], &[0], 7).unwrap();
        let c = compile_phase_shifter(&layout, "a", Some(0), &ParamExpr::param("p")).unwrap();
        let phi = 0.31;
        let u = unitary(&c, &vals(&[("p", phi)])).unwrap();
        for n in 0..8 {
            assert!((u[n][n] - Complex64::from_polar(1.0, n as f64 * phi)).norm() < 1e-12);
        }
        let angles: Vec<String> = c.gates().iter().map(|g| g.angle().unwrap().to_string()).collect();
        assert_eq!(angles, ["4*p", "2*p", "p"]);
    }

    #[test]
    fn dove_prism_mode_phases() {
        let layout = SetupLayout::uniform(&["a"], &[-1, 0, 1, 2], 1).unwrap();
        let c = compile_dove_prism(&layout, "a", &ParamExpr::param("p")).unwrap();
        let v = vals(&[("p", 0.4)]);
        let cases: [(&[(&str, i32, u32)], f64); 4] = [
            (&[("a", 1, 1)], 0.4),
            (&[("a", -1, 1)], -0.4),
            (&[("a", 0, 1)], 0.0),
            (&[("a", 2, 1), ("a", -1, 1)], 0.4),
        ];
        for (occ, phase) in cases {
            let out = run_with(&c, &basis(&layout, occ), &v).unwrap();
            assert!((amp_of(&out, &layout, occ) - Complex64::from_polar(1.0, phase)).norm() < 1e-12);
        }
    }

    #[test]
    fn swap_exchanges_occupations() {
        let layout = SetupLayout::uniform(&["a", "b"], &[0, 1], 3).unwrap();
        let (m, n) = (ModeKey::new("a", 0), ModeKey::new("b", 1));
        let c = compile_photonic_swap(&layout, &m, &n).unwrap();
        let out = run_with(&c, &basis(&layout, &[("a", 0, 2), ("b", 1, 1)]), &ParamValues::new()).unwrap();
        assert!((amp_of(&out, &layout, &[("a", 0, 1), ("b", 1, 2)]).norm() - 1.0).abs() < 1e-15);
        assert!(compile_photonic_swap(&layout, &m, &m).unwrap().is_empty());
    }

    #[test]
    fn mirror_action() {
        let layout = SetupLayout::uniform(&["a"], &[-1, 0, 1], 3).unwrap();
        let c = compile_mirror(&layout, "a").unwrap();
        let out = run_with(&c, &basis(&layout, &[("a", -1, 1), ("a", 1, 2)]), &ParamValues::new()).unwrap();
        assert!((amp_of(&out, &layout, &[("a", -1, 2), ("a", 1, 1)]).norm() - 1.0).abs() < 1e-15);
        let lopsided = SetupLayout::uniform(&["a"], &[0, 1], 1).unwrap();
        assert!(compile_mirror(&lopsided, "a").is_err());
    }

    #[test]
    fn hologram_shifts_up_and_wraps() {
        let layout = SetupLayout::uniform(&["a"], &[-1, 0, 1], 1).unwrap();
        let c = compile_hologram(&layout, "a").unwrap();
        let out = run_with(&c, &basis(&layout, &[("a", -1, 1)]), &ParamValues::new()).unwrap();
        assert!((amp_of(&out, &layout, &[("a", 0, 1)]).norm() - 1.0).abs() < 1e-15);
        let out = run_with(&c, &basis(&layout, &[("a", 1, 1)]), &ParamValues::new()).unwrap();
        assert!((amp_of(&out, &layout, &[("a", -1, 1)]).norm() - 1.0).abs() < 1e-15);
        let mut thrice = GateCircuit::new(3);
        for _ in 0..3 {
            thrice.append(&c).unwrap();
        }
        let u = unitary(&thrice, &ParamValues::new()).unwrap();
        for (i, row) in u.iter().enumerate() {
            assert!((row[i].re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hologram_warning() {
        let layout = SetupLayout::uniform(&["a"], &[-1, 0, 1], 1).unwrap();
        let holo = [OpticalElement::Hologram { path: "a".into() }];
        let low = InitialState::photons(&[("a", -1, 1)]);
        assert!(hologram_diagnostics(&layout, &low, &holo).unwrap().is_empty());
        let top = InitialState::photons(&[("a", 1, 1)]);
        assert_eq!(hologram_diagnostics(&layout, &top, &holo).unwrap().len(), 1);
    }

    #[test]
    fn pair_source_from_vacuum() {
        let layout = SetupLayout::uniform(&["a", "b"], &[0], 1).unwrap();
        let (a, b) = (ModeKey::new("a", 0), ModeKey::new("b", 0));
        assert!(matches!(
            compile_pair_source(&layout, &a, &a, &ParamExpr::Const(0.1), 1),
            Err(Error::Config(_))
        ));
        let c = compile_pair_source(&layout, &a, &b, &ParamExpr::param("w"), 1).unwrap();
        for w in [0.0, 0.1, 0.5, 1.0] {
            let out = run_with(&c, &StateVector::zeros(2).unwrap(), &vals(&[("w", w)])).unwrap();
            assert!((out.amplitude(0) - Complex64::new((w / 2.0).cos(), 0.0)).norm() < 1e-12);
            assert!((out.amplitude(3) - Complex64::new((w / 2.0).sin(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn inject_writes_binary() {
        let layout = SetupLayout::uniform(&["a", "b"], &[0], 3).unwrap();
        let c = compile_photon_inject(&layout, "b", 0, 2).unwrap();
        assert_eq!(c.gates(), &[Gate::X(2)]);
        assert!(compile_photon_inject(&layout, "b", 0, 4).is_err());
    }

    #[test]
    fn initial_state_preparation() {
        let layout = SetupLayout::uniform(&["a", "b", "c"], &[-1, 0, 1], 1).unwrap();
        let init = InitialState {
            components: vec![
                StateComponent::BellPair {
                    path_a: "a".into(),
                    path_b: "b".into(),
                    modes: vec![-1, 0, 1],
                    anti_correlated: true,
                },
                StateComponent::Photons(vec![(ModeKey::new("c", 0), 1)]),
            ],
        };
        assert_eq!(init.photon_number(&layout).unwrap(), Some(3));
        let c = compile_initial_state(&layout, &init).unwrap();
        let out = run_with(&c, &StateVector::zeros(9).unwrap(), &ParamValues::new()).unwrap();
        for m in [-1, 0, 1] {
            let a = amp_of(&out, &layout, &[("a", m, 1), ("b", -m, 1), ("c", 0, 1)]);
            assert!((a.norm_sqr() - 1.0 / 3.0).abs() < 1e-12);
        }
        let overlapping = InitialState {
            components: vec![
                StateComponent::Photons(vec![(ModeKey::new("a", 0), 1)]),
                StateComponent::Photons(vec![(ModeKey::new("a", 0), 1)]),
            ],
        };
        assert!(matches!(overlapping.amplitudes(&layout), Err(Error::Config(_))));
    }
}
