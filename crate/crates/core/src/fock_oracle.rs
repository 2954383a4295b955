//! Reference simulator on truncated Fock space, independent of the qubit
//! encoding. Element unitaries are exponentiated densely on the one- or
//! two-mode block they act on.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::ParamValues;
use crate::elements::{InitialState, OpticalElement};
use crate::encoding::{FockState, ModeKey, SetupLayout};
use crate::error::{Error, Result};
use crate::objectives::HeraldSpec;

const PRUNE: f64 = 1e-15;
/// Post-selection probabilities below this are degenerate.
pub const DEGENERATE_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct FockVector {
    layout: Arc<SetupLayout>,
    amps: BTreeMap<FockState, Complex64>,
}

impl FockVector {
    pub fn vacuum(layout: Arc<SetupLayout>) -> Self {
        let v = layout.vacuum();
        Self {
            layout,
            amps: BTreeMap::from([(v, Complex64::new(1.0, 0.0))]),
        }
    }

    pub fn basis(layout: Arc<SetupLayout>, fock: FockState) -> Result<Self> {
        layout.check_fock(&fock)?;
        Ok(Self {
            layout,
            amps: BTreeMap::from([(fock, Complex64::new(1.0, 0.0))]),
        })
    }

    /// Sums repeated states. No normalization is applied.
    pub fn from_terms(
        layout: Arc<SetupLayout>,
        terms: impl IntoIterator<Item = (FockState, Complex64)>,
    ) -> Result<Self> {
        let mut amps = BTreeMap::new();
        for (f, a) in terms {
            layout.check_fock(&f)?;
            *amps.entry(f).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        amps.retain(|_, a: &mut Complex64| a.norm() > PRUNE);
        Ok(Self { layout, amps })
    }

    pub fn from_initial(layout: Arc<SetupLayout>, initial: &InitialState) -> Result<Self> {
        let terms = initial.amplitudes(&layout)?;
        Self::from_terms(layout, terms)
    }

    pub fn layout(&self) -> &SetupLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &BTreeMap<FockState, Complex64> {
        &self.amps
    }

    pub fn amplitude(&self, fock: &FockState) -> Complex64 {
        self.amps.get(fock).copied().unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amps
            .iter()
            .map(|(f, a)| a.conj() * other.amplitude(f))
            .sum()
    }

    /// Dense amplitudes on the layout's qubit register.
    pub fn to_qubit_amplitudes(&self) -> Result<Vec<Complex64>> {
        let n = self.layout.total_qubits();
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (f, a) in &self.amps {
            out[self.layout.fock_to_index(f, n)?] = *a;
        }
        Ok(out)
    }

    fn map_states(&self, mut f: impl FnMut(&FockState) -> FockState) -> FockVector {
        let mut amps = BTreeMap::new();
        for (k, a) in &self.amps {
            *amps.entry(f(k)).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        FockVector {
            layout: self.layout.clone(),
            amps,
        }
    }

    fn map_phases(&self, phase: impl Fn(&FockState) -> f64) -> FockVector {
        FockVector {
            layout: self.layout.clone(),
            amps: self
                .amps
                .iter()
                .map(|(k, a)| (k.clone(), a * Complex64::from_polar(1.0, phase(k))))
                .collect(),
        }
    }

    /// Applies `u` on the block spanned by `slots`; local index is the
    /// occupations read as digits base `cutoff+1`, first slot most significant.
    fn apply_block(&self, slots: &[usize], u: &DMatrix<Complex64>) -> FockVector {
        let d = self.layout.cutoff() as usize + 1;
        let dim = u.nrows();
        let mut groups: BTreeMap<FockState, Vec<Complex64>> = BTreeMap::new();
        for (k, a) in &self.amps {
            let local = slots.iter().fold(0, |acc, &s| acc * d + k.0[s] as usize);
            let mut rest = k.clone();
            for &s in slots {
                rest.0[s] = 0;
            }
            groups
                .entry(rest)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim])[local] += a;
        }
        let mut amps = BTreeMap::new();
        for (rest, v) in groups {
            for row in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, a) in v.iter().enumerate() {
                    acc += u[(row, col)] * a;
                }
                if acc.norm() <= PRUNE {
                    continue;
                }
                let mut k = rest.clone();
                let mut r = row;
                for &s in slots.iter().rev() {
                    k.0[s] = (r % d) as u32;
                    r /= d;
                }
                amps.insert(k, acc);
            }
        }
        FockVector {
            layout: self.layout.clone(),
            amps,
        }
    }
}

fn creation_matrix(cutoff: u32) -> DMatrix<Complex64> {
    let d = cutoff as usize + 1;
    let mut m = DMatrix::zeros(d, d);
    for n in 0..cutoff as usize {
        m[(n + 1, n)] = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    m
}

/// `exp(scale * generator)` by nalgebra's scaling-and-squaring.
fn expm(generator: &DMatrix<Complex64>, scale: Complex64) -> DMatrix<Complex64> {
    (generator * scale).exp()
}

fn slot(layout: &SetupLayout, k: &ModeKey) -> Result<usize> {
    layout.slot(&k.path, k.mode)
}

/// Exact action of one element.
pub fn apply_element_exact(
    vec: &FockVector,
    element: &OpticalElement,
    values: &ParamValues,
) -> Result<FockVector> {
    let layout = vec.layout.clone();
    let cutoff = layout.cutoff();
    match element {
        OpticalElement::BeamSplitter {
            path_a,
            path_b,
            theta,
            psi_phase,
        } => {
            let ma = &layout.path(path_a)?.modes;
            if path_a == path_b || ma != &layout.path(path_b)?.modes {
                return Err(Error::Config(format!(
                    "beam splitter paths `{path_a}` and `{path_b}` are incompatible"
                )));
            }
            let theta = theta.value(values)?;
            let psi = Complex64::from_polar(1.0, *psi_phase);
            let ad = creation_matrix(cutoff);
            let a = ad.adjoint();
            let g = ad.kronecker(&a) * psi + a.kronecker(&ad) * psi.conj();
            let u = expm(&g, Complex64::new(0.0, theta));
            let mut out = vec.clone();
            for &m in ma {
                let slots = [layout.slot(path_a, m)?, layout.slot(path_b, m)?];
                out = out.apply_block(&slots, &u);
            }
            Ok(out)
        }
        OpticalElement::PhaseShifter { path, mode, phi } => {
            let phi = phi.value(values)?;
            let slots: Vec<usize> = match mode {
                Some(m) => vec![layout.slot(path, *m)?],
                None => layout.path_slots(path)?,
            };
            Ok(vec.map_phases(|k| phi * slots.iter().map(|&s| k.0[s] as f64).sum::<f64>()))
        }
        OpticalElement::DovePrism { path, phi } => {
            let phi = phi.value(values)?;
            let spec = layout.path(path)?;
            let pairs: Vec<(usize, f64)> = spec
                .modes
                .iter()
                .map(|&m| Ok((layout.slot(path, m)?, m as f64)))
                .collect::<Result<_>>()?;
            Ok(vec.map_phases(|k| phi * pairs.iter().map(|&(s, m)| m * k.0[s] as f64).sum::<f64>()))
        }
        OpticalElement::PhotonicSwap { a, b } => {
            let (sa, sb) = (slot(&layout, a)?, slot(&layout, b)?);
            Ok(vec.map_states(|k| {
                let mut k = k.clone();
                k.0.swap(sa, sb);
                k
            }))
        }
        OpticalElement::Mirror { path } => {
            let modes = &layout.path(path)?.modes;
            let mut perm = Vec::new();
            for &m in modes {
                if !modes.contains(&-m) {
                    return Err(Error::Config(format!("mirror on `{path}` lacks mode {}", -m)));
                }
                perm.push((layout.slot(path, m)?, layout.slot(path, -m)?));
            }
            Ok(vec.map_states(|k| {
                let mut out = k.clone();
                for &(from, to) in &perm {
                    out.0[to] = k.0[from];
                }
                out
            }))
        }
        OpticalElement::Hologram { path } => {
            let mut modes = layout.path(path)?.modes.clone();
            modes.sort_unstable();
            let slots: Vec<usize> = modes
                .iter()
                .map(|&m| layout.slot(path, m))
                .collect::<Result<_>>()?;
            Ok(vec.map_states(|k| {
                let mut out = k.clone();
                let len = slots.len();
                for i in 0..len {
                    out.0[slots[(i + 1) % len]] = k.0[slots[i]];
                }
                out
            }))
        }
        OpticalElement::PairSource { a, b, omega } => {
            if a == b {
                return Err(Error::Config(format!("pair source targets {a} twice")));
            }
            let omega = omega.value(values)?;
            let ad = creation_matrix(cutoff);
            let an = ad.adjoint();
            let g = ad.kronecker(&ad) - an.kronecker(&an);
            let u = expm(&g, Complex64::new(omega / 2.0, 0.0));
            Ok(vec.apply_block(&[slot(&layout, a)?, slot(&layout, b)?], &u))
        }
        OpticalElement::PhotonInject { path, mode, count } => {
            let s = layout.slot(path, *mode)?;
            let mut bad = None;
            let out = vec.map_states(|k| {
                let mut k = k.clone();
                k.0[s] ^= count;
                if k.0[s] > cutoff {
                    bad = Some(k.0[s]);
                }
                k
            });
            match bad {
                Some(n) => Err(Error::Encoding(format!("occupation {n} exceeds cutoff {cutoff}"))),
                None => Ok(out),
            }
        }
    }
}

/// Output state of the setup.
pub fn evolve(
    layout: Arc<SetupLayout>,
    initial: &InitialState,
    elements: &[OpticalElement],
    values: &ParamValues,
) -> Result<FockVector> {
    let mut v = FockVector::from_initial(layout, initial)?;
    for e in elements {
        v = apply_element_exact(&v, e, values)?;
    }
    Ok(v)
}

/// Output distribution; entries below `1e-30` are dropped.
pub fn exact_distribution(
    layout: Arc<SetupLayout>,
    initial: &InitialState,
    elements: &[OpticalElement],
    values: &ParamValues,
) -> Result<BTreeMap<FockState, f64>> {
    let v = evolve(layout, initial, elements, values)?;
    Ok(v.amps
        .into_iter()
        .map(|(k, a)| (k, a.norm_sqr()))
        .filter(|(_, p)| *p > 1e-30)
        .collect())
}

/// Numerator and denominator of the heralded, post-selected fidelity of
/// `output` against `target`.
///
/// The trigger projection keeps components whose trigger-path occupations
/// match the trigger state, weighted by its conjugate amplitude. Post-selection
/// keeps exactly one photon in every path of `postsel`.
pub fn post_selected_parts(
    output: &FockVector,
    target: &FockVector,
    herald: &HeraldSpec,
    postsel: &[String],
    values: &ParamValues,
) -> Result<(f64, f64)> {
    let layout = output.layout();
    let trigger_slots = layout.path_slots(&herald.path)?;
    let trigger = herald.trigger_amplitudes(layout, values)?;
    let post_slots: Vec<Vec<usize>> = postsel
        .iter()
        .map(|p| layout.path_slots(p))
        .collect::<Result<_>>()?;

    let mut projected: BTreeMap<FockState, Complex64> = BTreeMap::new();
    for (k, a) in &output.amps {
        let pattern: Vec<u32> = trigger_slots.iter().map(|&s| k.0[s]).collect();
        let Some((_, t)) = trigger.iter().find(|(p, _)| *p == pattern) else {
            continue;
        };
        if !post_slots
            .iter()
            .all(|ss| ss.iter().map(|&s| k.0[s]).sum::<u32>() == 1)
        {
            continue;
        }
        let mut rest = k.clone();
        for &s in &trigger_slots {
            rest.0[s] = 0;
        }
        *projected.entry(rest).or_insert(Complex64::new(0.0, 0.0)) += t.conj() * a;
    }
    let denominator: f64 = projected.values().map(|a| a.norm_sqr()).sum();
    let overlap: Complex64 = target
        .amps
        .iter()
        .map(|(k, a)| a.conj() * projected.get(k).copied().unwrap_or_default())
        .sum();
    Ok((overlap.norm_sqr(), denominator))
}

/// Heralded, post-selected fidelity by direct projection in Fock space.
#[allow(clippy::too_many_arguments)]
pub fn exact_post_selected_fidelity(
    layout: Arc<SetupLayout>,
    initial: &InitialState,
    elements: &[OpticalElement],
    values: &ParamValues,
    target: &FockVector,
    herald: &HeraldSpec,
    postsel: &[String],
) -> Result<f64> {
    let out = evolve(layout, initial, elements, values)?;
    let (num, den) = post_selected_parts(&out, target, herald, postsel, values)?;
    if den < DEGENERATE_THRESHOLD {
        return Err(Error::DegenerateFidelity(den));
    }
    Ok(num / den)
}

/// `|<target|output>|^2`.
pub fn exact_plain_fidelity(output: &FockVector, target: &FockVector) -> f64 {
    target.inner(output).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ParamExpr;
    use crate::objectives::Trigger;
    use std::f64::consts::FRAC_PI_4;

    fn two_path(cutoff: u32) -> Arc<SetupLayout> {
        Arc::new(SetupLayout::uniform(&["a", "b"], &[0], cutoff).unwrap())
    }

    fn bs(theta: f64) -> OpticalElement {
        OpticalElement::BeamSplitter {
            path_a: "a".into(),
            path_b: "b".into(),
            theta: ParamExpr::Const(theta),
            psi_phase: 0.0,
        }
    }

    #[test]
    fn zero_angle_beam_splitter_is_identity() {
        let layout = two_path(3);
        let f = layout.fock(&[("a", 0, 2), ("b", 0, 1)]).unwrap();
        let v = FockVector::basis(layout, f.clone()).unwrap();
        let out = apply_element_exact(&v, &bs(0.0), &ParamValues::new()).unwrap();
        assert!((out.amplitude(&f) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn balanced_splitter_distribution() {
        let layout = two_path(1);
        let init = InitialState::photons(&[("a", 0, 1)]);
        let d = exact_distribution(layout, &init, &[bs(FRAC_PI_4)], &ParamValues::new()).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[&FockState(vec![1, 0])] - 0.5).abs() < 1e-12);
        assert!((d[&FockState(vec![0, 1])] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_setup_echoes_initial() {
        let layout = two_path(1);
        let init = InitialState::photons(&[("a", 0, 1)]);
        let d = exact_distribution(layout, &init, &[], &ParamValues::new()).unwrap();
        assert_eq!(d, BTreeMap::from([(FockState(vec![1, 0]), 1.0)]));
    }

    #[test]
    fn phase_shifter_multiplies_by_n() {
        let layout = Arc::new(SetupLayout::uniform(&["a"], &[0], 3).unwrap());
        let ps = OpticalElement::PhaseShifter {
            path: "a".into(),
            mode: Some(0),
            phi: ParamExpr::Const(0.3),
        };
        for n in 0..=3 {
            let v = FockVector::basis(layout.clone(), FockState(vec![n])).unwrap();
            let out = apply_element_exact(&v, &ps, &ParamValues::new()).unwrap();
            let expect = Complex64::from_polar(1.0, 0.3 * n as f64);
            assert!((out.amplitude(&FockState(vec![n])) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn photon_number_conserved_and_norm_kept() {
        let layout = two_path(3);
        let init = InitialState::photons(&[("a", 0, 2), ("b", 0, 1)]);
        let v = evolve(layout, &init, &[bs(0.4), bs(1.1)], &ParamValues::new()).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-10);
        assert!(v.amplitudes().keys().all(|k| k.total_photons() == 3));
    }

    #[test]
    fn pair_source_changes_number_by_two() {
        let layout = two_path(3);
        let src = OpticalElement::PairSource {
            a: ModeKey::new("a", 0),
            b: ModeKey::new("b", 0),
            omega: ParamExpr::Const(0.8),
        };
        let v = FockVector::vacuum(layout);
        let out = apply_element_exact(&v, &src, &ParamValues::new()).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
        assert!(out.amplitudes().keys().all(|k| k.0[0] == k.0[1]));
    }

    #[test]
    fn degenerate_post_selection_is_an_error() {
        let layout = Arc::new(SetupLayout::uniform(&["a", "b"], &[0], 1).unwrap());
        let target = FockVector::basis(layout.clone(), FockState(vec![0, 1])).unwrap();
        let herald = HeraldSpec {
            path: "a".into(),
            trigger: Trigger::Pattern(vec![1]),
        };
        // vacuum never fires the trigger
        let r = exact_post_selected_fidelity(
            layout,
            &InitialState::vacuum(),
            &[],
            &ParamValues::new(),
            &target,
            &herald,
            &["b".into()],
        );
        assert!(matches!(r, Err(Error::DegenerateFidelity(_))));
    }

    #[test]
    fn post_selection_identity_cases() {
        let layout = Arc::new(SetupLayout::uniform(&["a", "b"], &[0, 1], 1).unwrap());
        let init = InitialState::photons(&[("a", 0, 1), ("b", 1, 1)]);
        let herald = HeraldSpec {
            path: "a".into(),
            trigger: Trigger::Pattern(vec![1, 0]),
        };
        let good = FockVector::basis(layout.clone(), layout.fock(&[("b", 1, 1)]).unwrap()).unwrap();
        let bad = FockVector::basis(layout.clone(), layout.fock(&[("b", 0, 1)]).unwrap()).unwrap();
        let post = ["b".to_string()];
        let f = |t: &FockVector| {
            exact_post_selected_fidelity(layout.clone(), &init, &[], &ParamValues::new(), t, &herald, &post)
                .unwrap()
        };
        assert!((f(&good) - 1.0).abs() < 1e-12);
        assert!(f(&bad).abs() < 1e-12);
    }
}
