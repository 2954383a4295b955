//! Declarative TOML setup files.
//!
//! ```toml
//! [layout]
//! cutoff = 1
//! modes = [-1, 0, 1]          # default mode list for bare path labels
//! paths = ["a", "b", { label = "c", modes = [0] }]
//!
//! [[parameters]]
//! name = "phi"
//! value = 0.0
//!
//! [[initial]]
//! type = "bell"               # also "photons", "superposition"
//! paths = ["a", "b"]
//! anti_correlated = false
//!
//! [[elements]]
//! type = "beam_splitter"      # see ElementDoc for all kinds
//! paths = ["b", "c"]
//! theta = 0.7853981633974483  # number, parameter name, or {param, scale, offset}
//!
//! [objective]
//! kind = "post_selected"      # or "plain"
//! target = [{ state = "1@(0,b) 1@(0,c)", re = 1.0 }]
//! postselect = ["b", "c"]
//! herald = { path = "a", alpha = "alpha", beta = "beta" }
//!
//! [simulation]
//! trotter_steps = 10
//! seed = 7
//! shots = 10000
//! gradient = "parameter_shift"
//! ```
//!
//! Unknown keys are rejected. Every parameter referenced by an element or
//! the herald must be declared exactly once under `[[parameters]]`.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use crate::circuit::{GateCircuit, ParamExpr, ParamValues};
use crate::elements::{compile_initial_state, compile_setup, hologram_diagnostics, InitialState, OpticalElement, StateComponent};
use crate::encoding::{FockState, ModeKey, PathSpec, SetupLayout};
use crate::error::{Error, Result};
use crate::fock_oracle::{self, FockVector};
use crate::gradients::GradientPolicy;
use crate::objectives::{build_plain_fidelity, build_post_selected_fidelity, HeraldSpec, Objective, Trigger};
use crate::optimizer::Problem;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    layout: LayoutDoc,
    #[serde(default)]
    parameters: Vec<ParamDoc>,
    #[serde(default)]
    initial: Vec<InitialDoc>,
    #[serde(default)]
    elements: Vec<ElementDoc>,
    objective: Option<ObjectiveDoc>,
    #[serde(default)]
    simulation: SimulationDoc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    cutoff: u32,
    modes: Option<Vec<i32>>,
    paths: Vec<PathDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PathDoc {
    Label(String),
    Full { label: String, modes: Vec<i32> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    name: String,
    #[serde(default)]
    value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum InitialDoc {
    Photons {
        state: String,
    },
    Bell {
        paths: [String; 2],
        modes: Option<Vec<i32>>,
        #[serde(default)]
        anti_correlated: bool,
    },
    Superposition {
        amplitudes: Vec<AmpDoc>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmpDoc {
    state: String,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeDoc {
    path: String,
    mode: i32,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AngleDoc {
    Number(f64),
    Name(String),
    Expr {
        param: String,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ElementDoc {
    BeamSplitter {
        paths: [String; 2],
        theta: AngleDoc,
        #[serde(default)]
        psi_phase: f64,
    },
    PhaseShifter {
        path: String,
        mode: Option<i32>,
        phi: AngleDoc,
    },
    DovePrism {
        path: String,
        phi: AngleDoc,
    },
    Swap {
        a: ModeDoc,
        b: ModeDoc,
    },
    Mirror {
        path: String,
    },
    Hologram {
        path: String,
    },
    PairSource {
        a: ModeDoc,
        b: ModeDoc,
        omega: AngleDoc,
    },
    Inject {
        path: String,
        mode: i32,
        count: u32,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ObjectiveKindDoc {
    PostSelected,
    Plain,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveDoc {
    kind: ObjectiveKindDoc,
    target: Vec<AmpDoc>,
    herald: Option<HeraldDoc>,
    #[serde(default)]
    postselect: Vec<String>,
    success_threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeraldDoc {
    path: String,
    alpha: Option<AngleDoc>,
    beta: Option<AngleDoc>,
    /// Fixed trigger occupations as a Fock label on the trigger path.
    pattern: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GradientDoc {
    #[default]
    ParameterShift,
    Naive,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationDoc {
    #[serde(default = "default_steps")]
    trotter_steps: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_shots")]
    shots: u64,
    #[serde(default)]
    gradient: GradientDoc,
    expected_photons: Option<u32>,
}

fn default_steps() -> usize {
    10
}

fn default_shots() -> u64 {
    1000
}

impl Default for SimulationDoc {
    fn default() -> Self {
        Self {
            trotter_steps: default_steps(),
            seed: 0,
            shots: default_shots(),
            gradient: GradientDoc::default(),
            expected_photons: None,
        }
    }
}

#[derive(Clone, Debug)]
pub enum ObjectiveKind {
    PostSelected { herald: HeraldSpec, postsel: Vec<String> },
    Plain,
}

#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub target: FockVector,
    pub success_threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub trotter_steps: usize,
    pub seed: u64,
    pub shots: u64,
    pub gradient: GradientPolicy,
    pub expected_photons: Option<u32>,
}

/// A validated setup file.
#[derive(Clone, Debug)]
pub struct Setup {
    pub layout: Arc<SetupLayout>,
    /// Declared parameters in file order with their initial values.
    pub params: Vec<(String, f64)>,
    pub initial: InitialState,
    pub elements: Vec<OpticalElement>,
    pub objective: Option<ObjectiveSpec>,
    pub simulation: SimulationConfig,
}

fn field_err(field: impl std::fmt::Display, e: Error) -> Error {
    Error::SetupFile(format!("{field}: {e}"))
}

impl Setup {
    pub fn load(path: impl AsRef<Path>) -> Result<Setup> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::SetupFile(msg) => Error::SetupFile(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Setup> {
        let doc: FileDoc = toml::from_str(text).map_err(|e| Error::SetupFile(e.to_string()))?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: FileDoc) -> Result<Setup> {
        let default_modes = doc.layout.modes.clone();
        let paths = doc
            .layout
            .paths
            .into_iter()
            .map(|p| match p {
                PathDoc::Full { label, modes } => Ok(PathSpec { label, modes }),
                PathDoc::Label(label) => match &default_modes {
                    Some(m) => Ok(PathSpec { label, modes: m.clone() }),
                    None => Err(Error::SetupFile(format!(
                        "layout.paths: `{label}` has no modes and layout.modes is not set"
                    ))),
                },
            })
            .collect::<Result<Vec<_>>>()?;
        let layout = Arc::new(SetupLayout::new(paths, doc.layout.cutoff).map_err(|e| field_err("layout", e))?);

        let mut params = Vec::new();
        let mut declared = BTreeSet::new();
        for (i, p) in doc.parameters.iter().enumerate() {
            if !declared.insert(p.name.clone()) {
                return Err(Error::SetupFile(format!(
                    "parameters[{i}]: `{}` declared twice",
                    p.name
                )));
            }
            params.push((p.name.clone(), p.value));
        }
        let angle = |field: String, a: AngleDoc| -> Result<ParamExpr> {
            let expr = match a {
                AngleDoc::Number(v) => ParamExpr::Const(v),
                AngleDoc::Name(n) => ParamExpr::param(n),
                AngleDoc::Expr { param, scale, offset } => ParamExpr::param(param).times(scale).shifted(offset),
            };
            if let Some(n) = expr.name() {
                if !declared.contains(n) {
                    return Err(Error::SetupFile(format!("{field}: undeclared parameter `{n}`")));
                }
            }
            Ok(expr)
        };

        let mut initial = InitialState::default();
        for (i, c) in doc.initial.into_iter().enumerate() {
            let field = format!("initial[{i}]");
            let comp = match c {
                InitialDoc::Photons { state } => {
                    let f = layout.parse_fock_label(&state).map_err(|e| field_err(&field, e))?;
                    let occ = f
                        .0
                        .iter()
                        .zip(layout.slots())
                        .filter(|(n, _)| **n > 0)
                        .map(|(n, k)| (k.clone(), *n))
                        .collect();
                    StateComponent::Photons(occ)
                }
                InitialDoc::Bell { paths: [a, b], modes, anti_correlated } => {
                    let modes = match modes {
                        Some(m) => m,
                        None => layout.path(&a).map_err(|e| field_err(&field, e))?.modes.clone(),
                    };
                    StateComponent::BellPair { path_a: a, path_b: b, modes, anti_correlated }
                }
                InitialDoc::Superposition { amplitudes } => {
                    StateComponent::Superposition(parse_amplitudes(&layout, &amplitudes).map_err(|e| field_err(&field, e))?)
                }
            };
            initial.components.push(comp);
        }
        initial.amplitudes(&layout).map_err(|e| field_err("initial", e))?;

        let mut elements = Vec::new();
        for (i, e) in doc.elements.into_iter().enumerate() {
            let field = format!("elements[{i}]");
            let el = match e {
                ElementDoc::BeamSplitter { paths: [a, b], theta, psi_phase } => OpticalElement::BeamSplitter {
                    path_a: a,
                    path_b: b,
                    theta: angle(format!("{field}.theta"), theta)?,
                    psi_phase,
                },
                ElementDoc::PhaseShifter { path, mode, phi } => OpticalElement::PhaseShifter {
                    path,
                    mode,
                    phi: angle(format!("{field}.phi"), phi)?,
                },
                ElementDoc::DovePrism { path, phi } => OpticalElement::DovePrism {
                    path,
                    phi: angle(format!("{field}.phi"), phi)?,
                },
                ElementDoc::Swap { a, b } => OpticalElement::PhotonicSwap {
                    a: ModeKey::new(a.path, a.mode),
                    b: ModeKey::new(b.path, b.mode),
                },
                ElementDoc::Mirror { path } => OpticalElement::Mirror { path },
                ElementDoc::Hologram { path } => OpticalElement::Hologram { path },
                ElementDoc::PairSource { a, b, omega } => OpticalElement::PairSource {
                    a: ModeKey::new(a.path, a.mode),
                    b: ModeKey::new(b.path, b.mode),
                    omega: angle(format!("{field}.omega"), omega)?,
                },
                ElementDoc::Inject { path, mode, count } => OpticalElement::PhotonInject { path, mode, count },
            };
            // compile once to surface lookup and shape errors with the field name
            compile_setup(&layout, std::slice::from_ref(&el), 1).map_err(|e| field_err(&field, e))?;
            elements.push(el);
        }

        let objective = match doc.objective {
            None => None,
            Some(o) => {
                let terms = parse_amplitudes(&layout, &o.target).map_err(|e| field_err("objective.target", e))?;
                let target = FockVector::from_terms(layout.clone(), terms)?;
                let norm = target.norm();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::SetupFile(format!("objective.target: norm is {norm}, expected 1")));
                }
                let kind = match o.kind {
                    ObjectiveKindDoc::Plain => {
                        if o.herald.is_some() || !o.postselect.is_empty() {
                            return Err(Error::SetupFile(
                                "objective: herald and postselect only apply to kind = \"post_selected\"".into(),
                            ));
                        }
                        ObjectiveKind::Plain
                    }
                    ObjectiveKindDoc::PostSelected => {
                        let h = o.herald.ok_or_else(|| {
                            Error::SetupFile("objective.herald: required for kind = \"post_selected\"".into())
                        })?;
                        let trigger = match (h.pattern, h.alpha, h.beta) {
                            (Some(p), None, None) => {
                                let f = layout.parse_fock_label(&p).map_err(|e| field_err("objective.herald.pattern", e))?;
                                let slots = layout.path_slots(&h.path).map_err(|e| field_err("objective.herald.path", e))?;
                                if f.total_photons() != slots.iter().map(|&s| f.0[s]).sum::<u32>() {
                                    return Err(Error::SetupFile(format!(
                                        "objective.herald.pattern: photons outside path `{}`",
                                        h.path
                                    )));
                                }
                                Trigger::Pattern(slots.iter().map(|&s| f.0[s]).collect())
                            }
                            (None, Some(a), b) => Trigger::Chart {
                                alpha: angle("objective.herald.alpha".into(), a)?,
                                beta: match b {
                                    Some(b) => angle("objective.herald.beta".into(), b)?,
                                    None => ParamExpr::Const(0.0),
                                },
                            },
                            _ => {
                                return Err(Error::SetupFile(
                                    "objective.herald: give either `pattern` or `alpha` (and `beta`)".into(),
                                ))
                            }
                        };
                        ObjectiveKind::PostSelected {
                            herald: HeraldSpec { path: h.path, trigger },
                            postsel: o.postselect,
                        }
                    }
                };
                Some(ObjectiveSpec {
                    kind,
                    target,
                    success_threshold: o.success_threshold.unwrap_or(0.99),
                })
            }
        };

        let s = doc.simulation;
        if s.trotter_steps == 0 {
            return Err(Error::SetupFile("simulation.trotter_steps: must be at least 1".into()));
        }
        let setup = Setup {
            layout,
            params,
            initial,
            elements,
            objective,
            simulation: SimulationConfig {
                trotter_steps: s.trotter_steps,
                seed: s.seed,
                shots: s.shots,
                gradient: match s.gradient {
                    GradientDoc::ParameterShift => GradientPolicy::ParameterShift,
                    GradientDoc::Naive => GradientPolicy::Naive,
                },
                expected_photons: s.expected_photons,
            },
        };
        if setup.objective.is_some() {
            setup.build_objective(1).map_err(|e| field_err("objective", e))?;
        }
        Ok(setup)
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.params.iter().map(|(_, v)| *v).collect()
    }

    /// Declared values, with `x` (in declaration order) overriding them.
    pub fn values(&self, x: Option<&[f64]>) -> ParamValues {
        let mut v: ParamValues = self.params.iter().cloned().collect();
        if let Some(x) = x {
            for ((n, _), xi) in self.params.iter().zip(x) {
                v.insert(n.clone(), *xi);
            }
        }
        v
    }

    /// Initial-state preparation followed by every element.
    pub fn circuit(&self, steps: usize) -> Result<GateCircuit> {
        let mut c = compile_initial_state(&self.layout, &self.initial)?;
        c.append(&compile_setup(&self.layout, &self.elements, steps)?)?;
        for (n, v) in &self.params {
            c.set_param(n.clone(), *v);
        }
        Ok(c)
    }

    pub fn build_objective(&self, steps: usize) -> Result<Objective> {
        let spec = self
            .objective
            .as_ref()
            .ok_or_else(|| Error::Config("setup has no objective".into()))?;
        let circuit = self.circuit(steps)?;
        match &spec.kind {
            ObjectiveKind::Plain => build_plain_fidelity(&self.layout, &circuit, &spec.target),
            ObjectiveKind::PostSelected { herald, postsel } => {
                build_post_selected_fidelity(&self.layout, &circuit, &spec.target, herald, postsel)
            }
        }
    }

    pub fn problem<'a>(&self, objective: &'a Objective) -> Problem<'a> {
        Problem {
            objective,
            names: self.param_names(),
            fixed: self.values(None),
            policy: self.simulation.gradient,
        }
    }

    pub fn oracle_output(&self, values: &ParamValues) -> Result<FockVector> {
        fock_oracle::evolve(self.layout.clone(), &self.initial, &self.elements, values)
    }

    pub fn oracle_distribution(&self, values: &ParamValues) -> Result<std::collections::BTreeMap<FockState, f64>> {
        fock_oracle::exact_distribution(self.layout.clone(), &self.initial, &self.elements, values)
    }

    /// Objective value computed by the Fock oracle.
    pub fn oracle_objective(&self, values: &ParamValues) -> Result<f64> {
        let spec = self
            .objective
            .as_ref()
            .ok_or_else(|| Error::Config("setup has no objective".into()))?;
        match &spec.kind {
            ObjectiveKind::Plain => Ok(fock_oracle::exact_plain_fidelity(&self.oracle_output(values)?, &spec.target)),
            ObjectiveKind::PostSelected { herald, postsel } => fock_oracle::exact_post_selected_fidelity(
                self.layout.clone(),
                &self.initial,
                &self.elements,
                values,
                &spec.target,
                herald,
                postsel,
            ),
        }
    }

    /// Photon number the output should carry, when it is well defined.
    pub fn expected_photons(&self) -> Result<Option<u32>> {
        if let Some(n) = self.simulation.expected_photons {
            return Ok(Some(n));
        }
        if !self.elements.iter().all(OpticalElement::conserves_photons) {
            return Ok(None);
        }
        self.initial.photon_number(&self.layout)
    }

    pub fn diagnostics(&self) -> Result<Vec<String>> {
        hologram_diagnostics(&self.layout, &self.initial, &self.elements)
    }
}

fn parse_amplitudes(layout: &SetupLayout, amps: &[AmpDoc]) -> Result<Vec<(FockState, Complex64)>> {
    amps.iter()
        .map(|a| Ok((layout.parse_fock_label(&a.state)?, Complex64::new(a.re, a.im))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[layout]
cutoff = 1
paths = [{ label = "a", modes = [0] }, { label = "b", modes = [0] }]

[[parameters]]
name = "t"
value = 0.3

[[initial]]
type = "photons"
state = "1@(0,a)"

[[elements]]
type = "beam_splitter"
paths = ["a", "b"]
theta = "t"

[objective]
kind = "plain"
target = [{ state = "1@(0,b)", re = 1.0 }]
"#;

    #[test]
    fn parses_minimal_file() {
        let s = Setup::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.param_names(), vec!["t".to_string()]);
        assert_eq!(s.layout.total_qubits(), 2);
        assert_eq!(s.expected_photons().unwrap(), Some(1));
        let obj = s.build_objective(1).unwrap();
        let v = obj.evaluate(&s.values(None)).unwrap().value;
        assert!((v - 0.3f64.sin().powi(2)).abs() < 1e-12);
        assert!((s.oracle_objective(&s.values(None)).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let bad = MINIMAL.replace("theta = \"t\"", "theta = \"t\"\ncolour = 3");
        let err = Setup::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn undeclared_parameter_rejected() {
        let bad = MINIMAL.replace("theta = \"t\"", "theta = \"u\"");
        let err = Setup::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("elements[0].theta") && err.contains("`u`"), "{err}");
    }

    #[test]
    fn duplicate_parameter_rejected() {
        let bad = MINIMAL.replace("value = 0.3", "value = 0.3\n\n[[parameters]]\nname = \"t\"");
        assert!(Setup::from_toml_str(&bad).unwrap_err().to_string().contains("declared twice"));
    }

    #[test]
    fn unknown_path_reported_by_field() {
        let bad = MINIMAL.replace("paths = [\"a\", \"b\"]", "paths = [\"a\", \"q\"]");
        let err = Setup::from_toml_str(&bad).unwrap_err().to_string();
        assert!(err.contains("elements[0]") && err.contains("`q`"), "{err}");
    }

    #[test]
    fn angle_expressions() {
        let text = MINIMAL.replace("theta = \"t\"", "theta = { param = \"t\", scale = 2.0, offset = 0.5 }");
        let s = Setup::from_toml_str(&text).unwrap();
        let OpticalElement::BeamSplitter { theta, .. } = &s.elements[0] else { panic!() };
        assert_eq!(theta.value(&s.values(None)).unwrap(), 1.1);
        let int = MINIMAL.replace("theta = \"t\"", "theta = 0");
        assert!(Setup::from_toml_str(&int).is_ok());
    }
}
