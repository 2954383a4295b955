//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report reads top to bottom;
//! exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qoptic::circuit::ParamExpr;
use qoptic::elements::{compile_element, OpticalElement};
use qoptic::encoding::{annihilation_operator, creation_operator, number_operator, ModeKey, SetupLayout};
use qoptic::fock_oracle::{apply_element_exact, FockVector};
use qoptic::gradients::{finite_difference, gradient};
use qoptic::objectives::{build_plain_fidelity_qubits, postselect_encoding, Observable};
use qoptic::optimizer::{alternating_uniform_init, multistart, OptConfig};
use qoptic::setup_file::Setup;
use qoptic::simulator::{
    decode, expectation, run_from_zero, run_with, total_variation, valid_state_fraction, StateVector,
};
use qoptic::synthesis::preparation;
use qoptic::{ParamValues, PauliSum};

type Outcome = Result<String, String>;

fn setups() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../setups")
}

fn load(name: &str) -> Setup {
    Setup::load(setups().join(name)).expect("shipped setup loads")
}

fn random_amplitudes(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
    v
}

fn random_point(setup: &Setup, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..setup.params.len()).map(|_| rng.random_range(-PI..PI)).collect()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for cutoff in [1u32, 3, 7] {
        let layout = SetupLayout::uniform(&["a"], &[0], cutoff).map_err(|e| e.to_string())?;
        let q = layout.qubits_per_mode();
        let dim = 1usize << q;
        let ops = [
            creation_operator(&layout, "a", 0),
            annihilation_operator(&layout, "a", 0),
            number_operator(&layout, "a", 0),
        ];
        for (k, op) in ops.into_iter().enumerate() {
            let m = op.map_err(|e| e.to_string())?.to_dense(q);
            for r in 0..dim {
                for c in 0..dim {
                    let want = match k {
                        0 if r == c + 1 && r <= cutoff as usize => (r as f64).sqrt(),
                        1 if c == r + 1 && c <= cutoff as usize => (c as f64).sqrt(),
                        2 if r == c && r <= cutoff as usize => r as f64,
                        _ => 0.0,
                    };
                    worst = worst.max((m[r][c] - Complex64::new(want, 0.0)).norm());
                }
            }
        }
    }
    if worst < 1e-12 {
        Ok(format!("max entry error {worst:.1e} over cutoffs 1, 3, 7"))
    } else {
        Err(format!("max entry error {worst:.3e}"))
    }
}

fn criterion_2() -> Outcome {
    let layout = Arc::new(SetupLayout::uniform(&["a", "b"], &[-1, 0, 1], 1).map_err(|e| e.to_string())?);
    let n = layout.total_qubits();
    let t = || ParamExpr::param("t");
    let elements = [
        OpticalElement::PhaseShifter { path: "a".into(), mode: Some(0), phi: t() },
        OpticalElement::PhaseShifter { path: "b".into(), mode: None, phi: t() },
        OpticalElement::DovePrism { path: "a".into(), phi: t() },
        OpticalElement::PhotonicSwap { a: ModeKey::new("a", -1), b: ModeKey::new("b", 1) },
        OpticalElement::Mirror { path: "b".into() },
        OpticalElement::Hologram { path: "a".into() },
        OpticalElement::BeamSplitter { path_a: "a".into(), path_b: "b".into(), theta: t(), psi_phase: 0.0 },
        OpticalElement::BeamSplitter { path_a: "b".into(), path_b: "a".into(), theta: t(), psi_phase: 1.3 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for el in &elements {
        let circuit = compile_element(&layout, el, 1).map_err(|e| format!("{}: {e}", el.kind()))?;
        for _ in 0..100 {
            let values: ParamValues = [("t".to_string(), rng.random_range(-PI..PI))].into();
            let amps = random_amplitudes(1 << n, &mut rng);
            let input = FockVector::from_terms(
                layout.clone(),
                amps.iter().enumerate().map(|(i, a)| (layout.index_to_fock(i, n), *a)),
            )
            .map_err(|e| e.to_string())?;
            let oracle = apply_element_exact(&input, el, &values)
                .and_then(|v| v.to_qubit_amplitudes())
                .map_err(|e| e.to_string())?;
            let state = StateVector::from_amplitudes(amps).map_err(|e| e.to_string())?;
            let out = run_with(&circuit, &state, &values).map_err(|e| e.to_string())?;
            let d: f64 = out
                .amplitudes()
                .iter()
                .zip(&oracle)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(d);
            if d >= 1e-10 {
                return Err(format!("{}: L2 distance {d:.3e}", el.kind()));
            }
        }
    }
    Ok(format!("{} elements x 100 inputs, max L2 {worst:.1e}", elements.len()))
}

fn criterion_3() -> Outcome {
    let setup = load("boson5.toml");
    if setup.layout.total_qubits() != 10 {
        return Err(format!("expected 10 qubits, got {}", setup.layout.total_qubits()));
    }
    let values = setup.values(None);
    let oracle = setup.oracle_distribution(&values).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for steps in [5, 10, 20, 40, 50] {
        let state = run_from_zero(&setup.circuit(steps).map_err(|e| e.to_string())?, &values)
            .map_err(|e| e.to_string())?;
        let vf = valid_state_fraction(&state, &setup.layout, 3);
        let tvd = total_variation(&oracle, &decode(&state, &setup.layout).map_err(|e| e.to_string())?);
        rows.push((steps, vf, tvd));
    }
    let inversions: Vec<f64> = rows.windows(2).map(|w| w[0].1 - w[1].1).filter(|d| *d > 0.0).collect();
    let detail = rows
        .iter()
        .map(|(s, v, t)| format!("{s}:{v:.5}/{t:.4}"))
        .collect::<Vec<_>>()
        .join(" ");
    if inversions.len() > 1 || inversions.iter().any(|d| *d >= 1e-3) {
        return Err(format!("valid fraction not monotone: {detail}"));
    }
    let (_, vf50, tvd50) = rows[4];
    let (_, _, tvd10) = rows[1];
    if vf50 < 0.999 || tvd10 > 0.05 || tvd50 > 0.005 {
        return Err(format!("thresholds missed: {detail}"));
    }
    Ok(format!("steps:valid/tvd {detail}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let phi = random_amplitudes(8, &mut rng);
        let psi = random_amplitudes(8, &mut rng);
        let prep = preparation(3, &phi.iter().copied().enumerate().collect::<Vec<_>>()).map_err(|e| e.to_string())?;
        let target: Vec<(usize, Complex64)> = psi.iter().copied().enumerate().collect();
        let obj = build_plain_fidelity_qubits(&prep, &target).map_err(|e| e.to_string())?;
        let f = obj.evaluate(&ParamValues::new()).map_err(|e| e.to_string())?.value;
        let direct = psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr();
        worst = worst.max((f - direct).abs());

        let state = StateVector::from_amplitudes(phi.clone()).map_err(|e| e.to_string())?;
        let p0 = expectation(&state, &PauliSum::zero_projector(&[0, 1, 2])).map_err(|e| e.to_string())?;
        let obs = Observable::ZeroProjector(vec![0, 1, 2]).evaluate(&state).map_err(|e| e.to_string())?;
        worst = worst.max((p0 - phi[0].norm_sqr()).abs()).max((obs - phi[0].norm_sqr()).abs());
    }
    if worst < 1e-12 {
        Ok(format!("100 random pairs, max deviation {worst:.1e}"))
    } else {
        Err(format!("max deviation {worst:.3e}"))
    }
}

fn criterion_5() -> Outcome {
    let setup = load("ghz332.toml");
    let objective = setup.build_objective(setup.simulation.trotter_steps).map_err(|e| e.to_string())?;
    let (circuits, _) = objective.circuits();
    if circuits.len() != 1 || circuits[0].num_qubits() != 15 {
        return Err(format!("expected one 15-qubit circuit, got {:?}", circuits.iter().map(|c| c.num_qubits()).collect::<Vec<_>>()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let values = setup.values(Some(&random_point(&setup, &mut rng)));
        let circuit = objective.evaluate(&values).map_err(|e| e.to_string())?.value;
        let oracle = setup.oracle_objective(&values).map_err(|e| e.to_string())?;
        worst = worst.max((circuit - oracle).abs());
        let out = setup.oracle_output(&values).map_err(|e| e.to_string())?;
        for (f, a) in out.amplitudes() {
            for p in setup.layout.paths() {
                let slots = setup.layout.path_slots(&p.label).map_err(|e| e.to_string())?;
                if a.norm_sqr() > 1e-24 && slots.iter().map(|&s| f.0[s]).sum::<u32>() >= 3 {
                    return Err(format!("three photons in path {}: {}", p.label, setup.layout.fock_label(f)));
                }
            }
        }
    }
    if worst >= 1e-8 {
        return Err(format!("circuit vs oracle deviation {worst:.3e}"));
    }

    let layout = SetupLayout::uniform(&["p"], &[-1, 0, 1], 1).map_err(|e| e.to_string())?;
    let (enc, anc) = postselect_encoding(&layout, &["p".to_string()]).map_err(|e| e.to_string())?;
    let n = enc.num_qubits();
    for pattern in 0..8usize {
        let input = StateVector::basis(n, pattern << 1).map_err(|e| e.to_string())?;
        let out = run_with(&enc, &input, &ParamValues::new()).map_err(|e| e.to_string())?;
        let idx = out.probabilities().iter().position(|p| *p > 0.5).unwrap_or(usize::MAX);
        let ancilla_bit = (idx >> (n - 1 - anc[0])) & 1;
        let expected = usize::from(pattern.count_ones() % 2 == 0);
        if ancilla_bit != expected || idx >> 1 != pattern {
            return Err(format!("parity table wrong for pattern {pattern:03b}"));
        }
    }
    Ok(format!("50 points, max deviation {worst:.1e}; parity table 8/8; no 3-photon paths"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (name, points) in [("ghz332.toml", 20), ("toy_splitter.toml", 20), ("constant_phase.toml", 5)] {
        let setup = load(name);
        let objective = setup.build_objective(setup.simulation.trotter_steps).map_err(|e| e.to_string())?;
        let names = setup.param_names();
        for _ in 0..points {
            let values = setup.values(Some(&random_point(&setup, &mut rng)));
            let g = gradient(&objective, &names, &values, setup.simulation.gradient).map_err(|e| e.to_string())?;
            let fd = finite_difference(&objective, &names, &values, 1e-5).map_err(|e| e.to_string())?;
            for (a, b) in g.gradient.iter().zip(&fd) {
                worst = worst.max((a - b).abs());
            }
            checked += 1;
        }
    }
    if worst < 1e-6 {
        Ok(format!("{checked} points over 3 objectives, max |analytic - numeric| {worst:.1e}"))
    } else {
        Err(format!("max |analytic - numeric| {worst:.3e}"))
    }
}

fn criterion_7() -> Outcome {
    let setup = load("ghz332.toml");
    let objective = setup.build_objective(setup.simulation.trotter_steps).map_err(|e| e.to_string())?;
    let problem = setup.problem(&objective);
    let config = OptConfig { max_iters: 200, seed: setup.simulation.seed, ..OptConfig::default() };
    let result = multistart(&problem, 10, &|rng| alternating_uniform_init(3, 0.2, rng), &config)
        .map_err(|e| e.to_string())?;
    let hits = result.runs.iter().filter(|r| r.best_value >= 0.99).count();
    if let Some(i) = result.runs.iter().position(|r| !r.trace.is_monotone()) {
        return Err(format!("trace for seed {} is not monotone", result.seeds[i]));
    }
    let iters: Vec<usize> = result.runs.iter().map(|r| r.trace.records.len() - 1).collect();
    if hits >= 8 {
        Ok(format!("{hits}/10 seeds reach 0.99, iterations {iters:?}"))
    } else {
        Err(format!("only {hits}/10 seeds reach 0.99"))
    }
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qoptic"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("qoptic {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let boson = setups().join("boson5.toml");
    let ghz = setups().join("ghz332.toml");
    let (boson, ghz) = (boson.to_str().unwrap(), ghz.to_str().unwrap());
    let mut compared = 0;
    for round in 0..2 {
        let traces = dir.path().join(format!("traces{round}"));
        let outputs = [
            run_cli(&["simulate", boson, "--steps", "10"])?,
            run_cli(&["simulate", boson, "--backend", "oracle"])?,
            run_cli(&["sample", boson, "--shots", "5000", "--seed", "9"])?,
            run_cli(&["optimize", ghz, "--seeds", "2", "--out-dir", traces.to_str().unwrap()])?,
        ];
        std::fs::write(dir.path().join(format!("out{round}")), outputs.concat()).map_err(|e| e.to_string())?;
    }
    let a = std::fs::read(dir.path().join("out0")).map_err(|e| e.to_string())?;
    let b = std::fs::read(dir.path().join("out1")).map_err(|e| e.to_string())?;
    if a != b {
        return Err("stdout differs between identical runs".into());
    }
    compared += 4;
    for seed in [7, 8] {
        let name = format!("trace_seed{seed}.csv");
        let x = std::fs::read(dir.path().join("traces0").join(&name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(dir.path().join("traces1").join(&name)).map_err(|e| e.to_string())?;
        if x != y || x.is_empty() {
            return Err(format!("{name} differs between identical runs"));
        }
        compared += 1;
    }
    Ok(format!("{compared} CSV outputs byte-identical across two runs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("encoding fidelity", criterion_1),
        ("element vs oracle", criterion_2),
        ("trotter convergence", criterion_3),
        ("fidelity identities", criterion_4),
        ("post-selection", criterion_5),
        ("gradients", criterion_6),
        ("332 optimization", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
