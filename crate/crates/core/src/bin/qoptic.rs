use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use qoptic::encoding::FockState;
use qoptic::gradients::{finite_difference, gradient};
use qoptic::optimizer::{alternating_uniform_init, multistart, Method, OptConfig};
use qoptic::setup_file::Setup;
use qoptic::simulator::{decode, run_from_zero, sample, total_variation, valid_state_fraction};
use qoptic::{Bitstring, ParamValues};

#[derive(Parser)]
#[command(name = "qoptic", version, about = "Simulate and optimize linear-optical setups on a qubit register")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Qubit,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Bfgs,
    GradientAscent,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleCircuit {
    /// State preparation and elements only.
    Setup,
    /// Full fidelity circuit; the all-zero frequency estimates the objective numerator.
    Objective,
}

#[derive(Subcommand)]
enum Command {
    /// Output distribution over Fock states as `state,probability` CSV.
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "qubit")]
        backend: Backend,
        /// Trotter steps; defaults to the file's value.
        #[arg(long)]
        steps: Option<usize>,
        /// Comma separated step counts; writes one CSV per count into --out-dir.
        #[arg(long, value_delimiter = ',', conflicts_with = "steps")]
        sweep: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Write the compiled gate list here.
        #[arg(long)]
        dump_circuit: Option<PathBuf>,
        /// Override a parameter, `name=value`.
        #[arg(long = "set", value_parser = parse_assignment)]
        set: Vec<(String, f64)>,
    },
    /// Multistart optimization of the file's objective.
    Optimize {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, value_enum, default_value = "bfgs")]
        method: MethodArg,
        /// First seed; defaults to the file's value.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Write one trace CSV per start here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compare analytic gradients with central differences.
    Gradcheck {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long = "set", value_parser = parse_assignment)]
        set: Vec<(String, f64)>,
    },
    /// Measurement counts in the computational basis.
    Sample {
        file: PathBuf,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum, default_value = "setup")]
        circuit: SampleCircuit,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set", value_parser = parse_assignment)]
        set: Vec<(String, f64)>,
    },
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn values_with(setup: &Setup, set: &[(String, f64)]) -> anyhow::Result<ParamValues> {
    let mut v = setup.values(None);
    for (k, x) in set {
        if !v.contains_key(k) {
            bail!("--set {k}: not a declared parameter");
        }
        v.insert(k.clone(), *x);
    }
    Ok(v)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn distribution_csv(setup: &Setup, dist: &BTreeMap<FockState, f64>) -> String {
    let mut rows: Vec<(String, f64)> = dist.iter().map(|(k, p)| (setup.layout.fock_label(k), *p)).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut s = String::from("state,probability\n");
    for (label, p) in rows {
        s.push_str(&format!("{label},{p:.12}\n"));
    }
    s
}

struct SimOutcome {
    dist: BTreeMap<FockState, f64>,
    valid_fraction: Option<f64>,
}

fn simulate_once(setup: &Setup, backend: Backend, steps: usize, values: &ParamValues) -> anyhow::Result<SimOutcome> {
    let expected = setup.expected_photons()?;
    match backend {
        Backend::Oracle => Ok(SimOutcome {
            dist: setup.oracle_distribution(values)?,
            valid_fraction: expected.map(|_| 1.0),
        }),
        Backend::Qubit => {
            let state = run_from_zero(&setup.circuit(steps)?, values)?;
            Ok(SimOutcome {
                dist: decode(&state, &setup.layout)?,
                valid_fraction: expected.map(|n| valid_state_fraction(&state, &setup.layout, n)),
            })
        }
    }
}

fn cmd_simulate(
    file: &Path,
    backend: Backend,
    steps: Option<usize>,
    sweep: &[usize],
    out: Option<&Path>,
    out_dir: &Path,
    dump_circuit: Option<&Path>,
    set: &[(String, f64)],
) -> anyhow::Result<ExitCode> {
    let setup = Setup::load(file)?;
    let values = values_with(&setup, set)?;
    for d in setup.diagnostics()? {
        eprintln!("warning: {d}");
    }
    if let Some(p) = dump_circuit {
        let c = setup.circuit(steps.unwrap_or(setup.simulation.trotter_steps))?;
        fs::write(p, c.to_string()).with_context(|| format!("writing {}", p.display()))?;
    }
    let oracle = match backend {
        Backend::Qubit => Some(setup.oracle_distribution(&values)).transpose().ok().flatten(),
        Backend::Oracle => None,
    };

    if !sweep.is_empty() {
        fs::create_dir_all(out_dir)?;
        let mut summary = String::from("steps,valid_fraction,tvd\n");
        for &k in sweep {
            let r = simulate_once(&setup, backend, k, &values)?;
            let path = out_dir.join(format!("distribution_steps{k}.csv"));
            fs::write(&path, distribution_csv(&setup, &r.dist))?;
            let vf = r.valid_fraction.map(|v| format!("{v:.12}")).unwrap_or_default();
            let tvd = oracle.as_ref().map(|p| format!("{:.12}", total_variation(p, &r.dist))).unwrap_or_default();
            summary.push_str(&format!("{k},{vf},{tvd}\n"));
        }
        emit(out, &summary)?;
        return Ok(ExitCode::SUCCESS);
    }

    let k = steps.unwrap_or(setup.simulation.trotter_steps);
    let r = simulate_once(&setup, backend, k, &values)?;
    emit(out, &distribution_csv(&setup, &r.dist))?;
    if let Some(vf) = r.valid_fraction {
        eprintln!("valid_state_fraction {vf:.12}");
    }
    if let Some(p) = &oracle {
        eprintln!("tvd_vs_oracle {:.12}", total_variation(p, &r.dist));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(
    file: &Path,
    seeds: usize,
    max_iters: usize,
    method: MethodArg,
    seed: Option<u64>,
    steps: Option<usize>,
    out_dir: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let setup = Setup::load(file)?;
    let spec = setup.objective.as_ref().context("setup has no [objective]")?;
    let objective = setup.build_objective(steps.unwrap_or(setup.simulation.trotter_steps))?;
    let problem = setup.problem(&objective);
    let dim = setup.params.len();
    if dim == 0 {
        bail!("setup declares no parameters");
    }
    let config = OptConfig {
        method: match method {
            MethodArg::Bfgs => Method::Bfgs,
            MethodArg::GradientAscent => Method::GradientAscent,
        },
        max_iters,
        seed: seed.unwrap_or(setup.simulation.seed),
        ..OptConfig::default()
    };
    let result = multistart(&problem, seeds, &|rng| alternating_uniform_init(dim, 0.2, rng), &config)?;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        for (run, s) in result.runs.iter().zip(&result.seeds) {
            fs::write(dir.join(format!("trace_seed{s}.csv")), run.trace.to_csv())?;
        }
    }
    println!("seed,value,converged,iterations");
    for (run, s) in result.runs.iter().zip(&result.seeds) {
        println!(
            "{s},{:.12},{},{}",
            run.best_value,
            run.converged,
            run.trace.records.len().saturating_sub(1)
        );
    }
    let best = result.best_run();
    println!();
    for (n, x) in setup.param_names().iter().zip(&best.best_params) {
        println!("{n} = {x:.12}");
    }
    println!("best_value {:.12}", best.best_value);
    let hits = result.runs.iter().filter(|r| r.best_value >= spec.success_threshold).count();
    println!("success {hits}/{} (threshold {})", result.runs.len(), spec.success_threshold);
    if best.best_value < spec.success_threshold {
        eprintln!("best value below success threshold");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(
    file: &Path,
    h: f64,
    tol: f64,
    steps: Option<usize>,
    set: &[(String, f64)],
) -> anyhow::Result<ExitCode> {
    let setup = Setup::load(file)?;
    let objective = setup.build_objective(steps.unwrap_or(setup.simulation.trotter_steps))?;
    let values = values_with(&setup, set)?;
    let names = setup.param_names();
    let analytic = gradient(&objective, &names, &values, setup.simulation.gradient)?;
    let numeric = finite_difference(&objective, &names, &values, h)?;
    println!("param,analytic,numeric,abs_diff");
    let mut worst: f64 = 0.0;
    for ((n, a), f) in names.iter().zip(&analytic.gradient).zip(&numeric) {
        let d = (a - f).abs();
        worst = worst.max(d);
        println!("{n},{a:.12},{f:.12},{d:.3e}");
    }
    eprintln!("value {:.12}", analytic.evaluation.value);
    if worst > tol {
        eprintln!("gradient mismatch {worst:.3e} > {tol:.0e}");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(
    file: &Path,
    shots: Option<u64>,
    seed: Option<u64>,
    steps: Option<usize>,
    which: SampleCircuit,
    out: Option<&Path>,
    set: &[(String, f64)],
) -> anyhow::Result<ExitCode> {
    let setup = Setup::load(file)?;
    let values = values_with(&setup, set)?;
    let steps = steps.unwrap_or(setup.simulation.trotter_steps);
    let circuit = match which {
        SampleCircuit::Setup => setup.circuit(steps)?,
        SampleCircuit::Objective => {
            let objective = setup.build_objective(steps)?;
            let (circuits, _) = objective.circuits();
            (*circuits[0]).clone()
        }
    };
    let state = run_from_zero(&circuit, &values)?;
    let n = state.num_qubits();
    let shots = shots.unwrap_or(setup.simulation.shots);
    let counts = sample(&state, shots, seed.unwrap_or(setup.simulation.seed));
    let mut s = String::from("bitstring,count,state\n");
    for (&idx, &c) in &counts {
        let label = setup.layout.fock_label(&setup.layout.index_to_fock(idx, n));
        s.push_str(&format!("{},{c},{label}\n", Bitstring::from_index(idx, n)));
    }
    emit(out, &s)?;
    let zeros = counts.get(&0).copied().unwrap_or(0);
    eprintln!("all_zero {zeros}/{shots}");
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate { file, backend, steps, sweep, out, out_dir, dump_circuit, set } => cmd_simulate(
            &file,
            backend,
            steps,
            &sweep,
            out.as_deref(),
            &out_dir,
            dump_circuit.as_deref(),
            &set,
        ),
        Command::Optimize { file, seeds, max_iters, method, seed, steps, out_dir } => {
            cmd_optimize(&file, seeds, max_iters, method, seed, steps, out_dir.as_deref())
        }
        Command::Gradcheck { file, h, tol, steps, set } => cmd_gradcheck(&file, h, tol, steps, &set),
        Command::Sample { file, shots, seed, steps, circuit, out, set } => {
            cmd_sample(&file, shots, seed, steps, circuit, out.as_deref(), &set)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
