//! Maximization of objectives: BFGS with Armijo backtracking, plain
//! gradient ascent, and seeded multistart.

use std::fmt::Write as _;

use log::warn;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::ParamValues;
use crate::error::{Error, Result};
use crate::gradients::{gradient, GradientPolicy};
use crate::objectives::{Evaluation, Objective};

/// Something the optimizers can maximize.
pub trait Differentiable: Sync {
    fn names(&self) -> &[String];
    fn value(&self, x: &[f64]) -> Result<Evaluation>;
    fn value_and_gradient(&self, x: &[f64]) -> Result<(Evaluation, Vec<f64>)>;
}

/// An objective with an ordered parameter list and fixed values for all
/// other parameters.
pub struct Problem<'a> {
    pub objective: &'a Objective,
    pub names: Vec<String>,
    pub fixed: ParamValues,
    pub policy: GradientPolicy,
}

impl Problem<'_> {
    pub fn values_at(&self, x: &[f64]) -> ParamValues {
        let mut v = self.fixed.clone();
        for (n, xi) in self.names.iter().zip(x) {
            v.insert(n.clone(), *xi);
        }
        v
    }
}

impl Differentiable for Problem<'_> {
    fn names(&self) -> &[String] {
        &self.names
    }

    fn value(&self, x: &[f64]) -> Result<Evaluation> {
        self.objective.evaluate(&self.values_at(x))
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(Evaluation, Vec<f64>)> {
        let g = gradient(self.objective, &self.names, &self.values_at(x), self.policy)?;
        Ok((g.evaluation, g.gradient))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    Bfgs,
    GradientAscent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptConfig {
    pub method: Method,
    pub max_iters: usize,
    pub gtol: f64,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            method: Method::Bfgs,
            max_iters: 200,
            gtol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub denominator: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptTrace {
    pub names: Vec<String>,
    pub records: Vec<TraceRecord>,
}

impl OptTrace {
    /// `iteration,value,grad_norm,denominator,<params...>`; the denominator
    /// column is empty for objectives without a ratio.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,value,grad_norm,denominator");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for r in &self.records {
            let den = r.denominator.map(|d| format!("{d:.12}")).unwrap_or_default();
            let _ = write!(s, "{},{:.12},{:.6e},{}", r.iteration, r.value, r.grad_norm, den);
            for p in &r.params {
                let _ = write!(s, ",{p:.12}");
            }
            s.push('\n');
        }
        s
    }

    /// Best-so-far values never decrease along the trace.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].value >= w[0].value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub converged: bool,
    pub trace: OptTrace,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Value at `x`, with a degenerate ratio mapped to NaN so that line
/// searches reject the point.
fn value_or_nan(f: &dyn Differentiable, x: &[f64]) -> Result<f64> {
    match f.value(x) {
        Ok(e) => Ok(e.value),
        Err(Error::DegenerateFidelity(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const CURVATURE_EPS: f64 = 1e-12;

/// Maximizes `f` from `init`. Minimization of `-f` internally.
pub fn optimize(f: &dyn Differentiable, init: &[f64], config: &OptConfig) -> Result<OptResult> {
    let dim = init.len();
    if dim != f.names().len() {
        return Err(Error::Validation(format!(
            "{} initial values for {} parameters",
            dim,
            f.names().len()
        )));
    }
    let mut trace = OptTrace {
        names: f.names().to_vec(),
        records: Vec::new(),
    };
    let mut x = init.to_vec();
    let (mut eval, mut g) = match f.value_and_gradient(&x) {
        Ok((e, grad)) => (e, grad),
        Err(Error::DegenerateFidelity(d)) => {
            warn!("degenerate post-selection probability {d:.3e} at the initial point; objective taken as 0");
            trace.records.push(TraceRecord {
                iteration: 0,
                params: x.clone(),
                value: 0.0,
                grad_norm: 0.0,
                denominator: Some(d),
            });
            return Ok(OptResult {
                best_params: x,
                best_value: 0.0,
                converged: false,
                trace,
            });
        }
        Err(e) => return Err(e),
    };
    // h approximates the inverse Hessian of -f
    let mut h: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut first_update = true;
    let mut converged = false;

    for iteration in 0..=config.max_iters {
        let gn = norm(&g);
        trace.records.push(TraceRecord {
            iteration,
            params: x.clone(),
            value: eval.value,
            grad_norm: gn,
            denominator: eval.denominator,
        });
        if gn < config.gtol {
            converged = true;
            break;
        }
        if iteration == config.max_iters {
            break;
        }
        // descent direction for -f; gradient of -f is -g
        let mut p: Vec<f64> = match config.method {
            Method::Bfgs => (0..dim).map(|i| dot(&h[i], &g)).collect(),
            Method::GradientAscent => g.clone(),
        };
        let mut slope = dot(&g, &p);
        if slope <= 0.0 {
            p = g.clone();
            slope = dot(&g, &p);
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().enumerate().for_each(|(j, v)| *v = if i == j { 1.0 } else { 0.0 });
            }
            first_update = true;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + t * pi).collect();
            let v = value_or_nan(f, &trial)?;
            if v.is_finite() && v >= eval.value + ARMIJO_C1 * t * slope {
                accepted = Some(trial);
                break;
            }
            t *= 0.5;
        }
        let Some(x_new) = accepted else {
            // no further progress at machine precision
            converged = gn < config.gtol.sqrt();
            break;
        };
        let (eval_new, g_new) = f.value_and_gradient(&x_new)?;
        if config.method == Method::Bfgs {
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            // y = grad(-f)_new - grad(-f)_old
            let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > CURVATURE_EPS {
                if first_update {
                    let scale = sy / dot(&y, &y);
                    for (i, row) in h.iter_mut().enumerate() {
                        row.iter_mut().enumerate().for_each(|(j, v)| *v = if i == j { scale } else { 0.0 });
                    }
                    first_update = false;
                }
                bfgs_update(&mut h, &s, &y, sy);
            }
        }
        x = x_new;
        eval = eval_new;
        g = g_new;
    }
    Ok(OptResult {
        best_params: x,
        best_value: eval.value,
        converged,
        trace,
    })
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Values near zero with alternating signs: magnitudes uniform in
/// `[0, half_width]`, first sign random.
pub fn alternating_uniform_init(dim: usize, half_width: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    (0..dim)
        .map(|_| {
            let v = sign * rng.random_range(0.0..=half_width);
            sign = -sign;
            v
        })
        .collect()
}

/// Default initial point for seed `seed`.
pub fn default_init(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    alternating_uniform_init(dim, 0.2, &mut rng)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultistartResult {
    pub best: usize,
    pub runs: Vec<OptResult>,
    pub seeds: Vec<u64>,
}

impl MultistartResult {
    pub fn best_run(&self) -> &OptResult {
        &self.runs[self.best]
    }
}

/// `n_starts` runs with seeds `config.seed + i`; start `i` draws its initial
/// point from `sampler` with an RNG seeded by its own seed. Runs execute in
/// parallel; the result does not depend on scheduling.
pub fn multistart(
    f: &dyn Differentiable,
    n_starts: usize,
    sampler: &(dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync),
    config: &OptConfig,
) -> Result<MultistartResult> {
    if n_starts == 0 {
        return Err(Error::Config("multistart needs at least one start".into()));
    }
    let seeds: Vec<u64> = (0..n_starts as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let runs: Vec<OptResult> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = sampler(&mut rng);
            optimize(f, &init, &OptConfig { seed, ..config.clone() })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.best_value > runs[best].best_value {
            best = i;
        }
    }
    Ok(MultistartResult { best, runs, seeds })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closure-backed objective for tests.
    struct Func<F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync> {
        names: Vec<String>,
        f: F,
    }

    impl<F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync> Differentiable for Func<F> {
        fn names(&self) -> &[String] {
            &self.names
        }
        fn value(&self, x: &[f64]) -> Result<Evaluation> {
            Ok(Evaluation { value: (self.f)(x).0, denominator: None })
        }
        fn value_and_gradient(&self, x: &[f64]) -> Result<(Evaluation, Vec<f64>)> {
            let (v, g) = (self.f)(x);
            Ok((Evaluation { value: v, denominator: None }, g))
        }
    }

    fn bowl() -> Func<impl Fn(&[f64]) -> (f64, Vec<f64>) + Sync> {
        Func {
            names: vec!["t".into()],
            f: |x: &[f64]| (1.0 - (1.0 - x[0].cos()) / 2.0, vec![-x[0].sin() / 2.0]),
        }
    }

    #[test]
    fn single_parameter_bowl() {
        let r = optimize(&bowl(), &[0.1], &OptConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.trace.records.len() < 20);
        assert!((r.best_value - 1.0).abs() < 1e-10);
        assert!(r.best_params[0].abs() < 1e-5);
        assert!(r.trace.is_monotone());
    }

    #[test]
    fn ascent_also_converges() {
        let cfg = OptConfig { method: Method::GradientAscent, ..OptConfig::default() };
        let r = optimize(&bowl(), &[0.5], &cfg).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-9);
        assert!(r.trace.is_monotone());
    }

    #[test]
    fn rosenbrock_like_valley() {
        let f = Func {
            names: vec!["x".into(), "y".into()],
            f: |v: &[f64]| {
                let (x, y) = (v[0], v[1]);
                let val = -((1.0 - x).powi(2) + 10.0 * (y - x * x).powi(2));
                let gx = 2.0 * (1.0 - x) + 40.0 * x * (y - x * x);
                let gy = -20.0 * (y - x * x);
                (val, vec![gx, gy])
            },
        };
        let r = optimize(&f, &[-0.5, 0.7], &OptConfig::default()).unwrap();
        assert!(r.best_value > -1e-10, "{}", r.best_value);
        assert!(r.trace.is_monotone());
    }

    #[test]
    fn trace_csv_layout() {
        let r = optimize(&bowl(), &[0.1], &OptConfig { max_iters: 1, ..OptConfig::default() }).unwrap();
        assert!(r.trace.records.len() <= 2);
        let csv = r.trace.to_csv();
        assert!(csv.starts_with("iteration,value,grad_norm,denominator,t\n0,"));
    }

    #[test]
    fn multistart_is_deterministic_and_best() {
        let sampler = |rng: &mut ChaCha8Rng| alternating_uniform_init(1, 0.2, rng);
        let a = multistart(&bowl(), 4, &sampler, &OptConfig::default()).unwrap();
        let b = multistart(&bowl(), 4, &sampler, &OptConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.runs.iter().all(|r| r.best_value <= a.best_run().best_value));
        let single = multistart(&bowl(), 1, &sampler, &OptConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let direct = optimize(&bowl(), &sampler(&mut rng), &OptConfig::default()).unwrap();
        assert_eq!(single.runs[0], direct);
    }

    #[test]
    fn alternating_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = alternating_uniform_init(6, 0.2, &mut rng);
        for w in v.windows(2) {
            assert!(w[0] * w[1] <= 0.0);
        }
        assert!(v.iter().all(|x| x.abs() <= 0.2));
    }
}
