//! Power control for a fixed antenna selection.
//!
//! Maximizing the sum rate is the same as minimizing
//! `prod_k Lambda_k / (Lambda_k + Gamma_k)` over active users. Both factors
//! are posynomials in `eta`. Each iteration replaces the denominators by
//! their arithmetic-geometric mean monomial bound at the current point,
//! which leaves a geometric program. In `y = ln eta` that program is convex
//! and is solved with a projected Newton method on the box
//! `ln(eta_min) <= y <= 0`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::Coefficients;

/// `coef * prod_i x_i^exponents_i` with `coef > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<f64>,
}

impl Monomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .filter(|(a, _)| **a != 0.0)
            .fold(self.coef, |acc, (a, xi)| acc * xi.powf(*a))
    }

    /// `ln` of the value at `x = exp(y)`.
    pub fn log_eval(&self, y: &[f64]) -> f64 {
        self.coef.ln() + self.exponents.iter().zip(y).map(|(a, yi)| a * yi).sum::<f64>()
    }
}

/// A sum of monomials over `num_vars` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posynomial {
    pub num_vars: usize,
    pub terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: Vec::new(),
        }
    }

    /// Adds `coef * x_var` (or a constant when `var` is `None`); zero
    /// coefficients are dropped.
    pub fn push_linear(&mut self, coef: f64, var: Option<usize>) {
        assert!(
            coef >= 0.0 && coef.is_finite(),
            "posynomial coefficients must be non-negative"
        );
        if coef == 0.0 {
            return;
        }
        let mut exponents = vec![0.0; self.num_vars];
        if let Some(i) = var {
            exponents[i] = 1.0;
        }
        self.terms.push(Monomial { coef, exponents });
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }
}

/// Arithmetic-geometric mean lower bound of `posy` that is tight at `at`.
///
/// With weights `nu_j = u_j(at) / g(at)` the bound is
/// `prod_j (u_j(x) / nu_j)^nu_j`, itself a monomial.
pub fn condense(posy: &Posynomial, at: &[f64]) -> Result<Monomial> {
    assert_eq!(at.len(), posy.num_vars);
    for term in &posy.terms {
        for (i, (&a, &x)) in term.exponents.iter().zip(at).enumerate() {
            if a != 0.0 && x <= 0.0 {
                return Err(Error::ZeroWeightCoordinate { index: i });
            }
        }
    }
    let values: Vec<f64> = posy.terms.iter().map(|t| t.eval(at)).collect();
    let total: f64 = values.iter().sum();
    if posy.terms.is_empty() || total <= 0.0 {
        return Err(Error::InvalidConfig("cannot condense an empty posynomial".into()));
    }
    let mut log_coef = 0.0;
    let mut exponents = vec![0.0; posy.num_vars];
    for (term, value) in posy.terms.iter().zip(&values) {
        let nu = value / total;
        log_coef += nu * (term.coef / nu).ln();
        for (e, a) in exponents.iter_mut().zip(&term.exponents) {
            *e += nu * a;
        }
    }
    Ok(Monomial {
        coef: log_coef.exp(),
        exponents,
    })
}

/// Sum-rate power control as a product of posynomial ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosyRatioProblem {
    pub coefficients: Coefficients,
    /// Users with at least one serving antenna; only they enter the objective.
    pub active: Vec<usize>,
}

impl PosyRatioProblem {
    pub fn new(coefficients: Coefficients) -> Self {
        let active = (0..coefficients.num_users())
            .filter(|&k| coefficients.is_active(k))
            .collect();
        Self { coefficients, active }
    }

    pub fn num_users(&self) -> usize {
        self.coefficients.num_users()
    }

    /// `Lambda_k` as a posynomial.
    pub fn numerator(&self, k: usize) -> Posynomial {
        let c = &self.coefficients;
        let mut p = Posynomial::new(self.num_users());
        for i in 0..self.num_users() {
            let mut coef = c.delta1[[k, i]] + c.delta2[[k, i]];
            if i != k {
                coef += c.delta3[[k, i]];
            }
            p.push_linear(coef, Some(i));
        }
        p.push_linear(c.lambda1[k], None);
        p
    }

    /// `Lambda_k + Gamma_k` as a posynomial with `K + 1` terms.
    pub fn denominator(&self, k: usize) -> Posynomial {
        let c = &self.coefficients;
        let mut p = Posynomial::new(self.num_users());
        for i in 0..self.num_users() {
            p.push_linear(c.delta1[[k, i]] + c.delta2[[k, i]] + c.delta3[[k, i]], Some(i));
        }
        p.push_linear(c.lambda1[k], None);
        p
    }

    /// `prod_k Lambda_k / (Lambda_k + Gamma_k)` over active users.
    pub fn objective(&self, eta: &[f64]) -> f64 {
        let c = &self.coefficients;
        self.active
            .iter()
            .map(|&k| {
                let lambda = c.lambda_den(k, eta);
                lambda / (lambda + c.gamma_num(k, eta))
            })
            .product()
    }

    pub fn sum_rate(&self, eta: &[f64]) -> f64 {
        self.coefficients.sum_rate(eta)
    }

    /// Replaces every denominator by its monomial bound at `eta_prev`.
    pub fn condensed(&self, eta_prev: &[f64]) -> Result<CondensedProblem> {
        let mut ratios = Vec::with_capacity(self.active.len());
        for &k in &self.active {
            let numerator = self.numerator(k);
            let denominator = condense(&self.denominator(k), eta_prev)?;
            let log_terms = numerator
                .terms
                .iter()
                .map(|t| (t.coef.ln(), t.exponents.iter().position(|&a| a != 0.0)))
                .collect();
            ratios.push(CondensedRatio { log_terms, denominator });
        }
        Ok(CondensedProblem {
            num_vars: self.num_users(),
            ratios,
        })
    }
}

/// One ratio `h_k / g~_k` with `h_k` made of linear and constant terms.
#[derive(Clone, Debug)]
pub struct CondensedRatio {
    /// `(ln coef, variable)`; `None` marks the constant term.
    pub log_terms: Vec<(f64, Option<usize>)>,
    pub denominator: Monomial,
}

/// The geometric program left after condensation, written in `y = ln eta`:
/// `f(y) = sum_k [ln sum_j exp(b_j + y_{i_j}) - ln C_k - a_k . y]`.
#[derive(Clone, Debug)]
pub struct CondensedProblem {
    pub num_vars: usize,
    pub ratios: Vec<CondensedRatio>,
}

impl CondensedProblem {
    /// Objective, gradient and Hessian at `y`.
    fn derivatives(&self, y: &[f64], want_hessian: bool) -> (f64, Vec<f64>, Option<DMatrix<f64>>) {
        let n = self.num_vars;
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut hess = want_hessian.then(|| DMatrix::zeros(n, n));
        let mut p = vec![0.0; n];
        let mut exps = Vec::new();
        for ratio in &self.ratios {
            exps.clear();
            exps.extend(ratio.log_terms.iter().map(|&(b, var)| b + var.map_or(0.0, |i| y[i])));
            let peak = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for e in exps.iter_mut() {
                *e = (*e - peak).exp();
                total += *e;
            }
            value += peak + total.ln() - ratio.denominator.log_eval(y);
            p.iter_mut().for_each(|v| *v = 0.0);
            for (w, &(_, var)) in exps.iter().zip(&ratio.log_terms) {
                if let Some(i) = var {
                    p[i] += w / total;
                }
            }
            for i in 0..n {
                grad[i] += p[i] - ratio.denominator.exponents[i];
            }
            if let Some(h) = hess.as_mut() {
                for i in 0..n {
                    if p[i] == 0.0 {
                        continue;
                    }
                    h[(i, i)] += p[i];
                    for j in 0..n {
                        h[(i, j)] -= p[i] * p[j];
                    }
                }
            }
        }
        (value, grad, hess)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.derivatives(y, false).0
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        self.derivatives(y, false).1
    }
}

/// Settings of the inner convex solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpOptions {
    /// Target stationarity residual `max_i |y_i - P(y_i - grad_i)|`.
    pub tolerance: f64,
    /// Residual accepted when the line search can make no more progress.
    pub accept_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            accept_tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

/// Result of one convex solve.
#[derive(Clone, Debug, PartialEq)]
pub struct GpSolution {
    pub eta: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn project(y: &mut [f64], lo: f64) {
    for v in y.iter_mut() {
        *v = v.clamp(lo, 0.0);
    }
}

fn stationarity(y: &[f64], grad: &[f64], lo: f64) -> f64 {
    y.iter()
        .zip(grad)
        .map(|(&yi, &gi)| (yi - (yi - gi).clamp(lo, 0.0)).abs())
        .fold(0.0, f64::max)
}

/// Minimizes the condensed program over `eta_min <= eta <= 1`, starting from
/// `eta_start`.
pub fn solve_condensed_gp(
    problem: &CondensedProblem,
    eta_start: &[f64],
    eta_min: f64,
    options: &GpOptions,
) -> Result<GpSolution> {
    let n = problem.num_vars;
    let lo = eta_min.ln();
    let mut y: Vec<f64> = eta_start.iter().map(|&e| e.max(eta_min).ln()).collect();
    project(&mut y, lo);
    let mut trial = vec![0.0; n];

    for iteration in 0..options.max_iterations {
        let (value, grad, hess) = problem.derivatives(&y, true);
        let hess = hess.expect("requested");
        let residual = stationarity(&y, &grad, lo);
        if residual <= options.tolerance {
            return Ok(finish(y, residual, iteration));
        }

        // Coordinates at or near a bound with the gradient pushing outward
        // take a plain gradient step, which the projection clamps; the rest
        // take a Newton step.
        let eps = residual.min(1e-3);
        let pinned = |i: usize| (y[i] <= lo + eps && grad[i] > 0.0) || (y[i] >= -eps && grad[i] < 0.0);
        let free: Vec<usize> = (0..n).filter(|&i| !pinned(i)).collect();
        let newton = newton_direction(&hess, &grad, &free).map(|mut d| {
            for i in (0..n).filter(|&i| pinned(i)) {
                d[i] = -grad[i];
            }
            d
        });

        let mut stepped = false;
        for direction in [newton, Some(grad.iter().map(|g| -g).collect())].into_iter().flatten() {
            let mut t = 1.0;
            for _ in 0..60 {
                for i in 0..n {
                    trial[i] = y[i] + t * direction[i];
                }
                project(&mut trial, lo);
                let decrease: f64 = grad
                    .iter()
                    .zip(trial.iter().zip(&y))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum();
                let candidate = problem.value(&trial);
                if decrease < 0.0 && candidate <= value + 1e-4 * decrease {
                    stepped = true;
                    break;
                }
                t *= 0.5;
            }
            if stepped {
                break;
            }
        }
        log::trace!("gp iteration {iteration}: objective {value:.6e}, residual {residual:.1e}");
        if !stepped {
            if residual <= options.accept_tolerance {
                return Ok(finish(y, residual, iteration));
            }
            return Err(Error::SolverNonConvergence {
                iterations: iteration,
                residual,
            });
        }
        y.copy_from_slice(&trial);
    }

    let grad = problem.gradient(&y);
    let residual = stationarity(&y, &grad, lo);
    if residual <= options.accept_tolerance {
        return Ok(finish(y, residual, options.max_iterations));
    }
    Err(Error::SolverNonConvergence {
        iterations: options.max_iterations,
        residual,
    })
}

fn finish(y: Vec<f64>, residual: f64, iterations: usize) -> GpSolution {
    GpSolution {
        eta: y.iter().map(|v| v.exp()).collect(),
        residual,
        iterations,
    }
}

/// Newton step on the free coordinates (zero elsewhere), or `None` if the
/// reduced Hessian cannot be factored.
fn newton_direction(hess: &DMatrix<f64>, grad: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let mut direction = vec![0.0; grad.len()];
    if free.is_empty() {
        return Some(direction);
    }
    let f = free.len();
    let scale = free.iter().map(|&i| hess[(i, i)].abs()).fold(1.0, f64::max);
    let reduced = DMatrix::from_fn(f, f, |a, b| {
        hess[(free[a], free[b])] + if a == b { 1e-10 * scale } else { 0.0 }
    });
    let rhs = DVector::from_iterator(f, free.iter().map(|&i| -grad[i]));
    let step = reduced.cholesky()?.solve(&rhs);
    for (a, &i) in free.iter().enumerate() {
        direction[i] = step[a];
    }
    Some(direction)
}

/// Settings of the outer successive-approximation loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaOptions {
    /// Stop once successive objective values differ by at most this much.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Floor on `eta` inside the solver.
    pub eta_min: f64,
    pub gp: GpOptions,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iterations: 100,
            eta_min: 1e-6,
            gp: GpOptions::default(),
        }
    }
}

/// Outcome of the successive-approximation loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaOutcome {
    /// Reported powers; values below `2 * eta_min` read as zero.
    pub eta: Vec<f64>,
    /// Powers as the solver left them, all at least `eta_min`.
    pub eta_raw: Vec<f64>,
    /// Objective at the start point followed by one value per iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ScaOutcome {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("trace starts with the initial objective")
    }
}

/// Condense, solve, repeat until the objective stops moving.
pub fn sca_loop(problem: &PosyRatioProblem, eta0: &[f64], options: &ScaOptions) -> Result<ScaOutcome> {
    assert_eq!(eta0.len(), problem.num_users());
    if eta0.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidConfig("SCA needs a start point in (0, 1]".into()));
    }
    let mut eta = eta0.to_vec();
    let mut trace = vec![problem.objective(&eta)];
    let mut converged = false;
    let mut iterations = 0;
    if problem.active.is_empty() {
        converged = true;
    }
    while !converged && iterations < options.max_iterations {
        let step = problem
            .condensed(&eta)
            .and_then(|condensed| solve_condensed_gp(&condensed, &eta, options.eta_min, &options.gp));
        let solution = match step {
            Ok(s) => s,
            Err(e) => {
                return Err(Error::Sca {
                    source: Box::new(e),
                    trace,
                })
            }
        };
        iterations += 1;
        eta = solution.eta;
        let value = problem.objective(&eta);
        let previous = *trace.last().expect("non-empty");
        trace.push(value);
        converged = (previous - value).abs() <= options.tolerance;
    }
    let floor = 2.0 * options.eta_min;
    Ok(ScaOutcome {
        eta: eta.iter().map(|&e| if e < floor { 0.0 } else { e }).collect(),
        eta_raw: eta,
        trace,
        iterations,
        converged,
    })
}

/// Full-power SCA as used by the optimized schemes.
pub fn optimize_power(coefficients: &Coefficients, options: &ScaOptions) -> Result<ScaOutcome> {
    let problem = PosyRatioProblem::new(coefficients.clone());
    sca_loop(&problem, &vec![1.0; problem.num_users()], options)
}

/// Writes `iteration,objective` rows.
pub fn write_trace_csv<W: Write>(trace: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "objective"])?;
    for (i, v) in trace.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:.12e}")])?;
    }
    w.flush()?;
    Ok(())
}
