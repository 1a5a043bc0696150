//! Faedo–Galerkin time stepping.
//!
//! The coefficient system `dα/dt = −(⟨A(t)Σαₖvₖ, vᵢ⟩)ᵢ + (⟨f(t), vᵢ⟩)ᵢ` (the
//! mass matrix is the identity) is integrated with the theta method,
//! `θ ∈ [½, 1]`, each step solved by Newton's method. An energy ledger records
//! the discrete form of
//!
//! ```text
//! ½‖α(t)‖² + ∫₀ᵗ ⟨A α, α⟩ − ∫₀ᵗ ⟨f, α⟩ ≤ ½‖α(0)‖²
//! ```
//!
//! with per-step work `Δt⟨θL_k + (1−θ)L_{k−1} − f_θ, α_θ⟩`, for which the
//! slack grows by exactly `(θ − ½)‖α_k − α_{k−1}‖²` up to the Newton
//! residual.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::function_space::{dot, FunctionValue, GalerkinBasis};
use crate::operators::OperatorFamily;
use crate::output::CsvTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    ImplicitEuler,
    Theta(f64),
}

impl Scheme {
    pub fn theta(&self) -> f64 {
        match *self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::Theta(th) => th,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit_euler",
            Scheme::Theta(_) => "theta_method",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub t_end: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub newton_max_iter: usize,
    /// Newton stops once `‖G(x)‖₂ ≤ newton_tol · (1 + ‖x‖₂)`.
    pub newton_tol: f64,
    /// Blow-up is declared when `‖α‖_H > blow_up_factor · M`.
    pub blow_up_factor: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: 1e-2,
            scheme: Scheme::ImplicitEuler,
            newton_tol: 1e-12,
            newton_max_iter: 30,
            blow_up_factor: 10.0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("T = {} must be positive", self.t_end)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidInput("newton_tol must be positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidInput("newton_max_iter must be positive".into()));
        }
        if !(self.blow_up_factor > 0.0) {
            return Err(Error::InvalidInput("blow_up_factor must be positive".into()));
        }
        let theta = self.scheme.theta();
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::InvalidInput(format!(
                "theta = {theta} outside [1/2, 1]; explicit-leaning schemes break the energy inequality"
            )));
        }
        Ok(())
    }

    /// Uniform grid `0, dt, …, T`; the last step is shortened if `T/dt` is
    /// not an integer.
    pub fn time_grid(&self) -> Vec<f64> {
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        let mut grid: Vec<f64> = (0..steps).map(|k| k as f64 * self.dt).collect();
        grid.push(self.t_end);
        grid
    }
}

/// Discrete solution `α(t_k)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    newton_iterations: Vec<usize>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::GridMismatch(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if let Some(first) = states.first() {
            if let Some(bad) = states.iter().find(|s| s.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::GridMismatch("time grid must be strictly increasing".into()));
        }
        let iters = vec![0; times.len()];
        Ok(Self {
            times,
            states,
            newton_iterations: iters,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn newton_iterations(&self) -> &[usize] {
        &self.newton_iterations
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.times
            .last()
            .map(|&t| (t, self.states.last().unwrap().as_slice()))
    }

    fn push(&mut self, t: f64, state: Vec<f64>, iterations: usize) {
        self.times.push(t);
        self.states.push(state);
        self.newton_iterations.push(iterations);
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .map(|s| s.iter().map(|v| v * factor).collect())
                .collect(),
            newton_iterations: self.newton_iterations.clone(),
        }
    }

    /// Linear interpolation in time, coefficients zero-padded to `n`.
    pub fn state_at(&self, t: f64, n: usize) -> Option<Vec<f64>> {
        let idx = self.times.partition_point(|&s| s < t);
        let pad = |s: &[f64]| {
            let mut v = s.to_vec();
            v.resize(n, 0.0);
            v
        };
        if idx < self.times.len() && (self.times[idx] - t).abs() <= 1e-12 * (1.0 + t.abs()) {
            return Some(pad(&self.states[idx]));
        }
        if idx > 0 && idx > 0 && (self.times[idx - 1] - t).abs() <= 1e-12 * (1.0 + t.abs()) {
            return Some(pad(&self.states[idx - 1]));
        }
        if idx == 0 || idx >= self.times.len() {
            return None;
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let s = (t - t0) / (t1 - t0);
        let a = pad(&self.states[idx - 1]);
        let b = pad(&self.states[idx]);
        Some(a.iter().zip(&b).map(|(x, y)| (1.0 - s) * x + s * y).collect())
    }
}

/// Running record of the discrete energy inequality.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub initial_half_energy: f64,
    pub times: Vec<f64>,
    /// `½‖α(t_k)‖²`
    pub half_energy: Vec<f64>,
    /// cumulative operator work
    pub cumulative_work: Vec<f64>,
    /// cumulative forcing work
    pub cumulative_forcing: Vec<f64>,
    /// `½‖α₀‖² − ½‖α_k‖² − work + forcing`
    pub slack: Vec<f64>,
    /// cumulative work split by operator part
    pub part_work: Vec<(String, Vec<f64>)>,
}

impl EnergyLedger {
    fn start(alpha0: &[f64], parts: &[String]) -> Self {
        let e0 = 0.5 * dot(alpha0, alpha0);
        Self {
            initial_half_energy: e0,
            times: vec![0.0],
            half_energy: vec![e0],
            cumulative_work: vec![0.0],
            cumulative_forcing: vec![0.0],
            slack: vec![0.0],
            part_work: parts.iter().map(|p| (p.clone(), vec![0.0])).collect(),
        }
    }

    fn record(&mut self, t: f64, alpha: &[f64], work: f64, forcing: f64, parts: &[f64]) {
        let e = 0.5 * dot(alpha, alpha);
        let w = self.cumulative_work.last().unwrap() + work;
        let f = self.cumulative_forcing.last().unwrap() + forcing;
        self.times.push(t);
        self.half_energy.push(e);
        self.cumulative_work.push(w);
        self.cumulative_forcing.push(f);
        self.slack.push(self.initial_half_energy - e - w + f);
        for ((_, series), &pw) in self.part_work.iter_mut().zip(parts) {
            let last = *series.last().unwrap();
            series.push(last + pw);
        }
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut header = vec![
            "t".to_string(),
            "half_energy".into(),
            "cumulative_work".into(),
            "cumulative_forcing".into(),
            "slack".into(),
        ];
        header.extend(self.part_work.iter().map(|(name, _)| format!("work[{name}]")));
        let mut table = CsvTable::new(header);
        for k in 0..self.times.len() {
            let mut row = vec![
                self.times[k],
                self.half_energy[k],
                self.cumulative_work[k],
                self.cumulative_forcing[k],
                self.slack[k],
            ];
            row.extend(self.part_work.iter().map(|(_, s)| s[k]));
            table.push_numbers(&row);
        }
        table
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub min_slack: f64,
    pub min_slack_time: f64,
    pub times: Vec<f64>,
    pub slack: Vec<f64>,
}

pub fn energy_report(ledger: &EnergyLedger) -> EnergyReport {
    let (idx, min) = ledger
        .slack
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    EnergyReport {
        min_slack: if ledger.slack.is_empty() { 0.0 } else { min },
        min_slack_time: ledger.times.get(idx).copied().unwrap_or(0.0),
        times: ledger.times.clone(),
        slack: ledger.slack.clone(),
    }
}

/// Operator, forcing and basis of one Galerkin problem.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub basis: &'a GalerkinBasis,
    pub operator: &'a dyn OperatorFamily,
    pub forcing: &'a Forcing,
    /// A-priori bound `M`; enables blow-up detection.
    pub apriori_m: Option<f64>,
}

/// `−(⟨A(t)α, vᵢ⟩)ᵢ + (⟨f(t), vᵢ⟩)ᵢ`.
pub fn ode_rhs(
    t: f64,
    alpha: &[f64],
    operator: &dyn OperatorFamily,
    forcing: &Forcing,
    basis: &GalerkinBasis,
) -> Result<Vec<f64>> {
    let load = operator.load(t, alpha, basis).map_err(|e| with_context(e, t, alpha))?;
    let f = forcing.load(t, basis)?;
    Ok(load.iter().zip(&f).map(|(l, f)| f - l).collect())
}

fn with_context(e: Error, t: f64, alpha: &[f64]) -> Error {
    match e {
        Error::Evaluation { .. } | Error::DimensionMismatch { .. } | Error::IncompatibleBasis(_) => e,
        other => Error::StepFailure {
            t,
            norm: dot(alpha, alpha).sqrt(),
            msg: other.to_string(),
        },
    }
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Result of one (possibly subdivided) step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// `(t, α, newton iterations)` for each accepted sub-step.
    pub substeps: Vec<(f64, Vec<f64>, usize)>,
}

struct StepData {
    alpha: Vec<f64>,
    iterations: usize,
}

fn state_jacobian(problem: &Problem, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    if let Some(jac) = problem.operator.jacobian(t, x, problem.basis) {
        return Ok(DMatrix::from_row_slice(n, n, &jac?));
    }
    // forward differences with step 1e-7 (1 + |x_j|)
    let base = problem.operator.load(t, x, problem.basis)?;
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-7 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let lp = problem.operator.load(t, &xp, problem.basis)?;
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (lp[i] - base[i]) / h;
        }
    }
    Ok(jac)
}

/// Solve `x = α + Δt[θ rhs(t+Δt, x) + (1−θ) rhs(t, α)]`.
fn theta_solve(
    problem: &Problem,
    config: &SolveConfig,
    t: f64,
    alpha: &[f64],
    dt: f64,
) -> Result<StepData> {
    let theta = config.scheme.theta();
    let n = alpha.len();
    let t_new = t + dt;
    let explicit: Vec<f64> = if theta < 1.0 {
        let r = ode_rhs(t, alpha, problem.operator, problem.forcing, problem.basis)?;
        alpha
            .iter()
            .zip(&r)
            .map(|(a, r)| a + dt * (1.0 - theta) * r)
            .collect()
    } else {
        alpha.to_vec()
    };
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let r = ode_rhs(t_new, x, problem.operator, problem.forcing, problem.basis)?;
        Ok(x.iter()
            .zip(&explicit)
            .zip(&r)
            .map(|((x, e), r)| x - e - dt * theta * r)
            .collect())
    };

    let mut x = alpha.to_vec();
    let mut g = residual(&x)?;
    let mut g_norm = norm2(&g);
    let tol = |x: &[f64]| config.newton_tol * (1.0 + norm2(x));
    let mut iterations = 0;
    while g_norm > tol(&x) && iterations < config.newton_max_iter {
        iterations += 1;
        let mut jac = state_jacobian(problem, t_new, &x)?;
        jac *= dt * theta;
        for i in 0..n {
            jac[(i, i)] += 1.0;
        }
        let rhs = -DVector::from_column_slice(&g);
        let Some(delta) = jac.lu().solve(&rhs) else {
            break;
        };
        // backtracking on ‖G‖
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(x, d)| x + lambda * d).collect();
            let trial_g = residual(&trial);
            if let Ok(tg) = trial_g {
                let tn = norm2(&tg);
                if tn.is_finite() && (tn < (1.0 - 1e-4 * lambda) * g_norm || lambda < 1e-3) {
                    x = trial;
                    g = tg;
                    g_norm = tn;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-3 {
                break;
            }
        }
    }
    if g_norm <= tol(&x) {
        return Ok(StepData { alpha: x, iterations });
    }
    // damped fixed-point fallback
    let mut y = x;
    for k in 0..config.newton_max_iter * 10 {
        let gy = residual(&y)?;
        let gn = norm2(&gy);
        if gn <= tol(&y) {
            return Ok(StepData {
                alpha: y,
                iterations: iterations + k,
            });
        }
        if !gn.is_finite() {
            break;
        }
        y.iter_mut().zip(&gy).for_each(|(y, g)| *y -= 0.5 * g);
    }
    Err(Error::StepFailure {
        t: t_new,
        norm: norm2(alpha),
        msg: format!("Newton did not converge (residual {g_norm:e}) in {iterations} iterations"),
    })
}

/// Advance from `(t, α)` by `dt`, halving the step up to twice on Newton
/// failure.
pub fn step(problem: &Problem, config: &SolveConfig, t: f64, alpha: &[f64], dt: f64) -> Result<StepOutcome> {
    problem.basis.check_len(alpha)?;
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure {
            t,
            norm: f64::NAN,
            msg: "non-finite state".into(),
        });
    }
    let outcome = subdivided_step(problem, config, t, alpha, dt, 2)?;
    if let Some(m) = problem.apriori_m {
        let threshold = config.blow_up_factor * m;
        for (ts, a, _) in &outcome.substeps {
            let norm = norm2(a);
            if norm > threshold {
                return Err(Error::BlowUp {
                    t: *ts,
                    norm,
                    threshold,
                });
            }
        }
    }
    Ok(outcome)
}

fn subdivided_step(
    problem: &Problem,
    config: &SolveConfig,
    t: f64,
    alpha: &[f64],
    dt: f64,
    halvings_left: usize,
) -> Result<StepOutcome> {
    match theta_solve(problem, config, t, alpha, dt) {
        Ok(data) => Ok(StepOutcome {
            substeps: vec![(t + dt, data.alpha, data.iterations)],
        }),
        Err(Error::StepFailure { .. }) if halvings_left > 0 => {
            let first = subdivided_step(problem, config, t, alpha, 0.5 * dt, halvings_left - 1)?;
            let (tm, am, _) = first.substeps.last().unwrap().clone();
            let second = subdivided_step(problem, config, tm, &am, t + dt - tm, halvings_left - 1)?;
            let mut substeps = first.substeps;
            substeps.extend(second.substeps);
            Ok(StepOutcome { substeps })
        }
        Err(e) => Err(e),
    }
}

/// Trajectory, ledger and, when the run stopped early, the reason.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub ledger: EnergyLedger,
    pub failure: Option<Error>,
}

impl SolveOutcome {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Integrate from the `H`-projection of `y0` over `[0, T]`.
pub fn solve(problem: &Problem, y0: &FunctionValue, config: &SolveConfig) -> Result<SolveOutcome> {
    config.validate()?;
    problem.operator.check_basis(problem.basis)?;
    let alpha0 = problem.basis.coefficients(y0)?;
    let theta = config.scheme.theta();

    let part_names: Vec<String> = problem
        .operator
        .part_loads(0.0, &alpha0, problem.basis)?
        .into_iter()
        .map(|(name, _)| name)
        .collect();
    let mut ledger = EnergyLedger::start(&alpha0, &part_names);
    let mut traj = Trajectory::default();
    traj.push(0.0, alpha0.clone(), 0);

    let mut prev_parts = problem.operator.part_loads(0.0, &alpha0, problem.basis)?;
    let mut prev_f = problem.forcing.load(0.0, problem.basis)?;
    let grid = config.time_grid();
    let mut failure = None;

    'outer: for w in grid.windows(2) {
        let (t, alpha) = {
            let (t, a) = traj.last().unwrap();
            (t, a.to_vec())
        };
        let outcome = match step(problem, config, t, &alpha, w[1] - t) {
            Ok(o) => o,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let mut a_prev = alpha;
        let mut t_prev = t;
        for (t_new, a_new, iters) in outcome.substeps {
            let dt = t_new - t_prev;
            let parts = match problem.operator.part_loads(t_new, &a_new, problem.basis) {
                Ok(p) => p,
                Err(e) => {
                    failure = Some(e);
                    break 'outer;
                }
            };
            let f_new = problem.forcing.load(t_new, problem.basis)?;
            let a_theta: Vec<f64> = a_new
                .iter()
                .zip(&a_prev)
                .map(|(x, y)| theta * x + (1.0 - theta) * y)
                .collect();
            let part_work: Vec<f64> = parts
                .iter()
                .zip(&prev_parts)
                .map(|((_, l_new), (_, l_old))| {
                    dt * l_new
                        .iter()
                        .zip(l_old)
                        .zip(&a_theta)
                        .map(|((a, b), x)| (theta * a + (1.0 - theta) * b) * x)
                        .sum::<f64>()
                })
                .collect();
            let forcing_work = dt
                * f_new
                    .iter()
                    .zip(&prev_f)
                    .zip(&a_theta)
                    .map(|((a, b), x)| (theta * a + (1.0 - theta) * b) * x)
                    .sum::<f64>();
            ledger.record(t_new, &a_new, part_work.iter().sum(), forcing_work, &part_work);
            traj.push(t_new, a_new.clone(), iters);
            prev_parts = parts;
            prev_f = f_new;
            a_prev = a_new;
            t_prev = t_new;
        }
    }

    Ok(SolveOutcome {
        trajectory: traj,
        ledger,
        failure,
    })
}

/// Defect of the discrete integration-by-parts identity
/// `Σ⟨δx_k, y_k⟩Δt + Σ⟨δy_k, x_{k−1}⟩Δt = (x_K, y_K) − (x_0, y_0)`
/// with backward differences `δx_k = (x_k − x_{k−1})/Δt_k`.
pub fn discrete_ibp_check(x: &Trajectory, y: &Trajectory, basis: &GalerkinBasis) -> Result<f64> {
    if x.times() != y.times() {
        return Err(Error::GridMismatch("trajectories live on different time grids".into()));
    }
    if x.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    for s in x.states().iter().chain(y.states()) {
        basis.check_len(s)?;
    }
    let (xs, ys, ts) = (x.states(), y.states(), x.times());
    let mut sum = 0.0;
    for k in 1..ts.len() {
        let dt = ts[k] - ts[k - 1];
        let dx: Vec<f64> = xs[k].iter().zip(&xs[k - 1]).map(|(a, b)| (a - b) / dt).collect();
        let dy: Vec<f64> = ys[k].iter().zip(&ys[k - 1]).map(|(a, b)| (a - b) / dt).collect();
        sum += basis.h_inner(&dx, &ys[k])? * dt + basis.h_inner(&dy, &xs[k - 1])? * dt;
    }
    let last = ts.len() - 1;
    let boundary = basis.h_inner(&xs[last], &ys[last])? - basis.h_inner(&xs[0], &ys[0])?;
    Ok((sum - boundary).abs())
}

/// Trajectory CSV: `t, c_1..c_n, H_norm, V_norm_p, energy_slack`.
pub fn trajectory_csv(
    traj: &Trajectory,
    ledger: &EnergyLedger,
    basis: &GalerkinBasis,
    p: f64,
) -> Result<CsvTable> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.dim()).map(|i| format!("c_{i}")));
    header.extend(["H_norm".to_string(), "V_norm_p".into(), "energy_slack".into()]);
    let mut table = CsvTable::new(header);
    for (k, (t, s)) in traj.times().iter().zip(traj.states()).enumerate() {
        let mut row = vec![*t];
        row.extend_from_slice(s);
        row.push(basis.h_norm(s)?);
        row.push(basis.v_norm(s, p)?);
        row.push(ledger.slack.get(k).copied().unwrap_or(f64::NAN));
        table.push_numbers(&row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Domain;
    use crate::operators::PLaplace;
    use std::f64::consts::PI;

    fn sine(n: usize) -> GalerkinBasis {
        GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 16, 8).unwrap(), n).unwrap()
    }

    #[test]
    fn config_rejects_explicit_theta() {
        let cfg = SolveConfig {
            scheme: Scheme::Theta(0.0),
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SolveConfig {
            scheme: Scheme::Theta(0.5),
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_ok());
        assert!(SolveConfig { dt: 0.0, ..SolveConfig::default() }.validate().is_err());
    }

    #[test]
    fn time_grid_ends_at_t() {
        let cfg = SolveConfig { t_end: 0.1, dt: 1e-2, ..SolveConfig::default() };
        let g = cfg.time_grid();
        assert_eq!(g.len(), 11);
        assert_eq!(*g.last().unwrap(), 0.1);
        let cfg = SolveConfig { t_end: 0.25, dt: 0.1, ..SolveConfig::default() };
        assert_eq!(cfg.time_grid(), vec![0.0, 0.1, 0.2, 0.25]);
    }

    #[test]
    fn rhs_diagonal_for_heat() {
        let b = sine(4);
        let op = PLaplace::new(2.0).unwrap();
        let alpha = [1.0, -0.5, 0.25, 2.0];
        let rhs = ode_rhs(0.0, &alpha, &op, &Forcing::Zero, &b).unwrap();
        for i in 0..4 {
            let expected = -((i + 1) as f64 * PI).powi(2) * alpha[i];
            assert!((rhs[i] - expected).abs() < 1e-9 * expected.abs());
        }
        assert_eq!(ode_rhs(0.0, &[0.0; 4], &op, &Forcing::Zero, &b).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn implicit_euler_heat_step_closed_form() {
        let b = sine(3);
        let op = PLaplace::new(2.0).unwrap();
        let problem = Problem { basis: &b, operator: &op, forcing: &Forcing::Zero, apriori_m: None };
        let cfg = SolveConfig::default();
        let lambda1 = op.load(0.0, &[1.0, 0.0, 0.0], &b).unwrap()[0];
        let out = step(&problem, &cfg, 0.0, &[0.8, 0.0, 0.0], 0.01).unwrap();
        let (_, a, _) = &out.substeps[0];
        assert!((a[0] - 0.8 / (1.0 + 0.01 * lambda1)).abs() < 1e-12);
        let zero = step(&problem, &cfg, 0.0, &[0.0; 3], 0.01).unwrap();
        assert_eq!(zero.substeps[0].1, vec![0.0; 3]);
    }

    #[test]
    fn blow_up_detected() {
        let b = sine(2);
        let op = PLaplace::new(2.0).unwrap();
        let f = Forcing::Constant(1e6);
        let problem = Problem { basis: &b, operator: &op, forcing: &f, apriori_m: Some(1.0) };
        let err = step(&problem, &SolveConfig::default(), 0.0, &[0.0, 0.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn ibp_defect_zero_for_zero_partner() {
        let b = sine(2);
        let x = Trajectory::new(vec![0.0, 0.5, 1.0], vec![vec![1.0, 2.0], vec![0.5, 0.1], vec![3.0, -1.0]]).unwrap();
        let y = Trajectory::new(vec![0.0, 0.5, 1.0], vec![vec![0.0; 2]; 3]).unwrap();
        assert_eq!(discrete_ibp_check(&x, &y, &b).unwrap(), 0.0);
        assert!(discrete_ibp_check(&x, &x, &b).unwrap() < 1e-14);
        let z = Trajectory::new(vec![0.0, 0.4, 1.0], vec![vec![0.0; 2]; 3]).unwrap();
        assert!(matches!(discrete_ibp_check(&x, &z, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn interpolation_in_time() {
        let tr = Trajectory::new(vec![0.0, 1.0], vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(tr.state_at(0.25, 2).unwrap(), vec![0.5, 0.0]);
        assert_eq!(tr.state_at(1.0, 1).unwrap(), vec![2.0]);
        assert!(tr.state_at(1.5, 1).is_none());
    }
}
