//! Numerical integration of symbolic vector fields and the diagnostics
//! that check a computed trajectory against the structure it came from.
//!
//! Fields are compiled to stack programs once per run, so the per-step cost
//! is a few flat array walks. The fixed-step integrator is classical RK4;
//! the adaptive one is Runge-Kutta-Fehlberg 4(5). Residual tables compare
//! finite-difference rates along the trajectory with the symbolic
//! right-hand sides, using an interior five-point stencil whose `O(h^4)`
//! truncation error stays well below the tolerances the tables are held to.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::exterior::VectorFieldExpr;
use crate::symlang::eval::{Bindings, ExternalTable, Program};
use crate::symlang::Expr;

/// Sampled solution curve in a chart.
#[derive(Clone, Debug)]
pub struct Trajectory {
    chart: Arc<Chart>,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    uniform_step: Option<f64>,
}

impl Trajectory {
    pub fn new(chart: &Arc<Chart>, times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Trajectory> {
        if times.len() != states.len() {
            return Err(Error::InvalidStructure(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if states.iter().any(|s| s.len() != chart.dim()) {
            return Err(Error::ChartMismatch(format!(
                "trajectory states must have dimension {}",
                chart.dim()
            )));
        }
        let uniform_step = detect_uniform_step(&times);
        Ok(Trajectory {
            chart: chart.clone(),
            times,
            states,
            uniform_step,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    /// Step size when the grid is uniform to relative precision `1e-9`.
    pub fn uniform_step(&self) -> Option<f64> {
        self.uniform_step
    }

    /// All samples of one coordinate.
    pub fn column(&self, coord: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[coord]).collect()
    }

    /// Bindings for sample `i`: the chart coordinates over `env`.
    pub fn bindings_at(&self, i: usize, env: &Bindings) -> Bindings {
        let mut b = env.clone();
        for (j, v) in self.states[i].iter().enumerate() {
            b.set(self.chart.name(j), *v);
        }
        b
    }
}

fn detect_uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let h = times[1] - times[0];
    if h <= 0.0 {
        return None;
    }
    let scale = h.abs().max(1e-300);
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * scale {
            return None;
        }
    }
    Some(h)
}

/// Integration method selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4,
    /// Runge-Kutta-Fehlberg 4(5) with step-size control.
    Rk45,
}

/// Integration window, stepping, and tolerances.
#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4; initial step for RK45.
    pub step: f64,
    pub t_span: (f64, f64),
    /// Absolute component tolerance for RK45.
    pub abs_tol: f64,
    /// Relative component tolerance for RK45.
    pub rel_tol: f64,
    /// Abort guard on the total number of steps attempted.
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn rk4(step: f64, t_span: (f64, f64)) -> IntegratorConfig {
        IntegratorConfig {
            method: Method::Rk4,
            step,
            t_span,
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_steps: 50_000_000,
        }
    }

    pub fn rk45(t_span: (f64, f64)) -> IntegratorConfig {
        IntegratorConfig {
            method: Method::Rk45,
            step: 1e-3,
            t_span,
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_steps: 50_000_000,
        }
    }
}

/// Vector field compiled against a chart's slot layout.
pub struct CompiledField {
    chart: Arc<Chart>,
    progs: Vec<Program>,
    table: ExternalTable,
    stack: usize,
}

impl CompiledField {
    /// Compile each component; parameter values and externals come from
    /// `env` and are baked in.
    pub fn compile(field: &VectorFieldExpr, env: &Bindings) -> Result<CompiledField> {
        let chart = field.chart().clone();
        let slots: BTreeMap<String, usize> = chart
            .names()
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n, i))
            .collect();
        let mut table = ExternalTable::new();
        let progs: Vec<Program> = field
            .components()
            .iter()
            .map(|c| Program::compile(c, &slots, env, &mut table))
            .collect::<Result<_>>()?;
        let stack = progs.iter().map(Program::max_stack).max().unwrap_or(0);
        Ok(CompiledField {
            chart,
            progs,
            table,
            stack,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    fn eval_into(&self, state: &[f64], out: &mut [f64], stack: &mut Vec<f64>) -> Result<()> {
        for (i, p) in self.progs.iter().enumerate() {
            out[i] = p.run(state, &self.table, stack)?;
        }
        Ok(())
    }
}

/// Dense initial state in chart order from named values; every coordinate
/// except time must be supplied, time defaults to the span start.
pub fn state_from_map(chart: &Chart, values: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    for name in values.keys() {
        if !chart.contains(name) {
            return Err(Error::Config(format!(
                "initial value for `{name}` does not match a chart coordinate"
            )));
        }
    }
    let mut out = vec![0.0; chart.dim()];
    for i in 0..chart.dim() {
        let name = chart.name(i);
        match values.get(name) {
            Some(v) => out[i] = *v,
            None if i == chart.time_index() => {}
            None => {
                return Err(Error::Config(format!(
                    "missing initial value for coordinate `{name}`"
                )))
            }
        }
    }
    Ok(out)
}

/// Integrate `field` from `initial` (dense, chart order) over the window.
pub fn integrate(
    field: &VectorFieldExpr,
    initial: &[f64],
    cfg: &IntegratorConfig,
    env: &Bindings,
) -> Result<Trajectory> {
    let compiled = CompiledField::compile(field, env)?;
    integrate_compiled(&compiled, initial, cfg)
}

/// Integrate an already compiled field.
pub fn integrate_compiled(
    compiled: &CompiledField,
    initial: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let outcome = integrate_compiled_keeping_partial(compiled, initial, cfg)?;
    match outcome.abort {
        None => Ok(outcome.trajectory),
        Some(e) => Err(e),
    }
}

/// An integration run together with the abort that cut it short, if any.
/// The trajectory holds every sample computed before the stop.
pub struct IntegrationOutcome {
    pub trajectory: Trajectory,
    pub abort: Option<Error>,
}

/// Integrate like [`integrate`], but keep the prefix of the trajectory when
/// the run aborts mid-flight. Errors are returned directly only when no
/// sample was produced at all (bad configuration or dimensions).
pub fn integrate_keeping_partial(
    field: &VectorFieldExpr,
    initial: &[f64],
    cfg: &IntegratorConfig,
    env: &Bindings,
) -> Result<IntegrationOutcome> {
    let compiled = CompiledField::compile(field, env)?;
    integrate_compiled_keeping_partial(&compiled, initial, cfg)
}

/// [`integrate_keeping_partial`] over an already compiled field.
pub fn integrate_compiled_keeping_partial(
    compiled: &CompiledField,
    initial: &[f64],
    cfg: &IntegratorConfig,
) -> Result<IntegrationOutcome> {
    let chart = compiled.chart();
    if initial.len() != chart.dim() {
        return Err(Error::ChartMismatch(format!(
            "initial state must have dimension {}",
            chart.dim()
        )));
    }
    let (t0, t1) = cfg.t_span;
    if !(t1 > t0) || !cfg.step.is_finite() || cfg.step <= 0.0 {
        return Err(Error::Config(
            "integration needs t_span.1 > t_span.0 and a positive step".to_string(),
        ));
    }
    let mut y0 = initial.to_vec();
    y0[chart.time_index()] = t0;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let run = match cfg.method {
        Method::Rk4 => rk4(compiled, y0, cfg, &mut times, &mut states),
        Method::Rk45 => rk45(compiled, y0, cfg, &mut times, &mut states),
    };
    match run {
        Ok(()) => Ok(IntegrationOutcome {
            trajectory: Trajectory::new(compiled.chart(), times, states)?,
            abort: None,
        }),
        Err(e) if !times.is_empty() => Ok(IntegrationOutcome {
            trajectory: Trajectory::new(compiled.chart(), times, states)?,
            abort: Some(e),
        }),
        Err(e) => Err(e),
    }
}

fn abort(t: f64, e: Error) -> Error {
    match e {
        Error::IntegrationAbort { .. } | Error::StepUnderflow { .. } => e,
        other => Error::IntegrationAbort {
            t,
            reason: other.to_string(),
        },
    }
}

fn rk4(
    f: &CompiledField,
    y0: Vec<f64>,
    cfg: &IntegratorConfig,
    times: &mut Vec<f64>,
    states: &mut Vec<Vec<f64>>,
) -> Result<()> {
    let (t0, t1) = cfg.t_span;
    let h = cfg.step;
    let steps = ((t1 - t0) / h).round() as usize;
    let steps = steps.max(1);
    if ((t0 + steps as f64 * h) - t1).abs() > 1e-9 * h {
        return Err(Error::Config(format!(
            "step {h} does not divide the window [{t0}, {t1}] evenly"
        )));
    }
    if steps > cfg.max_steps {
        return Err(Error::Config(format!(
            "{steps} steps exceed the budget of {}",
            cfg.max_steps
        )));
    }
    let dim = y0.len();
    let t_idx = f.chart().time_index();
    let mut stack = Vec::with_capacity(f.stack);
    let mut y = y0;
    times.reserve(steps + 1);
    states.reserve(steps + 1);
    times.push(t0);
    states.push(y.clone());

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let run = |state: &[f64], out: &mut [f64], stack: &mut Vec<f64>| {
            f.eval_into(state, out, stack)
        };
        run(&y, &mut k1, &mut stack).map_err(|e| abort(t, e))?;
        axpy(&mut tmp, &y, &k1, 0.5 * h);
        run(&tmp, &mut k2, &mut stack).map_err(|e| abort(t, e))?;
        axpy(&mut tmp, &y, &k2, 0.5 * h);
        run(&tmp, &mut k3, &mut stack).map_err(|e| abort(t, e))?;
        axpy(&mut tmp, &y, &k3, h);
        run(&tmp, &mut k4, &mut stack).map_err(|e| abort(t, e))?;
        for j in 0..dim {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t_next = t0 + (i + 1) as f64 * h;
        // The time component must advance exactly with the step; anything
        // else means the field is not of the expected graph form. Snap to
        // the grid afterwards so roundoff cannot accumulate over long runs.
        if (y[t_idx] - t_next).abs() > 1e-9 * t_next.abs().max(1.0) {
            return Err(Error::IntegrationAbort {
                t,
                reason: format!(
                    "time coordinate advanced by {} instead of the step {h}",
                    y[t_idx] - t - (t_next - t - h)
                ),
            });
        }
        y[t_idx] = t_next;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationAbort {
                t: t_next,
                reason: "state became non-finite".to_string(),
            });
        }
        times.push(t_next);
        states.push(y.clone());
    }
    Ok(())
}

fn axpy(out: &mut [f64], y: &[f64], k: &[f64], c: f64) {
    for i in 0..out.len() {
        out[i] = y[i] + c * k[i];
    }
}

// Runge-Kutta-Fehlberg 4(5) tableau.
const RKF_C: [f64; 6] = [0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5];
const RKF_A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const RKF_B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];
const RKF_B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -1.0 / 5.0,
    0.0,
];

fn rk45(
    f: &CompiledField,
    y0: Vec<f64>,
    cfg: &IntegratorConfig,
    times: &mut Vec<f64>,
    states: &mut Vec<Vec<f64>>,
) -> Result<()> {
    let (t0, t1) = cfg.t_span;
    let dim = y0.len();
    let t_idx = f.chart().time_index();
    let mut stack = Vec::with_capacity(f.stack);
    let mut t = t0;
    let mut h = cfg.step.min(t1 - t0);
    let mut y = y0;
    times.push(t0);
    states.push(y.clone());
    let mut k = vec![vec![0.0; dim]; 6];
    let mut tmp = vec![0.0; dim];
    let mut attempts = 0usize;

    while t < t1 {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(Error::IntegrationAbort {
                t,
                reason: format!("step budget of {} exhausted", cfg.max_steps),
            });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        if t + h > t1 {
            h = t1 - t;
        }
        for stage in 0..6 {
            for j in 0..dim {
                let mut acc = y[j];
                for (m, km) in k.iter().enumerate().take(stage) {
                    acc += h * RKF_A[stage][m] * km[j];
                }
                tmp[j] = acc;
            }
            tmp[t_idx] = t + RKF_C[stage] * h;
            let (head, tail) = k.split_at_mut(stage);
            let _ = head;
            f.eval_into(&tmp, &mut tail[0], &mut stack)
                .map_err(|e| abort(t, e))?;
        }
        let mut err_norm = 0.0f64;
        let mut y5 = vec![0.0; dim];
        for j in 0..dim {
            let mut v4 = y[j];
            let mut v5 = y[j];
            for m in 0..6 {
                v4 += h * RKF_B4[m] * k[m][j];
                v5 += h * RKF_B5[m] * k[m][j];
            }
            y5[j] = v5;
            let scale = cfg.abs_tol + cfg.rel_tol * y[j].abs().max(v5.abs());
            err_norm = err_norm.max((v5 - v4).abs() / scale);
        }
        if err_norm <= 1.0 {
            t += h;
            y = y5;
            y[t_idx] = t;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::IntegrationAbort {
                    t,
                    reason: "state became non-finite".to_string(),
                });
            }
            times.push(t);
            states.push(y.clone());
        }
        let factor = if err_norm > 0.0 {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Ok(())
}

/// One row family of a residual table: the sampled `value` should evolve at
/// the sampled `rate`, i.e. `d/dt value - rate` should vanish on solutions.
#[derive(Clone, Debug)]
pub struct ResidualSpec {
    pub label: String,
    pub value: Expr,
    pub rate: Expr,
}

/// Residuals tabulated at the interior samples of a trajectory.
#[derive(Clone, Debug)]
pub struct ResidualTable {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// `rows[i][j]` is the residual of `labels[j]` at `times[i]`.
    pub rows: Vec<Vec<f64>>,
}

impl ResidualTable {
    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_for(&self, label: &str) -> Option<f64> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(
            self.rows
                .iter()
                .fold(0.0f64, |a, row| a.max(row[j].abs())),
        )
    }
}

/// Fourth-order centered first derivative; valid for `2 <= i <= len - 3`.
pub(crate) fn centered_derivative(y: &[f64], i: usize, h: f64) -> f64 {
    (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h)
}

/// Evaluate residual specs along a uniform trajectory.
pub fn flow_residuals(
    traj: &Trajectory,
    specs: &[ResidualSpec],
    env: &Bindings,
) -> Result<ResidualTable> {
    let h = traj.uniform_step().ok_or(Error::NonUniformSamples)?;
    if traj.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: traj.len(),
        });
    }
    let n = traj.len();
    // Sampled values of each spec's tracked quantity.
    let mut value_cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); specs.len()];
    let mut sample_bindings = Vec::with_capacity(n);
    for i in 0..n {
        sample_bindings.push(traj.bindings_at(i, env));
    }
    for (j, spec) in specs.iter().enumerate() {
        for b in &sample_bindings {
            value_cols[j].push(spec.value.evaluate(b)?);
        }
    }
    let mut times = Vec::with_capacity(n.saturating_sub(4));
    let mut rows = Vec::with_capacity(n.saturating_sub(4));
    for i in 2..n - 2 {
        let mut row = Vec::with_capacity(specs.len());
        for (j, spec) in specs.iter().enumerate() {
            let rate = spec.rate.evaluate(&sample_bindings[i])?;
            row.push(centered_derivative(&value_cols[j], i, h) - rate);
        }
        times.push(traj.times()[i]);
        rows.push(row);
    }
    Ok(ResidualTable {
        labels: specs.iter().map(|s| s.label.clone()).collect(),
        times,
        rows,
    })
}

/// Named scalar expressions to tabulate along a trajectory.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticsSpec {
    /// Generator along the flow; tabulated as `energy`.
    pub energy: Option<Expr>,
    /// Mechanical part of the energy; tabulated as `mechanical_energy`.
    pub mechanical: Option<Expr>,
    /// Lagrangian whose running integral the action coordinate must track;
    /// tabulated as `action_residual`.
    pub action_lagrangian: Option<Expr>,
    /// Extra named columns.
    pub extra: Vec<(String, Expr)>,
}

/// Diagnostic columns aligned with the trajectory samples.
#[derive(Clone, Debug)]
pub struct DiagnosticsTable {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl DiagnosticsTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    pub fn max_abs(&self, name: &str) -> Option<f64> {
        self.column(name)
            .map(|c| c.iter().fold(0.0f64, |a, v| a.max(v.abs())))
    }
}

/// Tabulate diagnostics along `traj`.
pub fn diagnostics(
    traj: &Trajectory,
    spec: &DiagnosticsSpec,
    env: &Bindings,
) -> Result<DiagnosticsTable> {
    let n = traj.len();
    let mut columns = Vec::new();
    let mut sample_bindings = Vec::with_capacity(n);
    for i in 0..n {
        sample_bindings.push(traj.bindings_at(i, env));
    }
    let eval_col = |e: &Expr| -> Result<Vec<f64>> {
        sample_bindings.iter().map(|b| e.evaluate(b)).collect()
    };
    if let Some(e) = &spec.energy {
        columns.push(("energy".to_string(), eval_col(e)?));
    }
    if let Some(e) = &spec.mechanical {
        columns.push(("mechanical_energy".to_string(), eval_col(e)?));
    }
    if let Some(lag) = &spec.action_lagrangian {
        let l = eval_col(lag)?;
        let action = running_integral(traj.times(), &l, traj.uniform_step());
        let s_idx = traj.chart().action_index();
        let s0 = traj.state(0)[s_idx];
        let col = (0..n)
            .map(|i| traj.state(i)[s_idx] - s0 - action[i])
            .collect();
        columns.push(("action_residual".to_string(), col));
    }
    for (name, e) in &spec.extra {
        columns.push((name.clone(), eval_col(e)?));
    }
    Ok(DiagnosticsTable { columns })
}

/// Cumulative trapezoid integral of samples `f` over `times`. On a uniform
/// grid the endpoint-corrected rule is used: the plain trapezoid error
/// `-(h^2/12) (f'(t_k) - f'(t_0))` is removed with one-sided
/// second-order difference estimates of the end slopes, giving an
/// `O(h^4)` cumulative rule good enough to compare against fourth-order
/// trajectories.
pub fn running_integral(times: &[f64], f: &[f64], uniform_step: Option<f64>) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let mut acc = 0.0;
    for i in 1..n {
        acc += 0.5 * (times[i] - times[i - 1]) * (f[i] + f[i - 1]);
        out[i] = acc;
    }
    if let Some(h) = uniform_step {
        if n >= 3 {
            let d0 = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
            for (i, v) in out.iter_mut().enumerate().skip(1) {
                let dk = if i + 1 < n {
                    (f[i + 1] - f[i - 1]) / (2.0 * h)
                } else {
                    (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * h)
                };
                *v -= h * h / 12.0 * (dk - d0);
            }
        }
    }
    out
}

/// Greatest absolute value of each labeled expression along a trajectory.
pub fn constraint_drift(
    traj: &Trajectory,
    constraints: &[(String, Expr)],
    env: &Bindings,
) -> Result<Vec<(String, f64)>> {
    let mut out: Vec<(String, f64)> = constraints
        .iter()
        .map(|(name, _)| (name.clone(), 0.0))
        .collect();
    for i in 0..traj.len() {
        let b = traj.bindings_at(i, env);
        for (j, (_, e)) in constraints.iter().enumerate() {
            let v = e.evaluate(&b)?.abs();
            if v > out[j].1 {
                out[j].1 = v;
            }
        }
    }
    Ok(out)
}
