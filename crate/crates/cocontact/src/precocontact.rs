//! Constraint machinery for degenerate structures.
//!
//! A pair `(tau, eta)` whose flat map drops rank has a characteristic
//! distribution `ker tau ∩ ker eta ∩ ker d eta`, and the dynamical equation
//! `b(X) = gamma` only admits solutions where the generator is constant
//! along it. This module finds the characteristic directions, enlarges a
//! Lagrangian with holonomic constraints and their multipliers, and runs
//! the stabilization loop: seed the consistency conditions, solve the
//! general field with undetermined coefficients along the kernel, demand
//! tangency of every recorded constraint, and repeat until the ledger
//! stops growing, a contradiction appears, or the stage budget runs out.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::chart::Chart;
use crate::cocontact::{reeb_from_structure, verify_cocontact, verify_reeb, StructureVerdict};
use crate::dynamics::{constraint_drift, Trajectory};
use crate::error::{Error, Result};
use crate::exterior::{differential, flat_matrix, DifferentialForm, VectorFieldExpr};
use crate::lagrangian::LagrangianSystem;
use crate::probe::{eval_matrix, nullspace, probe_bindings, rank, PROBE_COUNT};
use crate::solve::solve_square;
use crate::symlang::eval::Bindings;
use crate::symlang::zero::is_identically_zero;
use crate::symlang::Expr;

/// Default stage budget for the stabilization loop.
pub const DEFAULT_MAX_STAGES: usize = 12;
/// Passes of the oriented rewrite system before reduction gives up.
const REWRITE_PASSES: usize = 16;
/// Smallest pivot coefficient accepted during constraint normalization.
const COEFF_TOL: f64 = 1e-9;

/// How a constraint entered the ledger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintOrigin {
    /// The generator fails to be constant along a characteristic direction.
    Consistency,
    /// The field fails to be tangent to an earlier constraint.
    Tangency,
    /// The second-order condition pinned a position rate to its velocity.
    Sode,
    /// A holonomic constraint reinstated directly from the augmentation.
    HolonomicRank,
}

impl fmt::Display for ConstraintOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintOrigin::Consistency => "consistency",
            ConstraintOrigin::Tangency => "tangency",
            ConstraintOrigin::Sode => "sode",
            ConstraintOrigin::HolonomicRank => "holonomic-rank",
        })
    }
}

/// One recorded constraint.
#[derive(Clone, Debug)]
pub struct ConstraintEntry {
    pub expression: Expr,
    pub stage: usize,
    pub origin: ConstraintOrigin,
}

/// Outcome of the stabilization loop.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmStatus {
    /// A full stage added nothing; the flow stays on a submanifold of the
    /// recorded dimension.
    Finalized { stage: usize, dim_final: usize },
    /// A tangency condition reduced to a nonzero constant.
    Inconsistent { stage: usize, witness: Expr },
    /// The stage budget ran out before the ledger stabilized.
    MaxStages { stage: usize },
}

/// Options for [`PrecocontactSystem::constraint_algorithm`].
#[derive(Clone, Copy, Debug)]
pub struct AlgorithmOptions {
    /// Pin undetermined position rates to their paired velocities.
    pub enforce_sode: bool,
    /// Also demand tangency along the Reeb representatives.
    pub reeb_tangency: bool,
    /// Stage budget.
    pub max_stages: usize,
}

impl Default for AlgorithmOptions {
    fn default() -> AlgorithmOptions {
        AlgorithmOptions {
            enforce_sode: false,
            reeb_tangency: false,
            max_stages: DEFAULT_MAX_STAGES,
        }
    }
}

/// Completed run of the constraint algorithm: the constraints in discovery
/// order, the solved coefficients, the resulting field (still carrying any
/// never-determined coefficients as symbols), and the outcome.
#[derive(Clone, Debug)]
pub struct ConstraintLedger {
    chart: Arc<Chart>,
    class: usize,
    entries: Vec<ConstraintEntry>,
    assignments: Vec<(String, Expr)>,
    rewrites: Vec<(String, Expr)>,
    status: AlgorithmStatus,
    field: VectorFieldExpr,
    unknowns: Vec<String>,
    env: Bindings,
}

impl ConstraintLedger {
    pub fn entries(&self) -> &[ConstraintEntry] {
        &self.entries
    }

    pub fn constraints(&self) -> Vec<Expr> {
        self.entries.iter().map(|e| e.expression.clone()).collect()
    }

    /// Solved coefficients, in the order they were determined.
    pub fn assignments(&self) -> &[(String, Expr)] {
        &self.assignments
    }

    pub fn status(&self) -> &AlgorithmStatus {
        &self.status
    }

    /// The general solution with every solved coefficient substituted.
    pub fn field(&self) -> &VectorFieldExpr {
        &self.field
    }

    /// Coefficients that no condition ever determined.
    pub fn unknowns_remaining(&self) -> &[String] {
        &self.unknowns
    }

    /// Substitute the solved relations (pinned coordinates and solved
    /// coefficients) into `e` until it stops changing.
    pub fn reduce(&self, e: &Expr) -> Expr {
        reduce_with(e, &self.rewrites, &self.assignments)
    }

    /// Complete a partial initial condition to a full chart-ordered state
    /// on the final constraint submanifold. Time and action default to
    /// zero; constrained coordinates are recomputed from the solved
    /// relations and override supplied values.
    pub fn solve_initial_state(&self, partial: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        let chart = &self.chart;
        let mut b = self.env.clone();
        for (name, value) in partial {
            if !chart.contains(name) {
                return Err(Error::Config(format!(
                    "initial value for `{name}` does not name a chart coordinate"
                )));
            }
            b.set(name, *value);
        }
        for name in [chart.time_name(), chart.action_name()] {
            if b.get(name).is_none() {
                b.set(name, 0.0);
            }
        }
        for _ in 0..REWRITE_PASSES {
            for (name, replacement) in &self.rewrites {
                if let Ok(v) = replacement.evaluate(&b) {
                    b.set(name, v);
                }
            }
        }
        let mut state = Vec::with_capacity(chart.dim());
        for i in 0..chart.dim() {
            let name = chart.name(i);
            match b.get(name) {
                Some(v) => state.push(v),
                None => {
                    return Err(Error::Config(format!(
                        "initial value for `{name}` is neither supplied nor fixed by the constraints"
                    )))
                }
            }
        }
        Ok(state)
    }

    /// Greatest absolute value of each constraint along a trajectory.
    pub fn drift(&self, traj: &Trajectory) -> Result<Vec<(String, f64)>> {
        let labeled: Vec<(String, Expr)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| (format!("constraint {}", k + 1), e.expression.clone()))
            .collect();
        constraint_drift(traj, &labeled, &self.env)
    }

    /// Human-readable account of the run for reports and the CLI.
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "constraint analysis on chart {}, class {}\n",
            self.chart, self.class
        ));
        if self.entries.is_empty() {
            out.push_str("no constraints\n");
        }
        for (k, e) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "stage {} [{}] constraint {}: {} = 0\n",
                e.stage,
                e.origin,
                k + 1,
                e.expression
            ));
        }
        if !self.assignments.is_empty() {
            out.push_str("solved coefficients:\n");
            for (name, value) in &self.assignments {
                out.push_str(&format!("  {name} = {value}\n"));
            }
        }
        if !self.unknowns.is_empty() {
            out.push_str(&format!(
                "undetermined coefficients: {}\n",
                self.unknowns.join(", ")
            ));
        }
        match &self.status {
            AlgorithmStatus::Finalized { stage, dim_final } => out.push_str(&format!(
                "status: finalized at stage {stage}; final submanifold dimension {dim_final}\n"
            )),
            AlgorithmStatus::Inconsistent { stage, witness } => out.push_str(&format!(
                "status: inconsistent at stage {stage}; a condition reduces to {witness} != 0\n"
            )),
            AlgorithmStatus::MaxStages { stage } => out.push_str(&format!(
                "status: stage budget exhausted after stage {stage}\n"
            )),
        }
        out
    }
}

/// One displayed equation of motion for an augmented system.
#[derive(Clone, Debug)]
pub enum MotionEquation {
    /// `d/dt quantity = rate` along the flow.
    Rate {
        label: String,
        quantity: Expr,
        rate: Expr,
    },
    /// `expression = 0` on the motion.
    Algebraic { label: String, expression: Expr },
}

impl fmt::Display for MotionEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotionEquation::Rate {
                label,
                quantity,
                rate,
            } => write!(f, "[{label}] d/dt({quantity}) = {rate}"),
            MotionEquation::Algebraic { label, expression } => {
                write!(f, "[{label}] {expression} = 0")
            }
        }
    }
}

/// Basis of the characteristic distribution of `(tau, eta)`: the coordinate
/// directions annihilated by the flat map. Only coordinate-aligned kernels
/// are representable symbolically; anything else is rejected with the
/// numeric evidence.
pub fn characteristic_distribution(
    tau: &DifferentialForm,
    eta: &DifferentialForm,
    env: &Bindings,
) -> Result<Vec<VectorFieldExpr>> {
    let class = match verify_cocontact(tau, eta, env)? {
        StructureVerdict::Cocontact => tau.chart().dim(),
        StructureVerdict::Precocontact { class } => class,
        StructureVerdict::Invalid { reason } => return Err(Error::InvalidStructure(reason)),
    };
    let m = flat_matrix(tau, eta)?;
    let chart = tau.chart().clone();
    let kernel = aligned_kernel(&chart, &m, class, env)?;
    Ok(kernel
        .into_iter()
        .map(|i| VectorFieldExpr::basis(&chart, i))
        .collect())
}

/// Indices of the coordinate directions spanning `ker b`, or an error when
/// the kernel is not coordinate-aligned.
fn aligned_kernel(
    chart: &Arc<Chart>,
    m: &[Vec<Expr>],
    class: usize,
    env: &Bindings,
) -> Result<Vec<usize>> {
    let dim = chart.dim();
    let mut kernel = Vec::new();
    for a in 0..dim {
        if (0..dim).all(|b| is_identically_zero(&m[b][a])) {
            kernel.push(a);
        }
    }
    if kernel.len() != dim - class {
        let probes = probe_bindings(chart, env, 1);
        let numeric = nullspace(&eval_matrix(m, &probes[0])?);
        let mut mixed = BTreeSet::new();
        for v in &numeric {
            for (i, c) in v.iter().enumerate() {
                if c.abs() > 1e-6 {
                    mixed.insert(chart.name(i).to_string());
                }
            }
        }
        return Err(Error::KernelNotAligned(format!(
            "kernel of the flat map has dimension {} but only {} zero coordinate column(s); \
             a probe kernel involves {}",
            dim - class,
            kernel.len(),
            Vec::from_iter(mixed).join(", ")
        )));
    }
    Ok(kernel)
}

/// Enlarge a Lagrangian with holonomic constraints `f` and one Lagrange
/// multiplier pair per constraint: the result lives on the chart
/// `(t, q..., lambda..., v..., v_lambda..., s)` with Lagrangian
/// `L + lambda_a f^a`.
pub fn holonomic_augment(
    base: &LagrangianSystem,
    constraints: &[Expr],
) -> Result<LagrangianSystem> {
    let chart = base.chart();
    let mut allowed: BTreeSet<&str> = BTreeSet::new();
    allowed.insert(chart.time_name());
    allowed.insert(chart.action_name());
    for i in chart.positions() {
        allowed.insert(chart.name(i));
    }
    for f in constraints {
        for name in f.free_symbols() {
            if chart.contains(&name) && !allowed.contains(name.as_str()) {
                return Err(Error::VelocityDependentConstraint {
                    constraint: f.to_string(),
                    coordinate: name,
                });
            }
        }
    }
    let d = constraints.len();
    let positions = chart.positions();
    let jacobian: Vec<Vec<Expr>> = constraints
        .iter()
        .map(|f| {
            positions
                .iter()
                .map(|&i| f.differentiate(chart.name(i)))
                .collect()
        })
        .collect();
    let probes = probe_bindings(chart, base.env(), PROBE_COUNT);
    for b in &probes {
        let j = eval_matrix(&jacobian, b)?;
        if rank(&j) < d {
            let left = nullspace(&j.transpose());
            let combo = left
                .first()
                .map(|v| {
                    v.iter()
                        .enumerate()
                        .filter(|(_, c)| c.abs() > 1e-6)
                        .map(|(a, c)| format!("{c:+.3}*({})", constraints[a]))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            return Err(Error::RankDeficient(format!(
                "holonomic constraints are degenerate: the combination {combo} has vanishing \
                 position gradient"
            )));
        }
    }
    let names: Vec<String> = if d == 1 {
        vec!["lambda".to_string()]
    } else {
        (1..=d).map(|a| format!("lambda{a}")).collect()
    };
    let enlarged = Arc::new(
        chart.with_multipliers(&names.iter().map(|s| s.as_str()).collect::<Vec<_>>())?,
    );
    let mut lagrangian = base.lagrangian().clone();
    for (name, f) in names.iter().zip(constraints) {
        lagrangian = lagrangian + Expr::sym(name) * f;
    }
    LagrangianSystem::new(&enlarged, lagrangian, base.env().clone())
}

/// A degenerate (or regular, with empty kernel) structure with a generator,
/// a coordinate-aligned characteristic basis, and fixed Reeb
/// representatives.
#[derive(Clone)]
pub struct PrecocontactSystem {
    chart: Arc<Chart>,
    tau: DifferentialForm,
    eta: DifferentialForm,
    generator: Expr,
    lagrangian: Option<Expr>,
    kernel: Vec<usize>,
    basis: Vec<VectorFieldExpr>,
    r_t: VectorFieldExpr,
    r_s: VectorFieldExpr,
    class: usize,
    env: Bindings,
}

impl PrecocontactSystem {
    /// Build from a verified pair of one-forms and a generator function.
    pub fn from_forms(
        tau: DifferentialForm,
        eta: DifferentialForm,
        generator: Expr,
        env: Bindings,
    ) -> Result<PrecocontactSystem> {
        Self::assemble(tau, eta, generator, None, env)
    }

    /// Build from a Lagrangian: the pair `(dt, eta_L)` with generator
    /// `E_L`. Works for regular Lagrangians too, with an empty kernel.
    pub fn from_lagrangian(sys: &LagrangianSystem) -> Result<PrecocontactSystem> {
        Self::assemble(
            sys.tau_form(),
            sys.eta_form().clone(),
            sys.energy().clone(),
            Some(sys.lagrangian().clone()),
            sys.env().clone(),
        )
    }

    fn assemble(
        tau: DifferentialForm,
        eta: DifferentialForm,
        generator: Expr,
        lagrangian: Option<Expr>,
        env: Bindings,
    ) -> Result<PrecocontactSystem> {
        let class = match verify_cocontact(&tau, &eta, &env)? {
            StructureVerdict::Cocontact => tau.chart().dim(),
            StructureVerdict::Precocontact { class } => class,
            StructureVerdict::Invalid { reason } => return Err(Error::InvalidStructure(reason)),
        };
        let chart = tau.chart().clone();
        let m = flat_matrix(&tau, &eta)?;
        let kernel = aligned_kernel(&chart, &m, class, &env)?;
        let basis: Vec<VectorFieldExpr> = kernel
            .iter()
            .map(|&i| VectorFieldExpr::basis(&chart, i))
            .collect();
        let (r_t, r_s) = reeb_from_structure(&chart, &tau, &eta, &kernel)?;
        Ok(PrecocontactSystem {
            chart,
            tau,
            eta,
            generator,
            lagrangian,
            kernel,
            basis,
            r_t,
            r_s,
            class,
            env,
        })
    }

    /// Replace the Reeb representatives, e.g. shifted by characteristic
    /// directions. The defining contractions are re-verified.
    pub fn with_reeb(
        mut self,
        r_t: VectorFieldExpr,
        r_s: VectorFieldExpr,
    ) -> Result<PrecocontactSystem> {
        let deta = self.eta.exterior_derivative();
        verify_reeb(&self.tau, &self.eta, &deta, &r_t, &r_s)?;
        self.r_t = r_t;
        self.r_s = r_s;
        Ok(self)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn env(&self) -> &Bindings {
        &self.env
    }

    pub fn generator(&self) -> &Expr {
        &self.generator
    }

    /// Rank of the flat map; the chart dimension for a regular structure.
    pub fn class(&self) -> usize {
        self.class
    }

    pub fn reeb_fields(&self) -> (&VectorFieldExpr, &VectorFieldExpr) {
        (&self.r_t, &self.r_s)
    }

    pub fn tau_form(&self) -> &DifferentialForm {
        &self.tau
    }

    pub fn eta_form(&self) -> &DifferentialForm {
        &self.eta
    }

    /// Basis of `ker tau ∩ ker eta ∩ ker d eta`.
    pub fn characteristic_basis(&self) -> &[VectorFieldExpr] {
        &self.basis
    }

    /// The one-form the dynamical field must flatten to:
    /// `dH - (R_s(H) + H) eta + (1 - R_t(H)) tau`.
    pub fn gamma(&self) -> Result<DifferentialForm> {
        let dh = differential(&self.chart, &self.generator);
        let along_eta = self.r_s.lie_scalar(&self.generator) + &self.generator;
        let along_tau = Expr::one() - self.r_t.lie_scalar(&self.generator);
        dh.sub(&self.eta.scale(&along_eta))?
            .add(&self.tau.scale(&along_tau))
    }

    /// Derivatives of the generator along the characteristic basis, with
    /// identically-zero entries discarded. These must vanish wherever the
    /// dynamical equation is solvable.
    pub fn primary_constraints(&self) -> Vec<Expr> {
        self.basis
            .iter()
            .map(|y| y.lie_scalar(&self.generator))
            .filter(|e| !is_identically_zero(e))
            .collect()
    }

    /// General solution of `b(X) = gamma`: determined components from the
    /// reduced solve, one symbolic coefficient per kernel direction.
    fn general_solution(&self) -> Result<(VectorFieldExpr, Vec<String>)> {
        let dim = self.chart.dim();
        let m = flat_matrix(&self.tau, &self.eta)?;
        let keep: Vec<usize> = (0..dim).filter(|i| !self.kernel.contains(i)).collect();
        let gamma = self.gamma()?.one_form_coefficients()?;
        let reduced: Vec<Vec<Expr>> = keep
            .iter()
            .map(|&b| keep.iter().map(|&a| m[b][a].clone()).collect())
            .collect();
        let rhs: Vec<Expr> = keep.iter().map(|&b| gamma[b].clone()).collect();
        let x = solve_square(&reduced, &rhs)?;
        let mut comps = vec![Expr::zero(); dim];
        for (slot, &a) in keep.iter().enumerate() {
            comps[a] = x[slot].clone();
        }
        let mut unknowns = Vec::new();
        for &a in &self.kernel {
            let name = unknown_name(&self.chart, self.chart.name(a));
            comps[a] = Expr::sym(&name);
            unknowns.push(name);
        }
        Ok((VectorFieldExpr::from_components(&self.chart, comps)?, unknowns))
    }

    /// Run the stabilization loop and record everything in a ledger.
    pub fn constraint_algorithm(&self, options: &AlgorithmOptions) -> Result<ConstraintLedger> {
        if options.enforce_sode && !self.chart.velocity_chart() {
            return Err(Error::Config(
                "the second-order condition only applies on velocity charts".to_string(),
            ));
        }
        let (base_field, all_unknowns) = self.general_solution()?;
        let mut run = AlgorithmRun {
            sys: self,
            entries: Vec::new(),
            rewrites: Vec::new(),
            assignments: Vec::new(),
            outstanding: all_unknowns.iter().cloned().collect(),
        };

        // Stage 0: consistency conditions, then any holonomic constraint
        // the recovery missed.
        for raw in self.primary_constraints() {
            if let Some(witness) = run.admit(raw, 0, ConstraintOrigin::Consistency) {
                return Ok(run.finish(
                    AlgorithmStatus::Inconsistent { stage: 0, witness },
                    base_field,
                    all_unknowns,
                ));
            }
        }
        if let Some(l) = &self.lagrangian {
            for i in self.chart.multipliers() {
                let f = l.differentiate(self.chart.name(i));
                if let Some(witness) = run.admit(f, 0, ConstraintOrigin::HolonomicRank) {
                    return Ok(run.finish(
                        AlgorithmStatus::Inconsistent { stage: 0, witness },
                        base_field,
                        all_unknowns,
                    ));
                }
            }
        }
        if run.entries.is_empty() && self.kernel.is_empty() {
            let status = AlgorithmStatus::Finalized {
                stage: 0,
                dim_final: self.chart.dim(),
            };
            return Ok(run.finish(status, base_field, all_unknowns));
        }

        let mut status = AlgorithmStatus::MaxStages {
            stage: options.max_stages,
        };
        'stages: for stage in 1..=options.max_stages {
            if options.enforce_sode {
                let field = run.current_field(&base_field);
                if let Some(witness) = run.impose_sode(&field, stage)? {
                    status = AlgorithmStatus::Inconsistent { stage, witness };
                    break;
                }
            }
            let field = run.current_field(&base_field);
            let mut appended = false;
            let snapshot = run.entries.len();
            let mut generators: Vec<VectorFieldExpr> = vec![field];
            if options.reeb_tangency {
                generators.push(self.r_t.clone());
                generators.push(self.r_s.clone());
            }
            for generator in &generators {
                for k in 0..snapshot {
                    let lie = generator.lie_scalar(&run.entries[k].expression);
                    match run.classify(lie, stage, ConstraintOrigin::Tangency)? {
                        StageEvent::Quiet => {}
                        StageEvent::Appended => appended = true,
                        StageEvent::Inconsistent(witness) => {
                            status = AlgorithmStatus::Inconsistent { stage, witness };
                            break 'stages;
                        }
                    }
                }
            }
            if !appended {
                status = AlgorithmStatus::Finalized {
                    stage,
                    dim_final: self.chart.dim() - run.entries.len(),
                };
                break;
            }
        }
        Ok(run.finish(status, base_field, all_unknowns))
    }

    /// The displayed equations of motion of a holonomically augmented
    /// Lagrangian: unit time rate, action rate `L`, the constraints
    /// themselves, and the forced equation per original degree of freedom
    /// with the multiplier source on the right.
    pub fn multiplier_dynamics(&self) -> Result<Vec<MotionEquation>> {
        let l = self.lagrangian.as_ref().ok_or_else(|| {
            Error::Config("multiplier dynamics need a Lagrangian-backed system".to_string())
        })?;
        let multipliers = self.chart.multipliers();
        if multipliers.is_empty() {
            return Err(Error::Config(
                "multiplier dynamics need a holonomically augmented chart".to_string(),
            ));
        }
        let holonomic: Vec<(String, Expr)> = multipliers
            .iter()
            .map(|&i| {
                let name = self.chart.name(i).to_string();
                let f = l.differentiate(&name);
                (name, f)
            })
            .collect();
        let mut base = l.clone();
        for (name, f) in &holonomic {
            base = base - Expr::sym(name) * f;
        }
        let s = self.chart.action_name();
        let base_s = base.differentiate(s);
        let mut equations = vec![
            MotionEquation::Rate {
                label: self.chart.time_name().to_string(),
                quantity: Expr::sym(self.chart.time_name()),
                rate: Expr::one(),
            },
            MotionEquation::Rate {
                label: s.to_string(),
                quantity: Expr::sym(s),
                rate: l.clone(),
            },
        ];
        for (name, f) in &holonomic {
            equations.push(MotionEquation::Algebraic {
                label: name.clone(),
                expression: f.clone(),
            });
        }
        for (qi, vi) in self.chart.positions().into_iter().zip(self.chart.fibres()) {
            let q = self.chart.name(qi);
            let p = base.differentiate(self.chart.name(vi));
            let mut rate = base.differentiate(q) + &base_s * &p;
            for (name, f) in &holonomic {
                rate = rate
                    + Expr::sym(name) * (f.differentiate(q) + f.differentiate(s) * &p);
            }
            equations.push(MotionEquation::Rate {
                label: q.to_string(),
                quantity: p,
                rate,
            });
        }
        Ok(equations)
    }
}

fn unknown_name(chart: &Chart, coordinate: &str) -> String {
    let mut name = format!("u_{coordinate}");
    while chart.contains(&name) {
        name.push('_');
    }
    name
}

fn reduce_with(e: &Expr, rewrites: &[(String, Expr)], assignments: &[(String, Expr)]) -> Expr {
    let mut map = BTreeMap::new();
    for (name, replacement) in rewrites.iter().chain(assignments) {
        map.insert(name.clone(), replacement.clone());
    }
    if map.is_empty() {
        return e.clone();
    }
    let mut current = e.clone();
    for _ in 0..REWRITE_PASSES {
        let next = current.substitute(&map);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

enum StageEvent {
    Quiet,
    Appended,
    Inconsistent(Expr),
}

struct AlgorithmRun<'a> {
    sys: &'a PrecocontactSystem,
    entries: Vec<ConstraintEntry>,
    rewrites: Vec<(String, Expr)>,
    assignments: Vec<(String, Expr)>,
    outstanding: BTreeSet<String>,
}

impl AlgorithmRun<'_> {
    fn reduce(&self, e: &Expr) -> Expr {
        reduce_with(e, &self.rewrites, &self.assignments)
    }

    fn current_field(&self, base: &VectorFieldExpr) -> VectorFieldExpr {
        if self.assignments.is_empty() {
            return base.clone();
        }
        base.map(|e| reduce_with(e, &[], &self.assignments))
    }

    /// True when the expression contains no chart coordinate, no external
    /// function, and no outstanding coefficient, so a nonzero value cannot
    /// be repaired by shrinking the submanifold.
    fn is_parameter_only(&self, e: &Expr) -> bool {
        if e.contains_external() {
            return false;
        }
        e.free_symbols()
            .iter()
            .all(|s| !self.sys.chart.contains(s) && !self.outstanding.contains(s))
    }

    /// Outstanding coefficients occurring in `e`, ordered like the kernel
    /// coordinates they sit on.
    fn unknowns_in(&self, e: &Expr) -> Vec<String> {
        let free = e.free_symbols();
        let mut found: Vec<String> = self
            .outstanding
            .iter()
            .filter(|u| free.contains(*u))
            .cloned()
            .collect();
        let order = |u: &String| {
            self.sys
                .kernel
                .iter()
                .position(|&a| unknown_name(&self.sys.chart, self.sys.chart.name(a)) == *u)
                .unwrap_or(usize::MAX)
        };
        found.sort_by_key(order);
        found
    }

    /// Normalize a reduced, nonzero candidate: scale the first coordinate
    /// (in chart order) whose coefficient is a nonzero constant in the
    /// parameters to +1. Returns the scaled constraint and the pivot.
    fn normalize(&self, e: Expr) -> (Expr, Option<String>) {
        let chart = &self.sys.chart;
        for i in 0..chart.dim() {
            let name = chart.name(i);
            let c = e.differentiate(name);
            if is_identically_zero(&c) || !self.is_parameter_only(&c) {
                continue;
            }
            match c.evaluate(&self.sys.env) {
                Ok(v) if v.abs() > COEFF_TOL => {
                    return (&e / &c, Some(name.to_string()));
                }
                _ => continue,
            }
        }
        (e, None)
    }

    /// Probes on the zero set of the current rewrites.
    fn zero_set_probes(&self, count: usize) -> Vec<Bindings> {
        let mut probes = probe_bindings(&self.sys.chart, &self.sys.env, count);
        for b in &mut probes {
            for _ in 0..REWRITE_PASSES {
                for (name, replacement) in &self.rewrites {
                    if let Ok(v) = replacement.evaluate(b) {
                        b.set(name, v);
                    }
                }
            }
        }
        probes
    }

    /// True when appending `candidate` increases the rank of the combined
    /// constraint Jacobian somewhere on the current zero set.
    fn is_independent(&self, candidate: &Expr) -> bool {
        if self.entries.is_empty() {
            return true;
        }
        let chart = &self.sys.chart;
        let names: Vec<&str> = (0..chart.dim()).map(|i| chart.name(i)).collect();
        let mut jac: Vec<Vec<Expr>> = self
            .entries
            .iter()
            .map(|e| names.iter().map(|n| e.expression.differentiate(n)).collect())
            .collect();
        jac.push(names.iter().map(|n| candidate.differentiate(n)).collect());
        for b in &self.zero_set_probes(PROBE_COUNT) {
            let Ok(full) = eval_matrix(&jac, b) else {
                continue;
            };
            let prior = full.clone().remove_row(jac.len() - 1);
            if rank(&full) > rank(&prior) {
                return true;
            }
        }
        false
    }

    /// Record a raw condition: reduce, discard if zero or dependent,
    /// normalize and append otherwise. Returns the witness when the
    /// condition is a nonzero constant.
    fn admit(&mut self, raw: Expr, stage: usize, origin: ConstraintOrigin) -> Option<Expr> {
        match self.classify_reduced(self.reduce(&raw), stage, origin) {
            StageEvent::Inconsistent(witness) => Some(witness),
            _ => None,
        }
    }

    /// Handle one tangency value: solve for an outstanding coefficient if
    /// one occurs (taking the first in kernel order and deferring any
    /// others into its solution), otherwise discard, append, or report
    /// inconsistency. A coefficient met nonlinearly is an error.
    fn classify(&mut self, raw: Expr, stage: usize, origin: ConstraintOrigin) -> Result<StageEvent> {
        let reduced = self.reduce(&raw);
        if is_identically_zero(&reduced) {
            return Ok(StageEvent::Quiet);
        }
        let unknowns = self.unknowns_in(&reduced);
        if let Some(u) = unknowns.first() {
            let coefficient = reduced.differentiate(u);
            if coefficient.contains_symbol(u) || !self.unknowns_in(&coefficient).is_empty() {
                return Err(Error::NonlinearUnknown {
                    unknown: u.clone(),
                    equation: reduced.to_string(),
                });
            }
            let rest = reduced.substitute(&BTreeMap::from([(u.clone(), Expr::zero())]));
            let solution = self.reduce(&(-&rest / &coefficient));
            self.outstanding.remove(u);
            self.assignments.push((u.clone(), solution));
            return Ok(StageEvent::Quiet);
        }
        Ok(self.classify_reduced(reduced, stage, origin))
    }

    fn classify_reduced(&mut self, reduced: Expr, stage: usize, origin: ConstraintOrigin) -> StageEvent {
        if is_identically_zero(&reduced) {
            return StageEvent::Quiet;
        }
        if self.is_parameter_only(&reduced) {
            return StageEvent::Inconsistent(reduced);
        }
        let (normalized, pivot) = self.normalize(reduced);
        if !self.is_independent(&normalized) {
            return StageEvent::Quiet;
        }
        if let Some(name) = &pivot {
            let rest =
                normalized.substitute(&BTreeMap::from([(name.clone(), Expr::zero())]));
            self.rewrites.push((name.clone(), -&rest));
        }
        self.entries.push(ConstraintEntry {
            expression: normalized,
            stage,
            origin,
        });
        StageEvent::Appended
    }

    /// Pin undetermined position rates to their paired velocities; other
    /// mismatches between the two become second-order constraints.
    fn impose_sode(&mut self, field: &VectorFieldExpr, stage: usize) -> Result<Option<Expr>> {
        for (pos, fib) in self.sys.chart.pairs() {
            let comp = field.component(pos);
            let velocity = Expr::sym(self.sys.chart.name(fib));
            if let Some(sym) = comp.as_sym() {
                if self.outstanding.contains(sym) {
                    let name = sym.to_string();
                    self.outstanding.remove(&name);
                    self.assignments.push((name, velocity));
                    continue;
                }
            }
            let gap = comp - &velocity;
            if let StageEvent::Inconsistent(witness) =
                self.classify(gap, stage, ConstraintOrigin::Sode)?
            {
                return Ok(Some(witness));
            }
        }
        Ok(None)
    }

    fn finish(
        self,
        status: AlgorithmStatus,
        base_field: VectorFieldExpr,
        all_unknowns: Vec<String>,
    ) -> ConstraintLedger {
        let field = self.current_field(&base_field);
        let unknowns: Vec<String> = all_unknowns
            .into_iter()
            .filter(|u| self.outstanding.contains(u))
            .collect();
        ConstraintLedger {
            chart: self.sys.chart.clone(),
            class: self.sys.class,
            entries: self.entries,
            assignments: self.assignments,
            rewrites: self.rewrites,
            status,
            field,
            unknowns,
            env: self.sys.env.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig};
    use crate::symlang::eval::ExternalImpl;
    use crate::symlang::zero::external_test_family;

    fn swinging_mass(ell: ExternalImpl, gamma: f64) -> LagrangianSystem {
        let chart = Arc::new(Chart::lagrangian(&["r", "th"], &["v_r", "v_th"]).unwrap());
        let m = Expr::sym("m");
        let l = &m / Expr::int(2)
            * (Expr::powi(Expr::sym("v_r"), 2)
                + Expr::powi(Expr::sym("r"), 2) * Expr::powi(Expr::sym("v_th"), 2))
            - &m * Expr::sym("g")
                * (Expr::sym("r") - Expr::sym("r") * Expr::cos(Expr::sym("th")))
            - Expr::sym("gamma") * Expr::sym("s");
        let env = Bindings::new()
            .with("m", 1.0)
            .with("g", 9.8)
            .with("gamma", gamma)
            .with_external("ell", ell);
        LagrangianSystem::new(&chart, l, env).unwrap()
    }

    fn pendulum() -> LagrangianSystem {
        holonomic_augment(
            &swinging_mass(external_test_family("ell"), 0.5),
            &[Expr::sym("r") - Expr::ext("ell", "t", 0)],
        )
        .unwrap()
    }

    fn ell(order: u32) -> Expr {
        Expr::ext("ell", "t", order)
    }

    fn expected_third_constraint() -> Expr {
        let m = Expr::sym("m");
        &m * ell(0) * Expr::powi(Expr::sym("v_th"), 2)
            - &m * Expr::sym("g") * (Expr::one() - Expr::cos(Expr::sym("th")))
            + Expr::sym("lambda")
            - &m * Expr::sym("gamma") * ell(1)
            - &m * ell(2)
    }

    fn expected_fourth_constraint() -> Expr {
        let m = Expr::sym("m");
        Expr::sym("v_lambda")
            - Expr::int(3) * &m * ell(1) * Expr::powi(Expr::sym("v_th"), 2)
            - Expr::int(2) * &m * Expr::sym("gamma") * ell(0) * Expr::powi(Expr::sym("v_th"), 2)
            - Expr::int(3) * &m * Expr::sym("g") * Expr::sym("v_th") * Expr::sin(Expr::sym("th"))
            - &m * Expr::sym("gamma") * ell(2)
            - &m * ell(3)
    }

    #[test]
    fn augmentation_recovers_the_constraint_as_a_primary() {
        let base = swinging_mass(external_test_family("ell"), 0.5);
        let f = Expr::sym("r") - ell(0);
        let sys = holonomic_augment(&base, &[f.clone()]).unwrap();
        assert_eq!(sys.chart().dim(), 8);
        let enlarged_energy = sys.energy().clone();
        let shifted = base.energy() - Expr::sym("lambda") * &f;
        assert!(is_identically_zero(&(enlarged_energy - shifted)));

        let pre = PrecocontactSystem::from_lagrangian(&sys).unwrap();
        assert_eq!(pre.class(), 6);
        let primaries = pre.primary_constraints();
        assert_eq!(primaries.len(), 1);
        assert!(is_identically_zero(&(&primaries[0] + &f)));
    }

    #[test]
    fn characteristic_basis_annihilates_the_structure() {
        let sys = pendulum();
        let pre = PrecocontactSystem::from_lagrangian(&sys).unwrap();
        let basis = pre.characteristic_basis();
        assert_eq!(basis.len(), 2);
        assert_eq!(basis[0], VectorFieldExpr::basis(pre.chart(), 3));
        assert_eq!(basis[1], VectorFieldExpr::basis(pre.chart(), 6));
        let deta = pre.eta_form().exterior_derivative();
        for y in basis {
            assert!(is_identically_zero(&pre.tau_form().pair(y).unwrap()));
            assert!(is_identically_zero(&pre.eta_form().pair(y).unwrap()));
            assert!(deta.interior_product(y).unwrap().is_zero_form());
        }

        let regular = swinging_mass(external_test_family("ell"), 0.5);
        let none = characteristic_distribution(
            &regular.tau_form(),
            regular.eta_form(),
            regular.env(),
        )
        .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn augmentation_rejects_degenerate_or_velocity_dependent_constraints() {
        let base = swinging_mass(external_test_family("ell"), 0.5);
        let err = holonomic_augment(&base, &[Expr::sym("t")]).err().unwrap();
        assert!(matches!(err, Error::RankDeficient(_)), "{err}");
        let err =
            holonomic_augment(&base, &[Expr::sym("r"), Expr::sym("r")]).err().unwrap();
        assert!(matches!(err, Error::RankDeficient(_)), "{err}");
        let err = holonomic_augment(&base, &[Expr::sym("v_r") - ell(1)])
            .err()
            .unwrap();
        match err {
            Error::VelocityDependentConstraint { coordinate, .. } => {
                assert_eq!(coordinate, "v_r");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn staged_constraints_match_the_hand_computation() {
        let pre = PrecocontactSystem::from_lagrangian(&pendulum()).unwrap();
        let options = AlgorithmOptions {
            enforce_sode: true,
            ..AlgorithmOptions::default()
        };
        let ledger = pre.constraint_algorithm(&options).unwrap();

        assert_eq!(
            *ledger.status(),
            AlgorithmStatus::Finalized {
                stage: 4,
                dim_final: 4
            }
        );
        let entries = ledger.entries();
        assert_eq!(entries.len(), 4);
        assert_eq!(
            entries.iter().map(|e| e.stage).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(entries[0].origin, ConstraintOrigin::Consistency);
        for e in &entries[1..] {
            assert_eq!(e.origin, ConstraintOrigin::Tangency);
        }
        let expected = [
            Expr::sym("r") - ell(0),
            Expr::sym("v_r") - ell(1),
            expected_third_constraint(),
            expected_fourth_constraint(),
        ];
        for (e, want) in entries.iter().zip(&expected) {
            let diff = &e.expression - want;
            assert!(
                is_identically_zero(&diff),
                "constraint mismatch: {} vs {}",
                e.expression,
                want
            );
        }

        // The multiplier rate was pinned by the second-order condition and
        // the last coefficient was solved at the final stage.
        assert!(ledger.unknowns_remaining().is_empty());
        let assignments = ledger.assignments();
        assert_eq!(assignments[0].0, "u_lambda");
        assert!(is_identically_zero(
            &(&assignments[0].1 - Expr::sym("v_lambda"))
        ));
        assert_eq!(assignments.last().unwrap().0, "u_v_lambda");

        // On the final submanifold the radial acceleration follows the
        // prescribed length and the swing obeys the reduced equation.
        let field = ledger.field();
        let radial = ledger.reduce(field.component_named("v_r").unwrap());
        assert!(is_identically_zero(&(&radial - ell(2))), "radial {radial}");
        let swing = ledger.reduce(field.component_named("v_th").unwrap());
        let target = -Expr::sym("gamma") * Expr::sym("v_th")
            - Expr::int(2) * (ell(1) / ell(0)) * Expr::sym("v_th")
            - (Expr::sym("g") / ell(0)) * Expr::sin(Expr::sym("th"));
        assert!(is_identically_zero(&(&swing - &target)), "swing {swing}");

        let report = ledger.report();
        assert!(report.contains("finalized at stage 4"));
        assert!(report.contains("constraint 4"));
        assert!(report.contains("[consistency]"));
    }

    #[test]
    fn reeb_choice_does_not_change_the_ledger() {
        let sys = pendulum();
        let options = AlgorithmOptions {
            enforce_sode: true,
            ..AlgorithmOptions::default()
        };
        let plain = PrecocontactSystem::from_lagrangian(&sys).unwrap();
        let base = plain.constraint_algorithm(&options).unwrap();

        let shifted_sys = PrecocontactSystem::from_lagrangian(&sys).unwrap();
        let (r_t, r_s) = shifted_sys.reeb_fields();
        let along_kernel =
            VectorFieldExpr::basis(shifted_sys.chart(), 3).scale(&Expr::num(0.37));
        let r_s_shifted = r_s.add(&along_kernel).unwrap();
        let shifted = shifted_sys
            .clone()
            .with_reeb(r_t.clone(), r_s_shifted)
            .unwrap();
        let moved = shifted.constraint_algorithm(&options).unwrap();

        assert_eq!(base.entries().len(), moved.entries().len());
        for (a, b) in base.entries().iter().zip(moved.entries()) {
            assert_eq!(a.stage, b.stage);
            let diff = base.reduce(&(&a.expression - &b.expression));
            assert!(is_identically_zero(&diff), "entries differ: {diff}");
        }
        let last_a = &base.assignments().last().unwrap().1;
        let last_b = &moved.assignments().last().unwrap().1;
        let diff = base.reduce(&(last_a - last_b));
        assert!(is_identically_zero(&diff), "solved coefficients differ: {diff}");
    }

    #[test]
    fn regular_lagrangian_finalizes_immediately() {
        let regular = swinging_mass(external_test_family("ell"), 0.5);
        let pre = PrecocontactSystem::from_lagrangian(&regular).unwrap();
        assert_eq!(pre.class(), 6);
        assert!(pre.characteristic_basis().is_empty());
        let ledger = pre
            .constraint_algorithm(&AlgorithmOptions {
                enforce_sode: true,
                ..AlgorithmOptions::default()
            })
            .unwrap();
        assert!(ledger.entries().is_empty());
        assert_eq!(
            *ledger.status(),
            AlgorithmStatus::Finalized {
                stage: 0,
                dim_final: 6
            }
        );
        let herglotz = regular.herglotz_field().unwrap();
        for i in 0..regular.chart().dim() {
            let diff = ledger.field().component(i) - herglotz.component(i);
            assert!(is_identically_zero(&diff), "component {i}");
        }
    }

    fn spectator_pair() -> (Arc<Chart>, DifferentialForm, DifferentialForm) {
        let chart = Arc::new(Chart::hamiltonian(&["q", "u"], &["p", "w"]).unwrap());
        let tau = DifferentialForm::coordinate_differential(&chart, chart.time_index());
        let dq = DifferentialForm::coordinate_differential(&chart, 1);
        let eta = DifferentialForm::coordinate_differential(&chart, chart.action_index())
            .sub(&dq.scale(&Expr::sym("p")))
            .unwrap();
        (chart, tau, eta)
    }

    #[test]
    fn spectator_pair_forces_an_inconsistency() {
        let (chart, tau, eta) = spectator_pair();
        let h = Expr::sym("q") * Expr::sym("u") + Expr::sym("p");
        let pre =
            PrecocontactSystem::from_forms(tau.clone(), eta.clone(), h, Bindings::new()).unwrap();
        assert_eq!(pre.class(), 4);
        assert_eq!(pre.characteristic_basis().len(), 2);
        let (r_t, r_s) = pre.reeb_fields();
        assert_eq!(*r_t, VectorFieldExpr::basis(&chart, chart.time_index()));
        assert_eq!(*r_s, VectorFieldExpr::basis(&chart, chart.action_index()));

        let ledger = pre.constraint_algorithm(&AlgorithmOptions::default()).unwrap();
        assert_eq!(ledger.entries().len(), 1);
        assert!(is_identically_zero(
            &(&ledger.entries()[0].expression - Expr::sym("q"))
        ));
        match ledger.status() {
            AlgorithmStatus::Inconsistent { stage: 1, witness } => {
                assert!(is_identically_zero(&(witness - Expr::one())));
            }
            other => panic!("unexpected status {other:?}"),
        }

        let constant = PrecocontactSystem::from_forms(tau, eta, Expr::sym("u"), Bindings::new())
            .unwrap()
            .constraint_algorithm(&AlgorithmOptions::default())
            .unwrap();
        assert!(matches!(
            constant.status(),
            AlgorithmStatus::Inconsistent { stage: 0, .. }
        ));
    }

    #[test]
    fn stage_budget_reports_exhaustion() {
        let pre = PrecocontactSystem::from_lagrangian(&pendulum()).unwrap();
        let ledger = pre
            .constraint_algorithm(&AlgorithmOptions {
                enforce_sode: true,
                reeb_tangency: false,
                max_stages: 2,
            })
            .unwrap();
        assert_eq!(*ledger.status(), AlgorithmStatus::MaxStages { stage: 2 });
        assert_eq!(ledger.entries().len(), 3);
    }

    #[test]
    fn multiplier_dynamics_displays_the_forced_equations() {
        let sys = pendulum();
        let pre = PrecocontactSystem::from_lagrangian(&sys).unwrap();
        let equations = pre.multiplier_dynamics().unwrap();
        assert_eq!(equations.len(), 5);

        let mut radial_rate = None;
        for eq in &equations {
            match eq {
                MotionEquation::Rate { label, rate, .. } if label == "t" => {
                    assert!(is_identically_zero(&(rate - Expr::one())));
                }
                MotionEquation::Rate { label, rate, .. } if label == "s" => {
                    assert!(is_identically_zero(&(rate - sys.lagrangian())));
                }
                MotionEquation::Algebraic { expression, .. } => {
                    assert!(is_identically_zero(
                        &(expression - (Expr::sym("r") - ell(0)))
                    ));
                }
                MotionEquation::Rate { label, rate, .. } if label == "r" => {
                    radial_rate = Some(rate.clone());
                }
                _ => {}
            }
        }
        // The multiplier sources the radial equation with unit strength and
        // switching it off leaves the unconstrained rate.
        let rate = radial_rate.expect("radial equation present");
        assert!(is_identically_zero(&(rate.differentiate("lambda") - Expr::one())));
        let off = rate.substitute(&BTreeMap::from([("lambda".to_string(), Expr::zero())]));
        let base = swinging_mass(external_test_family("ell"), 0.5);
        let p = base.lagrangian().differentiate("v_r");
        let free = base.lagrangian().differentiate("r")
            + base.lagrangian().differentiate("s") * &p;
        assert!(is_identically_zero(&(&off - &free)));

        // Each rate equation holds along the constrained field.
        let options = AlgorithmOptions {
            enforce_sode: true,
            ..AlgorithmOptions::default()
        };
        let ledger = pre.constraint_algorithm(&options).unwrap();
        for eq in &equations {
            if let MotionEquation::Rate { label, quantity, rate } = eq {
                let along = ledger.field().lie_scalar(quantity);
                let residue = ledger.reduce(&(&along - rate));
                assert!(is_identically_zero(&residue), "equation {label}: {residue}");
            }
        }
    }

    #[test]
    fn constrained_flow_stays_on_the_final_submanifold() {
        let two_pi = Expr::int(2) * Expr::pi();
        let length = Expr::one()
            + Expr::num(0.1) * Expr::sin(&two_pi * Expr::sym("t"));
        let sys = holonomic_augment(
            &swinging_mass(ExternalImpl::symbolic("t", length), 0.5),
            &[Expr::sym("r") - ell(0)],
        )
        .unwrap();
        let pre = PrecocontactSystem::from_lagrangian(&sys).unwrap();
        let options = AlgorithmOptions {
            enforce_sode: true,
            ..AlgorithmOptions::default()
        };
        let ledger = pre.constraint_algorithm(&options).unwrap();

        let missing = ledger
            .solve_initial_state(&BTreeMap::from([("th".to_string(), 0.5)]))
            .unwrap_err();
        assert!(matches!(missing, Error::Config(_)), "{missing}");

        let initial = ledger
            .solve_initial_state(&BTreeMap::from([
                ("th".to_string(), std::f64::consts::FRAC_PI_4),
                ("v_th".to_string(), 0.0),
            ]))
            .unwrap();
        assert!((initial[1] - 1.0).abs() < 1e-12, "r(0) = {}", initial[1]);
        assert!(
            (initial[4] - 0.2 * std::f64::consts::PI).abs() < 1e-12,
            "v_r(0) = {}",
            initial[4]
        );
        let mut at_start = pre.env().clone();
        for i in 0..sys.chart().dim() {
            at_start.set(sys.chart().name(i), initial[i]);
        }
        for entry in ledger.entries() {
            let v = entry.expression.evaluate(&at_start).unwrap();
            assert!(v.abs() < 1e-9, "initial violation {v}");
        }

        let cfg = IntegratorConfig::rk4(1e-3, (0.0, 2.0));
        let traj = integrate(ledger.field(), &initial, &cfg, pre.env()).unwrap();
        for (label, worst) in ledger.drift(&traj).unwrap() {
            assert!(worst < 1e-4, "{label} drifted to {worst}");
        }
    }
}
