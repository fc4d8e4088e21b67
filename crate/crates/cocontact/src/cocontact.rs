//! Cocontact structures and Hamiltonian dynamics on them.
//!
//! A cocontact structure on a `(2n+2)`-dimensional chart is a pair of
//! one-forms `(tau, eta)` with `tau` closed and
//! `tau ∧ eta ∧ (d eta)^n` a volume form. It carries two Reeb fields,
//! singled out by
//!
//! ```text
//! i(R_t) tau = 1   i(R_t) eta = 0   i(R_t) d eta = 0
//! i(R_s) tau = 0   i(R_s) eta = 1   i(R_s) d eta = 0
//! ```
//!
//! and a bundle isomorphism
//! `b(X) = (i(X) tau) tau + i(X) d eta + (i(X) eta) eta` whose inverse
//! (the sharp map) turns a Hamiltonian function into its evolution field.
//! Degenerate pairs with constant even rank are reported as precocontact
//! and handled by the constraint machinery in [`crate::precocontact`].

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::Chart;
use crate::dynamics::{flow_residuals, ResidualSpec, ResidualTable, Trajectory};
use crate::error::{Error, Result};
use crate::exterior::{
    apply_flat, differential, flat_matrix, volume_form, DifferentialForm, VectorFieldExpr,
};
use crate::probe::{
    distance_from_span, eval_matrix, eval_vector, lu_solve, nullspace, probe_bindings, rank,
    svd_solve, PROBE_COUNT,
};
use crate::solve::solve_square;
use crate::symlang::eval::Bindings;
use crate::symlang::zero::is_identically_zero;
use crate::symlang::Expr;

/// Numeric cutoff below which the volume coefficient counts as degenerate.
pub const VOLUME_TOL: f64 = 1e-9;
/// Tolerance for the numeric isotropy/coisotropy decisions.
pub const CLASSIFY_TOL: f64 = 1e-7;

/// Outcome of checking a `(tau, eta)` pair.
#[derive(Clone, Debug, PartialEq)]
pub enum StructureVerdict {
    /// Nondegenerate: the flat map is an isomorphism.
    Cocontact,
    /// Constant even rank `2r + 2 < dim`; the flat map has a kernel.
    Precocontact { class: usize },
    /// Not a structure at all (for instance `tau` fails to close).
    Invalid { reason: String },
}

/// Check whether `(tau, eta)` is cocontact, precocontact, or neither.
/// `env` supplies parameter values and externals for the numeric probes.
pub fn verify_cocontact(
    tau: &DifferentialForm,
    eta: &DifferentialForm,
    env: &Bindings,
) -> Result<StructureVerdict> {
    if tau.degree() != 1 || eta.degree() != 1 {
        return Ok(StructureVerdict::Invalid {
            reason: "tau and eta must be one-forms".to_string(),
        });
    }
    let chart = tau.chart();
    if chart.dim() % 2 != 0 {
        return Ok(StructureVerdict::Invalid {
            reason: format!("chart dimension {} is odd", chart.dim()),
        });
    }
    if !tau.exterior_derivative().is_zero_form() {
        return Ok(StructureVerdict::Invalid {
            reason: "tau is not closed".to_string(),
        });
    }
    let vol = volume_form(tau, eta)?;
    let probes = probe_bindings(chart, env, PROBE_COUNT);
    let top: Vec<usize> = (0..chart.dim()).collect();
    let coeff = vol.coefficient(&top);
    let mut nondegenerate = true;
    for b in &probes {
        if coeff.evaluate(b)?.abs() <= VOLUME_TOL {
            nondegenerate = false;
            break;
        }
    }
    if nondegenerate {
        return Ok(StructureVerdict::Cocontact);
    }
    // Degenerate: classify by the rank of the flat matrix.
    let m = flat_matrix(tau, eta)?;
    let mut ranks = Vec::with_capacity(probes.len());
    for b in &probes {
        ranks.push(rank(&eval_matrix(&m, b)?));
    }
    let class = ranks[0];
    if ranks.iter().any(|&r| r != class) {
        return Err(Error::NonConstantRank(format!(
            "flat map rank varies over probe points: {ranks:?}"
        )));
    }
    if class % 2 != 0 || class < 2 {
        return Ok(StructureVerdict::Invalid {
            reason: format!(
                "flat map has constant rank {class}; an admissible structure needs even rank at least 2"
            ),
        });
    }
    Ok(StructureVerdict::Precocontact { class })
}

/// Solve for the Reeb pair of a structure whose flat matrix kernel is
/// spanned by the coordinate directions in `kernel` (empty for cocontact).
/// The defining contractions are verified symbolically before returning.
pub(crate) fn reeb_from_structure(
    chart: &Arc<Chart>,
    tau: &DifferentialForm,
    eta: &DifferentialForm,
    kernel: &[usize],
) -> Result<(VectorFieldExpr, VectorFieldExpr)> {
    let deta = eta.exterior_derivative();
    let pair = if is_darboux(chart, tau, eta) {
        (
            VectorFieldExpr::basis(chart, chart.time_index()),
            VectorFieldExpr::basis(chart, chart.action_index()),
        )
    } else {
        let m = flat_matrix(tau, eta)?;
        let keep: Vec<usize> = (0..chart.dim()).filter(|i| !kernel.contains(i)).collect();
        let tau_c = tau.one_form_coefficients()?;
        let eta_c = eta.one_form_coefficients()?;
        for &k in kernel {
            if !tau_c[k].is_zero() || !eta_c[k].is_zero() {
                return Err(Error::KernelNotAligned(format!(
                    "tau or eta has a component along the kernel direction `{}`",
                    chart.name(k)
                )));
            }
        }
        let reduced: Vec<Vec<Expr>> = keep
            .iter()
            .map(|&b| keep.iter().map(|&a| m[b][a].clone()).collect())
            .collect();
        let solve_into = |rhs_full: &[Expr]| -> Result<VectorFieldExpr> {
            let rhs: Vec<Expr> = keep.iter().map(|&b| rhs_full[b].clone()).collect();
            let x = solve_square(&reduced, &rhs)?;
            let mut comps = vec![Expr::zero(); chart.dim()];
            for (slot, &a) in keep.iter().enumerate() {
                comps[a] = x[slot].clone();
            }
            VectorFieldExpr::from_components(chart, comps)
        };
        (solve_into(&tau_c)?, solve_into(&eta_c)?)
    };
    verify_reeb(tau, eta, &deta, &pair.0, &pair.1)?;
    Ok(pair)
}

pub(crate) fn verify_reeb(
    tau: &DifferentialForm,
    eta: &DifferentialForm,
    deta: &DifferentialForm,
    r_t: &VectorFieldExpr,
    r_s: &VectorFieldExpr,
) -> Result<()> {
    let checks: [(&str, Expr); 4] = [
        ("i(R_t) tau = 1", tau.pair(r_t)? - Expr::one()),
        ("i(R_t) eta = 0", eta.pair(r_t)?),
        ("i(R_s) tau = 0", tau.pair(r_s)?),
        ("i(R_s) eta = 1", eta.pair(r_s)? - Expr::one()),
    ];
    for (what, residue) in checks {
        if !is_identically_zero(&residue) {
            return Err(Error::InvalidStructure(format!(
                "Reeb condition {what} fails: residue {residue}"
            )));
        }
    }
    for (what, field) in [("R_t", r_t), ("R_s", r_s)] {
        let contraction = deta.interior_product(field)?;
        if !contraction.is_zero_form() {
            return Err(Error::InvalidStructure(format!(
                "Reeb condition i({what}) d eta = 0 fails: {contraction}"
            )));
        }
    }
    Ok(())
}

/// True when the chart is a momentum chart carrying exactly the canonical
/// forms `tau = dt` and `eta = ds - p_i dq^i`.
pub fn is_darboux(chart: &Arc<Chart>, tau: &DifferentialForm, eta: &DifferentialForm) -> bool {
    if !chart.momentum_chart() {
        return false;
    }
    let dt = DifferentialForm::coordinate_differential(chart, chart.time_index());
    if tau != &dt {
        return false;
    }
    let mut canonical =
        DifferentialForm::coordinate_differential(chart, chart.action_index());
    for (q, p) in chart.pairs() {
        let dq = DifferentialForm::coordinate_differential(chart, q);
        canonical = canonical
            .sub(&dq.scale(&Expr::sym(chart.name(p))))
            .expect("same chart");
    }
    eta == &canonical
}

/// A verified cocontact structure with a Hamiltonian on it.
#[derive(Clone)]
pub struct CocontactSystem {
    chart: Arc<Chart>,
    tau: DifferentialForm,
    eta: DifferentialForm,
    deta: DifferentialForm,
    hamiltonian: Expr,
    r_t: VectorFieldExpr,
    r_s: VectorFieldExpr,
    darboux: bool,
    env: Bindings,
}

impl CocontactSystem {
    /// Verify `(tau, eta)` and assemble the system; degenerate structures
    /// are rejected here and belong to the precocontact machinery.
    pub fn new(
        tau: DifferentialForm,
        eta: DifferentialForm,
        hamiltonian: Expr,
        env: Bindings,
    ) -> Result<CocontactSystem> {
        match verify_cocontact(&tau, &eta, &env)? {
            StructureVerdict::Cocontact => {}
            StructureVerdict::Precocontact { class } => {
                return Err(Error::Degenerate {
                    context: "cocontact system construction".to_string(),
                    class,
                })
            }
            StructureVerdict::Invalid { reason } => {
                return Err(Error::InvalidStructure(reason))
            }
        }
        let chart = tau.chart().clone();
        let (r_t, r_s) = reeb_from_structure(&chart, &tau, &eta, &[])?;
        let darboux = is_darboux(&chart, &tau, &eta);
        let deta = eta.exterior_derivative();
        Ok(CocontactSystem {
            chart,
            tau,
            eta,
            deta,
            hamiltonian,
            r_t,
            r_s,
            darboux,
            env,
        })
    }

    /// Canonical structure on a momentum chart: `tau = dt`,
    /// `eta = ds - p_i dq^i`.
    pub fn canonical_forms(chart: &Arc<Chart>) -> Result<(DifferentialForm, DifferentialForm)> {
        if !chart.momentum_chart() {
            return Err(Error::Chart(
                "canonical forms need a momentum chart".to_string(),
            ));
        }
        let tau = DifferentialForm::coordinate_differential(chart, chart.time_index());
        let mut eta = DifferentialForm::coordinate_differential(chart, chart.action_index());
        for (q, p) in chart.pairs() {
            let dq = DifferentialForm::coordinate_differential(chart, q);
            eta = eta.sub(&dq.scale(&Expr::sym(chart.name(p))))?;
        }
        Ok((tau, eta))
    }

    /// System on the canonical structure of the given momentum chart.
    pub fn canonical(chart: &Arc<Chart>, hamiltonian: Expr, env: Bindings) -> Result<Self> {
        let (tau, eta) = Self::canonical_forms(chart)?;
        Self::new(tau, eta, hamiltonian, env)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn tau(&self) -> &DifferentialForm {
        &self.tau
    }

    pub fn eta(&self) -> &DifferentialForm {
        &self.eta
    }

    pub fn deta(&self) -> &DifferentialForm {
        &self.deta
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    pub fn env(&self) -> &Bindings {
        &self.env
    }

    pub fn is_darboux_chart(&self) -> bool {
        self.darboux
    }

    /// The Reeb pair `(R_t, R_s)`.
    pub fn reeb_fields(&self) -> (&VectorFieldExpr, &VectorFieldExpr) {
        (&self.r_t, &self.r_s)
    }

    /// The one-form `b(X)`.
    pub fn flat_map(&self, x: &VectorFieldExpr) -> Result<DifferentialForm> {
        apply_flat(&self.tau, &self.eta, x)
    }

    /// Invert the flat map symbolically.
    pub fn sharp_map(&self, alpha: &DifferentialForm) -> Result<VectorFieldExpr> {
        let m = flat_matrix(&self.tau, &self.eta)?;
        let x = solve_square(&m, &alpha.one_form_coefficients()?)?;
        VectorFieldExpr::from_components(&self.chart, x)
    }

    /// Invert the flat map numerically at a point.
    pub fn sharp_at(&self, alpha: &DifferentialForm, point: &Bindings) -> Result<Vec<f64>> {
        let m = flat_matrix(&self.tau, &self.eta)?;
        let b = self.env.merged_with(point);
        let m_num = eval_matrix(&m, &b)?;
        let rhs = eval_vector(&alpha.one_form_coefficients()?, &b)?;
        Ok(lu_solve(&m_num, &rhs)?.iter().copied().collect())
    }

    /// `Lambda(alpha) = sharp(alpha) - alpha(R_s) R_s - alpha(R_t) R_t`,
    /// the bivector part of the structure applied to a one-form.
    pub fn lambda_sharp(&self, alpha: &DifferentialForm) -> Result<VectorFieldExpr> {
        let mut out = self.sharp_map(alpha)?;
        out = out.add(&self.r_s.scale(&-alpha.pair(&self.r_s)?))?;
        out.add(&self.r_t.scale(&-alpha.pair(&self.r_t)?))
    }

    /// Jacobi bracket `{f, g} = Lambda(df, dg) + f E(g) - g E(f)` with
    /// `Lambda(a, b) = -d eta(#a, #b)` and `E = -R_s`. In canonical
    /// coordinates:
    ///
    /// ```text
    /// {f, g} = df/dp dg/dq - df/dq dg/dp
    ///        + p (df/dp dg/ds - df/ds dg/dp)
    ///        - f dg/ds + g df/ds
    /// ```
    pub fn jacobi_bracket(&self, f: &Expr, g: &Expr) -> Result<Expr> {
        if !self.darboux {
            return Err(Error::NonDarboux(
                "the Jacobi bracket is evaluated in canonical coordinates".to_string(),
            ));
        }
        let s = self.chart.action_name();
        let f_s = f.differentiate(s);
        let g_s = g.differentiate(s);
        let mut acc = g * &f_s - f * &g_s;
        for (qi, pi) in self.chart.pairs() {
            let q = self.chart.name(qi);
            let p = self.chart.name(pi);
            let f_q = f.differentiate(q);
            let f_p = f.differentiate(p);
            let g_q = g.differentiate(q);
            let g_p = g.differentiate(p);
            acc = acc + &f_p * &g_q - &f_q * &g_p
                + Expr::sym(p) * (&f_p * &g_s - &f_s * &g_p);
        }
        Ok(acc)
    }

    /// The covector `gamma_H` whose sharp is the evolution field:
    /// `dH - (R_s(H) + H) eta + (1 - R_t(H)) tau`.
    pub fn gamma(&self) -> Result<DifferentialForm> {
        let h = &self.hamiltonian;
        let dh = differential(&self.chart, h);
        let dissipation = self.r_s.lie_scalar(h) + h;
        let drive = Expr::one() - self.r_t.lie_scalar(h);
        dh.add(&self.eta.scale(&-dissipation))?
            .add(&self.tau.scale(&drive))
    }

    /// The Hamiltonian evolution field `X_H`, satisfying
    /// `b(X_H) = gamma_H`. In canonical coordinates its components are
    ///
    /// ```text
    /// t' = 1      q' = dH/dp      p' = -(dH/dq + p dH/ds)
    /// s' = p dH/dp - H
    /// ```
    pub fn hamiltonian_vector_field(&self) -> Result<VectorFieldExpr> {
        if self.darboux {
            let h = &self.hamiltonian;
            let s = self.chart.action_name();
            let h_s = h.differentiate(s);
            let mut comps = vec![Expr::zero(); self.chart.dim()];
            comps[self.chart.time_index()] = Expr::one();
            let mut s_dot = -h.clone();
            for (qi, pi) in self.chart.pairs() {
                let q = self.chart.name(qi);
                let p = self.chart.name(pi);
                let h_p = h.differentiate(p);
                comps[qi] = h_p.clone();
                comps[pi] = -(h.differentiate(q) + Expr::sym(p) * &h_s);
                s_dot = s_dot + Expr::sym(p) * h_p;
            }
            comps[self.chart.action_index()] = s_dot;
            return VectorFieldExpr::from_components(&self.chart, comps);
        }
        let m = flat_matrix(&self.tau, &self.eta)?;
        let gamma = self.gamma()?;
        let x = solve_square(&m, &gamma.one_form_coefficients()?)?;
        VectorFieldExpr::from_components(&self.chart, x)
    }

    /// Residuals of `x' = X_H(x)` along a uniform trajectory.
    pub fn hamilton_residual(&self, traj: &Trajectory) -> Result<ResidualTable> {
        let field = self.hamiltonian_vector_field()?;
        let specs: Vec<ResidualSpec> = (0..self.chart.dim())
            .map(|i| ResidualSpec {
                label: self.chart.name(i).to_string(),
                value: Expr::sym(self.chart.name(i)),
                rate: field.component(i).clone(),
            })
            .collect();
        flow_residuals(traj, &specs, &self.env)
    }

    /// Classify a submanifold with respect to the structure.
    pub fn classify_submanifold(&self, spec: &SubmanifoldSpec) -> Result<SubmanifoldReport> {
        match spec {
            SubmanifoldSpec::Implicit { constraints } => self.classify_implicit(constraints),
            SubmanifoldSpec::Parametric { params, map } => self.classify_parametric(params, map),
        }
    }

    fn classify_implicit(&self, constraints: &[Expr]) -> Result<SubmanifoldReport> {
        let dim = self.chart.dim();
        let names = self.chart.names();
        let jac: Vec<Vec<Expr>> = constraints
            .iter()
            .map(|c| names.iter().map(|n| c.differentiate(n)).collect())
            .collect();
        let points = self.implicit_probes(constraints, &jac)?;
        let mut dim_n: Option<usize> = None;
        let mut isotropic = true;
        let mut coisotropic = true;
        for b in &points {
            let j = eval_matrix(&jac, b)?;
            let r = rank(&j);
            let d = dim - r;
            if *dim_n.get_or_insert(d) != d {
                return Err(Error::NonConstantRank(
                    "submanifold dimension varies over probe points".to_string(),
                ));
            }
            let tangent_basis = nullspace(&j);
            let tangent = basis_matrix(dim, &tangent_basis);
            let tau_v = eval_vector(&self.tau.one_form_coefficients()?, b)?;
            let eta_v = eval_vector(&self.eta.one_form_coefficients()?, b)?;
            for v in &tangent_basis {
                if tau_v.dot(v).abs() > CLASSIFY_TOL || eta_v.dot(v).abs() > CLASSIFY_TOL {
                    isotropic = false;
                }
            }
            // The annihilator of the tangent space is the row space of the
            // constraint Jacobian.
            let annihilator = row_space(&j);
            for alpha in &annihilator {
                if !self.lambda_sharp_tangent(alpha, &tangent, b)? {
                    coisotropic = false;
                }
            }
            if !isotropic && !coisotropic {
                break;
            }
        }
        Ok(report(dim_n.unwrap_or(0), self.chart.half_dim(), isotropic, coisotropic))
    }

    fn classify_parametric(
        &self,
        params: &[String],
        map: &BTreeMap<String, Expr>,
    ) -> Result<SubmanifoldReport> {
        
        let names = self.chart.names();
        for n in &names {
            if !map.contains_key(n) {
                return Err(Error::InvalidStructure(format!(
                    "parametric submanifold must map every coordinate; `{n}` is missing"
                )));
            }
        }
        let subs: BTreeMap<String, Expr> =
            map.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        // Symbolic pullbacks: u ranges over the parameters.
        let mut tau_pull = Vec::with_capacity(params.len());
        let mut eta_pull = Vec::with_capacity(params.len());
        let tau_c = self.tau.one_form_coefficients()?;
        let eta_c = self.eta.one_form_coefficients()?;
        for u in params {
            let mut t_acc = Expr::zero();
            let mut e_acc = Expr::zero();
            for (i, n) in names.iter().enumerate() {
                let du = map[n].differentiate(u);
                if du.is_zero() {
                    continue;
                }
                t_acc = t_acc + tau_c[i].substitute(&subs) * &du;
                e_acc = e_acc + eta_c[i].substitute(&subs) * &du;
            }
            tau_pull.push(t_acc);
            eta_pull.push(e_acc);
        }
        let isotropic = tau_pull.iter().all(is_identically_zero)
            && eta_pull.iter().all(is_identically_zero);

        // Numeric probes: sample the parameters, then land on the chart.
        let jac_syms: Vec<Vec<Expr>> = names
            .iter()
            .map(|n| params.iter().map(|u| map[n].differentiate(u)).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(crate::probe::PROBE_SEED ^ 0x5u64);
        let mut coisotropic = true;
        for _ in 0..PROBE_COUNT {
            let mut b = self.env.clone();
            for u in params {
                b.set(u, 2.0 * rng.gen::<f64>() - 1.0);
            }
            let tangent = eval_matrix(&jac_syms, &b)?;
            if rank(&tangent) != params.len() {
                return Err(Error::RankDeficient(format!(
                    "parametric map drops rank below {}",
                    params.len()
                )));
            }
            let mut point = self.env.clone();
            for n in &names {
                point.set(n, map[n].evaluate(&b)?);
            }
            // Annihilator of the tangent columns.
            let annihilator = nullspace(&tangent.transpose());
            for alpha in &annihilator {
                if !self.lambda_sharp_tangent(alpha, &tangent, &point)? {
                    coisotropic = false;
                }
            }
            if !coisotropic {
                break;
            }
        }
        Ok(report(params.len(), self.chart.half_dim(), isotropic, coisotropic))
    }

    /// Whether `Lambda(alpha)` at the point lies in the span of `tangent`.
    fn lambda_sharp_tangent(
        &self,
        alpha: &DVector<f64>,
        tangent: &DMatrix<f64>,
        point: &Bindings,
    ) -> Result<bool> {
        let m = flat_matrix(&self.tau, &self.eta)?;
        let m_num = eval_matrix(&m, point)?;
        let sharp = lu_solve(&m_num, alpha)?;
        let rt = eval_vector(self.r_t.components(), point)?;
        let rs = eval_vector(self.r_s.components(), point)?;
        let w = &sharp - rs.clone() * alpha.dot(&rs) - rt.clone() * alpha.dot(&rt);
        let scale = w.amax().max(1.0);
        Ok(distance_from_span(tangent, &w) <= CLASSIFY_TOL * scale)
    }

    fn implicit_probes(
        &self,
        constraints: &[Expr],
        jac: &[Vec<Expr>],
    ) -> Result<Vec<Bindings>> {
        let starts = probe_bindings(&self.chart, &self.env, 4 * PROBE_COUNT);
        let names = self.chart.names();
        let mut found = Vec::new();
        'starts: for start in starts {
            let mut b = start;
            for _ in 0..50 {
                let xi = eval_vector(constraints, &b)?;
                if xi.amax() < 1e-11 {
                    found.push(b);
                    if found.len() >= 8 {
                        break 'starts;
                    }
                    continue 'starts;
                }
                let j = eval_matrix(jac, &b)?;
                let Ok(dx) = svd_solve(&j, &xi) else {
                    continue 'starts;
                };
                let mut size = 0.0f64;
                for (i, n) in names.iter().enumerate() {
                    let v = b.get(n).unwrap_or(0.0) - dx[i];
                    size = size.max(v.abs());
                    b.set(n, v);
                }
                if size > 1e4 {
                    continue 'starts;
                }
            }
        }
        if found.is_empty() {
            return Err(Error::InconsistentProbe(
                "no probe points found on the constraint set".to_string(),
            ));
        }
        Ok(found)
    }
}

fn basis_matrix(dim: usize, basis: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, basis.len());
    for (j, v) in basis.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

fn row_space(j: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let svd = j.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let max = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let mut rows = Vec::new();
    for i in 0..svd.singular_values.len() {
        if max > 0.0 && svd.singular_values[i] > crate::probe::RANK_REL_TOL * max {
            rows.push(v_t.row(i).transpose());
        }
    }
    rows
}

fn report(dim_n: usize, n: usize, isotropic: bool, coisotropic: bool) -> SubmanifoldReport {
    let class = if isotropic && dim_n == n {
        SubmanifoldClass::Legendrian
    } else if isotropic {
        SubmanifoldClass::Isotropic
    } else if coisotropic {
        SubmanifoldClass::Coisotropic
    } else {
        SubmanifoldClass::Generic
    };
    SubmanifoldReport {
        class,
        dimension: dim_n,
    }
}

/// A submanifold handed to [`CocontactSystem::classify_submanifold`].
#[derive(Clone, Debug)]
pub enum SubmanifoldSpec {
    /// Zero set of constraint functions.
    Implicit { constraints: Vec<Expr> },
    /// Image of a parametrization: every chart coordinate as an expression
    /// in the parameters.
    Parametric {
        params: Vec<String>,
        map: BTreeMap<String, Expr>,
    },
}

/// Position of a submanifold relative to the structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubmanifoldClass {
    /// `tau` and `eta` both vanish on it, at the maximal dimension `n`.
    Legendrian,
    /// `tau` and `eta` both vanish on it.
    Isotropic,
    /// `Lambda` maps its conormals into its tangent spaces.
    Coisotropic,
    /// None of the special positions.
    Generic,
}

/// Verdict with the probed dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubmanifoldReport {
    pub class: SubmanifoldClass,
    pub dimension: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlang::zero::{exprs_equal, random_polynomial};

    fn canonical_system(h: Expr) -> CocontactSystem {
        let chart = Arc::new(Chart::canonical(1).unwrap());
        CocontactSystem::canonical(&chart, h, Bindings::new()).unwrap()
    }

    fn oscillator() -> CocontactSystem {
        // H = p^2/(2m) + (k/2) q^2 - q f(t) + (gamma/m) s
        let h = Expr::powi(Expr::sym("p"), 2) / (Expr::int(2) * Expr::sym("m"))
            + Expr::sym("k") / Expr::int(2) * Expr::powi(Expr::sym("q"), 2)
            - Expr::sym("q") * Expr::ext("f", "t", 0)
            + Expr::sym("gamma") / Expr::sym("m") * Expr::sym("s");
        let chart = Arc::new(Chart::canonical(1).unwrap());
        let env = Bindings::new()
            .with("m", 1.0)
            .with("k", 1.0)
            .with("gamma", 0.3)
            .with_external("f", crate::symlang::zero::external_test_family("f"));
        CocontactSystem::canonical(&chart, h, env).unwrap()
    }

    #[test]
    fn canonical_structure_verifies_and_has_coordinate_reeb_fields() {
        for n in [1usize, 2] {
            let chart = Arc::new(Chart::canonical(n).unwrap());
            let sys =
                CocontactSystem::canonical(&chart, Expr::zero(), Bindings::new()).unwrap();
            let (r_t, r_s) = sys.reeb_fields();
            assert_eq!(r_t, &VectorFieldExpr::basis(&chart, chart.time_index()));
            assert_eq!(r_s, &VectorFieldExpr::basis(&chart, chart.action_index()));
        }
    }

    #[test]
    fn scaled_momentum_chart_still_verifies_via_the_solver() {
        // eta = ds - 2 p dq is a cocontact structure but not the canonical
        // form, so the Reeb pair comes from the symbolic solve.
        let chart = Arc::new(Chart::canonical(1).unwrap());
        let tau = DifferentialForm::coordinate_differential(&chart, 0);
        let ds = DifferentialForm::coordinate_differential(&chart, 3);
        let dq = DifferentialForm::coordinate_differential(&chart, 1);
        let eta = ds
            .sub(&dq.scale(&(Expr::int(2) * Expr::sym("p"))))
            .unwrap();
        assert_eq!(
            verify_cocontact(&tau, &eta, &Bindings::new()).unwrap(),
            StructureVerdict::Cocontact
        );
        let (r_t, r_s) = reeb_from_structure(&chart, &tau, &eta, &[]).unwrap();
        assert_eq!(r_t, VectorFieldExpr::basis(&chart, 0));
        assert_eq!(r_s, VectorFieldExpr::basis(&chart, 3));
    }

    #[test]
    fn degenerate_eta_is_reported_as_precocontact() {
        let chart = Arc::new(Chart::canonical(1).unwrap());
        let tau = DifferentialForm::coordinate_differential(&chart, 0);
        let eta = DifferentialForm::coordinate_differential(&chart, 3);
        match verify_cocontact(&tau, &eta, &Bindings::new()).unwrap() {
            StructureVerdict::Precocontact { class } => assert_eq!(class, 2),
            other => panic!("expected precocontact, got {other:?}"),
        }
    }

    #[test]
    fn non_closed_tau_is_invalid() {
        let chart = Arc::new(Chart::canonical(1).unwrap());
        let dt = DifferentialForm::coordinate_differential(&chart, 0);
        let tau = dt.scale(&Expr::sym("q"));
        let (_, eta) = CocontactSystem::canonical_forms(&chart).unwrap();
        match verify_cocontact(&tau, &eta, &Bindings::new()).unwrap() {
            StructureVerdict::Invalid { reason } => assert!(reason.contains("closed")),
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_bracket_matches_the_coordinate_table() {
        let sys = canonical_system(Expr::zero());
        let q = Expr::sym("q");
        let p = Expr::sym("p");
        let s = Expr::sym("s");
        assert!(exprs_equal(
            &sys.jacobi_bracket(&q, &p).unwrap(),
            &-Expr::one()
        ));
        assert!(exprs_equal(&sys.jacobi_bracket(&q, &s).unwrap(), &-q.clone()));
        assert!(is_identically_zero(&sys.jacobi_bracket(&p, &s).unwrap()));
        assert!(is_identically_zero(&sys.jacobi_bracket(&q, &q).unwrap()));
        assert!(is_identically_zero(&sys.jacobi_bracket(&p, &p).unwrap()));
    }

    #[test]
    fn jacobi_bracket_agrees_with_the_structure_route() {
        // {f, g} = Lambda(df)(g) + f E(g) - g E(f) with E = -R_s.
        let sys = canonical_system(Expr::zero());
        let syms = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..4 {
            let f = random_polynomial(&syms, 2, 3, &mut rng);
            let g = random_polynomial(&syms, 2, 3, &mut rng);
            let lam = sys.lambda_sharp(&differential(sys.chart(), &f)).unwrap();
            let e_f = -f.differentiate("s");
            let e_g = -g.differentiate("s");
            let abstract_route = lam.lie_scalar(&g) + &f * e_g - &g * e_f;
            let coords = sys.jacobi_bracket(&f, &g).unwrap();
            assert!(
                is_identically_zero(&(coords - abstract_route)),
                "coordinate and structure routes disagree"
            );
        }
    }

    #[test]
    fn jacobi_bracket_is_antisymmetric_and_weakly_leibniz() {
        let sys = canonical_system(Expr::zero());
        let syms = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let f = random_polynomial(&syms, 2, 3, &mut rng);
            let g = random_polynomial(&syms, 2, 3, &mut rng);
            let h = random_polynomial(&syms, 2, 3, &mut rng);
            let fg = sys.jacobi_bracket(&f, &g).unwrap();
            let gf = sys.jacobi_bracket(&g, &f).unwrap();
            assert!(is_identically_zero(&(fg + gf)));
            // The bracket fails the Leibniz rule by exactly
            // f g dh/ds, the signature of a Jacobi (not Poisson) structure.
            let lhs = sys.jacobi_bracket(&(&f * &g), &h).unwrap();
            let deviation = lhs
                - &f * sys.jacobi_bracket(&g, &h).unwrap()
                - &g * sys.jacobi_bracket(&f, &h).unwrap()
                - &f * &g * h.differentiate("s");
            assert!(is_identically_zero(&deviation), "deviation {deviation}");
        }
    }

    #[test]
    fn jacobi_identity_holds_on_a_sample_triple() {
        let sys = canonical_system(Expr::zero());
        let syms = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let f = random_polynomial(&syms, 2, 2, &mut rng);
        let g = random_polynomial(&syms, 2, 2, &mut rng);
        let h = random_polynomial(&syms, 2, 2, &mut rng);
        let cycle = sys
            .jacobi_bracket(&f, &sys.jacobi_bracket(&g, &h).unwrap())
            .unwrap()
            + sys
                .jacobi_bracket(&g, &sys.jacobi_bracket(&h, &f).unwrap())
                .unwrap()
            + sys
                .jacobi_bracket(&h, &sys.jacobi_bracket(&f, &g).unwrap())
                .unwrap();
        assert!(is_identically_zero(&cycle), "cycle {cycle}");
    }

    #[test]
    fn oscillator_field_matches_the_component_formulas() {
        let sys = oscillator();
        let x = sys.hamiltonian_vector_field().unwrap();
        let m = Expr::sym("m");
        let k = Expr::sym("k");
        let gam = Expr::sym("gamma");
        let q = Expr::sym("q");
        let p = Expr::sym("p");
        
        let f = Expr::ext("f", "t", 0);
        assert!(exprs_equal(x.component_named("t").unwrap(), &Expr::one()));
        assert!(exprs_equal(
            x.component_named("q").unwrap(),
            &(&p / &m)
        ));
        assert!(exprs_equal(
            x.component_named("p").unwrap(),
            &(-(&k * &q - &f + &p * &gam / &m))
        ));
        let h = sys.hamiltonian();
        let expected_s = &p * &p / &m - h;
        assert!(exprs_equal(x.component_named("s").unwrap(), &expected_s));
    }

    #[test]
    fn flat_of_the_field_recovers_gamma() {
        let sys = oscillator();
        let x = sys.hamiltonian_vector_field().unwrap();
        let gamma = sys.gamma().unwrap();
        let flat = sys.flat_map(&x).unwrap();
        assert!(flat.sub(&gamma).unwrap().is_zero_form());
    }

    #[test]
    fn field_decomposes_through_lambda_and_the_dissipation_direction() {
        // X_H - R_t = Lambda(dH) + H E with E = -R_s.
        let sys = oscillator();
        let x = sys.hamiltonian_vector_field().unwrap();
        let dh = differential(sys.chart(), sys.hamiltonian());
        let lam = sys.lambda_sharp(&dh).unwrap();
        let (r_t, r_s) = sys.reeb_fields();
        let rhs = lam.add(&r_s.scale(&-sys.hamiltonian().clone())).unwrap();
        let lhs = x.add(&r_t.scale(&-Expr::one())).unwrap();
        for i in 0..sys.chart().dim() {
            assert!(
                exprs_equal(lhs.component(i), rhs.component(i)),
                "component {i}: {} vs {}",
                lhs.component(i),
                rhs.component(i)
            );
        }
    }

    #[test]
    fn sharp_recovers_the_coordinate_table() {
        let sys = canonical_system(Expr::zero());
        let chart = sys.chart().clone();
        let p = Expr::sym("p");
        // sharp(dq) = -d/dp
        let dq = DifferentialForm::coordinate_differential(&chart, 1);
        let sharp_dq = sys.sharp_map(&dq).unwrap();
        assert!(exprs_equal(sharp_dq.component(2), &-Expr::one()));
        // sharp(dp) = p d/ds + d/dq
        let dp = DifferentialForm::coordinate_differential(&chart, 2);
        let sharp_dp = sys.sharp_map(&dp).unwrap();
        assert!(exprs_equal(sharp_dp.component(1), &Expr::one()));
        assert!(exprs_equal(sharp_dp.component(3), &p));
        // flat then sharp is the identity on a random field.
        let syms = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let x = VectorFieldExpr::from_components(
            &chart,
            (0..4)
                .map(|_| random_polynomial(&syms, 1, 2, &mut rng))
                .collect(),
        )
        .unwrap();
        let back = sys.sharp_map(&sys.flat_map(&x).unwrap()).unwrap();
        for i in 0..4 {
            assert!(exprs_equal(back.component(i), x.component(i)));
        }
    }

    #[test]
    fn classification_distinguishes_the_standard_cases() {
        let sys = canonical_system(Expr::zero());
        // Coisotropic hypersurface q = 0.
        let rep = sys
            .classify_submanifold(&SubmanifoldSpec::Implicit {
                constraints: vec![Expr::sym("q")],
            })
            .unwrap();
        assert_eq!(rep.class, SubmanifoldClass::Coisotropic);
        assert_eq!(rep.dimension, 3);
        // Generic: q = p = 0.
        let rep = sys
            .classify_submanifold(&SubmanifoldSpec::Implicit {
                constraints: vec![Expr::sym("q"), Expr::sym("p")],
            })
            .unwrap();
        assert_eq!(rep.class, SubmanifoldClass::Generic);
        // Isotropic point: everything pinned.
        let rep = sys
            .classify_submanifold(&SubmanifoldSpec::Implicit {
                constraints: vec![
                    Expr::sym("t"),
                    Expr::sym("q"),
                    Expr::sym("p"),
                    Expr::sym("s"),
                ],
            })
            .unwrap();
        assert_eq!(rep.class, SubmanifoldClass::Isotropic);
        assert_eq!(rep.dimension, 0);
        // Legendrian graph: fixed time, p = W'(q), s = W(q) with W = q^3.
        let w = Expr::powi(Expr::sym("u"), 3);
        let mut map = BTreeMap::new();
        map.insert("t".to_string(), Expr::num(0.25));
        map.insert("q".to_string(), Expr::sym("u"));
        map.insert("p".to_string(), w.differentiate("u"));
        map.insert("s".to_string(), w);
        let rep = sys
            .classify_submanifold(&SubmanifoldSpec::Parametric {
                params: vec!["u".to_string()],
                map,
            })
            .unwrap();
        assert_eq!(rep.class, SubmanifoldClass::Legendrian);
        assert_eq!(rep.dimension, 1);
    }

    #[test]
    fn hamilton_residuals_vanish_along_integrated_flow() {
        use crate::dynamics::{integrate, state_from_map, IntegratorConfig};
        let sys = oscillator();
        // Swap the probe family external for a concrete smooth pulse.
        let mut env = Bindings::new().with("m", 1.0).with("k", 1.0).with("gamma", 0.3);
        let pulse = Expr::exp(
            -(Expr::sym("t") - Expr::one()) * (Expr::sym("t") - Expr::one())
                / Expr::num(0.02),
        );
        env.set_external("f", crate::symlang::eval::ExternalImpl::symbolic("t", pulse));
        let field = sys.hamiltonian_vector_field().unwrap();
        let initial = state_from_map(
            sys.chart(),
            &BTreeMap::from([
                ("q".to_string(), 1.0),
                ("p".to_string(), 0.0),
                ("s".to_string(), 0.0),
            ]),
        )
        .unwrap();
        let cfg = IntegratorConfig::rk4(1e-3, (0.0, 2.0));
        let traj = integrate(&field, &initial, &cfg, &env).unwrap();
        let sys2 = CocontactSystem::canonical(
            sys.chart(),
            sys.hamiltonian().clone(),
            env,
        )
        .unwrap();
        let table = sys2.hamilton_residual(&traj).unwrap();
        assert!(table.max_abs() < 1e-6, "max residual {}", table.max_abs());
    }
}
