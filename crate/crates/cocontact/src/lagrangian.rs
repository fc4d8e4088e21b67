//! Lagrangian mechanics with action dependence on velocity charts
//! `(t, q, v, s)`: Lagrangian energy, Cartan forms, the Hessian and its
//! regularity verdict, the Legendre map, Lagrangian Reeb fields, and the
//! Herglotz vector field whose integral curves satisfy
//!
//! ```text
//! d/dt (dL/dv) = dL/dq + (dL/ds)(dL/dv)      s' = L      t' = 1
//! ```
//!
//! A regular Lagrangian induces the cocontact pair `(dt, eta_L)`; a
//! singular one induces a precocontact pair and belongs to the constraint
//! machinery in [`crate::precocontact`].

use std::sync::Arc;

use crate::chart::Chart;
use crate::cocontact::CocontactSystem;
use crate::dynamics::{flow_residuals, ResidualSpec, ResidualTable, Trajectory};
use crate::error::{Error, Result};
use crate::exterior::{DifferentialForm, VectorFieldExpr};
use crate::probe::{eval_matrix, probe_bindings, rank, PROBE_COUNT};
use crate::solve::solve_square;
use crate::symlang::eval::Bindings;
use crate::symlang::Expr;

/// Rank verdict for the velocity Hessian at the probe points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularity {
    Regular,
    Singular { rank: usize },
}

/// Image of a chart point under the Legendre map `(t, q, v, s) ->
/// (t, q, dL/dv, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LegendreImagePoint {
    pub time: f64,
    pub positions: Vec<(String, f64)>,
    pub momenta: Vec<(String, f64)>,
    pub action: f64,
}

/// A Lagrangian on a velocity chart, with its derived geometry cached.
#[derive(Clone)]
pub struct LagrangianSystem {
    chart: Arc<Chart>,
    lagrangian: Expr,
    energy: Expr,
    theta: DifferentialForm,
    eta: DifferentialForm,
    hessian: Vec<Vec<Expr>>,
    regularity: Regularity,
    env: Bindings,
}

impl LagrangianSystem {
    /// Build the system and decide regularity by the Hessian rank at the
    /// probe points. A rank that varies from point to point is rejected.
    pub fn new(chart: &Arc<Chart>, lagrangian: Expr, env: Bindings) -> Result<LagrangianSystem> {
        if !chart.velocity_chart() {
            return Err(Error::Chart(
                "a Lagrangian lives on a velocity chart (t, q, v, s)".to_string(),
            ));
        }
        let pairs = chart.pairs();
        let momenta: Vec<Expr> = pairs
            .iter()
            .map(|&(_, vi)| lagrangian.differentiate(chart.name(vi)))
            .collect();

        let mut energy = -lagrangian.clone();
        for (&(_, vi), p) in pairs.iter().zip(&momenta) {
            energy = energy + Expr::sym(chart.name(vi)) * p;
        }

        let mut theta = DifferentialForm::zero(chart, 1);
        for (&(qi, _), p) in pairs.iter().zip(&momenta) {
            theta = theta.add(&DifferentialForm::coordinate_differential(chart, qi).scale(p))?;
        }
        let eta =
            DifferentialForm::coordinate_differential(chart, chart.action_index()).sub(&theta)?;

        let hessian: Vec<Vec<Expr>> = momenta
            .iter()
            .map(|p| {
                pairs
                    .iter()
                    .map(|&(_, vj)| p.differentiate(chart.name(vj)))
                    .collect()
            })
            .collect();

        let probes = probe_bindings(chart, &env, PROBE_COUNT);
        let mut ranks = Vec::with_capacity(probes.len());
        for b in &probes {
            ranks.push(rank(&eval_matrix(&hessian, b)?));
        }
        let r = ranks[0];
        if ranks.iter().any(|&x| x != r) {
            return Err(Error::NonConstantRank(format!(
                "Hessian rank varies over probe points: {ranks:?}"
            )));
        }
        let regularity = if r == pairs.len() {
            Regularity::Regular
        } else {
            Regularity::Singular { rank: r }
        };

        Ok(LagrangianSystem {
            chart: chart.clone(),
            lagrangian,
            energy,
            theta,
            eta,
            hessian,
            regularity,
            env,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    /// The Lagrangian energy `E_L = v dL/dv - L`.
    pub fn energy(&self) -> &Expr {
        &self.energy
    }

    pub fn env(&self) -> &Bindings {
        &self.env
    }

    /// Conjugate momenta `dL/dv^i`, in pair order.
    pub fn momenta(&self) -> Vec<Expr> {
        self.chart
            .pairs()
            .iter()
            .map(|&(_, vi)| self.lagrangian.differentiate(self.chart.name(vi)))
            .collect()
    }

    /// `(E_L, theta_L, eta_L, d eta_L)` with `theta_L = (dL/dv^i) dq^i`
    /// and `eta_L = ds - theta_L`.
    pub fn lagrangian_forms(
        &self,
    ) -> (&Expr, &DifferentialForm, &DifferentialForm, DifferentialForm) {
        (
            &self.energy,
            &self.theta,
            &self.eta,
            self.eta.exterior_derivative(),
        )
    }

    pub fn eta_form(&self) -> &DifferentialForm {
        &self.eta
    }

    /// The closed one-form `dt` completing `(dt, eta_L)`.
    pub fn tau_form(&self) -> DifferentialForm {
        DifferentialForm::coordinate_differential(&self.chart, self.chart.time_index())
    }

    /// The velocity Hessian `W_ij = d^2 L / dv^i dv^j` and its verdict.
    pub fn hessian(&self) -> (&[Vec<Expr>], Regularity) {
        (&self.hessian, self.regularity)
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    /// Evaluate the Legendre map at a point given by coordinate bindings.
    pub fn legendre_map(&self, point: &Bindings) -> Result<LegendreImagePoint> {
        let b = self.env.merged_with(point);
        let momenta = self.momenta();
        let mut positions = Vec::new();
        let mut images = Vec::new();
        for (&(qi, _), p) in self.chart.pairs().iter().zip(&momenta) {
            let name = self.chart.name(qi).to_string();
            positions.push((name.clone(), Expr::sym(&name).evaluate(&b)?));
            images.push((name, p.evaluate(&b)?));
        }
        Ok(LegendreImagePoint {
            time: Expr::sym(self.chart.time_name()).evaluate(&b)?,
            positions,
            momenta: images,
            action: Expr::sym(self.chart.action_name()).evaluate(&b)?,
        })
    }

    /// Check symbolically that substituting `p_i = dL/dv^i` into the
    /// canonical `ds - p_i dq^i` recovers `eta_L`.
    pub fn legendre_pullback_check(&self) -> bool {
        let mut pulled = DifferentialForm::coordinate_differential(
            &self.chart,
            self.chart.action_index(),
        );
        for (&(qi, _), p) in self.chart.pairs().iter().zip(&self.momenta()) {
            let dq = DifferentialForm::coordinate_differential(&self.chart, qi);
            match pulled.sub(&dq.scale(p)) {
                Ok(next) => pulled = next,
                Err(_) => return false,
            }
        }
        match pulled.sub(&self.eta) {
            Ok(diff) => diff.is_zero_form(),
            Err(_) => false,
        }
    }

    fn require_regular(&self, context: &str) -> Result<()> {
        if let Regularity::Singular { rank } = self.regularity {
            return Err(Error::Degenerate {
                context: context.to_string(),
                class: 2 * rank + 2,
            });
        }
        Ok(())
    }

    /// Solve `W x = rhs` symbolically: closed-form inverse for one or two
    /// degrees of freedom, elimination beyond that.
    fn solve_hessian(&self, rhs: &[Expr]) -> Result<Vec<Expr>> {
        let w = &self.hessian;
        match w.len() {
            1 => Ok(vec![&rhs[0] / &w[0][0]]),
            2 => {
                let det = &w[0][0] * &w[1][1] - &w[0][1] * &w[1][0];
                Ok(vec![
                    (&w[1][1] * &rhs[0] - &w[0][1] * &rhs[1]) / &det,
                    (&w[0][0] * &rhs[1] - &w[1][0] * &rhs[0]) / &det,
                ])
            }
            _ => solve_square(w, rhs),
        }
    }

    /// The Reeb pair of `(dt, eta_L)`:
    ///
    /// ```text
    /// R_t = d/dt - W^{ij} (d^2 L / dt dv^j) d/dv^i
    /// R_s = d/ds - W^{ij} (d^2 L / ds dv^j) d/dv^i
    /// ```
    pub fn lagrangian_reeb_fields(&self) -> Result<(VectorFieldExpr, VectorFieldExpr)> {
        self.require_regular("Reeb fields of (dt, eta_L)")?;
        let momenta = self.momenta();
        let pairs = self.chart.pairs();
        let build = |base: usize, wrt: &str| -> Result<VectorFieldExpr> {
            let rhs: Vec<Expr> = momenta.iter().map(|p| p.differentiate(wrt)).collect();
            let x = self.solve_hessian(&rhs)?;
            let mut comps = vec![Expr::zero(); self.chart.dim()];
            comps[base] = Expr::one();
            for (&(_, vi), xi) in pairs.iter().zip(&x) {
                comps[vi] = -xi.clone();
            }
            VectorFieldExpr::from_components(&self.chart, comps)
        };
        let r_t = build(self.chart.time_index(), self.chart.time_name())?;
        let r_s = build(self.chart.action_index(), self.chart.action_name())?;
        Ok((r_t, r_s))
    }

    /// The Herglotz vector field
    /// `X = d/dt + v^i d/dq^i + G^i d/dv^i + L d/ds` with
    ///
    /// ```text
    /// G^i = W^{ij} (dL/dq^j - d^2L/dt dv^j - v^k d^2L/dq^k dv^j
    ///               - L d^2L/ds dv^j + (dL/ds)(dL/dv^j))
    /// ```
    pub fn herglotz_field(&self) -> Result<VectorFieldExpr> {
        self.require_regular("Herglotz vector field")?;
        let chart = &self.chart;
        let pairs = chart.pairs();
        let momenta = self.momenta();
        let l = &self.lagrangian;
        let l_s = l.differentiate(chart.action_name());
        let rhs: Vec<Expr> = pairs
            .iter()
            .zip(&momenta)
            .map(|(&(qj, _), pj)| {
                let mut drift = pj.differentiate(chart.time_name());
                for &(qk, vk) in &pairs {
                    drift = drift
                        + Expr::sym(chart.name(vk)) * pj.differentiate(chart.name(qk));
                }
                l.differentiate(chart.name(qj)) - drift
                    - l * pj.differentiate(chart.action_name())
                    + &l_s * pj
            })
            .collect();
        let g = self.solve_hessian(&rhs)?;
        let mut comps = vec![Expr::zero(); chart.dim()];
        comps[chart.time_index()] = Expr::one();
        comps[chart.action_index()] = l.clone();
        for (&(qi, vi), gi) in pairs.iter().zip(&g) {
            comps[qi] = Expr::sym(chart.name(vi));
            comps[vi] = gi.clone();
        }
        VectorFieldExpr::from_components(chart, comps)
    }

    /// Residuals of the Herglotz equations along a uniform trajectory:
    /// one row per degree of freedom for
    /// `d/dt(dL/dv^i) - dL/dq^i - (dL/ds)(dL/dv^i)`, one for `s' - L`,
    /// one for `t' - 1`.
    pub fn herglotz_residual(&self, traj: &Trajectory) -> Result<ResidualTable> {
        let chart = &self.chart;
        let l = &self.lagrangian;
        let l_s = l.differentiate(chart.action_name());
        let mut specs: Vec<ResidualSpec> = chart
            .pairs()
            .iter()
            .zip(&self.momenta())
            .map(|(&(qi, _), p)| ResidualSpec {
                label: chart.name(qi).to_string(),
                value: p.clone(),
                rate: l.differentiate(chart.name(qi)) + &l_s * p,
            })
            .collect();
        specs.push(ResidualSpec {
            label: chart.action_name().to_string(),
            value: Expr::sym(chart.action_name()),
            rate: l.clone(),
        });
        specs.push(ResidualSpec {
            label: chart.time_name().to_string(),
            value: Expr::sym(chart.time_name()),
            rate: Expr::one(),
        });
        flow_residuals(traj, &specs, &self.env)
    }

    /// The cocontact system `(dt, eta_L, E_L)` of a regular Lagrangian.
    pub fn cocontact(&self) -> Result<CocontactSystem> {
        CocontactSystem::new(
            self.tau_form(),
            self.eta.clone(),
            self.energy.clone(),
            self.env.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocontact::{reeb_from_structure, verify_cocontact, StructureVerdict};
    use crate::dynamics::{integrate, state_from_map, IntegratorConfig};
    use crate::symlang::eval::ExternalImpl;
    use crate::symlang::zero::{exprs_equal, is_identically_zero};
    use std::collections::BTreeMap;

    fn oscillator_chart() -> Arc<Chart> {
        Arc::new(Chart::lagrangian(&["q"], &["v"]).unwrap())
    }

    fn oscillator_lagrangian() -> Expr {
        // L = (m/2) v^2 - (k/2) q^2 + q f(t) - (gamma/m) s
        Expr::sym("m") / Expr::int(2) * Expr::powi(Expr::sym("v"), 2)
            - Expr::sym("k") / Expr::int(2) * Expr::powi(Expr::sym("q"), 2)
            + Expr::sym("q") * Expr::ext("f", "t", 0)
            - Expr::sym("gamma") / Expr::sym("m") * Expr::sym("s")
    }

    fn oscillator_env() -> Bindings {
        Bindings::new()
            .with("m", 1.0)
            .with("k", 1.0)
            .with("gamma", 0.3)
            .with_external("f", crate::symlang::zero::external_test_family("f"))
    }

    fn oscillator() -> LagrangianSystem {
        LagrangianSystem::new(&oscillator_chart(), oscillator_lagrangian(), oscillator_env())
            .unwrap()
    }

    #[test]
    fn oscillator_forms_match_the_hand_expressions() {
        let sys = oscillator();
        let (energy, theta, eta, _deta) = sys.lagrangian_forms();
        let expected_energy = Expr::sym("m") / Expr::int(2) * Expr::powi(Expr::sym("v"), 2)
            + Expr::sym("k") / Expr::int(2) * Expr::powi(Expr::sym("q"), 2)
            - Expr::sym("q") * Expr::ext("f", "t", 0)
            + Expr::sym("gamma") / Expr::sym("m") * Expr::sym("s");
        assert!(exprs_equal(energy, &expected_energy));
        // theta = m v dq
        let mv = Expr::sym("m") * Expr::sym("v");
        assert!(exprs_equal(&theta.one_form_coefficients().unwrap()[1], &mv));
        // eta = ds - m v dq
        let eta_c = eta.one_form_coefficients().unwrap();
        assert!(exprs_equal(&eta_c[1], &-mv));
        assert!(eta_c[3].is_one());
        let (w, verdict) = sys.hessian();
        assert!(exprs_equal(&w[0][0], &Expr::sym("m")));
        assert_eq!(verdict, Regularity::Regular);
    }

    #[test]
    fn free_particle_energy_is_kinetic() {
        let chart = oscillator_chart();
        let l = Expr::powi(Expr::sym("v"), 2) / Expr::int(2);
        let sys = LagrangianSystem::new(&chart, l.clone(), Bindings::new()).unwrap();
        assert!(exprs_equal(sys.energy(), &l));
        let x = sys.herglotz_field().unwrap();
        assert!(exprs_equal(x.component_named("q").unwrap(), &Expr::sym("v")));
        assert!(x.component_named("v").unwrap().is_zero());
        assert!(exprs_equal(x.component_named("s").unwrap(), &l));
    }

    #[test]
    fn multiplier_hessian_is_singular_with_the_expected_rank() {
        // Variable-length pendulum, enlarged by the constraint multiplier.
        let base = Chart::lagrangian(&["r", "th"], &["v_r", "v_th"]).unwrap();
        let chart = Arc::new(base.with_multipliers(&["lambda"]).unwrap());
        let m = Expr::sym("m");
        let l = &m / Expr::int(2)
            * (Expr::powi(Expr::sym("v_r"), 2)
                + Expr::powi(Expr::sym("r"), 2) * Expr::powi(Expr::sym("v_th"), 2))
            - &m * Expr::sym("g") * (Expr::sym("r") - Expr::sym("r") * Expr::cos(Expr::sym("th")))
            - Expr::sym("gamma") * Expr::sym("s")
            + Expr::sym("lambda") * (Expr::sym("r") - Expr::ext("ell", "t", 0));
        let env = Bindings::new()
            .with("m", 1.0)
            .with("g", 9.8)
            .with("gamma", 0.5)
            .with_external("ell", crate::symlang::zero::external_test_family("ell"));
        let sys = LagrangianSystem::new(&chart, l, env).unwrap();
        assert_eq!(sys.regularity(), Regularity::Singular { rank: 2 });
        let (w, _) = sys.hessian();
        assert!(exprs_equal(&w[0][0], &Expr::sym("m")));
        assert!(exprs_equal(
            &w[1][1],
            &(Expr::sym("m") * Expr::powi(Expr::sym("r"), 2))
        ));
        assert!(w[2][2].is_zero());
        assert!(w[0][1].is_zero());
        // The degenerate pair is precocontact of class 6.
        match verify_cocontact(&sys.tau_form(), sys.eta_form(), sys.env()).unwrap() {
            StructureVerdict::Precocontact { class } => assert_eq!(class, 6),
            other => panic!("expected precocontact, got {other:?}"),
        }
        assert!(sys.herglotz_field().is_err());
    }

    #[test]
    fn action_coupled_velocity_product_has_rank_zero_hessian() {
        let chart = oscillator_chart();
        let l = Expr::sym("v") * Expr::sym("s");
        let sys = LagrangianSystem::new(&chart, l, Bindings::new()).unwrap();
        assert_eq!(sys.regularity(), Regularity::Singular { rank: 0 });
    }

    #[test]
    fn legendre_map_scales_velocity_by_mass() {
        let sys = oscillator();
        let point = Bindings::new()
            .with("t", 0.5)
            .with("q", 2.0)
            .with("v", 3.0)
            .with("s", 0.25);
        let image = sys.legendre_map(&point).unwrap();
        assert_eq!(image.time, 0.5);
        assert_eq!(image.positions, vec![("q".to_string(), 2.0)]);
        assert_eq!(image.momenta, vec![("q".to_string(), 3.0)]);
        assert_eq!(image.action, 0.25);
        assert!(sys.legendre_pullback_check());
    }

    #[test]
    fn identity_legendre_map_for_unit_mass_free_particle() {
        let chart = oscillator_chart();
        let l = Expr::powi(Expr::sym("v"), 2) / Expr::int(2);
        let sys = LagrangianSystem::new(&chart, l, Bindings::new()).unwrap();
        let point = Bindings::new()
            .with("t", 0.0)
            .with("q", 1.0)
            .with("v", 2.0)
            .with("s", 0.0);
        let image = sys.legendre_map(&point).unwrap();
        assert_eq!(image.momenta, vec![("q".to_string(), 2.0)]);
    }

    #[test]
    fn oscillator_reeb_fields_are_the_coordinate_directions() {
        let sys = oscillator();
        let (r_t, r_s) = sys.lagrangian_reeb_fields().unwrap();
        assert_eq!(r_t, VectorFieldExpr::basis(sys.chart(), 0));
        assert_eq!(r_s, VectorFieldExpr::basis(sys.chart(), 3));
    }

    #[test]
    fn time_coupled_lagrangian_tilts_the_time_reeb_field() {
        let chart = oscillator_chart();
        let l = Expr::powi(Expr::sym("v"), 2) / Expr::int(2) + Expr::sym("t") * Expr::sym("v");
        let sys = LagrangianSystem::new(&chart, l, Bindings::new()).unwrap();
        let (r_t, r_s) = sys.lagrangian_reeb_fields().unwrap();
        assert!(exprs_equal(r_t.component_named("v").unwrap(), &-Expr::one()));
        assert_eq!(r_s, VectorFieldExpr::basis(sys.chart(), 3));
    }

    #[test]
    fn action_coupled_lagrangian_tilts_the_action_reeb_field() {
        let chart = oscillator_chart();
        let l = Expr::powi(Expr::sym("v"), 2) / Expr::int(2)
            - Expr::sym("gamma") * Expr::sym("s") * Expr::sym("v");
        let env = Bindings::new().with("gamma", 0.25);
        let sys = LagrangianSystem::new(&chart, l, env).unwrap();
        let (_, r_s) = sys.lagrangian_reeb_fields().unwrap();
        assert!(exprs_equal(
            r_s.component_named("v").unwrap(),
            &Expr::sym("gamma")
        ));
    }

    #[test]
    fn reeb_formulas_agree_with_the_structure_solve() {
        let chart = oscillator_chart();
        // Cross terms in t, q, and s exercise every Hessian derivative.
        let l = Expr::powi(Expr::sym("v"), 2) / Expr::int(2)
            + Expr::sym("t") * Expr::sym("v")
            + Expr::sym("q") * Expr::sym("v")
            - Expr::num(0.25) * Expr::sym("s") * Expr::sym("v");
        let sys = LagrangianSystem::new(&chart, l, Bindings::new()).unwrap();
        let (r_t, r_s) = sys.lagrangian_reeb_fields().unwrap();
        let (solved_t, solved_s) =
            reeb_from_structure(&chart, &sys.tau_form(), sys.eta_form(), &[]).unwrap();
        for i in 0..chart.dim() {
            assert!(exprs_equal(r_t.component(i), solved_t.component(i)));
            assert!(exprs_equal(r_s.component(i), solved_s.component(i)));
        }
    }

    #[test]
    fn reeb_derivatives_of_the_energy_match_the_lagrangian_rates() {
        let sys = oscillator();
        let (r_t, r_s) = sys.lagrangian_reeb_fields().unwrap();
        let l = sys.lagrangian();
        let a = r_t.lie_scalar(sys.energy()) + l.differentiate("t");
        let b = r_s.lie_scalar(sys.energy()) + l.differentiate("s");
        assert!(is_identically_zero(&a));
        assert!(is_identically_zero(&b));
    }

    #[test]
    fn oscillator_herglotz_field_matches_the_known_acceleration() {
        let sys = oscillator();
        let x = sys.herglotz_field().unwrap();
        assert!(exprs_equal(x.component_named("t").unwrap(), &Expr::one()));
        assert!(exprs_equal(x.component_named("q").unwrap(), &Expr::sym("v")));
        let expected_g = -(Expr::sym("k") / Expr::sym("m")) * Expr::sym("q")
            + Expr::ext("f", "t", 0) / Expr::sym("m")
            - (Expr::sym("gamma") / Expr::sym("m")) * Expr::sym("v");
        assert!(exprs_equal(x.component_named("v").unwrap(), &expected_g));
        assert!(exprs_equal(x.component_named("s").unwrap(), sys.lagrangian()));
    }

    #[test]
    fn herglotz_field_contracts_the_cartan_forms_correctly() {
        let sys = oscillator();
        let x = sys.herglotz_field().unwrap();
        let against_eta = sys.eta_form().pair(&x).unwrap() + sys.energy();
        assert!(is_identically_zero(&against_eta));
        let against_tau = sys.tau_form().pair(&x).unwrap() - Expr::one();
        assert!(is_identically_zero(&against_tau));
    }

    #[test]
    fn herglotz_field_is_the_hamiltonian_field_of_the_energy() {
        let sys = oscillator();
        let x = sys.herglotz_field().unwrap();
        let coco = sys.cocontact().unwrap();
        let x_h = coco.hamiltonian_vector_field().unwrap();
        for i in 0..sys.chart().dim() {
            assert!(
                exprs_equal(x.component(i), x_h.component(i)),
                "component {i}: {} vs {}",
                x.component(i),
                x_h.component(i)
            );
        }
    }

    #[test]
    fn two_body_angular_momentum_decays_at_the_friction_rate() {
        // Planar motion with time-dependent mass: the transverse momentum
        // m(t) r^2 v_phi obeys d/dt(m r^2 v_phi) = -gamma m r^2 v_phi.
        let chart = Arc::new(Chart::lagrangian(&["r", "phi"], &["v_r", "v_phi"]).unwrap());
        let mu = Expr::ext("mu", "t", 0);
        let l = &mu / Expr::int(2)
            * (Expr::powi(Expr::sym("v_r"), 2)
                + Expr::powi(Expr::sym("r"), 2) * Expr::powi(Expr::sym("v_phi"), 2))
            + Expr::sym("k") / Expr::sym("r")
            - Expr::sym("gamma") * Expr::sym("s");
        let env = Bindings::new()
            .with("k", 1.0)
            .with("gamma", 0.1)
            .with_external("mu", crate::symlang::zero::external_test_family("mu"));
        let sys = LagrangianSystem::new(&chart, l, env).unwrap();
        let x = sys.herglotz_field().unwrap();
        let p_phi = &mu * Expr::powi(Expr::sym("r"), 2) * Expr::sym("v_phi");
        let residue = x.lie_scalar(&p_phi) + Expr::sym("gamma") * &p_phi;
        assert!(is_identically_zero(&residue), "residue {residue}");
    }

    #[test]
    fn pushing_the_field_through_legendre_matches_the_momentum_side() {
        let sys = oscillator();
        let x = sys.herglotz_field().unwrap();
        let momenta = sys.momenta();
        // Momentum-side oscillator on the canonical chart.
        let h = Expr::powi(Expr::sym("p"), 2) / (Expr::int(2) * Expr::sym("m"))
            + Expr::sym("k") / Expr::int(2) * Expr::powi(Expr::sym("q"), 2)
            - Expr::sym("q") * Expr::ext("f", "t", 0)
            + Expr::sym("gamma") / Expr::sym("m") * Expr::sym("s");
        let mchart = Arc::new(Chart::canonical(1).unwrap());
        let coco = CocontactSystem::canonical(&mchart, h, oscillator_env()).unwrap();
        let x_h = coco.hamiltonian_vector_field().unwrap();
        let probes = probe_bindings(sys.chart(), sys.env(), 20);
        for b in &probes {
            // Image point under the Legendre map.
            let mut image = sys.env().clone();
            image.set("t", b.get("t").unwrap());
            image.set("q", b.get("q").unwrap());
            image.set("s", b.get("s").unwrap());
            image.set("p", momenta[0].evaluate(b).unwrap());
            // Tangent map: t, q, s components carry over; p follows dL/dv.
            let pushed = [
                x.component_named("t").unwrap().evaluate(b).unwrap(),
                x.component_named("q").unwrap().evaluate(b).unwrap(),
                x.lie_scalar(&momenta[0]).evaluate(b).unwrap(),
                x.component_named("s").unwrap().evaluate(b).unwrap(),
            ];
            for (i, name) in ["t", "q", "p", "s"].iter().enumerate() {
                let there = x_h
                    .component_named(name)
                    .unwrap()
                    .evaluate(&image)
                    .unwrap();
                assert!(
                    (pushed[i] - there).abs() < 1e-9,
                    "{name}: {} vs {there}",
                    pushed[i]
                );
            }
        }
    }

    #[test]
    fn residuals_vanish_on_integrated_herglotz_flow() {
        let mut env = Bindings::new().with("m", 1.0).with("k", 1.0).with("gamma", 0.3);
        let pulse = Expr::exp(
            -(Expr::sym("t") - Expr::one()) * (Expr::sym("t") - Expr::one()) / Expr::num(0.02),
        );
        env.set_external("f", ExternalImpl::symbolic("t", pulse));
        let sys =
            LagrangianSystem::new(&oscillator_chart(), oscillator_lagrangian(), env).unwrap();
        let x = sys.herglotz_field().unwrap();
        let initial = state_from_map(
            sys.chart(),
            &BTreeMap::from([
                ("q".to_string(), 1.0),
                ("v".to_string(), 0.0),
                ("s".to_string(), 0.0),
            ]),
        )
        .unwrap();
        let cfg = IntegratorConfig::rk4(1e-3, (0.0, 2.0));
        let traj = integrate(&x, &initial, &cfg, sys.env()).unwrap();
        let table = sys.herglotz_residual(&traj).unwrap();
        assert!(table.max_abs() < 1e-5, "max residual {}", table.max_abs());
    }

    #[test]
    fn static_curve_leaves_the_spring_force_as_residual() {
        let sys = LagrangianSystem::new(
            &oscillator_chart(),
            oscillator_lagrangian(),
            Bindings::new()
                .with("m", 1.0)
                .with("k", 1.0)
                .with("gamma", 0.0)
                .with_external("f", ExternalImpl::constant(0.0)),
        )
        .unwrap();
        let n = 101;
        let h = 1e-2;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![t, 1.0, 0.0, 0.0]).collect();
        let traj = Trajectory::new(sys.chart(), times, states).unwrap();
        let table = sys.herglotz_residual(&traj).unwrap();
        // d/dt(mv) - (-k q) = k on the constant curve q = 1.
        let eq = table.max_abs_for("q").unwrap();
        assert!((eq - 1.0).abs() < 1e-9, "residual {eq}");
    }
}
