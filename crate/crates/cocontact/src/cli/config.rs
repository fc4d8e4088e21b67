//! System definition files: the TOML schema, its validation, and assembly
//! into charts, expressions, and evaluation environments.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::chart::{Chart, Role};
use crate::cli::builtin::builtin;
use crate::cocontact::SubmanifoldSpec;
use crate::dynamics::{IntegratorConfig, Method};
use crate::error::{Error, Result};
use crate::exterior::DifferentialForm;
use crate::lagrangian::LagrangianSystem;
use crate::precocontact::{holonomic_augment, AlgorithmOptions};
use crate::symlang::eval::{Bindings, ExternalImpl};
use crate::symlang::parse::parse;
use crate::symlang::Expr;

#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    #[serde(default)]
    externals: BTreeMap<String, RawExternal>,
    #[serde(default)]
    structure: Option<RawStructure>,
    #[serde(default)]
    constraints: Option<RawConstraints>,
    #[serde(default)]
    integrator: Option<RawIntegrator>,
    #[serde(default)]
    output: Option<RawOutput>,
    #[serde(default)]
    submanifolds: Vec<RawSubmanifold>,
}

#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    name: String,
    formalism: String,
    #[serde(default)]
    time: Option<String>,
    #[serde(default)]
    action: Option<String>,
    positions: Vec<String>,
    #[serde(default)]
    velocities: Option<Vec<String>>,
    #[serde(default)]
    momenta: Option<Vec<String>>,
    #[serde(default)]
    lagrangian: Option<String>,
    #[serde(default)]
    hamiltonian: Option<String>,
}

/// Either an expression in the time coordinate or a named builtin with
/// numeric arguments.
#[derive(Clone, Deserialize)]
#[serde(untagged)]
enum RawExternal {
    Expression(String),
    Builtin {
        builtin: String,
        #[serde(flatten)]
        args: BTreeMap<String, f64>,
    },
}

/// Custom structure forms, keyed by coordinate differential (`dt`, `dq`, ...).
#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStructure {
    tau: BTreeMap<String, String>,
    eta: BTreeMap<String, String>,
}

#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    #[serde(default)]
    holonomic: Vec<String>,
    #[serde(default)]
    enforce_sode: Option<bool>,
    #[serde(default)]
    reeb_tangency: Option<bool>,
    #[serde(default)]
    max_stages: Option<usize>,
}

#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    method: String,
    dt: f64,
    t_span: [f64; 2],
    #[serde(default)]
    abs_tol: Option<f64>,
    #[serde(default)]
    rel_tol: Option<f64>,
    #[serde(default)]
    max_steps: Option<usize>,
    #[serde(default)]
    initial: BTreeMap<String, f64>,
}

#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default)]
    mechanical_energy: Option<String>,
    #[serde(default)]
    cartesian_map: Option<Vec<String>>,
}

#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubmanifold {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    constraints: Option<Vec<String>>,
    #[serde(default)]
    params: Option<Vec<String>>,
    #[serde(default)]
    map: Option<BTreeMap<String, String>>,
}

/// A configuration as read from disk or the builtin registry, before
/// assembly. Parameter overrides apply here, so one source can be built
/// many times during a sweep.
#[derive(Clone)]
pub struct ConfigSource {
    /// Path or builtin name, for error messages.
    pub label: String,
    raw: RawConfig,
}

impl ConfigSource {
    /// Read a configuration: a path to a TOML file, or the name of a
    /// builtin example when no such file exists.
    pub fn load(path_or_builtin: &str) -> Result<ConfigSource> {
        let path = Path::new(path_or_builtin);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path_or_builtin.to_string(),
                source,
            })?;
            return Self::from_text(path_or_builtin, &text);
        }
        if let Some(b) = builtin(path_or_builtin) {
            return Self::from_text(b.name, b.text);
        }
        Err(Error::Config(format!(
            "`{path_or_builtin}` is neither a file nor a builtin example (oscillator, kepler, pendulum)"
        )))
    }

    pub fn from_text(label: &str, text: &str) -> Result<ConfigSource> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("{label}: {}", e.message())))?;
        Ok(ConfigSource {
            label: label.to_string(),
            raw,
        })
    }

    /// Replace a declared parameter value; unknown names are rejected so a
    /// typo cannot silently leave the configuration untouched.
    pub fn with_parameter(mut self, name: &str, value: f64) -> Result<ConfigSource> {
        if !self.raw.parameters.contains_key(name) {
            return Err(Error::Config(format!(
                "`{name}` is not a parameter of `{}`",
                self.label
            )));
        }
        self.raw.parameters.insert(name.to_string(), value);
        Ok(self)
    }

    pub fn build(&self) -> Result<SystemConfig> {
        build_config(&self.label, &self.raw)
    }
}

/// Which formulation the generator expression belongs to.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Formalism {
    Hamiltonian,
    Lagrangian,
}

impl Formalism {
    pub fn name(self) -> &'static str {
        match self {
            Formalism::Hamiltonian => "hamiltonian",
            Formalism::Lagrangian => "lagrangian",
        }
    }
}

/// The formalism-specific part of a built configuration.
pub enum SystemKind {
    Hamiltonian {
        /// Custom `(tau, eta)`; `None` means the canonical Darboux forms.
        structure: Option<(DifferentialForm, DifferentialForm)>,
    },
    Lagrangian {
        base: LagrangianSystem,
        /// Present when holonomic constraints enlarge the chart with
        /// multiplier pairs.
        augmented: Option<LagrangianSystem>,
    },
}

/// A named, classified submanifold request.
pub struct NamedSubmanifold {
    pub name: String,
    pub spec: SubmanifoldSpec,
}

/// A fully validated configuration: charts built, expressions parsed, the
/// environment populated.
pub struct SystemConfig {
    pub name: String,
    pub formalism: Formalism,
    pub kind: SystemKind,
    /// The chart dynamics happen on: the multiplier-enlarged chart when
    /// holonomic constraints are present, the declared chart otherwise.
    pub chart: Arc<Chart>,
    /// `H` or the (augmented) `L`, on `chart`.
    pub generator: Expr,
    pub env: Bindings,
    pub parameters: BTreeMap<String, f64>,
    pub algorithm: AlgorithmOptions,
    pub integrator: Option<IntegratorConfig>,
    pub initial: BTreeMap<String, f64>,
    pub mechanical_energy: Option<Expr>,
    pub cartesian_map: Vec<Expr>,
    pub submanifolds: Vec<NamedSubmanifold>,
}

impl SystemConfig {
    /// The Lagrangian system dynamics derive from, when one exists: the
    /// augmented system if constraints were added, the base one otherwise.
    pub fn lagrangian_system(&self) -> Option<&LagrangianSystem> {
        match &self.kind {
            SystemKind::Lagrangian { base, augmented } => Some(augmented.as_ref().unwrap_or(base)),
            SystemKind::Hamiltonian { .. } => None,
        }
    }
}

fn parse_in(
    key: &str,
    text: &str,
    chart: &Chart,
    params: &[&str],
    externals: &[&str],
) -> Result<Expr> {
    parse(text, chart, params, externals)
        .map_err(|e| Error::Config(format!("{key} = `{text}`: {e}")))
}

fn build_config(label: &str, raw: &RawConfig) -> Result<SystemConfig> {
    let sys = &raw.system;
    if sys.name.is_empty() {
        return Err(Error::Config(format!("{label}: [system] name is empty")));
    }
    let formalism = match sys.formalism.as_str() {
        "hamiltonian" => Formalism::Hamiltonian,
        "lagrangian" => Formalism::Lagrangian,
        other => {
            return Err(Error::Config(format!(
                "formalism must be `hamiltonian` or `lagrangian`, got `{other}`"
            )))
        }
    };

    let time = sys.time.clone().unwrap_or_else(|| "t".to_string());
    let action = sys.action.clone().unwrap_or_else(|| "s".to_string());
    if sys.positions.is_empty() {
        return Err(Error::Config("at least one position is required".to_string()));
    }
    let (fibres, fibre_role) = match formalism {
        Formalism::Lagrangian => {
            if sys.momenta.is_some() {
                return Err(Error::Config(
                    "the lagrangian formalism uses `velocities`, not `momenta`".to_string(),
                ));
            }
            let fibres = sys.velocities.clone().unwrap_or_else(|| {
                sys.positions.iter().map(|q| format!("v_{q}")).collect()
            });
            (fibres, Role::Velocity)
        }
        Formalism::Hamiltonian => {
            if sys.velocities.is_some() {
                return Err(Error::Config(
                    "the hamiltonian formalism uses `momenta`, not `velocities`".to_string(),
                ));
            }
            let fibres = sys.momenta.clone().unwrap_or_else(|| {
                sys.positions.iter().map(|q| format!("p_{q}")).collect()
            });
            (fibres, Role::Momentum)
        }
    };
    if fibres.len() != sys.positions.len() {
        return Err(Error::Config(format!(
            "{} positions need {} fibre coordinates, got {}",
            sys.positions.len(),
            sys.positions.len(),
            fibres.len()
        )));
    }
    let mut coords = vec![(time.clone(), Role::Time)];
    coords.extend(sys.positions.iter().map(|q| (q.clone(), Role::Position)));
    coords.extend(fibres.iter().map(|f| (f.clone(), fibre_role)));
    coords.push((action, Role::Action));
    let base_chart = Arc::new(Chart::new(coords)?);

    let parameters = raw.parameters.clone();
    for name in parameters.keys() {
        if base_chart.contains(name) {
            return Err(Error::Config(format!(
                "parameter `{name}` collides with a chart coordinate"
            )));
        }
        if raw.externals.contains_key(name) {
            return Err(Error::Config(format!(
                "parameter `{name}` collides with an external function"
            )));
        }
    }
    let param_names: Vec<&str> = parameters.keys().map(|s| s.as_str()).collect();
    let external_names: Vec<&str> = raw.externals.keys().map(|s| s.as_str()).collect();

    let mut env = Bindings::new();
    for (name, value) in &parameters {
        env.set(name, *value);
    }
    for (name, ext) in &raw.externals {
        if base_chart.contains(name) {
            return Err(Error::Config(format!(
                "external `{name}` collides with a chart coordinate"
            )));
        }
        env.set_external(name, build_external(name, ext, &base_chart, &time)?);
    }

    let generator_text = match formalism {
        Formalism::Lagrangian => {
            if sys.hamiltonian.is_some() {
                return Err(Error::Config(
                    "a lagrangian system must not declare `hamiltonian`".to_string(),
                ));
            }
            sys.lagrangian.as_deref().ok_or_else(|| {
                Error::Config("the lagrangian formalism needs a `lagrangian` expression".to_string())
            })?
        }
        Formalism::Hamiltonian => {
            if sys.lagrangian.is_some() {
                return Err(Error::Config(
                    "a hamiltonian system must not declare `lagrangian`".to_string(),
                ));
            }
            sys.hamiltonian.as_deref().ok_or_else(|| {
                Error::Config(
                    "the hamiltonian formalism needs a `hamiltonian` expression".to_string(),
                )
            })?
        }
    };
    let base_generator = parse_in(
        "[system] generator",
        generator_text,
        &base_chart,
        &param_names,
        &external_names,
    )?;

    let holonomic_texts = raw
        .constraints
        .as_ref()
        .map(|c| c.holonomic.clone())
        .unwrap_or_default();
    if !holonomic_texts.is_empty() && formalism == Formalism::Hamiltonian {
        return Err(Error::Config(
            "holonomic constraints require the lagrangian formalism".to_string(),
        ));
    }
    if raw.structure.is_some() && formalism == Formalism::Lagrangian {
        return Err(Error::Config(
            "a custom [structure] requires the hamiltonian formalism; the lagrangian one derives its own forms".to_string(),
        ));
    }

    let kind = match formalism {
        Formalism::Lagrangian => {
            let base = LagrangianSystem::new(&base_chart, base_generator.clone(), env.clone())?;
            let augmented = if holonomic_texts.is_empty() {
                None
            } else {
                let mut parsed = Vec::new();
                for text in &holonomic_texts {
                    parsed.push(parse_in(
                        "[constraints] holonomic",
                        text,
                        &base_chart,
                        &param_names,
                        &external_names,
                    )?);
                }
                Some(holonomic_augment(&base, &parsed)?)
            };
            SystemKind::Lagrangian { base, augmented }
        }
        Formalism::Hamiltonian => {
            let structure = match &raw.structure {
                None => None,
                Some(forms) => Some((
                    one_form_from_map(
                        "[structure] tau",
                        &forms.tau,
                        &base_chart,
                        &param_names,
                        &external_names,
                    )?,
                    one_form_from_map(
                        "[structure] eta",
                        &forms.eta,
                        &base_chart,
                        &param_names,
                        &external_names,
                    )?,
                )),
            };
            SystemKind::Hamiltonian { structure }
        }
    };

    let (chart, generator) = match &kind {
        SystemKind::Lagrangian {
            augmented: Some(aug),
            ..
        } => (aug.chart().clone(), aug.lagrangian().clone()),
        _ => (base_chart.clone(), base_generator),
    };

    let mut algorithm = AlgorithmOptions::default();
    if let Some(c) = &raw.constraints {
        if let Some(v) = c.enforce_sode {
            algorithm.enforce_sode = v;
        }
        if let Some(v) = c.reeb_tangency {
            algorithm.reeb_tangency = v;
        }
        if let Some(v) = c.max_stages {
            algorithm.max_stages = v;
        }
    }

    let (integrator, initial) = match &raw.integrator {
        None => (None, BTreeMap::new()),
        Some(i) => {
            let mut cfg = match i.method.as_str() {
                "rk4" => IntegratorConfig::rk4(i.dt, (i.t_span[0], i.t_span[1])),
                "rk45" => {
                    let mut cfg = IntegratorConfig::rk45((i.t_span[0], i.t_span[1]));
                    cfg.step = i.dt;
                    cfg
                }
                other => {
                    return Err(Error::Config(format!(
                        "integrator method must be `rk4` or `rk45`, got `{other}`"
                    )))
                }
            };
            if let Some(v) = i.abs_tol {
                cfg.abs_tol = v;
            }
            if let Some(v) = i.rel_tol {
                cfg.rel_tol = v;
            }
            if let Some(v) = i.max_steps {
                cfg.max_steps = v;
            }
            if matches!(cfg.method, Method::Rk4) && !(cfg.step > 0.0) {
                return Err(Error::Config("integrator dt must be positive".to_string()));
            }
            for name in i.initial.keys() {
                if !chart.contains(name) {
                    return Err(Error::Config(format!(
                        "initial value for `{name}` does not match a coordinate of the chart {chart}"
                    )));
                }
            }
            (Some(cfg), i.initial.clone())
        }
    };

    let output = raw.output.clone().unwrap_or(RawOutput {
        mechanical_energy: None,
        cartesian_map: None,
    });
    let mechanical_energy = match &output.mechanical_energy {
        None => None,
        Some(text) => Some(parse_in(
            "[output] mechanical_energy",
            text,
            &chart,
            &param_names,
            &external_names,
        )?),
    };
    let mut cartesian_map = Vec::new();
    for text in output.cartesian_map.iter().flatten() {
        cartesian_map.push(parse_in(
            "[output] cartesian_map",
            text,
            &chart,
            &param_names,
            &external_names,
        )?);
    }

    let mut submanifolds = Vec::new();
    for (i, sub) in raw.submanifolds.iter().enumerate() {
        submanifolds.push(build_submanifold(
            i,
            sub,
            &chart,
            &param_names,
            &external_names,
        )?);
    }

    Ok(SystemConfig {
        name: sys.name.clone(),
        formalism,
        kind,
        chart,
        generator,
        env,
        parameters,
        algorithm,
        integrator,
        initial,
        mechanical_energy,
        cartesian_map,
        submanifolds,
    })
}

/// Assemble an external function binding. Expression externals may only
/// involve the time coordinate, since their derivatives are evaluated with
/// nothing else in scope.
fn build_external(
    name: &str,
    raw: &RawExternal,
    chart: &Chart,
    time: &str,
) -> Result<ExternalImpl> {
    match raw {
        RawExternal::Expression(text) => {
            let body = parse_in(&format!("external `{name}`"), text, chart, &[], &[])?;
            for free in body.free_symbols() {
                if free != time {
                    return Err(Error::Config(format!(
                        "external `{name}` may only involve the time coordinate `{time}`, found `{free}`"
                    )));
                }
            }
            Ok(ExternalImpl::symbolic(time, body))
        }
        RawExternal::Builtin { builtin, args } => builtin_external(name, builtin, args, time),
    }
}

fn builtin_external(
    name: &str,
    kind: &str,
    args: &BTreeMap<String, f64>,
    time: &str,
) -> Result<ExternalImpl> {
    let expect = |keys: &[&str]| -> Result<Vec<f64>> {
        for k in args.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "external `{name}`: builtin `{kind}` does not take `{k}`"
                )));
            }
        }
        keys.iter()
            .map(|k| {
                args.get(*k).copied().ok_or_else(|| {
                    Error::Config(format!("external `{name}`: builtin `{kind}` needs `{k}`"))
                })
            })
            .collect()
    };
    let t = Expr::sym(time);
    match kind {
        "const" => {
            let v = expect(&["value"])?;
            Ok(ExternalImpl::constant(v[0]))
        }
        "smooth_pulse" => {
            let v = expect(&["center", "width", "amplitude"])?;
            let (center, width, amplitude) = (v[0], v[1], v[2]);
            if width <= 0.0 {
                return Err(Error::Config(format!(
                    "external `{name}`: pulse width must be positive"
                )));
            }
            let arg = (&t - &Expr::num(center)) / &Expr::num(width);
            let body =
                Expr::num(amplitude) * Expr::exp(Expr::num(-0.5) * Expr::powi(arg, 2));
            Ok(ExternalImpl::symbolic(time, body))
        }
        "sin_pulse" => {
            let v = expect(&["center", "width", "amplitude"])?;
            let (center, width, amplitude) = (v[0], v[1], v[2]);
            if width <= 0.0 {
                return Err(Error::Config(format!(
                    "external `{name}`: pulse width must be positive"
                )));
            }
            let arg = (&t - &Expr::num(center)) / &Expr::num(width);
            let envelope = Expr::exp(Expr::num(-0.5) * Expr::powi(arg.clone(), 2));
            let carrier = Expr::sin(Expr::num(2.0 * std::f64::consts::PI) * arg);
            let body = Expr::num(amplitude) * envelope * carrier;
            Ok(ExternalImpl::symbolic(time, body))
        }
        other => Err(Error::Config(format!(
            "external `{name}`: unknown builtin `{other}` (const, smooth_pulse, sin_pulse)"
        ))),
    }
}

/// Build a one-form from `{dcoord = "coefficient"}` entries.
fn one_form_from_map(
    key: &str,
    map: &BTreeMap<String, String>,
    chart: &Arc<Chart>,
    params: &[&str],
    externals: &[&str],
) -> Result<DifferentialForm> {
    let mut coeffs = vec![Expr::zero(); chart.dim()];
    for (k, text) in map {
        let coord = k.strip_prefix('d').ok_or_else(|| {
            Error::Config(format!(
                "{key}: keys must be coordinate differentials like `dt`, got `{k}`"
            ))
        })?;
        let i = chart.index_of(coord).ok_or_else(|| {
            Error::Config(format!("{key}: `{coord}` is not a coordinate of {chart}"))
        })?;
        coeffs[i] = parse_in(&format!("{key}.{k}"), text, chart, params, externals)?;
    }
    DifferentialForm::one_form(chart, coeffs)
}

fn build_submanifold(
    index: usize,
    raw: &RawSubmanifold,
    chart: &Arc<Chart>,
    params: &[&str],
    externals: &[&str],
) -> Result<NamedSubmanifold> {
    let name = raw
        .name
        .clone()
        .unwrap_or_else(|| format!("submanifold {}", index + 1));
    let key = format!("[[submanifolds]] `{name}`");
    match (&raw.constraints, &raw.params, &raw.map) {
        (Some(texts), None, None) => {
            let mut constraints = Vec::new();
            for text in texts {
                constraints.push(parse_in(&key, text, chart, params, externals)?);
            }
            Ok(NamedSubmanifold {
                name,
                spec: SubmanifoldSpec::Implicit { constraints },
            })
        }
        (None, Some(sub_params), Some(map_texts)) => {
            let mut all_params: Vec<&str> = params.to_vec();
            all_params.extend(sub_params.iter().map(|s| s.as_str()));
            let mut map = BTreeMap::new();
            for (coord, text) in map_texts {
                if !chart.contains(coord) {
                    return Err(Error::Config(format!(
                        "{key}: `{coord}` is not a coordinate of {chart}"
                    )));
                }
                let e = parse_in(&key, text, chart, &all_params, externals)?;
                for free in e.free_symbols() {
                    if chart.contains(&free) {
                        return Err(Error::Config(format!(
                            "{key}: a parametric map must be written in its parameters, found coordinate `{free}`"
                        )));
                    }
                }
                map.insert(coord.clone(), e);
            }
            Ok(NamedSubmanifold {
                name,
                spec: SubmanifoldSpec::Parametric {
                    params: sub_params.clone(),
                    map,
                },
            })
        }
        _ => Err(Error::Config(format!(
            "{key}: give either `constraints` or both `params` and `map`"
        ))),
    }
}
