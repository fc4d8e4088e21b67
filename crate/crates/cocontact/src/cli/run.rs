//! The derive, simulate, and check commands.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::chart::Chart;
use crate::cli::config::{ConfigSource, SystemConfig, SystemKind};
use crate::cli::output::{plot_script, write_text, PlotSpec, Table};
use crate::cocontact::{
    verify_cocontact, CocontactSystem, StructureVerdict, SubmanifoldClass,
};
use crate::dynamics::{
    diagnostics, integrate_compiled_keeping_partial, state_from_map, CompiledField,
    DiagnosticsSpec, DiagnosticsTable,
};
use crate::error::{Error, Result};
use crate::exterior::{DifferentialForm, VectorFieldExpr};
use crate::lagrangian::Regularity;
use crate::precocontact::{
    AlgorithmStatus, ConstraintLedger, MotionEquation, PrecocontactSystem,
};
use crate::symlang::Expr;

pub fn run_derive(config: &str, gamma: Option<f64>, out: Option<&Path>) -> i32 {
    unwrap_exit(derive_command(config, gamma, out))
}

pub fn run_check(config: &str, gamma: Option<f64>, out: Option<&Path>) -> i32 {
    unwrap_exit(check_command(config, gamma, out))
}

pub fn run_simulate(
    config: &str,
    gamma: Option<f64>,
    sweep: Option<&str>,
    out: Option<&Path>,
    plots: bool,
) -> i32 {
    unwrap_exit(simulate_command(config, gamma, sweep, out, plots))
}

fn unwrap_exit(r: Result<i32>) -> i32 {
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(config: &str, gamma: Option<f64>) -> Result<SystemConfig> {
    let mut src = ConfigSource::load(config)?;
    if let Some(v) = gamma {
        src = src.with_parameter("gamma", v)?;
    }
    src.build()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Everything `derive` prints and `simulate` consumes: the report text, the
/// evolution field when it is fully determined, and the ledger when the
/// constraint algorithm ran.
pub struct Derivation {
    pub report: String,
    pub field: Option<VectorFieldExpr>,
    pub ledger: Option<ConstraintLedger>,
    /// Generator evaluated along the flow: `H` or `E_L`.
    pub energy: Expr,
    /// The Lagrangian, when there is one, for the action-pace check.
    pub action_lagrangian: Option<Expr>,
    /// 0 finalized, 3 inconsistent, 4 stage budget exhausted.
    pub exit: i32,
}

pub fn derive_system(cfg: &SystemConfig) -> Result<Derivation> {
    match &cfg.kind {
        SystemKind::Lagrangian { .. } => derive_lagrangian(cfg),
        SystemKind::Hamiltonian { structure } => derive_hamiltonian(cfg, structure.as_ref()),
    }
}

fn derive_lagrangian(cfg: &SystemConfig) -> Result<Derivation> {
    let sys = cfg.lagrangian_system().expect("lagrangian kind");
    let augmented = matches!(
        &cfg.kind,
        SystemKind::Lagrangian {
            augmented: Some(_),
            ..
        }
    );
    let mut rpt = String::new();
    let _ = writeln!(
        rpt,
        "system `{}`: lagrangian formalism on chart {}",
        cfg.name, cfg.chart
    );
    let _ = writeln!(rpt, "L = {}", sys.lagrangian());
    let _ = writeln!(rpt, "eta_L = {}", sys.eta_form());
    let _ = writeln!(rpt, "E_L = {}", sys.energy());
    let (w, reg) = sys.hessian();
    let _ = writeln!(rpt, "hessian W = {}", matrix_text(w));
    match reg {
        Regularity::Regular => {
            let _ = writeln!(rpt, "regularity: regular");
        }
        Regularity::Singular { rank } => {
            let _ = writeln!(rpt, "regularity: singular, rank {rank}");
        }
    }

    if matches!(reg, Regularity::Regular) && !augmented {
        let (rt, rs) = sys.lagrangian_reeb_fields()?;
        let _ = writeln!(rpt, "reeb fields: R_t = {rt}; R_s = {rs}");
        let field = sys.herglotz_field()?;
        let _ = writeln!(rpt, "evolution field:");
        rpt.push_str(&field_lines(&field));
        return Ok(Derivation {
            report: rpt,
            field: Some(field),
            ledger: None,
            energy: sys.energy().clone(),
            action_lagrangian: Some(sys.lagrangian().clone()),
            exit: 0,
        });
    }

    let pre = PrecocontactSystem::from_lagrangian(sys)?;
    let (rt, rs) = pre.reeb_fields();
    let _ = writeln!(rpt, "reeb representatives: R_t = {rt}; R_s = {rs}");
    let basis: Vec<String> = pre
        .characteristic_basis()
        .iter()
        .map(|v| v.to_string())
        .collect();
    if !basis.is_empty() {
        let _ = writeln!(rpt, "characteristic directions: {}", basis.join(", "));
    }
    let ledger = pre.constraint_algorithm(&cfg.algorithm)?;
    rpt.push_str(&ledger.report());
    if augmented {
        if let Ok(eqs) = pre.multiplier_dynamics() {
            let _ = writeln!(rpt, "equations of motion with multiplier sources:");
            rpt.push_str(&motion_lines(&eqs));
        }
    }
    let exit = exit_for(ledger.status());
    let field = reduced_field(&ledger, exit, &mut rpt);
    Ok(Derivation {
        report: rpt,
        field,
        ledger: Some(ledger),
        energy: sys.energy().clone(),
        action_lagrangian: Some(sys.lagrangian().clone()),
        exit,
    })
}

fn derive_hamiltonian(
    cfg: &SystemConfig,
    structure: Option<&(DifferentialForm, DifferentialForm)>,
) -> Result<Derivation> {
    let (tau, eta) = match structure {
        Some((t, e)) => (t.clone(), e.clone()),
        None => CocontactSystem::canonical_forms(&cfg.chart)?,
    };
    let mut rpt = String::new();
    let _ = writeln!(
        rpt,
        "system `{}`: hamiltonian formalism on chart {}",
        cfg.name, cfg.chart
    );
    let _ = writeln!(rpt, "H = {}", cfg.generator);
    let _ = writeln!(rpt, "tau = {}", tau);
    let _ = writeln!(rpt, "eta = {}", eta);
    match verify_cocontact(&tau, &eta, &cfg.env)? {
        StructureVerdict::Cocontact => {
            let sys = CocontactSystem::new(tau, eta, cfg.generator.clone(), cfg.env.clone())?;
            let darboux = if sys.is_darboux_chart() {
                " (darboux chart)"
            } else {
                ""
            };
            let _ = writeln!(rpt, "structure: cocontact{darboux}");
            let (rt, rs) = sys.reeb_fields();
            let _ = writeln!(rpt, "reeb fields: R_t = {rt}; R_s = {rs}");
            let field = sys.hamiltonian_vector_field()?;
            let _ = writeln!(rpt, "evolution field:");
            rpt.push_str(&field_lines(&field));
            Ok(Derivation {
                report: rpt,
                field: Some(field),
                ledger: None,
                energy: cfg.generator.clone(),
                action_lagrangian: None,
                exit: 0,
            })
        }
        StructureVerdict::Precocontact { class } => {
            let _ = writeln!(rpt, "structure: precocontact, class {class}");
            let pre = PrecocontactSystem::from_forms(
                tau,
                eta,
                cfg.generator.clone(),
                cfg.env.clone(),
            )?;
            let (rt, rs) = pre.reeb_fields();
            let _ = writeln!(rpt, "reeb representatives: R_t = {rt}; R_s = {rs}");
            let basis: Vec<String> = pre
                .characteristic_basis()
                .iter()
                .map(|v| v.to_string())
                .collect();
            if !basis.is_empty() {
                let _ = writeln!(rpt, "characteristic directions: {}", basis.join(", "));
            }
            let ledger = pre.constraint_algorithm(&cfg.algorithm)?;
            rpt.push_str(&ledger.report());
            let exit = exit_for(ledger.status());
            let field = reduced_field(&ledger, exit, &mut rpt);
            Ok(Derivation {
                report: rpt,
                field,
                ledger: Some(ledger),
                energy: cfg.generator.clone(),
                action_lagrangian: None,
                exit,
            })
        }
        StructureVerdict::Invalid { reason } => Err(Error::InvalidStructure(reason)),
    }
}

/// The integrable representative of a finalized ledger's dynamics: the
/// solved relations substituted into every component, so that off-surface
/// coordinates never feed back into the flow and constraint violations
/// stay at integrator accuracy instead of growing.
fn reduced_field(ledger: &ConstraintLedger, exit: i32, rpt: &mut String) -> Option<VectorFieldExpr> {
    if exit != 0 || !ledger.unknowns_remaining().is_empty() {
        return None;
    }
    let reduced = ledger.field().map(|e| ledger.reduce(e));
    let _ = writeln!(rpt, "evolution field on the final submanifold:");
    rpt.push_str(&field_lines(&reduced));
    Some(reduced)
}

fn exit_for(status: &AlgorithmStatus) -> i32 {
    match status {
        AlgorithmStatus::Finalized { .. } => 0,
        AlgorithmStatus::Inconsistent { .. } => 3,
        AlgorithmStatus::MaxStages { .. } => 4,
    }
}

fn field_lines(field: &VectorFieldExpr) -> String {
    let chart = field.chart();
    let mut out = String::new();
    for i in 0..chart.dim() {
        let _ = writeln!(out, "  d{}/dt = {}", chart.name(i), field.component(i));
    }
    out
}

fn matrix_text(w: &[Vec<Expr>]) -> String {
    let rows: Vec<String> = w
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|e| e.to_string()).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join("; "))
}

fn motion_lines(eqs: &[MotionEquation]) -> String {
    let mut out = String::new();
    for eq in eqs {
        match eq {
            MotionEquation::Rate { quantity, rate, .. } => {
                let _ = writeln!(out, "  d/dt ({quantity}) = {rate}");
            }
            MotionEquation::Algebraic { expression, .. } => {
                let _ = writeln!(out, "  {expression} = 0");
            }
        }
    }
    out
}

fn derive_command(config: &str, gamma: Option<f64>, out: Option<&Path>) -> Result<i32> {
    let cfg = load(config, gamma)?;
    let d = derive_system(&cfg)?;
    print!("{}", d.report);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let path = dir.join(format!("{}_derivation.txt", cfg.name));
        write_text(&path, &d.report)?;
        println!("wrote {}", path.display());
    }
    Ok(d.exit)
}

fn check_command(config: &str, gamma: Option<f64>, out: Option<&Path>) -> Result<i32> {
    let cfg = load(config, gamma)?;
    let mut rpt = String::new();
    let _ = writeln!(
        rpt,
        "system `{}`: {} formalism on chart {}",
        cfg.name,
        cfg.formalism.name(),
        cfg.chart
    );
    let (tau, eta) = match &cfg.kind {
        SystemKind::Hamiltonian { structure } => match structure {
            Some((t, e)) => (t.clone(), e.clone()),
            None => CocontactSystem::canonical_forms(&cfg.chart)?,
        },
        SystemKind::Lagrangian { .. } => {
            let sys = cfg.lagrangian_system().expect("lagrangian kind");
            match sys.regularity() {
                Regularity::Regular => {
                    let _ = writeln!(rpt, "hessian: regular");
                }
                Regularity::Singular { rank } => {
                    let _ = writeln!(rpt, "hessian: singular, rank {rank}");
                }
            }
            (sys.tau_form(), sys.eta_form().clone())
        }
    };
    let _ = writeln!(rpt, "tau = {}", tau);
    let _ = writeln!(rpt, "eta = {}", eta);
    let exit = match verify_cocontact(&tau, &eta, &cfg.env)? {
        StructureVerdict::Cocontact => {
            let sys = CocontactSystem::new(tau, eta, cfg.generator.clone(), cfg.env.clone())?;
            let darboux = if sys.is_darboux_chart() {
                " (darboux chart)"
            } else {
                ""
            };
            let _ = writeln!(
                rpt,
                "structure: cocontact on a chart of dimension {}{darboux}",
                cfg.chart.dim()
            );
            let (rt, rs) = sys.reeb_fields();
            let _ = writeln!(rpt, "reeb fields: R_t = {rt}; R_s = {rs}");
            if sys.is_darboux_chart() {
                let s = cfg.chart.action_name();
                let _ = writeln!(rpt, "jacobi brackets:");
                for (qi, pi) in cfg.chart.pairs() {
                    let q = cfg.chart.name(qi);
                    let p = cfg.chart.name(pi);
                    let qp = sys.jacobi_bracket(&Expr::sym(q), &Expr::sym(p))?;
                    let qs = sys.jacobi_bracket(&Expr::sym(q), &Expr::sym(s))?;
                    let ps = sys.jacobi_bracket(&Expr::sym(p), &Expr::sym(s))?;
                    let _ = writeln!(rpt, "  {{{q}, {p}}} = {qp}");
                    let _ = writeln!(rpt, "  {{{q}, {s}}} = {qs}");
                    let _ = writeln!(rpt, "  {{{p}, {s}}} = {ps}");
                }
            }
            for sub in &cfg.submanifolds {
                let report = sys.classify_submanifold(&sub.spec)?;
                let _ = writeln!(
                    rpt,
                    "submanifold `{}`: {}, dimension {}",
                    sub.name,
                    class_name(report.class),
                    report.dimension
                );
            }
            0
        }
        StructureVerdict::Precocontact { class } => {
            let _ = writeln!(rpt, "structure: precocontact, class {class}");
            let pre = PrecocontactSystem::from_forms(
                tau,
                eta,
                cfg.generator.clone(),
                cfg.env.clone(),
            )?;
            let (rt, rs) = pre.reeb_fields();
            let _ = writeln!(rpt, "reeb representatives: R_t = {rt}; R_s = {rs}");
            let basis: Vec<String> = pre
                .characteristic_basis()
                .iter()
                .map(|v| v.to_string())
                .collect();
            let _ = writeln!(rpt, "characteristic directions: {}", basis.join(", "));
            if !cfg.submanifolds.is_empty() {
                let _ = writeln!(
                    rpt,
                    "submanifold classification needs a nondegenerate structure; skipped"
                );
            }
            0
        }
        StructureVerdict::Invalid { reason } => {
            let _ = writeln!(rpt, "structure: invalid ({reason})");
            2
        }
    };
    print!("{rpt}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let path = dir.join(format!("{}_check.txt", cfg.name));
        write_text(&path, &rpt)?;
        println!("wrote {}", path.display());
    }
    Ok(exit)
}

fn class_name(c: SubmanifoldClass) -> &'static str {
    match c {
        SubmanifoldClass::Legendrian => "legendrian",
        SubmanifoldClass::Isotropic => "isotropic",
        SubmanifoldClass::Coisotropic => "coisotropic",
        SubmanifoldClass::Generic => "generic",
    }
}

fn simulate_command(
    config: &str,
    gamma: Option<f64>,
    sweep: Option<&str>,
    out: Option<&Path>,
    plots: bool,
) -> Result<i32> {
    if let Some(spec) = sweep {
        return sweep_command(config, gamma, spec, out, plots);
    }
    let cfg = load(config, gamma)?;
    let d = derive_system(&cfg)?;
    if d.exit != 0 {
        print!("{}", d.report);
        return Ok(d.exit);
    }
    let (code, summary) = simulate_built(&cfg, &d, out, plots, &cfg.name)?;
    print!("{summary}");
    Ok(code)
}

/// Integrate a successfully derived system, write its trajectory table and
/// optional plot script, and return the exit code with a printable summary.
fn simulate_built(
    cfg: &SystemConfig,
    d: &Derivation,
    out: Option<&Path>,
    plots: bool,
    stem: &str,
) -> Result<(i32, String)> {
    let field = d.field.as_ref().ok_or_else(|| {
        let free = d
            .ledger
            .as_ref()
            .map(|l| l.unknowns_remaining().join(", "))
            .unwrap_or_default();
        Error::Config(format!(
            "the evolution field is not fully determined (free coefficients: {free})"
        ))
    })?;
    let icfg = cfg
        .integrator
        .clone()
        .ok_or_else(|| Error::Config("simulate needs an [integrator] section".to_string()))?;
    let chart = &cfg.chart;

    let mut init = cfg.initial.clone();
    init.entry(chart.time_name().to_string())
        .or_insert(icfg.t_span.0);
    let state = match &d.ledger {
        Some(l) => l.solve_initial_state(&init)?,
        None => {
            init.entry(chart.action_name().to_string()).or_insert(0.0);
            state_from_map(chart, &init)?
        }
    };

    let compiled = CompiledField::compile(field, &cfg.env)?;
    let outcome = integrate_compiled_keeping_partial(&compiled, &state, &icfg)?;
    let traj = &outcome.trajectory;

    let mut spec = DiagnosticsSpec {
        energy: Some(d.energy.clone()),
        mechanical: cfg.mechanical_energy.clone(),
        action_lagrangian: d.action_lagrangian.clone(),
        extra: Vec::new(),
    };
    for (i, e) in cfg.cartesian_map.iter().enumerate() {
        spec.extra.push((cartesian_name(chart, i), e.clone()));
    }
    if let Some(l) = &d.ledger {
        for (k, entry) in l.entries().iter().enumerate() {
            spec.extra
                .push((format!("constraint_{}", k + 1), entry.expression.clone()));
        }
    }
    let table = diagnostics(traj, &spec, &cfg.env)?;

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    columns.push((chart.time_name().to_string(), traj.times().to_vec()));
    for i in 0..chart.dim() {
        if i == chart.time_index() {
            continue;
        }
        columns.push((chart.name(i).to_string(), traj.column(i)));
    }
    columns.extend(table.columns.iter().cloned());
    let csv = Table { columns };

    let dir = out.unwrap_or_else(|| Path::new("."));
    ensure_dir(dir)?;
    let csv_name = format!("{stem}_trajectory.csv");
    let csv_path = dir.join(&csv_name);
    csv.write_csv(&csv_path)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "integrated `{stem}` over [{}, {}]: {} samples",
        icfg.t_span.0,
        icfg.t_span.1,
        traj.len()
    );
    for (name, _) in &table.columns {
        if name == "action_residual" || name.starts_with("constraint_") {
            if let Some(m) = table.max_abs(name) {
                let _ = writeln!(s, "  max |{name}| = {m:.3e}");
            }
        }
    }
    let _ = writeln!(s, "wrote {}", csv_path.display());

    if plots {
        let plot = build_plot_spec(chart, stem, &csv_name, &csv, &table)?;
        let script = plot_script(&csv, &plot)?;
        let path = dir.join(format!("{stem}_plots.gp"));
        write_text(&path, &script)?;
        let _ = writeln!(s, "wrote {}", path.display());
    }

    let code = match &outcome.abort {
        None => 0,
        Some(e) => {
            let _ = writeln!(s, "integration aborted: {e}");
            let _ = writeln!(s, "the table holds the part of the trajectory reached");
            5
        }
    };
    Ok((code, s))
}

fn build_plot_spec<'a>(
    chart: &'a Chart,
    stem: &'a str,
    csv_name: &'a str,
    csv: &Table,
    table: &DiagnosticsTable,
) -> Result<PlotSpec<'a>> {
    let states: Vec<String> = (0..chart.dim())
        .filter(|&i| i != chart.time_index() && i != chart.action_index())
        .map(|i| chart.name(i).to_string())
        .collect();
    let phase = chart
        .pairs()
        .first()
        .map(|&(q, p)| (chart.name(q).to_string(), chart.name(p).to_string()));
    let energies: Vec<String> = ["energy", "mechanical_energy"]
        .into_iter()
        .filter(|n| table.column(n).is_some())
        .map(|n| n.to_string())
        .collect();
    let cartesian_cols: Vec<String> = csv
        .columns
        .iter()
        .map(|(n, _)| n.clone())
        .filter(|n| n == "x" || n == "y" || n == "z" || n.starts_with("cart_"))
        .collect();
    let cartesian = if cartesian_cols.len() >= 2 {
        Some((cartesian_cols[0].clone(), cartesian_cols[1].clone()))
    } else {
        None
    };
    Ok(PlotSpec {
        name: stem,
        csv: csv_name,
        time: chart.time_name(),
        states,
        phase,
        energies,
        cartesian,
    })
}

fn cartesian_name(chart: &Chart, i: usize) -> String {
    let candidates = ["x", "y", "z"];
    if i < candidates.len() && !chart.contains(candidates[i]) {
        candidates[i].to_string()
    } else {
        format!("cart_{}", i + 1)
    }
}

fn sweep_command(
    config: &str,
    gamma: Option<f64>,
    spec: &str,
    out: Option<&Path>,
    plots: bool,
) -> Result<i32> {
    let (param, values) = parse_sweep(spec)?;
    if gamma.is_some() && param == "gamma" {
        return Err(Error::Config(
            "--gamma conflicts with a sweep over gamma".to_string(),
        ));
    }
    let mut base = ConfigSource::load(config)?;
    if let Some(v) = gamma {
        base = base.with_parameter("gamma", v)?;
    }
    let results: Vec<(f64, Result<(i32, String)>)> = values
        .par_iter()
        .map(|&v| (v, sweep_one(&base, &param, v, out, plots)))
        .collect();
    let mut exit = 0;
    for (v, r) in results {
        match r {
            Ok((code, text)) => {
                println!("{param} = {v}:");
                for line in text.lines() {
                    println!("  {line}");
                }
                exit = exit.max(code);
            }
            Err(e) => {
                eprintln!("{param} = {v}: error: {e}");
                exit = exit.max(e.exit_code());
            }
        }
    }
    Ok(exit)
}

fn sweep_one(
    base: &ConfigSource,
    param: &str,
    value: f64,
    out: Option<&Path>,
    plots: bool,
) -> Result<(i32, String)> {
    let cfg = base.clone().with_parameter(param, value)?.build()?;
    let d = derive_system(&cfg)?;
    if d.exit != 0 {
        return Ok((d.exit, format!("derivation stopped with exit {}\n", d.exit)));
    }
    let stem = format!("{}_{}_{}", cfg.name, param, fmt_value(value));
    simulate_built(&cfg, &d, out, plots, &stem)
}

fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>)> {
    let bad = || Error::Config(format!("sweep must look like `name=start:end:step`, got `{spec}`"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    if name.is_empty() {
        return Err(bad());
    }
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start {
        return Err(Error::Config(format!(
            "sweep range needs start <= end and a positive step, got `{spec}`"
        )));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    let values = (0..n).map(|i| round12(start + i as f64 * step)).collect();
    Ok((name.to_string(), values))
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

fn fmt_value(v: f64) -> String {
    format!("{}", round12(v))
}

/// Run one value of a sweep programmatically; used by tests to bypass the
/// process boundary.
pub fn simulate_to_dir(config: &str, gamma: Option<f64>, dir: &Path) -> Result<i32> {
    let cfg = load(config, gamma)?;
    let d = derive_system(&cfg)?;
    if d.exit != 0 {
        return Ok(d.exit);
    }
    let (code, _) = simulate_built(&cfg, &d, Some(dir), false, &cfg.name)?;
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_specs_enumerate_inclusive_ranges() {
        let (name, values) = parse_sweep("gamma=0.1:0.9:0.1").unwrap();
        assert_eq!(name, "gamma");
        assert_eq!(values.len(), 9);
        assert_eq!(values[0], 0.1);
        assert_eq!(values[8], 0.9);
        let (_, single) = parse_sweep("k=2.0:2.0:0.5").unwrap();
        assert_eq!(single, vec![2.0]);
        assert!(parse_sweep("gamma=0.1:0.9").is_err());
        assert!(parse_sweep("0.1:0.9:0.1").is_err());
        assert!(parse_sweep("gamma=0.9:0.1:0.1").is_err());
    }

    #[test]
    fn sweep_value_names_are_short() {
        assert_eq!(fmt_value(0.1), "0.1");
        assert_eq!(fmt_value(0.30000000000000004), "0.3");
        assert_eq!(fmt_value(2.0), "2");
    }
}
