use std::sync::Arc;

use cocontact::symlang::parse::parse;
use cocontact::symlang::zero::is_identically_zero;
use cocontact::{
    holonomic_augment, AlgorithmOptions, Bindings, Chart, ExternalImpl, LagrangianSystem,
    PrecocontactSystem,
};

fn main() -> cocontact::Result<()> {
    let chart = Arc::new(Chart::lagrangian(&["r", "th"], &["v_r", "v_th"])?);
    let l = parse(
        "(1/2)*m*(v_r^2 + r^2*v_th^2) - m*g*r*(1 - cos(th)) - gamma*s",
        &chart,
        &["m", "g", "gamma"],
        &[],
    )?;
    let env = Bindings::new()
        .with("m", 1.0)
        .with("g", 15.0)
        .with("gamma", 0.5)
        .with_external(
            "ell",
            ExternalImpl::symbolic("t", parse("1 + 0.1*sin(2*pi*t)", &chart, &[], &[])?),
        );
    let base = LagrangianSystem::new(&chart, l, env)?;
    let augmented = holonomic_augment(&base, &[parse("r - ell(t)", &chart, &[], &["ell"])?])?;
    let pre = PrecocontactSystem::from_lagrangian(&augmented)?;
    let options = AlgorithmOptions {
        enforce_sode: true,
        ..AlgorithmOptions::default()
    };
    let ledger = pre.constraint_algorithm(&options)?;
    let reduced = ledger.field().map(|e| ledger.reduce(e));

    let achart = augmented.chart();
    let vr = reduced.component_named("v_r").unwrap();
    let gr = parse("ell''(t)", achart, &[], &["ell"])?;
    println!("G_r == ell''(t): {}", is_identically_zero(&(vr - &gr)));

    let vth = reduced.component_named("v_th").unwrap();
    let rhs = parse(
        "-gamma*v_th - 2*(ell'(t)/ell(t))*v_th - (g/ell(t))*sin(th)",
        achart,
        &["gamma", "g"],
        &["ell"],
    )?;
    println!("theta ODE matches: {}", is_identically_zero(&(vth - &rhs)));

    // Constant length limit: same construction with ell pinned to ell0.
    let lc = parse(
        "(1/2)*m*(v_r^2 + r^2*v_th^2) - m*g*r*(1 - cos(th)) - gamma*s",
        &chart,
        &["m", "g", "gamma", "ell0"],
        &[],
    )?;
    let envc = Bindings::new()
        .with("m", 1.0)
        .with("g", 15.0)
        .with("gamma", 0.5)
        .with("ell0", 1.0);
    let basec = LagrangianSystem::new(&chart, lc, envc)?;
    let augc = holonomic_augment(&basec, &[parse("r - ell0", &chart, &["ell0"], &[])?])?;
    let prec = PrecocontactSystem::from_lagrangian(&augc)?;
    let ledc = prec.constraint_algorithm(&options)?;
    let redc = ledc.field().map(|e| ledc.reduce(e));
    let vthc = redc.component_named("v_th").unwrap();
    let rhsc = parse(
        "-gamma*v_th - (g/ell0)*sin(th)",
        augc.chart(),
        &["gamma", "g", "ell0"],
        &[],
    )?;
    println!(
        "constant length limit matches: {}",
        is_identically_zero(&(vthc - &rhsc))
    );
    Ok(())
}
