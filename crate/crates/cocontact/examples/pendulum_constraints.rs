//! Variable length pendulum: the constraint algorithm at work.
//!
//! A planar pendulum in polar coordinates with damping term `-gamma s` is
//! regular on its own; pinning the rod length to a prescribed `ell(t)`
//! through a Lagrange multiplier makes the enlarged Lagrangian singular.
//! The stabilization loop then has to discover, stage by stage, the
//! constraint, its velocity consequence, the multiplier (the rod tension),
//! and the multiplier rate, before the flow closes on a final submanifold.

use std::sync::Arc;

use cocontact::symlang::parse::parse;
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
    println!("base Lagrangian (regular): L = {}", base.lagrangian());

    let constraint = parse("r - ell(t)", &chart, &[], &["ell"])?;
    let augmented = holonomic_augment(&base, &[constraint])?;
    println!(
        "augmented on ({}): {:?}",
        augmented.chart().names().join(", "),
        augmented.regularity()
    );

    let pre = PrecocontactSystem::from_lagrangian(&augmented)?;
    println!(
        "structure class {} on a {} dimensional chart; characteristic directions: {}",
        pre.class(),
        pre.chart().dim(),
        pre.characteristic_basis()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );

    let options = AlgorithmOptions {
        enforce_sode: true,
        ..AlgorithmOptions::default()
    };
    let ledger = pre.constraint_algorithm(&options)?;
    println!();
    println!("constraints in discovery order (long tails elided):");
    for entry in ledger.entries() {
        println!(
            "  stage {} [{}]: {} = 0",
            entry.stage,
            entry.origin,
            clip(&entry.expression.to_string(), 96)
        );
    }
    println!("solved coefficients:");
    for (name, value) in ledger.assignments() {
        println!("  {name} = {}", clip(&value.to_string(), 96));
    }
    println!("status: {:?}", ledger.status());

    println!();
    println!("equations of motion on the final submanifold:");
    for eq in pre.multiplier_dynamics()? {
        println!("  {eq}");
    }

    println!();
    println!("evolution field with the solved relations substituted:");
    let reduced = ledger.field().map(|e| ledger.reduce(e));
    for (name, comp) in pre.chart().names().iter().zip(reduced.components()) {
        println!("  d{name}/dt = {}", clip(&comp.to_string(), 96));
    }
    Ok(())
}

/// The tension and multiplier rate expand to pages of tangency algebra;
/// elide everything past `width` characters for the terminal.
fn clip(text: &str, width: usize) -> String {
    if text.len() <= width {
        return text.to_string();
    }
    format!("{} ...", &text[..width])
}
