//! Distinguished submanifolds of a canonical structure.
//!
//! Classifies implicit and parametrized submanifolds of the one degree of
//! freedom chart `(t, q, p, s)` relative to `tau = dt`, `eta = ds - p dq`:
//! Legendrian graphs of generating functions, isotropic points,
//! coisotropic hypersurfaces, and submanifolds in general position.

use std::collections::BTreeMap;
use std::sync::Arc;

use cocontact::{Bindings, Chart, CocontactSystem, Expr, SubmanifoldSpec};

fn main() -> cocontact::Result<()> {
    let chart = Arc::new(Chart::canonical(1)?);
    let sys = CocontactSystem::canonical(&chart, Expr::zero(), Bindings::new())?;

    let implicit = |label: &str, constraints: Vec<Expr>| -> cocontact::Result<()> {
        let report = sys.classify_submanifold(&SubmanifoldSpec::Implicit { constraints })?;
        println!(
            "{label:<40} dimension {}  {:?}",
            report.dimension, report.class
        );
        Ok(())
    };

    println!("implicit submanifolds:");
    implicit(
        "zero section  t = p = s = 0",
        vec![Expr::sym("t"), Expr::sym("p"), Expr::sym("s")],
    )?;
    implicit(
        "point  t = q = p = s = 0",
        vec![Expr::sym("t"), Expr::sym("q"), Expr::sym("p"), Expr::sym("s")],
    )?;
    implicit("hypersurface  q = 0", vec![Expr::sym("q")])?;
    implicit(
        "surface  q = p = 0",
        vec![Expr::sym("q"), Expr::sym("p")],
    )?;
    implicit(
        "graph  s = q^2,  p = 2q,  t = 0",
        vec![
            Expr::sym("s") - Expr::powi(Expr::sym("q"), 2),
            Expr::sym("p") - Expr::int(2) * Expr::sym("q"),
            Expr::sym("t"),
        ],
    )?;

    // The graph of any generating function W: q = u, p = W'(u), s = W(u)
    // at frozen time is Legendrian; eta pulls back to W'(u) du - p du = 0.
    println!();
    println!("parametrized graphs of generating functions, time frozen:");
    for (label, w) in [
        ("W(u) = u^3", Expr::powi(Expr::sym("u"), 3)),
        ("W(u) = sin(u)", Expr::sin(Expr::sym("u"))),
        ("W(u) = exp(u)", Expr::exp(Expr::sym("u"))),
    ] {
        let map = BTreeMap::from([
            ("t".to_string(), Expr::num(0.25)),
            ("q".to_string(), Expr::sym("u")),
            ("p".to_string(), w.differentiate("u")),
            ("s".to_string(), w.clone()),
        ]);
        let report = sys.classify_submanifold(&SubmanifoldSpec::Parametric {
            params: vec!["u".to_string()],
            map,
        })?;
        println!(
            "{label:<40} dimension {}  {:?}",
            report.dimension, report.class
        );
    }
    Ok(())
}
