//! Central force problem with growing mass and action damping.
//!
//! The generator `H = p_r^2/(2 m(t)) + p_phi^2/(2 m(t) r^2) + k/r +
//! gamma s` on the chart `(t, r, phi, p_r, p_phi, s)` couples an explicit
//! time dependence through `m(t) = 1 + 0.1 t` with a linear action term.
//! The angular momentum is no longer conserved; it decays exactly
//! exponentially, `p_phi(t) = p_phi(0) exp(-gamma t)`, and the integrated
//! flow reproduces that law to integrator accuracy.

use std::collections::BTreeMap;
use std::sync::Arc;

use cocontact::dynamics::{integrate, state_from_map, IntegratorConfig};
use cocontact::symlang::parse::parse;
use cocontact::symlang::zero::is_identically_zero;
use cocontact::{Bindings, Chart, CocontactSystem, Expr, ExternalImpl};

fn main() -> cocontact::Result<()> {
    let chart = Arc::new(Chart::hamiltonian(&["r", "phi"], &["p_r", "p_phi"])?);
    let h = parse(
        "p_r^2/(2*m(t)) + p_phi^2/(2*m(t)*r^2) + k/r + gamma*s",
        &chart,
        &["k", "gamma"],
        &["m"],
    )?;
    let gamma = 0.1;
    let env = Bindings::new()
        .with("k", 1.0)
        .with("gamma", gamma)
        .with_external(
            "m",
            ExternalImpl::symbolic("t", parse("1 + 0.1*t", &chart, &[], &[])?),
        );
    let sys = CocontactSystem::canonical(&chart, h, env)?;
    let x = sys.hamiltonian_vector_field()?;

    println!("H = {}", sys.hamiltonian());
    println!("evolution field:");
    for (name, comp) in sys.chart().names().iter().zip(x.components()) {
        println!("  d{name}/dt = {comp}");
    }
    let decay = x.lie_scalar(&Expr::sym("p_phi")) + Expr::sym("gamma") * Expr::sym("p_phi");
    println!(
        "d(p_phi)/dt + gamma p_phi identically zero: {}",
        is_identically_zero(&decay)
    );

    let initial = state_from_map(
        sys.chart(),
        &BTreeMap::from([
            ("r".to_string(), 1.0),
            ("phi".to_string(), 0.0),
            ("p_r".to_string(), 0.3),
            ("p_phi".to_string(), 1.0),
            ("s".to_string(), 0.0),
        ]),
    )?;
    let cfg = IntegratorConfig::rk4(1e-3, (0.0, 10.0));
    let traj = integrate(&x, &initial, &cfg, sys.env())?;

    let ip = traj.chart().index_of("p_phi").unwrap();
    let p0 = traj.state(0)[ip];
    let mut worst = 0.0f64;
    for (i, t) in traj.times().iter().enumerate() {
        let expected = p0 * (-gamma * t).exp();
        worst = worst.max((traj.state(i)[ip] - expected).abs());
    }
    println!(
        "integrated to t = 10: p_phi went {:.6} -> {:.6}, expected {:.6}",
        p0,
        traj.state(traj.len() - 1)[ip],
        p0 * (-gamma * 10.0f64).exp()
    );
    println!("max |p_phi(t) - p_phi(0) exp(-gamma t)| along the flow: {worst:.3e}");

    // The fibre zero section over a fixed instant is a Legendrian leaf.
    use cocontact::{SubmanifoldClass, SubmanifoldSpec};
    let report = sys.classify_submanifold(&SubmanifoldSpec::Implicit {
        constraints: vec![
            Expr::sym("t"),
            Expr::sym("p_r"),
            Expr::sym("p_phi"),
            Expr::sym("s"),
        ],
    })?;
    println!(
        "zero section {{t = p_r = p_phi = s = 0}}: {:?}, dimension {} (Legendrian: {})",
        report.class,
        report.dimension,
        report.class == SubmanifoldClass::Legendrian
    );
    Ok(())
}
