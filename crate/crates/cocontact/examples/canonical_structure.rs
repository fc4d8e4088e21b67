//! Canonical structures on `(t, q^i, p_i, s)` charts.
//!
//! Builds the pair `tau = dt`, `eta = ds - p_i dq^i` for one, two, and
//! three degrees of freedom, verifies the defining conditions, prints the
//! Reeb fields, and round-trips random vector fields through the flat and
//! sharp isomorphisms.

use std::sync::Arc;

use cocontact::cocontact::verify_cocontact;
use cocontact::exterior::{volume_form, VectorFieldExpr};
use cocontact::probe::probe_bindings;
use cocontact::symlang::zero::random_polynomial;
use cocontact::{Bindings, Chart, CocontactSystem, Expr, StructureVerdict};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cocontact::Result<()> {
    for n in [1usize, 2, 3] {
        let chart = Arc::new(Chart::canonical(n)?);
        let sys = CocontactSystem::canonical(&chart, Expr::zero(), Bindings::new())?;
        println!("== n = {n}: chart ({}) ==", chart.names().join(", "));
        println!("tau = {}", sys.tau());
        println!("eta = {}", sys.eta());

        match verify_cocontact(sys.tau(), sys.eta(), sys.env())? {
            StructureVerdict::Cocontact => println!("verified: cocontact structure"),
            other => println!("unexpected verdict: {other:?}"),
        }
        let vol = volume_form(sys.tau(), sys.eta())?;
        println!("tau ^ eta ^ (d eta)^{n} = {vol}");

        let (r_t, r_s) = sys.reeb_fields();
        println!("Reeb fields: R_t = {r_t}, R_s = {r_s}");

        // Flat then sharp must return any field unchanged; check a random
        // polynomial field numerically at probe points.
        let names = chart.names();
        let syms: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7 + n as u64);
        let x = VectorFieldExpr::from_components(
            &chart,
            (0..chart.dim())
                .map(|_| random_polynomial(&syms, 1, 2, &mut rng))
                .collect(),
        )?;
        let back = sys.sharp_map(&sys.flat_map(&x)?)?;
        let mut worst = 0.0f64;
        for b in probe_bindings(&chart, sys.env(), 20) {
            let orig = x.evaluate(&b)?;
            let round = back.evaluate(&b)?;
            for (a, c) in orig.iter().zip(&round) {
                worst = worst.max((a - c).abs());
            }
        }
        println!("max |sharp(flat(X)) - X| over 20 probe points: {worst:.3e}");
        println!();
    }
    Ok(())
}
