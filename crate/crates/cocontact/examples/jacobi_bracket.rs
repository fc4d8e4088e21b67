//! The Jacobi bracket induced by a canonical structure.
//!
//! Tabulates the bracket on the coordinate functions of the one degree of
//! freedom chart `(t, q, p, s)`, then checks antisymmetry and the Jacobi
//! identity numerically on random polynomial triples.

use std::sync::Arc;

use cocontact::probe::probe_bindings;
use cocontact::symlang::zero::{is_identically_zero, random_polynomial};
use cocontact::{Bindings, Chart, CocontactSystem, Expr};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cocontact::Result<()> {
    let chart = Arc::new(Chart::canonical(1)?);
    let sys = CocontactSystem::canonical(&chart, Expr::zero(), Bindings::new())?;

    println!("coordinate bracket table on (t, q, p, s):");
    let coords = ["t", "q", "p", "s"];
    for (i, a) in coords.iter().enumerate() {
        for b in coords.iter().skip(i + 1) {
            let br = sys.jacobi_bracket(&Expr::sym(a), &Expr::sym(b))?;
            println!("  {{{a}, {b}}} = {br}");
        }
    }
    // The bracket of a function with the constant 1 measures the failure
    // of the Leibniz rule; for coordinates it recovers Reeb derivatives.
    for a in coords {
        let br = sys.jacobi_bracket(&Expr::sym(a), &Expr::one())?;
        println!("  {{{a}, 1}} = {br}");
    }
    println!();

    // Antisymmetry and the Jacobi identity on random polynomial triples,
    // evaluated at probe points since the expressions grow quickly.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let probes = probe_bindings(&chart, sys.env(), 10);
    let mut worst_antisym = 0.0f64;
    let mut worst_jacobi = 0.0f64;
    for _ in 0..12 {
        let f = random_polynomial(&coords, 1, 2, &mut rng);
        let g = random_polynomial(&coords, 1, 2, &mut rng);
        let h = random_polynomial(&coords, 1, 2, &mut rng);
        let fg = sys.jacobi_bracket(&f, &g)?;
        let anti = &fg + sys.jacobi_bracket(&g, &f)?;
        let cycle = sys.jacobi_bracket(&f, &sys.jacobi_bracket(&g, &h)?)?
            + sys.jacobi_bracket(&g, &sys.jacobi_bracket(&h, &f)?)?
            + sys.jacobi_bracket(&h, &fg)?;
        for b in &probes {
            worst_antisym = worst_antisym.max(anti.evaluate(b)?.abs());
            worst_jacobi = worst_jacobi.max(cycle.evaluate(b)?.abs());
        }
    }
    println!("max |{{f,g}} + {{g,f}}| over 12 random pairs:    {worst_antisym:.3e}");
    println!("max |cyclic {{f,{{g,h}}}} sum| over 12 triples:  {worst_jacobi:.3e}");

    // With a generator the bracket drives observables: df/dt along the
    // evolution field is {H, f} plus explicit time dependence.
    let h = Expr::powi(Expr::sym("p"), 2) / Expr::int(2)
        + Expr::powi(Expr::sym("q"), 2) / Expr::int(2)
        + Expr::num(0.3) * Expr::sym("s");
    let sys = CocontactSystem::canonical(&chart, h.clone(), Bindings::new())?;
    let x = sys.hamiltonian_vector_field()?;
    println!();
    println!("generator H = {h}");
    println!("evolution of q along the flow: {}", x.lie_scalar(&Expr::sym("q")));
    println!("evolution of p along the flow: {}", x.lie_scalar(&Expr::sym("p")));
    let dissipation = x.lie_scalar(&h) + Expr::num(0.3) * &h;
    println!(
        "X(H) + 0.3 H identically zero: {}",
        is_identically_zero(&dissipation)
    );
    Ok(())
}
