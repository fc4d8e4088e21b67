//! Deciding whether an expression vanishes identically.
//!
//! Structural cancellation is tried first (canonical form, then expansion).
//! What survives is sampled at seeded random points: any value above
//! tolerance refutes zero immediately, and agreement at every point accepts
//! it. External functions are bound to a fixed sinusoidal family derived
//! from the function name, so externals and their derivatives stay linked
//! the way a genuine function of time links them.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::eval::{Bindings, ExternalImpl};
use super::Expr;

/// Sampling points required for an accept.
pub const ZERO_TEST_POINTS: usize = 32;
/// Absolute tolerance separating zero from nonzero at a sample point.
pub const ZERO_TEST_TOL: f64 = 1e-9;
/// Seed for the sampling stream; fixed so results are reproducible.
pub const ZERO_TEST_SEED: u64 = 0x5eed_0c0c_0417_0001;
/// Draw budget when some points fall outside an expression's domain.
const MAX_DRAWS: usize = 256;
/// Minimum in-domain points for an accept when draws were skipped.
const MIN_VALID: usize = 16;

/// True when `e` vanishes identically as a function of its free symbols.
pub fn is_identically_zero(e: &Expr) -> bool {
    if e.is_zero() {
        return true;
    }
    let expanded = e.expand();
    if expanded.is_zero() {
        return true;
    }
    let probe = if expanded.node_count() < e.node_count() {
        &expanded
    } else {
        e
    };
    sampled_zero(probe)
}

/// True when `a` and `b` agree identically.
pub fn exprs_equal(a: &Expr, b: &Expr) -> bool {
    a == b || is_identically_zero(&(a - b))
}

fn sampled_zero(e: &Expr) -> bool {
    let syms: BTreeSet<String> = e.free_symbols();
    let mut env = Bindings::new();
    for (name, (_, _)) in e.externals() {
        env.set_external(&name, external_test_family(&name));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ZERO_TEST_SEED);
    let mut valid = 0usize;
    for _ in 0..MAX_DRAWS {
        if valid >= ZERO_TEST_POINTS {
            break;
        }
        for s in &syms {
            env.set(s, sample_value(&mut rng));
        }
        match e.evaluate(&env) {
            Ok(v) if v.abs() <= ZERO_TEST_TOL => valid += 1,
            Ok(_) => return false,
            Err(_) => continue,
        }
    }
    valid >= MIN_VALID
}

/// Magnitudes are kept in `[0.2, 2]`: away from the coordinate hyperplanes
/// where products with reciprocals would lose precision, yet small enough
/// that polynomial growth does not swamp the tolerance.
fn sample_value(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    let magnitude = 0.2 + 1.8 * u;
    let negative: bool = rng.gen();
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Test family `c0 + c1*sin(w*t + phi)` with coefficients derived from the
/// function name, so distinct externals get distinct generic functions and
/// repeated runs get the same ones.
pub fn external_test_family(name: &str) -> ExternalImpl {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(name.as_bytes()));
    let c0 = 1.0 + rng.gen::<f64>();
    let c1 = 0.25 + 0.5 * rng.gen::<f64>();
    let w = 0.5 + rng.gen::<f64>();
    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let t = Expr::sym("t");
    let body = Expr::num(c0) + Expr::num(c1) * Expr::sin(Expr::num(w) * t + Expr::num(phi));
    ExternalImpl::symbolic("t", body)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Random polynomial over `syms` for randomized identity checks: `terms`
/// monomials with small integer coefficients and per-symbol degrees up to
/// `degree`, plus an occasional sine factor to leave polynomial algebra.
pub fn random_polynomial(syms: &[&str], degree: u32, terms: usize, rng: &mut ChaCha8Rng) -> Expr {
    let mut acc = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut factors = vec![Expr::int(rng.gen_range(-3i64..=3))];
        for s in syms {
            let d = rng.gen_range(0..=degree);
            if d > 0 {
                factors.push(Expr::powi(Expr::sym(s), d as i64));
            }
        }
        if rng.gen_range(0..4) == 0 {
            let s = syms[rng.gen_range(0..syms.len())];
            factors.push(Expr::sin(Expr::sym(s)));
        }
        acc.push(Expr::product(factors));
    }
    Expr::sum(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn structural_zero_is_accepted() {
        let x = Expr::sym("x");
        assert!(is_identically_zero(&(&x - &x)));
    }

    #[test]
    fn expansion_cancellation_is_accepted() {
        // (x + y)^2 - x^2 - 2xy - y^2
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        let e = Expr::powi(&x + &y, 2)
            - Expr::powi(x.clone(), 2)
            - Expr::int(2) * &x * &y
            - Expr::powi(y.clone(), 2);
        assert!(is_identically_zero(&e));
    }

    #[test]
    fn pythagorean_identity_is_accepted_by_sampling() {
        let x = Expr::sym("x");
        let e = Expr::powi(Expr::sin(x.clone()), 2) + Expr::powi(Expr::cos(x), 2) - Expr::int(1);
        assert!(is_identically_zero(&e));
    }

    #[test]
    fn near_miss_is_rejected() {
        let x = Expr::sym("x");
        let e = Expr::num(1e-7) * x;
        assert!(!is_identically_zero(&e));
    }

    #[test]
    fn external_and_its_derivative_are_linked() {
        // d/dt of f(t)^2 minus 2 f(t) f'(t) must vanish under the family.
        let f = Expr::ext("f", "t", 0);
        let e = Expr::powi(f.clone(), 2).differentiate("t")
            - Expr::int(2) * &f * Expr::ext("f", "t", 1);
        assert!(is_identically_zero(&e));
        // f'(t) alone is not zero.
        assert!(!is_identically_zero(&Expr::ext("f", "t", 1)));
    }

    #[test]
    fn reciprocal_domains_are_handled() {
        // 1/x - 1/x with an x that could be sampled anywhere nonzero.
        let x = Expr::sym("x");
        let e = Expr::powi(x.clone(), -1) - Expr::powi(x, -1);
        assert!(is_identically_zero(&e));
    }

    #[test]
    fn derivative_matches_finite_differences_on_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let syms = ["x", "y"];
        for _ in 0..20 {
            let p = random_polynomial(&syms, 3, 4, &mut rng);
            let dp = p.differentiate("x");
            let x0 = 0.3 + rng.gen::<f64>();
            let y0 = 0.3 + rng.gen::<f64>();
            let h = 1e-5;
            let at = |x: f64| {
                p.evaluate(&Bindings::new().with("x", x).with("y", y0))
                    .unwrap()
            };
            let fd = (at(x0 + h) - at(x0 - h)) / (2.0 * h);
            let exact = dp
                .evaluate(&Bindings::new().with("x", x0).with("y", y0))
                .unwrap();
            assert!(
                (fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()),
                "fd {fd} vs exact {exact} for {p}"
            );
        }
    }

    #[test]
    fn differentiation_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let syms = ["x", "y"];
        for _ in 0..10 {
            let f = random_polynomial(&syms, 3, 3, &mut rng);
            let g = random_polynomial(&syms, 3, 3, &mut rng);
            let lhs = (Expr::int(2) * &f + Expr::int(-5) * &g).differentiate("y");
            let rhs = Expr::int(2) * f.differentiate("y") + Expr::int(-5) * g.differentiate("y");
            assert!(exprs_equal(&lhs, &rhs));
        }
    }

    #[test]
    fn product_rule_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let syms = ["x", "y"];
        for _ in 0..10 {
            let f = random_polynomial(&syms, 2, 3, &mut rng);
            let g = random_polynomial(&syms, 2, 3, &mut rng);
            let lhs = (&f * &g).differentiate("x");
            let rhs = f.differentiate("x") * &g + &f * g.differentiate("x");
            assert!(exprs_equal(&lhs, &rhs));
        }
    }

    #[test]
    fn mixed_partials_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let syms = ["x", "y", "z"];
        for _ in 0..10 {
            let f = random_polynomial(&syms, 3, 4, &mut rng);
            let xy = f.differentiate("x").differentiate("y");
            let yx = f.differentiate("y").differentiate("x");
            assert!(exprs_equal(&xy, &yx));
        }
    }

    #[test]
    fn substitution_composes_with_differentiation() {
        // Chain rule through substitution: d/dy f(x -> g(y)) == (df/dx)(g) g'.
        let f = Expr::powi(Expr::sym("x"), 3) + Expr::sin(Expr::sym("x"));
        let g = Expr::powi(Expr::sym("y"), 2) + Expr::int(1);
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), g.clone());
        let lhs = f.substitute(&map).differentiate("y");
        let rhs = f.differentiate("x").substitute(&map) * g.differentiate("y");
        assert!(exprs_equal(&lhs, &rhs));
    }
}
