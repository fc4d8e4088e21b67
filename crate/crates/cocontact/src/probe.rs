//! Seeded probe points and the numeric linear algebra used on them.
//!
//! Symbolic results are spot-checked numerically at a fixed set of random
//! chart points. Position, velocity, and momentum coordinates are sampled
//! away from zero so that metric factors like `r^2` and kinetic terms stay
//! well conditioned; time, action, and multiplier coordinates range over
//! `[-1, 1]`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::{Chart, Role};
use crate::error::{Error, Result};
use crate::symlang::eval::Bindings;
use crate::symlang::Expr;

/// Probe points used for rank and tangency checks.
pub const PROBE_COUNT: usize = 16;
/// Seed for the probe stream; fixed so every run sees the same points.
pub const PROBE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
/// Smallest acceptable pivot magnitude in an LU solve.
pub const PIVOT_TOL: f64 = 1e-10;
/// Relative singular-value cutoff for numeric rank decisions.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Seeded probe bindings over the chart, layered on top of `env`, which
/// supplies parameter values and external implementations.
pub fn probe_bindings(chart: &Chart, env: &Bindings, count: usize) -> Vec<Bindings> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    (0..count)
        .map(|_| {
            let mut b = env.clone();
            for i in 0..chart.dim() {
                b.set(chart.name(i), sample_coordinate(chart.role(i), &mut rng));
            }
            b
        })
        .collect()
}

fn sample_coordinate(role: Role, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    let negative: bool = rng.gen();
    let magnitude = match role {
        Role::Position | Role::Velocity | Role::Momentum => 0.25 + 0.75 * u,
        _ => u,
    };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Evaluate a symbolic matrix at a point.
pub fn eval_matrix(m: &[Vec<Expr>], b: &Bindings) -> Result<DMatrix<f64>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut out = DMatrix::zeros(rows, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            out[(i, j)] = e.evaluate(b)?;
        }
    }
    Ok(out)
}

/// Evaluate a symbolic vector at a point.
pub fn eval_vector(v: &[Expr], b: &Bindings) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(v.len());
    for (i, e) in v.iter().enumerate() {
        out[i] = e.evaluate(b)?;
    }
    Ok(out)
}

/// Solve the square system `a x = rhs` with partial-pivot LU, rejecting
/// pivots below [`PIVOT_TOL`].
pub fn lu_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if !min_pivot.is_finite() || min_pivot < PIVOT_TOL {
        return Err(Error::Singular(format!(
            "pivot magnitude {min_pivot:.3e} below {PIVOT_TOL:.0e}"
        )));
    }
    lu.solve(rhs)
        .ok_or_else(|| Error::Singular("LU solve failed".to_string()))
}

fn padded_svd(m: &DMatrix<f64>) -> nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    // Pad wide matrices with zero rows so the thin SVD still carries a full
    // right-singular basis; ranks and null spaces are unchanged.
    let (r, c) = m.shape();
    if r >= c {
        m.clone().svd(true, true)
    } else {
        let mut sq = DMatrix::zeros(c, c);
        sq.view_mut((0, 0), (r, c)).copy_from(m);
        sq.svd(true, true)
    }
}

/// Numeric rank with a relative singular-value cutoff.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let svd = padded_svd(m);
    let max = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    if max == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_REL_TOL * max)
        .count()
}

/// Orthonormal basis of the right null space `{x : m x = 0}`.
pub fn nullspace(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let cols = m.ncols();
    let svd = padded_svd(m);
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let max = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let mut basis = Vec::new();
    for i in 0..cols {
        let s = svd.singular_values.get(i).copied().unwrap_or(0.0);
        if max == 0.0 || s <= RANK_REL_TOL * max {
            basis.push(v_t.row(i).transpose());
        }
    }
    basis
}

/// Least-squares / minimum-norm solve via SVD.
pub fn svd_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = m.clone().svd(true, true);
    svd.solve(rhs, RANK_REL_TOL)
        .map_err(|e| Error::Singular(e.to_string()))
}

/// Max-norm distance of `v` from the column span of `basis`.
pub fn distance_from_span(basis: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    if basis.ncols() == 0 {
        return v.amax();
    }
    match svd_solve(basis, v) {
        Ok(c) => (basis * c - v).amax(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_are_reproducible_and_shifted() {
        let chart = Chart::canonical(1).unwrap();
        let env = Bindings::new().with("k", 2.0);
        let a = probe_bindings(&chart, &env, 4);
        let b = probe_bindings(&chart, &env, 4);
        for (x, y) in a.iter().zip(&b) {
            for name in ["t", "q", "p", "s"] {
                assert_eq!(x.get(name), y.get(name));
            }
            assert!(x.get("q").unwrap().abs() >= 0.25);
            assert!(x.get("p").unwrap().abs() >= 0.25);
            assert_eq!(x.get("k"), Some(2.0));
        }
    }

    #[test]
    fn lu_rejects_tiny_pivots() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-13]);
        let rhs = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(lu_solve(&a, &rhs), Err(Error::Singular(_))));
        let good = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = lu_solve(&good, &rhs).unwrap();
        assert!((&good * &x - &rhs).amax() < 1e-12);
    }

    #[test]
    fn rank_and_nullspace_agree_on_wide_matrices() {
        // 2x4 with rank 1: second row is a multiple of the first.
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, -1.0, 2.0, 4.0, 0.0, -2.0]);
        assert_eq!(rank(&m), 1);
        let ns = nullspace(&m);
        assert_eq!(ns.len(), 3);
        for v in &ns {
            assert!((&m * v).amax() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn span_distance_detects_membership() {
        let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let inside = DVector::from_vec(vec![2.0, -3.0, 0.0]);
        let outside = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(distance_from_span(&basis, &inside) < 1e-12);
        assert!(distance_from_span(&basis, &outside) > 0.5);
    }
}
