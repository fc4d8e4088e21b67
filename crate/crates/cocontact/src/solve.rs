//! Symbolic linear solving by Gauss-Jordan elimination with exact division.
//!
//! Pivots are chosen to keep expressions small: numeric entries first, then
//! the structurally simplest expression that is not identically zero. This
//! is enough for the sparse structure matrices that arise from contact
//! one-forms, where most entries are single monomials.

use crate::error::{Error, Result};
use crate::symlang::zero::is_identically_zero;
use crate::symlang::Expr;

/// Solve the square system `m x = rhs` over symbolic expressions.
pub fn solve_square(m: &[Vec<Expr>], rhs: &[Expr]) -> Result<Vec<Expr>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) || rhs.len() != n {
        return Err(Error::InvalidStructure(
            "symbolic solve needs a square system".to_string(),
        ));
    }
    // Augmented rows [a_0 .. a_{n-1} | b].
    let mut rows: Vec<Vec<Expr>> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();

    for col in 0..n {
        let pivot_row = select_pivot(&rows, col)?;
        rows.swap(col, pivot_row);
        let inv = Expr::powi(rows[col][col].clone(), -1);
        for j in col..=n {
            rows[col][j] = &rows[col][j] * &inv;
        }
        for i in 0..n {
            if i == col || rows[i][col].is_zero() {
                continue;
            }
            let factor = rows[i][col].clone();
            for j in col..=n {
                let delta = &factor * &rows[col][j];
                rows[i][j] = &rows[i][j] - delta;
            }
            // The eliminated entry is zero by construction; force it so
            // incomplete structural cancellation cannot leave residue.
            rows[i][col] = Expr::zero();
        }
    }
    Ok(rows.into_iter().map(|mut r| r.pop().expect("augmented")).collect())
}

fn select_pivot(rows: &[Vec<Expr>], col: usize) -> Result<usize> {
    let n = rows.len();
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in rows.iter().enumerate().take(n).skip(col) {
        let e = &row[col];
        if e.is_zero() {
            continue;
        }
        let cost = if e.as_num().is_some() {
            0
        } else {
            e.node_count()
        };
        if best.is_none_or(|(c, _)| cost < c) && !is_identically_zero(e) {
            best = Some((cost, i));
            if cost == 0 {
                break;
            }
        }
    }
    best.map(|(_, i)| i).ok_or_else(|| {
        Error::Singular(format!(
            "no usable pivot in column {col}: the system is singular"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlang::zero::exprs_equal;

    #[test]
    fn solves_numeric_systems() {
        let m = vec![
            vec![Expr::int(2), Expr::int(1)],
            vec![Expr::int(1), Expr::int(3)],
        ];
        let rhs = vec![Expr::int(5), Expr::int(10)];
        let x = solve_square(&m, &rhs).unwrap();
        assert_eq!(x[0], Expr::int(1));
        assert_eq!(x[1], Expr::int(3));
    }

    #[test]
    fn solves_parametric_systems() {
        // Diagonal mass-matrix style: diag(m, m r^2) x = (a, b).
        let mass = Expr::sym("m");
        let r2 = Expr::powi(Expr::sym("r"), 2);
        let m = vec![
            vec![mass.clone(), Expr::zero()],
            vec![Expr::zero(), &mass * &r2],
        ];
        let rhs = vec![Expr::sym("a"), Expr::sym("b")];
        let x = solve_square(&m, &rhs).unwrap();
        assert!(exprs_equal(&x[0], &(Expr::sym("a") / mass.clone())));
        assert!(exprs_equal(&x[1], &(Expr::sym("b") / (mass * r2))));
    }

    #[test]
    fn detects_singular_systems() {
        let q = Expr::sym("q");
        let m = vec![
            vec![q.clone(), q.clone()],
            vec![&q * Expr::int(2), &q * Expr::int(2)],
        ];
        let rhs = vec![Expr::one(), Expr::zero()];
        assert!(matches!(solve_square(&m, &rhs), Err(Error::Singular(_))));
    }

    #[test]
    fn off_diagonal_elimination_divides_exactly() {
        // [[0, m], [m, m*q]] forces a swap and a symbolic elimination.
        let mass = Expr::sym("m");
        let q = Expr::sym("q");
        let m = vec![
            vec![Expr::zero(), mass.clone()],
            vec![mass.clone(), &mass * &q],
        ];
        let rhs = vec![Expr::sym("a"), Expr::sym("b")];
        let x = solve_square(&m, &rhs).unwrap();
        // m x1 = a; m x0 + m q x1 = b => x0 = b/m - q a / m.
        let expected0 = Expr::sym("b") / mass.clone() - &q * Expr::sym("a") / mass.clone();
        assert!(exprs_equal(&x[0], &expected0));
        assert!(exprs_equal(&x[1], &(Expr::sym("a") / mass)));
    }
}
