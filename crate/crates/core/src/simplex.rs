//! Exact rational linear programming.
//!
//! A dense primal simplex over `BigRational` with Bland's rule, for
//! problems of the form max c·x subject to Ax ≤ b, x ≥ 0 with b ≥ 0.
//! Every cut-generation loop in the crate funnels through this solver,
//! so there is no floating point anywhere in the certificate path.
//! Problems are desk-scale (tens of variables and rows); no sparsity or
//! factorization tricks are warranted.

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::Rat;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients, one per structural variable.
    pub objective: Vec<Rat>,
    /// Rows (a, b) encoding a·x ≤ b with b ≥ 0.
    pub constraints: Vec<(Vec<Rat>, Rat)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: Rat,
    pub point: Vec<Rat>,
}

/// Maximizes the program. The slack basis is feasible because every
/// right-hand side is required to be non-negative.
pub fn maximize(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    for (row, (a, b)) in lp.constraints.iter().enumerate() {
        if a.len() != n {
            return Err(Error::InvalidInput(format!(
                "constraint {row} has {} coefficients, expected {n}",
                a.len()
            )));
        }
        if b.is_negative() {
            return Err(Error::InvalidInput(format!(
                "constraint {row} has negative right-hand side"
            )));
        }
    }

    let cols = n + m;
    let mut tableau: Vec<Vec<Rat>> = Vec::with_capacity(m);
    for (i, (a, b)) in lp.constraints.iter().enumerate() {
        let mut row = vec![Rat::zero(); cols + 1];
        row[..n].clone_from_slice(a);
        row[n + i] = Rat::from_integer(1.into());
        row[cols] = b.clone();
        tableau.push(row);
    }
    let mut reduced: Vec<Rat> = lp
        .objective
        .iter()
        .cloned()
        .chain(std::iter::repeat(Rat::zero()).take(m))
        .collect();
    let mut value = Rat::zero();
    let mut basis: Vec<usize> = (n..cols).collect();

    // Bland's rule terminates; the cap is a defensive backstop only.
    let max_pivots = 200_000usize;
    for _ in 0..max_pivots {
        let Some(entering) = reduced.iter().position(|c| c.is_positive()) else {
            let mut point = vec![Rat::zero(); n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    point[bv] = tableau[i][cols].clone();
                }
            }
            return Ok(LpSolution { value, point });
        };

        let mut leaving: Option<(usize, Rat)> = None;
        for i in 0..m {
            if tableau[i][entering].is_positive() {
                let ratio = &tableau[i][cols] / &tableau[i][entering];
                let better = match &leaving {
                    None => true,
                    Some((li, best)) => {
                        ratio < *best || (ratio == *best && basis[i] < basis[*li])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leaving else {
            return Err(Error::InvalidInput(
                "linear program is unbounded".into(),
            ));
        };

        let pivot = tableau[pivot_row][entering].clone();
        for c in 0..=cols {
            tableau[pivot_row][c] = &tableau[pivot_row][c] / &pivot;
        }
        for i in 0..m {
            if i != pivot_row && !tableau[i][entering].is_zero() {
                let factor = tableau[i][entering].clone();
                for c in 0..=cols {
                    let delta = &factor * &tableau[pivot_row][c];
                    tableau[i][c] = &tableau[i][c] - &delta;
                }
            }
        }
        let factor = reduced[entering].clone();
        for c in 0..cols {
            let delta = &factor * &tableau[pivot_row][c];
            reduced[c] = &reduced[c] - &delta;
        }
        value += &factor * &tableau[pivot_row][cols];
        basis[pivot_row] = entering;
    }
    Err(Error::BudgetExceeded("simplex pivot cap".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};

    fn lp(obj: &[(i64, i64)], rows: &[(&[(i64, i64)], (i64, i64))]) -> LinearProgram {
        LinearProgram {
            objective: obj.iter().map(|&(n, d)| rat(n, d)).collect(),
            constraints: rows
                .iter()
                .map(|(a, b)| {
                    (
                        a.iter().map(|&(n, d)| rat(n, d)).collect(),
                        rat(b.0, b.1),
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn simple_box_maximum() {
        // max x + y with x ≤ 1, y ≤ 2.
        let p = lp(
            &[(1, 1), (1, 1)],
            &[(&[(1, 1), (0, 1)], (1, 1)), (&[(0, 1), (1, 1)], (2, 1))],
        );
        let s = maximize(&p).unwrap();
        assert_eq!(s.value, rat_int(3));
        assert_eq!(s.point, vec![rat_int(1), rat_int(2)]);
    }

    #[test]
    fn fractional_vertex() {
        // max 3x + 5y s.t. x + 2y ≤ 4, 3x + 2y ≤ 6: optimum at (1, 3/2).
        let p = lp(
            &[(3, 1), (5, 1)],
            &[
                (&[(1, 1), (2, 1)], (4, 1)),
                (&[(3, 1), (2, 1)], (6, 1)),
            ],
        );
        let s = maximize(&p).unwrap();
        assert_eq!(s.value, rat(21, 2));
        assert_eq!(s.point, vec![rat_int(1), rat(3, 2)]);
    }

    #[test]
    fn degenerate_ties_terminate() {
        // Zero right-hand side makes the origin a degenerate vertex, so
        // the first pivot has zero step; Bland's rule must still reach
        // the optimum at (1, 1).
        let p = lp(
            &[(1, 1), (0, 1)],
            &[
                (&[(1, 1), (-1, 1)], (0, 1)),
                (&[(0, 1), (1, 1)], (1, 1)),
            ],
        );
        let s = maximize(&p).unwrap();
        assert_eq!(s.value, rat_int(1));
        assert_eq!(s.point, vec![rat_int(1), rat_int(1)]);
    }

    #[test]
    fn unbounded_detected() {
        let p = lp(&[(1, 1)], &[(&[(-1, 1)], (1, 1))]);
        assert!(maximize(&p).is_err());
    }

    #[test]
    fn rejects_negative_rhs() {
        let p = lp(&[(1, 1)], &[(&[(1, 1)], (-1, 1))]);
        assert!(maximize(&p).is_err());
    }
}
