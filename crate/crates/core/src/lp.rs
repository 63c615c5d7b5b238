//! Dense two-phase tableau simplex for small standard-form LPs:
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  x ≥ 0
//! ```
//!
//! Sized for a few hundred rows. Pricing is Dantzig's most-negative reduced
//! cost; after a run of degenerate pivots the solver switches to Bland's rule
//! until the objective moves again, which rules out cycling. The final basic
//! solution is re-solved against the original matrix to remove round-off
//! accumulated in the tableau.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const COST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 40;

/// A problem in standard form.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Pivot cap; `None` means `50·(rows + columns)`.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iterations: None }
    }
}

struct Tableau {
    rows: usize,
    /// Structural + artificial columns, excluding the RHS.
    cols: usize,
    /// Number of structural columns; artificials follow.
    structural: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    /// Objective row is stored at index `rows`.
    fn cost(&self, c: usize) -> f64 {
        self.at(self.rows, c)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        let prow_start = pr * w;
        for v in &mut self.data[prow_start..prow_start + w] {
            *v *= inv;
        }
        self.data[prow_start + pc] = 1.0;
        let prow: Vec<f64> = self.data[prow_start..prow_start + w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&j| prow[j] != 0.0).collect();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let start = r * w;
            let factor = self.data[start + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[start..start + w];
            for &j in &nz {
                row[j] -= factor * prow[j];
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    /// Run simplex iterations on the current objective row. Columns at or
    /// beyond `allowed` never enter.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let mut bland = false;
        let mut streak = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::SolverFailure(format!(
                    "iteration cap {} exceeded",
                    self.max_iterations
                )));
            }
            let entering = if bland {
                (0..allowed).find(|&j| self.cost(j) < -COST_TOL)
            } else {
                let mut best = None;
                let mut best_val = -COST_TOL;
                for j in 0..allowed {
                    let v = self.cost(j);
                    if v < best_val {
                        best_val = v;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(pc) = entering else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.at(lr, pc)
                            }
                        } else {
                            ratio < lratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leave else {
                return Err(Error::SolverFailure("problem is unbounded".into()));
            };
            if ratio <= 1e-14 {
                streak += 1;
                if streak >= DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(pr, pc);
        }
    }

    fn load_objective(&mut self, costs: &[f64]) {
        let w = self.width;
        let obj = self.rows * w;
        for j in 0..w {
            self.data[obj + j] = if j < costs.len() { costs[j] } else { 0.0 };
        }
        for r in 0..self.rows {
            let cb = costs.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                let v = self.data[r * w + j];
                self.data[obj + j] -= cb * v;
            }
        }
    }
}

/// Solve a standard-form LP.
pub fn solve(lp: &StandardLp, opts: SimplexOptions) -> Result<LpSolution> {
    let (m, k) = lp.a.shape();
    if lp.b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: lp.b.len() });
    }
    if lp.c.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: lp.c.len() });
    }

    // Row signs so that b ≥ 0.
    let signs: Vec<f64> = lp.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();

    // Reuse existing unit columns (slacks) as the starting basis where possible.
    let mut basis = vec![usize::MAX; m];
    for j in 0..k {
        let mut hit = None;
        let mut unit = true;
        for r in 0..m {
            let v = lp.a[(r, j)] * signs[r];
            if v == 0.0 {
                continue;
            }
            if v == 1.0 && hit.is_none() {
                hit = Some(r);
            } else {
                unit = false;
                break;
            }
        }
        if let (true, Some(r)) = (unit, hit) {
            if basis[r] == usize::MAX {
                basis[r] = j;
            }
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&r| basis[r] == usize::MAX).collect();
    let cols = k + artificial_rows.len();
    let width = cols + 1;
    let mut data = vec![0.0; (m + 1) * width];
    for r in 0..m {
        for j in 0..k {
            data[r * width + j] = lp.a[(r, j)] * signs[r];
        }
        data[r * width + cols] = lp.b[r] * signs[r];
    }
    for (i, &r) in artificial_rows.iter().enumerate() {
        data[r * width + k + i] = 1.0;
        basis[r] = k + i;
    }
    let max_iterations = opts.max_iterations.unwrap_or(50 * (m + cols));
    let mut tab = Tableau {
        rows: m,
        cols,
        structural: k,
        width,
        data,
        basis,
        iterations: 0,
        max_iterations,
    };

    if !artificial_rows.is_empty() {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(k) {
            *c = 1.0;
        }
        tab.load_objective(&phase1);
        tab.optimize(cols)?;
        let infeasibility = -tab.rhs(m);
        let scale = 1.0 + lp.b.iter().map(|v| v.abs()).sum::<f64>();
        if infeasibility > 1e-8 * scale {
            return Err(Error::SolverFailure(format!(
                "problem is infeasible (phase-one residual {infeasibility:e})"
            )));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] < k {
                continue;
            }
            let col = (0..k)
                .filter(|&j| tab.at(r, j).abs() > PIVOT_TOL)
                .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
            if let Some(j) = col {
                tab.pivot(r, j);
            }
        }
    }

    let mut costs = lp.c.clone();
    costs.resize(cols, 0.0);
    tab.load_objective(&costs);
    tab.optimize(tab.structural)?;

    let mut x = vec![0.0; k];
    for r in 0..m {
        if tab.basis[r] < k {
            x[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    polish(lp, &signs, &tab.basis, &artificial_rows, &mut x);
    let objective = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective, iterations: tab.iterations })
}

/// Recompute the basic variables by solving `B x_B = b` with the original
/// columns. Keeps the tableau values if the basis matrix is ill-conditioned.
fn polish(lp: &StandardLp, signs: &[f64], basis: &[usize], artificial_rows: &[usize], x: &mut [f64]) {
    let k = lp.c.len();
    let m = basis.len();
    if m == 0 {
        return;
    }
    let bmat = DMatrix::from_fn(m, m, |r, c| {
        let j = basis[c];
        if j < k {
            lp.a[(r, j)] * signs[r]
        } else {
            // Artificial column: the unit vector of the row it was created for.
            // Any remaining artificial sits on a redundant row at level zero.
            if r == artificial_rows[j - k] {
                1.0
            } else {
                0.0
            }
        }
    });
    let rhs = DVector::from_iterator(m, lp.b.iter().zip(signs).map(|(b, s)| b * s));
    let Some(sol) = bmat.lu().solve(&rhs) else { return };
    if sol.iter().any(|v| !v.is_finite() || *v < -1e-7) {
        return;
    }
    // Reject the refinement if it drifts far from the tableau values.
    let drift = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j < k)
        .map(|(i, &j)| (sol[i] - x[j]).abs())
        .fold(0.0, f64::max);
    let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if drift > 1e-6 * scale {
        return;
    }
    for (i, &j) in basis.iter().enumerate() {
        if j < k {
            x[j] = sol[i].max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: usize, cols: usize, a: &[f64], b: &[f64], c: &[f64]) -> StandardLp {
        StandardLp {
            a: DMatrix::from_row_slice(rows, cols, a),
            b: b.to_vec(),
            c: c.to_vec(),
        }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  → (2, 6), 36.
        let p = lp(
            3,
            5,
            &[
                1.0, 0.0, 1.0, 0.0, 0.0, //
                0.0, 2.0, 0.0, 1.0, 0.0, //
                3.0, 2.0, 0.0, 0.0, 1.0,
            ],
            &[4.0, 12.0, 18.0],
            &[-3.0, -5.0, 0.0, 0.0, 0.0],
        );
        let s = solve(&p, SimplexOptions::default()).unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn needs_phase_one() {
        // min x + y s.t. x + y = 2, x - y = 0 → x = y = 1.
        let p = lp(2, 2, &[1.0, 1.0, 1.0, -1.0], &[2.0, 0.0], &[1.0, 1.0]);
        let s = solve(&p, SimplexOptions::default()).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // min x s.t. -x + s = -3 (i.e. x >= 3)
        let p = lp(1, 2, &[-1.0, 1.0], &[-3.0], &[1.0, 0.0]);
        let s = solve(&p, SimplexOptions::default()).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x + y = -1 with x, y >= 0.
        let p = lp(1, 2, &[1.0, 1.0], &[-1.0], &[0.0, 0.0]);
        assert!(matches!(solve(&p, SimplexOptions::default()), Err(Error::SolverFailure(_))));
        // min -x s.t. x - y = 0.
        let p = lp(1, 2, &[1.0, -1.0], &[0.0], &[-1.0, 0.0]);
        assert!(matches!(solve(&p, SimplexOptions::default()), Err(Error::SolverFailure(_))));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // x + y = 1 stated twice.
        let p = lp(2, 2, &[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0]);
        let s = solve(&p, SimplexOptions::default()).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let p = lp(
            3,
            5,
            &[
                1.0, 0.0, 1.0, 0.0, 0.0, //
                0.0, 2.0, 0.0, 1.0, 0.0, //
                3.0, 2.0, 0.0, 0.0, 1.0,
            ],
            &[4.0, 12.0, 18.0],
            &[-3.0, -5.0, 0.0, 0.0, 0.0],
        );
        let err = solve(&p, SimplexOptions { max_iterations: Some(1) }).unwrap_err();
        assert!(matches!(err, Error::SolverFailure(_)));
    }
}
