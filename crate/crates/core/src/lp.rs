//! Dense two-phase simplex for the small linear programs used by the license
//! and credal modules.
//!
//! Problems have the form `max/min cᵀx` subject to rows `aᵀx (≤|≥|=) b` and
//! `x ≥ 0`. Right-hand sides are normalised to be non-negative, a slack or
//! artificial column supplies the initial basis, and phase one drives the
//! artificials out. Pivoting uses Dantzig's rule and switches to Bland's rule
//! after a run of degenerate pivots. Row duals are read off the reduced costs
//! of each row's initial basic column.

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

const MAX_ITERATIONS: usize = 50_000;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    GreaterEq,
    Equal,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// A linear program over non-negative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

/// Optimal primal point, objective value and one dual value per constraint row.
///
/// Duals follow the sign convention of the stated sense: for a maximisation,
/// a binding `≤` row has a non-negative dual equal to the marginal objective
/// gain per unit of right-hand side.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        Self { sense, objective, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.objective.len(), "constraint width must match the objective");
        self.rows.push(Row { coeffs, relation, rhs });
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// Row-major `rows × (cols + 1)`; the last entry of each row is the rhs.
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    kinds: Vec<ColumnKind>,
    basis: Vec<usize>,
    /// Column holding `+e_i` in the initial tableau for row `i`.
    initial_basic: Vec<usize>,
    /// `-1` for rows multiplied through by `-1` to make the rhs non-negative.
    row_sign: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let rows = lp.rows.len();

        let mut normalized = Vec::with_capacity(rows);
        let mut row_sign = Vec::with_capacity(rows);
        for row in &lp.rows {
            if row.rhs < 0.0 {
                let relation = match row.relation {
                    Relation::LessEq => Relation::GreaterEq,
                    Relation::GreaterEq => Relation::LessEq,
                    Relation::Equal => Relation::Equal,
                };
                normalized.push((row.coeffs.iter().map(|c| -c).collect::<Vec<_>>(), relation, -row.rhs));
                row_sign.push(-1.0);
            } else {
                normalized.push((row.coeffs.clone(), row.relation, row.rhs));
                row_sign.push(1.0);
            }
        }

        let n_slack = normalized.iter().filter(|(_, r, _)| *r != Relation::Equal).count();
        let n_art = normalized.iter().filter(|(_, r, _)| *r != Relation::LessEq).count();
        let cols = n + n_slack + n_art;
        let width = cols + 1;

        let mut kinds = vec![ColumnKind::Structural; n];
        kinds.extend(std::iter::repeat(ColumnKind::Slack).take(n_slack));
        kinds.extend(std::iter::repeat(ColumnKind::Artificial).take(n_art));

        let mut data = vec![0.0; rows * width];
        let mut basis = Vec::with_capacity(rows);
        let mut initial_basic = Vec::with_capacity(rows);
        let mut next_slack = n;
        let mut next_art = n + n_slack;
        for (i, (coeffs, relation, rhs)) in normalized.into_iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match relation {
                Relation::LessEq => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    initial_basic.push(next_slack);
                    next_slack += 1;
                }
                Relation::GreaterEq => {
                    row[next_slack] = -1.0;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    initial_basic.push(next_art);
                    next_slack += 1;
                    next_art += 1;
                }
                Relation::Equal => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    initial_basic.push(next_art);
                    next_art += 1;
                }
            }
        }

        Self { data, rows, cols, kinds, basis, initial_basic, row_sign }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn reduced_costs(&self, costs: &[f64]) -> Vec<f64> {
        let mut d = costs.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[r * self.width()..r * self.width() + self.cols];
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        d
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.width();
        let p = self.at(pr, pc);
        for v in &mut self.data[pr * width..(pr + 1) * width] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * width..(pr + 1) * width].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.at(r, pc);
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * width..(r + 1) * width];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Maximises `costs · x` over the current tableau; `allowed` masks entering columns.
    fn optimize(&mut self, costs: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<()> {
        let mut degenerate_run = 0usize;
        for _ in 0..MAX_ITERATIONS {
            let d = self.reduced_costs(costs);
            let use_bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let entering = if use_bland {
                (0..self.cols).find(|&j| allowed(j) && d[j] > PIVOT_TOLERANCE)
            } else {
                (0..self.cols)
                    .filter(|&j| allowed(j) && d[j] > PIVOT_TOLERANCE)
                    .max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
            };
            let Some(pc) = entering else {
                return Ok(());
            };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOLERANCE {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leaving = match leaving {
                        None => Some((r, ratio)),
                        Some((br, best)) => {
                            if ratio < best - PIVOT_TOLERANCE
                                || (ratio <= best + PIVOT_TOLERANCE && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, best))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leaving else {
                return Err(Error::Unbounded);
            };
            if ratio <= PIVOT_TOLERANCE {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
        Err(Error::Precondition("simplex iteration limit reached".into()))
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let n = lp.num_vars();
        let has_artificials = self.kinds.iter().any(|k| *k == ColumnKind::Artificial);

        if has_artificials {
            let phase_one: Vec<f64> = self
                .kinds
                .iter()
                .map(|k| if *k == ColumnKind::Artificial { -1.0 } else { 0.0 })
                .collect();
            self.optimize(&phase_one, &|_| true)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| self.kinds[b] == ColumnKind::Artificial)
                .map(|(r, _)| self.rhs(r))
                .sum();
            if infeasibility > 1e-9 {
                return Err(Error::Infeasible);
            }
            // Pivot zero-level artificials out where a non-artificial column allows it.
            for r in 0..self.rows {
                if self.kinds[self.basis[r]] != ColumnKind::Artificial {
                    continue;
                }
                if let Some(pc) = (0..self.cols)
                    .filter(|&j| self.kinds[j] != ColumnKind::Artificial)
                    .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()))
                    .filter(|&j| self.at(r, j).abs() > PIVOT_TOLERANCE)
                {
                    self.pivot(r, pc);
                }
            }
        }

        let sign = match lp.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let mut costs = vec![0.0; self.cols];
        for (c, &o) in costs.iter_mut().zip(&lp.objective) {
            *c = sign * o;
        }
        let kinds = self.kinds.clone();
        self.optimize(&costs, &|j| kinds[j] != ColumnKind::Artificial)?;

        let mut x = vec![0.0; n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs(r).max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let d = self.reduced_costs(&costs);
        let duals = (0..self.rows)
            .map(|i| -d[self.initial_basic[i]] * self.row_sign[i] * sign)
            .collect();
        Ok(LpSolution { x, objective, duals })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 5.0]);
        lp.add_constraint(vec![1.0, 0.0], Relation::LessEq, 4.0)
            .add_constraint(vec![0.0, 2.0], Relation::LessEq, 12.0)
            .add_constraint(vec![3.0, 2.0], Relation::LessEq, 18.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
        // Shadow prices (0, 1.5, 1).
        let expected = [0.0, 1.5, 1.0];
        for (d, e) in sol.duals.iter().zip(expected) {
            assert!((d - e).abs() < 1e-9, "{:?}", sol.duals);
        }
    }

    #[test]
    fn two_phase_minimization_with_equalities() {
        // min x + y s.t. x + 2y ≥ 4, x - y = 1 → x = 2, y = 1.
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, 2.0], Relation::GreaterEq, 4.0)
            .add_constraint(vec![1.0, -1.0], Relation::Equal, 1.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_rows_are_normalised() {
        // max x s.t. -x ≥ -5 (i.e. x ≤ 5).
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_constraint(vec![-1.0], Relation::GreaterEq, -5.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 5.0).abs() < 1e-12);
        assert!((sol.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_constraint(vec![1.0], Relation::LessEq, 1.0)
            .add_constraint(vec![1.0], Relation::GreaterEq, 2.0);
        assert_eq!(lp.solve().unwrap_err(), Error::Infeasible);

        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, -1.0], Relation::LessEq, 1.0);
        assert_eq!(lp.solve().unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Equal, 1.0)
            .add_constraint(vec![2.0, 2.0], Relation::Equal, 2.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }
}
