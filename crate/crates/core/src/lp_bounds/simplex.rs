//! Dense two-phase tableau simplex.
//!
//! Largest-coefficient pricing, falling back to Bland's rule after a run of
//! degenerate pivots. The basis is refactorized every few dozen pivots and
//! before optimality is declared. Sized for the small bound problems in this
//! crate (a few thousand columns, at most a few hundred rows).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// Dense linear program `opt c·x` subject to `A x (<=|>=|=) b`, `x >= lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraint_matrix: Vec<Vec<f64>>,
    pub constraint_rhs: Vec<f64>,
    pub sense: Sense,
    pub row_relations: Vec<Relation>,
    pub variable_lower_bounds: Vec<f64>,
}

impl LpProblem {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            constraint_matrix: Vec::new(),
            constraint_rhs: Vec::new(),
            sense,
            row_relations: Vec::new(),
            variable_lower_bounds: vec![0.0; n],
        }
    }

    pub fn add_constraint(&mut self, row: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraint_matrix.push(row);
        self.row_relations.push(relation);
        self.constraint_rhs.push(rhs);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraint_matrix.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        let m = self.constraint_matrix.len();
        if self.constraint_rhs.len() != m || self.row_relations.len() != m {
            return Err(Error::param("row count mismatch between matrix, rhs and relations"));
        }
        if self.variable_lower_bounds.len() != n {
            return Err(Error::param("lower bound count differs from variable count"));
        }
        if let Some(i) = self.constraint_matrix.iter().position(|row| row.len() != n) {
            return Err(Error::param(format!("constraint row {i} has the wrong length")));
        }
        let all_finite = self.objective.iter().all(|v| v.is_finite())
            && self.constraint_rhs.iter().all(|v| v.is_finite())
            && self.variable_lower_bounds.iter().all(|v| v.is_finite())
            && self.constraint_matrix.iter().flatten().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::param("LP data must be finite"));
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, (&rel, &b)) in self
            .constraint_matrix
            .iter()
            .zip(self.row_relations.iter().zip(&self.constraint_rhs))
        {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match rel {
                Relation::Le => lhs - b,
                Relation::Ge => b - lhs,
                Relation::Eq => (lhs - b).abs(),
            };
            worst = worst.max(v);
        }
        for (&v, &l) in x.iter().zip(&self.variable_lower_bounds) {
            worst = worst.max(l - v);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub variable_values: Vec<f64>,
    /// Shadow price of each constraint row, in the sign convention of the
    /// original problem (nonnegative for binding `<=` rows of a maximization
    /// and for binding `>=` rows of a minimization).
    pub duals: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    rhs: Vec<f64>,
    /// Row-flipped constraint data with slack and artificial columns, kept
    /// for reinversion.
    orig: Vec<f64>,
    orig_rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Column holding `+e_i` for each row: slack or artificial.
    unit_col: Vec<usize>,
    first_artificial: usize,
}

/// Pivots between refactorizations of the basis.
const REINVERT_EVERY: usize = 50;
/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: &mut [f64], obj: &mut f64) {
        let w = self.width;
        let p = self.data[row * w + col];
        for v in &mut self.data[row * w..(row + 1) * w] {
            *v /= p;
        }
        self.rhs[row] /= p;
        let (pivot_row, pivot_rhs) = (self.data[row * w..(row + 1) * w].to_vec(), self.rhs[row]);
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.data[i * w + col];
            if f != 0.0 {
                for (v, pv) in self.data[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = reduced[col];
        if f != 0.0 {
            for (v, pv) in reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            *obj -= f * pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Rebuilds `B^-1 A` and `B^-1 b` from the original data with an LU
    /// factorization of the current basis. Leaves the tableau untouched and
    /// returns false if the basis is numerically singular.
    fn reinvert(&mut self) -> bool {
        let (m, w) = (self.rows, self.width);
        let b = DMatrix::from_fn(m, m, |i, k| self.orig[i * w + self.basis[k]]);
        let lu = b.lu();
        let a = DMatrix::from_fn(m, w + 1, |i, j| if j < w { self.orig[i * w + j] } else { self.orig_rhs[i] });
        let Some(sol) = lu.solve(&a) else { return false };
        if sol.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..m {
            for j in 0..w {
                self.data[i * w + j] = sol[(i, j)];
            }
            self.rhs[i] = sol[(i, w)];
        }
        for (i, &col) in self.basis.iter().enumerate() {
            for k in 0..m {
                self.data[k * w + col] = if k == i { 1.0 } else { 0.0 };
            }
        }
        true
    }

    /// Reduced costs `c_B B^-1 A - c` and objective for a maximization of `c`.
    fn price(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut reduced: Vec<f64> = cost.iter().map(|c| -c).collect();
        let mut obj = 0.0;
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (j, r) in reduced.iter_mut().enumerate() {
                    *r += cb * self.at(i, j);
                }
                obj += cb * self.rhs[i];
            }
        }
        (reduced, obj)
    }

    /// Maximizes `cost` from the current basis. Columns at or beyond
    /// `enter_limit` never enter. Returns the final reduced costs and objective.
    fn optimize(
        &mut self,
        cost: &[f64],
        enter_limit: usize,
        iterations: &mut usize,
        max_iterations: usize,
    ) -> (LpStatus, Vec<f64>, f64) {
        let (mut reduced, mut obj) = self.price(cost);
        let mut since_reinvert = 0usize;
        let mut stalled = 0usize;
        loop {
            if since_reinvert >= REINVERT_EVERY {
                if self.reinvert() {
                    (reduced, obj) = self.price(cost);
                }
                since_reinvert = 0;
            }
            let entering = if stalled >= STALL_LIMIT {
                (0..enter_limit).find(|&j| reduced[j] < -PIVOT_TOL)
            } else {
                (0..enter_limit)
                    .filter(|&j| reduced[j] < -PIVOT_TOL)
                    .min_by(|&a, &b| reduced[a].total_cmp(&reduced[b]))
            };
            let Some(col) = entering else {
                if since_reinvert > 0 && self.reinvert() {
                    (reduced, obj) = self.price(cost);
                    since_reinvert = 0;
                    if (0..enter_limit).any(|j| reduced[j] < -PIVOT_TOL) {
                        continue;
                    }
                }
                return (LpStatus::Optimal, reduced, obj);
            };
            if *iterations >= max_iterations {
                return (LpStatus::IterationLimit, reduced, obj);
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if (ratio < lr && !tie) || (tie && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, ratio)) = leave else {
                return (LpStatus::Unbounded, reduced, obj);
            };
            stalled = if ratio <= 0.0 { stalled + 1 } else { 0 };
            self.pivot(row, col, &mut reduced, &mut obj);
            *iterations += 1;
            since_reinvert += 1;
        }
    }
}

/// Solves `problem` with at most `max_iterations` pivots across both phases.
pub fn simplex_solve(problem: &LpProblem, max_iterations: usize) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars();
    let m = problem.num_rows();
    let obj_sign = match problem.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };

    // Shift x = y + lower so that y >= 0, and flip rows to make b >= 0.
    let lower = &problem.variable_lower_bounds;
    let mut rows: Vec<(Vec<f64>, Relation, f64, f64)> = Vec::with_capacity(m);
    for ((row, &rel), &b) in problem
        .constraint_matrix
        .iter()
        .zip(&problem.row_relations)
        .zip(&problem.constraint_rhs)
    {
        let shifted = b - row.iter().zip(lower).map(|(a, l)| a * l).sum::<f64>();
        if shifted < 0.0 {
            let flipped = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            rows.push((row.iter().map(|a| -a).collect(), flipped, -shifted, -1.0));
        } else {
            rows.push((row.clone(), rel, shifted, 1.0));
        }
    }

    let n_aux = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let first_artificial = n + n_aux;
    let width = first_artificial + n_art;
    let mut tab = Tableau {
        rows: m,
        width,
        data: vec![0.0; m * width],
        rhs: vec![0.0; m],
        orig: Vec::new(),
        orig_rhs: Vec::new(),
        basis: vec![0; m],
        unit_col: vec![0; m],
        first_artificial,
    };
    let (mut aux, mut art) = (n, first_artificial);
    for (i, (row, rel, b, _)) in rows.iter().enumerate() {
        tab.data[i * width..i * width + n].copy_from_slice(row);
        tab.rhs[i] = *b;
        match rel {
            Relation::Le => {
                tab.data[i * width + aux] = 1.0;
                tab.basis[i] = aux;
                tab.unit_col[i] = aux;
                aux += 1;
            }
            Relation::Ge => {
                tab.data[i * width + aux] = -1.0;
                aux += 1;
                tab.data[i * width + art] = 1.0;
                tab.basis[i] = art;
                tab.unit_col[i] = art;
                art += 1;
            }
            Relation::Eq => {
                tab.data[i * width + art] = 1.0;
                tab.basis[i] = art;
                tab.unit_col[i] = art;
                art += 1;
            }
        }
    }

    tab.orig = tab.data.clone();
    tab.orig_rhs = tab.rhs.clone();

    let mut iterations = 0usize;
    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        for c in &mut phase1[first_artificial..] {
            *c = -1.0;
        }
        let (status, mut reduced, mut obj) = tab.optimize(&phase1, width, &mut iterations, max_iterations);
        if status == LpStatus::IterationLimit {
            return Ok(unsolved(LpStatus::IterationLimit, n, m, iterations));
        }
        if obj < -FEAS_TOL * (1.0 + tab.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
            return Ok(unsolved(LpStatus::Infeasible, n, m, iterations));
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= first_artificial {
                if let Some(j) = (0..first_artificial).find(|&j| tab.at(i, j).abs() > PIVOT_TOL) {
                    tab.pivot(i, j, &mut reduced, &mut obj);
                }
            }
        }
    }

    let mut cost = vec![0.0; width];
    for (c, &orig) in cost.iter_mut().zip(&problem.objective) {
        *c = obj_sign * orig;
    }
    let (status, reduced, _) = tab.optimize(&cost, tab.first_artificial, &mut iterations, max_iterations);
    if status != LpStatus::Optimal {
        return Ok(unsolved(status, n, m, iterations));
    }

    let mut values = lower.clone();
    for i in 0..m {
        let b = tab.basis[i];
        if b < n {
            values[b] += tab.rhs[i].max(0.0);
        }
    }
    let duals = (0..m)
        .map(|i| obj_sign * rows[i].3 * reduced[tab.unit_col[i]])
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: problem.objective_at(&values),
        variable_values: values,
        duals,
        iterations,
    })
}

fn unsolved(status: LpStatus, n: usize, m: usize, iterations: usize) -> LpSolution {
    LpSolution {
        status,
        objective_value: f64::NAN,
        variable_values: vec![f64::NAN; n],
        duals: vec![f64::NAN; m],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(p: &LpProblem) -> LpSolution {
        let sol = simplex_solve(p, 10_000).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(p.max_violation(&sol.variable_values) <= 1e-9);
        assert!((p.objective_at(&sol.variable_values) - sol.objective_value).abs() <= 1e-9);
        sol
    }

    #[test]
    fn single_variable() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0]);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        let sol = optimal(&p);
        assert!((sol.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_vertex() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 1.0]);
        p.add_constraint(vec![1.0, 2.0], Relation::Le, 4.0);
        p.add_constraint(vec![3.0, 1.0], Relation::Le, 6.0);
        let sol = optimal(&p);
        assert!((sol.objective_value - 2.8).abs() < 1e-12);
        assert!((sol.variable_values[0] - 1.6).abs() < 1e-12);
        assert!((sol.variable_values[1] - 1.2).abs() < 1e-12);
        // y solves [1 3; 2 1] y = [1; 1]: y = (0.4, 0.2)
        assert!((sol.duals[0] - 0.4).abs() < 1e-12 && (sol.duals[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0]);
        p.add_constraint(vec![-1.0], Relation::Le, -1.0);
        p.add_constraint(vec![1.0], Relation::Le, 0.0);
        assert_eq!(simplex_solve(&p, 100).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 0.0]);
        p.add_constraint(vec![-1.0, 1.0], Relation::Le, 1.0);
        assert_eq!(simplex_solve(&p, 100).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn iteration_limit() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 1.0]);
        p.add_constraint(vec![1.0, 2.0], Relation::Le, 4.0);
        p.add_constraint(vec![3.0, 1.0], Relation::Le, 6.0);
        assert_eq!(simplex_solve(&p, 1).unwrap().status, LpStatus::IterationLimit);
    }

    #[test]
    fn minimize_with_ge_and_eq_rows() {
        // min 2x + 3y + z  s.t.  x + y >= 2,  y + z = 1.5,  x - z <= 1.
        // Eliminating z = 1.5 - y gives 2x + 2y + 1.5 >= 5.5, attained along
        // the edge x = 2 - y, 0 <= y <= 1.5.
        let mut p = LpProblem::new(Sense::Minimize, vec![2.0, 3.0, 1.0]);
        p.add_constraint(vec![1.0, 1.0, 0.0], Relation::Ge, 2.0);
        p.add_constraint(vec![0.0, 1.0, 1.0], Relation::Eq, 1.5);
        p.add_constraint(vec![1.0, 0.0, -1.0], Relation::Le, 1.0);
        let sol = optimal(&p);
        assert!((sol.objective_value - 5.5).abs() < 1e-9, "{}", sol.objective_value);
        // strong duality: b·y equals the optimum
        let by: f64 = p.constraint_rhs.iter().zip(&sol.duals).map(|(b, y)| b * y).sum();
        assert!((by - sol.objective_value).abs() < 1e-9);
    }

    #[test]
    fn lower_bounds_and_negative_rhs() {
        // max -x - y  s.t.  -x - y <= -3, x >= 1, y >= 0.5  ->  value -3
        let mut p = LpProblem::new(Sense::Maximize, vec![-1.0, -1.0]);
        p.variable_lower_bounds = vec![1.0, 0.5];
        p.add_constraint(vec![-1.0, -1.0], Relation::Le, -3.0);
        let sol = optimal(&p);
        assert!((sol.objective_value + 3.0).abs() < 1e-12);
        assert!(sol.variable_values[0] >= 1.0 - 1e-12 && sol.variable_values[1] >= 0.5 - 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut p = LpProblem::new(Sense::Maximize, vec![0.75, -150.0, 0.02, -6.0]);
        p.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        p.add_constraint(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        p.add_constraint(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let sol = optimal(&p);
        assert!((sol.objective_value - 0.05).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 2.0]);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert!(simplex_solve(&p, 10).is_err());
        let mut p = LpProblem::new(Sense::Maximize, vec![f64::NAN]);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert!(simplex_solve(&p, 10).is_err());
    }
}
