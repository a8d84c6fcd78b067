//! Linear-programming bounds on the least receive count `r(z)` over all
//! degree distributions.
//!
//! With `a(i) = r P(i)` the design problem for recovery fraction `z` is the
//! semi-infinite LP
//!
//! ```text
//! min  a(1) + ... + a(m)   s.t.  sum_i a(i) i t^(i-1) >= -ln(1-t),  0 <= t < z
//! ```
//!
//! whose dual maximizes `E[-ln(1-X)]` over sub-probability measures on
//! `[0, z]` with `E[i X^(i-1)] <= 1`. Any feasible dual point is a lower
//! bound on `r(z)`, so the dual restricted to a grid is a valid outer bound
//! for every grid. Both problems are solved through the dual tableau: it has
//! only `m` rows, and the primal coefficients are read off its shadow prices.

pub mod simplex;

use rayon::prelude::*;

pub use simplex::{simplex_solve, LpProblem, LpSolution, LpStatus, Relation, Sense};

use crate::degree_dist::{support_bound, DegreeDistribution};
use crate::error::{Error, Result};
use crate::report::fmt_sig9;

/// Largest admissible `z`: support bound 200. The dense solver needs minutes
/// per solve beyond this.
pub const MAX_Z: f64 = 200.0 / 201.0;
pub const DEFAULT_BOUND_GRID_STEP: f64 = 1e-3;

const MAX_PIVOTS: usize = 1_000_000;

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0 && z <= MAX_Z) {
        return Err(Error::range(format!("z must lie in (0, 200/201], got {z}")));
    }
    Ok(())
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step <= 0.01) {
        return Err(Error::param(format!("grid step must lie in (0, 0.01], got {step}")));
    }
    Ok(())
}

/// `0, h, 2h, ...` strictly below `z`, then `z` itself.
fn support_grid(z: f64, step: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..)
        .map(|j| j as f64 * step)
        .take_while(|&x| x < z - 1e-9 * step)
        .collect();
    grid.push(z);
    grid
}

/// Grid-restricted dual: maximize `sum_j f_j (-ln(1-x_j))` subject to
/// `sum_j f_j i x_j^(i-1) <= 1` for `i = 1..=max_degree`.
fn dual_problem(grid: &[f64], max_degree: u32) -> LpProblem {
    let objective = grid.iter().map(|&x| -(-x).ln_1p()).collect();
    let mut lp = LpProblem::new(Sense::Maximize, objective);
    for i in 1..=max_degree {
        let row = grid.iter().map(|&x| i as f64 * x.powi(i as i32 - 1)).collect();
        lp.add_constraint(row, Relation::Le, 1.0);
    }
    lp
}

fn solve_dual(z: f64, step: f64, max_degree: u32) -> Result<(Vec<f64>, LpSolution)> {
    let grid = support_grid(z, step);
    let lp = dual_problem(&grid, max_degree);
    let sol = simplex_solve(&lp, MAX_PIVOTS)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("bound LP at z = {z} ended with {:?}", sol.status)));
    }
    Ok((grid, sol))
}

/// Optimal grid-restricted dual measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBound {
    pub z: f64,
    pub m: u32,
    pub value: f64,
    /// Support points `(x, f(x))` with positive mass.
    pub support: Vec<(f64, f64)>,
}

/// Outer bound on `r(z)` from the dual restricted to a grid of spacing
/// `grid_step` over `[0, z]` (`z` included).
pub fn dual_outer_bound(z: f64, grid_step: f64) -> Result<f64> {
    Ok(dual_outer_bound_detail(z, grid_step)?.value)
}

pub fn dual_outer_bound_detail(z: f64, grid_step: f64) -> Result<DualBound> {
    check_z(z)?;
    check_step(grid_step)?;
    let m = support_bound(z);
    let (grid, sol) = solve_dual(z, grid_step, m)?;
    // Rescale the solver's measure so every row holds exactly; any feasible
    // measure gives a valid bound.
    let f: Vec<f64> = sol.variable_values.iter().map(|&f| f.max(0.0)).collect();
    let load = (1..=m)
        .map(|i| grid.iter().zip(&f).map(|(&x, &w)| w * i as f64 * x.powi(i as i32 - 1)).sum::<f64>())
        .fold(1.0f64, f64::max);
    let value = grid.iter().zip(&f).map(|(&x, &w)| w * -(-x).ln_1p()).sum::<f64>() / load;
    let support = grid
        .iter()
        .zip(&f)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(&x, &w)| (x, w / load))
        .collect();
    Ok(DualBound { z, m, value, support })
}

/// Primal design from the discretized LP, inflated to be feasible on a
/// grid ten times finer.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalBound {
    pub distribution: DegreeDistribution,
    /// Feasible receive count: `inflation * r_discrete`.
    pub r: f64,
    /// Optimum of the grid-restricted LP.
    pub r_discrete: f64,
    pub inflation: f64,
    /// `a(1..=max_degree)` before normalization.
    pub coefficients: Vec<f64>,
}

/// Solves the primal with support `1..=m`, `m = support_bound(z)`.
pub fn primal_min_r(z: f64, constraint_grid_step: f64) -> Result<PrimalBound> {
    primal_min_r_with_support(z, constraint_grid_step, support_bound(z))
}

/// Solves the primal with support `1..=max_degree`.
///
/// Constraints are imposed at the grid points of `[0, z)` and at `z`, where
/// the constraint holds by continuity. Because a grid drops constraints, the
/// solution is then checked on a ten times finer grid and scaled by the
/// smallest factor that restores feasibility there.
pub fn primal_min_r_with_support(z: f64, constraint_grid_step: f64, max_degree: u32) -> Result<PrimalBound> {
    check_z(z)?;
    check_step(constraint_grid_step)?;
    if max_degree == 0 {
        return Err(Error::param("max_degree must be at least 1"));
    }
    let (_, sol) = solve_dual(z, constraint_grid_step, max_degree)?;
    let mut coefficients = sol.duals;
    for a in &mut coefficients {
        if *a < -1e-9 {
            return Err(Error::Internal(format!("negative primal coefficient {a}")));
        }
        if *a < 1e-12 {
            *a = 0.0;
        }
    }
    let r_discrete: f64 = coefficients.iter().sum();

    let slope = |t: f64| -> f64 {
        coefficients
            .iter()
            .enumerate()
            .map(|(idx, a)| a * (idx + 1) as f64 * t.powi(idx as i32))
            .sum()
    };
    let fine = constraint_grid_step / 10.0;
    let mut inflation = 1.0f64;
    for t in support_grid(z, fine).into_iter().skip(1) {
        let s = slope(t);
        let need = -(-t).ln_1p();
        if s <= 0.0 {
            return Err(Error::Internal(format!("primal slope vanishes at t = {t}")));
        }
        inflation = inflation.max(need / s);
    }

    let entries = coefficients
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(idx, &a)| (idx as u32 + 1, a / r_discrete))
        .collect();
    let distribution = DegreeDistribution::new(format!("lp_primal({z})"), entries)?;
    Ok(PrimalBound { distribution, r: inflation * r_discrete, r_discrete, inflation, coefficients })
}

/// The two-point dual measure certifying degree-two optimality on
/// `[1/2, 2/3]`: mass `1/(2z)` at `z`, the rest at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub points: Vec<(f64, f64)>,
}

impl DualCertificate {
    pub fn degree_two(z: f64) -> Self {
        let w = 1.0 / (2.0 * z);
        DualCertificate { points: vec![(0.0, 1.0 - w), (z, w)] }
    }

    pub fn value(&self) -> f64 {
        self.points.iter().map(|&(x, f)| f * -(-x).ln_1p()).sum()
    }

    /// Checks `f >= 0` and `E[X^(i-1)] <= 1/i` for `i = 1..=m`.
    pub fn is_feasible(&self, m: u32, tol: f64) -> bool {
        self.points.iter().all(|&(_, f)| f >= -tol)
            && (1..=m).all(|i| {
                let moment: f64 = self.points.iter().map(|&(x, f)| f * x.powi(i as i32 - 1)).sum();
                moment <= 1.0 / i as f64 + tol
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub z: f64,
    pub r_lower: f64,
    pub r_upper: f64,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub rows: Vec<BoundRow>,
    pub grid_step: f64,
}

impl BoundCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,r_lower,r_upper,m\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_sig9(row.z),
                fmt_sig9(row.r_lower),
                fmt_sig9(row.r_upper),
                row.m
            ));
        }
        out
    }
}

/// Dual lower and primal upper values for each `z`, in input order.
pub fn outer_bound_curve(z_values: &[f64], grid_step: f64) -> Result<BoundCurve> {
    check_step(grid_step)?;
    let rows = z_values
        .par_iter()
        .map(|&z| {
            let r_lower = dual_outer_bound(z, grid_step)?;
            let primal = primal_min_r(z, grid_step)?;
            Ok(BoundRow { z, r_lower, r_upper: primal.r, m: support_bound(z) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve { rows, grid_step })
}
