//! Asymptotic decoded fraction of the peeling decoder.
//!
//! Everything here is driven by the decoding margin
//! `g(t) = r P'(t) + ln(1 - t)`: the decoder asymptotically recovers the
//! fraction `s(r, P)` given by the first point where `g` turns negative.

use crate::degree_dist::DegreeDistribution;
use crate::error::{Error, Result};

pub const DEFAULT_GRID_STEP: f64 = 1e-4;
pub const DEFAULT_REFINE_TOL: f64 = 1e-9;

/// Where an `(r, z)` point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSource {
    Asymptotic,
    LpOuterBound,
    TruncatedSolitonInner,
    Simulation,
}

/// A normalized receive count `r` paired with a recovered fraction `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisPoint {
    pub r: f64,
    pub z: f64,
    pub source: PointSource,
    pub tolerance: f64,
}

impl AnalysisPoint {
    pub fn new(r: f64, z: f64, source: PointSource, tolerance: f64) -> Result<Self> {
        if r.is_nan() || r < 0.0 || !(0.0..=1.0).contains(&z) || tolerance.is_nan() || tolerance < 0.0 {
            return Err(Error::param(format!("invalid analysis point r={r} z={z} tol={tolerance}")));
        }
        Ok(AnalysisPoint { r, z, source, tolerance })
    }
}

/// `g(t) = r P'(t) + ln(1 - t)` for `t` in `[0, 1)`.
pub fn decoding_margin(r: f64, p: &DegreeDistribution, t: f64) -> f64 {
    r * p.pgf_derivative_unchecked(t) + (-t).ln_1p()
}

fn check_grid(grid_step: f64, refine_tol: f64) -> Result<()> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::param(format!("grid_step must lie in (0, 0.5], got {grid_step}")));
    }
    if !(refine_tol > 0.0 && refine_tol <= grid_step) {
        return Err(Error::param(format!("refine_tol must lie in (0, grid_step], got {refine_tol}")));
    }
    Ok(())
}

/// Asymptotic recovered fraction `s(r, P) = inf{t in [0,1): g(t) < 0} ∧ 1`.
///
/// The margin is scanned on a uniform grid and the first sign change is
/// bisected down to `refine_tol`. "Negative" means `g < -refine_tol`, which
/// makes the degenerate `g ≡ 0` case (limiting soliton at `r = 1`)
/// deterministic instead of following rounding noise. Returns 1 when no grid
/// point up to `1 - grid_step` is negative.
pub fn s_of_r(r: f64, p: &DegreeDistribution, grid_step: f64, refine_tol: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::param(format!("r must be a nonnegative number, got {r}")));
    }
    check_grid(grid_step, refine_tol)?;
    let negative = |t: f64| decoding_margin(r, p, t) < -refine_tol;

    let last = ((1.0 - grid_step) / grid_step + 1e-9).floor() as u64;
    for j in 1..=last {
        let t = j as f64 * grid_step;
        if negative(t) {
            let (mut lo, mut hi) = ((j - 1) as f64 * grid_step, t);
            while hi - lo > refine_tol {
                let mid = 0.5 * (lo + hi);
                if negative(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
    }
    Ok(1.0)
}

/// Least normalized receive count at which `P` asymptotically recovers `z`.
///
/// `g >= 0` on `[0, z)` holds exactly when `r >= -ln(1-t)/P'(t)` for every
/// `t` in `(0, z)`, so `r(z, P)` is the supremum of that ratio. The ratio is
/// sampled on the grid, at `t = z` (the supremum's limit from the left), and
/// refined by golden-section search around the best interior grid point.
/// Points with `t < grid_step` are skipped: the ratio tends to 0 there when
/// `P(1) > 0`. Returns `f64::INFINITY` if `P'` vanishes somewhere in `(0, z]`.
pub fn r_of_z(z: f64, p: &DegreeDistribution, grid_step: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::range(format!("z must lie in [0, 1), got {z}")));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::param(format!("grid_step must lie in (0, 0.5], got {grid_step}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let ratio = |t: f64| {
        let slope = p.pgf_derivative_unchecked(t);
        if slope > 0.0 {
            -(-t).ln_1p() / slope
        } else {
            f64::INFINITY
        }
    };

    let mut best = ratio(z);
    let mut best_t = z;
    let mut j = 1u64;
    loop {
        let t = j as f64 * grid_step;
        if t >= z {
            break;
        }
        let v = ratio(t);
        if v > best {
            best = v;
            best_t = t;
        }
        j += 1;
    }
    if best.is_infinite() || best_t == z {
        return Ok(best);
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((best_t - grid_step).max(grid_step), (best_t + grid_step).min(z));
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (ratio(x1), ratio(x2));
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ratio(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ratio(x2);
        }
    }
    Ok(best.max(f1).max(f2))
}

/// Checks the hypothesis `g(t) > 0 for 0 <= t < s(r, P)` on the grid.
///
/// `g(0) = r P(1)` is exact and must be strictly positive, so any
/// distribution without degree-one mass fails. Grid points within two steps
/// of `s` whose margin is within `DEFAULT_REFINE_TOL` of zero are treated as
/// the endpoint and skipped.
pub fn check_condition3(r: f64, p: &DegreeDistribution, grid_step: f64) -> Result<bool> {
    let tol = DEFAULT_REFINE_TOL;
    let s = s_of_r(r, p, grid_step, tol.min(grid_step))?;
    if r * p.mass(1) <= 0.0 || r.is_nan() {
        return Ok(false);
    }
    let mut j = 1u64;
    loop {
        let t = j as f64 * grid_step;
        if t >= s {
            return Ok(true);
        }
        let g = decoding_margin(r, p, t);
        if (g <= 0.0 || g.is_nan()) && !(t >= s - 2.0 * grid_step && g.abs() <= tol) {
            return Ok(false);
        }
        j += 1;
    }
}
