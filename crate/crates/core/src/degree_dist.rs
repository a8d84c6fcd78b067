//! Output degree distributions for LT-style rateless codes.
//!
//! A [`DegreeDistribution`] is a finite probability mass function over
//! output degrees. Every constructor in this module produces masses that
//! sum to one within [`MASS_TOLERANCE`] without a renormalization pass.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Largest support the truncated-soliton design will build.
const MAX_DESIGN_DEGREE: u32 = 1_000_000;

/// Finite degree distribution stored sparsely as `(degree, mass)` pairs
/// sorted by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    entries: Vec<(u32, f64)>,
    label: String,
}

impl DegreeDistribution {
    /// Builds a distribution after checking that degrees are distinct,
    /// positive and ascending, and that masses are nonnegative and sum to one.
    pub fn new(label: impl Into<String>, entries: Vec<(u32, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("degree distribution has no entries"));
        }
        let mut prev = 0u32;
        for &(degree, mass) in &entries {
            if degree == 0 {
                return Err(Error::param("degree 0 is not a valid output degree"));
            }
            if degree <= prev {
                return Err(Error::param(format!(
                    "degrees must be distinct and ascending (saw {degree} after {prev})"
                )));
            }
            if !mass.is_finite() || mass < 0.0 {
                return Err(Error::param(format!("mass {mass} on degree {degree} is not a probability")));
            }
            prev = degree;
        }
        let total = compensated_sum(entries.iter().map(|&(_, p)| p));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::param(format!("masses sum to {total:.17}, expected 1")));
        }
        Ok(DegreeDistribution { entries, label: label.into() })
    }

    /// All mass on a single degree.
    pub fn point_mass(degree: u32) -> Result<Self> {
        Self::new(format!("degree{degree}"), vec![(degree, 1.0)])
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn max_degree(&self) -> u32 {
        self.entries.last().map(|e| e.0).unwrap_or(0)
    }

    /// Mass on `degree`, zero outside the support.
    pub fn mass(&self, degree: u32) -> f64 {
        self.entries
            .binary_search_by_key(&degree, |e| e.0)
            .map(|idx| self.entries[idx].1)
            .unwrap_or(0.0)
    }

    pub fn mean_degree(&self) -> f64 {
        compensated_sum(self.entries.iter().map(|&(d, p)| d as f64 * p))
    }

    /// Generating function `sum_i P(i) t^i`.
    pub fn pgf_eval(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        Ok(self.pgf_unchecked(t))
    }

    /// Derivative of the generating function, `sum_i P(i) i t^(i-1)`.
    pub fn pgf_derivative(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        Ok(self.pgf_derivative_unchecked(t))
    }

    pub(crate) fn pgf_unchecked(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut power = 1.0;
        let mut exponent = 0u32;
        for &(degree, mass) in &self.entries {
            power *= t.powi((degree - exponent) as i32);
            exponent = degree;
            if power == 0.0 {
                break;
            }
            acc += mass * power;
        }
        acc
    }

    pub(crate) fn pgf_derivative_unchecked(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut power = 1.0;
        let mut exponent = 0u32;
        for &(degree, mass) in &self.entries {
            // power tracks t^(degree - 1)
            power *= t.powi((degree - 1 - exponent) as i32);
            exponent = degree - 1;
            if power == 0.0 {
                break;
            }
            acc += mass * degree as f64 * power;
        }
        acc
    }

    /// Serializes to the tab-separated distribution file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# label: {}", self.label);
        for &(degree, mass) in &self.entries {
            let _ = writeln!(out, "{degree}\t{mass}");
        }
        out
    }

    /// Parses the distribution file format: `degree<TAB>mass` lines, with
    /// `#` comment lines and blank lines ignored. A `# label: NAME` comment
    /// sets the label.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut label = String::from("file");
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(name) = comment.trim().strip_prefix("label:") {
                    label = name.trim().to_string();
                }
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let mut fields = line.split_whitespace();
            let (Some(d), Some(p), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected `degree<TAB>mass`, got {line:?}")));
            };
            let degree: u32 = d.parse().map_err(|e| parse_err(format!("bad degree {d:?}: {e}")))?;
            let mass: f64 = p.parse().map_err(|e| parse_err(format!("bad mass {p:?}: {e}")))?;
            entries.push((degree, mass));
        }
        entries.sort_by_key(|e| e.0);
        Self::new(label, entries)
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::range(format!("t = {t} is outside [0, 1]")))
    }
}

/// Neumaier summation; keeps the mass check meaningful for supports with
/// thousands of entries.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Smallest `m >= 1` with `z <= m/(m+1)`; at `z = m/(m+1)` this is the
/// smaller of the two admissible values. Optimal distributions for recovery
/// fraction `z` need no degree above `m`.
pub fn support_bound(z: f64) -> u32 {
    if z <= 0.0 {
        return 1;
    }
    let ratio = z / (1.0 - z);
    (ratio - 1e-9).ceil().max(1.0) as u32
}

/// Luby's ideal soliton for `k` inputs: `1/k` on degree one and
/// `1/(i(i-1))` on degrees `2..=k`.
pub fn ideal_soliton(k: u32) -> Result<DegreeDistribution> {
    if k < 2 {
        return Err(Error::param(format!("ideal soliton needs k >= 2, got {k}")));
    }
    let mut entries = Vec::with_capacity(k as usize);
    entries.push((1, 1.0 / k as f64));
    for i in 2..=k {
        let i = i as f64;
        entries.push((i as u32, 1.0 / (i * (i - 1.0))));
    }
    DegreeDistribution::new(format!("ideal_soliton({k})"), entries)
}

/// The limiting soliton `I(i) = 1/(i(i-1))`, `i >= 2`, truncated at
/// `max_degree` with the tail mass `1/(max_degree-1)` lumped onto
/// `max_degree`. Carries no degree-one mass, so the peeling decoder cannot
/// start on it alone.
pub fn limiting_soliton(max_degree: u32) -> Result<DegreeDistribution> {
    if max_degree < 2 {
        return Err(Error::param(format!("limiting soliton needs max_degree >= 2, got {max_degree}")));
    }
    let mut entries = Vec::with_capacity(max_degree as usize);
    for i in 2..max_degree {
        let i = i as f64;
        entries.push((i as u32, 1.0 / (i * (i - 1.0))));
    }
    entries.push((max_degree, 1.0 / (max_degree as f64 - 1.0)));
    DegreeDistribution::new(format!("limiting_soliton({max_degree})"), entries)
}

/// Robust soliton (Luby's construction): ideal soliton plus the correction
/// `tau(i) = R/(ik)` for `i < k/R`, a spike `R ln(R/fail_prob)/k` at
/// `k/R`, normalized. `R = c ln(k/fail_prob) sqrt(k)` and the spike degree is
/// `k/R` rounded to the nearest integer.
pub fn robust_soliton(k: u32, c: f64, fail_prob: f64) -> Result<DegreeDistribution> {
    if k < 2 {
        return Err(Error::param(format!("robust soliton needs k >= 2, got {k}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param(format!("c must be positive, got {c}")));
    }
    if !(fail_prob > 0.0 && fail_prob < 1.0) {
        return Err(Error::param(format!("fail_prob must lie in (0, 1), got {fail_prob}")));
    }
    let kf = k as f64;
    let r = c * (kf / fail_prob).ln() * kf.sqrt();
    let spike = (kf / r).round();
    if !(spike >= 2.0 && spike <= kf) || r <= fail_prob {
        return Err(Error::param(format!(
            "degenerate robust soliton: R = {r:.4} puts the spike at k/R = {:.4}",
            kf / r
        )));
    }
    let spike = spike as u32;
    let spike_mass = r * (r / fail_prob).ln() / kf;

    let raw: Vec<(u32, f64)> = (1..=k)
        .map(|i| {
            let fi = i as f64;
            let rho = if i == 1 { 1.0 / kf } else { 1.0 / (fi * (fi - 1.0)) };
            let tau = if i < spike {
                r / (fi * kf)
            } else if i == spike {
                spike_mass
            } else {
                0.0
            };
            (i, rho + tau)
        })
        .collect();
    let beta = compensated_sum(raw.iter().map(|e| e.1));
    let entries = raw.into_iter().map(|(i, w)| (i, w / beta)).collect();
    DegreeDistribution::new(format!("robust_soliton({k},{c},{fail_prob})"), entries)
}

/// Raptor output distribution `Omega_D` for overhead `eps`:
/// `D = ceil(4(1+eps)/eps)`, `mu = eps/2 + (eps/2)^2`.
pub fn raptor_omega(eps: f64) -> Result<DegreeDistribution> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    let d = (4.0 * (1.0 + eps) / eps - 1e-9).ceil();
    if d > MAX_DESIGN_DEGREE as f64 {
        return Err(Error::range(format!("eps = {eps} gives D = {d}, too large")));
    }
    let d = d as u32;
    let mu = eps / 2.0 + (eps / 2.0).powi(2);
    let norm = 1.0 + mu;
    let mut entries = Vec::with_capacity(d as usize + 1);
    entries.push((1, mu / norm));
    for i in 2..=d {
        let fi = i as f64;
        entries.push((i, 1.0 / (norm * fi * (fi - 1.0))));
    }
    entries.push((d + 1, 1.0 / (norm * d as f64)));
    DegreeDistribution::new(format!("raptor_omega({eps})"), entries)
}

/// Moves mass `delta` onto degree one: `Q(1) = delta + (1-delta)P(1)`,
/// `Q(i) = (1-delta)P(i)` otherwise, so `Q(t) = (1-delta)P(t) + delta t`.
pub fn perturb(p: &DegreeDistribution, delta: f64) -> Result<DegreeDistribution> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    let keep = 1.0 - delta;
    let mut entries = Vec::with_capacity(p.entries.len() + 1);
    if p.entries[0].0 != 1 {
        entries.push((1, delta));
    }
    for &(degree, mass) in &p.entries {
        let scaled = keep * mass;
        entries.push((degree, if degree == 1 { delta + scaled } else { scaled }));
    }
    DegreeDistribution::new(format!("perturb({},{delta})", p.label), entries)
}

/// Distribution whose asymptotic performance is known to be optimal for
/// recovery fraction `z`, with the minimal normalized receive count.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalDesign {
    pub distribution: DegreeDistribution,
    pub r: f64,
}

/// Exact optimum on `0 <= z <= 2/3`: all mass on degree one up to
/// `z = 1/2` (returned at the boundary, where degree two ties), then all mass
/// on degree two.
pub fn optimal_distribution(z: f64) -> Result<OptimalDesign> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::range(format!("z = {z} is negative")));
    }
    if z > 2.0 / 3.0 {
        return Err(Error::UnknownRegion(format!(
            "no exact optimum is known for z = {z} > 2/3; use truncated_soliton instead"
        )));
    }
    let loss = -(-z).ln_1p();
    if z <= 0.5 {
        Ok(OptimalDesign { distribution: DegreeDistribution::point_mass(1)?, r: loss })
    } else {
        Ok(OptimalDesign { distribution: DegreeDistribution::point_mass(2)?, r: loss / (2.0 * z) })
    }
}

/// Truncated and rescaled soliton that recovers exactly fraction `z` at
/// normalized receive count `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSolitonDesign {
    pub z: f64,
    pub m: u32,
    pub a: f64,
    pub distribution: DegreeDistribution,
}

/// Builds the design for `2/3 < z < 1`.
///
/// With `m = support_bound(z)` the scaling constant is
/// `a = (m-1)/m + (sum_{i>=m} z^i/i) / (m z^(m-1))`, the tail series taken in
/// closed form as `-ln(1-z) - sum_{i<m} z^i/i`. Masses are `1/(a i (i-1))`
/// for `2 <= i < m` and `1 - (m-2)/(a(m-1))` on `m`.
pub fn truncated_soliton(z: f64) -> Result<TruncatedSolitonDesign> {
    if !(z > 2.0 / 3.0 && z < 1.0) {
        return Err(Error::range(format!(
            "truncated soliton needs 2/3 < z < 1, got {z}; use optimal_distribution for z <= 2/3"
        )));
    }
    let m = support_bound(z);
    if m > MAX_DESIGN_DEGREE {
        return Err(Error::range(format!("z = {z} needs support up to {m}, too close to 1")));
    }
    let a = eq6_scale(z, m);
    let mf = m as f64;
    if a < (mf - 2.0) / (mf - 1.0) {
        return Err(Error::Internal(format!("scaling constant {a} below (m-2)/(m-1)")));
    }
    let mut entries = Vec::with_capacity(m as usize - 1);
    for i in 2..m {
        let fi = i as f64;
        entries.push((i, 1.0 / (a * fi * (fi - 1.0))));
    }
    entries.push((m, 1.0 - (mf - 2.0) / (a * (mf - 1.0))));
    let distribution = DegreeDistribution::new(format!("truncated_soliton({z})"), entries)?;
    Ok(TruncatedSolitonDesign { z, m, a, distribution })
}

impl TruncatedSolitonDesign {
    /// `(a P'(t) + ln(1-t)) / t^(m-1)`.
    ///
    /// Degrees below `m` cancel the first `m-2` terms of `ln(1-t)` exactly, so
    /// the margin reduces to `t^(m-1) (a m - (m-1)) - sum_{i>=m} t^i/i`. Evaluating
    /// it directly loses everything to cancellation once `t^(m-1)` drops below
    /// machine precision; this form keeps full relative accuracy on `[0, 1)`.
    pub fn reduced_margin(&self, t: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::range(format!("t must lie in [0, 1), got {t}")));
        }
        let m = self.m as f64;
        let mut series = 0.0;
        let mut power = 1.0;
        let mut n = 1.0;
        loop {
            power *= t;
            let term = power / (n + m - 1.0);
            series += term;
            if term <= series * 1e-17 || power == 0.0 {
                break;
            }
            n += 1.0;
        }
        Ok(self.a * m - (m - 1.0) - series)
    }

    /// `a P'(t) + ln(1-t)`, from [`Self::reduced_margin`].
    pub fn margin(&self, t: f64) -> Result<f64> {
        Ok(t.powi(self.m as i32 - 1) * self.reduced_margin(t)?)
    }
}

fn eq6_scale(z: f64, m: u32) -> f64 {
    let mut head = 0.0;
    let mut power = 1.0;
    for i in 1..m {
        power *= z;
        head += power / i as f64;
    }
    let tail = -(-z).ln_1p() - head;
    let mf = m as f64;
    (mf - 1.0) / mf + tail / (mf * z.powi(m as i32 - 1))
}
