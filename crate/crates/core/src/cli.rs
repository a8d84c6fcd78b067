//! Command-line front end. Every command writes UTF-8 CSV with `#` metadata lines.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::asymptotics::{r_of_z, s_of_r, DEFAULT_GRID_STEP, DEFAULT_REFINE_TOL};
use crate::degree_dist::{
    ideal_soliton, limiting_soliton, optimal_distribution, perturb, raptor_omega, robust_soliton,
    truncated_soliton, DegreeDistribution,
};
use crate::error::{Error, Result};
use crate::lp_bounds::{dual_outer_bound, outer_bound_curve, DEFAULT_BOUND_GRID_STEP};
use crate::report::fmt_sig9;
use crate::sim_harness::{sweep, ReceiveModel, SimulationConfig, DEFAULT_TRIALS};

pub const TOP_CSV: &str = "fig1_top.csv";
pub const BOTTOM_CSV: &str = "fig1_bottom.csv";

#[derive(Debug, Parser)]
#[command(name = "fountain-lab", version, about = "Intermediate performance of rateless codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic recovered fraction s(r, P) over a set of r values.
    Analyze(AnalyzeArgs),
    /// LP outer bound (and primal optimum) on the minimum r for each z.
    Bound(BoundArgs),
    /// Distribution recovering fraction z at the smallest known r.
    Design(DesignArgs),
    /// Monte Carlo runs of the encoder and peeling decoder.
    Simulate(SimulateArgs),
    /// Raptor output distribution against the truncated soliton at z = 1 - delta.
    Compare(CompareArgs),
    /// Curve data: exact and bounded r(z) below 2/3, inner vs outer bound above.
    Fig1(Fig1Args),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DistSource {
    /// All mass on degree 1.
    #[arg(long)]
    pub degree1: bool,
    /// All mass on degree 2.
    #[arg(long)]
    pub degree2: bool,
    /// Ideal soliton over K inputs.
    #[arg(long, value_name = "K")]
    pub soliton: Option<u32>,
    /// Soliton with the tail beyond D lumped on D; no degree-1 mass.
    #[arg(long, value_name = "D")]
    pub limiting_soliton: Option<u32>,
    /// Robust soliton: K C DELTA.
    #[arg(long, num_args = 3, value_names = ["K", "C", "DELTA"])]
    pub robust: Option<Vec<f64>>,
    /// Raptor output distribution for overhead EPS.
    #[arg(long, value_name = "EPS")]
    pub raptor: Option<f64>,
    /// Design distribution for recovery fraction Z.
    #[arg(long, value_name = "Z")]
    pub design_z: Option<f64>,
    /// Tab-separated `degree mass` file.
    #[arg(long, value_name = "PATH")]
    pub dist_file: Option<PathBuf>,
}

impl DistSource {
    pub fn load(&self) -> Result<DegreeDistribution> {
        if self.degree1 {
            return DegreeDistribution::point_mass(1);
        }
        if self.degree2 {
            return DegreeDistribution::point_mass(2);
        }
        if let Some(k) = self.soliton {
            return ideal_soliton(k);
        }
        if let Some(d) = self.limiting_soliton {
            return limiting_soliton(d);
        }
        if let Some(v) = &self.robust {
            let k = v[0];
            if !(k >= 1.0 && k.fract() == 0.0 && k <= u32::MAX as f64) {
                return Err(Error::param(format!("robust soliton K must be a positive integer, got {k}")));
            }
            return robust_soliton(k as u32, v[1], v[2]);
        }
        if let Some(eps) = self.raptor {
            return raptor_omega(eps);
        }
        if let Some(z) = self.design_z {
            return design(z).map(|(p, _)| p);
        }
        if let Some(path) = &self.dist_file {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            return DegreeDistribution::from_text(&text);
        }
        Err(Error::param("no distribution given"))
    }
}

/// Optional finite-length realization of the chosen distribution.
#[derive(Debug, Args)]
pub struct Realization {
    /// Move mass DELTA onto degree 1.
    #[arg(long, value_name = "DELTA")]
    pub perturb: Option<f64>,
}

impl Realization {
    fn apply(&self, p: DegreeDistribution) -> Result<DegreeDistribution> {
        match self.perturb {
            Some(delta) => perturb(&p, delta),
            None => Ok(p),
        }
    }
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; `-` for standard output.
    #[arg(long, short, default_value = "-")]
    pub output: String,
}

impl Output {
    fn write(&self, text: &str) -> Result<()> {
        if self.output == "-" {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        } else {
            fs::write(&self.output, text)?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct RGrid {
    /// r values, repeated or comma-separated.
    #[arg(long = "r", value_delimiter = ',', allow_negative_numbers = true)]
    pub r: Vec<f64>,
    /// Evenly spaced r values: START STOP STEP.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "STEP"])]
    pub r_range: Option<Vec<f64>>,
}

impl RGrid {
    fn values(&self) -> Result<Vec<f64>> {
        let mut out = self.r.clone();
        if let Some(v) = &self.r_range {
            out.extend(range(v[0], v[1], v[2])?);
        }
        if out.is_empty() {
            return Err(Error::param("give at least one r via --r or --r-range"));
        }
        if let Some(r) = out.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::param(format!("r must be finite and nonnegative, got {r}")));
        }
        Ok(out)
    }
}

fn range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && stop.is_finite() && start <= stop) {
        return Err(Error::param(format!("bad range {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(Error::param("range has more than a million points"));
    }
    Ok((0..=n).map(|j| start + j as f64 * step).collect())
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub dist: DistSource,
    #[command(flatten)]
    pub realization: Realization,
    #[command(flatten)]
    pub r: RGrid,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// z values in (0, 1), repeated or comma-separated.
    #[arg(long = "z", value_delimiter = ',', allow_negative_numbers = true)]
    pub z: Vec<f64>,
    /// Evenly spaced z values: START STOP STEP.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "STEP"])]
    pub z_range: Option<Vec<f64>>,
    /// Spacing of the discretized measure support.
    #[arg(long, default_value_t = DEFAULT_BOUND_GRID_STEP)]
    pub grid_step: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long = "z", allow_negative_numbers = true)]
    pub z: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReceiveArg {
    Deterministic,
    Poisson,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dist: DistSource,
    #[command(flatten)]
    pub realization: Realization,
    /// Number of input symbols.
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub r: RGrid,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReceiveArg::Deterministic)]
    pub receive: ReceiveArg,
    #[arg(long, default_value_t = 1)]
    pub symbol_bytes: usize,
    /// Leave the asymptotic_z column empty.
    #[arg(long)]
    pub no_asymptotic: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    /// Target loss; recovery fraction is 1 - delta.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    /// Directory for the two CSV files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BOUND_GRID_STEP)]
    pub grid_step: f64,
    /// Spacing of the z rows.
    #[arg(long, default_value_t = 0.01)]
    pub z_step: f64,
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::range(format!("z must lie in (0, 1), got {z}")));
    }
    Ok(())
}

/// Best known distribution for `z` and the r it needs.
pub fn design(z: f64) -> Result<(DegreeDistribution, f64)> {
    check_z(z)?;
    if z <= 2.0 / 3.0 {
        let d = optimal_distribution(z)?;
        Ok((d.distribution, d.r))
    } else {
        let d = truncated_soliton(z)?;
        Ok((d.distribution, d.a))
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::param(e.to_string()))?;
    dispatch(&cli.command)
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Analyze(a) => a.out.write(&analyze(a)?),
        Command::Bound(a) => a.out.write(&bound(a)?),
        Command::Design(a) => a.out.write(&design_text(a.z)?),
        Command::Simulate(a) => a.out.write(&simulate(a)?),
        Command::Compare(a) => a.out.write(&compare(a.eps, a.delta)?),
        Command::Fig1(a) => fig1(&a.out_dir, a.grid_step, a.z_step),
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<String> {
    let r_values = a.r.values()?;
    let p = a.realization.apply(a.dist.load()?)?;
    let mut out = format!("# distribution: {}\n# grid_step: {}\nr,s\n", p.label(), a.grid_step);
    for r in r_values {
        let s = s_of_r(r, &p, a.grid_step, DEFAULT_REFINE_TOL)?;
        out.push_str(&format!("{},{}\n", fmt_sig9(r), fmt_sig9(s)));
    }
    Ok(out)
}

fn bound(a: &BoundArgs) -> Result<String> {
    let mut z = a.z.clone();
    if let Some(v) = &a.z_range {
        z.extend(range(v[0], v[1], v[2])?);
    }
    if z.is_empty() {
        return Err(Error::param("give at least one z via --z or --z-range"));
    }
    for &x in &z {
        check_z(x)?;
    }
    let curve = outer_bound_curve(&z, a.grid_step)?;
    Ok(format!("# grid_step: {}\n{}", a.grid_step, curve.to_csv()))
}

fn design_text(z: f64) -> Result<String> {
    let (p, r) = design(z)?;
    Ok(format!("# z: {z}\n# r: {}\n{}", fmt_sig9(r), p.to_text()))
}

fn simulate(a: &SimulateArgs) -> Result<String> {
    let r_values = a.r.values()?;
    let p = a.realization.apply(a.dist.load()?)?;
    let mut config = SimulationConfig::new(p, a.k, r_values);
    config.trials = a.trials;
    config.base_seed = a.seed;
    config.symbol_bytes = a.symbol_bytes;
    config.annotate = !a.no_asymptotic;
    config.receive_model = match a.receive {
        ReceiveArg::Deterministic => ReceiveModel::DeterministicN,
        ReceiveArg::Poisson => ReceiveModel::PoissonN,
    };
    Ok(sweep(&config)?.to_csv())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub z: f64,
    pub raptor_r: f64,
    /// The truncated soliton's scale constant, the r it needs for `z`.
    pub design_a: f64,
    /// `r_of_z` evaluated on the truncated soliton, a numerical check on `design_a`.
    pub design_r: f64,
}

pub fn comparison(eps: f64, delta: f64) -> Result<Comparison> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::range(format!("delta must lie in (0, 1/3), got {delta}")));
    }
    let z = 1.0 - delta;
    let raptor = raptor_omega(eps)?;
    let design = truncated_soliton(z)?;
    Ok(Comparison {
        z,
        raptor_r: r_of_z(z, &raptor, DEFAULT_GRID_STEP)?,
        design_a: design.a,
        design_r: r_of_z(z, &design.distribution, DEFAULT_GRID_STEP)?,
    })
}

fn compare(eps: f64, delta: f64) -> Result<String> {
    let c = comparison(eps, delta)?;
    let smaller = if c.design_a < c.raptor_r { "truncated_soliton" } else { "raptor_omega" };
    Ok(format!(
        "# z: {}\n# truncated_soliton r_of_z: {}\n# smaller_r: {smaller}\ndistribution,z,r\nraptor_omega({eps}),{},{}\ntruncated_soliton({}),{},{}\n",
        fmt_sig9(c.z),
        fmt_sig9(c.design_r),
        fmt_sig9(c.z),
        fmt_sig9(c.raptor_r),
        fmt_sig9(c.z),
        fmt_sig9(c.z),
        fmt_sig9(c.design_a)
    ))
}

/// `step, 2 step, ...` up to `hi`, with `extra` merged in.
fn z_rows(lo: f64, hi: f64, step: f64, extra: &[f64]) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::param(format!("z step must lie in (0, 0.1], got {step}")));
    }
    let mut z: Vec<f64> = (1..)
        .map(|j| j as f64 * step)
        .take_while(|&z| z <= hi + 1e-12)
        .filter(|&z| z > lo + 1e-12)
        .collect();
    for &e in extra {
        if !z.iter().any(|&x| (x - e).abs() < 1e-12) {
            z.push(e);
        }
    }
    z.sort_by(f64::total_cmp);
    Ok(z)
}

pub const FIG1_MAX_Z: f64 = 0.99;

/// Top panel: exact minimum r for `z <= 2/3` and the outer bound everywhere.
/// Bottom panel: outer bound against the truncated soliton on `(2/3, 1)`.
pub fn fig1(out_dir: &Path, grid_step: f64, z_step: f64) -> Result<()> {
    use rayon::prelude::*;
    fs::create_dir_all(out_dir)?;
    let two_thirds = 2.0 / 3.0;

    let top_z = z_rows(0.0, FIG1_MAX_Z, z_step, &[0.5, two_thirds])?;
    let top: Vec<(f64, Option<f64>, f64)> = top_z
        .par_iter()
        .map(|&z| {
            let exact = if z <= two_thirds { Some(optimal_distribution(z)?.r) } else { None };
            Ok((z, exact, dual_outer_bound(z, grid_step)?))
        })
        .collect::<Result<_>>()?;
    let mut text = format!("# grid_step: {grid_step}\nz,r_exact,r_outer\n");
    for (z, exact, outer) in top {
        let exact = exact.map(fmt_sig9).unwrap_or_default();
        text.push_str(&format!("{},{exact},{}\n", fmt_sig9(z), fmt_sig9(outer)));
    }
    fs::write(out_dir.join(TOP_CSV), text)?;

    let bottom_z = z_rows(two_thirds, FIG1_MAX_Z, z_step, &[])?;
    let bottom: Vec<(f64, f64, f64, u32)> = bottom_z
        .par_iter()
        .map(|&z| {
            let d = truncated_soliton(z)?;
            Ok((z, dual_outer_bound(z, grid_step)?, d.a, d.m))
        })
        .collect::<Result<_>>()?;
    let mut text = format!("# grid_step: {grid_step}\nz,r_outer,r_inner,m\n");
    for (z, outer, inner, m) in bottom {
        text.push_str(&format!("{},{},{},{m}\n", fmt_sig9(z), fmt_sig9(outer), fmt_sig9(inner)));
    }
    fs::write(out_dir.join(BOTTOM_CSV), text)?;
    Ok(())
}
