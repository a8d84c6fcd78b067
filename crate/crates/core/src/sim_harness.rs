//! Monte Carlo runs of the real encoder and decoder at finite `k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::asymptotics::{s_of_r, DEFAULT_GRID_STEP, DEFAULT_REFINE_TOL};
use crate::degree_dist::DegreeDistribution;
use crate::error::{Error, Result};
use crate::lt_codec::{encode, CodedSymbol, DecoderState};
use crate::report::fmt_sig9;

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_K: usize = 10_000;
pub const THREADS_ENV: &str = "FOUNTAIN_LAB_THREADS";

/// Stream indices reserved for per-trial randomness other than symbols.
const RECEIVE_STREAM: u64 = u64::MAX;
const INPUT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReceiveModel {
    /// `n = round(r k)`.
    #[default]
    DeterministicN,
    /// `n ~ Poisson(r k)`.
    PoissonN,
}

impl ReceiveModel {
    pub fn name(self) -> &'static str {
        match self {
            ReceiveModel::DeterministicN => "deterministic_n",
            ReceiveModel::PoissonN => "poisson_n",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub distribution: DegreeDistribution,
    pub k: usize,
    pub r_values: Vec<f64>,
    pub trials: usize,
    pub receive_model: ReceiveModel,
    pub base_seed: u64,
    pub symbol_bytes: usize,
    /// Attach `s(r, P)` to each row.
    pub annotate: bool,
}

impl SimulationConfig {
    pub fn new(distribution: DegreeDistribution, k: usize, r_values: Vec<f64>) -> Self {
        SimulationConfig {
            distribution,
            k,
            r_values,
            trials: DEFAULT_TRIALS,
            receive_model: ReceiveModel::default(),
            base_seed: 0,
            symbol_bytes: 1,
            annotate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        if (self.distribution.max_degree() as usize) > self.k {
            return Err(Error::param(format!(
                "k = {} is below the maximum degree {} of {}",
                self.k,
                self.distribution.max_degree(),
                self.distribution.label()
            )));
        }
        if let Some(r) = self.r_values.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::param(format!("r values must be finite and nonnegative, got {r}")));
        }
        if self.symbol_bytes == 0 {
            return Err(Error::param("symbol_bytes must be at least 1"));
        }
        Ok(())
    }

    /// Hex SHA-256 over a canonical rendering of every field.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.distribution.to_text());
        h.update(format!(
            "k={}\ntrials={}\nmodel={}\nseed={}\nbytes={}\nannotate={}\n",
            self.k,
            self.trials,
            self.receive_model.name(),
            self.base_seed,
            self.symbol_bytes,
            self.annotate
        ));
        for r in &self.r_values {
            h.update(r.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Seed of one trial, a function of the base seed, the exact bits of `r` and
/// the trial index only, so any schedule reproduces it.
pub fn trial_seed(base_seed: u64, r: f64, trial_index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(r.to_bits().to_le_bytes());
    h.update(trial_index.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest is 32 bytes"))
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn received_count(model: ReceiveModel, r: f64, k: usize, seed: u64) -> Result<usize> {
    let mean = r * k as f64;
    match model {
        ReceiveModel::DeterministicN => Ok(mean.round() as usize),
        ReceiveModel::PoissonN if mean == 0.0 => Ok(0),
        ReceiveModel::PoissonN => {
            let poisson = Poisson::new(mean).map_err(|e| Error::param(format!("Poisson({mean}): {e}")))?;
            Ok(poisson.sample(&mut stream(seed, RECEIVE_STREAM)) as usize)
        }
    }
}

/// Decoded fraction `z_k` of one trial.
pub fn run_trial(config: &SimulationConfig, r: f64, trial_index: u64) -> Result<f64> {
    config.validate()?;
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::param(format!("r must be finite and nonnegative, got {r}")));
    }
    trial(config, r, trial_index)
}

fn trial(config: &SimulationConfig, r: f64, trial_index: u64) -> Result<f64> {
    let seed = trial_seed(config.base_seed, r, trial_index);
    let n = received_count(config.receive_model, r, config.k, seed)?;
    let mut input_rng = stream(seed, INPUT_STREAM);
    let inputs: Vec<Vec<u8>> = (0..config.k)
        .map(|_| {
            let mut v = vec![0u8; config.symbol_bytes];
            input_rng.fill(&mut v[..]);
            v
        })
        .collect();
    let symbols: Vec<CodedSymbol> = encode(&inputs, &config.distribution, n, seed)?;
    let mut state = DecoderState::new(&symbols, config.k)?;
    state.peel();
    for (i, value) in state.recovered_values().iter().enumerate() {
        if value.as_ref().is_some_and(|v| v != &inputs[i]) {
            return Err(Error::Internal(format!("input {i} decoded to a wrong value")));
        }
    }
    Ok(state.decoded_count() as f64 / config.k as f64)
}

/// Worker pool sized by `FOUNTAIN_LAB_THREADS` when set, else rayon's default.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::param(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

/// All trials at one `r`, in trial-index order.
pub fn trial_values(config: &SimulationConfig, r: f64) -> Result<Vec<f64>> {
    config.validate()?;
    let pool = worker_pool()?;
    pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|t| trial(config, r, t))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRow {
    pub r: f64,
    pub mean_z: f64,
    pub std_z: f64,
    pub min_z: f64,
    pub max_z: f64,
    pub trials: usize,
    pub asymptotic_z: Option<f64>,
}

impl SimulationRow {
    /// Summary of `samples`; `std_z` is the sample standard deviation (0 for one trial).
    pub fn from_samples(r: f64, samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SimulationRow {
            r,
            mean_z: mean,
            std_z: var.sqrt(),
            min_z: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max_z: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            trials: samples.len(),
            asymptotic_z: None,
        }
    }

    pub fn std_error(&self) -> f64 {
        self.std_z / (self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub rows: Vec<SimulationRow>,
    pub config_digest: String,
    /// Metadata echoed as `#` lines ahead of the CSV header.
    pub metadata: Vec<(String, String)>,
}

pub const CSV_HEADER: &str = "r,mean_z,std_z,min_z,max_z,trials,asymptotic_z";

impl SimulationResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_sig9(row.r),
                fmt_sig9(row.mean_z),
                fmt_sig9(row.std_z),
                fmt_sig9(row.min_z),
                fmt_sig9(row.max_z),
                row.trials,
                row.asymptotic_z.map(fmt_sig9).unwrap_or_default()
            ));
        }
        out
    }
}

/// Runs every `r` in the config, rows sorted by `r`.
pub fn sweep(config: &SimulationConfig) -> Result<SimulationResult> {
    sweep_in(config, &worker_pool()?)
}

/// [`sweep`] on a caller-supplied pool. Output does not depend on its size.
pub fn sweep_in(config: &SimulationConfig, pool: &rayon::ThreadPool) -> Result<SimulationResult> {
    config.validate()?;
    let mut r_values = config.r_values.clone();
    r_values.sort_by(f64::total_cmp);
    let per_r: Vec<Vec<f64>> = pool.install(|| {
        r_values
            .par_iter()
            .map(|&r| (0..config.trials as u64).into_par_iter().map(|t| trial(config, r, t)).collect())
            .collect::<Result<_>>()
    })?;
    let mut rows = Vec::with_capacity(r_values.len());
    for (&r, samples) in r_values.iter().zip(&per_r) {
        let mut row = SimulationRow::from_samples(r, samples);
        if config.annotate {
            row.asymptotic_z = Some(s_of_r(r, &config.distribution, DEFAULT_GRID_STEP, DEFAULT_REFINE_TOL)?);
        }
        rows.push(row);
    }
    let config_digest = config.digest();
    let metadata = vec![
        ("fountain-lab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("distribution".to_string(), config.distribution.label().to_string()),
        ("k".to_string(), config.k.to_string()),
        ("trials".to_string(), config.trials.to_string()),
        ("receive_model".to_string(), config.receive_model.name().to_string()),
        ("base_seed".to_string(), config.base_seed.to_string()),
        ("symbol_bytes".to_string(), config.symbol_bytes.to_string()),
        ("config_digest".to_string(), config_digest.clone()),
    ];
    Ok(SimulationResult { rows, config_digest, metadata })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    pub mean_z: f64,
    pub std_error: f64,
    pub asymptotic_z: f64,
    pub gap: f64,
}

/// Mean decoded fraction per `k` against `s(r, P)`, one fixed distribution.
pub fn convergence_report(
    distribution: &DegreeDistribution,
    r: f64,
    k_values: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    convergence_report_with(|_| Ok(distribution.clone()), r, k_values, trials, base_seed)
}

/// As [`convergence_report`], with the distribution rebuilt for each `k`
/// (finite-`k` solitons). The asymptotic column uses the distribution at that `k`.
pub fn convergence_report_with<F>(
    family: F,
    r: f64,
    k_values: &[usize],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<ConvergenceRow>>
where
    F: Fn(usize) -> Result<DegreeDistribution>,
{
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let mut out = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let distribution = family(k)?;
        let s = s_of_r(r, &distribution, DEFAULT_GRID_STEP, DEFAULT_REFINE_TOL)?;
        let mut config = SimulationConfig::new(distribution, k, vec![r]);
        config.trials = trials;
        config.base_seed = base_seed;
        let row = SimulationRow::from_samples(r, &trial_values(&config, r)?);
        out.push(ConvergenceRow {
            k,
            mean_z: row.mean_z,
            std_error: row.std_error(),
            asymptotic_z: s,
            gap: (row.mean_z - s).abs(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degree1() -> DegreeDistribution {
        DegreeDistribution::point_mass(1).unwrap()
    }

    #[test]
    fn zero_rate_decodes_nothing() {
        let config = SimulationConfig::new(degree1(), 1000, vec![0.0]);
        assert_eq!(run_trial(&config, 0.0, 0).unwrap(), 0.0);
        let mut poisson = config.clone();
        poisson.receive_model = ReceiveModel::PoissonN;
        assert_eq!(run_trial(&poisson, 0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn single_trial_row() {
        let mut config = SimulationConfig::new(degree1(), 500, vec![0.7]);
        config.trials = 1;
        let z = run_trial(&config, 0.7, 0).unwrap();
        let result = sweep(&config).unwrap();
        assert_eq!(result.rows.len(), 1);
        let row = &result.rows[0];
        assert_eq!((row.mean_z, row.min_z, row.max_z, row.std_z, row.trials), (z, z, z, 0.0, 1));
    }

    #[test]
    fn degree_one_occupancy_finite_k() {
        // n = k/2 singletons hit 1 - (1 - 1/k)^n of the inputs on average
        let k = 2000usize;
        let mut config = SimulationConfig::new(degree1(), k, vec![0.5]);
        config.trials = 200;
        let row = SimulationRow::from_samples(0.5, &trial_values(&config, 0.5).unwrap());
        let exact = 1.0 - (1.0 - 1.0 / k as f64).powi(1000);
        assert!((row.mean_z - exact).abs() < 4.0 * row.std_error() + 1e-12, "{} vs {exact}", row.mean_z);
    }

    #[test]
    fn deterministic_and_schedule_free() {
        let mut config = SimulationConfig::new(degree1(), 300, vec![0.3, 0.1]);
        config.trials = 8;
        config.base_seed = 42;
        config.receive_model = ReceiveModel::PoissonN;
        let a = sweep(&config).unwrap();
        let b = sweep(&config).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows[0].r, 0.1);
        let sequential: Vec<f64> = (0..8).map(|t| run_trial(&config, 0.3, t).unwrap()).collect();
        assert_eq!(trial_values(&config, 0.3).unwrap(), sequential);
    }

    #[test]
    fn seeds_depend_on_every_component() {
        let s = trial_seed(1, 0.5, 2);
        assert_ne!(s, trial_seed(2, 0.5, 2));
        assert_ne!(s, trial_seed(1, 0.6, 2));
        assert_ne!(s, trial_seed(1, 0.5, 3));
    }

    #[test]
    fn csv_layout() {
        let mut config = SimulationConfig::new(degree1(), 100, vec![0.5]);
        config.trials = 2;
        config.base_seed = 9;
        let csv = sweep(&config).unwrap().to_csv();
        assert!(csv.contains("# base_seed: 9\n"));
        assert!(csv.contains(&format!("# fountain-lab: {}\n", env!("CARGO_PKG_VERSION"))));
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], CSV_HEADER);
        assert_eq!(body[1].split(',').count(), 7);
    }

    #[test]
    fn validation() {
        let mut config = SimulationConfig::new(degree1(), 100, vec![0.5]);
        config.trials = 0;
        assert!(matches!(sweep(&config), Err(Error::InvalidParameter(_))));
        let config = SimulationConfig::new(DegreeDistribution::point_mass(5).unwrap(), 4, vec![0.5]);
        assert!(matches!(config.validate(), Err(Error::InvalidParameter(_))));
        let config = SimulationConfig::new(degree1(), 4, vec![-0.5]);
        assert!(matches!(config.validate(), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            convergence_report(&degree1(), 0.5, &[10], 0, 0),
            Err(Error::InvalidParameter(_))
        ));
    }
}
