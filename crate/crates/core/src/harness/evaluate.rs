use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    load_params, plot::plots_from_csv, read_json, resolve, write_json, RunContext, EVALUATE_SCHEMA, SWEEP_SCHEMA,
    TAG_TEST_SET,
};
use crate::evolution::{evolve, evolve_noiseless_many, EvolutionConfig, NoiseConfig, NoiseKind};
use crate::hamiltonian::ControlParameters;
use crate::linalg::{frobenius_distance, ComplexMatrix};
use crate::rng::{derive_seed, derived_rng};
use crate::scaling::{replicate, CrossPairCoupling, ReplicationSpec};
use crate::states::{SampleMode, TrainingSample, TrainingSetManifest};
use crate::training::rms;
use crate::{Error, Result, MAX_QUBITS};

/// The three tabled noise levels plus one decade on each side.
pub const DEFAULT_RNP_GRID: [f64; 5] = [5e-7, 5e-6, 5e-5, 5e-4, 5e-3];

/// One row of a results CSV. Failed cells keep their identifying columns and
/// leave the numeric ones empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n_qubits: usize,
    pub noise_kind: NoiseKind,
    pub rnp: f64,
    pub n_noise_draws: usize,
    pub rms_mean: Option<f64>,
    pub rms_std: Option<f64>,
    pub seed: u64,
    pub params_hash: String,
    pub mean_noise_norm: Option<f64>,
    pub status: String,
}

impl ExperimentRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Standard error of `rms_mean`.
    pub fn std_error(&self) -> Option<f64> {
        self.rms_std.map(|s| s / (self.n_noise_draws as f64).sqrt())
    }
}

/// Final-state checks accumulated over evaluated evolutions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub evolutions: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub max_purity: f64,
}

impl Diagnostics {
    fn of(rho: &ComplexMatrix) -> Self {
        Self {
            evolutions: 1,
            max_trace_error: (rho.trace() - 1.0).norm(),
            max_hermiticity_error: rho.hermiticity_error(),
            max_purity: rho.purity(),
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            evolutions: self.evolutions + other.evolutions,
            max_trace_error: self.max_trace_error.max(other.max_trace_error),
            max_hermiticity_error: self.max_hermiticity_error.max(other.max_hermiticity_error),
            max_purity: self.max_purity.max(other.max_purity),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    /// Test-set RMS for each noise draw.
    pub rms_per_draw: Vec<f64>,
    pub mean_noise_norm: f64,
    pub diagnostics: Diagnostics,
}

impl CellOutcome {
    pub fn mean(&self) -> f64 {
        self.rms_per_draw.iter().sum::<f64>() / self.rms_per_draw.len() as f64
    }

    /// Sample standard deviation over draws (zero for a single draw).
    pub fn std(&self) -> f64 {
        let k = self.rms_per_draw.len();
        if k < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.rms_per_draw.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    }
}

/// RMS over `samples` for `n_draws` independent noise realizations.
///
/// Draw `d` uses noise seed `derive_seed(cell_seed, [d])` and sample `i`
/// within it the stream `derived_rng(noise_seed, [i])`. Inactive noise
/// evaluates once and repeats the result.
pub fn evaluate_cell(
    p: &ControlParameters,
    samples: &[TrainingSample],
    evo: &EvolutionConfig,
    kind: NoiseKind,
    rnp: f64,
    n_draws: usize,
    cell_seed: u64,
) -> Result<CellOutcome> {
    if n_draws == 0 {
        return Err(Error::Config("n_noise_draws must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::Config("empty test set".into()));
    }
    for s in samples {
        if s.initial.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: s.initial.dim(),
            });
        }
    }
    let probe = NoiseConfig::new(kind, rnp, 0)?;
    if !probe.is_active() {
        let initial: Vec<_> = samples.iter().map(|s| &s.initial).collect();
        let finals = evolve_noiseless_many(p, &initial, evo)?;
        let mut diagnostics = Diagnostics::default();
        let mut dist = Vec::with_capacity(samples.len());
        for (f, s) in finals.iter().zip(samples) {
            diagnostics = diagnostics.merge(Diagnostics::of(f));
            dist.push(frobenius_distance(f, &s.target)?);
        }
        return Ok(CellOutcome {
            rms_per_draw: vec![rms(&dist); n_draws],
            mean_noise_norm: 0.0,
            diagnostics,
        });
    }

    let jobs: Vec<(usize, usize)> = (0..n_draws).flat_map(|d| (0..samples.len()).map(move |i| (d, i))).collect();
    let results: Vec<(f64, f64, Diagnostics)> = jobs
        .par_iter()
        .map(|&(d, i)| {
            let noise = NoiseConfig::new(kind, rnp, derive_seed(cell_seed, &[d as u64]))?;
            let mut rng = derived_rng(noise.seed, &[i as u64]);
            let out = evolve(p, &samples[i].initial, evo, &noise, &mut rng)?;
            let dist = frobenius_distance(&out.final_state, &samples[i].target)?;
            Ok((dist, out.mean_noise_norm, Diagnostics::of(&out.final_state)))
        })
        .collect::<Result<_>>()?;
    let mut diagnostics = Diagnostics::default();
    let mut norm_sum = 0.0;
    let rms_per_draw = results
        .chunks(samples.len())
        .map(|draw| {
            let dist: Vec<f64> = draw.iter().map(|r| r.0).collect();
            for r in draw {
                norm_sum += r.1;
                diagnostics = diagnostics.merge(r.2);
            }
            rms(&dist)
        })
        .collect();
    Ok(CellOutcome {
        rms_per_draw,
        mean_noise_norm: norm_sum / results.len() as f64,
        diagnostics,
    })
}

/// `k` samples spread evenly over the set, counting back from the last one,
/// returned in their original order. `k ≥ len` keeps everything.
pub fn select_subset<T: Clone>(samples: &[T], k: usize) -> Vec<T> {
    let len = samples.len();
    if k >= len {
        return samples.to_vec();
    }
    let mut idx: Vec<usize> = (0..k).map(|i| len - 1 - i * len / k).collect();
    idx.sort_unstable();
    idx.into_iter().map(|i| samples[i].clone()).collect()
}

/// Seed of the `(n, kind, rnp_index)` cell.
fn cell_seed(base: u64, n: usize, kind: NoiseKind, rnp_index: usize) -> u64 {
    derive_seed(base, &[n as u64, kind.tag(), rnp_index as u64])
}

/// Evaluation cells in output order: `(kind, rnp_index, rnp)`.
fn cells(kinds: &[NoiseKind], rnp_values: &[f64]) -> Vec<(NoiseKind, usize, f64)> {
    let mut out = Vec::new();
    for &kind in kinds {
        if kind == NoiseKind::None {
            out.push((kind, 0, 0.0));
        } else {
            out.extend(rnp_values.iter().enumerate().map(|(j, &r)| (kind, j, r)));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    p: &ControlParameters,
    params_hash: &str,
    samples: &[TrainingSample],
    evo: &EvolutionConfig,
    (kind, rnp_index, rnp): (NoiseKind, usize, f64),
    n_draws: usize,
    base_seed: u64,
) -> (ExperimentRecord, Diagnostics) {
    let n = p.n_qubits();
    let seed = cell_seed(base_seed, n, kind, rnp_index);
    let mut record = ExperimentRecord {
        n_qubits: n,
        noise_kind: kind,
        rnp,
        n_noise_draws: n_draws,
        rms_mean: None,
        rms_std: None,
        seed,
        params_hash: params_hash.to_string(),
        mean_noise_norm: None,
        status: "ok".into(),
    };
    match evaluate_cell(p, samples, evo, kind, rnp, n_draws, seed) {
        Ok(cell) => {
            record.rms_mean = Some(cell.mean());
            record.rms_std = Some(cell.std());
            record.mean_noise_norm = Some(cell.mean_noise_norm);
            (record, cell.diagnostics)
        }
        Err(e) => {
            record.status = format!("error: {e}");
            (record, Diagnostics::default())
        }
    }
}

pub fn write_records<W: Write>(writer: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn check_rnp_values(values: &[f64]) -> Result<()> {
    if let Some(bad) = values.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::Config(format!("rnp values must be nonnegative, got {bad}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub schema: String,
    /// Parameter file, relative to the config file.
    pub params: PathBuf,
    /// Test-set manifest, relative to the config file.
    pub test_set: PathBuf,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default = "default_noiseless")]
    pub noise_kinds: Vec<NoiseKind>,
    #[serde(default)]
    pub rnp_values: Vec<f64>,
    #[serde(default = "default_draws")]
    pub n_noise_draws: usize,
    /// Evaluate an evenly spread subset of at most this many states.
    #[serde(default)]
    pub max_states: Option<usize>,
    #[serde(default = "default_eval_output")]
    pub output: String,
}

fn default_noiseless() -> Vec<NoiseKind> {
    vec![NoiseKind::None]
}

fn default_draws() -> usize {
    32
}

fn default_eval_output() -> String {
    "evaluation.csv".into()
}

impl EvaluateConfig {
    pub fn new(params: impl Into<PathBuf>, test_set: impl Into<PathBuf>) -> Self {
        Self {
            schema: EVALUATE_SCHEMA.into(),
            params: params.into(),
            test_set: test_set.into(),
            evolution: EvolutionConfig::default(),
            noise_kinds: default_noiseless(),
            rnp_values: Vec::new(),
            n_noise_draws: default_draws(),
            max_states: None,
            output: default_eval_output(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != EVALUATE_SCHEMA {
            return Err(Error::Config(format!("expected schema {EVALUATE_SCHEMA:?}, found {:?}", self.schema)));
        }
        if self.noise_kinds.is_empty() {
            return Err(Error::Config("noise_kinds must not be empty".into()));
        }
        if self.noise_kinds.iter().any(|k| *k != NoiseKind::None) && self.rnp_values.is_empty() {
            return Err(Error::Config("noisy kinds need at least one rnp value".into()));
        }
        check_rnp_values(&self.rnp_values)?;
        if self.n_noise_draws == 0 {
            return Err(Error::Config("n_noise_draws must be at least 1".into()));
        }
        if self.max_states == Some(0) {
            return Err(Error::Config("max_states must be at least 1".into()));
        }
        self.evolution.validate()
    }
}

/// Evaluates a parameter file on a manifest, one CSV row per `(kind, rnp)`.
pub fn cmd_evaluate(ctx: &RunContext, cfg: &EvaluateConfig, config_path: Option<&Path>) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let (params, params_hash) = load_params(&resolve(config_path, &cfg.params))?;
    let manifest: TrainingSetManifest = read_json(&resolve(config_path, &cfg.test_set))?;
    if manifest.n_qubits != params.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: params.n_qubits(),
            found: manifest.n_qubits,
        });
    }
    let mut samples = manifest.build()?;
    if let Some(k) = cfg.max_states {
        samples = select_subset(&samples, k);
    }
    let records: Vec<ExperimentRecord> = cells(&cfg.noise_kinds, &cfg.rnp_values)
        .into_iter()
        .map(|cell| run_cell(&params, &params_hash, &samples, &cfg.evolution, cell, cfg.n_noise_draws, ctx.seed).0)
        .collect();
    fs::create_dir_all(&ctx.out_dir)?;
    write_records(fs::File::create(ctx.path(&cfg.output))?, &records)?;
    Ok(records)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSetSpec {
    /// Random states added to the charge basis.
    pub n_random: usize,
    pub mode: SampleMode,
    /// Per register size, evaluate an evenly spread subset of this many states.
    pub max_states: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub schema: String,
    /// Two-qubit parameter file, relative to the config file.
    pub params: PathBuf,
    pub cross_pair_coupling: CrossPairCoupling,
    pub n_qubits_list: Vec<usize>,
    pub noise_kinds: Vec<NoiseKind>,
    pub rnp_values: Vec<f64>,
    pub n_noise_draws: usize,
    /// Adds a noiseless row per register size.
    pub include_noiseless: bool,
    pub evolution: EvolutionConfig,
    pub test_set: TestSetSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            schema: SWEEP_SCHEMA.into(),
            params: PathBuf::from("params.json"),
            cross_pair_coupling: CrossPairCoupling::Zero,
            n_qubits_list: vec![2, 4, 6, 8],
            noise_kinds: NoiseKind::NOISY.to_vec(),
            rnp_values: DEFAULT_RNP_GRID.to_vec(),
            n_noise_draws: default_draws(),
            include_noiseless: true,
            evolution: EvolutionConfig::default(),
            test_set: TestSetSpec {
                n_random: 70,
                ..TestSetSpec::default()
            },
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SWEEP_SCHEMA {
            return Err(Error::Config(format!("expected schema {SWEEP_SCHEMA:?}, found {:?}", self.schema)));
        }
        if self.n_qubits_list.is_empty() || self.noise_kinds.is_empty() || self.rnp_values.is_empty() {
            return Err(Error::Config("n_qubits_list, noise_kinds and rnp_values must be non-empty".into()));
        }
        if let Some(&n) = self.n_qubits_list.iter().find(|&&n| n == 0 || n % 2 == 1 || n > MAX_QUBITS) {
            return Err(Error::Config(format!("sweep register sizes must be even and at most {MAX_QUBITS}, got {n}")));
        }
        check_rnp_values(&self.rnp_values)?;
        if self.n_noise_draws == 0 {
            return Err(Error::Config("n_noise_draws must be at least 1".into()));
        }
        if self.test_set.max_states.values().any(|&k| k == 0) {
            return Err(Error::Config("max_states entries must be at least 1".into()));
        }
        self.evolution.validate()
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub records: Vec<ExperimentRecord>,
    /// Diagnostics per register size, noiseless and noisy evolutions apart.
    pub noiseless: BTreeMap<usize, Diagnostics>,
    pub noisy: BTreeMap<usize, Diagnostics>,
    pub csv_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
}

/// Runs every `(n, kind, rnp)` cell and writes `results.csv`, the replicated
/// parameter files and test manifests, and one `rms_vs_rnp_n{n}.svg` per size.
///
/// A failing cell becomes an error row and the sweep moves on.
pub fn cmd_noise_sweep(ctx: &RunContext, cfg: &SweepConfig, config_path: Option<&Path>) -> Result<SweepOutcome> {
    cfg.validate()?;
    let (source, source_hash) = load_params(&resolve(config_path, &cfg.params))?;
    fs::create_dir_all(&ctx.out_dir)?;
    let mut kinds = Vec::new();
    if cfg.include_noiseless {
        kinds.push(NoiseKind::None);
    }
    kinds.extend(cfg.noise_kinds.iter().filter(|k| **k != NoiseKind::None));

    let mut records = Vec::new();
    let mut noiseless = BTreeMap::new();
    let mut noisy = BTreeMap::new();
    for &n in &cfg.n_qubits_list {
        let (params, params_hash) = if n == 2 {
            (source.clone(), source_hash.clone())
        } else {
            let params = replicate(&ReplicationSpec {
                source: source.clone(),
                n_pairs: n / 2,
                cross_pair_coupling: cfg.cross_pair_coupling,
            })?;
            let hash = write_json(&ctx.path(&format!("params_n{n}.json")), &params)?;
            (params, hash)
        };
        let manifest = TrainingSetManifest::new(
            n,
            cfg.test_set.n_random,
            derive_seed(ctx.seed, &[TAG_TEST_SET, n as u64]),
            cfg.test_set.mode,
        )?;
        write_json(&ctx.path(&format!("test_manifest_n{n}.json")), &manifest)?;
        let mut samples = manifest.build()?;
        if let Some(&k) = cfg.test_set.max_states.get(&n) {
            samples = select_subset(&samples, k);
        }
        for cell in cells(&kinds, &cfg.rnp_values) {
            let (record, diag) = run_cell(&params, &params_hash, &samples, &cfg.evolution, cell, cfg.n_noise_draws, ctx.seed);
            eprintln!(
                "n={n} {} rnp={:e}: {}",
                record.noise_kind,
                record.rnp,
                record.rms_mean.map_or(record.status.clone(), |m| format!("rms {m:.4e}"))
            );
            let slot = if cell.0 == NoiseKind::None { &mut noiseless } else { &mut noisy };
            let entry: &mut Diagnostics = slot.entry(n).or_default();
            *entry = entry.merge(diag);
            records.push(record);
        }
    }

    let csv_path = ctx.path("results.csv");
    let mut buf = Vec::new();
    write_records(&mut buf, &records)?;
    fs::write(&csv_path, &buf)?;
    let text = String::from_utf8(buf).expect("csv output is utf-8");
    let mut plot_paths = Vec::new();
    for (n, svg) in plots_from_csv(&text)? {
        let path = ctx.path(&format!("rms_vs_rnp_n{n}.svg"));
        fs::write(&path, svg)?;
        plot_paths.push(path);
    }
    Ok(SweepOutcome {
        records,
        noiseless,
        noisy,
        csv_path,
        plot_paths,
    })
}
