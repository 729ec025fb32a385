use std::f64::consts::PI;
use std::fs;

use serde::{Deserialize, Serialize};

use super::{write_json, NoiseSpec, RunContext, TAG_INIT, TAG_TEST_SET, TAG_TRAIN_NOISE, TAG_TRAIN_SET, TRAIN_SCHEMA};
use crate::evolution::EvolutionConfig;
use crate::hamiltonian::{ControlParameters, QubitPair};
use crate::rng::{derive_seed, derived_rng};
use crate::states::{SampleMode, TrainingSetManifest};
use crate::training::{self, residual_vector, StopReason, TrainingConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub schema: String,
    pub n_qubits: usize,
    /// Fourier harmonics per coefficient.
    pub harmonics: usize,
    /// Initial coefficients are uniform in `±init_half_width`.
    pub init_half_width: f64,
    /// Random states added to the charge basis for training.
    pub train_random: usize,
    /// Random states added to the charge basis for testing.
    pub test_random: usize,
    pub sample_mode: SampleMode,
    pub evolution: EvolutionConfig,
    pub training: TrainingConfig,
    pub noise: NoiseSpec,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            schema: TRAIN_SCHEMA.to_string(),
            n_qubits: 2,
            harmonics: 3,
            init_half_width: 0.5,
            train_random: 12,
            test_random: 70,
            sample_mode: SampleMode::Joint,
            evolution: EvolutionConfig::default(),
            training: TrainingConfig::default(),
            noise: NoiseSpec::default(),
        }
    }
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != TRAIN_SCHEMA {
            return Err(Error::Config(format!("expected schema {TRAIN_SCHEMA:?}, found {:?}", self.schema)));
        }
        if !(self.init_half_width >= 0.0 && self.init_half_width.is_finite()) {
            return Err(Error::Config("init_half_width must be nonnegative".into()));
        }
        self.evolution.validate()?;
        self.training.validate()?;
        self.noise.with_seed(0)?;
        Ok(())
    }
}

/// Written next to the parameters as `train_summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub epochs: usize,
    pub accepted_steps: usize,
    pub stop_reason: StopReason,
    pub final_train_rms: f64,
    /// Noiseless RMS over the test manifest.
    pub test_rms: f64,
    pub params_hash: String,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ControlParameters,
    pub summary: TrainSummary,
    pub converged: bool,
}

/// Trains from a seeded random start and writes `params.json`,
/// `history.csv`, both manifests and `train_summary.json`.
///
/// With `dry_run` the config is validated and nothing is computed or written.
pub fn cmd_train(ctx: &RunContext, cfg: &TrainRunConfig, dry_run: bool) -> Result<Option<TrainOutcome>> {
    cfg.validate()?;
    let n = cfg.n_qubits;
    let train_manifest = TrainingSetManifest::new(n, cfg.train_random, derive_seed(ctx.seed, &[TAG_TRAIN_SET, n as u64]), cfg.sample_mode)?;
    let test_manifest = TrainingSetManifest::new(n, cfg.test_random, derive_seed(ctx.seed, &[TAG_TEST_SET, n as u64]), cfg.sample_mode)?;
    let omega = 2.0 * PI / cfg.evolution.t_final;
    let mut rng = derived_rng(ctx.seed, &[TAG_INIT]);
    let p0 = ControlParameters::random(n, cfg.harmonics, omega, &QubitPair::all(n), cfg.init_half_width, &mut rng)?;
    if dry_run {
        return Ok(None);
    }

    let train_set = train_manifest.build()?;
    let test_set = test_manifest.build()?;
    let noise = cfg.noise.with_seed(derive_seed(ctx.seed, &[TAG_TRAIN_NOISE]))?;
    let (params, history) = training::train(&p0, &train_set, &cfg.evolution, &cfg.training, &noise)?;
    let test_rms = training::rms(&residual_vector(&params, &test_set, &cfg.evolution, &Default::default())?);

    fs::create_dir_all(&ctx.out_dir)?;
    let params_hash = write_json(&ctx.path("params.json"), &params)?;
    write_json(&ctx.path("train_manifest.json"), &train_manifest)?;
    write_json(&ctx.path("test_manifest.json"), &test_manifest)?;
    history.write_csv(fs::File::create(ctx.path("history.csv"))?)?;
    let summary = TrainSummary {
        seed: ctx.seed,
        epochs: history.records.len().saturating_sub(1),
        accepted_steps: history.accepted_steps(),
        stop_reason: history.stop_reason,
        final_train_rms: history.final_rms(),
        test_rms,
        params_hash,
    };
    write_json(&ctx.path("train_summary.json"), &summary)?;
    Ok(Some(TrainOutcome {
        params,
        converged: history.converged(),
        summary,
    }))
}
