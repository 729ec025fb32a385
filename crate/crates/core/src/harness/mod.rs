//! Command implementations behind the `swapnet` CLI.
//!
//! Every command takes a [`RunContext`] (base seed and output directory) plus a
//! JSON config carrying a `schema` tag. All randomness is derived from the base
//! seed with [`derive_seed`](crate::rng::derive_seed), so rerunning a command
//! with the same config and seed rewrites byte-identical files.

mod evaluate;
mod oracle;
mod plot;
mod train;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::evolution::{NoiseConfig, NoiseKind};
use crate::hamiltonian::ControlParameters;
use crate::scaling::{replicate, CrossPairCoupling, ReplicationSpec};
use crate::{Error, Result};

pub use evaluate::{
    cmd_evaluate, cmd_noise_sweep, evaluate_cell, read_records, select_subset, write_records, CellOutcome,
    Diagnostics, EvaluateConfig, ExperimentRecord, SweepConfig, SweepOutcome, TestSetSpec, DEFAULT_RNP_GRID,
};
pub use oracle::{cmd_oracle_check, jacobian_check, rk4_order, OracleReport, OrderStudy};
pub use plot::{plot_records, plots_from_csv};
pub use train::{cmd_train, TrainOutcome, TrainRunConfig, TrainSummary};

pub const TRAIN_SCHEMA: &str = "swapnet/train/v1";
pub const EVALUATE_SCHEMA: &str = "swapnet/evaluate/v1";
pub const SWEEP_SCHEMA: &str = "swapnet/sweep/v1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

/// Seed-derivation tags. Test sets use `[TAG_TEST_SET, n_qubits]`.
pub const TAG_INIT: u64 = 1;
pub const TAG_TRAIN_SET: u64 = 2;
pub const TAG_TEST_SET: u64 = 3;
pub const TAG_TRAIN_NOISE: u64 = 4;

/// Exit code for an error that aborted a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::DegenerateTrace { .. } | Error::SingularNormalMatrix => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunContext {
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunContext {
    pub fn new(seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            seed,
            out_dir: out_dir.into(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }
}

/// Noise kind and scale; the stream seed is always derived by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub rnp: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::None,
            rnp: 0.0,
        }
    }
}

impl NoiseSpec {
    pub fn with_seed(&self, seed: u64) -> Result<NoiseConfig> {
        NoiseConfig::new(self.kind, self.rnp, seed)
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `value` as JSON and returns the hash of the written bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    let bytes = to_json_bytes(value)?;
    fs::write(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Parses a config document and checks its schema tag.
pub fn parse_config<T: DeserializeOwned>(text: &str, schema: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(s) if s == schema => {}
        Some(s) => return Err(Error::Config(format!("expected schema {schema:?}, found {s:?}"))),
        None => return Err(Error::Config(format!("missing schema field (expected {schema:?})"))),
    }
    Ok(serde_json::from_value(value)?)
}

pub fn load_config<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, schema)
}

/// Resolves `path` against the directory holding the config file.
pub fn resolve(config_path: Option<&Path>, path: &Path) -> PathBuf {
    match config_path.and_then(Path::parent) {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Reads a parameter file and returns it with the hash of its bytes.
pub fn load_params(path: &Path) -> Result<(ControlParameters, String)> {
    let bytes = fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let params: ControlParameters = serde_json::from_slice(&bytes)?;
    Ok((params, sha256_hex(&bytes)))
}

/// Replicates a two-qubit parameter file onto `n_pairs` pairs and writes the
/// result to `out_dir/output`.
pub fn cmd_transfer(
    ctx: &RunContext,
    source: &Path,
    n_pairs: usize,
    cross_pair_coupling: CrossPairCoupling,
    output: &str,
) -> Result<(PathBuf, String)> {
    let (src, _) = load_params(source)?;
    let spec = ReplicationSpec {
        source: src,
        n_pairs,
        cross_pair_coupling,
    };
    let params = replicate(&spec)?;
    ctx.ensure_out_dir()?;
    let path = ctx.path(output);
    let hash = write_json(&path, &params)?;
    Ok((path, hash))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_is_checked() {
        #[derive(Deserialize)]
        #[allow(dead_code)]
        struct Doc {
            schema: String,
            x: u32,
        }
        assert!(parse_config::<Doc>(r#"{"schema":"a/v1","x":1}"#, "a/v1").is_ok());
        assert!(matches!(parse_config::<Doc>(r#"{"schema":"a/v2","x":1}"#, "a/v1"), Err(Error::Config(_))));
        assert!(matches!(parse_config::<Doc>(r#"{"x":1}"#, "a/v1"), Err(Error::Config(_))));
        assert!(matches!(parse_config::<Doc>("{", "a/v1"), Err(Error::Json(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::SingularNormalMatrix), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::DimensionMismatch { expected: 4, found: 16 }), EXIT_CONFIG);
    }

    #[test]
    fn hashes_are_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let cfg = Path::new("/a/b/run.json");
        assert_eq!(resolve(Some(cfg), Path::new("p.json")), PathBuf::from("/a/b/p.json"));
        assert_eq!(resolve(Some(cfg), Path::new("/x/p.json")), PathBuf::from("/x/p.json"));
        assert_eq!(resolve(None, Path::new("p.json")), PathBuf::from("p.json"));
    }
}
