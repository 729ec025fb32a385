//! Training and test samples: charge-basis and Haar-random pure states paired
//! with their SWAP targets.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::rng::rng_from_seed;
use crate::{Error, Result, MAX_QUBITS};

pub const MANIFEST_SCHEMA: &str = "swapnet.manifest/v1";

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::UnsupportedQubitCount(n_qubits));
    }
    Ok(())
}

/// Which qubit swaps with which: `(input, output)` pairs covering the register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairingScheme {
    pairs: Vec<(usize, usize)>,
}

impl PairingScheme {
    pub fn new(pairs: Vec<(usize, usize)>, n_qubits: usize) -> Result<Self> {
        let scheme = Self { pairs };
        scheme.validate(n_qubits)?;
        Ok(scheme)
    }

    /// Qubit `2k` swaps with `2k + 1`.
    pub fn adjacent(n_qubits: usize) -> Result<Self> {
        if !n_qubits.is_multiple_of(2) {
            return Err(Error::InvalidScheme(format!("{n_qubits} qubits cannot be paired")));
        }
        Self::new((0..n_qubits / 2).map(|k| (2 * k, 2 * k + 1)).collect(), n_qubits)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !n_qubits.is_multiple_of(2) || self.pairs.len() != n_qubits / 2 {
            return Err(Error::InvalidScheme(format!(
                "{} pairs cannot cover {n_qubits} qubits",
                self.pairs.len()
            )));
        }
        let mut seen = vec![false; n_qubits];
        for &(a, b) in &self.pairs {
            for q in [a, b] {
                if q >= n_qubits {
                    return Err(Error::InvalidScheme(format!("qubit {q} out of range")));
                }
                if seen[q] {
                    return Err(Error::InvalidScheme(format!("qubit {q} appears twice")));
                }
                seen[q] = true;
            }
        }
        Ok(())
    }

    /// Basis permutation `π` with `SWAP|r⟩ = |π(r)⟩`.
    pub fn permutation(&self, n_qubits: usize) -> Result<Vec<usize>> {
        self.validate(n_qubits)?;
        let bit = |q: usize| n_qubits - 1 - q;
        Ok((0..1usize << n_qubits)
            .map(|r| {
                let mut out = r;
                for &(a, b) in &self.pairs {
                    let (ba, bb) = ((r >> bit(a)) & 1, (r >> bit(b)) & 1);
                    out &= !((1 << bit(a)) | (1 << bit(b)));
                    out |= (bb << bit(a)) | (ba << bit(b));
                }
                out
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub initial: ComplexMatrix,
    pub target: ComplexMatrix,
    pub label: String,
}

/// How random samples are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Haar-random in the joint `2^n`-dimensional space.
    #[default]
    Joint,
    /// Tensor product of independent Haar-random two-qubit states, one per
    /// swap pair (pairs taken in qubit order `(0,1), (2,3), …`).
    PairProduct,
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Joint => "joint",
            Self::PairProduct => "pair_product",
        })
    }
}

impl FromStr for SampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Self::Joint),
            "pair_product" => Ok(Self::PairProduct),
            other => Err(Error::Config(format!("unknown sample mode {other:?}"))),
        }
    }
}

/// Computational basis `e_0 … e_{2^n − 1}`.
pub fn charge_basis(n_qubits: usize) -> Result<Vec<ComplexVector>> {
    check_register(n_qubits)?;
    let dim = 1 << n_qubits;
    Ok((0..dim).map(|i| ComplexVector::basis(dim, i)).collect())
}

/// Haar-random pure state: complex standard-normal amplitudes, normalized.
pub fn random_pure_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<ComplexVector> {
    check_register(n_qubits)?;
    let amps = (0..1usize << n_qubits)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Ok(ComplexVector::new(amps).normalized())
}

fn random_pair_product_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<ComplexVector> {
    if !n_qubits.is_multiple_of(2) {
        return Err(Error::InvalidScheme(format!("{n_qubits} qubits cannot be paired")));
    }
    check_register(n_qubits)?;
    let mut state = random_pure_state(2, rng)?;
    for _ in 1..n_qubits / 2 {
        state = state.kron(&random_pure_state(2, rng)?)?;
    }
    Ok(state)
}

/// Dense permutation matrix exchanging every paired qubit.
pub fn swap_unitary(scheme: &PairingScheme, n_qubits: usize) -> Result<ComplexMatrix> {
    let perm = scheme.permutation(n_qubits)?;
    let dim = perm.len();
    let mut u = ComplexMatrix::zeros(dim);
    for (r, &image) in perm.iter().enumerate() {
        u[(image, r)] = Complex64::new(1.0, 0.0);
    }
    Ok(u)
}

/// `U ρ U†` for the SWAP of `scheme`, computed as an exact basis relabeling.
pub fn swap_target(rho: &ComplexMatrix, scheme: &PairingScheme, n_qubits: usize) -> Result<ComplexMatrix> {
    rho.permute_basis(&scheme.permutation(n_qubits)?)
}

/// Every charge-basis state followed by `n_random` random states, each as a
/// density matrix with its SWAP target.
pub fn make_training_set<R: Rng + ?Sized>(
    n_qubits: usize,
    scheme: &PairingScheme,
    n_random: usize,
    mode: SampleMode,
    rng: &mut R,
) -> Result<Vec<TrainingSample>> {
    let perm = scheme.permutation(n_qubits)?;
    let sample = |psi: ComplexVector, label: String| -> Result<TrainingSample> {
        let initial = psi.outer();
        let target = initial.permute_basis(&perm)?;
        Ok(TrainingSample { initial, target, label })
    };
    let mut out = Vec::with_capacity((1 << n_qubits) + n_random);
    for (i, e) in charge_basis(n_qubits)?.into_iter().enumerate() {
        out.push(sample(e, format!("basis-{i}"))?);
    }
    for k in 0..n_random {
        let psi = match mode {
            SampleMode::Joint => random_pure_state(n_qubits, rng)?,
            SampleMode::PairProduct => random_pair_product_state(n_qubits, rng)?,
        };
        out.push(sample(psi, format!("random-{k}"))?);
    }
    Ok(out)
}

/// Everything needed to regenerate a sample set exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSetManifest {
    pub schema: String,
    pub n_qubits: usize,
    pub seed: u64,
    pub n_random: usize,
    #[serde(default)]
    pub mode: SampleMode,
    pub scheme: PairingScheme,
    pub labels: Vec<String>,
}

impl TrainingSetManifest {
    /// Manifest for the adjacent pairing scheme.
    pub fn new(n_qubits: usize, n_random: usize, seed: u64, mode: SampleMode) -> Result<Self> {
        let scheme = PairingScheme::adjacent(n_qubits)?;
        let labels = (0..1usize << n_qubits)
            .map(|i| format!("basis-{i}"))
            .chain((0..n_random).map(|k| format!("random-{k}")))
            .collect();
        Ok(Self {
            schema: MANIFEST_SCHEMA.to_string(),
            n_qubits,
            seed,
            n_random,
            mode,
            scheme,
            labels,
        })
    }

    pub fn build(&self) -> Result<Vec<TrainingSample>> {
        if self.schema != MANIFEST_SCHEMA {
            return Err(Error::Config(format!("unsupported manifest schema {:?}", self.schema)));
        }
        let mut rng = rng_from_seed(self.seed);
        let samples = make_training_set(self.n_qubits, &self.scheme, self.n_random, self.mode, &mut rng)?;
        let labels: Vec<&str> = samples.iter().map(|s| s.label.as_str()).collect();
        if labels != self.labels.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Config("manifest labels do not match the regenerated set".into()));
        }
        Ok(samples)
    }
}
