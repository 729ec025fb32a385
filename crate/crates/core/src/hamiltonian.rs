//! Time-dependent spin Hamiltonian with Fourier-parameterized controls.
//!
//! ```text
//! H(t) = Σ_i k_i(t) σx_i + Σ_i ε_i(t) σz_i + Σ_{i<j} ζ_ij(t) σz_i σz_j
//! ```
//!
//! Each coefficient is a truncated Fourier series sharing one harmonic count
//! and base frequency. Qubit 0 is the leftmost tensor factor, which makes it
//! the most significant bit of a basis index.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{kron, pauli, ComplexMatrix};
use crate::{Error, Result, MAX_QUBITS};

pub const DEFAULT_HARMONICS: usize = 3;

/// Lowest harmonic completes exactly one period over `[0, t_final]`.
pub fn default_base_frequency(t_final: f64) -> f64 {
    2.0 * PI / t_final
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    pub constant: f64,
    pub cosine: Vec<f64>,
    pub sine: Vec<f64>,
    pub base_frequency: f64,
}

impl FourierSeries {
    pub fn new(constant: f64, cosine: Vec<f64>, sine: Vec<f64>, base_frequency: f64) -> Result<Self> {
        if cosine.len() != sine.len() {
            return Err(Error::InvalidParameters(format!(
                "cosine/sine coefficient counts differ ({} vs {})",
                cosine.len(),
                sine.len()
            )));
        }
        if !(base_frequency > 0.0 && base_frequency.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "base frequency must be positive, got {base_frequency}"
            )));
        }
        Ok(Self {
            constant,
            cosine,
            sine,
            base_frequency,
        })
    }

    pub fn zero(harmonics: usize, base_frequency: f64) -> Self {
        Self {
            constant: 0.0,
            cosine: vec![0.0; harmonics],
            sine: vec![0.0; harmonics],
            base_frequency,
        }
    }

    pub fn constant(value: f64, harmonics: usize, base_frequency: f64) -> Self {
        Self {
            constant: value,
            ..Self::zero(harmonics, base_frequency)
        }
    }

    pub fn harmonics(&self) -> usize {
        self.cosine.len()
    }

    /// Flat layout `[a0, a1..aM, b1..bM]`, as stored in parameter files.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.harmonics());
        v.push(self.constant);
        v.extend_from_slice(&self.cosine);
        v.extend_from_slice(&self.sine);
        v
    }

    pub fn from_flat(flat: &[f64], base_frequency: f64) -> Result<Self> {
        if flat.is_empty() || flat.len().is_multiple_of(2) {
            return Err(Error::InvalidParameters(format!(
                "a Fourier series needs 1 + 2M coefficients, got {}",
                flat.len()
            )));
        }
        let m = (flat.len() - 1) / 2;
        Self::new(
            flat[0],
            flat[1..=m].to_vec(),
            flat[m + 1..].to_vec(),
            base_frequency,
        )
    }

    fn eval_with(&self, table: &HarmonicTable) -> f64 {
        let mut acc = self.constant;
        for m in 0..self.cosine.len() {
            acc += self.cosine[m] * table.cos[m] + self.sine[m] * table.sin[m];
        }
        acc
    }
}

/// `cos(mωt)` and `sin(mωt)` for `m = 1..=M`, shared by every series of one
/// parameter set.
struct HarmonicTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl HarmonicTable {
    fn new(harmonics: usize, base_frequency: f64, t: f64) -> Self {
        let (cos, sin) = (1..=harmonics)
            .map(|m| {
                let phase = m as f64 * base_frequency * t;
                (phase.cos(), phase.sin())
            })
            .unzip();
        Self { cos, sin }
    }
}

/// `a0 + Σ_m a_m cos(mωt) + b_m sin(mωt)`.
pub fn eval_series(s: &FourierSeries, t: f64) -> f64 {
    s.eval_with(&HarmonicTable::new(s.harmonics(), s.base_frequency, t))
}

/// Unordered pair of distinct qubits, stored with `first < second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitPair {
    first: usize,
    second: usize,
}

impl QubitPair {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidPair(i, j));
        }
        Ok(Self {
            first: i.min(j),
            second: i.max(j),
        })
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn second(&self) -> usize {
        self.second
    }

    /// All unordered pairs of an `n`-qubit register in lexicographic order.
    pub fn all(n_qubits: usize) -> Vec<QubitPair> {
        (0..n_qubits)
            .flat_map(|i| (i + 1..n_qubits).map(move |j| QubitPair { first: i, second: j }))
            .collect()
    }
}

impl fmt::Display for QubitPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.second)
    }
}

impl FromStr for QubitPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidParameters(format!("bad pair key {s:?}")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameters(format!("bad pair key {s:?}")))
        };
        QubitPair::new(parse(a)?, parse(b)?)
    }
}

/// Which Hamiltonian term a flat coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Tunneling(usize),
    Bias(usize),
    Coupling(QubitPair),
}

/// Instantaneous coefficient values at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlValues {
    pub tunneling: Vec<f64>,
    pub bias: Vec<f64>,
    /// In [`QubitPair::all`] order.
    pub coupling: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsFile", into = "ParamsFile")]
pub struct ControlParameters {
    n_qubits: usize,
    harmonics: usize,
    base_frequency: f64,
    tunneling: Vec<FourierSeries>,
    bias: Vec<FourierSeries>,
    /// Every unordered pair is present; absent couplings are zero series.
    coupling: BTreeMap<QubitPair, FourierSeries>,
}

impl ControlParameters {
    pub fn zeros(n_qubits: usize, harmonics: usize, base_frequency: f64) -> Result<Self> {
        validate_register(n_qubits)?;
        if !(base_frequency > 0.0 && base_frequency.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "base frequency must be positive, got {base_frequency}"
            )));
        }
        let zero = FourierSeries::zero(harmonics, base_frequency);
        Ok(Self {
            n_qubits,
            harmonics,
            base_frequency,
            tunneling: vec![zero.clone(); n_qubits],
            bias: vec![zero.clone(); n_qubits],
            coupling: QubitPair::all(n_qubits)
                .into_iter()
                .map(|p| (p, zero.clone()))
                .collect(),
        })
    }

    /// Every tunneling and bias coefficient, and the couplings of `active_pairs`,
    /// drawn uniformly from `[-half_width, half_width]`. Other couplings stay zero.
    pub fn random<R: Rng + ?Sized>(
        n_qubits: usize,
        harmonics: usize,
        base_frequency: f64,
        active_pairs: &[QubitPair],
        half_width: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut p = Self::zeros(n_qubits, harmonics, base_frequency)?;
        for pair in active_pairs {
            if pair.second >= n_qubits {
                return Err(Error::QubitIndexOutOfRange {
                    index: pair.second,
                    n_qubits,
                });
            }
        }
        let mut draw = |s: &mut FourierSeries| {
            s.constant = rng.random_range(-half_width..=half_width);
            for c in s.cosine.iter_mut().chain(s.sine.iter_mut()) {
                *c = rng.random_range(-half_width..=half_width);
            }
        };
        for q in 0..n_qubits {
            draw(&mut p.tunneling[q]);
            draw(&mut p.bias[q]);
        }
        for pair in active_pairs {
            draw(p.coupling.get_mut(pair).expect("all pairs present"));
        }
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn base_frequency(&self) -> f64 {
        self.base_frequency
    }

    pub fn tunneling(&self, qubit: usize) -> &FourierSeries {
        &self.tunneling[qubit]
    }

    pub fn bias(&self, qubit: usize) -> &FourierSeries {
        &self.bias[qubit]
    }

    pub fn coupling(&self, pair: QubitPair) -> Option<&FourierSeries> {
        self.coupling.get(&pair)
    }

    pub fn couplings(&self) -> impl Iterator<Item = (QubitPair, &FourierSeries)> {
        self.coupling.iter().map(|(p, s)| (*p, s))
    }

    /// Pairs whose coupling series has any nonzero coefficient.
    pub fn active_pairs(&self) -> Vec<QubitPair> {
        self.coupling
            .iter()
            .filter(|(_, s)| s.to_flat().iter().any(|&c| c != 0.0))
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn set_tunneling(&mut self, qubit: usize, series: FourierSeries) -> Result<()> {
        self.check_series(&series)?;
        self.check_qubit(qubit)?;
        self.tunneling[qubit] = series;
        Ok(())
    }

    pub fn set_bias(&mut self, qubit: usize, series: FourierSeries) -> Result<()> {
        self.check_series(&series)?;
        self.check_qubit(qubit)?;
        self.bias[qubit] = series;
        Ok(())
    }

    pub fn set_coupling(&mut self, pair: QubitPair, series: FourierSeries) -> Result<()> {
        self.check_series(&series)?;
        self.check_qubit(pair.second)?;
        self.coupling.insert(pair, series);
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitIndexOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn check_series(&self, s: &FourierSeries) -> Result<()> {
        if s.harmonics() != self.harmonics || s.base_frequency != self.base_frequency {
            return Err(Error::InvalidParameters(format!(
                "series has M={} ω={}, parameter set uses M={} ω={}",
                s.harmonics(),
                s.base_frequency,
                self.harmonics,
                self.base_frequency
            )));
        }
        Ok(())
    }

    fn series(&self) -> impl Iterator<Item = (Term, &FourierSeries)> {
        let t = self.tunneling.iter().enumerate().map(|(q, s)| (Term::Tunneling(q), s));
        let b = self.bias.iter().enumerate().map(|(q, s)| (Term::Bias(q), s));
        let c = self.coupling.iter().map(|(p, s)| (Term::Coupling(*p), s));
        t.chain(b).chain(c)
    }

    fn series_mut(&mut self) -> impl Iterator<Item = &mut FourierSeries> {
        self.tunneling
            .iter_mut()
            .chain(self.bias.iter_mut())
            .chain(self.coupling.values_mut())
    }

    pub fn coefficients_per_series(&self) -> usize {
        1 + 2 * self.harmonics
    }

    pub fn coefficient_count(&self) -> usize {
        (2 * self.n_qubits + self.coupling.len()) * self.coefficients_per_series()
    }

    /// All Fourier coefficients in canonical order: tunneling by qubit, bias by
    /// qubit, then couplings in pair order; each series as `[a0, a.., b..]`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.series().flat_map(|(_, s)| s.to_flat()).collect()
    }

    pub fn set_coefficients(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.coefficient_count() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficient_count(),
                found: flat.len(),
            });
        }
        let m = self.harmonics;
        for (s, chunk) in self.series_mut().zip(flat.chunks(1 + 2 * m)) {
            s.constant = chunk[0];
            s.cosine.copy_from_slice(&chunk[1..=m]);
            s.sine.copy_from_slice(&chunk[m + 1..]);
        }
        Ok(())
    }

    /// Term owning each flat coefficient, aligned with [`Self::coefficients`].
    pub fn coefficient_terms(&self) -> Vec<Term> {
        let per = self.coefficients_per_series();
        self.series()
            .flat_map(|(term, _)| std::iter::repeat_n(term, per))
            .collect()
    }

    /// Evaluates every coefficient at time `t`.
    pub fn values_at(&self, t: f64) -> ControlValues {
        let table = HarmonicTable::new(self.harmonics, self.base_frequency, t);
        ControlValues {
            tunneling: self.tunneling.iter().map(|s| s.eval_with(&table)).collect(),
            bias: self.bias.iter().map(|s| s.eval_with(&table)).collect(),
            coupling: self.coupling.values().map(|s| s.eval_with(&table)).collect(),
        }
    }
}

fn validate_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::UnsupportedQubitCount(n_qubits));
    }
    Ok(())
}

/// On-disk form of [`ControlParameters`].
#[derive(Serialize, Deserialize)]
struct ParamsFile {
    n_qubits: usize,
    #[serde(rename = "M")]
    harmonics: usize,
    base_frequency: f64,
    tunneling: Vec<Vec<f64>>,
    bias: Vec<Vec<f64>>,
    coupling: BTreeMap<String, Vec<f64>>,
}

impl From<ControlParameters> for ParamsFile {
    fn from(p: ControlParameters) -> Self {
        Self {
            n_qubits: p.n_qubits,
            harmonics: p.harmonics,
            base_frequency: p.base_frequency,
            tunneling: p.tunneling.iter().map(FourierSeries::to_flat).collect(),
            bias: p.bias.iter().map(FourierSeries::to_flat).collect(),
            coupling: p
                .coupling
                .iter()
                .map(|(pair, s)| (pair.to_string(), s.to_flat()))
                .collect(),
        }
    }
}

impl TryFrom<ParamsFile> for ControlParameters {
    type Error = Error;

    fn try_from(f: ParamsFile) -> Result<Self> {
        let mut p = ControlParameters::zeros(f.n_qubits, f.harmonics, f.base_frequency)?;
        if f.tunneling.len() != f.n_qubits || f.bias.len() != f.n_qubits {
            return Err(Error::InvalidParameters(format!(
                "expected {} tunneling and bias series, found {} and {}",
                f.n_qubits,
                f.tunneling.len(),
                f.bias.len()
            )));
        }
        let series = |flat: &[f64]| -> Result<FourierSeries> {
            let s = FourierSeries::from_flat(flat, f.base_frequency)?;
            if s.harmonics() != f.harmonics {
                return Err(Error::InvalidParameters(format!(
                    "series has {} harmonics, file declares M={}",
                    s.harmonics(),
                    f.harmonics
                )));
            }
            Ok(s)
        };
        for q in 0..f.n_qubits {
            p.tunneling[q] = series(&f.tunneling[q])?;
            p.bias[q] = series(&f.bias[q])?;
        }
        for (key, flat) in &f.coupling {
            let pair: QubitPair = key.parse()?;
            if pair.second >= f.n_qubits {
                return Err(Error::QubitIndexOutOfRange {
                    index: pair.second,
                    n_qubits: f.n_qubits,
                });
            }
            p.coupling.insert(pair, series(flat)?);
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Z,
}

/// `I ⊗ … ⊗ σ ⊗ … ⊗ I` with `σ` at tensor position `qubit_index` (0 = leftmost).
pub fn embed_pauli(which: PauliAxis, qubit_index: usize, n_qubits: usize) -> Result<ComplexMatrix> {
    validate_register(n_qubits)?;
    if qubit_index >= n_qubits {
        return Err(Error::QubitIndexOutOfRange {
            index: qubit_index,
            n_qubits,
        });
    }
    let sigma = match which {
        PauliAxis::X => pauli::x(),
        PauliAxis::Z => pauli::z(),
    };
    let mut acc = if qubit_index == 0 { sigma.clone() } else { pauli::identity() };
    for q in 1..n_qubits {
        let factor = if q == qubit_index { &sigma } else { &pauli::identity() };
        acc = kron(&acc, factor)?;
    }
    Ok(acc)
}

/// `σz_i σz_j`.
pub fn embed_coupling(i: usize, j: usize, n_qubits: usize) -> Result<ComplexMatrix> {
    if i == j {
        return Err(Error::InvalidPair(i, j));
    }
    let zi = embed_pauli(PauliAxis::Z, i, n_qubits)?;
    let zj = embed_pauli(PauliAxis::Z, j, n_qubits)?;
    zi.matmul(&zj)
}

/// Dense Hamiltonian at time `t`, assembled term by term from embedded Paulis.
///
/// The half-weighted double sum over ordered pairs `i ≠ j` is the plain sum
/// over unordered pairs.
pub fn build_hamiltonian(p: &ControlParameters, t: f64) -> ComplexMatrix {
    let values = p.values_at(t);
    let n = p.n_qubits;
    let mut h = ComplexMatrix::zeros(p.dim());
    for q in 0..n {
        let x = embed_pauli(PauliAxis::X, q, n).expect("valid qubit");
        let z = embed_pauli(PauliAxis::Z, q, n).expect("valid qubit");
        h.axpy(values.tunneling[q], &x);
        h.axpy(values.bias[q], &z);
    }
    for (pair, zeta) in p.coupling.keys().zip(&values.coupling) {
        if *zeta != 0.0 {
            let zz = embed_coupling(pair.first, pair.second, n).expect("valid pair");
            h.axpy(*zeta, &zz);
        }
    }
    h
}

/// Precomputed index structure of an `n`-qubit register used by the fast
/// Hamiltonian representation.
#[derive(Clone, Debug)]
pub struct SpinLayout {
    n_qubits: usize,
    flip_masks: Vec<usize>,
    /// `z_signs[q][r]` is the σz eigenvalue of qubit `q` in basis state `r`.
    z_signs: Vec<Vec<f64>>,
    pairs: Vec<QubitPair>,
}

impl SpinLayout {
    pub fn new(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let flip_masks: Vec<usize> = (0..n_qubits).map(|q| 1 << (n_qubits - 1 - q)).collect();
        let z_signs = flip_masks
            .iter()
            .map(|&m| (0..dim).map(|r| if r & m == 0 { 1.0 } else { -1.0 }).collect())
            .collect();
        Self {
            n_qubits,
            flip_masks,
            z_signs,
            pairs: QubitPair::all(n_qubits),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Basis-index bit flipped by `σx` on `qubit`.
    pub fn flip_mask(&self, qubit: usize) -> usize {
        self.flip_masks[qubit]
    }

    pub fn hamiltonian(&self, values: &ControlValues) -> SpinHamiltonian {
        let dim = self.dim();
        let mut diagonal = vec![0.0; dim];
        for (signs, &eps) in self.z_signs.iter().zip(&values.bias) {
            if eps != 0.0 {
                for (d, s) in diagonal.iter_mut().zip(signs) {
                    *d += eps * s;
                }
            }
        }
        for (pair, &zeta) in self.pairs.iter().zip(&values.coupling) {
            if zeta != 0.0 {
                let (si, sj) = (&self.z_signs[pair.first], &self.z_signs[pair.second]);
                for r in 0..dim {
                    diagonal[r] += zeta * si[r] * sj[r];
                }
            }
        }
        SpinHamiltonian {
            flip_masks: self.flip_masks.clone(),
            tunneling: values.tunneling.clone(),
            diagonal,
        }
    }
}

/// `H = Σ_q k_q X_q + diag(d)`: the transverse part acts by bit flips and the
/// bias and coupling terms collapse into one real diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian {
    pub flip_masks: Vec<usize>,
    pub tunneling: Vec<f64>,
    pub diagonal: Vec<f64>,
}

impl SpinHamiltonian {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut h = ComplexMatrix::zeros(dim);
        for r in 0..dim {
            h[(r, r)] = Complex64::new(self.diagonal[r], 0.0);
            for (&m, &k) in self.flip_masks.iter().zip(&self.tunneling) {
                h[(r, r ^ m)] += Complex64::new(k, 0.0);
            }
        }
        h
    }
}
