//! Fixed-step RK4 integration of `dρ/dt = −i[H(t), ρ]` (ħ = 1) with optional
//! per-step noise injection.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{ControlParameters, SpinHamiltonian, SpinLayout};
use crate::linalg::{commutator, frobenius_distance, hermitize_and_normalize_in_place, ComplexMatrix};
use crate::rng::{rng_from_seed, SimRng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub n_steps: usize,
    pub store_trajectory: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            n_steps: 1000,
            store_trajectory: false,
        }
    }
}

impl EvolutionConfig {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        let cfg = Self {
            t_final,
            n_steps,
            store_trajectory: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    PureNoise,
    Decoherence,
    ComplexNoise,
}

impl NoiseKind {
    pub const NOISY: [NoiseKind; 3] = [Self::PureNoise, Self::Decoherence, Self::ComplexNoise];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::PureNoise => "pure_noise",
            Self::Decoherence => "decoherence",
            Self::ComplexNoise => "complex_noise",
        }
    }

    /// Stable integer tag used for seed derivation.
    pub fn tag(&self) -> u64 {
        match self {
            Self::None => 0,
            Self::PureNoise => 1,
            Self::Decoherence => 2,
            Self::ComplexNoise => 3,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "pure_noise" | "pure" => Ok(Self::PureNoise),
            "decoherence" => Ok(Self::Decoherence),
            "complex_noise" | "complex" => Ok(Self::ComplexNoise),
            other => Err(Error::Config(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Noise injected after every RK4 step; `rnp` is the Rho Noise Power scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default)]
    pub rnp: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            rnp: 0.0,
            seed: 0,
        }
    }

    pub fn new(kind: NoiseKind, rnp: f64, seed: u64) -> Result<Self> {
        let cfg = Self { kind, rnp, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rnp >= 0.0 && self.rnp.is_finite()) {
            return Err(Error::Config(format!("rnp must be nonnegative, got {}", self.rnp)));
        }
        Ok(())
    }

    /// Whether injection changes anything at all.
    pub fn is_active(&self) -> bool {
        self.kind != NoiseKind::None && self.rnp > 0.0
    }

    pub fn rng(&self) -> SimRng {
        rng_from_seed(self.seed)
    }
}

/// `−i[H, ρ]` for a dense Hamiltonian.
pub fn rho_derivative(h: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(commutator(h, rho)?.scale(Complex64::new(0.0, -1.0)))
}

/// Writes `−i[H, ρ]` into `out` using the bit-flip structure of `H`.
///
/// `(Hρ)[r,c]` picks up `k_q ρ[r⊕m_q, c]` from each tunneling term and
/// `(ρH)[r,c]` picks up `k_q ρ[r, c⊕m_q]`; the diagonal part contributes
/// `(d_r − d_c) ρ[r,c]`.
pub fn spin_derivative(h: &SpinHamiltonian, rho: &[Complex64], out: &mut [Complex64]) {
    let n = h.dim();
    assert_eq!(rho.len(), n * n);
    assert_eq!(out.len(), n * n);
    let mut kernel = RowKernel::new(n);
    let out = as_reals_mut(out);
    kernel.rows(h, rho, |r, d| out[2 * n * r..2 * n * (r + 1)].copy_from_slice(d));
}

fn as_reals(z: &[Complex64]) -> &[f64] {
    // SAFETY: Complex64 is repr(C) with two f64 fields and no padding.
    unsafe { std::slice::from_raw_parts(z.as_ptr().cast::<f64>(), 2 * z.len()) }
}

fn as_reals_mut(z: &mut [Complex64]) -> &mut [f64] {
    // SAFETY: as in `as_reals`; the borrow is exclusive.
    unsafe { std::slice::from_raw_parts_mut(z.as_mut_ptr().cast::<f64>(), 2 * z.len()) }
}

/// Row-at-a-time evaluation of `−i[H, ρ]`.
///
/// Rows are handled as interleaved f64: real scalars act on real and
/// imaginary parts alike, and flipping bit `m` of a column index is flipping
/// bit `2m` of the f64 index, so every term is a contiguous slice operation.
struct RowKernel {
    /// `d_c` repeated for the real and imaginary slot of column `c`.
    diag2: Vec<f64>,
    row: Vec<f64>,
}

impl RowKernel {
    fn new(dim: usize) -> Self {
        Self {
            diag2: vec![0.0; 2 * dim],
            row: vec![0.0; 2 * dim],
        }
    }

    /// Calls `f(r, row r of −i[H, ρ])` for every row in order.
    fn rows(&mut self, h: &SpinHamiltonian, rho: &[Complex64], mut f: impl FnMut(usize, &[f64])) {
        let n = h.dim();
        let w = 2 * n;
        let src = as_reals(rho);
        for (pair, &d) in self.diag2.chunks_exact_mut(2).zip(&h.diagonal) {
            pair[0] = d;
            pair[1] = d;
        }
        let mut term_buf = [(0usize, 0.0f64); crate::MAX_QUBITS];
        let mut n_terms = 0;
        for (&m, &k) in h.flip_masks.iter().zip(&h.tunneling) {
            if k != 0.0 {
                term_buf[n_terms] = (m, k);
                n_terms += 1;
            }
        }
        let terms = &term_buf[..n_terms];
        let buf = &mut self.row[..];
        let diag2 = &self.diag2[..];
        for r in 0..n {
            let own = &src[r * w..(r + 1) * w];
            let dr = h.diagonal[r];
            let mut rows: [&[f64]; crate::MAX_QUBITS] = [&[]; crate::MAX_QUBITS];
            for (row, &(m, _)) in rows.iter_mut().zip(terms) {
                *row = &src[(r ^ m) * w..((r ^ m) + 1) * w];
            }
            let rows = &rows[..terms.len()];
            // four f64 (two complex entries) at a time; w is a multiple of 4
            for j in (0..w).step_by(4) {
                let o: [f64; 4] = own[j..j + 4].try_into().unwrap();
                let dc: [f64; 4] = diag2[j..j + 4].try_into().unwrap();
                let mut acc = [0.0; 4];
                for l in 0..4 {
                    acc[l] = o[l] * (dr - dc[l]);
                }
                for (row, &(m, k)) in rows.iter().zip(terms) {
                    let fr: [f64; 4] = row[j..j + 4].try_into().unwrap();
                    let fo: [f64; 4] = if m == 1 {
                        [o[2], o[3], o[0], o[1]]
                    } else {
                        let at = j ^ (2 * m);
                        own[at..at + 4].try_into().unwrap()
                    };
                    for l in 0..4 {
                        acc[l] += k * (fr[l] - fo[l]);
                    }
                }
                // multiply by −i: (re, im) → (im, −re)
                buf[j..j + 4].copy_from_slice(&[acc[1], -acc[0], acc[3], -acc[2]]);
            }
            f(r, buf);
        }
    }
}

/// Final-stage weights of the integrator.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StageWeights {
    #[default]
    Classic,
    /// Wrong weights `(1/3, 1/3, 1/3, 0)`: consistent but only first order.
    /// Exists as a negative control for the convergence check.
    Corrupted,
}

impl StageWeights {
    fn weights(self) -> [f64; 4] {
        match self {
            Self::Classic => [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            Self::Corrupted => [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0],
        }
    }
}

/// Reusable RK4 buffers for one matrix dimension.
///
/// Each stage derivative is folded into the accumulator and the next stage
/// point row by row as it is produced, so no stage derivative is stored.
struct Rk4Workspace {
    kernel: RowKernel,
    acc: Vec<Complex64>,
    stage_a: Vec<Complex64>,
    stage_b: Vec<Complex64>,
    weights: [f64; 4],
}

impl Rk4Workspace {
    fn new(dim: usize, weights: StageWeights) -> Self {
        let len = dim * dim;
        Self {
            kernel: RowKernel::new(dim),
            acc: vec![Complex64::new(0.0, 0.0); len],
            stage_a: vec![Complex64::new(0.0, 0.0); len],
            stage_b: vec![Complex64::new(0.0, 0.0); len],
            weights: weights.weights(),
        }
    }

    /// Advances `rho` by one step given the Hamiltonian at the start, midpoint
    /// and end of the step.
    fn step(&mut self, [h0, h_mid, h1]: [&SpinHamiltonian; 3], rho: &mut [Complex64], dt: f64) {
        let w = self.weights.map(|x| x * dt);
        let n = h0.dim();
        let width = 2 * n;
        let Self {
            kernel,
            acc,
            stage_a,
            stage_b,
            ..
        } = self;

        {
            let (x0, acc, next) = (as_reals(rho), as_reals_mut(acc), as_reals_mut(stage_a));
            let off = 0.5 * dt;
            kernel.rows(h0, rho, |r, d| {
                let span = r * width..(r + 1) * width;
                for (((a, s), &x), &k) in acc[span.clone()].iter_mut().zip(&mut next[span.clone()]).zip(&x0[span]).zip(d) {
                    *a = x + w[0] * k;
                    *s = x + off * k;
                }
            });
        }
        for (s, off) in [(1, 0.5 * dt), (2, dt)] {
            let (src, dst) = if s == 1 { (&*stage_a, &mut *stage_b) } else { (&*stage_b, &mut *stage_a) };
            let (x0, acc, next) = (as_reals(rho), as_reals_mut(acc), as_reals_mut(dst));
            kernel.rows(h_mid, src, |r, d| {
                let span = r * width..(r + 1) * width;
                for (((a, st), &x), &k) in acc[span.clone()].iter_mut().zip(&mut next[span.clone()]).zip(&x0[span]).zip(d) {
                    *a += w[s] * k;
                    *st = x + off * k;
                }
            });
        }
        let (acc, out) = (as_reals(acc), as_reals_mut(rho));
        kernel.rows(h1, stage_a, |r, d| {
            let span = r * width..(r + 1) * width;
            for ((o, &a), &k) in out[span.clone()].iter_mut().zip(&acc[span]).zip(d) {
                *o = a + w[3] * k;
            }
        });
    }
}

fn check_state(p: &ControlParameters, rho: &ComplexMatrix) -> Result<()> {
    if rho.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// One classic RK4 step from `t` to `t + dt`.
pub fn rk4_step(p: &ControlParameters, rho: &ComplexMatrix, t: f64, dt: f64) -> Result<ComplexMatrix> {
    check_state(p, rho)?;
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let layout = SpinLayout::new(p.n_qubits());
    let h0 = layout.hamiltonian(&p.values_at(t));
    let hm = layout.hamiltonian(&p.values_at(t + 0.5 * dt));
    let h1 = layout.hamiltonian(&p.values_at(t + dt));
    let mut ws = Rk4Workspace::new(p.dim(), StageWeights::Classic);
    let mut out = rho.clone();
    ws.step([&h0, &hm, &h1], out.as_mut_slice(), dt);
    Ok(out)
}

/// Random Hermitian perturbation scaled by `cfg.rnp`.
///
/// Entries are standard normal before scaling.
/// - `PureNoise`: real random populations (the diagonal); random magnitudes.
/// - `Decoherence`: `i·g` on every off-diagonal entry of a random matrix, zero
///   diagonal, then hermitized; random phases of the coherences.
/// - `ComplexNoise`: one pure draw plus one decoherence draw.
/// - `None`: the zero matrix.
pub fn sample_noise_matrix<R: Rng + ?Sized>(dim: usize, cfg: &NoiseConfig, rng: &mut R) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dim);
    fill_noise(cfg, rng, &mut Vec::new(), &mut out);
    out
}

/// Writes a fresh noise matrix into `out`; `raw` is scratch space.
fn fill_noise<R: Rng + ?Sized>(cfg: &NoiseConfig, rng: &mut R, raw: &mut Vec<f64>, out: &mut ComplexMatrix) {
    let dim = out.dim();
    out.as_mut_slice().fill(Complex64::new(0.0, 0.0));
    if cfg.rnp == 0.0 {
        return;
    }
    let pure = matches!(cfg.kind, NoiseKind::PureNoise | NoiseKind::ComplexNoise);
    let dephase = matches!(cfg.kind, NoiseKind::Decoherence | NoiseKind::ComplexNoise);
    if pure {
        for i in 0..dim {
            let g: f64 = rng.sample(StandardNormal);
            out[(i, i)] += Complex64::new(cfg.rnp * g, 0.0);
        }
    }
    if dephase {
        raw.clear();
        raw.resize(dim * dim, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    raw[i * dim + j] = cfg.rnp * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        // (i·g_ij + conj(i·g_ji)) / 2
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += Complex64::new(0.0, (raw[i * dim + j] - raw[j * dim + i]) * 0.5);
            }
        }
    }
}

/// `hermitize_and_normalize(ρ + N)`; a passthrough when the noise is inactive.
pub fn inject_noise<R: Rng + ?Sized>(rho: &ComplexMatrix, cfg: &NoiseConfig, rng: &mut R) -> Result<ComplexMatrix> {
    let mut out = rho.clone();
    NoiseWorkspace::new(rho.dim()).inject(&mut out, cfg, rng)?;
    Ok(out)
}

/// Buffers reused across the noise injections of one evolution.
struct NoiseWorkspace {
    noise: ComplexMatrix,
    raw: Vec<f64>,
}

impl NoiseWorkspace {
    fn new(dim: usize) -> Self {
        Self {
            noise: ComplexMatrix::zeros(dim),
            raw: Vec::new(),
        }
    }

    /// Perturbs `rho` in place and returns `‖N‖_F`.
    fn inject<R: Rng + ?Sized>(&mut self, rho: &mut ComplexMatrix, cfg: &NoiseConfig, rng: &mut R) -> Result<f64> {
        if !cfg.is_active() {
            return Ok(0.0);
        }
        fill_noise(cfg, rng, &mut self.raw, &mut self.noise);
        for (x, &n) in rho.as_mut_slice().iter_mut().zip(self.noise.as_slice()) {
            *x += n;
        }
        hermitize_and_normalize_in_place(rho)?;
        Ok(self.noise.frobenius_norm())
    }
}

/// Diagnostics recorded at one point of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub t: f64,
    pub trace_re: f64,
    pub purity: f64,
    pub hermiticity_error: f64,
    pub frobenius_distance_to_target: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub final_state: ComplexMatrix,
    /// Empty unless `store_trajectory` was set.
    pub trajectory: Vec<TrajectoryPoint>,
    /// Mean Frobenius norm of the injected noise matrices; zero when noiseless.
    pub mean_noise_norm: f64,
}

/// Evolves `rho0` from `t = 0` to `t_final`, injecting noise after each step.
pub fn evolve<R: Rng + ?Sized>(
    p: &ControlParameters,
    rho0: &ComplexMatrix,
    evo: &EvolutionConfig,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<Evolution> {
    evolve_traced(p, rho0, None, evo, noise, rng)
}

/// [`evolve`] with the trajectory distance measured against `target`.
pub fn evolve_traced<R: Rng + ?Sized>(
    p: &ControlParameters,
    rho0: &ComplexMatrix,
    target: Option<&ComplexMatrix>,
    evo: &EvolutionConfig,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<Evolution> {
    evolve_with_weights(p, rho0, target, evo, noise, rng, StageWeights::Classic)
}

#[doc(hidden)]
pub fn evolve_with_weights<R: Rng + ?Sized>(
    p: &ControlParameters,
    rho0: &ComplexMatrix,
    target: Option<&ComplexMatrix>,
    evo: &EvolutionConfig,
    noise: &NoiseConfig,
    rng: &mut R,
    weights: StageWeights,
) -> Result<Evolution> {
    check_state(p, rho0)?;
    evo.validate()?;
    noise.validate()?;
    if let Some(t) = target {
        check_state(p, t)?;
    }
    let layout = SpinLayout::new(p.n_qubits());
    let dt = evo.dt();
    let mut ws = Rk4Workspace::new(p.dim(), weights);
    let mut rho = rho0.clone();
    let mut trajectory = Vec::new();
    let record = |step: usize, rho: &ComplexMatrix| -> Result<TrajectoryPoint> {
        Ok(TrajectoryPoint {
            step,
            t: step as f64 * dt,
            trace_re: rho.trace().re,
            purity: rho.purity(),
            hermiticity_error: rho.hermiticity_error(),
            frobenius_distance_to_target: target.map(|t| frobenius_distance(rho, t)).transpose()?,
        })
    };
    if evo.store_trajectory {
        trajectory.push(record(0, &rho)?);
    }

    let mut noise_norm_sum = 0.0;
    let mut noise_ws = NoiseWorkspace::new(p.dim());
    let mut h_start = layout.hamiltonian(&p.values_at(0.0));
    for step in 0..evo.n_steps {
        let t = step as f64 * dt;
        let h_mid = layout.hamiltonian(&p.values_at(t + 0.5 * dt));
        let h_end = layout.hamiltonian(&p.values_at(t + dt));
        ws.step([&h_start, &h_mid, &h_end], rho.as_mut_slice(), dt);
        if noise.is_active() {
            noise_norm_sum += noise_ws.inject(&mut rho, noise, rng)?;
        }
        if evo.store_trajectory {
            trajectory.push(record(step + 1, &rho)?);
        }
        h_start = h_end;
    }
    Ok(Evolution {
        final_state: rho,
        trajectory,
        mean_noise_norm: noise_norm_sum / evo.n_steps as f64,
    })
}

/// Noiseless evolution of several states sharing one Hamiltonian schedule.
pub fn evolve_batch(p: &ControlParameters, states: &[ComplexMatrix], evo: &EvolutionConfig) -> Result<Vec<ComplexMatrix>> {
    evo.validate()?;
    for s in states {
        check_state(p, s)?;
    }
    let layout = SpinLayout::new(p.n_qubits());
    let dt = evo.dt();
    let mut ws = Rk4Workspace::new(p.dim(), StageWeights::Classic);
    let mut out: Vec<ComplexMatrix> = states.to_vec();
    let mut h_start = layout.hamiltonian(&p.values_at(0.0));
    for step in 0..evo.n_steps {
        let t = step as f64 * dt;
        let h_mid = layout.hamiltonian(&p.values_at(t + 0.5 * dt));
        let h_end = layout.hamiltonian(&p.values_at(t + dt));
        for rho in &mut out {
            ws.step([&h_start, &h_mid, &h_end], rho.as_mut_slice(), dt);
        }
        h_start = h_end;
    }
    Ok(out)
}

/// The noiseless RK4 evolution as a linear map on density matrices.
///
/// RK4 applied to a linear ODE is itself linear in the initial state, so the
/// images of the `dim²` matrix units determine the final state of any input.
/// This is cheaper than direct evolution whenever there are more inputs than
/// matrix units, which is the case for two-qubit training sets.
#[derive(Clone, Debug)]
pub struct PropagatorMap {
    dim: usize,
    /// `images[a·dim + b]` is the evolved matrix unit `|a⟩⟨b|`.
    images: Vec<ComplexMatrix>,
}

impl PropagatorMap {
    pub fn compute(p: &ControlParameters, evo: &EvolutionConfig) -> Result<Self> {
        let dim = p.dim();
        let units: Vec<ComplexMatrix> = (0..dim * dim)
            .map(|u| {
                let mut m = ComplexMatrix::zeros(dim);
                m.as_mut_slice()[u] = Complex64::new(1.0, 0.0);
                m
            })
            .collect();
        Ok(Self {
            dim,
            images: evolve_batch(p, &units, evo)?,
        })
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for (&coef, image) in rho.as_slice().iter().zip(&self.images) {
            if coef == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(image.as_slice()) {
                *o += coef * x;
            }
        }
        ComplexMatrix::from_row_major(out)
    }
}

/// Final states of independent noiseless evolutions, computed in parallel.
pub fn evolve_noiseless_many(
    p: &ControlParameters,
    states: &[&ComplexMatrix],
    evo: &EvolutionConfig,
) -> Result<Vec<ComplexMatrix>> {
    let dim = p.dim();
    if states.len() > dim * dim {
        let map = PropagatorMap::compute(p, evo)?;
        return states.iter().map(|s| map.apply(s)).collect();
    }
    states
        .par_iter()
        .map(|s| {
            let mut rng = rng_from_seed(0);
            evolve(p, s, evo, &NoiseConfig::none(), &mut rng).map(|e| e.final_state)
        })
        .collect()
}

/// Writes trajectory diagnostics as CSV
/// (`step,t,trace_re,purity,frobenius_distance_to_target`).
pub fn write_trajectory_csv<W: Write>(writer: W, points: &[TrajectoryPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "t", "trace_re", "purity", "frobenius_distance_to_target"])?;
    for p in points {
        w.write_record([
            p.step.to_string(),
            p.t.to_string(),
            p.trace_re.to_string(),
            p.purity.to_string(),
            p.frobenius_distance_to_target.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
