//! Self-checks of the integrator and of the finite-difference Jacobian.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::evolution::{evolve_with_weights, EvolutionConfig, NoiseConfig, StageWeights};
use crate::hamiltonian::{build_hamiltonian, ControlParameters, QubitPair};
use crate::linalg::{frobenius_distance, matrix_exponential};
use crate::rng::{derive_seed, derived_rng, rng_from_seed};
use crate::states::{make_training_set, random_pure_state, PairingScheme, SampleMode};
use crate::training::{entry_jacobian_fd, jacobian_fd, Jacobian, TrainingConfig};
use crate::Result;

pub const ORDER_TARGET: f64 = 4.0;
pub const ORDER_TOLERANCE: f64 = 0.3;
pub const JACOBIAN_TOLERANCE: f64 = 1e-4;

/// Step counts of the convergence study over `t ∈ [0, 1]`.
const STUDY_STEPS: [usize; 4] = [8, 16, 32, 64];
/// Step of the coarser central difference in the Richardson reference.
const RICHARDSON_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct OrderStudy {
    pub n_qubits: usize,
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log dt`.
    pub order: f64,
}

/// Convergence of RK4 against `U ρ U†` with `U = exp(−iHt)` for a random
/// constant Hamiltonian.
#[doc(hidden)]
pub fn rk4_order(n_qubits: usize, seed: u64, weights: StageWeights) -> Result<OrderStudy> {
    let mut rng = derived_rng(seed, &[n_qubits as u64]);
    let p = ControlParameters::random(n_qubits, 0, 2.0 * PI, &QubitPair::all(n_qubits), 1.0, &mut rng)?;
    let rho = random_pure_state(n_qubits, &mut rng)?.outer();
    let u = matrix_exponential(&build_hamiltonian(&p, 0.0).scale(Complex64::new(0.0, -1.0)));
    let exact = &(&u * &rho) * &u.adjoint();
    let mut errors = Vec::new();
    for &steps in &STUDY_STEPS {
        let evo = EvolutionConfig::new(1.0, steps)?;
        let out = evolve_with_weights(&p, &rho, None, &evo, &NoiseConfig::none(), &mut rng_from_seed(0), weights)?;
        errors.push(frobenius_distance(&out.final_state, &exact)?);
    }
    let xs: Vec<f64> = STUDY_STEPS.iter().map(|&s| (1.0 / s as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(OrderStudy {
        n_qubits,
        steps: STUDY_STEPS.to_vec(),
        errors,
        order: sxy / sxx,
    })
}

/// Largest column-wise relative difference between `a` and `reference`.
fn max_column_error(a: &Jacobian, reference: &Jacobian) -> f64 {
    (0..a.cols)
        .map(|c| {
            let (x, r) = (a.column(c), reference.column(c));
            let scale = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = x.iter().zip(&r).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            if scale > 1e-12 {
                diff / scale
            } else {
                diff
            }
        })
        .fold(0.0, f64::max)
}

fn richardson(coarse: &Jacobian, fine: &Jacobian) -> Jacobian {
    let mut out = fine.clone();
    for (o, c) in out.data.iter_mut().zip(&coarse.data) {
        *o = (4.0 * *o - c) / 3.0;
    }
    out
}

/// Max relative error of the default-step Jacobians (entry and distance
/// residuals) against Richardson-extrapolated central differences, over
/// `points` random two-qubit parameter sets.
pub fn jacobian_check(seed: u64, points: usize) -> Result<f64> {
    let fd_step = TrainingConfig::default().fd_step;
    let evo = EvolutionConfig::new(1.0, 200)?;
    let scheme = PairingScheme::adjacent(2)?;
    let mut worst = 0.0f64;
    for point in 0..points {
        let mut rng = derived_rng(derive_seed(seed, &[0x6a]), &[point as u64]);
        let p = ControlParameters::random(2, 3, 2.0 * PI, &QubitPair::all(2), 0.5, &mut rng)?;
        let samples = make_training_set(2, &scheme, 2, SampleMode::Joint, &mut rng)?;
        let mask = vec![true; p.coefficient_count()];
        let entry = |h| entry_jacobian_fd(&p, &samples, &evo, &mask, h);
        let reference = richardson(&entry(RICHARDSON_STEP)?, &entry(RICHARDSON_STEP / 2.0)?);
        worst = worst.max(max_column_error(&entry(fd_step)?, &reference));
        let dist = |h| jacobian_fd(&p, &samples, &evo, &mask, h);
        let reference = richardson(&dist(RICHARDSON_STEP)?, &dist(RICHARDSON_STEP / 2.0)?);
        worst = worst.max(max_column_error(&dist(fd_step)?, &reference));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub orders: Vec<OrderStudy>,
    pub jacobian_max_rel_error: f64,
}

impl OracleReport {
    pub fn orders_pass(&self) -> bool {
        self.orders.iter().all(|s| (s.order - ORDER_TARGET).abs() <= ORDER_TOLERANCE)
    }

    pub fn jacobian_pass(&self) -> bool {
        self.jacobian_max_rel_error <= JACOBIAN_TOLERANCE
    }

    pub fn passed(&self) -> bool {
        self.orders_pass() && self.jacobian_pass()
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .orders
            .iter()
            .map(|s| {
                let ok = (s.order - ORDER_TARGET).abs() <= ORDER_TOLERANCE;
                format!(
                    "{} rk4 order {}q: {:.3} (target {ORDER_TARGET} ± {ORDER_TOLERANCE})",
                    if ok { "PASS" } else { "FAIL" },
                    s.n_qubits,
                    s.order
                )
            })
            .collect();
        out.push(format!(
            "{} jacobian max relative error: {:.3e} (limit {JACOBIAN_TOLERANCE:e})",
            if self.jacobian_pass() { "PASS" } else { "FAIL" },
            self.jacobian_max_rel_error
        ));
        out
    }
}

/// Runs the convergence study at one and two qubits and the Jacobian check.
/// `corrupted` swaps in wrong final-stage weights as a negative control.
pub fn cmd_oracle_check(seed: u64, corrupted: bool) -> Result<OracleReport> {
    let weights = if corrupted { StageWeights::Corrupted } else { StageWeights::Classic };
    let orders = [1, 2].iter().map(|&n| rk4_order(n, seed, weights)).collect::<Result<_>>()?;
    Ok(OracleReport {
        orders,
        jacobian_max_rel_error: jacobian_check(seed, 3)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_weights_are_fourth_order() {
        for n in [1, 2] {
            let s = rk4_order(n, 3, StageWeights::Classic).unwrap();
            assert!((s.order - 4.0).abs() <= 0.3, "{s:?}");
            assert!(s.errors.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn corrupted_weights_are_caught() {
        let s = rk4_order(1, 3, StageWeights::Corrupted).unwrap();
        assert!((s.order - 1.0).abs() < 0.3, "{s:?}");
    }

    #[test]
    fn report_lines() {
        let report = OracleReport {
            orders: vec![OrderStudy {
                n_qubits: 1,
                steps: vec![],
                errors: vec![],
                order: 2.0,
            }],
            jacobian_max_rel_error: 1e-9,
        };
        assert!(!report.passed());
        let lines = report.lines();
        assert!(lines[0].starts_with("FAIL"));
        assert!(lines[1].starts_with("PASS"));
    }
}
