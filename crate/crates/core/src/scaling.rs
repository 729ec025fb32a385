//! Copying trained two-qubit controls onto larger registers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{ControlParameters, FourierSeries, QubitPair};
use crate::{Error, Result, MAX_QUBITS};

/// Couplings between qubits that belong to different pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossPairCoupling {
    #[default]
    Zero,
    /// The intra-pair series on each bond `(2k+1, 2k+2)` linking neighbouring pairs.
    CopiedFromIntra,
}

impl fmt::Display for CrossPairCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "zero",
            Self::CopiedFromIntra => "copied_from_intra",
        })
    }
}

impl FromStr for CrossPairCoupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "copied_from_intra" => Ok(Self::CopiedFromIntra),
            other => Err(Error::Config(format!("unknown cross-pair coupling {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationSpec {
    pub source: ControlParameters,
    pub n_pairs: usize,
    pub cross_pair_coupling: CrossPairCoupling,
}

impl ReplicationSpec {
    pub fn new(source: ControlParameters, n_pairs: usize) -> Self {
        Self {
            source,
            n_pairs,
            cross_pair_coupling: CrossPairCoupling::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.source.n_qubits() != 2 {
            return Err(Error::UnsupportedQubitCount(self.source.n_qubits()));
        }
        if self.n_pairs == 0 || 2 * self.n_pairs > MAX_QUBITS {
            return Err(Error::UnsupportedQubitCount(2 * self.n_pairs));
        }
        Ok(())
    }
}

/// Even qubits get source qubit 0's series, odd qubits source qubit 1's, and
/// every pair `(2k, 2k+1)` the source coupling.
pub fn replicate(spec: &ReplicationSpec) -> Result<ControlParameters> {
    spec.validate()?;
    let src = &spec.source;
    let n = 2 * spec.n_pairs;
    let mut out = ControlParameters::zeros(n, src.harmonics(), src.base_frequency())?;
    let intra: FourierSeries = src
        .coupling(QubitPair::new(0, 1)?)
        .expect("two-qubit sets carry pair 0-1")
        .clone();
    for q in 0..n {
        out.set_tunneling(q, src.tunneling(q % 2).clone())?;
        out.set_bias(q, src.bias(q % 2).clone())?;
    }
    for k in 0..spec.n_pairs {
        out.set_coupling(QubitPair::new(2 * k, 2 * k + 1)?, intra.clone())?;
    }
    if spec.cross_pair_coupling == CrossPairCoupling::CopiedFromIntra {
        for k in 0..spec.n_pairs - 1 {
            out.set_coupling(QubitPair::new(2 * k + 1, 2 * k + 2)?, intra.clone())?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, evolve_noiseless_many, EvolutionConfig, NoiseConfig};
    use crate::linalg::{frobenius_distance, kron, ComplexMatrix};
    use crate::rng::rng_from_seed;
    use crate::states::{random_pure_state, swap_target, PairingScheme};
    use std::f64::consts::PI;

    fn source(seed: u64) -> ControlParameters {
        let mut rng = rng_from_seed(seed);
        ControlParameters::random(2, 3, 2.0 * PI, &QubitPair::all(2), 0.5, &mut rng).unwrap()
    }

    #[test]
    fn one_pair_is_identity() {
        let src = source(1);
        assert_eq!(replicate(&ReplicationSpec::new(src.clone(), 1)).unwrap(), src);
        let copied = ReplicationSpec {
            cross_pair_coupling: CrossPairCoupling::CopiedFromIntra,
            ..ReplicationSpec::new(src.clone(), 1)
        };
        assert_eq!(replicate(&copied).unwrap(), src);
    }

    #[test]
    fn eight_qubit_layout() {
        let src = source(2);
        let out = replicate(&ReplicationSpec::new(src.clone(), 4)).unwrap();
        assert_eq!(out.n_qubits(), 8);
        let intra = src.coupling(QubitPair::new(0, 1).unwrap()).unwrap();
        for q in 0..8 {
            assert_eq!(out.tunneling(q), src.tunneling(q % 2));
            assert_eq!(out.bias(q), src.bias(q % 2));
        }
        let mut nonzero = 0;
        for (pair, s) in out.couplings() {
            if pair.first() / 2 == pair.second() / 2 {
                assert_eq!(s, intra);
                nonzero += 1;
            } else {
                assert!(s.to_flat().iter().all(|&c| c == 0.0));
            }
        }
        assert_eq!(nonzero, 4);

        let copied = replicate(&ReplicationSpec {
            cross_pair_coupling: CrossPairCoupling::CopiedFromIntra,
            ..ReplicationSpec::new(src.clone(), 4)
        })
        .unwrap();
        assert_eq!(copied.active_pairs().len(), 7);
        assert_eq!(copied.coupling(QubitPair::new(3, 4).unwrap()), Some(intra));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut rng = rng_from_seed(0);
        let three = ControlParameters::random(3, 1, 1.0, &[], 0.5, &mut rng).unwrap();
        assert!(replicate(&ReplicationSpec::new(three, 2)).is_err());
        assert!(replicate(&ReplicationSpec::new(source(0), 0)).is_err());
        assert!(replicate(&ReplicationSpec::new(source(0), 5)).is_err());
        assert_eq!("copied_from_intra".parse::<CrossPairCoupling>().unwrap(), CrossPairCoupling::CopiedFromIntra);
        assert!("both".parse::<CrossPairCoupling>().is_err());
    }

    #[test]
    fn four_qubit_evolution_factorizes() {
        let src = source(3);
        let big = replicate(&ReplicationSpec::new(src.clone(), 2)).unwrap();
        let evo = EvolutionConfig::new(1.0, 400).unwrap();
        let mut rng = rng_from_seed(4);
        let a = random_pure_state(2, &mut rng).unwrap().outer();
        let b = random_pure_state(2, &mut rng).unwrap().outer();
        let joint = kron(&a, &b).unwrap();
        let pair = evolve_noiseless_many(&src, &[&a, &b], &evo).unwrap();
        let mut none = rng_from_seed(0);
        let whole = evolve(&big, &joint, &evo, &NoiseConfig::none(), &mut none).unwrap();
        let product = kron(&pair[0], &pair[1]).unwrap();
        let d = frobenius_distance(&whole.final_state, &product).unwrap();
        assert!(d <= 1e-9, "distance {d:e}");
    }

    #[test]
    fn relabeling_pairs_preserves_error() {
        // Pairs of a replicated set are identical, so swapping the two pair
        // blocks of the input only relabels the output.
        let big = replicate(&ReplicationSpec::new(source(5), 2)).unwrap();
        let evo = EvolutionConfig::new(1.0, 200).unwrap();
        let scheme = PairingScheme::adjacent(4).unwrap();
        let mut rng = rng_from_seed(6);
        let psi = random_pure_state(4, &mut rng).unwrap().outer();
        // qubits (0,1,2,3) -> (2,3,0,1)
        let perm: Vec<usize> = (0..16).map(|i| ((i & 0b11) << 2) | (i >> 2)).collect();
        let relabeled: ComplexMatrix = psi.permute_basis(&perm).unwrap();
        let err = |rho: &ComplexMatrix| {
            let out = evolve_noiseless_many(&big, &[rho], &evo).unwrap().remove(0);
            frobenius_distance(&out, &swap_target(rho, &scheme, 4).unwrap()).unwrap()
        };
        assert!((err(&psi) - err(&relabeled)).abs() <= 1e-12);
    }
}
