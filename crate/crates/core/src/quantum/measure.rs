use super::state::apply_left;
use super::system::SubsystemMap;
use super::{c, CMatrix, CVector, QuantumError, QuantumState, PROPAGATED_TOL};

/// A complete set of projectors on some subsystem dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    projectors: Vec<CMatrix>,
}

impl Measurement {
    pub fn from_projectors(projectors: Vec<CMatrix>) -> Result<Self, QuantumError> {
        let Some(first) = projectors.first() else {
            return Err(QuantumError::IncompleteMeasurement);
        };
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for p in &projectors {
            if p.nrows() != d || p.ncols() != d {
                return Err(QuantumError::DimensionMismatch {
                    expected: d,
                    got: p.nrows(),
                });
            }
            sum += p;
        }
        if (sum - CMatrix::identity(d, d)).camax() > PROPAGATED_TOL {
            return Err(QuantumError::IncompleteMeasurement);
        }
        Ok(Self { projectors })
    }

    /// Rank-one projectors onto an orthonormal basis.
    pub fn from_basis(vectors: &[CVector]) -> Result<Self, QuantumError> {
        Self::from_projectors(vectors.iter().map(|v| v * v.adjoint()).collect())
    }

    pub fn computational(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|k| {
                let mut p = CMatrix::zeros(dim, dim);
                p[(k, k)] = c(1.0, 0.0);
                p
            })
            .collect();
        Self { projectors }
    }

    /// Qubit measurement along `cos θ X + sin θ Y`; outcome 0 is the `+1` eigenvalue.
    pub fn equator(theta: f64) -> Self {
        let e = c(theta.cos(), theta.sin());
        let half = c(0.5, 0.0);
        let p0 = CMatrix::from_row_slice(2, 2, &[half, e.conj() * 0.5, e * 0.5, half]);
        let p1 = CMatrix::identity(2, 2) - &p0;
        Self {
            projectors: vec![p0, p1],
        }
    }

    /// Qubit measurement along `cos θ Z + sin θ X`; outcome 0 is the `+1` eigenvalue.
    pub fn meridian(theta: f64) -> Self {
        let (cs, sn) = (theta.cos(), theta.sin());
        let p0 = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + cs), 0.0),
                c(0.5 * sn, 0.0),
                c(0.5 * sn, 0.0),
                c(0.5 * (1.0 - cs), 0.0),
            ],
        );
        let p1 = CMatrix::identity(2, 2) - &p0;
        Self {
            projectors: vec![p0, p1],
        }
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    /// Same projectors, outcome labels permuted by `perm[new] = old`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        Self {
            projectors: perm.iter().map(|&i| self.projectors[i].clone()).collect(),
        }
    }
}

/// One branch of a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub label: usize,
    pub probability: f64,
    /// Renormalized post-measurement state; `None` flags a zero-probability outcome.
    pub post_state: Option<QuantumState>,
}

impl MeasurementOutcome {
    pub fn is_possible(&self) -> bool {
        self.post_state.is_some()
    }
}

/// Below this an outcome is treated as impossible.
const ZERO_PROBABILITY: f64 = 1e-14;

impl QuantumState {
    /// Born-rule branches of a projective measurement on `registers`.
    pub fn measure(
        &self,
        registers: &[&str],
        m: &Measurement,
    ) -> Result<Vec<MeasurementOutcome>, QuantumError> {
        let map = SubsystemMap::new(self.system(), registers)?;
        if m.dim() != map.sub_dim {
            return Err(QuantumError::DimensionMismatch {
                expected: map.sub_dim,
                got: m.dim(),
            });
        }
        let mut out = Vec::with_capacity(m.outcomes());
        for (label, p) in m.projectors().iter().enumerate() {
            let left = apply_left(&map, p, self.density());
            let unnorm = apply_left(&map, p, &left.adjoint()).adjoint();
            let prob = unnorm.trace().re.max(0.0);
            let post_state = if prob > ZERO_PROBABILITY {
                Some(self.with_density(unnorm.unscale(prob)))
            } else {
                None
            };
            out.push(MeasurementOutcome {
                label,
                probability: prob.min(1.0),
                post_state,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{RegisterSystem, StateSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_state(amps: [f64; 2]) -> QuantumState {
        QuantumState::from_pure(
            RegisterSystem::single("q", 2).unwrap(),
            &[c(amps[0], 0.0), c(amps[1], 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn zero_in_computational_basis() {
        let out = qubit_state([1.0, 0.0])
            .measure(&["q"], &Measurement::computational(2))
            .unwrap();
        assert_eq!(out[0].probability, 1.0);
        assert_eq!(out[1].probability, 0.0);
        assert!(!out[1].is_possible());
    }

    #[test]
    fn plus_in_computational_basis() {
        let out = qubit_state([1.0, 1.0])
            .measure(&["q"], &Measurement::computational(2))
            .unwrap();
        assert!((out[0].probability - 0.5).abs() < 1e-12);
        assert!((out[1].probability - 0.5).abs() < 1e-12);
        let post = out[1].post_state.as_ref().unwrap();
        assert!((post.density()[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_projectors_rejected() {
        let m = Measurement::computational(2);
        let only_first = vec![m.projectors()[0].clone()];
        assert_eq!(
            Measurement::from_projectors(only_first),
            Err(QuantumError::IncompleteMeasurement)
        );
    }

    #[test]
    fn bell_measurement_on_source_and_pair_half() {
        // Oracle: project ψ ⊗ singlet onto each Bell vector by hand.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = QuantumState::make(RegisterSystem::single("psi", 2).unwrap(), &StateSpec::Haar, &mut rng)
            .unwrap();
        let pair = QuantumState::make(
            RegisterSystem::new([("A", 2), ("B", 2)]).unwrap(),
            &StateSpec::Singlet {
                a: "A".into(),
                b: "B".into(),
            },
            &mut rng,
        )
        .unwrap();
        let joint = psi.tensor(&pair).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell: Vec<CVector> = [
            [h, 0.0, 0.0, h],
            [h, 0.0, 0.0, -h],
            [0.0, h, h, 0.0],
            [0.0, h, -h, 0.0],
        ]
        .iter()
        .map(|v| CVector::from_iterator(4, v.iter().map(|&x| c(x, 0.0))))
        .collect();
        let m = Measurement::from_basis(&bell).unwrap();
        let out = joint.measure(&["psi", "A"], &m).unwrap();
        assert_eq!(out.len(), 4);
        for (k, o) in out.iter().enumerate() {
            // ⟨β_k| ⊗ I acting on ψ⊗singlet, squared norm, via explicit 8x8 projector.
            let proj = (&bell[k] * bell[k].adjoint()).kronecker(&CMatrix::identity(2, 2));
            let p_direct = (&proj * joint.density()).trace().re;
            assert!((o.probability - p_direct).abs() < 1e-12);
            assert!((o.probability - 0.25).abs() < 1e-12);
        }
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equator_projectors_are_complete() {
        for theta in [0.0, 0.3, 1.7, -2.2] {
            let m = Measurement::equator(theta);
            assert!(Measurement::from_projectors(m.projectors().to_vec()).is_ok());
            let m = Measurement::meridian(theta);
            assert!(Measurement::from_projectors(m.projectors().to_vec()).is_ok());
        }
    }
}
