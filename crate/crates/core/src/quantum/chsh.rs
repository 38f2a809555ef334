use super::{CMatrix, Measurement, QuantumError, QuantumState, PROPAGATED_TOL};

/// A two-outcome qubit measurement given by its effects `(E₀, E₁)`.
///
/// A deterministic answer `b` is the effect pair with `E_b = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMeasurement {
    effects: [CMatrix; 2],
}

impl BinaryMeasurement {
    pub fn new(e0: CMatrix, e1: CMatrix) -> Result<Self, QuantumError> {
        if e0.shape() != (2, 2) || e1.shape() != (2, 2) {
            return Err(QuantumError::MalformedMeasurement(
                "CHSH measurements act on a single qubit".into(),
            ));
        }
        if (&e0 + &e1 - CMatrix::identity(2, 2)).camax() > PROPAGATED_TOL {
            return Err(QuantumError::MalformedMeasurement(
                "effects do not sum to the identity".into(),
            ));
        }
        Ok(Self { effects: [e0, e1] })
    }

    pub fn constant(bit: u8) -> Self {
        let (id, zero) = (CMatrix::identity(2, 2), CMatrix::zeros(2, 2));
        let effects = if bit & 1 == 0 { [id, zero] } else { [zero, id] };
        Self { effects }
    }

    pub fn from_measurement(m: &Measurement) -> Result<Self, QuantumError> {
        match m.projectors() {
            [p0, p1] => Self::new(p0.clone(), p1.clone()),
            other => Err(QuantumError::MalformedMeasurement(format!(
                "expected 2 outcomes, got {}",
                other.len()
            ))),
        }
    }

    /// Equator measurement at angle `theta`; outcome 0 is the `+1` eigenvalue.
    pub fn equator(theta: f64) -> Self {
        let m = Measurement::equator(theta);
        let [p0, p1] = [m.projectors()[0].clone(), m.projectors()[1].clone()];
        Self { effects: [p0, p1] }
    }

    /// Swap the outcome labels.
    pub fn flipped(&self) -> Self {
        Self {
            effects: [self.effects[1].clone(), self.effects[0].clone()],
        }
    }

    pub fn effect(&self, outcome: usize) -> &CMatrix {
        &self.effects[outcome]
    }
}

/// One measurement per input bit for each party.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshStrategy {
    pub alice: [BinaryMeasurement; 2],
    pub bob: [BinaryMeasurement; 2],
}

impl ChshStrategy {
    /// Deterministic strategy `J₁ = a[I₁]`, `J₂ = b[I₂]`.
    pub fn deterministic(a: [u8; 2], b: [u8; 2]) -> Self {
        Self {
            alice: a.map(BinaryMeasurement::constant),
            bob: b.map(BinaryMeasurement::constant),
        }
    }

    /// Equator angles per input; Bob's outcome labels are optionally swapped.
    pub fn equator(alice: [f64; 2], bob: [f64; 2], flip_bob: bool) -> Self {
        let b = |t: f64| {
            let m = BinaryMeasurement::equator(t);
            if flip_bob {
                m.flipped()
            } else {
                m
            }
        };
        Self {
            alice: alice.map(BinaryMeasurement::equator),
            bob: bob.map(b),
        }
    }

    /// The standard optimal strategy on the singlet.
    pub fn singlet_optimal() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self::equator([0.0, FRAC_PI_2], [FRAC_PI_4, -FRAC_PI_4], true)
    }
}

/// Exact `Prob(J₁ ⊕ J₂ = I₁·I₂)` for uniform independent input bits.
///
/// `shared` must be a two-qubit state; its first register is Alice's.
pub fn chsh_value(strategy: &ChshStrategy, shared: &QuantumState) -> Result<f64, QuantumError> {
    if shared.system().dims() != [2, 2] {
        return Err(QuantumError::MalformedMeasurement(
            "shared state must be two qubits".into(),
        ));
    }
    let rho = shared.density();
    let mut total = 0.0;
    for i1 in 0..2 {
        for i2 in 0..2 {
            for j1 in 0..2 {
                for j2 in 0..2 {
                    if (j1 ^ j2) != (i1 & i2) {
                        continue;
                    }
                    let e = strategy.alice[i1]
                        .effect(j1)
                        .kronecker(strategy.bob[i2].effect(j2));
                    total += (e * rho).trace().re;
                }
            }
        }
    }
    Ok(total / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{c, CVector, RegisterSystem, StateSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_qubits(spec: StateSpec) -> QuantumState {
        let sys = RegisterSystem::new([("A", 2), ("B", 2)]).unwrap();
        QuantumState::make(sys, &spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    fn singlet() -> QuantumState {
        two_qubits(StateSpec::Singlet {
            a: "A".into(),
            b: "B".into(),
        })
    }

    #[test]
    fn all_zero_answers_win_three_quarters() {
        let v = chsh_value(&ChshStrategy::deterministic([0, 0], [0, 0]), &singlet()).unwrap();
        assert!((v - 0.75).abs() < 1e-12, "{v}");
    }

    #[test]
    fn best_deterministic_strategy_is_three_quarters() {
        let product = two_qubits(StateSpec::Basis(vec![0, 0]));
        let mut best: f64 = 0.0;
        for bits in 0u8..16 {
            let s = ChshStrategy::deterministic(
                [bits & 1, (bits >> 1) & 1],
                [(bits >> 2) & 1, (bits >> 3) & 1],
            );
            let v = chsh_value(&s, &product).unwrap();
            // Oracle: count winning input pairs directly.
            let a = [bits & 1, (bits >> 1) & 1];
            let b = [(bits >> 2) & 1, (bits >> 3) & 1];
            let wins = (0..2)
                .flat_map(|x| (0..2).map(move |y| (x, y)))
                .filter(|&(x, y)| (a[x] ^ b[y]) == (x as u8 & y as u8))
                .count();
            assert_eq!(v, wins as f64 / 4.0);
            best = best.max(v);
        }
        assert_eq!(best, 0.75);
    }

    #[test]
    fn singlet_optimal_angles_reach_cos_squared_pi_over_eight() {
        let expected = (std::f64::consts::PI / 8.0).cos().powi(2);
        let v = chsh_value(&ChshStrategy::singlet_optimal(), &singlet()).unwrap();
        assert!((v - expected).abs() < 1e-9, "{v}");
    }

    #[test]
    fn explicit_kronecker_oracle() {
        // Oracle: build ±1 observables from Pauli matrices and the singlet
        // vector by hand, and use p_win = 1/2 + ⟨CHSH⟩/8.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = CVector::zeros(4);
        psi[1] = c(h, 0.0);
        psi[2] = c(-h, 0.0);
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let obs = |t: f64| x.scale(t.cos()) + y.scale(t.sin());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        use rand::Rng;
        for _ in 0..20 {
            let a: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let b: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let mut corr = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let e = (psi.adjoint() * obs(a[i]).kronecker(&obs(b[j])) * &psi)[(0, 0)].re;
                    corr += if i & j == 1 { -e } else { e };
                }
            }
            let oracle = 0.5 + corr / 8.0;
            let v = chsh_value(&ChshStrategy::equator(a, b, false), &singlet()).unwrap();
            assert!((v - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_inputs() {
        let half = CMatrix::identity(2, 2).scale(0.4);
        assert!(BinaryMeasurement::new(half.clone(), half).is_err());
        assert!(BinaryMeasurement::from_measurement(&Measurement::computational(3)).is_err());
        let three = QuantumState::make(
            RegisterSystem::new([("A", 2), ("B", 3)]).unwrap(),
            &StateSpec::MaximallyMixed,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert!(chsh_value(&ChshStrategy::deterministic([0, 0], [0, 0]), &three).is_err());
    }
}
