use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{c, gates, CVector, Measurement, MeasurementOutcome, QuantumError, QuantumState};

/// The two classical dits produced by a generalized Bell measurement.
///
/// Written `(shift, phase)`: the receiver undoes a shift `X^shift` and a
/// phase `Z^-phase`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TeleportMessage {
    pub shift: usize,
    pub phase: usize,
}

impl TeleportMessage {
    pub fn new(shift: usize, phase: usize) -> Self {
        Self { shift, phase }
    }

    fn index(&self, d: usize) -> usize {
        self.shift * d + self.phase
    }

    fn from_index(idx: usize, d: usize) -> Self {
        Self {
            shift: idx / d,
            phase: idx % d,
        }
    }
}

/// `|β_{k,j}⟩ = d^{-1/2} Σ_m ω^{jm} |m⟩|m + k⟩`, listed with message `(k, j)`.
pub fn bell_basis(d: usize) -> Vec<(TeleportMessage, CVector)> {
    let amp = 1.0 / (d as f64).sqrt();
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for j in 0..d {
            let mut v = CVector::zeros(d * d);
            for m in 0..d {
                let phase = 2.0 * PI * ((j * m) % d) as f64 / d as f64;
                v[m * d + (m + k) % d] = c(amp * phase.cos(), amp * phase.sin());
            }
            out.push((TeleportMessage::new(k, j), v));
        }
    }
    out
}

fn check_pair(state: &QuantumState, source: &str, local: &str) -> Result<usize, QuantumError> {
    let d = state.system().dim_of(source)?;
    let dl = state.system().dim_of(local)?;
    if d != dl {
        return Err(QuantumError::DimensionMismatch {
            expected: d,
            got: dl,
        });
    }
    Ok(d)
}

/// All `d²` branches of the Bell measurement on `(source, local)`.
pub fn teleport_branches(
    state: &QuantumState,
    source: &str,
    local: &str,
) -> Result<Vec<(TeleportMessage, MeasurementOutcome)>, QuantumError> {
    let d = check_pair(state, source, local)?;
    let basis: Vec<CVector> = bell_basis(d).into_iter().map(|(_, v)| v).collect();
    let m = Measurement::from_basis(&basis)?;
    let outcomes = state.measure(&[source, local], &m)?;
    Ok(outcomes
        .into_iter()
        .map(|o| (TeleportMessage::from_index(o.label, d), o))
        .collect())
}

/// Sample one Bell-measurement branch.
pub fn teleport_send<R: Rng + ?Sized>(
    state: &QuantumState,
    source: &str,
    local: &str,
    rng: &mut R,
) -> Result<(TeleportMessage, QuantumState), QuantumError> {
    let branches = teleport_branches(state, source, local)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (msg, o) in branches {
        if let Some(post) = o.post_state {
            acc += o.probability;
            if u < acc {
                return Ok((msg, post));
            }
            last = Some((msg, post));
        }
    }
    last.ok_or(QuantumError::IncompleteMeasurement)
}

/// Apply the correction `Z^phase X^-shift` to `target`.
///
/// Assumes the shared pair was `Σ_m |m m⟩ / √d`.
pub fn teleport_receive(
    state: &QuantumState,
    target: &str,
    message: TeleportMessage,
) -> Result<QuantumState, QuantumError> {
    let d = state.system().dim_of(target)?;
    if message.shift >= d || message.phase >= d {
        return Err(QuantumError::MessageOutOfRange {
            shift: message.shift,
            phase: message.phase,
            dim: d,
        });
    }
    let _ = message.index(d);
    let correction = gates::clock(d, message.phase) * gates::shift(d, (d - message.shift) % d);
    state.apply_unitary(&[target], &correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{fidelity, CMatrix, RegisterSystem, StateSpec, PROPAGATED_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(d: usize, rng: &mut ChaCha8Rng) -> (QuantumState, QuantumState) {
        let psi = QuantumState::make(RegisterSystem::single("psi", d).unwrap(), &StateSpec::Haar, rng)
            .unwrap();
        let pair = QuantumState::make(
            RegisterSystem::new([("e1", d), ("e2", d)]).unwrap(),
            &StateSpec::MaxEntangled {
                a: "e1".into(),
                b: "e2".into(),
            },
            rng,
        )
        .unwrap();
        let joint = psi.tensor(&pair).unwrap();
        (psi, joint)
    }

    #[test]
    fn round_trip_is_exact_for_random_qudits() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for d in [2usize, 3] {
            for _ in 0..100 {
                let (psi, joint) = setup(d, &mut rng);
                let (msg, post) = teleport_send(&joint, "psi", "e1", &mut rng).unwrap();
                let done = teleport_receive(&post, "e2", msg).unwrap();
                let out = done.partial_trace(&["e2"]).unwrap().rename("e2", "psi").unwrap();
                assert!(fidelity(&out, &psi).unwrap() >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn every_branch_succeeds_and_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2usize, 3] {
            let (psi, joint) = setup(d, &mut rng);
            let branches = teleport_branches(&joint, "psi", "e1").unwrap();
            assert_eq!(branches.len(), d * d);
            for (msg, o) in branches {
                assert!((o.probability - 1.0 / (d * d) as f64).abs() < 1e-12);
                let post = o.post_state.unwrap();
                let done = teleport_receive(&post, "e2", msg).unwrap();
                let out = done.partial_trace(&["e2"]).unwrap().rename("e2", "psi").unwrap();
                assert!((fidelity(&out, &psi).unwrap() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn distant_half_is_maximally_mixed_without_the_message() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in [2usize, 3] {
            let (_, joint) = setup(d, &mut rng);
            let mut avg = CMatrix::zeros(d, d);
            for (_, o) in teleport_branches(&joint, "psi", "e1").unwrap() {
                let red = o.post_state.unwrap().partial_trace(&["e2"]).unwrap();
                avg += red.density().scale(o.probability);
            }
            let mixed = CMatrix::identity(d, d).unscale(d as f64);
            assert!((avg - mixed).camax() < PROPAGATED_TOL);
        }
    }

    #[test]
    fn message_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = QuantumState::make(RegisterSystem::single("q", 2).unwrap(), &StateSpec::Haar, &mut rng)
            .unwrap();
        let out = teleport_receive(&s, "q", TeleportMessage::new(0, 0)).unwrap();
        assert!((out.density() - s.density()).norm() < 1e-15);
    }

    #[test]
    fn wrong_message_flips_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zero = QuantumState::make(
            RegisterSystem::single("q", 2).unwrap(),
            &StateSpec::Basis(vec![0]),
            &mut rng,
        )
        .unwrap();
        let out = teleport_receive(&zero, "q", TeleportMessage::new(1, 0)).unwrap();
        assert!(fidelity(&out, &zero).unwrap() < 1e-12);
    }

    #[test]
    fn out_of_range_message() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = QuantumState::make(RegisterSystem::single("q", 2).unwrap(), &StateSpec::Haar, &mut rng)
            .unwrap();
        assert!(matches!(
            teleport_receive(&s, "q", TeleportMessage::new(2, 0)),
            Err(QuantumError::MessageOutOfRange { .. })
        ));
    }

    #[test]
    fn mismatched_pair_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = QuantumState::make(
            RegisterSystem::new([("a", 2), ("b", 3)]).unwrap(),
            &StateSpec::Haar,
            &mut rng,
        )
        .unwrap();
        assert!(teleport_branches(&s, "a", "b").is_err());
    }
}
