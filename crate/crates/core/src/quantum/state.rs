use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use super::system::SubsystemMap;
use super::{
    c, is_unitary, CMatrix, CVector, QuantumError, RegisterSystem, C64, CONSTRUCTION_TOL,
};

/// Description accepted by [`QuantumState::make`].
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    /// Computational basis state, one digit per register.
    Basis(Vec<usize>),
    /// Pure state from an amplitude vector (normalized on construction).
    Pure(Vec<C64>),
    /// Qubit singlet `(|01⟩ - |10⟩)/√2` on two registers, others in `|0⟩`.
    Singlet { a: String, b: String },
    /// `Σ_m |m m⟩ / √d` on two equal-dimension registers, others in `|0⟩`.
    MaxEntangled { a: String, b: String },
    /// Haar-random pure state on the whole system.
    Haar,
    /// `I / D`.
    MaximallyMixed,
}

/// A density matrix over a [`RegisterSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    system: RegisterSystem,
    rho: CMatrix,
}

impl QuantumState {
    /// Build from an explicit density matrix, checking Hermiticity, unit
    /// trace and positivity.
    pub fn from_density(system: RegisterSystem, rho: CMatrix) -> Result<Self, QuantumError> {
        let state = Self::from_density_unchecked(system, rho)?;
        state.check_invariants(CONSTRUCTION_TOL)?;
        Ok(state)
    }

    fn from_density_unchecked(system: RegisterSystem, rho: CMatrix) -> Result<Self, QuantumError> {
        let n = system.total_dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(QuantumError::DimensionMismatch {
                expected: n,
                got: rho.nrows(),
            });
        }
        Ok(Self { system, rho })
    }

    pub fn from_pure(system: RegisterSystem, amplitudes: &[C64]) -> Result<Self, QuantumError> {
        let n = system.total_dim();
        if amplitudes.len() != n {
            return Err(QuantumError::DimensionMismatch {
                expected: n,
                got: amplitudes.len(),
            });
        }
        let v = CVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(QuantumError::NotNormalizable);
        }
        let v = v.unscale(norm);
        let rho = &v * v.adjoint();
        Ok(Self { system, rho })
    }

    pub fn make<R: Rng + ?Sized>(
        system: RegisterSystem,
        spec: &StateSpec,
        rng: &mut R,
    ) -> Result<Self, QuantumError> {
        let n = system.total_dim();
        match spec {
            StateSpec::Basis(digits) => {
                if digits.len() != system.len() {
                    return Err(QuantumError::DimensionMismatch {
                        expected: system.len(),
                        got: digits.len(),
                    });
                }
                let mut idx = 0usize;
                for (&dgt, &d) in digits.iter().zip(system.dims()) {
                    if dgt >= d {
                        return Err(QuantumError::DimensionMismatch {
                            expected: d,
                            got: dgt,
                        });
                    }
                    idx = idx * d + dgt;
                }
                let mut amps = vec![c(0.0, 0.0); n];
                amps[idx] = c(1.0, 0.0);
                Self::from_pure(system, &amps)
            }
            StateSpec::Pure(amps) => Self::from_pure(system, amps),
            StateSpec::Singlet { a, b } => {
                if system.dim_of(a)? != 2 || system.dim_of(b)? != 2 {
                    return Err(QuantumError::DimensionMismatch {
                        expected: 2,
                        got: system.dim_of(a)?.max(system.dim_of(b)?),
                    });
                }
                let h = std::f64::consts::FRAC_1_SQRT_2;
                Self::pair_state(system, a, b, &[(0, 1, h), (1, 0, -h)])
            }
            StateSpec::MaxEntangled { a, b } => {
                let d = system.dim_of(a)?;
                let db = system.dim_of(b)?;
                if d != db {
                    return Err(QuantumError::DimensionMismatch {
                        expected: d,
                        got: db,
                    });
                }
                let amp = 1.0 / (d as f64).sqrt();
                let terms: Vec<(usize, usize, f64)> = (0..d).map(|m| (m, m, amp)).collect();
                Self::pair_state(system, a, b, &terms)
            }
            StateSpec::Haar => {
                let amps: Vec<C64> = (0..n)
                    .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect();
                Self::from_pure(system, &amps)
            }
            StateSpec::MaximallyMixed => {
                let rho = CMatrix::identity(n, n).unscale(n as f64);
                Ok(Self { system, rho })
            }
        }
    }

    fn pair_state(
        system: RegisterSystem,
        a: &str,
        b: &str,
        terms: &[(usize, usize, f64)],
    ) -> Result<Self, QuantumError> {
        let map = SubsystemMap::new(&system, &[a, b])?;
        let db = system.dim_of(b)?;
        let mut amps = vec![c(0.0, 0.0); system.total_dim()];
        for &(i, j, amp) in terms {
            amps[map.index(i * db + j, 0)] = c(amp, 0.0);
        }
        Self::from_pure(system, &amps)
    }

    pub fn system(&self) -> &RegisterSystem {
        &self.system
    }

    pub fn density(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// Hermitian within `tol`, unit trace within `tol`, min eigenvalue `≥ -tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<(), QuantumError> {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                if (self.rho[(i, j)] - self.rho[(j, i)].conj()).norm() > tol {
                    return Err(QuantumError::InvalidDensity("not Hermitian".into()));
                }
            }
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(QuantumError::InvalidDensity(format!("trace {tr}")));
        }
        let min = hermitian_part(&self.rho)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(QuantumError::InvalidDensity(format!(
                "negative eigenvalue {min}"
            )));
        }
        Ok(())
    }

    /// `self ⊗ other`, registers of `self` first.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self, QuantumError> {
        let system = self.system.concat(&other.system)?;
        Ok(Self {
            system,
            rho: self.rho.kronecker(&other.rho),
        })
    }

    /// Conjugate the selected registers by `u`; others are untouched.
    pub fn apply_unitary(&self, registers: &[&str], u: &CMatrix) -> Result<Self, QuantumError> {
        let map = SubsystemMap::new(&self.system, registers)?;
        if u.nrows() != map.sub_dim || u.ncols() != map.sub_dim {
            return Err(QuantumError::DimensionMismatch {
                expected: map.sub_dim,
                got: u.nrows(),
            });
        }
        if !is_unitary(u, CONSTRUCTION_TOL) {
            return Err(QuantumError::NotUnitary);
        }
        Ok(Self {
            system: self.system.clone(),
            rho: conjugate(&map, u, &self.rho),
        })
    }

    /// Reduced state on `keep`, in the given order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self, QuantumError> {
        if keep.is_empty() {
            return Err(QuantumError::UnknownRegister(String::new()));
        }
        let map = SubsystemMap::new(&self.system, keep)?;
        let mut out = CMatrix::zeros(map.sub_dim, map.sub_dim);
        for r in 0..map.rest_dim {
            for a in 0..map.sub_dim {
                let fa = map.index(a, r);
                for b in 0..map.sub_dim {
                    out[(a, b)] += self.rho[(fa, map.index(b, r))];
                }
            }
        }
        Ok(Self {
            system: self.system.subsystem(keep)?,
            rho: out,
        })
    }

    /// Same registers, reordered.
    pub fn reorder(&self, order: &[&str]) -> Result<Self, QuantumError> {
        if order.len() != self.system.len() {
            return Err(QuantumError::DimensionMismatch {
                expected: self.system.len(),
                got: order.len(),
            });
        }
        self.partial_trace(order)
    }

    /// Relabel a register without touching the matrix.
    pub fn rename(&self, from: &str, to: &str) -> Result<Self, QuantumError> {
        let idx = self.system.index_of(from)?;
        if from != to && self.system.contains(to) {
            return Err(QuantumError::DuplicateRegister(to.to_string()));
        }
        let regs: Vec<(String, usize)> = self
            .system
            .labels()
            .iter()
            .zip(self.system.dims())
            .enumerate()
            .map(|(i, (l, &d))| (if i == idx { to.to_string() } else { l.clone() }, d))
            .collect();
        Ok(Self {
            system: RegisterSystem::new(regs)?,
            rho: self.rho.clone(),
        })
    }

    pub(crate) fn with_density(&self, rho: CMatrix) -> Self {
        Self {
            system: self.system.clone(),
            rho,
        }
    }
}

/// `U ρ U†` with `U` acting on the selected factor.
pub(crate) fn conjugate(map: &SubsystemMap, u: &CMatrix, rho: &CMatrix) -> CMatrix {
    let x = apply_left(map, u, rho);
    apply_left(map, u, &x.adjoint()).adjoint()
}

/// `(K ⊗ I) M` for an operator `K` on the selected factor.
pub(crate) fn apply_left(map: &SubsystemMap, k: &CMatrix, m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, m.ncols());
    let mut column = vec![c(0.0, 0.0); map.sub_dim];
    for col in 0..m.ncols() {
        for r in 0..map.rest_dim {
            for (b, slot) in column.iter_mut().enumerate() {
                *slot = m[(map.index(b, r), col)];
            }
            for a in 0..map.sub_dim {
                let mut acc = c(0.0, 0.0);
                for (b, v) in column.iter().enumerate() {
                    let kab = k[(a, b)];
                    if kab.re != 0.0 || kab.im != 0.0 {
                        acc += kab * v;
                    }
                }
                out[(map.index(a, r), col)] = acc;
            }
        }
    }
    out
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Positive square root of a Hermitian PSD matrix (negative eigenvalues clamped).
fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let vals = eig.eigenvalues.map(|v| c(v.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&vals) * v.adjoint()
}

/// Uhlmann fidelity `(tr √(√a b √a))²`. Equals `⟨ψ|a|ψ⟩` when `b = |ψ⟩⟨ψ|`.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64, QuantumError> {
    if a.system.dims() != b.system.dims() {
        return Err(QuantumError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let overlap = (&a.rho * &b.rho).trace().re;
    let f = if (a.purity() - 1.0).abs() < 1e-12 || (b.purity() - 1.0).abs() < 1e-12 {
        overlap
    } else {
        let s = psd_sqrt(&a.rho);
        let inner = &s * &b.rho * &s;
        let eig = SymmetricEigen::new(hermitian_part(&inner));
        let tr: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).sum();
        tr * tr
    };
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gates;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn qubit(label: &str) -> RegisterSystem {
        RegisterSystem::single(label, 2).unwrap()
    }

    fn pair() -> RegisterSystem {
        RegisterSystem::new([("a", 2), ("b", 2)]).unwrap()
    }

    fn plus() -> QuantumState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QuantumState::from_pure(qubit("q"), &[c(h, 0.0), c(h, 0.0)]).unwrap()
    }

    #[test]
    fn basis_zero() {
        let s = QuantumState::make(qubit("q"), &StateSpec::Basis(vec![0]), &mut rng()).unwrap();
        assert_eq!(s.density()[(0, 0)], c(1.0, 0.0));
        assert_eq!(s.density()[(1, 1)], c(0.0, 0.0));
        assert_eq!(s.density()[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn singlet_block() {
        let spec = StateSpec::Singlet {
            a: "a".into(),
            b: "b".into(),
        };
        let s = QuantumState::make(pair(), &spec, &mut rng()).unwrap();
        let m = s.density();
        for (i, j, v) in [(1, 1, 0.5), (2, 2, 0.5), (1, 2, -0.5), (2, 1, -0.5)] {
            assert!((m[(i, j)] - c(v, 0.0)).norm() < 1e-15);
        }
        assert!((m[(0, 0)]).norm() < 1e-15 && m[(3, 3)].norm() < 1e-15);
        s.check_invariants(1e-10).unwrap();
    }

    #[test]
    fn haar_is_seed_deterministic() {
        let a = QuantumState::make(qubit("q"), &StateSpec::Haar, &mut rng()).unwrap();
        let b = QuantumState::make(qubit("q"), &StateSpec::Haar, &mut rng()).unwrap();
        assert_eq!(a, b);
        assert!((a.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            QuantumState::from_pure(qubit("q"), &[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(QuantumError::NotNormalizable)
        );
        assert!(matches!(
            QuantumState::from_pure(qubit("q"), &[c(1.0, 0.0)]),
            Err(QuantumError::DimensionMismatch { .. })
        ));
        let bad = CMatrix::from_diagonal_element(2, 2, c(0.75, 0.0));
        assert!(QuantumState::from_density(qubit("q"), bad).is_err());
        let sys = RegisterSystem::new([("a", 2), ("b", 3)]).unwrap();
        let spec = StateSpec::MaxEntangled {
            a: "a".into(),
            b: "b".into(),
        };
        assert!(QuantumState::make(sys, &spec, &mut rng()).is_err());
    }

    #[test]
    fn unitary_examples() {
        let zero = QuantumState::make(qubit("q"), &StateSpec::Basis(vec![0]), &mut rng()).unwrap();
        let same = zero.apply_unitary(&["q"], &CMatrix::identity(2, 2)).unwrap();
        assert_eq!(same, zero);
        let one = zero.apply_unitary(&["q"], &gates::pauli_x()).unwrap();
        assert!((one.density()[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(
            zero.apply_unitary(&["q"], &CMatrix::identity(2, 2).scale(2.0)),
            Err(QuantumError::NotUnitary)
        );
        assert_eq!(
            zero.apply_unitary(&["r"], &gates::pauli_x()),
            Err(QuantumError::UnknownRegister("r".into()))
        );
    }

    #[test]
    fn hadamard_then_cnot_gives_bell_pair() {
        // Oracle: explicit 4x4 products, independent of the subsystem machinery.
        let h = gates::hadamard();
        let id = CMatrix::identity(2, 2);
        let mut cnot = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            cnot[(i, j)] = c(1.0, 0.0);
        }
        let full = &cnot * h.kronecker(&id);
        let mut psi = CVector::zeros(4);
        psi[0] = c(1.0, 0.0);
        let out = &full * psi;
        let expected = &out * out.adjoint();

        let s = QuantumState::make(pair(), &StateSpec::Basis(vec![0, 0]), &mut rng())
            .unwrap()
            .apply_unitary(&["a"], &h)
            .unwrap()
            .apply_unitary(&["a", "b"], &gates::cnot())
            .unwrap();
        assert!((s.density() - &expected).norm() < 1e-12);
        let phi = QuantumState::make(
            pair(),
            &StateSpec::MaxEntangled {
                a: "a".into(),
                b: "b".into(),
            },
            &mut rng(),
        )
        .unwrap();
        assert!((s.density() - phi.density()).norm() < 1e-12);
    }

    #[test]
    fn unitary_on_reversed_registers() {
        // CNOT with control b, target a, applied to |01⟩ gives |11⟩.
        let s = QuantumState::make(pair(), &StateSpec::Basis(vec![0, 1]), &mut rng())
            .unwrap()
            .apply_unitary(&["b", "a"], &gates::cnot())
            .unwrap();
        assert!((s.density()[(3, 3)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        let mut r = rng();
        let rho = QuantumState::make(qubit("a"), &StateSpec::Haar, &mut r).unwrap();
        let sigma = QuantumState::make(
            RegisterSystem::single("b", 3).unwrap(),
            &StateSpec::Haar,
            &mut r,
        )
        .unwrap();
        let joint = rho.tensor(&sigma).unwrap();
        let back = joint.partial_trace(&["a"]).unwrap();
        assert!((back.density() - rho.density()).norm() < 1e-12);
        assert!((back.trace().re - 1.0).abs() < 1e-12);
        let back_b = joint.partial_trace(&["b"]).unwrap();
        assert!((back_b.density() - sigma.density()).norm() < 1e-12);

        let singlet = QuantumState::make(
            pair(),
            &StateSpec::Singlet {
                a: "a".into(),
                b: "b".into(),
            },
            &mut r,
        )
        .unwrap();
        for side in ["a", "b"] {
            let red = singlet.partial_trace(&[side]).unwrap();
            let mixed = CMatrix::identity(2, 2).scale(0.5);
            assert!((red.density() - mixed).norm() < 1e-12);
        }
        assert!(singlet.partial_trace(&["z"]).is_err());
        assert!(singlet.partial_trace(&[]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let mut r = rng();
        let zero = QuantumState::make(qubit("q"), &StateSpec::Basis(vec![0]), &mut r).unwrap();
        let one = QuantumState::make(qubit("q"), &StateSpec::Basis(vec![1]), &mut r).unwrap();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((fidelity(&zero, &plus()).unwrap() - 0.5).abs() < 1e-12);
        let other = QuantumState::make(pair(), &StateSpec::Basis(vec![0, 0]), &mut r).unwrap();
        assert!(fidelity(&zero, &other).is_err());
    }

    #[test]
    fn mixed_fidelity_matches_closed_form() {
        // For commuting diagonal states F = (Σ √(p_i q_i))².
        let sys = qubit("q");
        let a = QuantumState::from_density(
            sys.clone(),
            CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, 0.0), c(0.3, 0.0)])),
        )
        .unwrap();
        let b = QuantumState::from_density(
            sys,
            CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.4, 0.0), c(0.6, 0.0)])),
        )
        .unwrap();
        let expected = ((0.7f64 * 0.4).sqrt() + (0.3f64 * 0.6).sqrt()).powi(2);
        assert!((fidelity(&a, &b).unwrap() - expected).abs() < 1e-10);
        assert!((fidelity(&b, &a).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn operations_preserve_invariants() {
        let mut r = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let sys = RegisterSystem::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
            let s = QuantumState::make(sys, &StateSpec::Haar, &mut r).unwrap();
            let s = s.apply_unitary(&["c", "a"], &gates::cnot()).unwrap();
            let s = s.apply_unitary(&["b"], &gates::shift(3, 1)).unwrap();
            s.check_invariants(1e-9).unwrap();
            s.partial_trace(&["b", "a"]).unwrap().check_invariants(1e-9).unwrap();
        }
    }
}
