//! Named unitaries.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{c, CMatrix, CVector, QuantumError};

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn pauli_x() -> CMatrix {
    shift(2, 1)
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    clock(2, 1)
}

pub fn hadamard() -> CMatrix {
    let h = c(FRAC_1_SQRT_2, 0.0);
    CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

pub fn phase_s() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
}

pub fn rx(theta: f64) -> CMatrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)])
}

pub fn ry(theta: f64) -> CMatrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0)])
}

pub fn rz(theta: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            c((-theta / 2.0).cos(), (-theta / 2.0).sin()),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c((theta / 2.0).cos(), (theta / 2.0).sin()),
        ],
    )
}

/// Generalized shift `X^k |m⟩ = |m + k mod d⟩`.
pub fn shift(d: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        m[((j + k) % d, j)] = c(1.0, 0.0);
    }
    m
}

/// Generalized clock `Z^k |m⟩ = ω^{km} |m⟩`, `ω = e^{2πi/d}`.
pub fn clock(d: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        let phase = 2.0 * PI * ((k * j) % d) as f64 / d as f64;
        // Snap the qubit case to exact ±1.
        m[(j, j)] = if (k * j).is_multiple_of(d) {
            c(1.0, 0.0)
        } else if 2 * ((k * j) % d) == d {
            c(-1.0, 0.0)
        } else {
            c(phase.cos(), phase.sin())
        };
    }
    m
}

/// Controlled-X on `(control, target)` qubits.
pub fn cnot() -> CMatrix {
    controlled(&pauli_x())
}

pub fn cz() -> CMatrix {
    controlled(&pauli_z())
}

pub fn swap(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, i * d + j)] = c(1.0, 0.0);
        }
    }
    m
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ u`.
pub fn controlled(u: &CMatrix) -> CMatrix {
    let d = u.nrows();
    let mut m = CMatrix::identity(2 * d, 2 * d);
    m.view_mut((d, d), (d, d)).copy_from(u);
    m
}

/// Three-qubit symmetric cloning unitary on `(input, blank, machine)` with
/// `blank` and `machine` starting in `|0⟩`.
///
/// Its action on `|0 0 0⟩` and `|1 0 0⟩` is
/// `|0⟩ → √(2/3)|00⟩|0⟩ + √(1/6)(|01⟩+|10⟩)|1⟩` and
/// `|1⟩ → √(2/3)|11⟩|1⟩ + √(1/6)(|01⟩+|10⟩)|0⟩`;
/// the remaining columns are a Gram–Schmidt completion.
pub fn symmetric_cloner() -> CMatrix {
    let a = (2.0f64 / 3.0).sqrt();
    let b = (1.0f64 / 6.0).sqrt();
    // basis index = input*4 + blank*2 + machine
    let mut col0 = CVector::zeros(8);
    col0[0] = c(a, 0.0);
    col0[0b011] = c(b, 0.0);
    col0[0b101] = c(b, 0.0);
    let mut col1 = CVector::zeros(8);
    col1[0b111] = c(a, 0.0);
    col1[0b010] = c(b, 0.0);
    col1[0b100] = c(b, 0.0);
    let mut cols: Vec<CVector> = vec![col0, col1];
    for k in 0..8 {
        if cols.len() == 8 {
            break;
        }
        let mut v = CVector::zeros(8);
        v[k] = c(1.0, 0.0);
        for u in &cols {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v.unscale(n));
        }
    }
    // The fixed columns sit at input positions |000⟩ and |100⟩.
    let mut m = CMatrix::zeros(8, 8);
    let order = [0usize, 4, 1, 2, 3, 5, 6, 7];
    for (slot, col) in order.iter().zip(cols.iter()) {
        m.set_column(*slot, col);
    }
    m
}

/// Resolve a gate by name. `args` are numeric parameters; `dim` is the
/// per-register dimension of the first target.
pub fn by_name(name: &str, args: &[f64], dim: usize) -> Result<CMatrix, QuantumError> {
    let need = |n: usize| -> Result<(), QuantumError> {
        if args.len() != n {
            Err(QuantumError::MalformedMeasurement(format!(
                "gate `{name}` takes {n} argument(s), got {}",
                args.len()
            )))
        } else {
            Ok(())
        }
    };
    let int_arg = |v: f64| -> usize { (v.round() as i64).rem_euclid(dim as i64) as usize };
    Ok(match name {
        "I" | "id" => {
            need(0)?;
            identity(dim)
        }
        "X" => {
            need(0)?;
            pauli_x()
        }
        "Y" => {
            need(0)?;
            pauli_y()
        }
        "Z" => {
            need(0)?;
            pauli_z()
        }
        "H" => {
            need(0)?;
            hadamard()
        }
        "S" => {
            need(0)?;
            phase_s()
        }
        "rx" => {
            need(1)?;
            rx(args[0])
        }
        "ry" => {
            need(1)?;
            ry(args[0])
        }
        "rz" => {
            need(1)?;
            rz(args[0])
        }
        "shift" => {
            need(1)?;
            shift(dim, int_arg(args[0]))
        }
        "clock" => {
            need(1)?;
            clock(dim, int_arg(args[0]))
        }
        "CNOT" => {
            need(0)?;
            cnot()
        }
        "CZ" => {
            need(0)?;
            cz()
        }
        "SWAP" => {
            need(0)?;
            swap(dim)
        }
        "cloner" => {
            need(0)?;
            symmetric_cloner()
        }
        other => {
            return Err(QuantumError::MalformedMeasurement(format!(
                "unknown gate `{other}`"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::is_unitary;

    #[test]
    fn all_gates_unitary() {
        for g in [
            pauli_x(),
            pauli_y(),
            pauli_z(),
            hadamard(),
            phase_s(),
            rx(0.3),
            ry(1.1),
            rz(-0.7),
            shift(3, 2),
            clock(3, 1),
            cnot(),
            cz(),
            swap(3),
            symmetric_cloner(),
        ] {
            assert!(is_unitary(&g, 1e-12));
        }
    }

    #[test]
    fn clock_shift_commutation() {
        // Z X = ω X Z
        let d = 3;
        let omega = c((2.0 * PI / 3.0).cos(), (2.0 * PI / 3.0).sin());
        let lhs = clock(d, 1) * shift(d, 1);
        let rhs = (shift(d, 1) * clock(d, 1)) * omega;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn cloner_columns() {
        let u = symmetric_cloner();
        let a = (2.0f64 / 3.0).sqrt();
        assert!((u[(0, 0)].re - a).abs() < 1e-12);
        assert!((u[(7, 4)].re - a).abs() < 1e-12);
    }

    #[test]
    fn unknown_gate() {
        assert!(by_name("nope", &[], 2).is_err());
        assert!(by_name("rx", &[], 2).is_err());
        assert_eq!(by_name("shift", &[4.0], 3).unwrap(), shift(3, 1));
    }
}
