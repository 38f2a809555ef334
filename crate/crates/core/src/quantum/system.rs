use serde::{Deserialize, Serialize};

use super::{QuantumError, DEFAULT_DIM_CAP};

/// Ordered, labelled registers with per-register dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterSystem {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl RegisterSystem {
    pub fn new<S: Into<String>>(
        registers: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Self, QuantumError> {
        Self::with_cap(registers, DEFAULT_DIM_CAP)
    }

    pub fn with_cap<S: Into<String>>(
        registers: impl IntoIterator<Item = (S, usize)>,
        cap: usize,
    ) -> Result<Self, QuantumError> {
        let mut labels = Vec::new();
        let mut dims = Vec::new();
        let mut total: usize = 1;
        for (label, d) in registers {
            let label = label.into();
            if d < 2 {
                return Err(QuantumError::InvalidDimension(d));
            }
            if labels.contains(&label) {
                return Err(QuantumError::DuplicateRegister(label));
            }
            total = total.saturating_mul(d);
            labels.push(label);
            dims.push(d);
        }
        if total > cap {
            return Err(QuantumError::DimensionCap { total, cap });
        }
        Ok(Self { labels, dims })
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self, QuantumError> {
        Self::new([(label.into(), dim)])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize, QuantumError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| QuantumError::UnknownRegister(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize, QuantumError> {
        Ok(self.dims[self.index_of(label)?])
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &RegisterSystem) -> Result<Self, QuantumError> {
        Self::new(
            self.labels
                .iter()
                .cloned()
                .zip(self.dims.iter().copied())
                .chain(other.labels.iter().cloned().zip(other.dims.iter().copied())),
        )
    }

    /// The sub-system made of `labels`, in the given order.
    pub fn subsystem(&self, labels: &[&str]) -> Result<Self, QuantumError> {
        let mut regs = Vec::with_capacity(labels.len());
        for l in labels {
            regs.push((l.to_string(), self.dim_of(l)?));
        }
        Self::new(regs)
    }
}

/// Index bookkeeping for an ordered selection of registers.
///
/// `full[rest * sub_dim + sub]` is the full basis index whose selected
/// digits encode `sub` and whose remaining digits encode `rest`.
pub(crate) struct SubsystemMap {
    pub sub_dim: usize,
    pub rest_dim: usize,
    pub full: Vec<usize>,
}

impl SubsystemMap {
    pub fn new(system: &RegisterSystem, selected: &[&str]) -> Result<Self, QuantumError> {
        let mut sel = Vec::with_capacity(selected.len());
        for l in selected {
            let i = system.index_of(l)?;
            if sel.contains(&i) {
                return Err(QuantumError::DuplicateRegister(l.to_string()));
            }
            sel.push(i);
        }
        let dims = system.dims();
        let n = dims.len();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let rest: Vec<usize> = (0..n).filter(|k| !sel.contains(k)).collect();
        let sub_dim: usize = sel.iter().map(|&k| dims[k]).product();
        let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();
        let mut full = vec![0usize; sub_dim * rest_dim];
        for r in 0..rest_dim {
            let mut rem = r;
            let mut base = 0usize;
            for &k in rest.iter().rev() {
                base += (rem % dims[k]) * strides[k];
                rem /= dims[k];
            }
            for s in 0..sub_dim {
                let mut rem = s;
                let mut idx = base;
                for &k in sel.iter().rev() {
                    idx += (rem % dims[k]) * strides[k];
                    rem /= dims[k];
                }
                full[r * sub_dim + s] = idx;
            }
        }
        Ok(Self {
            sub_dim,
            rest_dim,
            full,
        })
    }

    pub fn index(&self, sub: usize, rest: usize) -> usize {
        self.full[rest * self.sub_dim + sub]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_registers() {
        assert_eq!(
            RegisterSystem::new([("a", 1)]),
            Err(QuantumError::InvalidDimension(1))
        );
        assert_eq!(
            RegisterSystem::new([("a", 2), ("a", 2)]),
            Err(QuantumError::DuplicateRegister("a".into()))
        );
        let regs: Vec<(String, usize)> = (0..15).map(|i| (format!("q{i}"), 2)).collect();
        assert!(matches!(
            RegisterSystem::new(regs),
            Err(QuantumError::DimensionCap { total: 32768, .. })
        ));
    }

    #[test]
    fn subsystem_map_is_a_bijection() {
        let sys = RegisterSystem::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let map = SubsystemMap::new(&sys, &["c", "a"]).unwrap();
        assert_eq!(map.sub_dim, 4);
        assert_eq!(map.rest_dim, 3);
        let mut seen = map.full.clone();
        seen.sort();
        assert_eq!(seen, (0..12).collect::<Vec<_>>());
        // sub = c*2 + a ; full = a*6 + b*2 + c
        assert_eq!(map.index(0b10, 1), 2 + 1);
        assert_eq!(map.index(0b01, 2), 6 + 4);
    }
}
