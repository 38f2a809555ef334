use serde::{Deserialize, Serialize};

use super::{GeometryError, SpacetimePoint};

/// Closed real interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Axis-aligned spacetime box. Only its open interior is excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeBox {
    pub t: Span,
    pub x: Vec<Span>,
}

impl SpacetimeBox {
    pub fn new(t: Span, x: Vec<Span>) -> Result<Self, GeometryError> {
        for (axis, s) in std::iter::once(&t).chain(x.iter()).enumerate() {
            if !s.lo.is_finite() || !s.hi.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            if s.hi <= s.lo {
                return Err(GeometryError::DegenerateBox { axis });
            }
        }
        if x.len() != 1 && x.len() != 3 {
            return Err(GeometryError::UnsupportedDimension(x.len()));
        }
        Ok(Self { t, x })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub(crate) fn span(&self, axis: usize) -> Span {
        if axis == 0 {
            self.t
        } else {
            self.x[axis - 1]
        }
    }

    /// Strictly inside on every axis.
    pub fn contains_interior(&self, p: &SpacetimePoint) -> bool {
        (0..=self.dim()).all(|axis| {
            let s = self.span(axis);
            let c = p.coord(axis);
            s.lo < c && c < s.hi
        })
    }

    /// Does the closed segment `a -> b` meet the open interior?
    pub fn segment_meets_interior(&self, a: &SpacetimePoint, b: &SpacetimePoint) -> bool {
        // Slab clipping with strict inequalities: the set of parameters inside
        // each open slab is an open interval (lo_s, hi_s).
        let mut enter = f64::NEG_INFINITY;
        let mut leave = f64::INFINITY;
        for axis in 0..=self.dim() {
            let s = self.span(axis);
            let p0 = a.coord(axis);
            let dp = b.coord(axis) - p0;
            if dp == 0.0 {
                if !(s.lo < p0 && p0 < s.hi) {
                    return false;
                }
                continue;
            }
            let (mut s0, mut s1) = ((s.lo - p0) / dp, (s.hi - p0) / dp);
            if s0 > s1 {
                std::mem::swap(&mut s0, &mut s1);
            }
            enter = enter.max(s0);
            leave = leave.min(s1);
        }
        enter < leave && enter < 1.0 && leave > 0.0
    }

    /// All `2^(d+1)` corners.
    pub fn corners(&self) -> Vec<SpacetimePoint> {
        let n = self.dim() + 1;
        (0..1usize << n)
            .map(|mask| {
                let coords: Vec<f64> = (0..n)
                    .map(|axis| {
                        let s = self.span(axis);
                        if mask >> axis & 1 == 0 {
                            s.lo
                        } else {
                            s.hi
                        }
                    })
                    .collect();
                SpacetimePoint::from_coords(&coords)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    Limited(u64),
    Unlimited,
}

impl Budget {
    pub fn allows(&self, used: u64) -> bool {
        match self {
            Budget::Limited(n) => used <= *n,
            Budget::Unlimited => true,
        }
    }
}

/// A named union of boxes from which Alice's agents are excluded.
///
/// A penetrable region lets signals through, metered against its budgets.
/// An impenetrable region blocks every signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub boxes: Vec<SpacetimeBox>,
    pub penetrable: bool,
    pub classical_bits: Budget,
    pub qubits: Budget,
}

impl Region {
    pub fn new(
        name: impl Into<String>,
        boxes: Vec<SpacetimeBox>,
        penetrable: bool,
        classical_bits: Budget,
        qubits: Budget,
    ) -> Result<Self, GeometryError> {
        let name = name.into();
        if boxes.is_empty() {
            return Err(GeometryError::EmptyRegion(name));
        }
        let d = boxes[0].dim();
        if let Some(b) = boxes.iter().find(|b| b.dim() != d) {
            return Err(GeometryError::DimensionMismatch {
                left: d,
                right: b.dim(),
            });
        }
        if !penetrable
            && (classical_bits != Budget::Limited(0) || qubits != Budget::Limited(0))
        {
            return Err(GeometryError::ImpenetrableWithBudget(name));
        }
        Ok(Self {
            name,
            boxes,
            penetrable,
            classical_bits,
            qubits,
        })
    }

    pub fn impenetrable(
        name: impl Into<String>,
        boxes: Vec<SpacetimeBox>,
    ) -> Result<Self, GeometryError> {
        Self::new(name, boxes, false, Budget::Limited(0), Budget::Limited(0))
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    pub fn contains_interior(&self, p: &SpacetimePoint) -> bool {
        self.boxes.iter().any(|b| b.contains_interior(p))
    }

    pub fn segment_meets_interior(&self, a: &SpacetimePoint, b: &SpacetimePoint) -> bool {
        self.boxes.iter().any(|bx| bx.segment_meets_interior(a, b))
    }

    /// Does a waypoint polyline cross this region anywhere?
    pub fn path_crosses(&self, path: &[SpacetimePoint]) -> bool {
        path.windows(2)
            .any(|w| self.segment_meets_interior(&w[0], &w[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> SpacetimeBox {
        SpacetimeBox::new(Span::new(0.5, 1.5), vec![Span::new(-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn box_validation() {
        assert_eq!(
            SpacetimeBox::new(Span::new(1.0, 1.0), vec![Span::new(0.0, 1.0)]),
            Err(GeometryError::DegenerateBox { axis: 0 })
        );
        assert_eq!(
            SpacetimeBox::new(Span::new(0.0, 1.0), vec![Span::new(2.0, 1.0)]),
            Err(GeometryError::DegenerateBox { axis: 1 })
        );
    }

    #[test]
    fn impenetrable_needs_zero_budget() {
        let r = Region::new("w", vec![unit_box()], false, Budget::Limited(3), Budget::Limited(0));
        assert_eq!(r, Err(GeometryError::ImpenetrableWithBudget("w".into())));
        assert!(Region::impenetrable("w", vec![unit_box()]).is_ok());
        assert!(Region::impenetrable("w", vec![]).is_err());
    }

    #[test]
    fn interior_is_open() {
        let b = unit_box();
        assert!(b.contains_interior(&SpacetimePoint::new_1d(1.0, 0.0)));
        assert!(!b.contains_interior(&SpacetimePoint::new_1d(0.5, 0.0)));
        assert!(!b.contains_interior(&SpacetimePoint::new_1d(1.0, 1.0)));
    }

    #[test]
    fn segment_tests() {
        let b = unit_box();
        let o = SpacetimePoint::new_1d(0.0, 0.0);
        assert!(b.segment_meets_interior(&o, &SpacetimePoint::new_1d(2.0, 0.0)));
        // Running along the edge x = 1 only touches the boundary.
        assert!(!b.segment_meets_interior(
            &SpacetimePoint::new_1d(0.0, 1.0),
            &SpacetimePoint::new_1d(2.0, 1.0)
        ));
        // Through a corner only.
        assert!(!b.segment_meets_interior(
            &SpacetimePoint::new_1d(0.0, 0.5),
            &SpacetimePoint::new_1d(1.0, 1.5)
        ));
        // Cutting across the corner does enter.
        assert!(b.segment_meets_interior(
            &SpacetimePoint::new_1d(0.0, 1.5),
            &SpacetimePoint::new_1d(1.0, 0.5)
        ));
        // Stops before the box.
        assert!(!b.segment_meets_interior(&o, &SpacetimePoint::new_1d(0.5, 0.0)));
        assert_eq!(b.corners().len(), 4);
    }
}
