use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GeometryError, INTERVAL_GUARD};

/// An event in `1 + d` dimensional Minkowski space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    t: f64,
    x: Vec<f64>,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: Vec<f64>) -> Result<Self, GeometryError> {
        if !t.is_finite() || x.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if x.len() != 1 && x.len() != 3 {
            return Err(GeometryError::UnsupportedDimension(x.len()));
        }
        Ok(Self { t, x })
    }

    /// Convenience constructor for `1 + 1` points.
    pub fn new_1d(t: f64, x: f64) -> Self {
        Self::new(t, vec![x]).expect("finite 1+1 point")
    }

    /// Convenience constructor for `3 + 1` points.
    pub fn new_3d(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self::new(t, vec![x, y, z]).expect("finite 3+1 point")
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Number of spatial axes.
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Coordinate by axis index: 0 is time, `1..=d` are spatial.
    pub fn coord(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.t
        } else {
            self.x[axis - 1]
        }
    }

    pub(crate) fn from_coords(coords: &[f64]) -> Self {
        Self {
            t: coords[0],
            x: coords[1..].to_vec(),
        }
    }

    /// Point at parameter `s` along the straight segment `self -> other`.
    pub fn lerp(&self, other: &Self, s: f64) -> Self {
        Self {
            t: self.t + s * (other.t - self.t),
            x: self
                .x
                .iter()
                .zip(&other.x)
                .map(|(a, b)| a + s * (b - a))
                .collect(),
        }
    }

    /// Coincident within `tol` on every coordinate.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim()
            && (self.t - other.t).abs() <= tol
            && self.x.iter().zip(&other.x).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn check_dim(&self, other: &Self) -> Result<(), GeometryError> {
        if self.dim() != other.dim() {
            Err(GeometryError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for SpacetimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; ", self.t)?;
        for (i, c) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalKind {
    Timelike,
    Lightlike,
    Spacelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Future,
    Past,
    None,
}

/// Causal character of the ordered pair `(a, b)`, seen from `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalRelation {
    pub kind: CausalKind,
    pub direction: Direction,
}

impl CausalRelation {
    pub fn is_future_causal(&self) -> bool {
        self.kind != CausalKind::Spacelike && self.direction == Direction::Future
    }
}

/// `(t_b - t_a)² - |x_b - x_a|²`.
pub fn interval(a: &SpacetimePoint, b: &SpacetimePoint) -> Result<f64, GeometryError> {
    a.check_dim(b)?;
    let dt = b.t - a.t;
    let dx2: f64 = a.x.iter().zip(&b.x).map(|(p, q)| (q - p) * (q - p)).sum();
    Ok(dt * dt - dx2)
}

pub fn causal_relation(
    a: &SpacetimePoint,
    b: &SpacetimePoint,
) -> Result<CausalRelation, GeometryError> {
    let s = interval(a, b)?;
    let dt = b.t - a.t;
    let dx2: f64 = a.x.iter().zip(&b.x).map(|(p, q)| (q - p) * (q - p)).sum();
    let scale2 = dt * dt + dx2;
    let kind = if s.abs() < INTERVAL_GUARD * scale2 || scale2 == 0.0 {
        CausalKind::Lightlike
    } else if s > 0.0 {
        CausalKind::Timelike
    } else {
        CausalKind::Spacelike
    };
    let direction = match kind {
        CausalKind::Spacelike => Direction::None,
        _ if dt < 0.0 => Direction::Past,
        _ => Direction::Future,
    };
    Ok(CausalRelation { kind, direction })
}

/// Closed causal future: `dst ∈ J⁺(src)`.
pub fn in_causal_future(src: &SpacetimePoint, dst: &SpacetimePoint) -> Result<bool, GeometryError> {
    Ok(causal_relation(src, dst)?.is_future_causal())
}

/// Lorentz boost along the single spatial axis of a `1 + 1` point.
pub fn boost_1d(p: &SpacetimePoint, velocity: f64) -> SpacetimePoint {
    assert_eq!(p.dim(), 1, "boost_1d needs a 1+1 point");
    assert!(velocity.abs() < 1.0);
    let gamma = 1.0 / (1.0 - velocity * velocity).sqrt();
    let (t, x) = (p.t, p.x[0]);
    SpacetimePoint {
        t: gamma * (t - velocity * x),
        x: vec![gamma * (x - velocity * t)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p3(t: f64, x: f64, y: f64, z: f64) -> SpacetimePoint {
        SpacetimePoint::new_3d(t, x, y, z)
    }

    #[test]
    fn interval_examples() {
        let origin = p3(0.0, 0.0, 0.0, 0.0);
        assert_eq!(interval(&origin, &p3(6.0, 3.0, 4.0, 0.0)).unwrap(), 11.0);
        assert_eq!(interval(&origin, &origin).unwrap(), 0.0);
        assert_eq!(interval(&origin, &p3(2.0, 3.0, 0.0, 0.0)).unwrap(), -5.0);
    }

    #[test]
    fn interval_dimension_mismatch() {
        let a = SpacetimePoint::new_1d(0.0, 0.0);
        let b = p3(1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            interval(&a, &b),
            Err(GeometryError::DimensionMismatch { left: 1, right: 3 })
        ));
        assert!(in_causal_future(&a, &b).is_err());
    }

    #[test]
    fn rejects_bad_points() {
        assert_eq!(
            SpacetimePoint::new(f64::NAN, vec![0.0]),
            Err(GeometryError::NonFinite)
        );
        assert_eq!(
            SpacetimePoint::new(0.0, vec![0.0, 1.0]),
            Err(GeometryError::UnsupportedDimension(2))
        );
    }

    #[test]
    fn relation_examples() {
        let p1 = p3(0.0, 0.0, 0.0, 0.0);
        let p2 = p3(2.0, 3.0, 0.0, 0.0);
        let q0 = p3(6.0, 3.0, 4.0, 0.0);
        assert_eq!(causal_relation(&p1, &p2).unwrap().kind, CausalKind::Spacelike);
        assert_eq!(causal_relation(&p1, &p2).unwrap().direction, Direction::None);
        assert_eq!(
            causal_relation(&p2, &q0).unwrap(),
            CausalRelation {
                kind: CausalKind::Lightlike,
                direction: Direction::Future
            }
        );
        assert_eq!(
            causal_relation(&p1, &p1).unwrap(),
            CausalRelation {
                kind: CausalKind::Lightlike,
                direction: Direction::Future
            }
        );
        assert!(in_causal_future(&p1, &q0).unwrap());
        assert!(!in_causal_future(&p1, &p2).unwrap());
        assert!(in_causal_future(&p1, &p1).unwrap());
        assert!(!in_causal_future(&q0, &p1).unwrap());
    }

    #[test]
    fn guard_band_absorbs_rounding() {
        // 0.1 + 0.2 style rounding on a lightlike pair
        let a = SpacetimePoint::new_1d(0.1, 0.2);
        let b = SpacetimePoint::new_1d(0.1 + 0.3, 0.2 + (0.1 + 0.2));
        assert_eq!(causal_relation(&a, &b).unwrap().kind, CausalKind::Lightlike);
    }

    fn arb_point(d: usize) -> impl Strategy<Value = SpacetimePoint> {
        (-10.0..10.0f64, prop::collection::vec(-10.0..10.0f64, d))
            .prop_map(|(t, x)| SpacetimePoint::new(t, x).unwrap())
    }

    proptest! {
        #[test]
        fn interval_symmetric(a in arb_point(3), b in arb_point(3)) {
            prop_assert_eq!(interval(&a, &b).unwrap(), interval(&b, &a).unwrap());
        }

        #[test]
        fn antisymmetry(a in arb_point(3), b in arb_point(3)) {
            let ab = causal_relation(&a, &b).unwrap();
            let ba = causal_relation(&b, &a).unwrap();
            prop_assert_eq!(ab.kind, ba.kind);
            if ab.kind != CausalKind::Spacelike && !a.approx_eq(&b, 0.0) {
                let flipped = match ab.direction {
                    Direction::Future => Direction::Past,
                    Direction::Past => Direction::Future,
                    Direction::None => Direction::None,
                };
                prop_assert_eq!(ba.direction, flipped);
            }
            prop_assert_eq!(ab.direction == Direction::None, ab.kind == CausalKind::Spacelike);
        }

        #[test]
        fn transitivity(a in arb_point(1), b in arb_point(1), c in arb_point(1)) {
            if in_causal_future(&a, &b).unwrap() && in_causal_future(&b, &c).unwrap() {
                prop_assert!(in_causal_future(&a, &c).unwrap());
            }
        }

        #[test]
        fn transitivity_3d(a in arb_point(3), b in arb_point(3), c in arb_point(3)) {
            if in_causal_future(&a, &b).unwrap() && in_causal_future(&b, &c).unwrap() {
                prop_assert!(in_causal_future(&a, &c).unwrap());
            }
        }

        #[test]
        fn boost_preserves_kind(a in arb_point(1), b in arb_point(1), v in -0.95..0.95f64) {
            let s = interval(&a, &b).unwrap();
            let scale = (b.t() - a.t()).powi(2) + (b.x()[0] - a.x()[0]).powi(2);
            // Skip pairs inside the guard band around the light cone.
            prop_assume!(s.abs() > 1e-9 * scale.max(1.0));
            let before = causal_relation(&a, &b).unwrap().kind;
            let after = causal_relation(&boost_1d(&a, v), &boost_1d(&b, v)).unwrap().kind;
            prop_assert_eq!(before, after);
        }
    }
}
