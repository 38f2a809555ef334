use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{in_causal_future, GeometryError, Region, SpacetimeBox, SpacetimePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingConfig {
    /// Lattice steps per spatial axis for `3 + 1` searches.
    pub resolution: usize,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self { resolution: 64 }
    }
}

/// Result of a causal path search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathOutcome {
    /// A certificate: consecutive waypoints are future-causal and clear of obstacles.
    Found(Vec<SpacetimePoint>),
    NotFound,
    /// The `3 + 1` lattice search at this resolution found nothing; no claim either way.
    Unresolved { resolution: usize },
}

impl PathOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, PathOutcome::Found(_))
    }

    pub fn path(&self) -> Option<&[SpacetimePoint]> {
        match self {
            PathOutcome::Found(p) => Some(p),
            _ => None,
        }
    }
}

/// `causal_path_exists` with the default resolution.
pub fn causal_path_exists(
    src: &SpacetimePoint,
    dst: &SpacetimePoint,
    avoid: &[Region],
) -> Result<bool, GeometryError> {
    Ok(find_causal_path(src, dst, avoid, &RoutingConfig::default())?.is_found())
}

/// Search for a future-directed piecewise-causal curve from `src` to `dst`
/// that never enters the open interior of an impenetrable region.
///
/// Exact in `1 + 1` (waypoint graph over box corners). In `3 + 1` a failed
/// search is reported as [`PathOutcome::Unresolved`] unless the plain cone
/// test already rules the pair out.
pub fn find_causal_path(
    src: &SpacetimePoint,
    dst: &SpacetimePoint,
    avoid: &[Region],
    cfg: &RoutingConfig,
) -> Result<PathOutcome, GeometryError> {
    if cfg.resolution == 0 {
        return Err(GeometryError::NonPositiveResolution);
    }
    for r in avoid {
        if r.dim() != src.dim() {
            return Err(GeometryError::DimensionMismatch {
                left: src.dim(),
                right: r.dim(),
            });
        }
    }
    if !in_causal_future(src, dst)? {
        return Ok(PathOutcome::NotFound);
    }
    let obstacles: Vec<&SpacetimeBox> = avoid
        .iter()
        .filter(|r| !r.penetrable)
        .flat_map(|r| r.boxes.iter())
        .collect();
    if obstacles
        .iter()
        .any(|b| b.contains_interior(src) || b.contains_interior(dst))
    {
        return Ok(PathOutcome::NotFound);
    }
    if segment_clear(&obstacles, src, dst) {
        return Ok(PathOutcome::Found(vec![src.clone(), dst.clone()]));
    }
    if let Some(path) = waypoint_search(src, dst, &obstacles) {
        return Ok(PathOutcome::Found(path));
    }
    if src.dim() == 1 {
        return Ok(PathOutcome::NotFound);
    }
    match lattice_search(src, dst, &obstacles, cfg.resolution) {
        Some(path) if verify_path(&path, &obstacles) => Ok(PathOutcome::Found(path)),
        _ => Ok(PathOutcome::Unresolved {
            resolution: cfg.resolution,
        }),
    }
}

fn segment_clear(obstacles: &[&SpacetimeBox], a: &SpacetimePoint, b: &SpacetimePoint) -> bool {
    !obstacles.iter().any(|bx| bx.segment_meets_interior(a, b))
}

fn edge_ok(obstacles: &[&SpacetimeBox], a: &SpacetimePoint, b: &SpacetimePoint) -> bool {
    in_causal_future(a, b).unwrap_or(false) && segment_clear(obstacles, a, b)
}

fn verify_path(path: &[SpacetimePoint], obstacles: &[&SpacetimeBox]) -> bool {
    path.windows(2).all(|w| edge_ok(obstacles, &w[0], &w[1]))
}

/// BFS over `{src, dst} ∪ corners`, edges are clear future-causal segments.
fn waypoint_search(
    src: &SpacetimePoint,
    dst: &SpacetimePoint,
    obstacles: &[&SpacetimeBox],
) -> Option<Vec<SpacetimePoint>> {
    let mut nodes = vec![src.clone(), dst.clone()];
    for b in obstacles {
        for c in b.corners() {
            let useful = in_causal_future(src, &c).unwrap_or(false)
                && in_causal_future(&c, dst).unwrap_or(false);
            if useful && !obstacles.iter().any(|o| o.contains_interior(&c)) {
                nodes.push(c);
            }
        }
    }
    let mut parent = vec![usize::MAX; nodes.len()];
    parent[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        if u == 1 {
            break;
        }
        for v in 1..nodes.len() {
            if parent[v] != usize::MAX || nodes[u].approx_eq(&nodes[v], 0.0) {
                continue;
            }
            if edge_ok(obstacles, &nodes[u], &nodes[v]) {
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    if parent[1] == usize::MAX {
        return None;
    }
    let mut path = vec![nodes[1].clone()];
    let mut cur = 1;
    while cur != 0 {
        cur = parent[cur];
        path.push(nodes[cur].clone());
    }
    path.reverse();
    Some(path)
}

/// Layered lattice BFS for `3 + 1`. Spatial grid of `resolution` steps over
/// the bounding box of the causal diamond, time layers spaced so that moves
/// of up to two cells per layer remain causal.
fn lattice_search(
    src: &SpacetimePoint,
    dst: &SpacetimePoint,
    obstacles: &[&SpacetimeBox],
    resolution: usize,
) -> Option<Vec<SpacetimePoint>> {
    let total_t = dst.t() - src.t();
    if total_t <= 0.0 {
        return None;
    }
    let d = src.dim();
    let n = resolution + 1;
    let h = total_t / resolution as f64;
    let layers = resolution.div_ceil(2).max(2);
    let dt = total_t / layers as f64;
    let origin: Vec<f64> = (0..d)
        .map(|i| 0.5 * (src.x()[i] + dst.x()[i]) - 0.5 * total_t)
        .collect();
    let cells = n.pow(d as u32);

    let node_point = |layer: usize, idx: usize| -> SpacetimePoint {
        let mut rem = idx;
        let mut coords = vec![src.t() + layer as f64 * dt];
        let mut xs = vec![0.0; d];
        for axis in (0..d).rev() {
            xs[axis] = origin[axis] + (rem % n) as f64 * h;
            rem /= n;
        }
        coords.extend(xs);
        SpacetimePoint::from_coords(&coords)
    };
    let decompose = |idx: usize| -> Vec<i64> {
        let mut rem = idx;
        let mut out = vec![0i64; d];
        for axis in (0..d).rev() {
            out[axis] = (rem % n) as i64;
            rem /= n;
        }
        out
    };
    let compose = |c: &[i64]| -> Option<usize> {
        let mut idx = 0usize;
        for &v in c {
            if v < 0 || v >= n as i64 {
                return None;
            }
            idx = idx * n + v as usize;
        }
        Some(idx)
    };

    let reach = (dt / h).floor() as i64;
    let limit = (dt / h) * (dt / h) * (1.0 + 1e-9);
    let mut offsets = Vec::new();
    for ox in -reach..=reach {
        for oy in -reach..=reach {
            for oz in -reach..=reach {
                let o = [ox, oy, oz];
                let norm2: i64 = o[..d].iter().map(|v| v * v).sum();
                if (norm2 as f64) <= limit && (d == 3 || (oy == 0 && oz == 0)) {
                    offsets.push(o[..d].to_vec());
                }
            }
        }
    }
    offsets.dedup();

    let usable = |p: &SpacetimePoint| -> bool {
        in_causal_future(src, p).unwrap_or(false)
            && in_causal_future(p, dst).unwrap_or(false)
            && !obstacles.iter().any(|b| b.contains_interior(p))
    };

    // parents[k][idx] for layers 1..layers-1; u32::MAX means unreached.
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(layers);
    parents.push(Vec::new());
    let mut first = vec![u32::MAX; cells];
    let mut frontier = Vec::new();
    for (idx, slot) in first.iter_mut().enumerate() {
        let p = node_point(1, idx);
        if usable(&p) && edge_ok(obstacles, src, &p) {
            *slot = 0;
            frontier.push(idx);
        }
    }
    parents.push(first);
    for layer in 1..layers - 1 {
        let mut next = vec![u32::MAX; cells];
        let mut next_frontier = Vec::new();
        for &idx in &frontier {
            let from = node_point(layer, idx);
            let base = decompose(idx);
            for o in &offsets {
                let c: Vec<i64> = base.iter().zip(o).map(|(a, b)| a + b).collect();
                let Some(target) = compose(&c) else { continue };
                if next[target] != u32::MAX {
                    continue;
                }
                let to = node_point(layer + 1, target);
                if usable(&to) && segment_clear(obstacles, &from, &to) {
                    next[target] = idx as u32;
                    next_frontier.push(target);
                }
            }
        }
        parents.push(next);
        frontier = next_frontier;
        if frontier.is_empty() {
            return None;
        }
    }
    let last_layer = layers - 1;
    let end = frontier
        .iter()
        .copied()
        .find(|&idx| edge_ok(obstacles, &node_point(last_layer, idx), dst))?;
    let mut path = vec![dst.clone()];
    let mut idx = end;
    for layer in (1..=last_layer).rev() {
        path.push(node_point(layer, idx));
        idx = parents[layer][idx] as usize;
    }
    path.push(src.clone());
    path.reverse();
    Some(path)
}
