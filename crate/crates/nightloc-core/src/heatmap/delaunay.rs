//! Bowyer-Watson Delaunay triangulation over a small 2D point set.
//!
//! Insertion order is the caller's point order, which [`super::Interpolator`]
//! fixes to ascending node id — together with the strict in-circle test and
//! the final canonical sort this makes the triangulation independent of how
//! the nodes were stored. Cocircular quads (ubiquitous on regular survey
//! grids) keep the diagonal created first in insertion order rather than
//! flipping on a rounding whim: a point exactly on a circumcircle is treated
//! as outside it.

use crate::error::{Error, Result};

/// `> 0` when `c` lies left of the directed line `a -> b` (CCW turn).
pub(crate) fn orient2d(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Strict in-circumcircle predicate for a CCW triangle `(a, b, c)`.
/// `eps` absorbs rounding noise: determinants in `[-eps, eps]` count as
/// on-circle, i.e. not inside.
fn in_circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64), p: (f64, f64), eps: f64) -> bool {
    let (ax, ay) = (a.0 - p.0, a.1 - p.1);
    let (bx, by) = (b.0 - p.0, b.1 - p.1);
    let (cx, cy) = (c.0 - p.0, c.1 - p.1);
    let det = (ax * ax + ay * ay) * (bx * cy - by * cx)
        - (bx * bx + by * by) * (ax * cy - ay * cx)
        + (cx * cx + cy * cy) * (ax * by - ay * bx);
    det > eps
}

/// Triangulates `points` (assumed pairwise distinct). Returns CCW triangles
/// as index triples, each rotated to start at its smallest index and the
/// whole list sorted — a canonical form for a canonical insertion order.
///
/// Errors with [`Error::CollinearNodes`] when the points span no area.
pub(crate) fn triangulate(points: &[(f64, f64)]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::CollinearNodes);
    }

    let min_x = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let span = ((max_x - min_x).powi(2) + (max_y - min_y).powi(2)).sqrt().max(1e-12);
    // The in-circle determinant scales with length^4. Genuine cocircular
    // noise sits near 1e-15 * span^4; real containment on any sensible node
    // layout is orders of magnitude above 1e-9 * span^4.
    let eps = 1e-9 * span.powi(4);
    let (cx, cy) = ((min_x + max_x) / 2.0, (min_y + max_y) / 2.0);

    // Super-triangle far outside the data, with deliberately lopsided
    // offsets so its edges are never collinear with axis-aligned node rows.
    let mut verts: Vec<(f64, f64)> = points.to_vec();
    verts.push((cx - 16.1 * span, cy - 7.3 * span));
    verts.push((cx + 15.7 * span, cy - 7.9 * span));
    verts.push((cx + 0.13 * span, cy + 16.54 * span));
    let (s0, s1, s2) = (n, n + 1, n + 2);
    debug_assert!(orient2d(verts[s0], verts[s1], verts[s2]) > 0.0);

    let mut triangles: Vec<[usize; 3]> = vec![[s0, s1, s2]];
    for pi in 0..n {
        let p = verts[pi];
        let bad: Vec<usize> = (0..triangles.len())
            .filter(|&t| {
                let [a, b, c] = triangles[t];
                in_circumcircle(verts[a], verts[b], verts[c], p, eps)
            })
            .collect();
        assert!(
            !bad.is_empty(),
            "insertion point must fall inside at least one circumcircle"
        );

        // Cavity boundary: directed edges of bad triangles whose reverse is
        // not itself a bad-triangle edge. CCW winding makes shared edges
        // appear once per direction.
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(bad.len() * 3);
        for &t in &bad {
            let [a, b, c] = triangles[t];
            edges.push((a, b));
            edges.push((b, c));
            edges.push((c, a));
        }
        let edge_set: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
        let boundary: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| !edge_set.contains(&(b, a)))
            .collect();

        let bad_set: std::collections::HashSet<usize> = bad.into_iter().collect();
        let mut kept = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.into_iter().enumerate() {
            if !bad_set.contains(&t) {
                kept.push(tri);
            }
        }
        for (a, b) in boundary {
            kept.push([a, b, pi]);
        }
        triangles = kept;
    }

    let mut result: Vec<[usize; 3]> = triangles
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .map(canonical_rotation)
        .collect();
    result.sort_unstable();
    if result.is_empty() {
        return Err(Error::CollinearNodes);
    }
    Ok(result)
}

/// Rotates the triple so the smallest index comes first, preserving winding.
fn canonical_rotation(t: [usize; 3]) -> [usize; 3] {
    let [a, b, c] = t;
    if a < b && a < c {
        [a, b, c]
    } else if b < a && b < c {
        [b, c, a]
    } else {
        [c, a, b]
    }
}
