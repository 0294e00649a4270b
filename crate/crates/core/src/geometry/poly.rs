//! 2D polygon kernel: point classification, segment crossings, validity checks.
//!
//! All predicates use an absolute tolerance in meters. Points within `eps` of
//! an edge are classified as boundary, which upstream LoS logic treats as
//! non-blocking (open-interior semantics).

/// Geometric tolerance in meters for boundary classification.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLocation {
    Inside,
    Boundary,
    Outside,
}

#[inline]
fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

/// Distance from point `p` to the closed segment `a`-`b`.
pub fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return norm(ap);
    }
    let t = (dot(ap, ab) / len2).clamp(0.0, 1.0);
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Classifies `p` against the polygon `poly` (vertices in order, implicitly
/// closed). Points within `eps` of any edge are `Boundary`; otherwise the
/// even-odd crossing rule decides.
pub fn locate_point(p: [f64; 2], poly: &[[f64; 2]], eps: f64) -> PointLocation {
    let n = poly.len();
    for i in 0..n {
        if dist_point_segment(p, poly[i], poly[(i + 1) % n]) <= eps {
            return PointLocation::Boundary;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        // Half-open vertex rule keeps crossings through vertices consistent.
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_cross = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
    }
    if inside {
        PointLocation::Inside
    } else {
        PointLocation::Outside
    }
}

/// Collects parameters `t` in [0,1] along segment `p`-`q` where it meets the
/// edge `a`-`b`. Transversal crossings contribute one parameter; collinear
/// overlaps contribute the projections of both edge endpoints so that interval
/// subdivision never misses a topology change.
pub fn segment_edge_params(
    p: [f64; 2],
    q: [f64; 2],
    a: [f64; 2],
    b: [f64; 2],
    eps: f64,
    out: &mut Vec<f64>,
) {
    let d1 = sub(q, p);
    let d2 = sub(b, a);
    let len1 = norm(d1);
    if len1 == 0.0 {
        return;
    }
    let denom = cross(d1, d2);
    let ap = sub(a, p);
    // Near-parallel: fall back to collinearity handling.
    if denom.abs() <= eps * len1.max(norm(d2)) {
        let da = cross(ap, d1).abs() / len1;
        let db = cross(sub(b, p), d1).abs() / len1;
        if da <= eps && db <= eps {
            let len1_sq = len1 * len1;
            for e in [a, b] {
                let t = dot(sub(e, p), d1) / len1_sq;
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    out.push(t.clamp(0.0, 1.0));
                }
            }
        }
        return;
    }
    let t = cross(ap, d2) / denom;
    let u = cross(ap, d1) / denom;
    // Generous slack: spurious breakpoints are harmless, missed ones are not.
    let slack_t = eps / len1;
    let slack_u = eps / norm(d2).max(f64::MIN_POSITIVE);
    if t >= -slack_t && t <= 1.0 + slack_t && u >= -slack_u && u <= 1.0 + slack_u {
        out.push(t.clamp(0.0, 1.0));
    }
}

/// Signed area of the polygon (positive for counter-clockwise order).
pub fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += cross(a, b);
    }
    acc * 0.5
}

/// Whether two closed segments share any point.
fn segments_intersect(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d1 = cross(sub(p4, p3), sub(p1, p3));
    let d2 = cross(sub(p4, p3), sub(p2, p3));
    let d3 = cross(sub(p2, p1), sub(p3, p1));
    let d4 = cross(sub(p2, p1), sub(p4, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |d: f64, a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        d == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(d1, p3, p4, p1) || on(d2, p3, p4, p2) || on(d3, p1, p2, p3) || on(d4, p1, p2, p4)
}

/// Checks that the polygon is simple: no zero-length edges, no intersections
/// between non-adjacent edges, no collinear backtracking at shared vertices.
pub fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a == b {
            return false;
        }
    }
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Edges sharing a vertex may not fold back onto each other.
                let (shared, e1, e2) = if j == i + 1 {
                    (a2, a1, b2)
                } else {
                    (a1, b1, a2)
                };
                let u = sub(e1, shared);
                let v = sub(e2, shared);
                if cross(u, v) == 0.0 && dot(u, v) > 0.0 {
                    return false;
                }
            } else if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]];

    #[test]
    fn locates_interior_boundary_exterior() {
        assert_eq!(
            locate_point([5.0, 5.0], &SQUARE, GEOM_EPS),
            PointLocation::Inside
        );
        assert_eq!(
            locate_point([0.0, 5.0], &SQUARE, GEOM_EPS),
            PointLocation::Boundary
        );
        assert_eq!(
            locate_point([10.0, 10.0], &SQUARE, GEOM_EPS),
            PointLocation::Boundary
        );
        assert_eq!(
            locate_point([15.0, 5.0], &SQUARE, GEOM_EPS),
            PointLocation::Outside
        );
    }

    #[test]
    fn locates_in_concave_polygon() {
        // L-shape: the notch at the top right is outside.
        let poly = [
            [0.0, 0.0],
            [10.0, 0.0],
            [10.0, 5.0],
            [5.0, 5.0],
            [5.0, 10.0],
            [0.0, 10.0],
        ];
        assert_eq!(
            locate_point([2.0, 8.0], &poly, GEOM_EPS),
            PointLocation::Inside
        );
        assert_eq!(
            locate_point([8.0, 8.0], &poly, GEOM_EPS),
            PointLocation::Outside
        );
        assert_eq!(
            locate_point([8.0, 2.0], &poly, GEOM_EPS),
            PointLocation::Inside
        );
    }

    #[test]
    fn transversal_crossing_params() {
        let mut ts = Vec::new();
        segment_edge_params(
            [-5.0, 5.0],
            [15.0, 5.0],
            [0.0, 0.0],
            [0.0, 10.0],
            GEOM_EPS,
            &mut ts,
        );
        assert_eq!(ts.len(), 1);
        assert!((ts[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn collinear_overlap_params() {
        let mut ts = Vec::new();
        segment_edge_params(
            [-5.0, 0.0],
            [15.0, 0.0],
            [0.0, 0.0],
            [10.0, 0.0],
            GEOM_EPS,
            &mut ts,
        );
        ts.sort_by(f64::total_cmp);
        assert_eq!(ts.len(), 2);
        assert!((ts[0] - 0.25).abs() < 1e-12 && (ts[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn signed_area_orientation() {
        assert!(signed_area(&SQUARE) > 0.0);
        let cw: Vec<[f64; 2]> = SQUARE.iter().rev().copied().collect();
        assert!(signed_area(&cw) < 0.0);
    }

    #[test]
    fn simplicity_rejects_bowtie() {
        let bowtie = [[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]];
        assert!(!is_simple(&bowtie));
        assert!(is_simple(&SQUARE));
    }

    #[test]
    fn simplicity_rejects_repeated_vertex() {
        let dup = [[0.0, 0.0], [10.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        assert!(!is_simple(&dup));
    }
}
