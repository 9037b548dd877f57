//! Analytic IoU gradients.
//!
//! The Sutherland–Hodgman construction is piecewise analytic: every output
//! vertex is either a subject vertex or the intersection of a subject edge
//! with a clip line, both with closed-form derivatives. Differentiating the
//! shoelace area through that construction gives exact gradients wherever the
//! clipping topology is stable. Configurations too close to a topology change
//! (a vertex on the other polygon's boundary) are rejected instead of
//! returning a subgradient.

use nalgebra::Point2;

use super::{GeometryError, SlotPolygon};

/// Perpendicular-distance threshold below which a configuration counts as
/// non-smooth.
const GENERAL_POSITION_EPS: f64 = 1e-9;

/// A point carrying d(point)/d(corner coordinates of the subject polygon).
#[derive(Clone, Copy)]
struct DualPoint {
    x: f64,
    y: f64,
    dx: [f64; 8],
    dy: [f64; 8],
}

impl DualPoint {
    fn constant(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            dx: [0.0; 8],
            dy: [0.0; 8],
        }
    }
}

/// ∂IoU/∂(corners of `a`), in label order
/// (EL.x, EL.y, ER.x, ER.y, endL.x, endL.y, endR.x, endR.y).
///
/// Errors with [`GeometryError::NonSmoothConfiguration`] when any vertex of
/// either polygon lies within 1e-9 of the other polygon's boundary, or when
/// the clipping construction itself passes within 1e-9 of a branch change.
pub fn polygon_iou_grad(a: &SlotPolygon, b: &SlotPolygon) -> Result<[f64; 8], GeometryError> {
    debug_assert_eq!(a.unit(), b.unit(), "IoU across units is meaningless");
    let ring_a = a.ring();
    let ring_b = b.ring();
    check_general_position(&ring_a, &ring_b)?;
    check_general_position(&ring_b, &ring_a)?;

    // Seed the subject ring: ring vertex i is label-order corner perm[i],
    // whose coordinates are parameters 2*perm[i] and 2*perm[i]+1.
    let perm = a.ring_perm();
    let mut subject: Vec<DualPoint> = Vec::with_capacity(8);
    for (i, p) in ring_a.iter().enumerate() {
        let mut d = DualPoint::constant(p.x, p.y);
        d.dx[2 * perm[i]] = 1.0;
        d.dy[2 * perm[i] + 1] = 1.0;
        subject.push(d);
    }

    let mut scratch: Vec<DualPoint> = Vec::with_capacity(8);
    for i in 0..ring_b.len() {
        let ca = ring_b[i];
        let cb = ring_b[(i + 1) % ring_b.len()];
        clip_halfplane_dual(&subject, ca, cb, &mut scratch)?;
        std::mem::swap(&mut subject, &mut scratch);
        if subject.len() < 3 {
            subject.clear();
            break;
        }
    }

    let (inter, d_inter) = dual_ring_area(&subject);
    let (area_a, d_area_a) = subject_area_grad(&ring_a, perm);
    let area_b = super::polygon_area(&ring_b);

    let union = area_a + area_b - inter;
    debug_assert!(union > 0.0);
    let iou = inter / union;

    let mut grad = [0.0; 8];
    for k in 0..8 {
        let d_union = d_area_a[k] - d_inter[k];
        grad[k] = (d_inter[k] * union - inter * d_union) / (union * union);
    }
    let _ = iou;
    Ok(grad)
}

/// Rejects configurations where a vertex of `verts` lies within the
/// general-position distance of an edge segment of `edges`.
fn check_general_position(
    verts: &[Point2<f64>; 4],
    edges: &[Point2<f64>; 4],
) -> Result<(), GeometryError> {
    for v in verts {
        for i in 0..4 {
            let a = edges[i];
            let b = edges[(i + 1) % 4];
            if segment_distance(*v, a, b) < GENERAL_POSITION_EPS {
                return Err(GeometryError::NonSmoothConfiguration);
            }
        }
    }
    Ok(())
}

fn segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// One half-plane clip with derivative propagation; errors when a side value
/// comes within the general-position distance of zero (a branch change).
fn clip_halfplane_dual(
    poly: &[DualPoint],
    a: Point2<f64>,
    b: Point2<f64>,
    out: &mut Vec<DualPoint>,
) -> Result<(), GeometryError> {
    out.clear();
    let ex = b.x - a.x;
    let ey = b.y - a.y;
    let elen = (ex * ex + ey * ey).sqrt();

    // side(p) = ex*(p.y - a.y) - ey*(p.x - a.x); d(side) is linear in dp.
    let side = |p: &DualPoint| -> (f64, [f64; 8]) {
        let v = ex * (p.y - a.y) - ey * (p.x - a.x);
        let mut dv = [0.0; 8];
        for k in 0..8 {
            dv[k] = ex * p.dy[k] - ey * p.dx[k];
        }
        (v, dv)
    };

    let n = poly.len();
    for i in 0..n {
        let s = &poly[i];
        let e = &poly[(i + 1) % n];
        let (sc, dsc) = side(s);
        let (ec, dec) = side(e);
        if sc.abs() < GENERAL_POSITION_EPS * elen || ec.abs() < GENERAL_POSITION_EPS * elen {
            return Err(GeometryError::NonSmoothConfiguration);
        }
        let s_in = sc >= 0.0;
        let e_in = ec >= 0.0;
        match (s_in, e_in) {
            (true, true) => out.push(*e),
            (true, false) => out.push(intersect_dual(s, e, sc, ec, &dsc, &dec)),
            (false, true) => {
                out.push(intersect_dual(s, e, sc, ec, &dsc, &dec));
                out.push(*e);
            }
            (false, false) => {}
        }
    }
    Ok(())
}

fn intersect_dual(
    s: &DualPoint,
    e: &DualPoint,
    sc: f64,
    ec: f64,
    dsc: &[f64; 8],
    dec: &[f64; 8],
) -> DualPoint {
    let denom = sc - ec;
    let t = sc / denom;
    let mut p = DualPoint::constant(s.x + (e.x - s.x) * t, s.y + (e.y - s.y) * t);
    for k in 0..8 {
        // d(t) by the quotient rule; sc and ec have opposite signs here so
        // the denominator is bounded away from zero.
        let dt = (dsc[k] * denom - sc * (dsc[k] - dec[k])) / (denom * denom);
        p.dx[k] = s.dx[k] + dt * (e.x - s.x) + t * (e.dx[k] - s.dx[k]);
        p.dy[k] = s.dy[k] + dt * (e.y - s.y) + t * (e.dy[k] - s.dy[k]);
    }
    p
}

/// Shoelace area of a dual ring with its gradient. The ring is CCW by
/// construction, so the signed sum is the area.
fn dual_ring_area(ring: &[DualPoint]) -> (f64, [f64; 8]) {
    let mut area = 0.0;
    let mut grad = [0.0; 8];
    if ring.len() < 3 {
        return (0.0, grad);
    }
    let n = ring.len();
    for i in 0..n {
        let p = &ring[i];
        let q = &ring[(i + 1) % n];
        area += p.x * q.y - q.x * p.y;
        for k in 0..8 {
            grad[k] += p.dx[k] * q.y + p.x * q.dy[k] - q.dx[k] * p.y - q.x * p.dy[k];
        }
    }
    area *= 0.5;
    for g in &mut grad {
        *g *= 0.5;
    }
    (area, grad)
}

/// Area of the subject ring and its gradient w.r.t. the label-order corner
/// parameters.
fn subject_area_grad(ring: &[Point2<f64>; 4], perm: [usize; 4]) -> (f64, [f64; 8]) {
    let area = super::signed_area(ring);
    debug_assert!(area > 0.0, "validated rings are CCW");
    let mut grad = [0.0; 8];
    let n = ring.len();
    for i in 0..n {
        let next = ring[(i + 1) % n];
        let prev = ring[(i + n - 1) % n];
        grad[2 * perm[i]] = 0.5 * (next.y - prev.y);
        grad[2 * perm[i] + 1] = 0.5 * (prev.x - next.x);
    }
    (area, grad)
}
