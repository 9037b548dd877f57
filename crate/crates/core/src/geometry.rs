//! Four-corner parking-slot polygons and the geometry on them.
//!
//! Slots are stored in the label order entrance-left, entrance-right,
//! ending-left, ending-right (a "Z" order, not a polygon ring); the geometric
//! ring is derived on demand and canonicalized counterclockwise. Intersection
//! uses Sutherland–Hodgman clipping, which is exact for convex polygons, and
//! IoU gradients come from differentiating that construction (see `grad`).

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod grad;
pub use grad::polygon_iou_grad;

/// Tolerance below which a consecutive-edge cross product counts as
/// degenerate when validating slot corners.
const CONVEXITY_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("slot corners do not form a strictly convex quadrilateral")]
    NonConvex,
    #[error("slot corners span (near-)zero area")]
    DegenerateArea,
    #[error("polygons are too close to a clipping-topology change for a well-defined gradient")]
    NonSmoothConfiguration,
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(String),
}

/// Parking-slot category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotClass {
    Regular,
    Handicapped,
    Ev,
}

impl SlotClass {
    pub const ALL: [SlotClass; 3] = [SlotClass::Regular, SlotClass::Handicapped, SlotClass::Ev];

    pub fn index(self) -> usize {
        match self {
            SlotClass::Regular => 0,
            SlotClass::Handicapped => 1,
            SlotClass::Ev => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SlotClass::Regular => "Regular",
            SlotClass::Handicapped => "Handicapped",
            SlotClass::Ev => "EV",
        }
    }
}

/// Coordinate unit a polygon is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Meters in the vehicle frame (x forward, y left).
    VehicleM,
    /// Pixels of a synthesized BEV image (x right, y down).
    BevPx,
}

/// A validated four-corner slot.
///
/// Corners are kept in label order: entrance-left, entrance-right,
/// ending-left, ending-right. The entrance edge is corner 0 → corner 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotPolygon {
    corners: [Point2<f64>; 4],
    unit: Unit,
    /// Ring index -> corner index, fixed at validation so the ring is CCW.
    ring_perm: [usize; 4],
}

impl SlotPolygon {
    /// Corners in label order (EL, ER, endL, endR).
    pub fn corners(&self) -> &[Point2<f64>; 4] {
        &self.corners
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    /// The counterclockwise geometric ring.
    pub fn ring(&self) -> [Point2<f64>; 4] {
        self.ring_perm.map(|i| self.corners[i])
    }

    /// Ring index -> label-order corner index.
    pub(crate) fn ring_perm(&self) -> [usize; 4] {
        self.ring_perm
    }

    /// Entrance edge endpoints (entrance-left, entrance-right).
    pub fn entrance_edge(&self) -> (Point2<f64>, Point2<f64>) {
        (self.corners[0], self.corners[1])
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.ring())
    }

    pub fn centroid(&self) -> Point2<f64> {
        let mut c = Vector2::zeros();
        for p in &self.corners {
            c += p.coords;
        }
        Point2::from(c / 4.0)
    }
}

/// One detector output: a slot with class label and confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub polygon: SlotPolygon,
    pub class: SlotClass,
    pub confidence: f64,
}

impl Detection {
    pub fn new(polygon: SlotPolygon, class: SlotClass, confidence: f64) -> Result<Self, GeometryError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(GeometryError::InvalidConfidence(format!("{confidence}")));
        }
        Ok(Self {
            polygon,
            class,
            confidence,
        })
    }
}

/// Validates corners given in label order (EL, ER, endL, endR) and fixes the
/// ring orientation.
///
/// The geometric ring is (EL, ER, endR, endL); it is reversed when needed so
/// the stored ring is counterclockwise in the coordinate frame of the input.
pub fn validate_slot(corners: [Point2<f64>; 4], unit: Unit) -> Result<SlotPolygon, GeometryError> {
    // Coincident corners make the quadrilateral degenerate regardless of the
    // remaining geometry.
    for i in 0..4 {
        for j in (i + 1)..4 {
            if (corners[i] - corners[j]).norm_squared() < CONVEXITY_EPS {
                return Err(GeometryError::DegenerateArea);
            }
        }
    }

    let ring_order = [0usize, 1, 3, 2];
    let ring = ring_order.map(|i| corners[i]);
    let signed = signed_area(&ring);
    if signed.abs() < CONVEXITY_EPS {
        return Err(GeometryError::DegenerateArea);
    }
    let ring_perm = if signed > 0.0 {
        ring_order
    } else {
        [0usize, 2, 3, 1]
    };
    let ring = ring_perm.map(|i| corners[i]);

    // Strict convexity: every consecutive-edge cross product must be
    // positive (the ring is CCW at this point).
    for i in 0..4 {
        let a = ring[i];
        let b = ring[(i + 1) % 4];
        let c = ring[(i + 2) % 4];
        let cross = (b - a).perp(&(c - b));
        if cross < CONVEXITY_EPS {
            return Err(GeometryError::NonConvex);
        }
    }

    Ok(SlotPolygon {
        corners,
        unit,
        ring_perm,
    })
}

/// Signed shoelace area (positive for counterclockwise rings).
pub(crate) fn signed_area(ring: &[Point2<f64>]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..ring.len() {
        let p = ring[i];
        let q = ring[(i + 1) % ring.len()];
        sum += p.x * q.y - q.x * p.y;
    }
    0.5 * sum
}

/// Absolute shoelace area; degenerate inputs give 0.
pub fn polygon_area(ring: &[Point2<f64>]) -> f64 {
    signed_area(ring).abs()
}

/// Sutherland–Hodgman intersection of two convex rings.
///
/// Both rings must be convex and counterclockwise. Returns the vertex ring of
/// the intersection; empty when the polygons are disjoint.
pub fn convex_intersection(subject: &[Point2<f64>], clip: &[Point2<f64>]) -> Vec<Point2<f64>> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let mut out = subject.to_vec();
    let mut scratch = Vec::with_capacity(subject.len() + clip.len());
    for i in 0..clip.len() {
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        clip_halfplane(&out, a, b, &mut scratch);
        std::mem::swap(&mut out, &mut scratch);
        if out.len() < 3 {
            return Vec::new();
        }
    }
    out
}

/// Keeps the part of `poly` on the left of the directed edge a→b.
fn clip_halfplane(
    poly: &[Point2<f64>],
    a: Point2<f64>,
    b: Point2<f64>,
    out: &mut Vec<Point2<f64>>,
) {
    out.clear();
    let edge = b - a;
    let n = poly.len();
    for i in 0..n {
        let s = poly[i];
        let e = poly[(i + 1) % n];
        let sc = edge.perp(&(s - a));
        let ec = edge.perp(&(e - a));
        let s_in = sc >= 0.0;
        let e_in = ec >= 0.0;
        match (s_in, e_in) {
            (true, true) => out.push(e),
            (true, false) => {
                out.push(intersect_at(s, e, sc, ec));
            }
            (false, true) => {
                out.push(intersect_at(s, e, sc, ec));
                out.push(e);
            }
            (false, false) => {}
        }
    }
}

#[inline]
fn intersect_at(s: Point2<f64>, e: Point2<f64>, sc: f64, ec: f64) -> Point2<f64> {
    let t = sc / (sc - ec);
    Point2::new(s.x + (e.x - s.x) * t, s.y + (e.y - s.y) * t)
}

/// Exact intersection-over-union of two convex slots.
pub fn polygon_iou(a: &SlotPolygon, b: &SlotPolygon) -> f64 {
    debug_assert_eq!(a.unit(), b.unit(), "IoU across units is meaningless");
    let inter = polygon_area(&convex_intersection(&a.ring(), &b.ring()));
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    inter / union
}

/// Greedy class-aware non-maximum suppression.
///
/// Detections are visited in descending confidence (ties keep input order);
/// one is kept iff its IoU with every already-kept detection of the same
/// class stays below `iou_threshold`.
pub fn polygon_nms(detections: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&i, &j| {
        detections[j]
            .confidence
            .partial_cmp(&detections[i].confidence)
            .expect("confidence is finite by construction")
            .then(i.cmp(&j))
    });

    let mut kept: Vec<Detection> = Vec::new();
    for idx in order {
        let cand = &detections[idx];
        let suppressed = kept.iter().any(|k| {
            k.class == cand.class && polygon_iou(&k.polygon, &cand.polygon) >= iou_threshold
        });
        if !suppressed {
            kept.push(cand.clone());
        }
    }
    kept
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::Rng;

    /// Random strictly convex quad in label order, roughly unit scale.
    ///
    /// Built by sorting four random points around their centroid and
    /// retrying until validation accepts them, so the result is guaranteed
    /// convex without biasing toward any particular shape family.
    pub fn random_convex_slot<R: Rng>(rng: &mut R, unit: Unit) -> SlotPolygon {
        loop {
            let cx: f64 = rng.random_range(-1.0..1.0);
            let cy: f64 = rng.random_range(-1.0..1.0);
            let mut pts: Vec<Point2<f64>> = (0..4)
                .map(|_| {
                    Point2::new(cx + rng.random_range(-1.0..1.0), cy + rng.random_range(-1.0..1.0))
                })
                .collect();
            let centroid = Point2::new(
                pts.iter().map(|p| p.x).sum::<f64>() / 4.0,
                pts.iter().map(|p| p.y).sum::<f64>() / 4.0,
            );
            pts.sort_by(|a, b| {
                let ta = (a.y - centroid.y).atan2(a.x - centroid.x);
                let tb = (b.y - centroid.y).atan2(b.x - centroid.x);
                ta.partial_cmp(&tb).unwrap()
            });
            // CCW ring (p0, p1, p2, p3) -> label order (p0, p1, p3, p2).
            let corners = [pts[0], pts[1], pts[3], pts[2]];
            if let Ok(slot) = validate_slot(corners, unit) {
                if slot.area() > 0.05 {
                    return slot;
                }
            }
        }
    }

    /// Point-in-convex-polygon by sign checks; independent of the clipper.
    pub fn inside_convex(ring: &[Point2<f64>], p: Point2<f64>) -> bool {
        let n = ring.len();
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            if (b - a).perp(&(p - a)) < 0.0 {
                return false;
            }
        }
        true
    }

    /// Pixel-center rasterization count of |A|, |B|, |A∩B| on a `grid`²
    /// lattice over the joint bounding box, done row-wise for speed.
    pub fn rasterize_overlap(
        a: &[Point2<f64>],
        b: &[Point2<f64>],
        grid: usize,
    ) -> (f64, f64, f64) {
        let all = a.iter().chain(b.iter());
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in all {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let pad = 1e-6;
        x0 -= pad;
        y0 -= pad;
        x1 += pad;
        y1 += pad;
        let sx = (x1 - x0) / grid as f64;
        let sy = (y1 - y0) / grid as f64;
        let cell = sx * sy;

        // A convex polygon intersects a horizontal line in one interval.
        let row_interval = |ring: &[Point2<f64>], y: f64| -> Option<(f64, f64)> {
            let n = ring.len();
            let (mut lo, mut hi) = (f64::MIN, f64::MAX);
            // Clip the line against each half-plane: edge (a,b) keeps points
            // with cross(b-a, p-a) >= 0; restricted to the line this is a
            // linear inequality in x.
            for i in 0..n {
                let pa = ring[i];
                let pb = ring[(i + 1) % n];
                let ex = pb.x - pa.x;
                let ey = pb.y - pa.y;
                // ex*(y-ay) - ey*(x-ax) >= 0  =>  -ey*x >= -ex*(y-ay) - ey*(-ax)
                let c0 = ex * (y - pa.y) + ey * pa.x;
                if ey.abs() < 1e-300 {
                    if ex * (y - pa.y) < 0.0 {
                        return None;
                    }
                } else if ey > 0.0 {
                    hi = hi.min(c0 / ey);
                } else {
                    lo = lo.max(c0 / ey);
                }
            }
            (lo <= hi).then_some((lo, hi))
        };

        let count_in = |iv: Option<(f64, f64)>| -> usize {
            match iv {
                None => 0,
                Some((lo, hi)) => {
                    // Pixel centers x0 + (i + 0.5) sx within [lo, hi].
                    let i_lo = ((lo - x0) / sx - 0.5).ceil().max(0.0) as usize;
                    let i_hi = ((hi - x0) / sx - 0.5).floor().min(grid as f64 - 1.0);
                    if i_hi < 0.0 {
                        0
                    } else {
                        (i_hi as usize + 1).saturating_sub(i_lo)
                    }
                }
            }
        };

        let (mut ca, mut cb, mut cab) = (0usize, 0usize, 0usize);
        for j in 0..grid {
            let y = y0 + (j as f64 + 0.5) * sy;
            let ia = row_interval(a, y);
            let ib = row_interval(b, y);
            ca += count_in(ia);
            cb += count_in(ib);
            if let (Some((alo, ahi)), Some((blo, bhi))) = (ia, ib) {
                cab += count_in(Some((alo.max(blo), ahi.min(bhi))));
            }
        }
        (ca as f64 * cell, cb as f64 * cell, cab as f64 * cell)
    }
}
