//! Waypoint polylines with cumulative arc length.

use crate::error::WorldError;
use crate::geometry::Vec2;
use crate::scalar::Scalar;

/// Ordered waypoints a vehicle tracks.
///
/// `cum_length[0] == 0` and the sequence is strictly increasing; consecutive
/// duplicate points are rejected at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPath<T> {
    points: Vec<Vec2<T>>,
    cum_length: Vec<T>,
}

/// Orthogonal projection of a pose onto the polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    /// Index of the segment's first waypoint.
    pub segment: usize,
    /// Position along the segment, unclamped.
    pub fraction: T,
    /// Arc length from the first waypoint to the projected point.
    pub arc_length: T,
    pub point: Vec2<T>,
    /// Signed perpendicular distance, positive to the left of travel.
    pub offset: T,
}

impl<T: Scalar> WaypointPath<T> {
    pub fn new(points: Vec<Vec2<T>>) -> Result<Self, WorldError> {
        if points.len() < 2 {
            return Err(WorldError::DegeneratePath("fewer than two waypoints"));
        }
        let mut cum_length = Vec::with_capacity(points.len());
        cum_length.push(T::zero());
        for w in points.windows(2) {
            let seg = w[0].distance(w[1]);
            if !(seg > T::zero()) {
                return Err(WorldError::DegeneratePath("repeated consecutive waypoint"));
            }
            let last = *cum_length.last().unwrap();
            cum_length.push(last + seg);
        }
        Ok(Self { points, cum_length })
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn cum_length(&self) -> &[T] {
        &self.cum_length
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> T {
        *self.cum_length.last().unwrap()
    }

    pub fn segment_dir(&self, i: usize) -> Vec2<T> {
        (self.points[i + 1] - self.points[i]).normalized()
    }

    /// Nearest-segment projection. Ties go to the lower segment index.
    pub fn project(&self, pose: Vec2<T>) -> Projection<T> {
        let last_seg = self.points.len() - 2;
        let mut best: Option<(T, Projection<T>)> = None;
        for i in 0..=last_seg {
            let a = self.points[i];
            let b = self.points[i + 1];
            let d = b - a;
            let seg_len = self.cum_length[i + 1] - self.cum_length[i];
            let raw = (pose - a).dot(d) / d.norm_sq();
            // Only the end segments may extrapolate past the path.
            let lo = if i == 0 { T::neg_infinity() } else { T::zero() };
            let hi = if i == last_seg { T::infinity() } else { T::one() };
            let t = raw.max(lo).min(hi);
            let point = a.lerp(b, t);
            let dist = pose.distance(point);
            let better = match &best {
                None => true,
                Some((bd, _)) => dist < *bd,
            };
            if better {
                let offset = d.cross(pose - a) / seg_len;
                best = Some((
                    dist,
                    Projection {
                        segment: i,
                        fraction: t,
                        arc_length: self.cum_length[i] + t * seg_len,
                        point,
                        offset,
                    },
                ));
            }
        }
        best.unwrap().1
    }

    /// Signed arc length from the pose's projection to waypoint `target`,
    /// positive when the target lies ahead.
    pub fn distance_to(&self, pose: Vec2<T>, target: usize) -> Result<T, WorldError> {
        let cum = self
            .cum_length
            .get(target)
            .ok_or(WorldError::IndexOutOfRange {
                index: target,
                len: self.points.len(),
            })?;
        Ok(*cum - self.project(pose).arc_length)
    }

    /// Signed perpendicular distance to the polyline, positive to the left.
    pub fn cross_track_error(&self, pose: Vec2<T>) -> Result<T, WorldError> {
        let p = self.project(pose);
        let eps = T::lit(1e-9);
        let last_seg = self.points.len() - 2;
        if (p.segment == 0 && p.fraction < -eps) || (p.segment == last_seg && p.fraction > T::one() + eps) {
            return Err(WorldError::BeyondEndpoints);
        }
        Ok(p.offset)
    }

    /// Point at arc length `s`, extrapolating along the end segments.
    pub fn point_at(&self, s: T) -> Vec2<T> {
        let i = self.segment_at(s);
        let seg_len = self.cum_length[i + 1] - self.cum_length[i];
        let t = (s - self.cum_length[i]) / seg_len;
        self.points[i].lerp(self.points[i + 1], t)
    }

    /// Segment containing arc length `s` (clamped to the first/last segment).
    pub fn segment_at(&self, s: T) -> usize {
        let last_seg = self.points.len() - 2;
        // first index with cum > s, minus one
        let idx = self.cum_length.partition_point(|c| *c <= s);
        idx.saturating_sub(1).min(last_seg)
    }

    /// Signed Menger curvature at waypoint `i`, zero at the endpoints.
    pub fn vertex_curvature(&self, i: usize) -> T {
        if i == 0 || i + 1 >= self.points.len() {
            return T::zero();
        }
        let a = self.points[i - 1];
        let b = self.points[i];
        let c = self.points[i + 1];
        let area2 = (b - a).cross(c - a);
        let denom = a.distance(b) * b.distance(c) * a.distance(c);
        T::lit(2.0) * area2 / denom
    }

    /// Curvature at arc length `s`, linear between waypoint values.
    pub fn curvature_at(&self, s: T) -> T {
        let i = self.segment_at(s);
        let seg_len = self.cum_length[i + 1] - self.cum_length[i];
        let t = ((s - self.cum_length[i]) / seg_len).max(T::zero()).min(T::one());
        let k0 = self.vertex_curvature(i);
        let k1 = self.vertex_curvature(i + 1);
        k0 + (k1 - k0) * t
    }

    /// Heading change from the first to the last segment, unwrapped
    /// segment by segment.
    pub fn total_turn(&self) -> T {
        let mut acc = T::zero();
        for i in 1..self.points.len() - 1 {
            let d0 = self.segment_dir(i - 1);
            let d1 = self.segment_dir(i);
            acc += d0.cross(d1).atan2(d0.dot(d1));
        }
        acc
    }
}
