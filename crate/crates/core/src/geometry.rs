//! Planar vectors and the primitive curve pieces the intersection is built from.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn from_angle(theta: T) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    /// Rotated +90 degrees (to the left).
    pub fn perp_left(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut r = a % two_pi;
    if r <= -T::PI() {
        r += two_pi;
    } else if r > T::PI() {
        r -= two_pi;
    }
    r
}

/// A straight segment or a circular arc, parametrised by `t` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve<T> {
    Line {
        from: Vec2<T>,
        to: Vec2<T>,
    },
    Arc {
        center: Vec2<T>,
        radius: T,
        start_angle: T,
        /// Signed sweep, positive counter-clockwise.
        sweep: T,
    },
}

impl<T: Scalar> Curve<T> {
    /// Arc tangent to heading `h0` at `p0` and heading `h1` at `p1`.
    ///
    /// Returns `None` when the headings are parallel (use a line instead) or
    /// the two tangent normals do not meet at a common radius.
    pub fn tangent_arc(p0: Vec2<T>, h0: Vec2<T>, p1: Vec2<T>, h1: Vec2<T>) -> Option<Self> {
        let turn = h0.cross(h1);
        if turn.abs() < T::lit(1e-12) {
            return None;
        }
        // center = p0 + n0 * s = p1 + n1 * u, with n the left normals.
        let n0 = h0.perp_left();
        let n1 = h1.perp_left();
        let d = p1 - p0;
        let den = n0.cross(n1);
        let s = d.cross(n1) / den;
        let center = p0 + n0 * s;
        let r0 = center.distance(p0);
        let r1 = center.distance(p1);
        if (r0 - r1).abs() > T::lit(1e-9) * (T::one() + r0) {
            return None;
        }
        let a0 = (p0 - center).angle();
        let a1 = (p1 - center).angle();
        let mut sweep = wrap_angle(a1 - a0);
        if turn > T::zero() && sweep < T::zero() {
            sweep += T::PI() + T::PI();
        } else if turn < T::zero() && sweep > T::zero() {
            sweep -= T::PI() + T::PI();
        }
        Some(Curve::Arc {
            center,
            radius: r0,
            start_angle: a0,
            sweep,
        })
    }

    pub fn length(&self) -> T {
        match *self {
            Curve::Line { from, to } => from.distance(to),
            Curve::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn point_at(&self, t: T) -> Vec2<T> {
        match *self {
            Curve::Line { from, to } => from.lerp(to, t),
            Curve::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => center + Vec2::from_angle(start_angle + sweep * t) * radius,
        }
    }

    /// Parameter of a point assumed to lie on the curve's supporting line or circle.
    fn param_of(&self, p: Vec2<T>) -> T {
        match *self {
            Curve::Line { from, to } => {
                let d = to - from;
                (p - from).dot(d) / d.norm_sq()
            }
            Curve::Arc {
                center,
                start_angle,
                sweep,
                ..
            } => {
                let a = (p - center).angle();
                let mut delta = wrap_angle(a - start_angle);
                if sweep > T::zero() && delta < -T::lit(1e-12) {
                    delta += T::PI() + T::PI();
                } else if sweep < T::zero() && delta > T::lit(1e-12) {
                    delta -= T::PI() + T::PI();
                }
                delta / sweep
            }
        }
    }

    /// Points where the two curves cross, as `(t_self, t_other, point)`.
    ///
    /// Only crossings strictly inside both pieces are reported; shared
    /// endpoints are not crossings.
    pub fn crossings(&self, other: &Self) -> Vec<(T, T, Vec2<T>)> {
        let candidates = match (*self, *other) {
            (Curve::Line { from: a, to: b }, Curve::Line { from: c, to: d }) => {
                line_line(a, b, c, d).into_iter().collect::<Vec<_>>()
            }
            (Curve::Line { from, to }, Curve::Arc { center, radius, .. })
            | (Curve::Arc { center, radius, .. }, Curve::Line { from, to }) => {
                line_circle(from, to, center, radius)
            }
            (
                Curve::Arc {
                    center: c0,
                    radius: r0,
                    ..
                },
                Curve::Arc {
                    center: c1,
                    radius: r1,
                    ..
                },
            ) => circle_circle(c0, r0, c1, r1),
        };
        let eps = T::lit(1e-6);
        candidates
            .into_iter()
            .filter_map(|p| {
                let ta = self.param_of(p);
                let tb = other.param_of(p);
                let inside = |t: T| t > eps && t < T::one() - eps;
                (inside(ta) && inside(tb)).then_some((ta, tb, p))
            })
            .collect()
    }
}

fn line_line<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> Option<Vec2<T>> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den.abs() < T::lit(1e-12) {
        return None;
    }
    let t = (c - a).cross(s) / den;
    Some(a + r * t)
}

fn line_circle<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, r: T) -> Vec<Vec2<T>> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm_sq();
    let qb = T::lit(2.0) * f.dot(d);
    let qc = f.norm_sq() - r * r;
    let disc = qb * qb - T::lit(4.0) * qa * qc;
    if disc < T::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let two_a = qa + qa;
    let mut out = vec![a + d * ((-qb - sq) / two_a)];
    if sq > T::zero() {
        out.push(a + d * ((-qb + sq) / two_a));
    }
    out
}

fn circle_circle<T: Scalar>(c0: Vec2<T>, r0: T, c1: Vec2<T>, r1: T) -> Vec<Vec2<T>> {
    let dv = c1 - c0;
    let d = dv.norm();
    if d < T::lit(1e-12) || d > r0 + r1 || d < (r0 - r1).abs() {
        return Vec::new();
    }
    let a = (r0 * r0 - r1 * r1 + d * d) / (d + d);
    let h_sq = r0 * r0 - a * a;
    let base = c0 + dv * (a / d);
    if h_sq <= T::zero() {
        return vec![base];
    }
    let h = h_sq.sqrt();
    let off = dv.perp_left() * (h / d);
    vec![base + off, base - off]
}
