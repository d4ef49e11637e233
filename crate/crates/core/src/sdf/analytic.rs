use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::math::Vec3;

use super::SdfEval;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

/// Closed-form signed distance fields used by oracles, tests and the
/// synthetic scenes.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    /// Axis-aligned box with half extents `half`.
    Box { center: Vec3, half: Vec3 },
    /// Axis-aligned box with edges rounded by `radius` (outer extents `half`).
    RoundedBox { center: Vec3, half: Vec3, radius: f64 },
    /// Half space `up·x − height`.
    Plane { up: Vec3, height: f64 },
    /// Pointwise minimum; on ties the earlier operand wins.
    Union(Vec<Shape>),
    /// `factor · φ(x)`: not a distance field unless `factor == 1`.
    Scaled { inner: Box<Shape>, factor: f64 },
}

fn box_eval(p: Vec3, half: Vec3) -> (f64, Vec3) {
    let a = p.abs();
    let q = a - half;
    let outside = Vec3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0));
    let sign = Vec3::new(sgn(p.x), sgn(p.y), sgn(p.z));
    let on = outside.norm();
    if on > 0.0 {
        let g = outside.mul_elem(sign) * (1.0 / on);
        return (on, g);
    }
    // Inside: distance to the nearest face; the first axis wins ties.
    let mut axis = 0;
    for i in 1..3 {
        if q[i] > q[axis] {
            axis = i;
        }
    }
    let mut g = Vec3::ZERO;
    g[axis] = sign[axis];
    (q[axis], g)
}

fn sgn(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl Shape {
    pub fn sphere(center: Vec3, radius: f64) -> Shape {
        Shape::Sphere { center, radius }
    }

    pub fn plane(up: Vec3, height: f64) -> Shape {
        Shape::Plane { up: up.normalize(), height }
    }

    /// Signed distance only.
    pub fn distance(&self, x: Vec3) -> f64 {
        self.eval_parts(x).0
    }

    /// Signed distance and its analytic gradient.
    pub fn eval_parts(&self, x: Vec3) -> (f64, Vec3) {
        match self {
            Shape::Sphere { center, radius } => {
                let v = x - *center;
                let r = v.norm();
                // The gradient is undefined at the centre; pick +x.
                let n = v.try_normalize().unwrap_or(Vec3::X);
                (r - radius, n)
            }
            Shape::Box { center, half } => box_eval(x - *center, *half),
            Shape::RoundedBox { center, half, radius } => {
                let inner = *half - Vec3::splat(*radius);
                let (d, g) = box_eval(x - *center, inner);
                (d - radius, g)
            }
            Shape::Plane { up, height } => (up.dot(x) - height, *up),
            Shape::Union(shapes) => {
                let mut best = (f64::INFINITY, Vec3::Z);
                for s in shapes {
                    let e = s.eval_parts(x);
                    if e.0 < best.0 {
                        best = e;
                    }
                }
                best
            }
            Shape::Scaled { inner, factor } => {
                let (d, g) = inner.eval_parts(x);
                (d * factor, g * *factor)
            }
        }
    }

    pub fn eval(&self, x: Vec3) -> SdfEval {
        let (delta, normal) = self.eval_parts(x);
        SdfEval { delta, normal, feature: Vec::new() }
    }
}

/// Exact signed distance and gradient of `shape` at `x`.
pub fn eval_analytic(shape: &Shape, x: Vec3) -> SdfEval {
    shape.eval(x)
}
