//! Small fixed-size linear algebra used throughout the crate.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction; `None` for (near) zero vectors.
    pub fn try_normalize(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 1e-300 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn normalize(self) -> Vec3 {
        self.try_normalize().unwrap_or(Vec3::ZERO)
    }

    pub fn mul_elem(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn max_elem(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn min_elem(self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Default for Mat3 {
    fn default() -> Self {
        Mat3::IDENTITY
    }
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };
    pub const ZERO: Mat3 = Mat3 { m: [[0.0; 3]; 3] };

    pub const fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Mat3 { m }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3 {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn diag(d: Vec3) -> Self {
        Mat3 {
            m: [[d.x, 0.0, 0.0], [0.0, d.y, 0.0], [0.0, 0.0, d.z]],
        }
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.m[i])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let mut t = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Cross-product matrix: `skew(a) * b == a.cross(b)`.
    pub fn skew(a: Vec3) -> Mat3 {
        Mat3::from_rows([[0.0, -a.z, a.y], [a.z, 0.0, -a.x], [-a.y, a.x, 0.0]])
    }

    pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
        let mut o = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                o.m[i][j] = a[i] * b[j];
            }
        }
        o
    }

    /// Rodrigues' formula for the rotation `exp([w]×)`.
    pub fn exp_so3(w: Vec3) -> Mat3 {
        let theta2 = w.norm_squared();
        let k = Mat3::skew(w);
        let k2 = k * k;
        let (a, b) = if theta2 < 1e-16 {
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            let theta = theta2.sqrt();
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        Mat3::IDENTITY + k.scale(a) + k2.scale(b)
    }

    /// Rotation by `angle` about unit `axis`.
    pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
        Mat3::exp_so3(axis.normalize() * angle)
    }

    /// Nearest rotation by Gram–Schmidt on the columns (keeps column 2 direction fixed).
    pub fn orthonormalize(&self) -> Mat3 {
        let c2 = self.col(2).normalize();
        let c0 = (self.col(0) - c2 * self.col(0).dot(c2)).normalize();
        let c1 = c2.cross(c0);
        Mat3::from_cols(c0, c1, c2)
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut o = *self;
        for row in o.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        o
    }

    pub fn max_abs_diff(&self, o: &Mat3) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }

    /// Distance of `RᵀR` from identity and of `det R` from +1.
    pub fn orthonormality_error(&self) -> f64 {
        let rtr = self.transpose() * *self;
        rtr.max_abs_diff(&Mat3::IDENTITY).max((self.det() - 1.0).abs())
    }

    /// Angle of this rotation matrix, in radians.
    pub fn rotation_angle(&self) -> f64 {
        let tr = self.m[0][0] + self.m[1][1] + self.m[2][2];
        ((tr - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        r
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

/// Row-major 4×4 homogeneous matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4 {
    pub m: [[f64; 4]; 4],
}

impl Default for Mat4 {
    fn default() -> Self {
        Mat4::IDENTITY
    }
}

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4 {
        m: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    };
    pub const ZERO: Mat4 = Mat4 { m: [[0.0; 4]; 4] };

    /// `[[A, b], [0, 1]]`.
    pub fn affine(a: Mat3, b: Vec3) -> Mat4 {
        let mut r = Mat4::IDENTITY;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = a.m[i][j];
            }
            r.m[i][3] = b[i];
        }
        r
    }

    pub fn linear_part(&self) -> Mat3 {
        let mut a = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                a.m[i][j] = self.m[i][j];
            }
        }
        a
    }

    pub fn translation_part(&self) -> Vec3 {
        Vec3::new(self.m[0][3], self.m[1][3], self.m[2][3])
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        let m = &self.m;
        let w = m[3][0] * p.x + m[3][1] * p.y + m[3][2] * p.z + m[3][3];
        let v = Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
        );
        if w == 1.0 {
            v
        } else {
            v * (1.0 / w)
        }
    }

    /// Applies the matrix to a point at infinity (final coordinate zero).
    pub fn transform_direction(&self, d: Vec3) -> Vec3 {
        self.linear_part() * d
    }

    pub fn transpose(&self) -> Mat4 {
        let mut t = Mat4::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    /// Inverse of a rigid transform `[[R, t], [0, 1]]`.
    pub fn inverse_rigid(&self) -> Mat4 {
        let rt = self.linear_part().transpose();
        Mat4::affine(rt, -(rt * self.translation_part()))
    }

    pub fn scale(&self, s: f64) -> Mat4 {
        let mut o = *self;
        for row in o.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        o
    }

    /// Frobenius inner product.
    pub fn frobenius_dot(&self, o: &Mat4) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += self.m[i][j] * o.m[i][j];
            }
        }
        s
    }

    pub fn max_abs_diff(&self, o: &Mat4) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(self, o: Mat4) -> Mat4 {
        let mut r = self;
        for i in 0..4 {
            for j in 0..4 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, o: Mat4) -> Mat4 {
        let mut r = Mat4::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                r.m[i][j] = (0..4).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        r
    }
}
