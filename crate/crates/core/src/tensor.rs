//! Small fixed-size linear algebra: plane vectors and 2x2 matrices.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Counter-clockwise rotation by a right angle, `(-y, x)`.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn from_angle(phi: f64) -> Vec2 {
        let (s, c) = phi.sin_cos();
        Vec2::new(c, s)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// A 2x2 real matrix, row-major. Covariances, the structure tensor and
/// velocity gradients all use this type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Tensor2 {
    pub const ZERO: Tensor2 = Tensor2::new(0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Tensor2 = Tensor2::new(1.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Tensor2 { xx, xy, yx, yy }
    }

    #[inline]
    pub const fn diag(a: f64, b: f64) -> Self {
        Tensor2::new(a, 0.0, 0.0, b)
    }

    pub const fn symmetric(xx: f64, xy: f64, yy: f64) -> Self {
        Tensor2::new(xx, xy, xy, yy)
    }

    /// `u ⊗ v`, i.e. the matrix `u vᵀ`.
    #[inline]
    pub fn outer(u: Vec2, v: Vec2) -> Self {
        Tensor2::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Tensor2::new(c, -s, s, c)
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    #[inline]
    pub fn transpose(&self) -> Tensor2 {
        Tensor2::new(self.xx, self.yx, self.xy, self.yy)
    }

    #[inline]
    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    pub fn matmul(&self, o: &Tensor2) -> Tensor2 {
        Tensor2::new(
            self.xx * o.xx + self.xy * o.yx,
            self.xx * o.xy + self.xy * o.yy,
            self.yx * o.xx + self.yy * o.yx,
            self.yx * o.xy + self.yy * o.yy,
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.xx * self.xx + self.xy * self.xy + self.yx * self.yx + self.yy * self.yy).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yx.abs()).max(self.yy.abs())
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.xx, self.xy, self.yx, self.yy]
    }

    pub fn from_array(a: [f64; 4]) -> Tensor2 {
        Tensor2::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let off = 0.5 * (self.xy + self.yx);
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = half_diff.hypot(off);
        (mean - radius, mean + radius)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.xy - self.yx).abs() <= tol
    }

    /// Symmetric with no eigenvalue below `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_symmetric(tol) && self.sym_eigenvalues().0 >= -tol
    }

    /// `G A Gᵀ` for the rotation `G` by `angle`.
    pub fn rotated(&self, angle: f64) -> Tensor2 {
        let g = Tensor2::rotation(angle);
        g.matmul(self).matmul(&g.transpose())
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    #[inline]
    fn add(self, o: Tensor2) -> Tensor2 {
        Tensor2::new(self.xx + o.xx, self.xy + o.xy, self.yx + o.yx, self.yy + o.yy)
    }
}

impl AddAssign for Tensor2 {
    #[inline]
    fn add_assign(&mut self, o: Tensor2) {
        *self = *self + o;
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    #[inline]
    fn sub(self, o: Tensor2) -> Tensor2 {
        Tensor2::new(self.xx - o.xx, self.xy - o.xy, self.yx - o.yx, self.yy - o.yy)
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    #[inline]
    fn mul(self, s: f64) -> Tensor2 {
        Tensor2::new(self.xx * s, self.xy * s, self.yx * s, self.yy * s)
    }
}

impl Mul<Tensor2> for f64 {
    type Output = Tensor2;
    #[inline]
    fn mul(self, t: Tensor2) -> Tensor2 {
        t * self
    }
}
