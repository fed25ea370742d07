//! Exact 3×3 camera and projective transform algebra.
//!
//! Conventions used throughout the crate:
//!
//! - Pixel coordinates have the origin at the top-left corner, x right,
//!   y down.
//! - The camera looks along +z in its own frame.
//! - [`rotation_homography`] with positive `theta` rotates counter-clockwise
//!   in the usual mathematical orientation, which appears clockwise on
//!   screen because y points down.
//! - Planes store a unit normal and a perpendicular distance `d > 0` from
//!   the camera center; normals produced by plane fitting face the camera,
//!   so points `p` on the plane satisfy `n·p = -d`.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid intrinsics: fx and fy must be positive, got fx={fx}, fy={fy}")]
    InvalidIntrinsics { fx: f64, fy: f64 },
    #[error("matrix is not a rotation: {0}")]
    NotARotation(String),
    #[error("cannot normalize a zero-length vector")]
    ZeroVector,
    #[error("plane distance must be positive, got {0}")]
    InvalidPlane(f64),
    #[error("homography is singular or numerically degenerate (|det| = {0:.3e})")]
    DegenerateHomography(f64),
    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("need at least 4 point pairs, got {0}")]
    InsufficientPoints(usize),
    #[error("point maps to infinity (|w| < 1e-12)")]
    PointAtInfinity,
    #[error("value is not finite")]
    NonFinite,
}

/// Pinhole intrinsics. As a 3×3 matrix K it is upper triangular with
/// K[2][2] = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0 && cx.is_finite() && cy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics { fx, fy });
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Closed-form inverse of the intrinsic matrix.
    pub fn inverse_matrix(&self) -> Mat3 {
        Mat3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Map a pixel to a normalized image-plane ray (z = 1).
    pub fn unproject(&self, px: Vec2) -> Vec3 {
        Vec3::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy, 1.0)
    }

    /// Project a camera-frame point to pixel coordinates.
    pub fn project(&self, p: Vec3) -> Vec2 {
        Vec2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

const ROTATION_TOL: f64 = 1e-9;

/// A proper rotation matrix (orthonormal, det = +1 within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    pub fn from_matrix(m: Mat3) -> Result<Self, GeometryError> {
        let gram = m.transpose() * m;
        let ortho_err = (gram - Mat3::identity()).norm();
        if ortho_err > ROTATION_TOL * 10.0 {
            return Err(GeometryError::NotARotation(format!(
                "RᵀR deviates from identity by {ortho_err:.3e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL * 10.0 {
            return Err(GeometryError::NotARotation(format!("det = {det}")));
        }
        Ok(Rotation(m))
    }

    /// Rotation about a coordinate axis (0 = x, 1 = y, 2 = z) by `radians`.
    pub fn about_axis(axis: usize, radians: f64) -> Self {
        let (s, c) = radians.sin_cos();
        let m = match axis {
            0 => Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            1 => Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            _ => Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        };
        Rotation(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0 * v
    }
}

/// Unit 3-vector (norm 1 within 1e-12).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector3(Vec3);

impl UnitVector3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        Self::from_vector(Vec3::new(x, y, z))
    }

    /// Normalizes the input; errors on (near-)zero vectors.
    pub fn from_vector(v: Vec3) -> Result<Self, GeometryError> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(UnitVector3(v / n))
    }

    pub fn vector(&self) -> Vec3 {
        self.0
    }

    pub fn flipped(&self) -> UnitVector3 {
        UnitVector3(-self.0)
    }
}

/// Plane at perpendicular distance `d > 0` from the camera center.
///
/// With a camera-facing normal, points `p` on the plane satisfy
/// `normal·p = -d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: UnitVector3,
    pub d: f64,
}

impl Plane {
    pub fn new(normal: UnitVector3, d: f64) -> Result<Self, GeometryError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(GeometryError::InvalidPlane(d));
        }
        Ok(Plane { normal, d })
    }
}

/// Rigid transform mapping frame A coordinates to frame B:
/// `x_b = R x_a + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    /// Inverse transform (maps frame B back to frame A).
    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        let t = -(rt.apply(self.translation));
        Pose {
            rotation: rt,
            translation: t,
        }
    }

    /// Composition: `(self ∘ other)(p) = self(other(p))`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: Rotation(self.rotation.0 * other.rotation.0),
            translation: self.rotation.apply(other.translation) + self.translation,
        }
    }
}

/// 3×3 projective transform, kept normalized: the bottom-right entry is 1
/// whenever its magnitude exceeds 1e-9, otherwise the Frobenius norm is 1
/// with the first row-major entry of magnitude > 1e-9 made positive (the
/// sign fix keeps serialization deterministic).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Mat3);

impl Homography {
    pub fn identity() -> Self {
        Homography(Mat3::identity())
    }

    pub fn from_matrix(m: Mat3) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let det = m.determinant();
        if det.abs() < 1e-12 {
            return Err(GeometryError::DegenerateHomography(det.abs()));
        }
        Ok(Homography(normalize_homography(m)))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Row-major flat view, matching the JSON layout.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn from_row_major(v: &[f64; 9]) -> Result<Self, GeometryError> {
        Homography::from_matrix(Mat3::new(
            v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8],
        ))
    }
}

fn normalize_homography(m: Mat3) -> Mat3 {
    let h33 = m[(2, 2)];
    if h33.abs() > 1e-9 {
        return m / h33;
    }
    let mut n = m / m.norm();
    let lead = n.transpose().iter().copied().find(|v| v.abs() > 1e-9);
    if let Some(lead) = lead {
        if lead < 0.0 {
            n = -n;
        }
    }
    n
}

/// Rotation aligning `o` onto `n`: returns R with `R·o = n`.
///
/// Uses `R = I + [v]ₓ + [v]ₓ² (1-c)/s²` with `v = o×n`, `c = o·n`,
/// `s = ‖v‖`. The antiparallel singularity (`s² < 1e-12`, `c < 0`) is
/// resolved internally as a 180° rotation about a deterministic axis
/// perpendicular to `o`: zero o's largest-magnitude component, swap the
/// other two and negate one; if `o` is axis-aligned that vector vanishes,
/// in which case the next coordinate axis (cyclically) is used.
pub fn align_rotation(o: UnitVector3, n: UnitVector3) -> Rotation {
    let o = o.vector();
    let n = n.vector();
    let v = o.cross(&n);
    let c = o.dot(&n);
    let s2 = v.norm_squared();

    if s2 < 1e-12 {
        if c > 0.0 {
            return Rotation::identity();
        }
        let axis = perpendicular_axis(o);
        // Rodrigues at θ = π: R = 2uuᵀ - I.
        let m = 2.0 * axis * axis.transpose() - Mat3::identity();
        return Rotation(m);
    }

    let vx = skew(v);
    let m = Mat3::identity() + vx + vx * vx * ((1.0 - c) / s2);
    Rotation(m)
}

fn skew(v: Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn perpendicular_axis(o: Vec3) -> Vec3 {
    let abs = [o.x.abs(), o.y.abs(), o.z.abs()];
    let k = (0..3).max_by(|&a, &b| abs[a].total_cmp(&abs[b])).unwrap();
    let (i, j) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut p = Vec3::zeros();
    p[i] = -o[j];
    p[j] = o[i];
    if p.norm() < 1e-9 {
        // o is axis-aligned: any perpendicular axis works; pick the next one.
        p = Vec3::zeros();
        p[(k + 1) % 3] = 1.0;
    }
    p.normalize()
}

/// Plane-induced rectifying homography `H = K (R - t nᵀ / d) K⁻¹`.
///
/// `(R, t)` maps source-camera coordinates to target-camera coordinates and
/// the plane is expressed in the source frame with a camera-facing normal
/// (`n·p = -d` for points p on the plane). The result maps source pixels of
/// plane points to target pixels.
pub fn rectifying_homography(
    k: &Intrinsics,
    r: &Rotation,
    t: Vec3,
    plane: &Plane,
) -> Result<Homography, GeometryError> {
    let n = plane.normal.vector();
    let core = r.matrix() - t * n.transpose() / plane.d;
    let m = k.matrix() * core * k.inverse_matrix();
    Homography::from_matrix(m)
}

/// Least-squares DLT homography from ≥ 4 point pairs, with Hartley
/// isotropic normalization. For 4 exact non-degenerate pairs the transfer
/// error is zero to numerical precision.
pub fn homography_from_point_pairs(pairs: &[(Vec2, Vec2)]) -> Result<Homography, GeometryError> {
    if pairs.len() < 4 {
        return Err(GeometryError::InsufficientPoints(pairs.len()));
    }
    let (t_src, src) = hartley_normalize(pairs.iter().map(|p| p.0))?;
    let (t_dst, dst) = hartley_normalize(pairs.iter().map(|p| p.1))?;

    if pairs.len() == 4 {
        check_no_collinear_triple(&src)?;
    }

    let n = pairs.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(2 * n, 9);
    for (idx, (s, d)) in src.iter().zip(dst.iter()).enumerate() {
        let (x, y) = (s.x, s.y);
        let (u, v) = (d.x, d.y);
        let r0 = 2 * idx;
        a.set_row(
            r0,
            &nalgebra::RowDVector::from_row_slice(&[
                -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u,
            ]),
        );
        a.set_row(
            r0 + 1,
            &nalgebra::RowDVector::from_row_slice(&[
                0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v,
            ]),
        );
    }

    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let sv = &svd.singular_values;
    // A rank deficit beyond the expected 1-dimensional null space means the
    // configuration does not determine a unique homography.
    if sv.len() >= 2 && sv[sv.len() - 2] < 1e-9 * sv[0].max(1.0) {
        return Err(GeometryError::DegenerateConfiguration(
            "point pairs do not determine a unique homography".into(),
        ));
    }
    let h = vt.row(vt.nrows() - 1);
    let hn = Mat3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);

    let m = t_dst
        .try_inverse()
        .ok_or(GeometryError::DegenerateConfiguration(
            "normalization transform not invertible".into(),
        ))?
        * hn
        * t_src;
    Homography::from_matrix(m).map_err(|_| {
        GeometryError::DegenerateConfiguration("estimated homography is singular".into())
    })
}

fn hartley_normalize(
    points: impl Iterator<Item = Vec2> + Clone,
) -> Result<(Mat3, Vec<Vec2>), GeometryError> {
    let pts: Vec<Vec2> = points.collect();
    let n = pts.len() as f64;
    let centroid = pts.iter().fold(Vec2::zeros(), |a, p| a + p) / n;
    let mean_dist = pts.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n;
    if mean_dist < 1e-12 {
        return Err(GeometryError::DegenerateConfiguration(
            "all points coincide".into(),
        ));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Mat3::new(s, 0.0, -s * centroid.x, 0.0, s, -s * centroid.y, 0.0, 0.0, 1.0);
    let normed = pts.iter().map(|p| (p - centroid) * s).collect();
    Ok((t, normed))
}

fn check_no_collinear_triple(pts: &[Vec2]) -> Result<(), GeometryError> {
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            for k in (j + 1)..pts.len() {
                let ab = pts[j] - pts[i];
                let ac = pts[k] - pts[i];
                let area = (ab.x * ac.y - ab.y * ac.x).abs();
                if area < 1e-9 {
                    return Err(GeometryError::DegenerateConfiguration(format!(
                        "source points {i}, {j}, {k} are collinear"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Apply a homography to a pixel with projective division.
pub fn apply_homography(h: &Homography, p: Vec2) -> Result<Vec2, GeometryError> {
    let q = h.matrix() * Vec3::new(p.x, p.y, 1.0);
    if q.z.abs() < 1e-12 {
        return Err(GeometryError::PointAtInfinity);
    }
    Ok(Vec2::new(q.x / q.z, q.y / q.z))
}

/// `compose(H1, H2)` applied to p equals `H1` applied to (`H2` applied to p).
pub fn compose(h1: &Homography, h2: &Homography) -> Result<Homography, GeometryError> {
    Homography::from_matrix(h1.matrix() * h2.matrix())
}

pub fn invert(h: &Homography) -> Result<Homography, GeometryError> {
    let inv = h
        .matrix()
        .try_inverse()
        .ok_or_else(|| GeometryError::DegenerateHomography(h.matrix().determinant().abs()))?;
    Homography::from_matrix(inv)
}

/// In-plane rotation by `theta_deg` about a pixel `center`.
///
/// Positive angles rotate counter-clockwise in math orientation (clockwise
/// on screen, where y points down).
pub fn rotation_homography(theta_deg: f64, center: Vec2) -> Homography {
    let (s, c) = theta_deg.to_radians().sin_cos();
    let (cx, cy) = (center.x, center.y);
    // T(center) · R(θ) · T(-center), written out.
    let m = Mat3::new(
        c,
        -s,
        cx - c * cx + s * cy,
        s,
        c,
        cy - s * cx - c * cy,
        0.0,
        0.0,
        1.0,
    );
    Homography(m)
}
