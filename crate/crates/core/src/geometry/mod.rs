//! Pinhole camera math, gaze-angle conventions and the geometric primitives
//! the scene-level losses are built from.
//!
//! Conventions:
//! - camera coordinates are right-handed, `+z` along the optical axis,
//!   lengths in millimetres;
//! - image coordinates are pixels relative to the principal point;
//! - gaze angles map to directions as `(cosθ·sinφ, sinθ, −cosθ·cosφ)`, so
//!   `(0, 0)` looks straight back at the camera and negating the yaw mirrors
//!   the direction horizontally.

mod linalg;

pub use linalg::{Mat3, Vec2, Vec3};

use thiserror::Error;

use crate::scalar::Scalar;

pub type Point2D<T = f64> = Vec2<T>;
pub type Point3D<T = f64> = Vec3<T>;

/// Minimum `|dir · normal|` accepted by [`ray_plane_intersect`].
pub const EPS_PARALLEL: f64 = 1e-8;

/// Projected gaze directions shorter than this fraction of the focal length
/// are treated as pointing along the projection ray.
pub const DEGENERATE_PROJECTION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is not in front of the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("depth must be positive, got {z}")]
    NonPositiveDepth { z: f64 },
    #[error("ray is parallel to the plane (|dir·n| = {cos})")]
    Parallel { cos: f64 },
    #[error("gaze projects to a zero-length image direction")]
    Degenerate,
    #[error("points coincide")]
    Coincident,
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
}

/// Gaze pitch `θ` and yaw `φ` in radians.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct GazeAngles<T = f64> {
    pub pitch: T,
    pub yaw: T,
}

impl<T: Scalar> GazeAngles<T> {
    pub fn new(pitch: T, yaw: T) -> Self {
        Self { pitch, yaw }
    }

    /// Same gaze seen in a horizontally mirrored image.
    pub fn mirrored(self) -> Self {
        Self::new(self.pitch, -self.yaw)
    }
}

/// A direction of unit length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec3<T = f64>(Vec3<T>);

impl<T: Scalar> UnitVec3<T> {
    /// Normalize `v`; `None` for the zero vector or non-finite input.
    pub fn normalize(v: Vec3<T>) -> Option<Self> {
        let n = v.norm();
        if n.re() > 0.0 && n.is_finite() {
            Some(Self(v.scale(n.recip())))
        } else {
            None
        }
    }

    /// Wrap a vector the caller knows to be unit length.
    pub fn new_unchecked(v: Vec3<T>) -> Self {
        Self(v)
    }

    pub fn as_vec(self) -> Vec3<T> {
        self.0
    }

    pub fn dot(self, o: Self) -> T {
        self.0.dot(o.0)
    }

    pub fn lift<U: Scalar>(self) -> UnitVec3<U> {
        UnitVec3(self.0.lift())
    }
}

impl<T: Scalar> std::ops::Neg for UnitVec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// Pinhole intrinsics. The principal point is in raw pixel coordinates; all
/// other image quantities in this crate are relative to it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub focal_px: f64,
    pub principal_point: Vec2<f64>,
    pub image_size: Vec2<f64>,
}

impl CameraIntrinsics {
    pub fn new(focal_px: f64, principal_point: Vec2<f64>, image_size: Vec2<f64>) -> Result<Self, GeometryError> {
        let cam = Self { focal_px, principal_point, image_size };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!("focal length {} is not positive", self.focal_px)));
        }
        if !(self.image_size.x > 0.0 && self.image_size.y > 0.0) || !self.image_size.is_finite() {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "image size {}x{} is not positive",
                self.image_size.x, self.image_size.y
            )));
        }
        if !self.principal_point.is_finite() {
            return Err(GeometryError::InvalidIntrinsics("principal point is not finite".into()));
        }
        Ok(())
    }

    pub fn with_focal(mut self, focal_px: f64) -> Self {
        self.focal_px = focal_px;
        self
    }

    pub fn to_centered(&self, raw: Vec2<f64>) -> Vec2<f64> {
        raw - self.principal_point
    }

    pub fn to_raw(&self, centered: Vec2<f64>) -> Vec2<f64> {
        centered + self.principal_point
    }

    /// Whether a centered image point falls inside the image bounds.
    pub fn contains(&self, centered: Vec2<f64>) -> bool {
        let raw = self.to_raw(centered);
        raw.x >= 0.0 && raw.y >= 0.0 && raw.x < self.image_size.x && raw.y < self.image_size.y
    }
}

/// Plane through `point` with unit `normal`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FacePlane<T = f64> {
    pub point: Vec3<T>,
    pub normal: UnitVec3<T>,
}

impl<T: Scalar> FacePlane<T> {
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        self.normal.as_vec().dot(p - self.point)
    }
}

pub fn angles_to_vector<T: Scalar>(g: GazeAngles<T>) -> UnitVec3<T> {
    let (sp, cp) = g.pitch.sin_cos();
    let (sy, cy) = g.yaw.sin_cos();
    UnitVec3::new_unchecked(Vec3::new(cp * sy, sp, -(cp * cy)))
}

/// Inverse of [`angles_to_vector`]; at the poles the yaw is reported as 0.
pub fn vector_to_angles<T: Scalar>(v: UnitVec3<T>) -> GazeAngles<T> {
    let v = v.as_vec();
    let y = v.y.max(-T::one()).min(T::one());
    let pitch = y.asin();
    if v.x.re() == 0.0 && v.z.re() == 0.0 {
        return GazeAngles::new(pitch, T::zero());
    }
    let mut yaw = v.x.atan2(-v.z);
    if yaw.re() <= -std::f64::consts::PI {
        yaw = yaw + T::of(2.0 * std::f64::consts::PI);
    }
    GazeAngles::new(pitch, yaw)
}

/// Angle in radians between two (not necessarily unit) vectors.
pub fn angle_between<T: Scalar>(a: Vec3<T>, b: Vec3<T>) -> T {
    a.cross(b).norm().atan2(a.dot(b))
}

pub fn project<T: Scalar>(p: Vec3<T>, cam: &CameraIntrinsics) -> Result<Vec2<T>, GeometryError> {
    if p.z.re() <= 0.0 {
        return Err(GeometryError::BehindCamera { z: p.z.re() });
    }
    let f = T::of(cam.focal_px);
    Ok(Vec2::new(f * p.x / p.z, f * p.y / p.z))
}

/// `(z·x/f, z·y/f, z)`: the point at depth `z` on the ray through `q`.
pub fn backproject<T: Scalar>(q: Vec2<T>, z: T, cam: &CameraIntrinsics) -> Result<Vec3<T>, GeometryError> {
    if !(z.re() > 0.0) {
        return Err(GeometryError::NonPositiveDepth { z: z.re() });
    }
    let f = T::of(cam.focal_px);
    Ok(Vec3::new(z * q.x / f, z * q.y / f, z))
}

/// Focal length from the larger image dimension, principal point at the
/// image center.
pub fn approximate_intrinsics(width: f64, height: f64) -> Result<CameraIntrinsics, GeometryError> {
    CameraIntrinsics::new(width.max(height), Vec2::new(width / 2.0, height / 2.0), Vec2::new(width, height))
}

pub fn cyclopean_eye_2d<T: Scalar>(left_eye: Vec2<T>, right_eye: Vec2<T>) -> Vec2<T> {
    let half = T::of(0.5);
    Vec2::new((left_eye.x + right_eye.x) * half, (left_eye.y + right_eye.y) * half)
}

/// Unit vector from the ear midpoint toward the nose tip.
pub fn heading_vector<T: Scalar>(ear_midpoint: Vec3<T>, nose_tip: Vec3<T>) -> Result<UnitVec3<T>, GeometryError> {
    UnitVec3::normalize(nose_tip - ear_midpoint).ok_or(GeometryError::Coincident)
}

pub fn face_plane<T: Scalar>(eye: Vec3<T>, heading: UnitVec3<T>) -> FacePlane<T> {
    FacePlane { point: eye, normal: heading }
}

/// Intersection of the ray `origin + t·dir` with `plane`.
///
/// Negative `t` is returned as is; callers decide whether a hit behind the
/// origin counts.
pub fn ray_plane_intersect<T: Scalar>(
    origin: Vec3<T>,
    dir: UnitVec3<T>,
    plane: &FacePlane<T>,
) -> Result<(Vec3<T>, T), GeometryError> {
    ray_plane_intersect_eps(origin, dir, plane, EPS_PARALLEL)
}

pub fn ray_plane_intersect_eps<T: Scalar>(
    origin: Vec3<T>,
    dir: UnitVec3<T>,
    plane: &FacePlane<T>,
    eps_parallel: f64,
) -> Result<(Vec3<T>, T), GeometryError> {
    let n = plane.normal.as_vec();
    let denom = n.dot(dir.as_vec());
    if denom.re().abs() <= eps_parallel {
        return Err(GeometryError::Parallel { cos: denom.re().abs() });
    }
    let t = n.dot(plane.point - origin) / denom;
    Ok((origin + dir.as_vec().scale(t), t))
}

/// Unit image-plane direction in which a gaze ray leaving `eye3d` moves
/// when projected: proportional to `(f·gx − x·gz, f·gy − y·gz)`.
pub fn project_gaze_dir<T: Scalar>(
    eye3d: Vec3<T>,
    gaze: UnitVec3<T>,
    cam: &CameraIntrinsics,
) -> Result<Vec2<T>, GeometryError> {
    let p = project(eye3d, cam)?;
    let g = gaze.as_vec();
    let f = T::of(cam.focal_px);
    let d = Vec2::new(f * g.x - p.x * g.z, f * g.y - p.y * g.z);
    let n = d.norm();
    if n.re() <= DEGENERATE_PROJECTION_TOL * cam.focal_px {
        return Err(GeometryError::Degenerate);
    }
    Ok(d.scale(n.recip()))
}

/// Rotation taking camera coordinates to the eye-normalized frame whose
/// `z` axis points from the camera through `eye3d`: the minimal rotation
/// carrying the unit eye ray onto `(0, 0, 1)`.
pub fn normalized_frame<T: Scalar>(eye3d: Vec3<T>) -> Result<Mat3<T>, GeometryError> {
    if eye3d.z.re() <= 0.0 {
        return Err(GeometryError::BehindCamera { z: eye3d.z.re() });
    }
    let p = eye3d.scale(eye3d.norm().recip());
    // k = p × ẑ, c = p·ẑ; R = I + [k]× + [k]×² / (1 + c)
    let (kx, ky) = (p.y, -p.x);
    let c = p.z;
    let s = (T::one() + c).recip();
    let o = T::one();
    let rows = [
        [o - ky * ky * s, kx * ky * s, ky],
        [kx * ky * s, o - kx * kx * s, -kx],
        [-ky, kx, o - (kx * kx + ky * ky) * s],
    ];
    Ok(Mat3::from_rows(rows))
}

/// Camera-frame direction of gaze angles expressed in the eye-normalized
/// frame of `eye3d`.
pub fn normalized_to_camera<T: Scalar>(eye3d: Vec3<T>, g: GazeAngles<T>) -> Result<UnitVec3<T>, GeometryError> {
    let r = normalized_frame(eye3d)?;
    Ok(UnitVec3::new_unchecked(r.transpose().mul_vec(angles_to_vector(g).as_vec())))
}

/// Gaze angles in the eye-normalized frame of `eye3d` for a camera-frame
/// direction.
pub fn camera_to_normalized<T: Scalar>(eye3d: Vec3<T>, dir: UnitVec3<T>) -> Result<GazeAngles<T>, GeometryError> {
    let r = normalized_frame(eye3d)?;
    Ok(vector_to_angles(UnitVec3::new_unchecked(r.mul_vec(dir.as_vec()))))
}
