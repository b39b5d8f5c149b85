//! Pinhole camera model: per-pixel rays, single-pixel back-projection,
//! unit-box mesh normalization, and orbiting view rings.
//!
//! Conventions, used by every module in this crate:
//! - right-handed coordinates, the camera looks down +z,
//! - pixel row Y increases with camera-frame y (y is "down" in the image),
//! - rays sample pixel centers, i.e. pixel (X, Y) is traced through
//!   (X + 0.5, Y + 0.5),
//! - depth is the z-coordinate of a point in the camera frame, not the ray
//!   parameter of a normalized direction.

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};
use crate::mesh::TriMesh;
use serde::{Deserialize, Serialize};

/// Pinhole intrinsics plus image resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr")]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Deserialize)]
struct IntrinsicsRepr {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl TryFrom<IntrinsicsRepr> for Intrinsics {
    type Error = Error;
    fn try_from(r: IntrinsicsRepr) -> Result<Self> {
        Intrinsics::new(r.fx, r.fy, r.cx, r.cy, r.width, r.height)
    }
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if !(fx > 0.0) || !(fy > 0.0) {
            return Err(Error::invalid(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if width < 1 || height < 1 {
            return Err(Error::invalid(format!(
                "image size must be at least 1x1, got {width}x{height}"
            )));
        }
        if !(0.0..=width as f64).contains(&cx) || !(0.0..=height as f64).contains(&cy) {
            return Err(Error::invalid(format!(
                "principal point ({cx}, {cy}) outside image {width}x{height}"
            )));
        }
        Ok(Intrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Centered principal point, `fx = fy = height`. With the default orbit
    /// distance of 2 a unit box roughly half-fills the frame.
    pub fn centered(width: u32, height: u32) -> Result<Self> {
        let f = height as f64;
        Intrinsics::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    #[inline]
    pub fn in_range(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }

    /// Ray through the center of pixel (x, y), without the range check.
    /// The z-component is exactly 1.
    #[inline]
    pub(crate) fn pixel_ray(&self, x: u32, y: u32) -> Vec3 {
        Vec3::new(
            (x as f64 + 0.5 - self.cx) / self.fx,
            (y as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        )
    }
}

/// Direction (camera frame, unnormalized) of the ray through pixel (x, y).
///
/// The returned vector has z exactly 1, so a point at z-depth `d` along the
/// ray is `d * ray_direction(..)`.
pub fn ray_direction(intr: &Intrinsics, x: u32, y: u32) -> Result<Vec3> {
    if !intr.in_range(x, y) {
        return Err(Error::invalid(format!(
            "pixel ({x}, {y}) outside image {}x{}",
            intr.width, intr.height
        )));
    }
    Ok(intr.pixel_ray(x, y))
}

/// Back-projects pixel (x, y) at the given z-depth into the camera frame.
///
/// Depth 0 marks background and yields `None`; negative depth is an error.
/// The result's z equals `depth` exactly, and the point is componentwise
/// `depth * ray_direction(intr, x, y)`.
pub fn backproject_pixel(intr: &Intrinsics, x: u32, y: u32, depth: f64) -> Result<Option<Vec3>> {
    if !(depth >= 0.0) {
        return Err(Error::invalid(format!(
            "depth must be non-negative, got {depth}"
        )));
    }
    let ray = ray_direction(intr, x, y)?;
    if depth == 0.0 {
        return Ok(None);
    }
    Ok(Some(Vec3::new(ray.x * depth, ray.y * depth, depth)))
}

/// Rigid world-to-camera map: `p_cam = R * p_world + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr")]
pub struct RigidPose {
    /// Row-major orthonormal rotation, determinant +1.
    pub rotation: Mat3,
    pub translation: Vec3,
}

#[derive(Deserialize)]
struct PoseRepr {
    rotation: Mat3,
    translation: Vec3,
}

impl TryFrom<PoseRepr> for RigidPose {
    type Error = Error;
    fn try_from(r: PoseRepr) -> Result<Self> {
        RigidPose::new(r.rotation, r.translation)
    }
}

impl RigidPose {
    pub const IDENTITY: RigidPose = RigidPose {
        rotation: Mat3::IDENTITY,
        translation: Vec3::ZERO,
    };

    /// Validates orthonormality (`R^T R = I` within 1e-9) and determinant +1.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let err = rotation.orthonormality_error();
        if err > 1e-9 {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (max |R^T R - I| = {err:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "rotation determinant must be +1, got {det}"
            )));
        }
        Ok(RigidPose {
            rotation,
            translation,
        })
    }

    /// Camera at `eye` looking at `target`, `up` fixing the roll.
    ///
    /// With the y-down image convention the camera-frame y axis points
    /// opposite `up`.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<Self> {
        let forward = target - eye;
        if forward.norm_sq() == 0.0 {
            return Err(Error::invalid("look_at: eye and target coincide"));
        }
        let z = forward.normalized();
        let x = z.cross(up);
        if x.norm_sq() < 1e-24 {
            return Err(Error::invalid("look_at: view direction parallel to up"));
        }
        let x = x.normalized();
        let y = z.cross(x);
        let rotation = Mat3::from_rows(x, y, z);
        let translation = -rotation.mul_vec(eye);
        RigidPose::new(rotation, translation)
    }

    /// World point to camera frame.
    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.translation
    }

    /// Camera-frame point back to world.
    #[inline]
    pub fn apply_inverse(&self, p: Vec3) -> Vec3 {
        self.rotation.transpose_mul_vec(p - self.translation)
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        self.rotation.transpose_mul_vec(-self.translation)
    }

    /// Rotates a camera-frame direction into the world frame.
    #[inline]
    pub fn rotate_inverse(&self, d: Vec3) -> Vec3 {
        self.rotation.transpose_mul_vec(d)
    }
}

/// A camera: intrinsics, pose, and a label identifying the view.
///
/// Serializes as the flat JSON document
/// `{fx, fy, cx, cy, width, height, pose: {rotation, translation}, label}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewConfig {
    #[serde(flatten)]
    pub intrinsics: Intrinsics,
    pub pose: RigidPose,
    pub label: String,
}

impl ViewConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("view config serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::invalid(format!("bad view config JSON: {e}")))
    }
}

/// `p' = scale * (p + translation)`; records how a mesh was normalized so the
/// mapping can be undone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitBoxTransform {
    pub scale: f64,
    pub translation: Vec3,
}

impl UnitBoxTransform {
    pub const IDENTITY: UnitBoxTransform = UnitBoxTransform {
        scale: 1.0,
        translation: Vec3::ZERO,
    };

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        (p + self.translation) * self.scale
    }

    #[inline]
    pub fn apply_inverse(&self, p: Vec3) -> Vec3 {
        p / self.scale - self.translation
    }
}

/// Centers the mesh at the origin and scales its longest bounding-box edge
/// to exactly 1. Returns the normalized mesh and the applied transform.
pub fn normalize_unit_box(mesh: &TriMesh) -> Result<(TriMesh, UnitBoxTransform)> {
    if mesh.vertex_count() == 0 {
        return Err(Error::invalid("cannot normalize a mesh with no vertices"));
    }
    let bb = mesh.aabb();
    let extent = bb.extent();
    let longest = extent.x.max(extent.y).max(extent.z);
    if longest <= 0.0 {
        return Err(Error::degenerate(
            "all mesh vertices coincide; unit-box scale undefined",
        ));
    }
    let transform = UnitBoxTransform {
        scale: 1.0 / longest,
        translation: -bb.center(),
    };
    Ok((mesh.transformed(transform.scale, transform.translation), transform))
}

/// One camera per azimuth angle (degrees), orbiting the origin about the
/// vertical y axis at `distance`, looking at the origin with up = +y.
///
/// Angle 0 places the camera at (0, 0, -distance) looking down +z. Labels
/// carry the angle ("0", "45", "22.5", ...).
pub fn view_ring(angles_deg: &[f64], distance: f64, intr: &Intrinsics) -> Result<Vec<ViewConfig>> {
    if angles_deg.is_empty() {
        return Err(Error::invalid("view ring needs at least one angle"));
    }
    if !(distance > 0.0) {
        return Err(Error::invalid(format!(
            "view distance must be positive, got {distance}"
        )));
    }
    for (i, a) in angles_deg.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::invalid(format!("angle #{i} is not finite")));
        }
        if angles_deg[..i].contains(a) {
            return Err(Error::invalid(format!("duplicate view angle {a}")));
        }
    }
    angles_deg
        .iter()
        .map(|&deg| {
            let (sin, cos) = deg.to_radians().sin_cos();
            let eye = Vec3::new(-distance * sin, 0.0, -distance * cos);
            let pose = RigidPose::look_at(eye, Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0))?;
            Ok(ViewConfig {
                intrinsics: *intr,
                pose,
                label: angle_label(deg),
            })
        })
        .collect()
}

/// Formats an angle for labels and directory names: integral values lose the
/// trailing ".0".
pub fn angle_label(deg: f64) -> String {
    if deg == deg.trunc() {
        format!("{}", deg as i64)
    } else {
        format!("{deg}")
    }
}
