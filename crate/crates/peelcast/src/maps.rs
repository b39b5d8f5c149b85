//! The peeled-map container: `n` depth layers plus `n` RGB layers sharing one
//! resolution, with the background conventions used across the crate.
//!
//! Background pixels carry depth exactly 0.0 and RGB (255, 255, 255); real
//! depths are positive and, per pixel, strictly increase across layers until
//! a suffix of zeros begins.

use crate::camera::{Intrinsics, RigidPose, UnitBoxTransform};
use crate::error::{Error, Result};
use crate::mesh::Rgb;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const BACKGROUND_DEPTH: f32 = 0.0;
pub const BACKGROUND_RGB: Rgb = [255, 255, 255];

/// Provenance carried alongside the maps and mirrored into `meta.json`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapMeta {
    /// View identifier, e.g. the azimuth in degrees.
    pub view_label: String,
    /// Where the pixels came from (mesh path, generator name, ...).
    pub source: String,
    /// World-to-camera pose used at render time, if known.
    pub pose: Option<RigidPose>,
    /// Unit-box normalization applied to the source mesh, if any.
    pub unit_box: Option<UnitBoxTransform>,
    /// Free-form provenance.
    pub extra: BTreeMap<String, String>,
    /// Filled by `decode_maps`; not serialized.
    pub validation: Option<ValidationReport>,
}

/// `n` peeled depth maps and `n` peeled RGB maps.
///
/// Layer 0 holds the visible surface; layer i holds the (i+1)-th ray
/// intersection. File names are 1-based (`depth_1.pfm` is layer 0).
#[derive(Debug, Clone)]
pub struct PeeledMapSet {
    width: u32,
    height: u32,
    depth: Vec<Vec<f32>>,
    rgb: Vec<Vec<Rgb>>,
    pub intrinsics: Intrinsics,
    pub meta: MapMeta,
}

impl PeeledMapSet {
    /// An all-background set with `n_layers` layers at the intrinsics'
    /// resolution.
    pub fn new_background(intrinsics: Intrinsics, n_layers: usize) -> Result<Self> {
        if n_layers == 0 {
            return Err(Error::invalid("a peeled map set needs at least 1 layer"));
        }
        let pixels = (intrinsics.width as usize) * (intrinsics.height as usize);
        Ok(PeeledMapSet {
            width: intrinsics.width,
            height: intrinsics.height,
            depth: vec![vec![BACKGROUND_DEPTH; pixels]; n_layers],
            rgb: vec![vec![BACKGROUND_RGB; pixels]; n_layers],
            intrinsics,
            meta: MapMeta::default(),
        })
    }

    /// Wraps existing buffers; every layer must be `width * height` long.
    pub fn from_layers(
        intrinsics: Intrinsics,
        depth: Vec<Vec<f32>>,
        rgb: Vec<Vec<Rgb>>,
        meta: MapMeta,
    ) -> Result<Self> {
        if depth.is_empty() || depth.len() != rgb.len() {
            return Err(Error::shape(format!(
                "need equal, nonzero depth/rgb layer counts, got {} and {}",
                depth.len(),
                rgb.len()
            )));
        }
        let pixels = (intrinsics.width as usize) * (intrinsics.height as usize);
        for (i, d) in depth.iter().enumerate() {
            if d.len() != pixels {
                return Err(Error::shape(format!(
                    "depth layer {} has {} pixels, expected {}",
                    i + 1,
                    d.len(),
                    pixels
                )));
            }
        }
        for (i, r) in rgb.iter().enumerate() {
            if r.len() != pixels {
                return Err(Error::shape(format!(
                    "rgb layer {} has {} pixels, expected {}",
                    i + 1,
                    r.len(),
                    pixels
                )));
            }
        }
        Ok(PeeledMapSet {
            width: intrinsics.width,
            height: intrinsics.height,
            depth,
            rgb,
            intrinsics,
            meta,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.depth.len()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        (self.width as usize) * (self.height as usize)
    }

    #[inline]
    pub fn pixel_index(&self, x: u32, y: u32) -> usize {
        (y as usize) * (self.width as usize) + (x as usize)
    }

    pub fn depth_layer(&self, layer: usize) -> &[f32] {
        &self.depth[layer]
    }

    pub fn rgb_layer(&self, layer: usize) -> &[Rgb] {
        &self.rgb[layer]
    }

    pub fn depth_layer_mut(&mut self, layer: usize) -> &mut [f32] {
        &mut self.depth[layer]
    }

    pub fn rgb_layer_mut(&mut self, layer: usize) -> &mut [Rgb] {
        &mut self.rgb[layer]
    }

    pub fn depth_at(&self, layer: usize, x: u32, y: u32) -> f32 {
        self.depth[layer][self.pixel_index(x, y)]
    }

    pub fn rgb_at(&self, layer: usize, x: u32, y: u32) -> Rgb {
        self.rgb[layer][self.pixel_index(x, y)]
    }

    /// Same layer counts and resolution.
    pub fn same_shape(&self, other: &PeeledMapSet) -> bool {
        self.n_layers() == other.n_layers()
            && self.width == other.width
            && self.height == other.height
    }

    /// Counts invariant violations; an all-zero report means the set is
    /// valid. Diagnostics, never an error.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let pixels = self.pixel_count();
        for layer in 0..self.n_layers() {
            for (&d, &c) in self.depth[layer].iter().zip(&self.rgb[layer]) {
                if !d.is_finite() {
                    report.non_finite_depth += 1;
                } else if d < 0.0 {
                    report.negative_depth += 1;
                }
                if d == 0.0 && c != BACKGROUND_RGB {
                    report.background_mismatches += 1;
                }
            }
        }
        for px in 0..pixels {
            for layer in 1..self.n_layers() {
                let prev = self.depth[layer - 1][px];
                let cur = self.depth[layer][px];
                if !prev.is_finite() || !cur.is_finite() {
                    continue; // already counted above
                }
                if cur != 0.0 && (prev == 0.0 || cur <= prev) {
                    // A nonzero depth after a zero, or a non-increasing pair.
                    report.monotonicity_violations += 1;
                }
            }
        }
        report
    }
}

/// Per-invariant violation counts from [`PeeledMapSet::validate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub negative_depth: u64,
    pub non_finite_depth: u64,
    pub monotonicity_violations: u64,
    pub background_mismatches: u64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        *self == ValidationReport::default()
    }

    pub fn total_violations(&self) -> u64 {
        self.negative_depth
            + self.non_finite_depth
            + self.monotonicity_violations
            + self.background_mismatches
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_clean() {
            write!(f, "clean")
        } else {
            write!(
                f,
                "{} violation(s): {} negative depth, {} non-finite, {} monotonicity, {} background",
                self.total_violations(),
                self.negative_depth,
                self.non_finite_depth,
                self.monotonicity_violations,
                self.background_mismatches
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set() -> PeeledMapSet {
        let intr = Intrinsics::new(8.0, 8.0, 4.0, 4.0, 8, 8).unwrap();
        PeeledMapSet::new_background(intr, 4).unwrap()
    }

    #[test]
    fn background_set_is_clean() {
        assert!(small_set().validate().is_clean());
    }

    #[test]
    fn monotonicity_violation_is_counted() {
        let mut s = small_set();
        let px = s.pixel_index(3, 3);
        s.depth_layer_mut(0)[px] = 2.0;
        s.rgb_layer_mut(0)[px] = [10, 10, 10];
        s.depth_layer_mut(1)[px] = 1.0; // closer than layer 1: violation
        s.rgb_layer_mut(1)[px] = [10, 10, 10];
        let r = s.validate();
        assert_eq!(r.monotonicity_violations, 1);
        assert_eq!(r.total_violations(), 1);
    }

    #[test]
    fn nonzero_after_zero_is_a_violation() {
        let mut s = small_set();
        let px = s.pixel_index(1, 1);
        s.depth_layer_mut(2)[px] = 3.0; // layers 1-2 are zero
        s.rgb_layer_mut(2)[px] = [9, 9, 9];
        let r = s.validate();
        assert_eq!(r.monotonicity_violations, 1);
    }

    #[test]
    fn background_color_mismatch_is_counted() {
        let mut s = small_set();
        let px = s.pixel_index(0, 0);
        s.rgb_layer_mut(0)[px] = [0, 0, 0]; // depth stays 0
        let r = s.validate();
        assert_eq!(r.background_mismatches, 1);
        assert!(!r.is_clean());
    }

    #[test]
    fn negative_and_nan_depths_are_counted() {
        let mut s = small_set();
        let px = s.pixel_index(2, 5);
        s.depth_layer_mut(0)[px] = -1.0;
        s.rgb_layer_mut(0)[px] = [1, 1, 1];
        s.depth_layer_mut(1)[px] = f32::NAN;
        s.rgb_layer_mut(1)[px] = [1, 1, 1];
        let r = s.validate();
        assert_eq!(r.negative_depth, 1);
        assert_eq!(r.non_finite_depth, 1);
    }

    #[test]
    fn shape_checks() {
        let intr = Intrinsics::new(8.0, 8.0, 4.0, 4.0, 8, 8).unwrap();
        let bad = PeeledMapSet::from_layers(
            intr,
            vec![vec![0.0; 63]],
            vec![vec![BACKGROUND_RGB; 64]],
            MapMeta::default(),
        );
        assert!(bad.is_err());
    }
}
