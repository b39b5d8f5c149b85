//! Colored, layer-labeled point clouds: back-projection of peeled map sets
//! and area-weighted surface sampling (the usual ground-truth source).

use crate::error::{Error, Result};
use crate::maps::PeeledMapSet;
use crate::math::Vec3;
use crate::mesh::{Rgb, TriMesh};
use crate::peel::DEFAULT_FLAT_COLOR;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A set of 3D points with per-point color and source-layer label (1-based).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
    colors: Vec<Rgb>,
    layers: Vec<u8>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, colors: Vec<Rgb>, layers: Vec<u8>) -> Result<Self> {
        if points.len() != colors.len() || points.len() != layers.len() {
            return Err(Error::shape(format!(
                "points/colors/layers lengths differ: {}/{}/{}",
                points.len(),
                colors.len(),
                layers.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!(
                "point cloud contains a non-finite point ({}, {}, {})",
                p.x, p.y, p.z
            )));
        }
        Ok(PointCloud {
            points,
            colors,
            layers,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    pub fn layers(&self) -> &[u8] {
        &self.layers
    }

    pub fn push(&mut self, point: Vec3, color: Rgb, layer: u8) {
        self.points.push(point);
        self.colors.push(color);
        self.layers.push(layer);
    }

    /// Applies `f` to every point, keeping colors and labels.
    pub fn map_points(&self, f: impl Fn(Vec3) -> Vec3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|&p| f(p)).collect(),
            colors: self.colors.clone(),
            layers: self.layers.clone(),
        }
    }

    /// Replaces every point's color by its layer's display color
    /// (red, blue, green, yellow for layers 1-4, cycling beyond).
    pub fn colored_by_layer(&self) -> PointCloud {
        const LAYER_COLORS: [Rgb; 4] = [
            [255, 0, 0],   // layer 1: red
            [0, 0, 255],   // layer 2: blue
            [0, 255, 0],   // layer 3: green
            [255, 255, 0], // layer 4: yellow
        ];
        PointCloud {
            points: self.points.clone(),
            colors: self
                .layers
                .iter()
                .map(|&l| LAYER_COLORS[((l.max(1) - 1) % 4) as usize])
                .collect(),
            layers: self.layers.clone(),
        }
    }
}

/// Back-projects every non-background pixel of every layer into a camera
/// frame point cloud.
///
/// Points are emitted row-major and layer-minor (all layers of a pixel
/// before the next pixel), so the output order is deterministic. Pixels
/// with depth 0 contribute nothing.
pub fn backproject_maps(set: &PeeledMapSet) -> PointCloud {
    let mut cloud = PointCloud::default();
    let intr = &set.intrinsics;
    let n = set.n_layers();
    for y in 0..set.height() {
        for x in 0..set.width() {
            let px = set.pixel_index(x, y);
            let ray = intr.pixel_ray(x, y);
            for layer in 0..n {
                let d = set.depth_layer(layer)[px];
                if d > 0.0 && d.is_finite() {
                    let d = d as f64;
                    cloud.push(
                        Vec3::new(ray.x * d, ray.y * d, d),
                        set.rgb_layer(layer)[px],
                        (layer + 1) as u8,
                    );
                }
            }
        }
    }
    cloud
}

/// [`backproject_maps`], then undoes the view pose and unit-box transform
/// recorded in the set's meta (either may be absent), returning points in
/// the original world frame.
pub fn backproject_maps_world(set: &PeeledMapSet) -> PointCloud {
    let cloud = backproject_maps(set);
    let pose = set.meta.pose;
    let unit_box = set.meta.unit_box;
    cloud.map_points(|p| {
        let p = match &pose {
            Some(pose) => pose.apply_inverse(p),
            None => p,
        };
        match &unit_box {
            Some(ub) => ub.apply_inverse(p),
            None => p,
        }
    })
}

/// Uniform area-weighted random samples on the mesh surface, with
/// interpolated vertex colors (flat gray when the mesh has none). Layer
/// labels are all 1. Deterministic for a fixed seed.
pub fn sample_surface(mesh: &TriMesh, count: usize, seed: u64) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangle_count());
    let mut total = 0.0f64;
    for i in 0..mesh.triangle_count() {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::degenerate(
            "mesh has zero total surface area; cannot sample",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = PointCloud::default();
    for _ in 0..count {
        let target = rng.gen::<f64>() * total;
        let tri = cumulative.partition_point(|&c| c <= target).min(mesh.triangle_count() - 1);
        let [a, b, c] = mesh.triangle_vertices(tri);
        // Square-root warp for uniform density over the triangle.
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        let point = a * wa + b * wb + c * wc;
        let color = match mesh.colors() {
            Some(colors) => {
                let [ia, ib, ic] = mesh.triangles()[tri];
                let (ca, cb, cc) = (
                    colors[ia as usize],
                    colors[ib as usize],
                    colors[ic as usize],
                );
                let mut out = [0u8; 3];
                for ch in 0..3 {
                    let v = wa * ca[ch] as f64 + wb * cb[ch] as f64 + wc * cc[ch] as f64;
                    out[ch] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
                }
                out
            }
            None => DEFAULT_FLAT_COLOR,
        };
        cloud.push(point, color, 1);
    }
    Ok(cloud)
}
