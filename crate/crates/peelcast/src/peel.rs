//! Depth peeling: multi-hit ray traversal and rendering of a mesh into a
//! peeled map set.
//!
//! Every ray records *all* of its surface intersections front to back, so a
//! layer k map holds the k-th thing the ray passes through. Coincident hits
//! (a ray crossing a shared edge reports both triangles) are merged by an
//! epsilon on the ray parameter before layers are assigned.

use crate::bvh::{Bvh, RawHit};
use crate::camera::ViewConfig;
use crate::error::{Error, Result};
use crate::maps::{MapMeta, PeeledMapSet};
use crate::math::Vec3;
use crate::mesh::{Rgb, TriMesh};
use rayon::prelude::*;

/// A ray; the direction need not be normalized.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Ray { origin, dir }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// One ray-surface intersection.
#[derive(Debug, Clone, Copy)]
pub struct Hit {
    /// Ray parameter; strictly positive.
    pub t: f64,
    /// z-coordinate of the hit point in the frame the ray lives in.
    pub zdepth: f64,
    /// Triangle index in the source mesh.
    pub triangle_id: u32,
    /// Barycentric weights of the triangle's three vertices; sums to 1.
    pub bary: [f64; 3],
    /// Hit point in the frame the ray lives in.
    pub point: Vec3,
}

/// Sorts raw hits front to back and merges near-coincident ones in place.
/// Ties on `t` are broken by triangle id so the result is deterministic.
fn sort_and_dedup(raw: &mut Vec<RawHit>, max_hits: usize, eps: f64) {
    raw.sort_unstable_by(|a, b| a.t.total_cmp(&b.t).then(a.triangle.cmp(&b.triangle)));
    let mut kept = 0usize;
    for i in 0..raw.len() {
        if kept > 0 && raw[i].t - raw[kept - 1].t < eps {
            continue; // merged into the earlier (smaller-t) hit
        }
        raw[kept] = raw[i];
        kept += 1;
        if kept == max_hits {
            break;
        }
    }
    raw.truncate(kept);
}

/// All intersections of the ray with the BVH'd mesh, sorted by `t`,
/// deduplicated with `eps`, and truncated to `max_hits`.
///
/// A miss returns an empty list; a zero direction cannot hit anything and
/// also returns an empty list. `zdepth` is the z of the hit point in the
/// ray's own frame, which for camera-frame rays (z-component 1) equals `t`.
pub fn peel_trace(bvh: &Bvh, ray: &Ray, max_hits: usize, eps: f64) -> Vec<Hit> {
    let mut raw = Vec::new();
    bvh.intersect_all(ray.origin, ray.dir, &mut raw);
    sort_and_dedup(&mut raw, max_hits, eps);
    raw.iter()
        .map(|h| {
            let point = ray.at(h.t);
            Hit {
                t: h.t,
                zdepth: point.z,
                triangle_id: h.triangle,
                bary: h.bary,
                point,
            }
        })
        .collect()
}

/// Flat color used for meshes without vertex colors.
pub const DEFAULT_FLAT_COLOR: Rgb = [128, 128, 128];

/// Barycentric interpolation of the vertex colors at a hit, rounded half-up.
/// Colorless meshes shade as `flat`.
pub fn shade_hit_with(mesh: &TriMesh, hit: &Hit, flat: Rgb) -> Rgb {
    let Some(colors) = mesh.colors() else {
        return flat;
    };
    let [a, b, c] = mesh.triangles()[hit.triangle_id as usize];
    let (ca, cb, cc) = (
        colors[a as usize],
        colors[b as usize],
        colors[c as usize],
    );
    let mut out = [0u8; 3];
    for ch in 0..3 {
        let v = hit.bary[0] * ca[ch] as f64 + hit.bary[1] * cb[ch] as f64 + hit.bary[2] * cc[ch] as f64;
        out[ch] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
    }
    out
}

/// [`shade_hit_with`] using the default mid-gray flat color.
pub fn shade_hit(mesh: &TriMesh, hit: &Hit) -> Rgb {
    shade_hit_with(mesh, hit, DEFAULT_FLAT_COLOR)
}

/// Rendering knobs for [`render_peeled`].
#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    /// Number of peeled layers to keep (intersections beyond this are
    /// discarded, not an error).
    pub n_layers: usize,
    /// Hit-merge distance on the ray parameter; `None` picks
    /// `1e-6 * bounding-box diagonal`.
    pub eps: Option<f64>,
    /// Flat color for meshes without vertex colors.
    pub flat_color: Rgb,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            n_layers: 4,
            eps: None,
            flat_color: DEFAULT_FLAT_COLOR,
        }
    }
}

impl RenderOptions {
    pub fn with_layers(n_layers: usize) -> Self {
        RenderOptions {
            n_layers,
            ..Default::default()
        }
    }
}

/// Renders the mesh into a peeled map set as seen from `view`.
///
/// Builds a BVH internally; use [`render_peeled_with`] to reuse one across
/// several views of the same mesh.
pub fn render_peeled(mesh: &TriMesh, view: &ViewConfig, opts: &RenderOptions) -> Result<PeeledMapSet> {
    let bvh = Bvh::build(mesh)?;
    render_peeled_with(mesh, &bvh, view, opts)
}

/// [`render_peeled`] against a prebuilt BVH (which must belong to `mesh`,
/// in the same coordinate frame).
///
/// Pixels are evaluated in parallel; each writes a disjoint slot, so the
/// output is deterministic regardless of scheduling. Pixels or layers
/// without a hit keep background depth 0 and RGB (255, 255, 255).
pub fn render_peeled_with(
    mesh: &TriMesh,
    bvh: &Bvh,
    view: &ViewConfig,
    opts: &RenderOptions,
) -> Result<PeeledMapSet> {
    if opts.n_layers == 0 {
        return Err(Error::invalid("rendering needs at least 1 layer"));
    }
    let n = opts.n_layers;
    let intr = view.intrinsics;
    let (w, h) = (intr.width as usize, intr.height as usize);
    let eps = match opts.eps {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(Error::invalid(format!("eps must be positive, got {e}"))),
        None => {
            let diag = bvh.bounds().diagonal();
            if diag > 0.0 {
                1e-6 * diag
            } else {
                1e-12
            }
        }
    };

    let origin_world = view.pose.center();

    // Pixel-major, layer-minor scratch so rows can be filled in parallel.
    let mut scratch: Vec<(f32, Rgb)> = vec![(0.0, crate::maps::BACKGROUND_RGB); w * h * n];
    scratch
        .par_chunks_mut(w * n)
        .enumerate()
        .for_each(|(y, row)| {
            let mut raw: Vec<RawHit> = Vec::with_capacity(16);
            for x in 0..w {
                let dir_cam = intr.pixel_ray(x as u32, y as u32);
                let dir_world = view.pose.rotate_inverse(dir_cam);
                raw.clear();
                bvh.intersect_all(origin_world, dir_world, &mut raw);
                sort_and_dedup(&mut raw, n, eps);
                for (layer, hit) in raw.iter().enumerate() {
                    // The camera-frame direction has z exactly 1, and the
                    // world-space ray shares its parameterization, so t *is*
                    // the z-depth.
                    let shaded = shade_hit_with(
                        mesh,
                        &Hit {
                            t: hit.t,
                            zdepth: hit.t,
                            triangle_id: hit.triangle,
                            bary: hit.bary,
                            point: dir_cam * hit.t,
                        },
                        opts.flat_color,
                    );
                    row[x * n + layer] = (hit.t as f32, shaded);
                }
            }
        });

    let mut set = PeeledMapSet::new_background(intr, n)?;
    for layer in 0..n {
        for px in 0..w * h {
            let (d, c) = scratch[px * n + layer];
            set.depth_layer_mut(layer)[px] = d;
            set.rgb_layer_mut(layer)[px] = c;
        }
    }

    set.meta = MapMeta {
        view_label: view.label.clone(),
        source: String::new(),
        pose: Some(view.pose),
        unit_box: None,
        extra: std::collections::BTreeMap::new(),
        validation: None,
    };
    if bvh.degenerate_triangles() > 0 {
        set.meta.extra.insert(
            "degenerate_triangles".into(),
            bvh.degenerate_triangles().to_string(),
        );
    }
    Ok(set)
}
