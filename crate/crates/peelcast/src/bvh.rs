//! Bounding volume hierarchy over mesh triangles.
//!
//! Built once per mesh, read-only afterwards; traversal reports *every*
//! intersection along a ray (depth peeling needs exit surfaces, so there is
//! no backface culling and no early-out).

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};
use crate::mesh::TriMesh;

const LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 16;

/// A raw ray-triangle intersection record produced by traversal.
#[derive(Debug, Clone, Copy)]
pub struct RawHit {
    /// Ray parameter, strictly positive.
    pub t: f64,
    /// Index of the triangle in the source mesh.
    pub triangle: u32,
    /// Barycentric weights of the triangle's three vertices.
    pub bary: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct Node {
    aabb: Aabb,
    /// Leaf: first triangle slot. Internal: index of the right child (the
    /// left child immediately follows the node).
    first: u32,
    /// Number of triangles in a leaf; 0 marks an internal node.
    count: u32,
}

#[derive(Debug, Clone, Copy)]
struct PackedTri {
    a: Vec3,
    b: Vec3,
    c: Vec3,
    id: u32,
}

/// Static BVH with SAH-binned splits.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<PackedTri>,
    bounds: Aabb,
    degenerate: usize,
}

struct TriRef {
    aabb: Aabb,
    centroid: Vec3,
    id: u32,
}

impl Bvh {
    /// Builds the tree. Zero-area triangles are skipped and counted; an empty
    /// triangle list is an error.
    pub fn build(mesh: &TriMesh) -> Result<Bvh> {
        if mesh.triangle_count() == 0 {
            return Err(Error::invalid("cannot build a BVH over an empty mesh"));
        }

        let mut refs = Vec::with_capacity(mesh.triangle_count());
        let mut degenerate = 0usize;
        for i in 0..mesh.triangle_count() {
            let [a, b, c] = mesh.triangle_vertices(i);
            if (b - a).cross(c - a).norm_sq() == 0.0 {
                degenerate += 1;
                continue;
            }
            let aabb = Aabb::from_points([a, b, c]);
            refs.push(TriRef {
                aabb,
                centroid: aabb.center(),
                id: i as u32,
            });
        }

        let mut bounds = Aabb::EMPTY;
        for r in &refs {
            bounds.merge(&r.aabb);
        }

        let mut bvh = Bvh {
            nodes: Vec::new(),
            tris: Vec::with_capacity(refs.len()),
            bounds,
            degenerate,
        };
        if !refs.is_empty() {
            bvh.build_node(&mut refs[..]);
        }
        // Pre-pack triangle vertices in leaf order.
        let packed: Vec<PackedTri> = bvh
            .tris
            .iter()
            .map(|t| {
                let [a, b, c] = mesh.triangle_vertices(t.id as usize);
                PackedTri { a, b, c, id: t.id }
            })
            .collect();
        bvh.tris = packed;
        Ok(bvh)
    }

    fn build_node(&mut self, refs: &mut [TriRef]) -> u32 {
        let mut aabb = Aabb::EMPTY;
        let mut centroid_bounds = Aabb::EMPTY;
        for r in refs.iter() {
            aabb.merge(&r.aabb);
            centroid_bounds.grow(r.centroid);
        }

        let index = self.nodes.len() as u32;
        self.nodes.push(Node {
            aabb,
            first: 0,
            count: 0,
        });

        let split = if refs.len() <= LEAF_SIZE {
            None
        } else {
            sah_split(refs, &centroid_bounds)
        };

        match split {
            None => {
                self.nodes[index as usize].first = self.tris.len() as u32;
                self.nodes[index as usize].count = refs.len() as u32;
                for r in refs.iter() {
                    self.tris.push(PackedTri {
                        a: Vec3::ZERO,
                        b: Vec3::ZERO,
                        c: Vec3::ZERO,
                        id: r.id,
                    });
                }
                index
            }
            Some(mid) => {
                let (left, right) = refs.split_at_mut(mid);
                self.build_node(left);
                let right_index = self.build_node(right);
                self.nodes[index as usize].first = right_index;
                index
            }
        }
    }


    /// Whole-tree bounding box (equals the mesh bounding box for meshes
    /// without stray vertices).
    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    /// Zero-area triangles skipped during the build.
    pub fn degenerate_triangles(&self) -> usize {
        self.degenerate
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.count > 0).count()
    }

    /// Number of triangles the tree actually indexes.
    pub fn indexed_triangles(&self) -> usize {
        self.tris.len()
    }

    /// Collects every intersection with `t > 0` along the ray, unordered.
    pub fn intersect_all(&self, origin: Vec3, dir: Vec3, out: &mut Vec<RawHit>) {
        let Some(shear) = RayShear::new(origin, dir) else {
            return;
        };
        if self.nodes.is_empty() {
            return;
        }
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.aabb.intersects_ray(origin, inv_dir, 0.0, f64::INFINITY) {
                continue;
            }
            if node.count > 0 {
                let first = node.first as usize;
                for tri in &self.tris[first..first + node.count as usize] {
                    if let Some((t, bary)) = shear.intersect(tri.a, tri.b, tri.c) {
                        out.push(RawHit {
                            t,
                            triangle: tri.id,
                            bary,
                        });
                    }
                }
            } else {
                stack.push(ni + 1);
                stack.push(node.first);
            }
        }
    }

    /// Squared distance from `p` to the closest point on the mesh surface.
    pub fn distance_sq_to_surface(&self, p: Vec3) -> f64 {
        if self.nodes.is_empty() {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.aabb.distance_sq(p) >= best {
                continue;
            }
            if node.count > 0 {
                let first = node.first as usize;
                for tri in &self.tris[first..first + node.count as usize] {
                    let d = point_triangle_distance_sq(p, tri.a, tri.b, tri.c);
                    best = best.min(d);
                }
            } else {
                // Visit the nearer child first so pruning kicks in sooner.
                let l = ni + 1;
                let r = node.first;
                let dl = self.nodes[l as usize].aabb.distance_sq(p);
                let dr = self.nodes[r as usize].aabb.distance_sq(p);
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }
}

/// SAH-binned split: returns the partition point after reordering `refs`,
/// or `None` when splitting does not pay off.
fn sah_split(refs: &mut [TriRef], centroid_bounds: &Aabb) -> Option<usize> {
    let axis = centroid_bounds.longest_axis();
    let cmin = centroid_bounds.min.axis(axis);
    let cext = centroid_bounds.extent().axis(axis);
    if cext <= 0.0 {
        // All centroids coincide on the split axis; halve by index.
        let mid = refs.len() / 2;
        return Some(mid);
    }

    let bin_of = |c: &Vec3| -> usize {
        let f = (c.axis(axis) - cmin) / cext * SAH_BINS as f64;
        (f as usize).min(SAH_BINS - 1)
    };

    let mut bin_counts = [0usize; SAH_BINS];
    let mut bin_bounds = [Aabb::EMPTY; SAH_BINS];
    for r in refs.iter() {
        let b = bin_of(&r.centroid);
        bin_counts[b] += 1;
        bin_bounds[b].merge(&r.aabb);
    }

    // Cost of splitting after bin k, for every k.
    let mut best_cost = f64::INFINITY;
    let mut best_bin = 0usize;
    for k in 0..SAH_BINS - 1 {
        let mut left = Aabb::EMPTY;
        let mut nl = 0usize;
        for b in 0..=k {
            left.merge(&bin_bounds[b]);
            nl += bin_counts[b];
        }
        let mut right = Aabb::EMPTY;
        let mut nr = 0usize;
        for b in k + 1..SAH_BINS {
            right.merge(&bin_bounds[b]);
            nr += bin_counts[b];
        }
        if nl == 0 || nr == 0 {
            continue;
        }
        let cost = left.surface_area() * nl as f64 + right.surface_area() * nr as f64;
        if cost < best_cost {
            best_cost = cost;
            best_bin = k;
        }
    }
    if !best_cost.is_finite() {
        let mid = refs.len() / 2;
        return Some(mid);
    }

    // In-place partition by bin index.
    let mut mid = 0usize;
    for i in 0..refs.len() {
        if bin_of(&refs[i].centroid) <= best_bin {
            refs.swap(i, mid);
            mid += 1;
        }
    }
    debug_assert!(mid > 0 && mid < refs.len());
    Some(mid)
}

/// Per-ray constants of the watertight shear-and-scale edge-function
/// triangle test (Woop, Benthin & Wald 2013).
///
/// The test projects vertices into a frame where the ray runs along +z and
/// evaluates the three 2D edge functions there with inclusive boundaries:
/// a hit on an edge or vertex is accepted by at least one of the triangles
/// sharing it, never silently dropped, so watertight meshes report a
/// consistent crossing count. Duplicates across a shared edge are merged
/// later by the peel-trace epsilon. Both facings are accepted.
#[derive(Debug, Clone, Copy)]
pub struct RayShear {
    origin: Vec3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl RayShear {
    /// Returns `None` for a zero (or non-finite) direction, which cannot hit
    /// anything.
    pub fn new(origin: Vec3, dir: Vec3) -> Option<RayShear> {
        let abs = [dir.x.abs(), dir.y.abs(), dir.z.abs()];
        let kz = if abs[0] > abs[1] {
            if abs[0] > abs[2] {
                0
            } else {
                2
            }
        } else if abs[1] > abs[2] {
            1
        } else {
            2
        };
        let dz = dir.axis(kz);
        if dz == 0.0 || !dz.is_finite() {
            return None;
        }
        let (mut kx, mut ky) = ((kz + 1) % 3, (kz + 2) % 3);
        // Keep the winding consistent for negative directions.
        if dz < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        let sz = 1.0 / dz;
        Some(RayShear {
            origin,
            kx,
            ky,
            kz,
            sx: dir.axis(kx) * sz,
            sy: dir.axis(ky) * sz,
            sz,
        })
    }

    /// Intersects one triangle; returns the ray parameter (`> 0`) and the
    /// barycentric weights of vertices `a`, `b`, `c`.
    #[inline]
    pub fn intersect(&self, a: Vec3, b: Vec3, c: Vec3) -> Option<(f64, [f64; 3])> {
        let av = a - self.origin;
        let bv = b - self.origin;
        let cv = c - self.origin;

        let az = av.axis(self.kz);
        let bz = bv.axis(self.kz);
        let cz = cv.axis(self.kz);
        let ax = av.axis(self.kx) - self.sx * az;
        let ay = av.axis(self.ky) - self.sy * az;
        let bx = bv.axis(self.kx) - self.sx * bz;
        let by = bv.axis(self.ky) - self.sy * bz;
        let cx = cv.axis(self.kx) - self.sx * cz;
        let cy = cv.axis(self.ky) - self.sy * cz;

        // Scaled barycentric coordinates (2D edge functions).
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;

        // Mixed signs: the projected origin lies outside the triangle.
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let t_scaled = u * (self.sz * az) + v * (self.sz * bz) + w * (self.sz * cz);
        let t = t_scaled / det;
        if t > 0.0 && t.is_finite() {
            let inv = 1.0 / det;
            Some((t, [u * inv, v * inv, w * inv]))
        } else {
            None
        }
    }
}

/// Squared distance from a point to a triangle (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn point_triangle_distance_sq(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm_sq();
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm_sq();
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm_sq();
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm_sq();
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm_sq();
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm_sq();
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm_sq()
}
