//! Indexed triangle meshes and a few procedural shapes used by tests,
//! examples, and the dataset tools.

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};

/// An RGB color with 8-bit channels.
pub type Rgb = [u8; 3];

/// Indexed triangle mesh with optional per-vertex colors.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    colors: Option<Vec<Rgb>>,
}

impl TriMesh {
    /// Validates and wraps mesh data.
    ///
    /// Rejects non-finite coordinates, out-of-range triangle indices, and a
    /// color list whose length differs from the vertex count.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        colors: Option<Vec<Rgb>>,
    ) -> Result<Self> {
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "mesh vertex has non-finite coordinates: ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
        let n = vertices.len() as u32;
        for (i, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&k| k >= n) {
                return Err(Error::invalid(format!(
                    "triangle {i} references vertex index out of range (vertex count {n})"
                )));
            }
        }
        if let Some(c) = &colors {
            if c.len() != vertices.len() {
                return Err(Error::invalid(format!(
                    "color count {} does not match vertex count {}",
                    c.len(),
                    vertices.len()
                )));
            }
        }
        Ok(TriMesh {
            vertices,
            triangles,
            colors,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Corner positions of triangle `i`.
    #[inline]
    pub fn triangle_vertices(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(i);
        (b - a).cross(c - a).norm() * 0.5
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangle_count())
            .map(|i| self.triangle_area(i))
            .sum()
    }

    /// Applies `p' = scale * (p + translation)` to every vertex.
    pub fn transformed(&self, scale: f64, translation: Vec3) -> TriMesh {
        TriMesh {
            vertices: self
                .vertices
                .iter()
                .map(|&p| (p + translation) * scale)
                .collect(),
            triangles: self.triangles.clone(),
            colors: self.colors.clone(),
        }
    }

    /// Concatenates two meshes into one (colors are kept only if both sides
    /// carry them).
    pub fn concat(&self, other: &TriMesh) -> TriMesh {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(
            other
                .triangles
                .iter()
                .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
        );
        let colors = match (&self.colors, &other.colors) {
            (Some(a), Some(b)) => {
                let mut c = a.clone();
                c.extend_from_slice(b);
                Some(c)
            }
            _ => None,
        };
        TriMesh {
            vertices,
            triangles,
            colors,
        }
    }
}

/// Procedural meshes. Handy as fixtures; none of them carry colors unless
/// stated otherwise.
pub mod primitives {
    use super::*;
    use std::collections::HashMap;

    /// Icosphere: an icosahedron subdivided `subdivisions` times, vertices
    /// projected onto the sphere. Triangle count is `20 * 4^subdivisions`.
    pub fn icosphere(radius: f64, subdivisions: u32) -> TriMesh {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalized() * radius)
        .collect();

        let mut triangles: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];

        for _ in 0..subdivisions {
            let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next = Vec::with_capacity(triangles.len() * 4);
            let mut mid = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a as usize] + vertices[b as usize]) * 0.5;
                    vertices.push(m.normalized() * radius);
                    (vertices.len() - 1) as u32
                })
            };
            for &[a, b, c] in &triangles {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.push([a, ab, ca]);
                next.push([ab, b, bc]);
                next.push([ca, bc, c]);
                next.push([ab, bc, ca]);
            }
            triangles = next;
        }

        TriMesh::new(vertices, triangles, None).expect("icosphere is always valid")
    }

    /// Ellipsoid: an icosphere with per-axis semi-extents.
    pub fn ellipsoid(semi_axes: Vec3, subdivisions: u32) -> TriMesh {
        let sphere = icosphere(1.0, subdivisions);
        let vertices = sphere
            .vertices()
            .iter()
            .map(|&p| Vec3::new(p.x * semi_axes.x, p.y * semi_axes.y, p.z * semi_axes.z))
            .collect();
        TriMesh::new(vertices, sphere.triangles().to_vec(), None).expect("ellipsoid is valid")
    }

    /// Axis-aligned box between `min` and `max`, 12 triangles, outward-facing.
    pub fn cuboid(min: Vec3, max: Vec3) -> TriMesh {
        let v = vec![
            Vec3::new(min.x, min.y, min.z),
            Vec3::new(max.x, min.y, min.z),
            Vec3::new(max.x, max.y, min.z),
            Vec3::new(min.x, max.y, min.z),
            Vec3::new(min.x, min.y, max.z),
            Vec3::new(max.x, min.y, max.z),
            Vec3::new(max.x, max.y, max.z),
            Vec3::new(min.x, max.y, max.z),
        ];
        let t = vec![
            // -z face
            [0, 2, 1],
            [0, 3, 2],
            // +z face
            [4, 5, 6],
            [4, 6, 7],
            // -y face
            [0, 1, 5],
            [0, 5, 4],
            // +y face
            [3, 7, 6],
            [3, 6, 2],
            // -x face
            [0, 4, 7],
            [0, 7, 3],
            // +x face
            [1, 2, 6],
            [1, 6, 5],
        ];
        TriMesh::new(v, t, None).expect("cuboid is valid")
    }

    /// The nested-boxes test scene: an outer box spanning z in [1, 4] and an
    /// inner box spanning z in [2, 3], both with the same square footprint
    /// `half` wide in x/y. A +z ray inside the footprint crosses exactly the
    /// four planes z = 1, 2, 3, 4.
    pub fn nested_boxes(half: f64) -> TriMesh {
        let outer = cuboid(Vec3::new(-half, -half, 1.0), Vec3::new(half, half, 4.0));
        let inner = cuboid(Vec3::new(-half, -half, 2.0), Vec3::new(half, half, 3.0));
        outer.concat(&inner)
    }
}
