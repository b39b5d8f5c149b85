//! Wavefront OBJ mesh I/O.
//!
//! Supports `v x y z` with the optional vertex-color extension
//! `v x y z r g b` (r, g, b in [0, 1]) and `f` faces with any of the
//! `i`, `i/t`, `i//n`, `i/t/n` index forms. Polygons are fan-triangulated;
//! negative indices count from the end as usual.

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::{Rgb, TriMesh};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn load_obj(path: &Path) -> Result<TriMesh> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut colors: Vec<Rgb> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut color_state: Option<bool> = None; // has colors?

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let bad = |reason: String| Error::decode(path, format!("line {}: {reason}", lineno + 1));
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let nums: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(format!("bad vertex number: {e}")))?;
                if nums.len() != 3 && nums.len() != 6 {
                    return Err(bad(format!(
                        "vertex line has {} numbers, expected 3 or 6",
                        nums.len()
                    )));
                }
                let has_color = nums.len() == 6;
                match color_state {
                    None => color_state = Some(has_color),
                    Some(expected) if expected != has_color => {
                        return Err(bad("inconsistent vertex colors across v lines".into()))
                    }
                    _ => {}
                }
                vertices.push(Vec3::new(nums[0], nums[1], nums[2]));
                if has_color {
                    let to_byte = |v: f64| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8;
                    colors.push([to_byte(nums[3]), to_byte(nums[4]), to_byte(nums[5])]);
                }
            }
            Some("f") => {
                let mut indices: Vec<u32> = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let idx: i64 = first
                        .parse()
                        .map_err(|_| bad(format!("bad face index {tok:?}")))?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(bad("face index 0 is not valid in OBJ".into()));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(bad(format!("face index {idx} out of range")));
                    }
                    indices.push(resolved as u32);
                }
                if indices.len() < 3 {
                    return Err(bad("face needs at least 3 vertices".into()));
                }
                for k in 1..indices.len() - 1 {
                    triangles.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            // vt, vn, usemtl, mtllib, o, g, s, comments: not used here.
            _ => {}
        }
    }

    let colors = match color_state {
        Some(true) => Some(colors),
        _ => None,
    };
    TriMesh::new(vertices, triangles, colors)
        .map_err(|e| Error::decode(path, format!("invalid mesh: {e}")))
}

/// Writes the mesh as OBJ, emitting `v x y z r g b` lines when it has
/// colors. Color channels are written with enough digits to survive the
/// round trip back to bytes.
pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for (i, v) in mesh.vertices().iter().enumerate() {
        match mesh.colors() {
            Some(colors) => {
                let c = colors[i];
                writeln!(
                    w,
                    "v {} {} {} {:.8} {:.8} {:.8}",
                    v.x,
                    v.y,
                    v.z,
                    c[0] as f64 / 255.0,
                    c[1] as f64 / 255.0,
                    c[2] as f64 / 255.0
                )
                .map_err(io)?;
            }
            None => writeln!(w, "v {} {} {}", v.x, v.y, v.z).map_err(io)?,
        }
    }
    for t in mesh.triangles() {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).map_err(io)?;
    }
    w.flush().map_err(io)
}
