//! PLY I/O: triangle meshes with per-vertex colors (read), and point clouds
//! with color + layer labels (read/write), in ASCII or binary little-endian.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::{Rgb, TriMesh};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<ScalarType> {
        Some(match s {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(&self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(ScalarType),
    List(ScalarType, ScalarType),
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct ElementDef {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<ElementDef>,
}

fn parse_header(r: &mut impl BufRead, path: &Path) -> Result<Header> {
    let bad = |reason: String| Error::decode(path, reason);
    let mut line = String::new();
    let read_line = |r: &mut dyn BufRead, line: &mut String| -> Result<()> {
        line.clear();
        let n = r.read_line(line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::decode(path, "unexpected end of header"));
        }
        Ok(())
    };

    read_line(r, &mut line)?;
    if line.trim_end() != "ply" {
        return Err(bad("missing 'ply' magic".into()));
    }

    let mut format = None;
    let mut elements: Vec<ElementDef> = Vec::new();
    loop {
        read_line(r, &mut line)?;
        let trimmed = line.trim_end();
        let mut tok = trimmed.split_whitespace();
        match tok.next() {
            Some("comment") | Some("obj_info") => {}
            Some("format") => {
                format = match tok.next() {
                    Some("ascii") => Some(PlyFormat::Ascii),
                    Some("binary_little_endian") => Some(PlyFormat::BinaryLittleEndian),
                    Some("binary_big_endian") => {
                        return Err(bad("big-endian PLY is not supported".into()))
                    }
                    other => return Err(bad(format!("unknown PLY format {other:?}"))),
                };
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| bad("element without a name".into()))?;
                let count: usize = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| bad(format!("bad element count for {name}")))?;
                elements.push(ElementDef {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before any element".into()))?;
                let first = tok
                    .next()
                    .ok_or_else(|| bad("property without a type".into()))?;
                let kind = if first == "list" {
                    let count_t = tok.next().and_then(ScalarType::parse);
                    let item_t = tok.next().and_then(ScalarType::parse);
                    match (count_t, item_t) {
                        (Some(c), Some(i)) => PropKind::List(c, i),
                        _ => return Err(bad("bad list property types".into())),
                    }
                } else {
                    match ScalarType::parse(first) {
                        Some(t) => PropKind::Scalar(t),
                        None => return Err(bad(format!("unknown property type {first:?}"))),
                    }
                };
                let name = tok
                    .next()
                    .ok_or_else(|| bad("property without a name".into()))?;
                element.properties.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            Some("end_header") => break,
            other => return Err(bad(format!("unexpected header line {other:?}"))),
        }
    }

    Ok(Header {
        format: format.ok_or_else(|| bad("header has no format line".into()))?,
        elements,
    })
}

/// Pulls scalar values out of either data encoding.
enum DataCursor<'a> {
    Ascii(std::str::SplitWhitespace<'a>),
    Binary(&'a [u8]),
}

impl<'a> DataCursor<'a> {
    fn read_scalar(&mut self, t: ScalarType, path: &Path) -> Result<f64> {
        match self {
            DataCursor::Ascii(tokens) => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| Error::decode(path, "unexpected end of ASCII data"))?;
                tok.parse::<f64>()
                    .map_err(|_| Error::decode(path, format!("bad numeric token {tok:?}")))
            }
            DataCursor::Binary(bytes) => {
                let n = t.size();
                if bytes.len() < n {
                    return Err(Error::decode(path, "unexpected end of binary data"));
                }
                let (head, rest) = bytes.split_at(n);
                *bytes = rest;
                Ok(match t {
                    ScalarType::I8 => head[0] as i8 as f64,
                    ScalarType::U8 => head[0] as f64,
                    ScalarType::I16 => i16::from_le_bytes([head[0], head[1]]) as f64,
                    ScalarType::U16 => u16::from_le_bytes([head[0], head[1]]) as f64,
                    ScalarType::I32 => {
                        i32::from_le_bytes([head[0], head[1], head[2], head[3]]) as f64
                    }
                    ScalarType::U32 => {
                        u32::from_le_bytes([head[0], head[1], head[2], head[3]]) as f64
                    }
                    ScalarType::F32 => {
                        f32::from_le_bytes([head[0], head[1], head[2], head[3]]) as f64
                    }
                    ScalarType::F64 => f64::from_le_bytes([
                        head[0], head[1], head[2], head[3], head[4], head[5], head[6], head[7],
                    ]),
                })
            }
        }
    }

    fn read_list(&mut self, count_t: ScalarType, item_t: ScalarType, path: &Path) -> Result<Vec<f64>> {
        let count = self.read_scalar(count_t, path)? as usize;
        if count > 1 << 20 {
            return Err(Error::decode(path, format!("implausible list length {count}")));
        }
        (0..count).map(|_| self.read_scalar(item_t, path)).collect()
    }
}

/// One parsed element row: scalar values by property position, plus any list
/// values.
fn read_row(
    cursor: &mut DataCursor,
    def: &ElementDef,
    path: &Path,
    scalars: &mut [f64],
    lists: &mut Vec<(usize, Vec<f64>)>,
) -> Result<()> {
    lists.clear();
    for (pi, prop) in def.properties.iter().enumerate() {
        match &prop.kind {
            PropKind::Scalar(t) => scalars[pi] = cursor.read_scalar(*t, path)?,
            PropKind::List(ct, it) => {
                let values = cursor.read_list(*ct, *it, path)?;
                lists.push((pi, values));
            }
        }
    }
    Ok(())
}

fn open_ply(path: &Path) -> Result<(Header, Vec<u8>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let header = parse_header(&mut reader, path)?;
    let mut data = Vec::new();
    reader
        .read_to_end(&mut data)
        .map_err(|e| Error::io(path, e))?;
    Ok((header, data))
}

fn make_cursor<'a>(header: &Header, data: &'a [u8], path: &Path) -> Result<DataCursor<'a>> {
    Ok(match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(data)
                .map_err(|_| Error::decode(path, "ASCII PLY contains invalid UTF-8"))?;
            DataCursor::Ascii(text.split_whitespace())
        }
        PlyFormat::BinaryLittleEndian => DataCursor::Binary(data),
    })
}

fn find_prop(def: &ElementDef, name: &str) -> Option<usize> {
    def.properties.iter().position(|p| p.name == name)
}

/// Loads a triangle mesh: a `vertex` element with `x, y, z` (and optional
/// `red, green, blue` byte colors) plus a `face` element with a
/// `vertex_indices` (or `vertex_index`) list. Polygons are fan-triangulated.
pub fn load_mesh_ply(path: &Path) -> Result<TriMesh> {
    let (header, data) = open_ply(path)?;
    let mut cursor = make_cursor(&header, &data, path)?;

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut colors: Vec<Rgb> = Vec::new();
    let mut has_colors = false;
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for def in &header.elements {
        let mut scalars = vec![0.0f64; def.properties.len()];
        let mut lists: Vec<(usize, Vec<f64>)> = Vec::new();
        match def.name.as_str() {
            "vertex" => {
                let (px, py, pz) = match (
                    find_prop(def, "x"),
                    find_prop(def, "y"),
                    find_prop(def, "z"),
                ) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(Error::decode(path, "vertex element lacks x/y/z")),
                };
                let rgb_idx = match (
                    find_prop(def, "red"),
                    find_prop(def, "green"),
                    find_prop(def, "blue"),
                ) {
                    (Some(r), Some(g), Some(b)) => {
                        has_colors = true;
                        Some((r, g, b))
                    }
                    _ => None,
                };
                vertices.reserve(def.count);
                for _ in 0..def.count {
                    read_row(&mut cursor, def, path, &mut scalars, &mut lists)?;
                    vertices.push(Vec3::new(scalars[px], scalars[py], scalars[pz]));
                    if let Some((r, g, b)) = rgb_idx {
                        colors.push([
                            scalars[r].clamp(0.0, 255.0) as u8,
                            scalars[g].clamp(0.0, 255.0) as u8,
                            scalars[b].clamp(0.0, 255.0) as u8,
                        ]);
                    }
                }
            }
            "face" => {
                let list_idx = find_prop(def, "vertex_indices")
                    .or_else(|| find_prop(def, "vertex_index"))
                    .ok_or_else(|| Error::decode(path, "face element lacks vertex_indices"))?;
                for _ in 0..def.count {
                    read_row(&mut cursor, def, path, &mut scalars, &mut lists)?;
                    let indices = lists
                        .iter()
                        .find(|(pi, _)| *pi == list_idx)
                        .map(|(_, v)| v)
                        .ok_or_else(|| Error::decode(path, "face row lacks its index list"))?;
                    if indices.len() < 3 {
                        return Err(Error::decode(path, "face with fewer than 3 vertices"));
                    }
                    let as_u32 = |v: f64| -> Result<u32> {
                        if v < 0.0 || v >= u32::MAX as f64 {
                            return Err(Error::decode(path, format!("bad face index {v}")));
                        }
                        Ok(v as u32)
                    };
                    let first = as_u32(indices[0])?;
                    for k in 1..indices.len() - 1 {
                        triangles.push([first, as_u32(indices[k])?, as_u32(indices[k + 1])?]);
                    }
                }
            }
            _ => {
                // Unknown element: consume its rows to stay aligned.
                for _ in 0..def.count {
                    read_row(&mut cursor, def, path, &mut scalars, &mut lists)?;
                }
            }
        }
    }

    TriMesh::new(vertices, triangles, has_colors.then_some(colors))
        .map_err(|e| Error::decode(path, format!("invalid mesh: {e}")))
}

/// Loads either a mesh PLY or an OBJ based on the file extension.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("obj") => super::obj::load_obj(path),
        Some("ply") => load_mesh_ply(path),
        other => Err(Error::invalid(format!(
            "unsupported mesh extension {other:?} for {}",
            path.display()
        ))),
    }
}

/// Writes a point cloud as PLY with `x y z` float32, `red green blue` uchar,
/// and `layer` uchar properties.
pub fn write_ply(cloud: &PointCloud, path: &Path, format: PlyFormat) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let format_name = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    write!(
        w,
        "ply\nformat {format_name} 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property uchar layer\nend_header\n",
        cloud.len()
    )
    .map_err(io)?;

    for i in 0..cloud.len() {
        let p = cloud.points()[i];
        let c = cloud.colors()[i];
        let l = cloud.layers()[i];
        match format {
            PlyFormat::Ascii => {
                writeln!(
                    w,
                    "{} {} {} {} {} {} {}",
                    p.x as f32, p.y as f32, p.z as f32, c[0], c[1], c[2], l
                )
                .map_err(io)?;
            }
            PlyFormat::BinaryLittleEndian => {
                w.write_all(&(p.x as f32).to_le_bytes()).map_err(io)?;
                w.write_all(&(p.y as f32).to_le_bytes()).map_err(io)?;
                w.write_all(&(p.z as f32).to_le_bytes()).map_err(io)?;
                w.write_all(&[c[0], c[1], c[2], l]).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Reads a point-cloud PLY. Missing `layer` or color properties fall back to
/// layer 1 / mid-gray, each with a warning in the returned diagnostics.
pub fn read_ply(path: &Path) -> Result<(PointCloud, Vec<String>)> {
    let (header, data) = open_ply(path)?;
    let mut cursor = make_cursor(&header, &data, path)?;

    let mut warnings = Vec::new();
    let mut cloud = PointCloud::default();

    for def in &header.elements {
        let mut scalars = vec![0.0f64; def.properties.len()];
        let mut lists: Vec<(usize, Vec<f64>)> = Vec::new();
        if def.name == "vertex" {
            let (px, py, pz) = match (
                find_prop(def, "x"),
                find_prop(def, "y"),
                find_prop(def, "z"),
            ) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(Error::decode(path, "vertex element lacks x/y/z")),
            };
            let rgb_idx = match (
                find_prop(def, "red"),
                find_prop(def, "green"),
                find_prop(def, "blue"),
            ) {
                (Some(r), Some(g), Some(b)) => Some((r, g, b)),
                _ => {
                    warnings.push("no red/green/blue properties; defaulting to gray".into());
                    None
                }
            };
            let layer_idx = find_prop(def, "layer");
            if layer_idx.is_none() {
                warnings.push("no layer property; defaulting to layer 1".into());
            }
            for _ in 0..def.count {
                read_row(&mut cursor, def, path, &mut scalars, &mut lists)?;
                let point = Vec3::new(scalars[px], scalars[py], scalars[pz]);
                let color = match rgb_idx {
                    Some((r, g, b)) => [
                        scalars[r].clamp(0.0, 255.0) as u8,
                        scalars[g].clamp(0.0, 255.0) as u8,
                        scalars[b].clamp(0.0, 255.0) as u8,
                    ],
                    None => crate::peel::DEFAULT_FLAT_COLOR,
                };
                let layer = match layer_idx {
                    Some(li) => scalars[li].clamp(1.0, 255.0) as u8,
                    None => 1,
                };
                cloud.push(point, color, layer);
            }
        } else {
            for _ in 0..def.count {
                read_row(&mut cursor, def, path, &mut scalars, &mut lists)?;
            }
        }
    }
    Ok((cloud, warnings))
}
