//! File encoding of peeled map sets.
//!
//! A map-set directory holds `depth_1..n` (PFM float, or 16-bit PNG for the
//! quantized interop variant), `rgb_1..n.png`, and `meta.json`. The float
//! depth format is canonical and round-trips bit-exactly.

pub mod pfm;

use crate::camera::{Intrinsics, RigidPose, UnitBoxTransform};
use crate::error::{Error, Result};
use crate::maps::{MapMeta, PeeledMapSet};
use crate::mesh::Rgb;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// How depth layers are stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthEncoding {
    /// 32-bit float PFM; lossless, the canonical format.
    #[default]
    Pfm,
    /// 16-bit grayscale PNG, linearly quantized per layer between the
    /// min/max recorded in `meta.json`. Lossy: error is bounded by
    /// `(max - min) / 65535` per layer.
    Png16,
}

impl DepthEncoding {
    fn depth_file_name(&self, layer_1based: usize) -> String {
        match self {
            DepthEncoding::Pfm => format!("depth_{layer_1based}.pfm"),
            DepthEncoding::Png16 => format!("depth_{layer_1based}.png"),
        }
    }
}

/// `meta.json` document. Field names are part of the on-disk contract.
#[derive(Debug, Serialize, Deserialize)]
struct MetaJson {
    n: usize,
    width: u32,
    height: u32,
    intrinsics: Intrinsics,
    view_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit_box: Option<UnitBoxTransform>,
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pose: Option<RigidPose>,
    #[serde(default)]
    depth_format: DepthEncoding,
    /// Per-layer `[min, max]` used by the quantized encoding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth_range: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    extra: BTreeMap<String, String>,
}

/// Writes the file family for `set` into `dir` (created if needed) using the
/// canonical float depth format. Returns the files written.
pub fn encode_maps(set: &PeeledMapSet, dir: &Path) -> Result<Vec<PathBuf>> {
    encode_maps_with(set, dir, DepthEncoding::Pfm)
}

/// [`encode_maps`] with an explicit depth encoding.
pub fn encode_maps_with(
    set: &PeeledMapSet,
    dir: &Path,
    encoding: DepthEncoding,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut depth_range = Vec::new();

    for layer in 0..set.n_layers() {
        let path = dir.join(encoding.depth_file_name(layer + 1));
        let data = set.depth_layer(layer);
        match encoding {
            DepthEncoding::Pfm => {
                pfm::write_pfm(&path, set.width(), set.height(), data)?;
            }
            DepthEncoding::Png16 => {
                let (min, max, quantized) = quantize_depth(data);
                depth_range.push([min, max]);
                let img =
                    image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(
                        set.width(),
                        set.height(),
                        quantized,
                    )
                    .expect("buffer length matches dimensions");
                img.save(&path)
                    .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
            }
        }
        files.push(path);
    }

    for layer in 0..set.n_layers() {
        let path = dir.join(format!("rgb_{}.png", layer + 1));
        let mut bytes = Vec::with_capacity(set.pixel_count() * 3);
        for px in set.rgb_layer(layer) {
            bytes.extend_from_slice(px);
        }
        let img = image::RgbImage::from_raw(set.width(), set.height(), bytes)
            .expect("buffer length matches dimensions");
        img.save(&path)
            .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        files.push(path);
    }

    let meta = MetaJson {
        n: set.n_layers(),
        width: set.width(),
        height: set.height(),
        intrinsics: set.intrinsics,
        view_label: set.meta.view_label.clone(),
        unit_box: set.meta.unit_box,
        source: set.meta.source.clone(),
        pose: set.meta.pose,
        depth_format: encoding,
        depth_range: (encoding == DepthEncoding::Png16).then_some(depth_range),
        extra: set.meta.extra.clone(),
    };
    let meta_path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("meta serialization cannot fail");
    std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;
    files.push(meta_path);
    Ok(files)
}

/// Reads a map-set directory back. The returned set carries its validation
/// report in `meta.validation`.
pub fn decode_maps(dir: &Path) -> Result<PeeledMapSet> {
    let meta_path = dir.join("meta.json");
    if !meta_path.exists() {
        return Err(Error::decode(&meta_path, "file missing"));
    }
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: MetaJson = serde_json::from_str(&text)
        .map_err(|e| Error::decode(&meta_path, format!("malformed JSON: {e}")))?;
    if meta.n == 0 {
        return Err(Error::decode(&meta_path, "layer count n must be >= 1"));
    }
    if meta.width != meta.intrinsics.width || meta.height != meta.intrinsics.height {
        return Err(Error::decode(
            &meta_path,
            format!(
                "meta resolution {}x{} disagrees with intrinsics {}x{}",
                meta.width, meta.height, meta.intrinsics.width, meta.intrinsics.height
            ),
        ));
    }

    let mut depth_layers = Vec::with_capacity(meta.n);
    for layer in 1..=meta.n {
        let path = dir.join(meta.depth_format.depth_file_name(layer));
        if !path.exists() {
            return Err(Error::decode(&path, "file missing"));
        }
        let data = match meta.depth_format {
            DepthEncoding::Pfm => {
                let (w, h, data) = pfm::read_pfm(&path)?;
                check_resolution(&path, w, h, meta.width, meta.height)?;
                data
            }
            DepthEncoding::Png16 => {
                let img = image::open(&path)
                    .map_err(|e| Error::decode(&path, format!("{e}")))?
                    .to_luma16();
                check_resolution(&path, img.width(), img.height(), meta.width, meta.height)?;
                let range = meta
                    .depth_range
                    .as_ref()
                    .and_then(|r| r.get(layer - 1))
                    .ok_or_else(|| {
                        Error::decode(&meta_path, format!("missing depth_range for layer {layer}"))
                    })?;
                dequantize_depth(img.as_raw(), range[0], range[1])
            }
        };
        depth_layers.push(data);
    }

    let mut rgb_layers = Vec::with_capacity(meta.n);
    for layer in 1..=meta.n {
        let path = dir.join(format!("rgb_{layer}.png"));
        if !path.exists() {
            return Err(Error::decode(&path, "file missing"));
        }
        let img = image::open(&path)
            .map_err(|e| Error::decode(&path, format!("{e}")))?
            .to_rgb8();
        check_resolution(&path, img.width(), img.height(), meta.width, meta.height)?;
        let pixels: Vec<Rgb> = img.pixels().map(|p| p.0).collect();
        rgb_layers.push(pixels);
    }

    let mut set = PeeledMapSet::from_layers(
        meta.intrinsics,
        depth_layers,
        rgb_layers,
        MapMeta {
            view_label: meta.view_label,
            source: meta.source,
            pose: meta.pose,
            unit_box: meta.unit_box,
            extra: meta.extra,
            validation: None,
        },
    )?;
    set.meta.validation = Some(set.validate());
    Ok(set)
}

fn check_resolution(path: &Path, w: u32, h: u32, want_w: u32, want_h: u32) -> Result<()> {
    if w != want_w || h != want_h {
        return Err(Error::decode(
            path,
            format!("resolution {w}x{h} does not match the set's {want_w}x{want_h}"),
        ));
    }
    Ok(())
}

fn quantize_depth(data: &[f32]) -> (f64, f64, Vec<u16>) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in data {
        let v = v as f64;
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        (min, max) = (0.0, 0.0);
    }
    let span = max - min;
    let quantized = data
        .iter()
        .map(|&v| {
            if span <= 0.0 {
                0u16
            } else {
                (((v as f64 - min) / span * 65535.0).round() as i64).clamp(0, 65535) as u16
            }
        })
        .collect();
    (min, max, quantized)
}

fn dequantize_depth(q: &[u16], min: f64, max: f64) -> Vec<f32> {
    let span = max - min;
    q.iter()
        .map(|&v| (min + (v as f64 / 65535.0) * span) as f32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::BACKGROUND_RGB;

    fn sample_set(n: usize, res: u32) -> PeeledMapSet {
        let intr = Intrinsics::centered(res, res).unwrap();
        let mut set = PeeledMapSet::new_background(intr, n).unwrap();
        set.meta.view_label = "0".into();
        set.meta.source = "test".into();
        // A clean diagonal pattern with proper layer ordering.
        for layer in 0..n {
            for y in 0..res {
                for x in 0..y.min(res) {
                    let px = (y * res + x) as usize;
                    set.depth_layer_mut(layer)[px] = 1.0 + layer as f32 + (x as f32) * 0.001;
                    set.rgb_layer_mut(layer)[px] = [x as u8, y as u8, layer as u8];
                }
            }
        }
        set
    }

    #[test]
    fn file_family_counts() {
        let dir = tempfile::tempdir().unwrap();
        let files = encode_maps(&sample_set(4, 16), dir.path()).unwrap();
        assert_eq!(files.len(), 9); // 4 PFM + 4 PNG + meta.json
        assert!(dir.path().join("depth_1.pfm").exists());
        assert!(dir.path().join("rgb_4.png").exists());
        assert!(dir.path().join("meta.json").exists());
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample_set(4, 16);
        encode_maps(&set, dir.path()).unwrap();
        let back = decode_maps(dir.path()).unwrap();
        assert_eq!(back.n_layers(), 4);
        for layer in 0..4 {
            let a: Vec<u32> = set.depth_layer(layer).iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.depth_layer(layer).iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
            assert_eq!(set.rgb_layer(layer), back.rgb_layer(layer));
        }
        assert_eq!(back.meta.view_label, "0");
        assert_eq!(back.meta.source, "test");
        assert!(back.meta.validation.unwrap().is_clean());
    }

    #[test]
    fn quantized_round_trip_within_step() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample_set(3, 16);
        encode_maps_with(&set, dir.path(), DepthEncoding::Png16).unwrap();
        let back = decode_maps(dir.path()).unwrap();
        for layer in 0..3 {
            let orig = set.depth_layer(layer);
            let got = back.depth_layer(layer);
            let min = orig.iter().cloned().fold(f32::INFINITY, f32::min) as f64;
            let max = orig.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
            let step = (max - min) / 65535.0;
            for (&a, &b) in orig.iter().zip(got) {
                assert!(
                    (a as f64 - b as f64).abs() <= step,
                    "layer {layer}: {a} vs {b} exceeds step {step}"
                );
            }
            // Background zeros stay exactly zero (they are the layer minimum).
            for (&a, &b) in orig.iter().zip(got) {
                if a == 0.0 {
                    assert_eq!(b, 0.0);
                }
            }
        }
    }

    #[test]
    fn missing_rgb_layer_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        encode_maps(&sample_set(4, 8), dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("rgb_2.png")).unwrap();
        let err = decode_maps(dir.path()).unwrap_err();
        assert!(err.to_string().contains("rgb_2.png"), "got: {err}");
    }

    #[test]
    fn resolution_mismatch_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        encode_maps(&sample_set(2, 8), dir.path()).unwrap();
        // Overwrite depth_2.pfm with a different resolution.
        pfm::write_pfm(&dir.path().join("depth_2.pfm"), 4, 4, &vec![0.0; 16]).unwrap();
        let err = decode_maps(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("depth_2.pfm") && msg.contains("resolution"), "got: {msg}");
    }

    #[test]
    fn malformed_meta_is_a_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        encode_maps(&sample_set(1, 8), dir.path()).unwrap();
        std::fs::write(dir.path().join("meta.json"), "{not json").unwrap();
        let err = decode_maps(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));
        assert!(err.to_string().contains("meta.json"));
    }

    #[test]
    fn decode_attaches_validation_report() {
        let dir = tempfile::tempdir().unwrap();
        let intr = Intrinsics::centered(8, 8).unwrap();
        let mut set = PeeledMapSet::new_background(intr, 2).unwrap();
        // Invalid on purpose: depth 0 with non-background RGB.
        set.rgb_layer_mut(0)[3] = [0, 0, 0];
        encode_maps(&set, dir.path()).unwrap();
        let back = decode_maps(dir.path()).unwrap();
        let report = back.meta.validation.unwrap();
        assert_eq!(report.background_mismatches, 1);
        let _ = BACKGROUND_RGB;
    }
}
