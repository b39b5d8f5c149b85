//! Batch ground-truth generation: normalize each input mesh to a unit box,
//! render one peeled map set per view of an orbit ring, write the file
//! families plus a checksummed manifest, and run round-trip quality checks.
//!
//! Generation is deterministic: the same meshes, config, and seed produce a
//! byte-identical tree, and a rerun over complete output renders nothing.

use crate::bvh::Bvh;
use crate::camera::{normalize_unit_box, view_ring, Intrinsics, UnitBoxTransform, ViewConfig};
use crate::cloud::{backproject_maps_world, sample_surface};
use crate::codec::{decode_maps, encode_maps_with, DepthEncoding};
use crate::error::{Error, Result};
use crate::io::load_mesh;
use crate::loss::{chamfer, ChamferDistance};
use crate::maps::ValidationReport;
use crate::mesh::TriMesh;
use crate::peel::{render_peeled_with, RenderOptions};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Dataset generation settings. The defaults reproduce the standard
/// protocol: views 0/45/60/90 degrees, 4 layers, 512x512, orbit distance 2.
#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub views: Vec<f64>,
    pub n_layers: usize,
    pub width: u32,
    pub height: u32,
    pub distance: f64,
    /// Defaults to centered intrinsics with `fx = fy = height`.
    pub intrinsics: Option<Intrinsics>,
    pub seed: u64,
    /// Normalize each mesh to the unit box before rendering.
    pub normalize: bool,
    pub depth_encoding: DepthEncoding,
    pub output_root: PathBuf,
}

impl DatasetConfig {
    pub fn new(output_root: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            views: vec![0.0, 45.0, 60.0, 90.0],
            n_layers: 4,
            width: 512,
            height: 512,
            distance: 2.0,
            intrinsics: None,
            seed: 0,
            normalize: true,
            depth_encoding: DepthEncoding::Pfm,
            output_root: output_root.into(),
        }
    }

    pub fn intrinsics(&self) -> Result<Intrinsics> {
        match self.intrinsics {
            Some(i) => Ok(i),
            None => Intrinsics::centered(self.width, self.height),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 32 || self.height < 32 {
            return Err(Error::invalid(format!(
                "resolution must be at least 32, got {}x{}",
                self.width, self.height
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::invalid("n_layers must be at least 1"));
        }
        Ok(())
    }

    pub fn view_configs(&self) -> Result<Vec<ViewConfig>> {
        view_ring(&self.views, self.distance, &self.intrinsics()?)
    }
}

/// One line of the run log (line-delimited JSON on the CLI).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunEvent {
    pub event: String,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

impl RunEvent {
    fn new(event: &str, path: impl Into<String>) -> Self {
        RunEvent {
            event: event.into(),
            path: path.into(),
            reason: None,
            duration_ms: None,
        }
    }

    fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }

    fn with_duration(mut self, since: Instant) -> Self {
        self.duration_ms = Some(since.elapsed().as_millis() as u64);
        self
    }
}

/// One generated sample: a mesh/view pair and its files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    /// Source mesh path as given.
    pub source: String,
    pub view_label: String,
    /// Sample directory relative to the manifest location.
    pub directory: String,
    pub unit_box: UnitBoxTransform,
    /// CRC-32 per file name.
    pub checksums: BTreeMap<String, u32>,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::decode(path, format!("malformed manifest: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

fn crc32_of_file(path: &Path) -> Result<u32> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes);
    Ok(hasher.finalize())
}

fn checksum_dir(files: &[PathBuf]) -> Result<BTreeMap<String, u32>> {
    let mut sums = BTreeMap::new();
    for f in files {
        let name = f
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        sums.insert(name, crc32_of_file(f)?);
    }
    Ok(sums)
}

/// Relative directory for one sample: `<mesh-stem>/<angle>/`.
fn sample_rel_dir(mesh_path: &Path, view: &ViewConfig) -> String {
    let stem = mesh_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh");
    format!("{stem}/{}", view.label)
}

/// The file names a sample directory must contain.
fn expected_files(cfg: &DatasetConfig) -> Vec<String> {
    let mut names = Vec::new();
    for layer in 1..=cfg.n_layers {
        names.push(match cfg.depth_encoding {
            DepthEncoding::Pfm => format!("depth_{layer}.pfm"),
            DepthEncoding::Png16 => format!("depth_{layer}.png"),
        });
    }
    for layer in 1..=cfg.n_layers {
        names.push(format!("rgb_{layer}.png"));
    }
    names.push("meta.json".into());
    names
}

/// Renders one mesh/view sample into `<output_root>/<mesh-stem>/<angle>/`
/// and returns its manifest entry. The mesh is normalized to the unit box
/// first unless the config disables it.
pub fn generate_sample(
    mesh_path: &Path,
    view: &ViewConfig,
    cfg: &DatasetConfig,
) -> Result<ManifestEntry> {
    cfg.validate()?;
    let mesh = load_mesh(mesh_path)?;
    let bvh_mesh = prepared_mesh(&mesh, cfg)?;
    let bvh = Bvh::build(&bvh_mesh.mesh)?;
    generate_sample_prepared(mesh_path, &bvh_mesh, &bvh, view, cfg)
}

/// A mesh plus the unit-box transform that produced it.
struct PreparedMesh {
    mesh: TriMesh,
    unit_box: UnitBoxTransform,
}

fn prepared_mesh(mesh: &TriMesh, cfg: &DatasetConfig) -> Result<PreparedMesh> {
    if cfg.normalize {
        let (mesh, unit_box) = normalize_unit_box(mesh)?;
        Ok(PreparedMesh { mesh, unit_box })
    } else {
        Ok(PreparedMesh {
            mesh: mesh.clone(),
            unit_box: UnitBoxTransform::IDENTITY,
        })
    }
}

fn generate_sample_prepared(
    mesh_path: &Path,
    prepared: &PreparedMesh,
    bvh: &Bvh,
    view: &ViewConfig,
    cfg: &DatasetConfig,
) -> Result<ManifestEntry> {
    let rel = sample_rel_dir(mesh_path, view);
    let dir = cfg.output_root.join(&rel);
    let opts = RenderOptions::with_layers(cfg.n_layers);
    let mut set = render_peeled_with(&prepared.mesh, bvh, view, &opts)?;
    set.meta.source = mesh_path.display().to_string();
    set.meta.unit_box = Some(prepared.unit_box);
    let files = encode_maps_with(&set, &dir, cfg.depth_encoding)?;
    Ok(ManifestEntry {
        source: mesh_path.display().to_string(),
        view_label: view.label.clone(),
        directory: rel,
        unit_box: prepared.unit_box,
        checksums: checksum_dir(&files)?,
        validation: set.validate(),
    })
}

/// True when the sample directory already holds a complete, decodable file
/// family whose checksums match `prior` (when a prior manifest entry exists).
fn sample_is_complete(
    dir: &Path,
    cfg: &DatasetConfig,
    prior: Option<&ManifestEntry>,
) -> Result<Option<BTreeMap<String, u32>>> {
    let names = expected_files(cfg);
    let files: Vec<PathBuf> = names.iter().map(|n| dir.join(n)).collect();
    if !files.iter().all(|f| f.is_file()) {
        return Ok(None);
    }
    let sums = checksum_dir(&files)?;
    if let Some(prior) = prior {
        if prior.checksums != sums {
            return Ok(None);
        }
    } else {
        // No manifest to compare against: probe by decoding.
        match decode_maps(dir) {
            Ok(set) => {
                if set.n_layers() != cfg.n_layers
                    || set.width() != cfg.width
                    || set.height() != cfg.height
                {
                    return Ok(None);
                }
            }
            Err(_) => return Ok(None),
        }
    }
    Ok(Some(sums))
}

/// Lists the loadable mesh files (`.obj`, `.ply`) of a directory, sorted by
/// name for determinism.
pub fn list_mesh_files(input_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut meshes = Vec::new();
    let entries = std::fs::read_dir(input_dir).map_err(|e| Error::io(input_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(input_dir, e))?;
        let path = entry.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("obj") | Some("ply")) {
            meshes.push(path);
        }
    }
    meshes.sort();
    Ok(meshes)
}

/// Renders every mesh of `input_dir` from every configured view, writing
/// `manifest.json` at the output root. Samples that already exist with
/// valid checksums are skipped, so interrupted runs resume cheaply.
///
/// `on_event` receives one [`RunEvent`] per sample, skip, and failure.
pub fn generate_dataset(
    input_dir: &Path,
    cfg: &DatasetConfig,
    mut on_event: impl FnMut(&RunEvent),
) -> Result<Manifest> {
    cfg.validate()?;
    let meshes = list_mesh_files(input_dir)?;
    if meshes.is_empty() {
        return Err(Error::invalid(format!(
            "no .obj or .ply meshes found in {}",
            input_dir.display()
        )));
    }
    let views = cfg.view_configs()?;
    std::fs::create_dir_all(&cfg.output_root).map_err(|e| Error::io(&cfg.output_root, e))?;

    let manifest_path = cfg.output_root.join("manifest.json");
    let prior = if manifest_path.is_file() {
        Manifest::load(&manifest_path).ok()
    } else {
        None
    };
    let prior_by_dir: BTreeMap<&str, &ManifestEntry> = prior
        .as_ref()
        .map(|m| {
            m.entries
                .iter()
                .map(|e| (e.directory.as_str(), e))
                .collect()
        })
        .unwrap_or_default();

    let mut manifest = Manifest::default();
    for mesh_path in &meshes {
        let started = Instant::now();
        let mesh = match load_mesh(mesh_path) {
            Ok(m) if m.triangle_count() > 0 => m,
            Ok(_) => {
                on_event(
                    &RunEvent::new("skip", mesh_path.display().to_string())
                        .with_reason("empty mesh"),
                );
                continue;
            }
            Err(e) => {
                on_event(
                    &RunEvent::new("skip", mesh_path.display().to_string())
                        .with_reason(e.to_string()),
                );
                continue;
            }
        };
        let prepared = match prepared_mesh(&mesh, cfg) {
            Ok(p) => p,
            Err(e) => {
                on_event(
                    &RunEvent::new("skip", mesh_path.display().to_string())
                        .with_reason(e.to_string()),
                );
                continue;
            }
        };
        let bvh = match Bvh::build(&prepared.mesh) {
            Ok(b) => b,
            Err(e) => {
                on_event(
                    &RunEvent::new("skip", mesh_path.display().to_string())
                        .with_reason(e.to_string()),
                );
                continue;
            }
        };

        for view in &views {
            let rel = sample_rel_dir(mesh_path, view);
            let dir = cfg.output_root.join(&rel);
            let view_started = Instant::now();
            if let Some(sums) = sample_is_complete(&dir, cfg, prior_by_dir.get(rel.as_str()).copied())?
            {
                let entry = match prior_by_dir.get(rel.as_str()) {
                    Some(&e) => e.clone(),
                    None => {
                        let set = decode_maps(&dir)?;
                        ManifestEntry {
                            source: mesh_path.display().to_string(),
                            view_label: view.label.clone(),
                            directory: rel.clone(),
                            unit_box: set.meta.unit_box.unwrap_or(UnitBoxTransform::IDENTITY),
                            checksums: sums,
                            validation: set.validate(),
                        }
                    }
                };
                manifest.entries.push(entry);
                on_event(&RunEvent::new("resume", dir.display().to_string()));
                continue;
            }
            match generate_sample_prepared(mesh_path, &prepared, &bvh, view, cfg) {
                Ok(entry) => {
                    manifest.entries.push(entry);
                    on_event(
                        &RunEvent::new("sample", dir.display().to_string())
                            .with_duration(view_started),
                    );
                }
                Err(e) => {
                    on_event(
                        &RunEvent::new("error", dir.display().to_string())
                            .with_reason(e.to_string()),
                    );
                    return Err(e);
                }
            }
        }
        on_event(
            &RunEvent::new("mesh_done", mesh_path.display().to_string()).with_duration(started),
        );
    }

    manifest.save(&manifest_path)?;
    Ok(manifest)
}

/// What [`roundtrip_check`] found.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundtripReport {
    /// "ok" or "out of frame".
    pub status: String,
    /// Reconstructed point count (0 when out of frame).
    pub point_count: usize,
    /// Chamfer against an equally sized surface sampling, when in frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chamfer: Option<ChamferDistance>,
    /// Largest distance from any reconstructed point to the mesh surface.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_surface_distance: Option<f64>,
    /// Diagonal of the rendered mesh's bounding box (tolerances scale on it).
    pub bbox_diagonal: f64,
}

/// Renders `mesh_path` from `view`, back-projects the maps, and scores the
/// reconstruction against the mesh itself: Chamfer versus an area-weighted
/// surface sampling of equal size, plus the maximum point-to-surface
/// distance.
pub fn roundtrip_check(
    mesh_path: &Path,
    view: &ViewConfig,
    cfg: &DatasetConfig,
) -> Result<RoundtripReport> {
    let mesh = load_mesh(mesh_path)?;
    roundtrip_check_mesh(&mesh, view, cfg)
}

/// [`roundtrip_check`] over an in-memory mesh.
pub fn roundtrip_check_mesh(
    mesh: &TriMesh,
    view: &ViewConfig,
    cfg: &DatasetConfig,
) -> Result<RoundtripReport> {
    let prepared = prepared_mesh(mesh, cfg)?;
    let bvh = Bvh::build(&prepared.mesh)?;
    let opts = RenderOptions::with_layers(cfg.n_layers);
    let mut set = render_peeled_with(&prepared.mesh, &bvh, view, &opts)?;
    set.meta.unit_box = None; // compare in the normalized frame
    let cloud = backproject_maps_world(&set);
    let diag = bvh.bounds().diagonal();
    if cloud.is_empty() {
        return Ok(RoundtripReport {
            status: "out of frame".into(),
            point_count: 0,
            chamfer: None,
            max_surface_distance: None,
            bbox_diagonal: diag,
        });
    }

    let samples = sample_surface(&prepared.mesh, cloud.len(), cfg.seed)?;
    let cham = chamfer(&cloud, &samples)?;
    let max_dist_sq = cloud
        .points()
        .iter()
        .map(|&p| bvh.distance_sq_to_surface(p))
        .fold(0.0f64, f64::max);
    Ok(RoundtripReport {
        status: "ok".into(),
        point_count: cloud.len(),
        chamfer: Some(cham),
        max_surface_distance: Some(max_dist_sq.sqrt()),
        bbox_diagonal: diag,
    })
}
