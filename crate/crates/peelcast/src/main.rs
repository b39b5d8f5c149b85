//! peelcast CLI: peel meshes into layered depth/RGB maps, back-project maps
//! into point clouds, and score reconstructions.
//!
//! Machine-readable results go to stdout as JSON; progress and logs go to
//! stderr (line-delimited JSON for dataset runs). Exit codes: 0 success,
//! 1 validation/quality failure, 2 usage error, 3 I/O or decode error.
//! Set RAYON_NUM_THREADS to override the worker thread count.

use clap::{Parser, Subcommand};
use peelcast::camera::{normalize_unit_box, view_ring, Intrinsics, ViewConfig};
use peelcast::cloud::{backproject_maps, backproject_maps_world};
use peelcast::codec::{decode_maps, encode_maps_with, DepthEncoding};
use peelcast::dataset::{generate_dataset, roundtrip_check, DatasetConfig};
use peelcast::io::{load_mesh, read_ply, write_ply, PlyFormat};
use peelcast::loss::{combined_loss, LossReport, LossWeights};
use peelcast::peel::{render_peeled, RenderOptions};
use peelcast::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ExitStatus {
    Success = 0,
    /// Quality gate or validation failed (the command itself ran fine).
    QualityFailure = 1,
    /// Bad flags or arguments. clap's own usage errors use this code too.
    UsageError = 2,
    IoError = 3,
}

impl From<ExitStatus> for ExitCode {
    fn from(s: ExitStatus) -> ExitCode {
        ExitCode::from(s as u8)
    }
}

fn status_for(e: &Error) -> ExitStatus {
    match e {
        Error::InvalidArgument(_) | Error::ShapeMismatch(_) | Error::DegenerateGeometry(_) => {
            ExitStatus::UsageError
        }
        Error::Io { .. } | Error::Decode { .. } => ExitStatus::IoError,
    }
}

#[derive(Parser)]
#[command(
    name = "peelcast",
    version,
    about = "Layered depth peeling for triangle meshes: render, reconstruct, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a mesh into a peeled depth/RGB map directory.
    Peel {
        /// Input mesh (.obj or .ply).
        #[arg(long)]
        mesh: PathBuf,
        /// Output directory for the map files.
        #[arg(long)]
        out: PathBuf,
        /// Number of peel layers (2 gives the two-sided "moulding" mode).
        #[arg(long, default_value_t = 4)]
        layers: usize,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 512)]
        height: u32,
        /// Camera azimuth in degrees on the orbit ring.
        #[arg(long, default_value_t = 0.0)]
        view_angle: f64,
        /// Camera distance from the origin.
        #[arg(long, default_value_t = 2.0)]
        distance: f64,
        /// Skip unit-box normalization of the mesh.
        #[arg(long)]
        no_normalize: bool,
        /// Depth file format: pfm (lossless, default) or png16 (quantized).
        #[arg(long, value_enum, default_value_t = DepthFormatArg::Pfm)]
        depth_format: DepthFormatArg,
    },
    /// Back-project a map directory into a point-cloud PLY.
    Backproject {
        /// Directory written by `peel` or `dataset`.
        #[arg(long)]
        maps: PathBuf,
        /// Output .ply path.
        #[arg(long)]
        out: PathBuf,
        /// Undo the view pose and unit-box transform from meta.json.
        #[arg(long)]
        world_frame: bool,
        /// Recolor points red/blue/green/yellow by layer 1-4.
        #[arg(long)]
        color_by_layer: bool,
        /// Write ASCII PLY instead of binary little-endian.
        #[arg(long)]
        ascii: bool,
    },
    /// Chamfer distance between two point-cloud PLY files.
    Chamfer {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Also report the sum of the two directed means.
        #[arg(long)]
        mean: bool,
    },
    /// Evaluate the loss kernels of a predicted map set against ground truth.
    Losses {
        /// Predicted map directory.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth map directory.
        #[arg(long)]
        gt: PathBuf,
        /// Ground-truth point cloud (PLY), in the camera frame of the maps.
        #[arg(long)]
        gt_cloud: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        gamma: f64,
        #[arg(long, default_value_t = 100.0)]
        lambda_depth: f64,
        #[arg(long, default_value_t = 500.0)]
        lambda_rgb: f64,
        #[arg(long, default_value_t = 500.0)]
        lambda_cham: f64,
        #[arg(long, default_value_t = 500.0)]
        lambda_smooth: f64,
        /// Externally computed adversarial term added to the total.
        #[arg(long, default_value_t = 0.0)]
        adversarial: f64,
    },
    /// Render every mesh of a directory from a ring of views.
    Dataset {
        /// Directory of .obj/.ply meshes.
        #[arg(long)]
        input: PathBuf,
        /// Output root; samples land in <output>/<mesh-stem>/<angle>/.
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated view azimuths in degrees.
        #[arg(long, value_delimiter = ',', default_value = "0,45,60,90")]
        views: Vec<f64>,
        /// Square image resolution.
        #[arg(long, default_value_t = 512)]
        resolution: u32,
        #[arg(long, default_value_t = 4)]
        layers: usize,
        #[arg(long, default_value_t = 2.0)]
        distance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long, value_enum, default_value_t = DepthFormatArg::Pfm)]
        depth_format: DepthFormatArg,
    },
    /// Render, back-project, and score a mesh against its own surface.
    Roundtrip {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 256)]
        resolution: u32,
        #[arg(long, default_value_t = 0.0)]
        view_angle: f64,
        #[arg(long, default_value_t = 4)]
        layers: usize,
        #[arg(long, default_value_t = 2.0)]
        distance: f64,
        /// Max allowed point-to-surface distance; defaults to
        /// 1e-3 x the bounding-box diagonal.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum DepthFormatArg {
    Pfm,
    Png16,
}

impl From<DepthFormatArg> for DepthEncoding {
    fn from(v: DepthFormatArg) -> DepthEncoding {
        match v {
            DepthFormatArg::Pfm => DepthEncoding::Pfm,
            DepthFormatArg::Png16 => DepthEncoding::Png16,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e}");
            status_for(&e).into()
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialization cannot fail")
    );
}

fn single_view(angle: f64, distance: f64, intr: &Intrinsics) -> Result<ViewConfig, Error> {
    Ok(view_ring(&[angle], distance, intr)?.remove(0))
}

fn run(cli: Cli) -> Result<ExitStatus, Error> {
    match cli.command {
        Command::Peel {
            mesh,
            out,
            layers,
            width,
            height,
            view_angle,
            distance,
            no_normalize,
            depth_format,
        } => {
            let loaded = load_mesh(&mesh)?;
            let (prepared, unit_box) = if no_normalize {
                (loaded, None)
            } else {
                let (m, t) = normalize_unit_box(&loaded)?;
                (m, Some(t))
            };
            let intr = Intrinsics::centered(width, height)?;
            let view = single_view(view_angle, distance, &intr)?;
            let opts = RenderOptions::with_layers(layers);
            let mut set = render_peeled(&prepared, &view, &opts)?;
            set.meta.source = mesh.display().to_string();
            set.meta.unit_box = unit_box;
            let files = encode_maps_with(&set, &out, depth_format.into())?;
            let validation = set.validate();
            print_json(&serde_json::json!({
                "out": out,
                "files": files.len(),
                "validation": validation,
            }));
            if validation.is_clean() {
                Ok(ExitStatus::Success)
            } else {
                eprintln!("validation found {} violation(s)", validation.total_violations());
                Ok(ExitStatus::QualityFailure)
            }
        }

        Command::Backproject {
            maps,
            out,
            world_frame,
            color_by_layer,
            ascii,
        } => {
            let set = decode_maps(&maps)?;
            let mut cloud = if world_frame {
                backproject_maps_world(&set)
            } else {
                backproject_maps(&set)
            };
            if color_by_layer {
                cloud = cloud.colored_by_layer();
            }
            if cloud.is_empty() {
                eprintln!("warning: all pixels are background; writing an empty cloud");
            }
            let format = if ascii {
                PlyFormat::Ascii
            } else {
                PlyFormat::BinaryLittleEndian
            };
            write_ply(&cloud, &out, format)?;
            print_json(&serde_json::json!({
                "out": out,
                "points": cloud.len(),
            }));
            Ok(ExitStatus::Success)
        }

        Command::Chamfer { a, b, mean } => {
            let (cloud_a, _) = read_ply(&a)?;
            let (cloud_b, _) = read_ply(&b)?;
            if cloud_a.is_empty() || cloud_b.is_empty() {
                eprintln!("error: Chamfer distance is undefined for empty clouds");
                return Ok(ExitStatus::QualityFailure);
            }
            let d = peelcast::loss::chamfer(&cloud_a, &cloud_b)?;
            let mut report = serde_json::json!({
                "sum": d.sum,
                "mean_fwd": d.mean_fwd,
                "mean_bwd": d.mean_bwd,
            });
            if mean {
                report["mean_total"] = (d.mean_fwd + d.mean_bwd).into();
            }
            print_json(&report);
            Ok(ExitStatus::Success)
        }

        Command::Losses {
            pred,
            gt,
            gt_cloud,
            gamma,
            lambda_depth,
            lambda_rgb,
            lambda_cham,
            lambda_smooth,
            adversarial,
        } => {
            let pred_set = decode_maps(&pred)?;
            let gt_set = decode_maps(&gt)?;
            let (cloud, warnings) = read_ply(&gt_cloud)?;
            for w in warnings {
                eprintln!("warning: {}: {w}", gt_cloud.display());
            }
            let weights = LossWeights {
                gamma,
                lambda_depth,
                lambda_rgb,
                lambda_cham,
                lambda_smooth,
                adversarial,
            };
            let breakdown = combined_loss(&pred_set, &gt_set, &cloud, &weights)?;
            print_json(&LossReport::new(&breakdown, &weights));
            Ok(ExitStatus::Success)
        }

        Command::Dataset {
            input,
            output,
            views,
            resolution,
            layers,
            distance,
            seed,
            no_normalize,
            depth_format,
        } => {
            let mut cfg = DatasetConfig::new(&output);
            cfg.views = views;
            cfg.width = resolution;
            cfg.height = resolution;
            cfg.n_layers = layers;
            cfg.distance = distance;
            cfg.seed = seed;
            cfg.normalize = !no_normalize;
            cfg.depth_encoding = depth_format.into();
            let manifest = generate_dataset(&input, &cfg, |event| {
                eprintln!("{}", serde_json::to_string(event).unwrap_or_default());
            })?;
            print_json(&serde_json::json!({
                "manifest": output.join("manifest.json"),
                "entries": manifest.entries.len(),
            }));
            Ok(ExitStatus::Success)
        }

        Command::Roundtrip {
            mesh,
            resolution,
            view_angle,
            layers,
            distance,
            tolerance,
            seed,
        } => {
            let mut cfg = DatasetConfig::new(std::env::temp_dir());
            cfg.width = resolution;
            cfg.height = resolution;
            cfg.n_layers = layers;
            cfg.distance = distance;
            cfg.seed = seed;
            let view = single_view(view_angle, distance, &cfg.intrinsics()?)?;
            let report = roundtrip_check(&mesh, &view, &cfg)?;
            print_json(&report);
            if report.status != "ok" {
                eprintln!("mesh is out of frame");
                return Ok(ExitStatus::QualityFailure);
            }
            let tol = tolerance.unwrap_or(1e-3 * report.bbox_diagonal);
            let max_dist = report.max_surface_distance.unwrap_or(f64::INFINITY);
            if max_dist > tol {
                eprintln!("max surface distance {max_dist} exceeds tolerance {tol}");
                return Ok(ExitStatus::QualityFailure);
            }
            Ok(ExitStatus::Success)
        }
    }
}
