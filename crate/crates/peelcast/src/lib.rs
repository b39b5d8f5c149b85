//! peelcast encodes triangle meshes as multi-layer peeled depth & RGB maps
//! via multi-hit ray tracing, decodes those maps back into colored 3D point
//! clouds, and scores reconstructions with Chamfer and per-map loss kernels.
//!
//! The pipeline, end to end:
//!
//! ```
//! use peelcast::prelude::*;
//!
//! // A mesh, normalized so its longest bounding-box edge is 1.
//! let mesh = peelcast::mesh::primitives::icosphere(0.7, 3);
//! let (mesh, _transform) = normalize_unit_box(&mesh)?;
//!
//! // A camera orbit: one view per azimuth, looking at the origin.
//! let intr = Intrinsics::centered(128, 128)?;
//! let views = view_ring(&[0.0, 45.0, 60.0, 90.0], 2.0, &intr)?;
//!
//! // Peel: every ray records all its surface crossings, front to back.
//! let maps = render_peeled(&mesh, &views[0], &RenderOptions::default())?;
//! assert!(maps.validate().is_clean());
//!
//! // Back-project the non-background pixels into a colored point cloud.
//! let cloud = backproject_maps(&maps);
//! assert!(cloud.len() > 1000);
//!
//! // Score a reconstruction against ground truth.
//! let gt = sample_surface(&mesh, cloud.len(), 7)?;
//! let d = chamfer(&cloud.map_points(|p| views[0].pose.apply_inverse(p)), &gt)?;
//! assert!(d.sum / cloud.len() as f64 * 2.0 < 1e-3);
//! # Ok::<(), peelcast::Error>(())
//! ```
//!
//! Conventions (fixed across the crate): right-handed coordinates, camera
//! looking down +z, image y down, rays through pixel centers, depth = the
//! camera-frame z coordinate, background depth 0 with RGB (255, 255, 255).
//!
//! The `book/` directory of the repository walks through each piece; its
//! code snippets compile and run as doctests of this crate.

pub mod bvh;
pub mod camera;
pub mod cloud;
pub mod codec;
pub mod dataset;
pub mod error;
pub mod io;
pub mod kdtree;
pub mod loss;
pub mod maps;
pub mod math;
pub mod mesh;
pub mod peel;

pub use error::{Error, Result};

/// The commonly used surface in one import.
pub mod prelude {
    pub use crate::camera::{
        backproject_pixel, normalize_unit_box, ray_direction, view_ring, Intrinsics, RigidPose,
        UnitBoxTransform, ViewConfig,
    };
    pub use crate::cloud::{backproject_maps, backproject_maps_world, sample_surface, PointCloud};
    pub use crate::codec::{decode_maps, encode_maps, DepthEncoding};
    pub use crate::error::{Error, Result};
    pub use crate::loss::{
        chamfer, combined_loss, depth_loss, rgb_loss, smoothness_loss, LossBreakdown, LossWeights,
    };
    pub use crate::maps::{PeeledMapSet, ValidationReport};
    pub use crate::mesh::TriMesh;
    pub use crate::peel::{peel_trace, render_peeled, shade_hit, Hit, Ray, RenderOptions};
}

// The book's code blocks are compiled and run by `cargo test --doc`, keeping
// the guide in sync with the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/camera-model.md")]
    mod camera_model {}
    #[doc = include_str!("../../../book/src/peeling.md")]
    mod peeling {}
    #[doc = include_str!("../../../book/src/map-files.md")]
    mod map_files {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
