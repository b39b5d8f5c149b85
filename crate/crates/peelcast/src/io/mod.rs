//! Mesh and point-cloud file formats.

pub mod obj;
pub mod ply;

pub use obj::{load_obj, save_obj};
pub use ply::{load_mesh, load_mesh_ply, read_ply, write_ply, PlyFormat};
