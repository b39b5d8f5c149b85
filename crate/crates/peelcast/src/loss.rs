//! Numeric kernels scoring a predicted map set against ground truth:
//! squared-distance Chamfer between point clouds, occlusion-weighted depth
//! L1, RGB L1 over the hidden layers, a first-derivative smoothness term,
//! and their weighted combination.
//!
//! All per-pixel losses are raw sums over pixels (and layers/channels), not
//! means; means are exposed for reporting where noted.

use crate::cloud::{backproject_maps, PointCloud};
use crate::error::{Error, Result};
use crate::kdtree::KdTree3;
use crate::maps::PeeledMapSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Weights of the combined objective. `adversarial` is an externally
/// supplied scalar added verbatim (this crate does not compute it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Extra weight (> 1) on occluded ground-truth pixels in the depth term.
    pub gamma: f64,
    pub lambda_depth: f64,
    pub lambda_rgb: f64,
    pub lambda_cham: f64,
    pub lambda_smooth: f64,
    pub adversarial: f64,
}

impl Default for LossWeights {
    /// gamma 10, depth 100, chamfer 500, rgb 500, smooth 500, adversarial 0.
    fn default() -> Self {
        LossWeights {
            gamma: 10.0,
            lambda_depth: 100.0,
            lambda_rgb: 500.0,
            lambda_cham: 500.0,
            lambda_smooth: 500.0,
            adversarial: 0.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0) {
            return Err(Error::invalid(format!(
                "gamma must be >= 1, got {}",
                self.gamma
            )));
        }
        for (name, v) in [
            ("lambda_depth", self.lambda_depth),
            ("lambda_rgb", self.lambda_rgb),
            ("lambda_cham", self.lambda_cham),
            ("lambda_smooth", self.lambda_smooth),
        ] {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// The two directed sums of the Chamfer distance and their means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamferDistance {
    /// Sum of both directed squared-distance sums (the loss value).
    pub sum: f64,
    /// Forward directed sum divided by |P|.
    pub mean_fwd: f64,
    /// Backward directed sum divided by |Q|.
    pub mean_bwd: f64,
}

/// Squared-Euclidean Chamfer distance between two non-empty clouds:
/// `sum_p min_q |p-q|^2 + sum_q min_p |q-p|^2`, unnormalized.
pub fn chamfer(p: &PointCloud, q: &PointCloud) -> Result<ChamferDistance> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::invalid(
            "Chamfer distance is undefined for empty clouds",
        ));
    }
    let fwd = directed_sum(p.points(), q.points());
    let bwd = directed_sum(q.points(), p.points());
    Ok(ChamferDistance {
        sum: fwd + bwd,
        mean_fwd: fwd / p.len() as f64,
        mean_bwd: bwd / q.len() as f64,
    })
}

/// `sum_{a in from} min_{b in to} |a-b|^2` via a k-d tree. Distances are
/// gathered in input order and summed sequentially, so the result is
/// deterministic and equals the brute-force scan.
fn directed_sum(from: &[crate::math::Vec3], to: &[crate::math::Vec3]) -> f64 {
    let tree = KdTree3::build(to);
    let dists: Vec<f64> = from
        .par_iter()
        .map(|&a| tree.nearest_dist_sq(a))
        .collect();
    dists.iter().sum()
}

fn check_same_shape(pred: &PeeledMapSet, gt: &PeeledMapSet) -> Result<()> {
    if !pred.same_shape(gt) {
        return Err(Error::shape(format!(
            "pred is {}x{} with {} layers, gt is {}x{} with {} layers",
            pred.width(),
            pred.height(),
            pred.n_layers(),
            gt.width(),
            gt.height(),
            gt.n_layers()
        )));
    }
    Ok(())
}

/// First layer index (0-based) whose nonzero ground-truth pixels count as
/// occluded: layers 3 and 4 in 1-based terms.
const OCCLUDED_FROM_LAYER: usize = 2;

/// Occlusion-weighted depth L1: `sum_i sum_px m_i |d_i - dhat_i|` where
/// `m_i = gamma` on pixels with nonzero ground-truth depth in layers >= 3
/// and 1 everywhere else.
pub fn depth_loss(pred: &PeeledMapSet, gt: &PeeledMapSet, gamma: f64) -> Result<f64> {
    check_same_shape(pred, gt)?;
    let mut total = 0.0f64;
    for layer in 0..pred.n_layers() {
        let occludable = layer >= OCCLUDED_FROM_LAYER;
        for (&d_pred, &d_gt) in pred.depth_layer(layer).iter().zip(gt.depth_layer(layer)) {
            let m = if occludable && d_gt != 0.0 { gamma } else { 1.0 };
            total += m * (d_gt as f64 - d_pred as f64).abs();
        }
    }
    Ok(total)
}

/// RGB L1 over layers 2..n (the first layer is the input image and is not
/// scored), channels scaled to [0, 1].
pub fn rgb_loss(pred: &PeeledMapSet, gt: &PeeledMapSet) -> Result<f64> {
    check_same_shape(pred, gt)?;
    let mut total = 0.0f64;
    for layer in 1..pred.n_layers() {
        for (cp, cg) in pred.rgb_layer(layer).iter().zip(gt.rgb_layer(layer)) {
            for ch in 0..3 {
                total += (cp[ch] as f64 - cg[ch] as f64).abs() / 255.0;
            }
        }
    }
    Ok(total)
}

/// Forward-difference image gradient: `dx[y][x] = map[y][x+1] - map[y][x]`
/// with the last column zero, and the analogous `dy` with the last row zero.
pub fn image_gradient(map: &[f32], width: usize, height: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if width < 2 || height < 2 {
        return Err(Error::invalid(format!(
            "gradient needs at least 2x2 pixels, got {width}x{height}"
        )));
    }
    if map.len() != width * height {
        return Err(Error::shape(format!(
            "map has {} values, expected {width}x{height}",
            map.len()
        )));
    }
    let mut dx = vec![0.0f64; width * height];
    let mut dy = vec![0.0f64; width * height];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if x + 1 < width {
                dx[i] = map[i + 1] as f64 - map[i] as f64;
            }
            if y + 1 < height {
                dy[i] = map[i + width] as f64 - map[i] as f64;
            }
        }
    }
    Ok((dx, dy))
}

/// L1 distance between the depth-map gradients of pred and gt, summed over
/// both gradient components, all pixels, all layers.
pub fn smoothness_loss(pred: &PeeledMapSet, gt: &PeeledMapSet) -> Result<f64> {
    check_same_shape(pred, gt)?;
    let (w, h) = (pred.width() as usize, pred.height() as usize);
    let mut total = 0.0f64;
    for layer in 0..pred.n_layers() {
        let (pdx, pdy) = image_gradient(pred.depth_layer(layer), w, h)?;
        let (gdx, gdy) = image_gradient(gt.depth_layer(layer), w, h)?;
        for i in 0..w * h {
            total += (pdx[i] - gdx[i]).abs() + (pdy[i] - gdy[i]).abs();
        }
    }
    Ok(total)
}

/// The unweighted kernel values plus the weighted total.
///
/// `total = adversarial + lambda_depth*depth + lambda_rgb*rgb +
/// lambda_cham*chamfer.sum + lambda_smooth*smooth`; when the predicted set
/// back-projects to an empty cloud `chamfer` is `None` and the total is
/// computed without that term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub depth: f64,
    pub rgb: f64,
    pub chamfer: Option<ChamferDistance>,
    pub smooth: f64,
    pub adversarial: f64,
    pub total: f64,
}

/// Evaluates all four kernels and combines them with `weights`.
///
/// The Chamfer term compares the back-projection of `pred` against
/// `gt_cloud` (which must be non-empty and live in the same frame the maps
/// back-project into).
pub fn combined_loss(
    pred: &PeeledMapSet,
    gt: &PeeledMapSet,
    gt_cloud: &PointCloud,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    weights.validate()?;
    if gt_cloud.is_empty() {
        return Err(Error::invalid("ground-truth cloud must be non-empty"));
    }
    let depth = depth_loss(pred, gt, weights.gamma)?;
    let rgb = rgb_loss(pred, gt)?;
    let smooth = smoothness_loss(pred, gt)?;
    let pred_cloud = backproject_maps(pred);
    let cham = if pred_cloud.is_empty() {
        None
    } else {
        Some(chamfer(&pred_cloud, gt_cloud)?)
    };
    let mut total = weights.adversarial
        + weights.lambda_depth * depth
        + weights.lambda_rgb * rgb
        + weights.lambda_smooth * smooth;
    if let Some(c) = &cham {
        total += weights.lambda_cham * c.sum;
    }
    Ok(LossBreakdown {
        depth,
        rgb,
        chamfer: cham,
        smooth,
        adversarial: weights.adversarial,
        total,
    })
}

/// JSON-facing loss report:
/// `{depth, rgb, chamfer_sum, chamfer_mean_fwd, chamfer_mean_bwd, smooth,
/// adversarial, total, weights}`. Chamfer fields are null when the predicted
/// cloud was empty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossReport {
    pub depth: f64,
    pub rgb: f64,
    pub chamfer_sum: Option<f64>,
    pub chamfer_mean_fwd: Option<f64>,
    pub chamfer_mean_bwd: Option<f64>,
    pub smooth: f64,
    pub adversarial: f64,
    pub total: f64,
    pub weights: LossWeights,
}

impl LossReport {
    pub fn new(breakdown: &LossBreakdown, weights: &LossWeights) -> Self {
        LossReport {
            depth: breakdown.depth,
            rgb: breakdown.rgb,
            chamfer_sum: breakdown.chamfer.map(|c| c.sum),
            chamfer_mean_fwd: breakdown.chamfer.map(|c| c.mean_fwd),
            chamfer_mean_bwd: breakdown.chamfer.map(|c| c.mean_bwd),
            smooth: breakdown.smooth,
            adversarial: breakdown.adversarial,
            total: breakdown.total,
            weights: *weights,
        }
    }
}
