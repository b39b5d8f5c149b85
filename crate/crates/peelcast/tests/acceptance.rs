//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Oracles here are deliberately independent of the library's hot paths:
//! brute-force all-triangle intersection uses a separate Moller-Trumbore
//! implementation, Chamfer uses an all-pairs scan, and geometric checks use
//! analytic sphere/plane distances.

use peelcast::bvh::Bvh;
use peelcast::camera::{normalize_unit_box, view_ring, Intrinsics, RigidPose, ViewConfig};
use peelcast::cloud::{backproject_maps, sample_surface, PointCloud};
use peelcast::codec::{decode_maps, encode_maps, encode_maps_with, DepthEncoding};
use peelcast::dataset::{generate_dataset, DatasetConfig};
use peelcast::loss::{chamfer, combined_loss, depth_loss, rgb_loss, smoothness_loss, LossWeights};
use peelcast::maps::{PeeledMapSet, BACKGROUND_RGB};
use peelcast::math::Vec3;
use peelcast::mesh::{primitives, TriMesh};
use peelcast::peel::{peel_trace, render_peeled, render_peeled_with, Ray, RenderOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> (T, Duration) {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool");
    let start = Instant::now();
    let out = pool.install(f);
    (out, start.elapsed())
}

fn default_view(res: u32, angle: f64) -> ViewConfig {
    let intr = Intrinsics::centered(res, res).unwrap();
    view_ring(&[angle], 2.0, &intr).unwrap().remove(0)
}

fn report(criterion: &str, detail: String) {
    println!("PASS {criterion}: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Round-trip geometry on the icosphere.
// ---------------------------------------------------------------------------
#[test]
fn criterion_1_round_trip_geometry() {
    let mesh = primitives::icosphere(0.5, 4);
    assert_eq!(mesh.triangle_count(), 5120);
    let view = default_view(256, 0.0);

    let ((set, cloud), elapsed) = single_threaded(|| {
        let set = render_peeled(&mesh, &view, &RenderOptions::default()).unwrap();
        let cloud = backproject_maps(&set);
        (set, cloud)
    });
    assert!(set.validate().is_clean());
    assert!(!cloud.is_empty());

    // Sphere center in the camera frame.
    let center = view.pose.apply(Vec3::ZERO);
    let mut worst = 0.0f64;
    for p in cloud.points() {
        let err = ((*p - center).norm() - 0.5).abs();
        worst = worst.max(err);
    }
    assert!(
        worst <= 1e-3,
        "worst |dist - r| = {worst:.2e} exceeds 1e-3"
    );
    assert!(
        elapsed < Duration::from_secs(5),
        "render + back-projection took {elapsed:?}, budget 5 s"
    );
    report(
        "criterion 1 (round-trip geometry)",
        format!(
            "{} points, worst radial error {worst:.2e}, {elapsed:?} single-threaded",
            cloud.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Layer semantics on the nested-boxes scene.
// ---------------------------------------------------------------------------

/// Analytic ray/AABB crossing parameters (entry and exit), by slab test.
fn box_crossings(origin: Vec3, dir: Vec3, min: Vec3, max: Vec3) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for axis in 0..3 {
        let (o, d, mn, mx) = (
            origin.axis(axis),
            dir.axis(axis),
            min.axis(axis),
            max.axis(axis),
        );
        if d == 0.0 {
            if o < mn || o > mx {
                return None;
            }
        } else {
            let (t1, t2) = ((mn - o) / d, (mx - o) / d);
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
    }
    (lo <= hi).then_some((lo, hi))
}

#[test]
fn criterion_2_nested_boxes_layer_semantics() {
    let half = 0.4;
    let mesh = primitives::nested_boxes(half);
    let res = 256u32;
    let intr = Intrinsics::centered(res, res).unwrap();
    let view = ViewConfig {
        intrinsics: intr,
        pose: RigidPose::IDENTITY,
        label: "0".into(),
    };
    let set = render_peeled(&mesh, &view, &RenderOptions::default()).unwrap();
    assert!(set.validate().is_clean());

    let outer = (Vec3::new(-half, -half, 1.0), Vec3::new(half, half, 4.0));
    let inner = (Vec3::new(-half, -half, 2.0), Vec3::new(half, half, 3.0));

    let mut silhouette_pixels = 0usize;
    let mut background_pixels = 0usize;
    for y in 0..res {
        for x in 0..res {
            let dir = peelcast::camera::ray_direction(&intr, x, y).unwrap();
            let crossings_outer = box_crossings(Vec3::ZERO, dir, outer.0, outer.1);
            let crossings_inner = box_crossings(Vec3::ZERO, dir, inner.0, inner.1);

            // The strict silhouette: rays crossing all four z-planes with a
            // clear margin from the side walls.
            let on_planes = match (crossings_outer, crossings_inner) {
                (Some((o_in, o_out)), Some((i_in, i_out))) => {
                    let all = [o_in, i_in, i_out, o_out];
                    let margin = 1e-9;
                    all.iter().zip([1.0, 2.0, 3.0, 4.0]).all(|(&t, plane)| {
                        (t - plane).abs() < margin
                            && (dir.x * t).abs() < half - 1e-6
                            && (dir.y * t).abs() < half - 1e-6
                    })
                }
                _ => false,
            };

            if on_planes {
                silhouette_pixels += 1;
                for (layer, plane) in [1.0f64, 2.0, 3.0, 4.0].iter().enumerate() {
                    let d = set.depth_at(layer, x, y) as f64;
                    assert!(
                        (d - plane).abs() <= 1e-6,
                        "pixel ({x},{y}) layer {layer}: depth {d} vs plane {plane}"
                    );
                }
            }

            if crossings_outer.is_none() {
                background_pixels += 1;
                for layer in 0..4 {
                    assert_eq!(set.depth_at(layer, x, y), 0.0);
                    assert_eq!(set.rgb_at(layer, x, y), BACKGROUND_RGB);
                }
            }

            // Strictly increasing nonzero prefix, zeros as suffix.
            let mut prev = 0.0f32;
            let mut seen_zero = false;
            for layer in 0..4 {
                let d = set.depth_at(layer, x, y);
                if d == 0.0 {
                    seen_zero = true;
                } else {
                    assert!(!seen_zero && d > prev, "bad layer ordering at ({x},{y})");
                    prev = d;
                }
            }
        }
    }
    assert!(silhouette_pixels > 1000, "silhouette unexpectedly small");
    assert!(background_pixels > 1000, "background unexpectedly small");
    report(
        "criterion 2 (layer semantics)",
        format!("{silhouette_pixels} silhouette pixels match planes 1-4 within 1e-6"),
    );
}

// ---------------------------------------------------------------------------
// 3. Chamfer correctness.
// ---------------------------------------------------------------------------

fn brute_chamfer_sum(p: &PointCloud, q: &PointCloud) -> f64 {
    let directed = |a: &PointCloud, b: &PointCloud| -> f64 {
        a.points()
            .iter()
            .map(|&x| {
                b.points()
                    .iter()
                    .map(|&y| (x - y).norm_sq())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
    };
    directed(p, q) + directed(q, p)
}

fn random_cloud(rng: &mut ChaCha8Rng, max_points: usize) -> PointCloud {
    let n = rng.gen_range(1..=max_points);
    let mut cloud = PointCloud::default();
    for _ in 0..n {
        cloud.push(
            Vec3::new(
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
            ),
            [0, 0, 0],
            1,
        );
    }
    cloud
}

#[test]
fn criterion_3_chamfer_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);

    // Identity and exact swap symmetry.
    let p = random_cloud(&mut rng, 300);
    assert_eq!(chamfer(&p, &p).unwrap().sum, 0.0);
    let q = random_cloud(&mut rng, 300);
    assert_eq!(chamfer(&p, &q).unwrap().sum, chamfer(&q, &p).unwrap().sum);

    // Accelerated vs brute force on 100 random pairs.
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = random_cloud(&mut rng, 500);
        let b = random_cloud(&mut rng, 500);
        let fast = chamfer(&a, &b).unwrap().sum;
        let brute = brute_chamfer_sum(&a, &b);
        let err = (fast - brute).abs();
        let tol = 1e-9 * brute.max(1.0);
        assert!(err <= tol, "kd-tree {fast} vs brute {brute}");
        worst = worst.max(err);
    }

    // Translated-cloud closed form 2 |P| |t|^2 for t below half the minimum
    // pairwise distance (grid spacing 1).
    let mut grid = PointCloud::default();
    for i in 0..5 {
        for j in 0..5 {
            for k in 0..2 {
                grid.push(Vec3::new(i as f64, j as f64, k as f64), [0, 0, 0], 1);
            }
        }
    }
    let t = Vec3::new(0.013, -0.007, 0.019);
    let moved = grid.map_points(|p| p + t);
    let d = chamfer(&grid, &moved).unwrap();
    let expected = 2.0 * grid.len() as f64 * t.norm_sq();
    assert!(
        (d.sum - expected).abs() <= 1e-9 * expected,
        "got {}, closed form {expected}",
        d.sum
    );
    report(
        "criterion 3 (Chamfer correctness)",
        format!("100 random pairs match brute force (worst abs diff {worst:.1e})"),
    );
}

// ---------------------------------------------------------------------------
// 4. Loss kernels.
// ---------------------------------------------------------------------------
#[test]
fn criterion_4_loss_kernels() {
    let intr = Intrinsics::centered(32, 32).unwrap();
    let mut gt = PeeledMapSet::new_background(intr, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);

    // Populate ground truth with a monotone blob.
    for y in 8..24u32 {
        for x in 8..24u32 {
            let px = gt.pixel_index(x, y);
            let base = 1.0 + 0.01 * (x as f32) + 0.02 * (y as f32);
            for layer in 0..4 {
                gt.depth_layer_mut(layer)[px] = base + 0.5 * layer as f32;
                gt.rgb_layer_mut(layer)[px] = [x as u8 * 8, y as u8 * 8, layer as u8 * 60];
            }
        }
    }
    assert!(gt.validate().is_clean());

    // Zero on identity.
    assert_eq!(depth_loss(&gt, &gt, 10.0).unwrap(), 0.0);
    assert_eq!(rgb_loss(&gt, &gt).unwrap(), 0.0);
    assert_eq!(smoothness_loss(&gt, &gt).unwrap(), 0.0);

    // Gamma linearity within 1e-12 relative for layer-3 perturbations.
    let mut pred = gt.clone();
    for _ in 0..40 {
        let px = rng.gen_range(0..pred.pixel_count());
        if gt.depth_layer(2)[px] != 0.0 {
            pred.depth_layer_mut(2)[px] += rng.gen::<f32>() * 0.1;
        }
    }
    let l1 = depth_loss(&pred, &gt, 1.0).unwrap();
    let l10 = depth_loss(&pred, &gt, 10.0).unwrap();
    assert!(l1 > 0.0);
    assert!(
        (l10 - 10.0 * l1).abs() <= 1e-12 * l10,
        "gamma linearity broke: {l10} vs {}",
        10.0 * l1
    );

    // Combined total equals the hand-composed weighted sum within 1e-9.
    let mut pred2 = gt.clone();
    for _ in 0..60 {
        let px = rng.gen_range(0..pred2.pixel_count());
        let layer = rng.gen_range(0..4);
        if gt.depth_layer(layer)[px] != 0.0 {
            pred2.depth_layer_mut(layer)[px] += rng.gen::<f32>() * 0.05;
            let c = &mut pred2.rgb_layer_mut(layer)[px];
            c[0] = c[0].wrapping_add(16);
        }
    }
    let gt_cloud = backproject_maps(&gt);
    let weights = LossWeights::default();
    let b = combined_loss(&pred2, &gt, &gt_cloud, &weights).unwrap();
    let hand = weights.adversarial
        + weights.lambda_depth * depth_loss(&pred2, &gt, weights.gamma).unwrap()
        + weights.lambda_rgb * rgb_loss(&pred2, &gt).unwrap()
        + weights.lambda_smooth * smoothness_loss(&pred2, &gt).unwrap()
        + weights.lambda_cham * chamfer(&backproject_maps(&pred2), &gt_cloud).unwrap().sum;
    assert!(
        (b.total - hand).abs() <= 1e-9 * hand.abs(),
        "combined {} vs hand {hand}",
        b.total
    );
    report(
        "criterion 4 (loss kernels)",
        format!("identity zeros, gamma-linear within 1e-12, total matches within 1e-9"),
    );
}

// ---------------------------------------------------------------------------
// 5. BVH fidelity: brute-force equality and the 50k-triangle timing budget.
// ---------------------------------------------------------------------------

/// Independent oracle: classic Moller-Trumbore over every triangle.
/// Deliberately a different formulation from the library's edge-function
/// test.
fn brute_force_hits(mesh: &TriMesh, origin: Vec3, dir: Vec3) -> Vec<(u32, f64)> {
    let mut hits = Vec::new();
    for i in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle_vertices(i);
        let e1 = b - a;
        let e2 = c - a;
        let pvec = dir.cross(e2);
        let det = e1.dot(pvec);
        if det == 0.0 {
            continue;
        }
        let inv = 1.0 / det;
        let tvec = origin - a;
        let u = tvec.dot(pvec) * inv;
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let qvec = tvec.cross(e1);
        let v = dir.dot(qvec) * inv;
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        let t = e2.dot(qvec) * inv;
        if t > 0.0 {
            hits.push((i as u32, t));
        }
    }
    hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    hits
}

#[test]
fn criterion_5_bvh_fidelity_and_speed() {
    // (a) Hit-set equality against the all-triangles oracle.
    let mesh = primitives::icosphere(0.5, 4); // 5120 <= 10k triangles
    let bvh = Bvh::build(&mesh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut total_hits = 0usize;
    for _ in 0..1000 {
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let z = rng.gen::<f64>() * 2.0 - 1.0;
        let r = (1.0 - z * z).sqrt();
        let origin = Vec3::new(3.0 * r * theta.cos(), 3.0 * r * theta.sin(), 3.0 * z);
        let target = Vec3::new(
            rng.gen::<f64>() * 0.8 - 0.4,
            rng.gen::<f64>() * 0.8 - 0.4,
            rng.gen::<f64>() * 0.8 - 0.4,
        );
        let dir = target - origin;

        let mut raw = Vec::new();
        bvh.intersect_all(origin, dir, &mut raw);
        raw.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.triangle.cmp(&b.triangle)));
        let oracle = brute_force_hits(&mesh, origin, dir);

        assert_eq!(
            raw.len(),
            oracle.len(),
            "hit count mismatch: bvh {} vs oracle {}",
            raw.len(),
            oracle.len()
        );
        for (got, want) in raw.iter().zip(&oracle) {
            assert_eq!(got.triangle, want.0, "triangle id mismatch");
            assert!(
                (got.t - want.1).abs() <= 1e-9,
                "t mismatch: {} vs {}",
                got.t,
                want.1
            );
        }
        total_hits += raw.len();
    }
    assert!(total_hits > 1500, "rays barely hit; test misconfigured");

    // (b) 50k-triangle render at 512^2 x 4 layers, single-threaded, < 10 s.
    let mut blob = primitives::icosphere(0.2, 4);
    for k in 1..10 {
        let angle = k as f64 / 10.0 * std::f64::consts::TAU;
        let offset = Vec3::new(0.3 * angle.cos(), 0.1 * (k % 3) as f64, 0.3 * angle.sin());
        blob = blob.concat(&primitives::icosphere(0.2, 4).transformed(1.0, offset));
    }
    assert_eq!(blob.triangle_count(), 51_200);
    let (normalized, _) = normalize_unit_box(&blob).unwrap();
    let view = default_view(512, 30.0);

    let (set, elapsed) = single_threaded(|| {
        let bvh = Bvh::build(&normalized).unwrap();
        render_peeled_with(&normalized, &bvh, &view, &RenderOptions::default()).unwrap()
    });
    assert!(set.validate().is_clean());
    assert!(
        elapsed < Duration::from_secs(10),
        "50k-triangle render took {elapsed:?}, budget 10 s"
    );
    report(
        "criterion 5 (BVH fidelity)",
        format!(
            "1000 rays match oracle ({total_hits} hits); 51200-triangle render in {elapsed:?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Watertight parity.
// ---------------------------------------------------------------------------
#[test]
fn criterion_6_watertight_parity() {
    let mesh = primitives::icosphere(0.5, 3);
    let bvh = Bvh::build(&mesh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606);

    let eps = 1e-6 * bvh.bounds().diagonal();
    let mut counted = 0usize;
    let mut even = 0usize;
    let mut grazing = 0usize;
    for _ in 0..10_000 {
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let z = rng.gen::<f64>() * 2.0 - 1.0;
        let r = (1.0 - z * z).sqrt();
        let origin = Vec3::new(2.0 * r * theta.cos(), 2.0 * r * theta.sin(), 2.0 * z);
        let target = Vec3::new(
            rng.gen::<f64>() * 0.8 - 0.4,
            rng.gen::<f64>() * 0.8 - 0.4,
            rng.gen::<f64>() * 0.8 - 0.4,
        );
        let ray = Ray::new(origin, target - origin);
        let hits = peel_trace(&bvh, &ray, usize::MAX, eps);
        if hits.is_empty() {
            continue;
        }
        // Exclude eps-grazing rays: any hit close to an edge or vertex.
        let min_bary = hits
            .iter()
            .flat_map(|h| h.bary.iter())
            .fold(f64::INFINITY, |m, &b| m.min(b));
        if min_bary < 1e-4 {
            grazing += 1;
            continue;
        }
        counted += 1;
        if hits.len() % 2 == 0 {
            even += 1;
        }
    }
    assert!(counted > 5000, "too few counted rays ({counted})");
    let ratio = even as f64 / counted as f64;
    assert!(
        ratio >= 0.99,
        "even-parity ratio {ratio:.4} below 0.99 ({even}/{counted}, {grazing} grazing excluded)"
    );
    report(
        "criterion 6 (watertight parity)",
        format!("{even}/{counted} non-grazing rays even ({:.2}%)", ratio * 100.0),
    );
}

// ---------------------------------------------------------------------------
// 7. Codec round trips on randomized valid sets.
// ---------------------------------------------------------------------------

fn random_valid_set(rng: &mut ChaCha8Rng) -> PeeledMapSet {
    let n = rng.gen_range(1..=5);
    let res = rng.gen_range(4..=24) as u32;
    let intr = Intrinsics::centered(res, res).unwrap();
    let mut set = PeeledMapSet::new_background(intr, n).unwrap();
    set.meta.view_label = format!("{}", rng.gen_range(0..360));
    set.meta.source = "random".into();
    for px in 0..set.pixel_count() {
        if rng.gen::<f64>() < 0.3 {
            continue; // background pixel
        }
        let layers_filled = rng.gen_range(1..=n);
        let mut depth = rng.gen::<f32>() + 0.25;
        for layer in 0..layers_filled {
            set.depth_layer_mut(layer)[px] = depth;
            set.rgb_layer_mut(layer)[px] = [rng.gen(), rng.gen(), rng.gen()];
            depth += rng.gen::<f32>() + 0.01;
        }
    }
    set
}

#[test]
fn criterion_7_codec_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let tmp = tempfile::tempdir().unwrap();
    let mut float_checked = 0usize;
    for i in 0..50 {
        let set = random_valid_set(&mut rng);
        assert!(set.validate().is_clean(), "random set generator is broken");

        // Float format: bitwise identity on depth and RGB.
        let dir = tmp.path().join(format!("pfm_{i}"));
        encode_maps(&set, &dir).unwrap();
        let back = decode_maps(&dir).unwrap();
        assert_eq!(back.n_layers(), set.n_layers());
        for layer in 0..set.n_layers() {
            let a: Vec<u32> = set.depth_layer(layer).iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.depth_layer(layer).iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b, "depth layer {layer} not bitwise identical");
            assert_eq!(set.rgb_layer(layer), back.rgb_layer(layer));
            float_checked += set.pixel_count();
        }

        // Quantized format: within (max - min) / 65535 per layer.
        let qdir = tmp.path().join(format!("q_{i}"));
        encode_maps_with(&set, &qdir, DepthEncoding::Png16).unwrap();
        let qback = decode_maps(&qdir).unwrap();
        for layer in 0..set.n_layers() {
            let orig = set.depth_layer(layer);
            let min = orig.iter().cloned().fold(f32::INFINITY, f32::min) as f64;
            let max = orig.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
            let step = (max - min) / 65535.0;
            for (&a, &b) in orig.iter().zip(qback.depth_layer(layer)) {
                assert!(
                    (a as f64 - b as f64).abs() <= step.max(f64::EPSILON),
                    "quantized depth off by more than one step"
                );
            }
        }
    }
    report(
        "criterion 7 (codec)",
        format!("50 random sets bitwise through PFM/PNG ({float_checked} depth values)"),
    );
}

// ---------------------------------------------------------------------------
// 8. Dataset protocol at full resolution.
// ---------------------------------------------------------------------------
#[test]
fn criterion_8_dataset_protocol() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("meshes");
    std::fs::create_dir(&input).unwrap();

    // Three body-proportioned ellipsoids (tall, thin) whose reconstructions
    // land in the tens of thousands of points at 512^2.
    let bodies = [
        ("body_a", Vec3::new(0.175, 0.5, 0.125)),
        ("body_b", Vec3::new(0.16, 0.5, 0.11)),
        ("body_c", Vec3::new(0.19, 0.5, 0.14)),
    ];
    for (name, semi) in &bodies {
        let mesh = primitives::ellipsoid(*semi, 4);
        peelcast::io::save_obj(&mesh, &input.join(format!("{name}.obj"))).unwrap();
    }

    let cfg = DatasetConfig::new(tmp.path().join("out"));
    assert_eq!(cfg.views, vec![0.0, 45.0, 60.0, 90.0]);
    assert_eq!((cfg.width, cfg.height), (512, 512));

    let mut sample_events = 0usize;
    let manifest = generate_dataset(&input, &cfg, |e| {
        if e.event == "sample" {
            sample_events += 1;
        }
    })
    .unwrap();
    assert_eq!(manifest.entries.len(), 12, "3 meshes x 4 views");
    assert_eq!(sample_events, 12);
    assert!(manifest.entries.iter().all(|e| e.validation.is_clean()));

    // Checksum-complete: every listed file exists and matches its CRC.
    for entry in &manifest.entries {
        let dir = cfg.output_root.join(&entry.directory);
        assert_eq!(entry.checksums.len(), 9);
        for (name, crc) in &entry.checksums {
            let bytes = std::fs::read(dir.join(name)).unwrap();
            let mut h = crc32fast::Hasher::new();
            h.update(&bytes);
            assert_eq!(h.finalize(), *crc, "checksum mismatch for {name}");
        }
    }

    // Rerun is a no-op: zero new renders, manifest byte-identical.
    let manifest_bytes = std::fs::read(cfg.output_root.join("manifest.json")).unwrap();
    let mut rerun_samples = 0usize;
    let manifest2 = generate_dataset(&input, &cfg, |e| {
        if e.event == "sample" {
            rerun_samples += 1;
        }
    })
    .unwrap();
    assert_eq!(rerun_samples, 0, "rerun rendered something");
    assert_eq!(manifest, manifest2);
    assert_eq!(
        manifest_bytes,
        std::fs::read(cfg.output_root.join("manifest.json")).unwrap()
    );

    // Reconstructed clouds land at the expected scale: 2e4 to 5e4 points.
    let mut counts = Vec::new();
    for entry in &manifest.entries {
        let set = decode_maps(&cfg.output_root.join(&entry.directory)).unwrap();
        let cloud = backproject_maps(&set);
        assert!(
            (20_000..=50_000).contains(&cloud.len()),
            "{}: {} points outside 2e4..5e4",
            entry.directory,
            cloud.len()
        );
        counts.push(cloud.len());
    }
    report(
        "criterion 8 (dataset protocol)",
        format!(
            "12 validated samples, rerun no-op, cloud sizes {:?}",
            counts
        ),
    );
}

// ---------------------------------------------------------------------------
// Extras used by several criteria: render/back-project/sample consistency.
// ---------------------------------------------------------------------------
#[test]
fn render_backproject_surface_consistency() {
    // Every reconstructed point lies on the mesh surface within
    // 1e-3 x bounding-box diagonal (here the mesh is already normalized).
    let mesh = primitives::ellipsoid(Vec3::new(0.25, 0.5, 0.2), 3);
    let bvh = Bvh::build(&mesh).unwrap();
    let view = default_view(128, 60.0);
    let set = render_peeled_with(&mesh, &bvh, &view, &RenderOptions::default()).unwrap();
    let cloud = backproject_maps(&set).map_points(|p| view.pose.apply_inverse(p));
    assert!(!cloud.is_empty());
    let tol = 1e-3 * bvh.bounds().diagonal();
    for p in cloud.points() {
        let d = bvh.distance_sq_to_surface(*p).sqrt();
        assert!(d <= tol, "point {d} off the surface (tol {tol})");
    }

    // And the sampled surface is statistically close to the reconstruction.
    let samples = sample_surface(&mesh, cloud.len(), 8).unwrap();
    let d = chamfer(&cloud, &samples).unwrap();
    assert!(d.mean_fwd < 1e-3 && d.mean_bwd < 1e-3);
}
