//! Acceptance criteria 1 to 9. Runs without the test harness so every
//! criterion prints exactly one PASS or FAIL line, and exits non-zero when
//! any of them fails.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use goldbev_cli::stages::records::{AGGREGATE, ASSIGNMENT, EVAL_SAMPLES, MANIFEST, REPORT_MD};
use goldbev_cli::{Pipeline, PipelineConfig, Stage};
use goldbev_core::bevraster::{rasterize_lidar, LidarAccumulator, LidarRasterParams, SparseLabelRaster};
use goldbev_core::crossview::{
    heading_in_image, localize_ego, make_bev_crop, match_temporal, refine_by_template, AlignParams, MatchStreams, Rejection, SortedTimes,
};
use goldbev_core::datasetio::{
    decode_bevr, decode_mask_png, decode_point_cloud, encode_bevr, encode_mask_png, encode_point_cloud, read_manifest, write_manifest,
    BevrRaster, Channel, ChannelData, FileEntry, SampleManifest, Split,
};
use goldbev_core::evalmetrics::{class_ious, confusion, eval_lidar_holdout, iou_report, psnr, ssim, SsimParams};
use goldbev_core::grid::world_to_cell;
use goldbev_core::imaging::{GrayImage, RgbImage};
use goldbev_core::labelfuse::{fuse_annotations_strict, fuse_pseudo_labels, FusionThresholds};
use goldbev_core::sensors::{AerialFrame, AerialGeometry, CameraPose, LidarPoint, LidarSweep, NavRecord, Stream};
use goldbev_core::synthworld::{generate_world, marker_template, render_aerial, EgoVehicle, MarkerSpec, Trajectory, WorldCounts};
use goldbev_core::taxonomy::NUM_CLASSES;
use goldbev_core::{BevGridSpec, BinaryMask, ClassId, Pose2D, Raster, ScalarMap, SemanticMask};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit_s: u64, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took > Duration::from_secs(limit_s) {
        Err(format!("took {:.1} s, limit {limit_s} s", took.as_secs_f64()))
    } else {
        Ok(took)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_class(r: &mut impl Rng, void_p: f64) -> ClassId {
    if r.random_bool(void_p) {
        ClassId::VOID
    } else {
        ClassId::TRAINABLE[r.random_range(0..NUM_CLASSES)]
    }
}

fn random_mask(r: &mut impl Rng, grid: BevGridSpec, void_p: f64) -> SemanticMask {
    Raster::from_fn(grid, |_, _| random_class(r, void_p))
}

// 1 -------------------------------------------------------------------------

/// Exhaustive nearest scan: smallest distance, then earliest timestamp, then
/// first index.
fn scan_nearest(times: &[i64], reference: i64, max: i64) -> Option<(usize, i64, i64)> {
    let mut best: Option<(i64, i64, usize)> = None;
    for (i, &t) in times.iter().enumerate() {
        let key = ((t - reference).abs(), t, i);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    let (d, t, i) = best?;
    (d <= max).then_some((i, t, t - reference))
}

type ScanResult = Option<((usize, i64, i64), Vec<(usize, i64, i64)>)>;

fn scan_match(anchor: i64, vehicle: &[i64], followers: &[Vec<i64>], max: i64) -> ScanResult {
    let v = scan_nearest(vehicle, anchor, max)?;
    let f = followers.iter().map(|t| scan_nearest(t, v.1, max)).collect::<Option<Vec<_>>>()?;
    Some((v, f))
}

fn streams(vehicle: Vec<i64>, followers: &[Vec<i64>]) -> MatchStreams {
    let kinds = [Stream::LidarA, Stream::LidarB, Stream::GnssImu];
    MatchStreams {
        vehicle: SortedTimes::new(Stream::VehicleRgb, vehicle).unwrap(),
        followers: followers
            .iter()
            .zip(kinds)
            .map(|(t, s)| (s, SortedTimes::new(s, t.clone()).unwrap()))
            .collect(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let max = 100_000;
    let mut retained = 0;
    for case in 0..10_000 {
        let anchor = r.random_range(-500_000..500_000);
        // Coarse time steps make ties and duplicates common.
        let step = [1, 1_000, 50_000][r.random_range(0..3)];
        let draw = |r: &mut ChaCha8Rng| {
            let n = r.random_range(0..12);
            let mut t: Vec<i64> = (0..n).map(|_| anchor + r.random_range(-6..=6) * step * 10 + r.random_range(-2..=2) * step).collect();
            t.sort();
            t
        };
        let vehicle = draw(&mut r);
        let followers: Vec<Vec<i64>> = (0..r.random_range(0..=3)).map(|_| draw(&mut r)).collect();
        let got = match_temporal(anchor, &streams(vehicle.clone(), &followers), max);
        let want = scan_match(anchor, &vehicle, &followers, max);
        let got_flat = got.as_ref().map(|m| {
            (
                (m.vehicle.index, m.vehicle.t_us, m.vehicle.offset_us),
                m.followers.iter().map(|(_, s)| (s.index, s.t_us, s.offset_us)).collect::<Vec<_>>(),
            )
        });
        ensure!(got_flat == want, "case {case}: match {got_flat:?}, scan {want:?}");
        retained += usize::from(want.is_some());
    }
    // Hand-built gate boundaries around an anchor at 0.
    let boundary = [
        (vec![100_000], vec![100_000], true),
        (vec![-100_000], vec![-200_000], true),
        (vec![100_001], vec![100_001], false),
        (vec![-100_001], vec![-100_001], false),
        (vec![0], vec![100_000], true),
        (vec![0], vec![-100_001], false),
        (vec![100_000], vec![200_001], false),
    ];
    for (v, f, keep) in boundary {
        let m = match_temporal(0, &streams(v.clone(), &[f.clone()]), max);
        ensure!(m.is_some() == keep, "boundary vehicle {v:?} follower {f:?}: retained {}", m.is_some());
    }
    let took = within(10, start)?;
    Ok(format!(
        "10000 random configurations equal the exhaustive scan ({retained} retained), 7 gate boundary cases exact, {:.2} s",
        took.as_secs_f64()
    ))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let world = generate_world(
        21,
        400.0,
        WorldCounts {
            roads: 3,
            buildings: 40,
            vehicles: 30,
            vrus: 40,
        },
    )
    .map_err(|e| e.to_string())?;
    let road = Trajectory {
        path: world.main_road().ok_or("world has no road")?.to_vec(),
        speed_mps: 1.0,
        start_us: 0,
    };
    let params = AlignParams::default();
    let gsd = 0.07;
    let size = 600;
    let gnss = Normal::new(0.0, 3.0).unwrap();
    let pixel_noise = Normal::new(0.0, 10.0).unwrap();
    let mut r = rng(2);
    let frames = 200;
    let mut hits = 0;
    let mut worst = 0.0f64;
    for _ in 0..frames {
        let ego = road.pose_at(r.random_range(0..400_000_000));
        let cam = CameraPose {
            x: ego.x + r.random_range(-8.0..8.0),
            y: ego.y + r.random_range(-8.0..8.0),
            yaw: r.random_range(0.0..TAU),
        };
        let marker = EgoVehicle {
            pose: ego,
            marker: MarkerSpec::default(),
        };
        let mut frame = render_aerial(&world, cam, gsd, size, Some(&marker));
        for v in frame.image.as_raw_mut() {
            *v = (*v as f64 + pixel_noise.sample(&mut r)).round().clamp(0.0, 255.0) as u8;
        }
        let nav = NavRecord {
            x: ego.x + gnss.sample(&mut r),
            y: ego.y + gnss.sample(&mut r),
            heading: ego.heading,
        };
        let truth = frame.geometry().project(ego.x, ego.y);
        if let Ok(Ok(loc)) = localize_ego(&frame, &nav, &params) {
            let err = (loc.ego_pixel.0 - truth.0).hypot(loc.ego_pixel.1 - truth.1);
            worst = worst.max(err);
            hits += usize::from(err <= 1.0);
        }
    }
    let rate = hits as f64 / frames as f64;
    ensure!(rate >= 0.95, "{hits}/{frames} frames within 1 px");

    // Flat images carry no marker evidence anywhere.
    let template = marker_template(&params.marker, gsd, 0.3, params.template_side(gsd), params.template_background);
    for level in [0.0f32, 0.25, 0.5, 0.75, 1.0] {
        let flat = GrayImage::filled(size, size, level);
        for prior in [(300.0, 300.0), (40.0, 560.0)] {
            let m = refine_by_template(&flat, prior, &template, &params.matching).map_err(|e| e.to_string())?;
            ensure!(m.is_none(), "flat gray {level} at {prior:?} produced {m:?}");
        }
    }
    let flat = AerialFrame {
        image: RgbImage::filled(size, size, [128, 128, 128]),
        gt_semantics: None,
        t_us: 0,
        cam_pose: CameraPose::default(),
        gsd_m: gsd,
    };
    let nav = NavRecord {
        x: 1.0,
        y: -2.0,
        heading: 0.4,
    };
    ensure!(
        localize_ego(&flat, &nav, &params).map_err(|e| e.to_string())? == Err(Rejection::LowConfidence),
        "flat frame not rejected"
    );
    let took = within(60, start)?;
    Ok(format!(
        "{hits}/{frames} frames within 1 px (worst {worst:.2} px), flat inputs rejected, {:.1} s",
        took.as_secs_f64()
    ))
}

// 3 -------------------------------------------------------------------------

/// Block `b` rotated so that the direction the vehicle faces ends up on top.
fn rotated_block(b: &dyn Fn(i64, i64) -> Option<[u8; 3]>, quarter: usize, n: i64, r: i64, c: i64) -> Option<[u8; 3]> {
    match quarter {
        0 => b(c, n - 1 - r),
        1 => b(r, c),
        2 => b(n - 1 - c, r),
        _ => b(n - 1 - r, n - 1 - c),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3);
    let grid = BevGridSpec::new(4.2, 60).unwrap();
    let n = grid.size_px() as i64;
    let (w, h) = (200usize, 160usize);
    let image = RgbImage::from_raw(w, h, (0..w * h * 3).map(|_| r.random()).collect()).unwrap();
    let frame = AerialFrame {
        image: image.clone(),
        gt_semantics: None,
        t_us: 0,
        cam_pose: CameraPose::default(),
        gsd_m: grid.cell_m(),
    };
    let mut compared = 0;
    // The ego point sits on a pixel corner so cell centers land on pixel centers.
    for (eu, ev) in [(100i64, 80i64), (20, 140), (185, 10)] {
        let block = |row: i64, col: i64| {
            let (x, y) = (eu - n / 2 + col, ev - n / 2 + row);
            (x >= 0 && y >= 0 && x < w as i64 && y < h as i64).then(|| image.get(x as usize, y as usize))
        };
        for quarter in 0..4 {
            let heading = quarter as f64 * FRAC_PI_2;
            let crop = make_bev_crop(&frame, (eu as f64 - 0.5, ev as f64 - 0.5), heading, grid);
            for row in 0..n {
                for col in 0..n {
                    let want = rotated_block(&block, quarter, n, row, col);
                    let valid = crop.valid.get(row as usize, col as usize);
                    ensure!(
                        valid == want.is_some(),
                        "ego ({eu},{ev}) quarter {quarter} cell ({row},{col}): valid {valid}, oracle in frame {}",
                        want.is_some()
                    );
                    if let Some(px) = want {
                        ensure!(crop.rgb.get(col as usize, row as usize) == px, "quarter {quarter} cell ({row},{col}) differs");
                        compared += 1;
                    }
                }
            }
        }
    }

    let grid = BevGridSpec::default();
    let size = 1000;
    let mut worst = 0usize;
    for _ in 0..100 {
        let cam = CameraPose {
            x: 0.0,
            y: 0.0,
            yaw: r.random_range(0.0..TAU),
        };
        let ego = Pose2D::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), r.random_range(0.0..TAU));
        let (f, rt) = (r.random_range(-19.0..19.0), r.random_range(-19.0..19.0));
        let (s, c) = ego.heading.sin_cos();
        let p = (ego.x + f * c + rt * s, ego.y + f * s - rt * c);
        let expected = world_to_cell(&grid, &ego, p).ok_or("marked point outside the grid")?;
        let geom = AerialGeometry {
            cam_pose: cam,
            gsd_m: 0.07,
            width: size,
            height: size,
        };
        let (u, v) = geom.project(p.0, p.1);
        let mut image = RgbImage::new(size, size);
        image.put(u.round() as usize, v.round() as usize, [255, 255, 255]);
        let frame = AerialFrame {
            image,
            gt_semantics: None,
            t_us: 0,
            cam_pose: cam,
            gsd_m: 0.07,
        };
        let crop = make_bev_crop(&frame, geom.project(ego.x, ego.y), heading_in_image(ego.heading, cam.yaw), grid);
        let raw = crop.rgb.as_raw();
        let brightest = (0..grid.len()).max_by_key(|&i| (raw[3 * i] as u32, usize::MAX - i)).unwrap();
        let (br, bc) = (brightest / grid.size_px(), brightest % grid.size_px());
        ensure!(raw[3 * brightest] > 0, "marked point vanished from the crop");
        let d = br.abs_diff(expected.0).max(bc.abs_diff(expected.1));
        worst = worst.max(d);
        ensure!(d <= 1, "marked point at cell ({br},{bc}), predicted {expected:?}");
    }
    let took = within(30, start)?;
    Ok(format!(
        "4 quarter turns x 3 ego positions equal the rotated oracle on {compared} valid cells, 100 random headings within {worst} cell, {:.1} s",
        took.as_secs_f64()
    ))
}

// 4 -------------------------------------------------------------------------

fn random_sweep(r: &mut impl Rng) -> Vec<LidarPoint> {
    let n = r.random_range(0..=10_000);
    (0..n)
        .map(|_| LidarPoint {
            x: r.random_range(-1.6f32..1.6),
            y: r.random_range(-1.6f32..1.6),
            z: r.random_range(-3.0f32..5.0),
            intensity: r.random(),
            t_us: r.random_range(0..100_000),
            class: ClassId::IGNORE,
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut r = rng(4);
    let grid = BevGridSpec::new(2.8, 40).unwrap();
    let params = LidarRasterParams::default();
    let cell = grid.extent_m() / grid.size_px() as f64;
    let (er, ec) = grid.ego_point();
    let mut total_points = 0;
    for sweep in 0..100 {
        let pts = random_sweep(&mut r);
        total_points += pts.len();
        let got = rasterize_lidar([pts.as_slice()], grid, &params);
        for row in 0..grid.size_px() {
            // Row `row` spans forward offsets (lo, hi], column `col` right offsets [lo, hi).
            let f_hi = (er - row as f64) * cell;
            let f_lo = f_hi - cell;
            for col in 0..grid.size_px() {
                let r_lo = (col as f64 - ec) * cell;
                let r_hi = r_lo + cell;
                let mut count = 0u32;
                let mut top = f32::NEG_INFINITY;
                for p in &pts {
                    let (f, right) = (p.x as f64, -(p.y as f64));
                    if f > f_lo && f <= f_hi && right >= r_lo && right < r_hi {
                        count += 1;
                        top = top.max(p.z);
                    }
                }
                let occupancy = if count > 0 { 1.0 } else { 0.0 };
                let height = if count > 0 {
                    let z = (top as f64).clamp(params.height_min_m, params.height_max_m);
                    ((z - params.height_min_m) / (params.height_max_m - params.height_min_m)) as f32
                } else {
                    0.0
                };
                let density = if count > 0 {
                    ((1.0 + count as f64).ln() / (1.0 + params.density_cap as f64).ln()).min(1.0)
                } else {
                    0.0
                };
                ensure!(got.counts.get(row, col) == count, "sweep {sweep} cell ({row},{col}): count {} vs {count}", got.counts.get(row, col));
                ensure!(got.occupancy.get(row, col) == occupancy, "sweep {sweep} cell ({row},{col}) occupancy");
                ensure!(got.height.get(row, col) == height, "sweep {sweep} cell ({row},{col}) height");
                ensure!(
                    (got.density.get(row, col) as f64 - density).abs() <= 1e-6,
                    "sweep {sweep} cell ({row},{col}) density {} vs {density}",
                    got.density.get(row, col)
                );
            }
        }
        let mut shuffled = pts.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        ensure!(rasterize_lidar([shuffled.as_slice()], grid, &params) == got, "sweep {sweep}: permutation changed the raster");
        let cut = r.random_range(0..=pts.len());
        let mut left = LidarAccumulator::new(grid);
        left.add(&pts[..cut]);
        let mut right = LidarAccumulator::new(grid);
        right.add(&pts[cut..]);
        left.merge(&right);
        ensure!(left.finish(&params) == got, "sweep {sweep}: split at {cut} and merge differs");
    }
    let took = within(30, start)?;
    Ok(format!(
        "100 sweeps ({total_points} points) equal the double-loop oracle, permutation and split-merge exact, {:.1} s",
        took.as_secs_f64()
    ))
}

// 5 -------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let t = FusionThresholds::default();
    ensure!(t == FusionThresholds { tau_ped_hi: 0.9, tau_ped_lo: 0.3, tau_c: 0.8 }, "unexpected default thresholds {t:?}");
    let grid = BevGridSpec::new(101.0 * 0.07, 101).unwrap();
    // Row i holds p_ped = i/100, column j holds the structural confidence j/100.
    let ped = ScalarMap::new(Raster::from_fn(grid, |i, _| i as f32 / 100.0)).map_err(|e| e.to_string())?;
    let conf = ScalarMap::new(Raster::from_fn(grid, |_, j| j as f32 / 100.0)).map_err(|e| e.to_string())?;
    let mut cells = 0;
    for label in [ClassId::ROAD, ClassId::SIDEWALK, ClassId::BUILDING, ClassId::VEHICLE] {
        let labels = Raster::filled(grid, label);
        for tree in [false, true] {
            let trees: BinaryMask = Raster::filled(grid, tree);
            let out = fuse_pseudo_labels(&labels, &conf, &ped, &t, Some(&trees)).map_err(|e| e.to_string())?;
            for i in 0..=100usize {
                for j in 0..=100usize {
                    // p_ped >= 0.90 -> vru; p_ped <= 0.30 and conf >= 0.80 -> label; else IGNORE; trees always IGNORE.
                    let want = if tree {
                        ClassId::IGNORE
                    } else if i >= 90 {
                        ClassId::VRU
                    } else if i <= 30 && j >= 80 {
                        label
                    } else {
                        ClassId::IGNORE
                    };
                    ensure!(out.get(i, j) == want, "{} tree={tree} p_ped={i}/100 conf={j}/100: {:?} vs {want:?}", label.name(), out.get(i, j));
                    cells += 1;
                }
            }
        }
    }
    let took = within(5, start)?;
    Ok(format!("{cells} cells (101x101 x 4 labels x 2 tree states), 0 mismatches, {:.2} s", took.as_secs_f64()))
}

// 6 -------------------------------------------------------------------------

fn noisy_annotation(r: &mut impl Rng, gt: &SemanticMask, flip: f64, void_p: f64) -> SemanticMask {
    gt.map(|g| {
        if !g.is_trainable() || r.random_bool(void_p) {
            ClassId::VOID
        } else if r.random_bool(flip) {
            let others: Vec<ClassId> = ClassId::TRAINABLE.into_iter().filter(|&c| c != g).collect();
            others[r.random_range(0..others.len())]
        } else {
            g
        }
    })
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut r = rng(6);
    let grid = BevGridSpec::new(16.0 * 0.07, 16).unwrap();
    for pair in 0..1000 {
        let a = random_mask(&mut r, grid, 0.15);
        let b = a.map(|c| if r.random_bool(0.4) { random_class(&mut r, 0.15) } else { c });
        let ab = fuse_annotations_strict(&a, &b).map_err(|e| e.to_string())?;
        ensure!(ab == fuse_annotations_strict(&b, &a).unwrap(), "pair {pair}: not commutative");
        ensure!(fuse_annotations_strict(&a, &a).unwrap() == a, "pair {pair}: not idempotent");
        for i in 0..grid.len() {
            let (x, y, f) = (a.data()[i], b.data()[i], ab.data()[i]);
            if x == ClassId::VOID || y == ClassId::VOID {
                ensure!(f == ClassId::VOID, "pair {pair} cell {i}: void did not dominate");
            }
            let agree = x == y && x != ClassId::VOID;
            ensure!((f != ClassId::VOID) == agree, "pair {pair} cell {i}: support differs from agreement");
            if agree {
                ensure!(f == x, "pair {pair} cell {i}: agreed label changed");
            }
        }
    }

    // Two independent annotators with 10% label noise over synthetic ground truth.
    let world = generate_world(
        6,
        400.0,
        WorldCounts {
            roads: 3,
            buildings: 40,
            vehicles: 30,
            vrus: 40,
        },
    )
    .map_err(|e| e.to_string())?;
    let road = Trajectory {
        path: world.main_road().ok_or("world has no road")?.to_vec(),
        speed_mps: 1.0,
        start_us: 0,
    };
    let bev = BevGridSpec::default();
    let mut sums = [goldbev_core::evalmetrics::ConfusionMatrix::default(); 3];
    for _ in 0..8 {
        let ego = road.pose_at(r.random_range(0..400_000_000));
        let cam = CameraPose {
            x: ego.x,
            y: ego.y,
            yaw: 0.0,
        };
        let frame = render_aerial(&world, cam, 0.07, 900, None);
        let center = frame.geometry().project(ego.x, ego.y);
        let gt = make_bev_crop(&frame, center, heading_in_image(ego.heading, 0.0), bev).gt.ok_or("no ground truth")?;
        let gt = gt.map(|c| if c.is_trainable() { c } else { ClassId::IGNORE });
        let a1 = noisy_annotation(&mut r, &gt, 0.1, 0.02);
        let a2 = noisy_annotation(&mut r, &gt, 0.1, 0.02);
        let fused = fuse_annotations_strict(&a1, &a2).map_err(|e| e.to_string())?;
        for (k, m) in [&a1, &a2, &fused].into_iter().enumerate() {
            sums[k] += &confusion(m, &gt, None).map_err(|e| e.to_string())?;
        }
    }
    let [r1, r2, rf] = sums.map(|cm| iou_report(&cm));
    let acc = |rep: &goldbev_core::evalmetrics::IoUReport| rep.pixel_accuracy.unwrap_or(0.0);
    let miou = |rep: &goldbev_core::evalmetrics::IoUReport| rep.miou_all.unwrap_or(0.0);
    ensure!(
        acc(&rf) >= acc(&r1) && acc(&rf) >= acc(&r2),
        "fused accuracy {:.4} below an annotator ({:.4}, {:.4})",
        acc(&rf),
        acc(&r1),
        acc(&r2)
    );
    ensure!(
        rf.ignored_fraction >= r1.ignored_fraction && rf.ignored_fraction >= r2.ignored_fraction,
        "fused ignored {:.4} below an annotator ({:.4}, {:.4})",
        rf.ignored_fraction,
        r1.ignored_fraction,
        r2.ignored_fraction
    );
    ensure!(miou(&rf) >= miou(&r1) && miou(&rf) >= miou(&r2), "fused mIoU {:.4} below an annotator", miou(&rf));
    let took = within(60, start)?;
    Ok(format!(
        "1000 pairs satisfy the four laws; annotators acc {:.3}/{:.3} mIoU {:.3}/{:.3} ignored {:.3}/{:.3}, fusion acc {:.3} mIoU {:.3} ignored {:.3}, {:.1} s",
        acc(&r1),
        acc(&r2),
        miou(&r1),
        miou(&r2),
        r1.ignored_fraction,
        r2.ignored_fraction,
        acc(&rf),
        miou(&rf),
        rf.ignored_fraction,
        took.as_secs_f64()
    ))
}

// 7 -------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut r = rng(7);
    let grid = BevGridSpec::new(8.0 * 0.07, 8).unwrap();
    for case in 0..1000 {
        let pred = random_mask(&mut r, grid, 0.1);
        let gt = random_mask(&mut r, grid, 0.1);
        let mask: Option<BinaryMask> = r.random_bool(0.5).then(|| Raster::from_fn(grid, |_, _| r.random_bool(0.7)));
        let cm = confusion(&pred, &gt, mask.as_ref()).map_err(|e| e.to_string())?;
        let mut counts = [[0u64; NUM_CLASSES]; NUM_CLASSES];
        let (mut ignored, mut total) = (0u64, 0u64);
        for i in 0..grid.len() {
            if mask.as_ref().is_some_and(|m| !m.data()[i]) {
                continue;
            }
            total += 1;
            let (p, g) = (pred.data()[i], gt.data()[i]);
            let pi = ClassId::TRAINABLE.iter().position(|&c| c == p);
            let gi = ClassId::TRAINABLE.iter().position(|&c| c == g);
            match (gi, pi) {
                (Some(gi), Some(pi)) => counts[gi][pi] += 1,
                _ => ignored += 1,
            }
        }
        ensure!(cm.counts == counts && cm.ignored_pixels == ignored && cm.total_pixels == total, "case {case}: matrix differs");
        let ious = class_ious(&cm);
        let mut defined = Vec::new();
        for k in 0..NUM_CLASSES {
            let tp = counts[k][k];
            let fp: u64 = (0..NUM_CLASSES).filter(|&g| g != k).map(|g| counts[g][k]).sum();
            let fn_: u64 = (0..NUM_CLASSES).filter(|&p| p != k).map(|p| counts[k][p]).sum();
            let want = (tp + fp + fn_ > 0).then(|| tp as f64 / (tp + fp + fn_) as f64);
            ensure!(ious[k] == want, "case {case} class {k}: IoU {:?} vs {want:?}", ious[k]);
            defined.extend(want);
        }
        let want_miou = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        ensure!(iou_report(&cm).miou_all == want_miou, "case {case}: mIoU differs");
    }

    let ssim_params = SsimParams::default();
    let img = RgbImage::from_raw(32, 24, (0..32 * 24 * 3).map(|_| r.random()).collect()).unwrap();
    let identical = psnr(&img, &img, 255.0).map_err(|e| e.to_string())?;
    ensure!(identical.is_infinite(), "PSNR of identical images is {identical:?}");
    let s = ssim(&img, &img, &ssim_params).map_err(|e| e.to_string())?;
    ensure!((s - 1.0).abs() <= 1e-6, "SSIM of identical images is {s}");
    let black = RgbImage::filled(32, 24, [0, 0, 0]);
    let white = RgbImage::filled(32, 24, [255, 255, 255]);
    let db = psnr(&black, &white, 255.0).map_err(|e| e.to_string())?;
    ensure!(db.0.abs() <= 1e-6, "PSNR of all-0 vs all-255 is {db:?}");

    let sparse_grid = BevGridSpec::new(12.0 * 0.07, 12).unwrap();
    for case in 0..100 {
        let label = random_mask(&mut r, sparse_grid, 0.7);
        let support = label.map(|c| u32::from(!c.is_ignore()));
        let sparse = SparseLabelRaster { label, support };
        let pred = random_mask(&mut r, sparse_grid, 0.1);
        let mut other = pred.clone();
        for i in 0..sparse_grid.len() {
            if sparse.label.data()[i].is_ignore() {
                other.data_mut()[i] = random_class(&mut r, 0.3);
            }
        }
        let a = eval_lidar_holdout(&pred, &sparse).map_err(|e| e.to_string())?;
        let b = eval_lidar_holdout(&other, &sparse).map_err(|e| e.to_string())?;
        ensure!(a == b, "case {case}: unsupervised predictions changed the holdout score");
    }
    let took = within(30, start)?;
    Ok(format!(
        "1000 8x8 cases equal brute force, PSNR/SSIM closed forms hold, 100 holdout invariance cases, {:.2} s",
        took.as_secs_f64()
    ))
}

// 8 -------------------------------------------------------------------------

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut runs = Vec::new();
    let mut times = Vec::new();
    let mut dirs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let start = Instant::now();
        let p = Pipeline::new(cfg.clone(), dir.path(), None).map_err(|e| e.to_string())?;
        p.run_through(Stage::Report).map_err(|e| format!("{e:#}"))?;
        times.push(within(300, start)?.as_secs_f64());
        let mut files = BTreeMap::new();
        for s in [Stage::Split, Stage::Eval, Stage::Report] {
            for (name, bytes) in files_under(&p.layout.dir(s)) {
                files.insert(format!("{}/{name}", s.name()), bytes);
            }
        }
        runs.push(files);
        dirs.push((dir, p));
    }
    ensure!(runs[0].len() == runs[1].len(), "runs wrote different file sets");
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        ensure!(a == b, "{name} differs between runs");
    }
    for name in ["eval/".to_string() + AGGREGATE, "eval/".to_string() + EVAL_SAMPLES, "report/".to_string() + REPORT_MD] {
        ensure!(runs[0].contains_key(&name), "{name} missing");
    }

    let (_, p) = &dirs[0];
    let manifest = read_manifest(&p.read_text(Stage::Split, MANIFEST).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(manifest.len() == 200, "{} samples, expected 200", manifest.len());
    ensure!(
        std::fs::metadata(p.layout.dir(Stage::Split).join(ASSIGNMENT)).is_ok(),
        "assignment record missing"
    );
    // Path distance along the drive, recomputed from the manifest poses.
    let mut path = vec![0.0];
    for w in manifest.windows(2) {
        let d = (w[1].ego_pose.x - w[0].ego_pose.x).hypot(w[1].ego_pose.y - w[0].ego_pose.y);
        path.push(path.last().unwrap() + d);
    }
    let gap = cfg.split.guard_gap_m;
    let mut pairs = 0u64;
    for i in 0..manifest.len() {
        for j in i + 1..manifest.len() {
            if let (Some(a), Some(b)) = (manifest[i].split, manifest[j].split) {
                if a != b {
                    pairs += 1;
                    ensure!(
                        path[j] - path[i] >= gap,
                        "samples {} ({a:?}) and {} ({b:?}) are {:.2} m apart",
                        manifest[i].sample_id,
                        manifest[j].sample_id,
                        path[j] - path[i]
                    );
                }
            }
        }
    }
    let count = |s: Split| manifest.iter().filter(|m| m.split == Some(s)).count();
    Ok(format!(
        "200 samples, split/eval/report byte-identical across runs ({} files), runs {:.0} s and {:.0} s, train/val/test {}/{}/{}, {pairs} cross-split pairs all >= {gap} m apart",
        runs[0].len(),
        times[0],
        times[1],
        count(Split::Train),
        count(Split::Val),
        count(Split::Test)
    ))
}

// 9 -------------------------------------------------------------------------

fn random_bevr(r: &mut impl Rng) -> BevrRaster {
    let (height, width) = (r.random_range(1..12), r.random_range(1..12));
    let n = height * width;
    // All channels of one raster share a dtype.
    let dtype = r.random_range(0..3);
    let channels = (0..r.random_range(1..4))
        .map(|k| Channel {
            name: format!("c{k};x={}", r.random_range(0..100)),
            data: match dtype {
                0 => ChannelData::U8((0..n).map(|_| r.random()).collect()),
                1 => ChannelData::U16((0..n).map(|_| r.random()).collect()),
                _ => ChannelData::F32((0..n).map(|_| f32::from_bits(r.random())).collect()),
            },
        })
        .collect();
    BevrRaster { height, width, channels }
}

fn random_cloud(r: &mut impl Rng) -> LidarSweep {
    LidarSweep {
        sensor_id: format!("lidar_{}", r.random_range(0..10)),
        points: (0..r.random_range(0..40))
            .map(|_| LidarPoint {
                x: r.random_range(-80.0..80.0),
                y: r.random_range(-80.0..80.0),
                z: r.random_range(-3.0..8.0),
                intensity: r.random(),
                t_us: r.random(),
                class: if r.random_bool(0.2) { ClassId::TREE } else { random_class(r, 0.2) },
            })
            .collect(),
    }
}

fn random_manifest(r: &mut impl Rng) -> Vec<SampleManifest> {
    (0..r.random_range(0..4))
        .map(|i| SampleManifest {
            sample_id: format!("{i:06}"),
            split: [None, Some(Split::Train), Some(Split::Val), Some(Split::Test)][r.random_range(0..4)],
            files: (0..r.random_range(0..4))
                .map(|k| {
                    let bytes: Vec<u8> = (0..r.random_range(0..64)).map(|_| r.random()).collect();
                    (format!("f{k}"), FileEntry::of(format!("stage/samples/{i:06}.{k}"), &bytes))
                })
                .collect(),
            offsets_us: [("lidar_a".to_string(), r.random_range(-100_000..100_000))].into(),
            ego_pose: Pose2D::new(r.random_range(-500.0..500.0), r.random_range(-500.0..500.0), r.random_range(-PI..PI)),
            ego_pixel: [r.random_range(0.0..1200.0), r.random_range(0.0..1200.0)],
            match_confidence: r.random(),
            grid: BevGridSpec::default(),
            config_hash: format!("{:016x}", r.random::<u64>()),
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut r = rng(9);
    type Codec = Box<dyn Fn(&[u8]) -> Result<Vec<u8>, String>>;
    // Each codec decodes and re-encodes, so success means a bit-exact round trip.
    let codecs: [(&str, Codec); 4] = [
        ("bevr", Box::new(|b| decode_bevr(b).and_then(|x| encode_bevr(&x)).map_err(|e| e.to_string()))),
        ("point cloud", Box::new(|b| decode_point_cloud(b).and_then(|x| encode_point_cloud(&x)).map_err(|e| e.to_string()))),
        ("mask png", Box::new(|b| decode_mask_png(b, None).and_then(|x| encode_mask_png(&x)).map_err(|e| e.to_string()))),
        (
            "manifest",
            Box::new(|b| {
                let text = std::str::from_utf8(b).map_err(|e| e.to_string())?;
                let m = read_manifest(text).map_err(|e| e.to_string())?;
                write_manifest(&m).map(String::into_bytes).map_err(|e| e.to_string())
            }),
        ),
    ];
    let mut trips = 0;
    let mut corruptions = 0;
    for i in 0..1000 {
        let kind = i % 4;
        let bytes = match kind {
            0 => {
                let x = random_bevr(&mut r);
                let b = encode_bevr(&x).map_err(|e| e.to_string())?;
                let back = decode_bevr(&b).map_err(|e| e.to_string())?;
                ensure!(back.height == x.height && back.width == x.width && back.channels.len() == x.channels.len(), "bevr shape changed");
                b
            }
            1 => {
                let x = random_cloud(&mut r);
                let b = encode_point_cloud(&x).map_err(|e| e.to_string())?;
                ensure!(decode_point_cloud(&b).map_err(|e| e.to_string())? == x, "point cloud changed");
                b
            }
            2 => {
                let n = r.random_range(1..20);
                let x = random_mask(&mut r, BevGridSpec::new(n as f64 * 0.1, n).unwrap(), 0.2);
                let b = encode_mask_png(&x).map_err(|e| e.to_string())?;
                ensure!(decode_mask_png(&b, None).map_err(|e| e.to_string())? == x, "mask changed");
                b
            }
            _ => {
                let x = random_manifest(&mut r);
                let b = write_manifest(&x).map_err(|e| e.to_string())?.into_bytes();
                ensure!(read_manifest(std::str::from_utf8(&b).unwrap()).map_err(|e| e.to_string())? == x, "manifest changed");
                b
            }
        };
        let (name, codec) = &codecs[kind];
        ensure!(codec(&bytes)? == bytes, "{name} round trip {i} is not bit-exact");
        trips += 1;
        if i < 80 {
            for pos in 0..bytes.len() {
                let mut bad = bytes.clone();
                bad[pos] ^= r.random_range(1..=255u8);
                ensure!(codec(&bad).is_err(), "{name} artifact {i}: corruption at byte {pos} of {} not detected", bytes.len());
                corruptions += 1;
            }
        }
    }
    let took = within(30, start)?;
    Ok(format!(
        "{trips} round trips bit-exact, {corruptions} single-byte corruptions all detected, {:.2} s",
        took.as_secs_f64()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("temporal matching equivalence", criterion_1),
        ("spatial alignment recovery", criterion_2),
        ("crop geometry", criterion_3),
        ("rasterization oracle equality", criterion_4),
        ("pseudo-label policy truth table", criterion_5),
        ("strict-agreement fusion", criterion_6),
        ("metric suite", criterion_7),
        ("end-to-end determinism", criterion_8),
        ("format round trips", criterion_9),
    ];
    // `cargo test -- <filter>` selects criteria by number or name.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
