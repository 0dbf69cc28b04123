//! World generation, drive simulation and payload rendering.

use anyhow::{Context, Result};
use serde_json::json;

use goldbev_core::datasetio::{encode_bevr, encode_point_cloud, encode_rgb_png, label_image_to_bevr, write_event_log, write_sealed};
use goldbev_core::sensors::Stream;
use goldbev_core::synthworld::{
    generate_world, render_aerial, render_vehicle_camera, simulate_drive, simulate_lidar, EgoVehicle, LidarSpec,
};

use super::records::{AerialRecord, Oracle, AERIAL, EVENTS, ORACLE, WORLD};
use crate::pipeline::Pipeline;
use crate::store::StageWriter;

enum Job {
    Aerial(usize),
    Vehicle(i64),
    Lidar(Stream, i64),
}

pub fn payload_name(stream: Stream, t_us: i64, ext: &str) -> String {
    format!("payload/{}/{:013}.{}", stream.name(), t_us, ext)
}

pub fn run(p: &Pipeline, w: &StageWriter) -> Result<serde_json::Value> {
    let cfg = &p.cfg.synth;
    let world = generate_world(p.cfg.seed, cfg.world.extent_m, cfg.world.counts)?;
    let mut log = simulate_drive(&world, p.cfg.seed, &cfg.drive);
    let anchors: Vec<i64> = log.aerial_shots.iter().map(|s| s.t_us).collect();
    let near_anchor = |t: i64| {
        let i = anchors.partition_point(|&a| a < t);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| anchors.get(j))
            .any(|a| (a - t).abs() <= cfg.materialize_window_us)
    };

    let mut jobs = Vec::new();
    let mut aerial = Vec::new();
    for ev in &mut log.events {
        let ext = match ev.stream {
            Stream::AerialRgb => "png",
            Stream::VehicleRgb => "png",
            Stream::LidarA | Stream::LidarB => "gbpc",
            Stream::GnssImu => continue,
        };
        if ev.stream != Stream::AerialRgb && !near_anchor(ev.t_us) {
            continue;
        }
        ev.payload = Some(w.rel(&payload_name(ev.stream, ev.t_us, ext)));
        jobs.push(match ev.stream {
            Stream::AerialRgb => {
                let i = log.aerial_shots.iter().position(|s| s.t_us == ev.t_us).context("aerial event without shot")?;
                aerial.push(AerialRecord {
                    t_us: ev.t_us,
                    recorded_cam: log.aerial_shots[i].recorded_cam,
                    gsd_m: cfg.aerial.gsd_m,
                    width: cfg.aerial.size_px,
                    height: cfg.aerial.size_px,
                    image: w.rel(&payload_name(ev.stream, ev.t_us, "png")),
                    gt: w.rel(&payload_name(ev.stream, ev.t_us, "gt.bevr")),
                });
                Job::Aerial(i)
            }
            Stream::VehicleRgb => Job::Vehicle(ev.t_us),
            s => Job::Lidar(s, ev.t_us),
        });
    }

    let marker = p.cfg.align.marker;
    let lidar_spec = |s: Stream| -> &LidarSpec {
        if s == Stream::LidarA {
            &cfg.lidar_a
        } else {
            &cfg.lidar_b
        }
    };
    p.par_map(&jobs, |job| {
        match *job {
            Job::Aerial(i) => {
                let shot = &log.aerial_shots[i];
                let ego = EgoVehicle {
                    pose: log.trajectory.pose_at(shot.t_us),
                    marker,
                };
                let frame = render_aerial(&world, shot.true_cam, cfg.aerial.gsd_m, cfg.aerial.size_px, Some(&ego));
                let gt = frame.gt_semantics.as_ref().context("render without labels")?;
                w.write(&payload_name(Stream::AerialRgb, shot.t_us, "png"), &encode_rgb_png(&frame.image)?)?;
                w.write(
                    &payload_name(Stream::AerialRgb, shot.t_us, "gt.bevr"),
                    &encode_bevr(&label_image_to_bevr(gt))?,
                )?;
            }
            Job::Vehicle(t) => {
                let img = render_vehicle_camera(&world, &log.trajectory.pose_at(t), &cfg.vehicle_camera);
                w.write(&payload_name(Stream::VehicleRgb, t, "png"), &encode_rgb_png(&img)?)?;
            }
            Job::Lidar(s, t) => {
                let sweep = simulate_lidar(&world, &log.trajectory.pose_at(t), lidar_spec(s), t.max(0) as u64);
                w.write(&payload_name(s, t, "gbpc"), &encode_point_cloud(&sweep)?)?;
            }
        }
        Ok(())
    })?;

    w.write(WORLD, &serde_json::to_vec(&world)?)?;
    w.write(EVENTS, write_event_log(&log.events)?.as_bytes())?;
    w.write(AERIAL, write_sealed(&aerial)?.as_bytes())?;
    let oracle = Oracle {
        trajectory: log.trajectory.clone(),
        shots: log.aerial_shots.clone(),
    };
    w.write(ORACLE, &serde_json::to_vec(&oracle)?)?;

    let mut per_stream = serde_json::Map::new();
    for s in Stream::ALL {
        let n = log.events.iter().filter(|e| e.stream == s).count();
        let m = log.events.iter().filter(|e| e.stream == s && e.payload.is_some()).count();
        per_stream.insert(s.name().into(), json!({ "events": n, "payloads": m }));
    }
    Ok(json!({
        "primitives": world.primitives.len(),
        "anchors": anchors.len(),
        "streams": per_stream,
    }))
}
