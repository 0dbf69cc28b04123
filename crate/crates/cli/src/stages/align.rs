//! Temporal matching, marker localization and BEV cropping per aerial anchor.

use anyhow::{anyhow, Context, Result};
use serde_json::json;
use std::collections::BTreeMap;

use goldbev_core::bevraster::resize_rgb;
use goldbev_core::crossview::{localize_ego, make_bev_crop, match_temporal, AlignedSample, MatchStreams, Rejection, SensorRef, SortedTimes};
use goldbev_core::datasetio::{
    binary_to_bevr, bevr_to_label_image, decode_bevr, decode_rgb_png, encode_bevr, encode_mask_png, encode_rgb_png, read_event_log, read_sealed,
    write_sealed,
};
use goldbev_core::sensors::{AerialFrame, AerialGeometry, SensorEvent, Stream};
use goldbev_core::{ClassId, Pose2D, Raster};

use super::records::{AerialRecord, AlignFiles, Discard, Oracle, AERIAL, DISCARDS, EVENTS, ORACLE, SAMPLES};
use crate::pipeline::Pipeline;
use crate::store::{Stage, StageWriter};

/// Same layout for readers, given the align stage directory name.
pub fn files_in(dir_name: &str, id: &str) -> AlignFiles {
    AlignFiles {
        crop: format!("{dir_name}/samples/{id}.crop.png"),
        valid: format!("{dir_name}/samples/{id}.valid.bevr"),
        gt: format!("{dir_name}/samples/{id}.gt.png"),
        vehicle: format!("{dir_name}/samples/{id}.vehicle.png"),
    }
}

struct StreamIndex {
    events: Vec<SensorEvent>,
    times: SortedTimes,
}

/// Matching runs on clock-corrected times; recorded times stay in the refs.
fn index(events: &[SensorEvent], s: Stream, offset_us: i64) -> Result<StreamIndex> {
    let events: Vec<SensorEvent> = events.iter().filter(|e| e.stream == s).cloned().collect();
    let times = SortedTimes::new(s, events.iter().map(|e| e.t_us + offset_us).collect())?;
    Ok(StreamIndex { events, times })
}

fn sensor_ref(e: &SensorEvent) -> SensorRef {
    SensorRef {
        stream: e.stream,
        t_us: e.t_us,
        payload: e.payload.clone(),
    }
}

enum Outcome {
    Aligned(Box<AlignedSample>, f64),
    Discarded(Discard),
}

pub fn run(p: &Pipeline, w: &StageWriter) -> Result<serde_json::Value> {
    let events = read_event_log(&p.read_text(Stage::Synth, EVENTS)?)?;
    let aerial: Vec<AerialRecord> = read_sealed(&p.read_text(Stage::Synth, AERIAL)?)?;
    let oracle: Oracle = serde_json::from_str(&p.read_text(Stage::Synth, ORACLE)?)?;
    let clock = &p.cfg.clock;
    let vehicle = index(&events, Stream::VehicleRgb, clock.offset(Stream::VehicleRgb))?;
    let followers = [Stream::LidarA, Stream::LidarB, Stream::GnssImu]
        .into_iter()
        .map(|s| index(&events, s, clock.offset(s)).map(|i| (s, i)))
        .collect::<Result<Vec<_>>>()?;
    let streams = MatchStreams {
        vehicle: vehicle.times.clone(),
        followers: followers.iter().map(|(s, i)| (*s, i.times.clone())).collect(),
    };
    let params = &p.cfg.align;
    let grid = p.cfg.grid;
    let indexed: Vec<(usize, &AerialRecord)> = aerial.iter().enumerate().collect();

    let outcomes = p.par_map(&indexed, |&(i, rec)| {
        let discard = |reason| Ok(Outcome::Discarded(Discard { anchor_t_us: rec.t_us, reason }));
        let Some(m) = match_temporal(rec.t_us + clock.offset(Stream::AerialRgb), &streams, params.max_offset_us) else {
            return discard(Rejection::Temporal);
        };
        let veh = &vehicle.events[m.vehicle.index];
        let picked: Vec<(&SensorEvent, i64)> = m
            .followers
            .iter()
            .zip(&followers)
            .map(|((_, sel), (_, idx))| (&idx.events[sel.index], sel.offset_us))
            .collect();
        let (sweeps, nav_ev): (Vec<(&SensorEvent, i64)>, Vec<_>) = picked.iter().copied().partition(|(e, _)| e.stream != Stream::GnssImu);
        let nav_event = nav_ev[0].0;
        if veh.payload.is_none() || sweeps.iter().any(|(e, _)| e.payload.is_none()) {
            return discard(Rejection::MissingPayload);
        }
        let nav = nav_event.nav.ok_or_else(|| anyhow!("gnss event at {} has no fix", nav_event.t_us))?;
        let image = decode_rgb_png(&p.read(&rec.image)?).with_context(|| rec.image.clone())?;
        let gt = bevr_to_label_image(&decode_bevr(&p.read(&rec.gt)?)?)?;
        let frame = AerialFrame {
            image,
            gt_semantics: Some(gt),
            t_us: rec.t_us,
            cam_pose: rec.recorded_cam,
            gsd_m: rec.gsd_m,
        };
        let loc = match localize_ego(&frame, &nav, params)? {
            Ok(loc) => loc,
            Err(reason) => return discard(reason),
        };
        let id = format!("{i:06}");
        let crop = make_bev_crop(&frame, loc.ego_pixel, loc.heading_in_image, grid);
        let n = grid.size_px();
        w.write(&format!("samples/{id}.crop.png"), &encode_rgb_png(&crop.rgb)?)?;
        w.write(&format!("samples/{id}.valid.bevr"), &encode_bevr(&binary_to_bevr(&crop.valid, "valid"))?)?;
        let gt_crop = crop.gt.unwrap_or_else(|| Raster::filled(grid, ClassId::IGNORE));
        w.write(&format!("samples/{id}.gt.png"), &encode_mask_png(&gt_crop)?)?;
        let veh_img = decode_rgb_png(&p.read(veh.payload.as_deref().expect("checked"))?)?;
        w.write(&format!("samples/{id}.vehicle.png"), &encode_rgb_png(&resize_rgb(&veh_img, n, n)?)?)?;

        let (x, y) = frame.geometry().unproject(loc.ego_pixel.0, loc.ego_pixel.1);
        let mut offsets_us = BTreeMap::from([(Stream::VehicleRgb, m.vehicle.offset_us)]);
        for (e, off) in &picked {
            offsets_us.insert(e.stream, *off);
        }
        let shot = &oracle.shots[i];
        let truth = AerialGeometry {
            cam_pose: shot.true_cam,
            ..frame.geometry()
        }
        .project(oracle.trajectory.pose_at(rec.t_us).x, oracle.trajectory.pose_at(rec.t_us).y);
        let err = (truth.0 - loc.ego_pixel.0).hypot(truth.1 - loc.ego_pixel.1);
        Ok(Outcome::Aligned(
            Box::new(AlignedSample {
                sample_id: id,
                aerial: SensorRef {
                    stream: Stream::AerialRgb,
                    t_us: rec.t_us,
                    payload: Some(rec.image.clone()),
                },
                vehicle_rgb: sensor_ref(veh),
                sweeps: sweeps.iter().map(|(e, _)| sensor_ref(e)).collect(),
                nav: sensor_ref(nav_event),
                offsets_us,
                ego_pixel: loc.ego_pixel,
                match_confidence: loc.confidence,
                ego_pose: Pose2D::new(x, y, nav.heading),
                heading_in_image: loc.heading_in_image,
            }),
            err,
        ))
    })?;

    let mut samples = Vec::new();
    let mut discards = Vec::new();
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Aligned(s, e) => {
                samples.push(*s);
                errors.push(e);
            }
            Outcome::Discarded(d) => discards.push(d),
        }
    }
    w.write(SAMPLES, write_sealed(&samples)?.as_bytes())?;
    w.write(DISCARDS, write_sealed(&discards)?.as_bytes())?;
    let mut by_reason = BTreeMap::new();
    for d in &discards {
        *by_reason.entry(d.reason).or_insert(0usize) += 1;
    }
    let within_1px = errors.iter().filter(|&&e| e <= 1.0).count();
    let max_err = errors.iter().copied().fold(0.0f64, f64::max);
    Ok(json!({
        "anchors": aerial.len(),
        "aligned": samples.len(),
        "discarded": discards.len(),
        "discards_by_reason": by_reason,
        "localization_within_1px": within_1px,
        "localization_max_error_px": max_err,
    }))
}
