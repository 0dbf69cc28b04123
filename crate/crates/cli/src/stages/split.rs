//! Trajectory-segment split assignment and the sealed sample manifest.

use anyhow::Result;
use serde_json::json;
use std::collections::BTreeMap;

use goldbev_core::crossview::AlignedSample;
use goldbev_core::datasetio::{read_sealed, split_by_trajectory, write_manifest, FileEntry, SampleManifest, Split};

use super::align::files_in;
use super::fuse::{pseudo_file, recon_file};
use super::rasterize::{lidar_file, sparse_file};
use super::records::{ASSIGNMENT, MANIFEST, SAMPLES};
use crate::pipeline::Pipeline;
use crate::store::{Stage, StageWriter};

/// Every file a sample depends on, keyed by modality.
pub fn sample_paths(p: &Pipeline, s: &AlignedSample) -> BTreeMap<String, String> {
    let id = &s.sample_id;
    let align = p.layout.dir_name(Stage::Align);
    let raster = p.layout.dir_name(Stage::Rasterize);
    let fuse = p.layout.dir_name(Stage::Fuse);
    let a = files_in(&align, id);
    let mut m = BTreeMap::from([
        ("crop".to_string(), a.crop),
        ("valid".to_string(), a.valid),
        ("gt".to_string(), a.gt),
        ("vehicle".to_string(), a.vehicle),
        ("lidar_bev".to_string(), lidar_file(&raster, id)),
        ("sparse".to_string(), sparse_file(&raster, id)),
        ("pseudo".to_string(), pseudo_file(&fuse, id)),
        ("recon_a".to_string(), recon_file(&fuse, id, "recon_a")),
        ("recon_b".to_string(), recon_file(&fuse, id, "recon_b")),
    ]);
    if let Some(a) = &s.aerial.payload {
        m.insert("aerial".into(), a.clone());
    }
    for r in &s.sweeps {
        if let Some(path) = &r.payload {
            m.insert(r.stream.name().into(), path.clone());
        }
    }
    m
}

pub fn run(p: &Pipeline, w: &StageWriter) -> Result<serde_json::Value> {
    let samples: Vec<AlignedSample> = read_sealed(&p.read_text(Stage::Align, SAMPLES)?)?;
    let positions: Vec<(f64, f64)> = samples.iter().map(|s| (s.ego_pose.x, s.ego_pose.y)).collect();
    let assignment = split_by_trajectory(&positions, &p.cfg.split)?;
    let records = p.par_map(&samples.iter().zip(&assignment.tags).collect::<Vec<_>>(), |&(s, tag)| {
        let mut files = BTreeMap::new();
        for (key, path) in sample_paths(p, s) {
            let bytes = p.read(&path)?;
            files.insert(key, FileEntry::of(path, &bytes));
        }
        Ok(SampleManifest {
            sample_id: s.sample_id.clone(),
            split: *tag,
            files,
            offsets_us: s.offsets_us.iter().map(|(k, v)| (k.name().to_string(), *v)).collect(),
            ego_pose: s.ego_pose,
            ego_pixel: [s.ego_pixel.0, s.ego_pixel.1],
            match_confidence: s.match_confidence,
            grid: p.cfg.grid,
            config_hash: p.layout.key(Stage::Split).to_string(),
        })
    })?;
    w.write(MANIFEST, write_manifest(&records)?.as_bytes())?;
    w.write(ASSIGNMENT, &serde_json::to_vec(&assignment)?)?;
    let counts: BTreeMap<&str, usize> = Split::ALL.iter().map(|s| (s.name(), assignment.count(*s))).collect();
    Ok(json!({
        "samples": samples.len(),
        "segments": assignment.segments.len(),
        "per_split": counts,
        "dropped_by_guard_gap": assignment.dropped(),
    }))
}
