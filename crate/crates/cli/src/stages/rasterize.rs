//! LiDAR BEV rasters and sparse label rasters per aligned sample.

use anyhow::{Context, Result};
use serde_json::json;

use goldbev_core::bevraster::{rasterize_lidar, rasterize_sparse_labels};
use goldbev_core::crossview::AlignedSample;
use goldbev_core::datasetio::{decode_point_cloud, encode_bevr, lidar_to_bevr, read_sealed, sparse_to_bevr};
use goldbev_core::sensors::{LidarPoint, Stream};

use super::records::SAMPLES;
use crate::pipeline::Pipeline;
use crate::store::{Stage, StageWriter};

pub fn lidar_file(dir_name: &str, id: &str) -> String {
    format!("{dir_name}/samples/{id}.lidar.bevr")
}

pub fn sparse_file(dir_name: &str, id: &str) -> String {
    format!("{dir_name}/samples/{id}.sparse.bevr")
}

/// Only the roof sensor carries point labels; the bumper scanner feeds the
/// dense raster alone.
pub const LABELED_STREAM: Stream = Stream::LidarA;

pub fn run(p: &Pipeline, w: &StageWriter) -> Result<serde_json::Value> {
    let samples: Vec<AlignedSample> = read_sealed(&p.read_text(Stage::Align, SAMPLES)?)?;
    let grid = p.cfg.grid;
    let stats = p.par_map(&samples, |s| {
        let mut clouds = Vec::new();
        for r in &s.sweeps {
            let rel = r.payload.as_deref().context("aligned sweep without payload")?;
            clouds.push((r.stream, decode_point_cloud(&p.read(rel)?).with_context(|| rel.to_string())?));
        }
        let raster = rasterize_lidar(clouds.iter().map(|(_, c)| c.points.as_slice()), grid, &p.cfg.raster);
        let labeled: Vec<LidarPoint> = clouds
            .iter()
            .filter(|(s, _)| *s == LABELED_STREAM)
            .flat_map(|(_, c)| c.points.iter().copied())
            .filter(|pt| pt.class.is_trainable())
            .collect();
        let sparse = rasterize_sparse_labels(&labeled, grid)?;
        w.write(&format!("samples/{}.lidar.bevr", s.sample_id), &encode_bevr(&lidar_to_bevr(&raster))?)?;
        w.write(&format!("samples/{}.sparse.bevr", s.sample_id), &encode_bevr(&sparse_to_bevr(&sparse))?)?;
        let occupied = raster.counts.data().iter().filter(|&&n| n > 0).count();
        let supervised = sparse.label.data().iter().filter(|c| c.is_trainable()).count();
        Ok((occupied, supervised))
    })?;
    let occupied: usize = stats.iter().map(|s| s.0).sum();
    let supervised: usize = stats.iter().map(|s| s.1).sum();
    Ok(json!({
        "samples": samples.len(),
        "occupied_cells": occupied,
        "supervised_cells": supervised,
    }))
}
