//! Annotation frames built from a finished split stage.

use anyhow::{bail, Result};
use std::collections::BTreeMap;

use goldbev_annoserve::{AnnoState, FrameSource, View};
use goldbev_core::datasetio::{bevr_to_lidar, decode_bevr, decode_mask_png, decode_rgb_png, read_manifest, SampleManifest, Split};

use crate::pipeline::Pipeline;
use crate::stages::records::MANIFEST;
use crate::store::Stage;

fn frame(p: &Pipeline, m: &SampleManifest) -> Result<FrameSource> {
    let grid = p.cfg.grid;
    let file = |k: &str| p.read(&m.files[k].path);
    let images = BTreeMap::from([
        (View::RealBev, decode_rgb_png(&file("crop")?)?),
        (View::ReconA, decode_rgb_png(&file("recon_a")?)?),
        (View::ReconB, decode_rgb_png(&file("recon_b")?)?),
    ]);
    Ok(FrameSource {
        sample_id: m.sample_id.clone(),
        grid,
        images,
        lidar_counts: bevr_to_lidar(&decode_bevr(&file("lidar_bev")?)?)?.counts,
        reference: Some(decode_mask_png(&file("gt")?, Some(grid))?),
    })
}

/// Preset annotation state over test-split samples, or over all samples
/// when the test split is empty. Exports go under `<out>/annotations`.
pub fn load_state(p: &Pipeline) -> Result<AnnoState> {
    if !p.layout.is_done(Stage::Split) {
        bail!("split stage output {} is missing; run the pipeline first", p.layout.dir(Stage::Split).display());
    }
    let manifest = read_manifest(&p.read_text(Stage::Split, MANIFEST)?)?;
    let test: Vec<&SampleManifest> = manifest.iter().filter(|m| m.split == Some(Split::Test)).collect();
    let chosen: Vec<&SampleManifest> = if test.is_empty() { manifest.iter().collect() } else { test };
    let frames = chosen
        .into_iter()
        .map(|m| frame(p, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnoState::preset(frames, p.layout.root.join("annotations")))
}
