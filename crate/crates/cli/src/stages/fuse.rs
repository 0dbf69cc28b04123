//! Teacher predictions, tri-state pseudo-label fusion and the two stand-in
//! reconstruction views.

use anyhow::Result;
use serde_json::json;

use goldbev_core::crossview::AlignedSample;
use goldbev_core::datasetio::{bevr_to_binary, decode_bevr, decode_rgb_png, encode_mask_png, encode_rgb_png, read_sealed};
use goldbev_core::labelfuse::{argmax_confidence, fuse_pseudo_labels, tree_mask};
use goldbev_core::recon::{blurred_view, palette_view};

use super::align::files_in;
use super::records::SAMPLES;
use crate::pipeline::Pipeline;
use crate::store::{Stage, StageWriter};

pub fn pseudo_file(dir_name: &str, id: &str) -> String {
    format!("{dir_name}/samples/{id}.pseudo.png")
}

pub fn recon_file(dir_name: &str, id: &str, view: &str) -> String {
    format!("{dir_name}/samples/{id}.{view}.png")
}

pub fn run(p: &Pipeline, w: &StageWriter) -> Result<serde_json::Value> {
    let samples: Vec<AlignedSample> = read_sealed(&p.read_text(Stage::Align, SAMPLES)?)?;
    let align_dir = p.layout.dir_name(Stage::Align);
    let grid = p.cfg.grid;
    let teacher = &p.cfg.teacher;
    let classes = teacher.structural_classes();
    let counts = p.par_map(&samples, |s| {
        let files = files_in(&align_dir, &s.sample_id);
        let rgb = decode_rgb_png(&p.read(&files.crop)?)?;
        let valid = bevr_to_binary(&decode_bevr(&p.read(&files.valid)?)?, "valid")?;
        let out = teacher.predict(&rgb, Some(&valid), grid);
        let (label, conf) = argmax_confidence(&out.structural, &classes)?;
        // invalid cells carry a uniform teacher output and fall below tau_c
        let fused = fuse_pseudo_labels(&label, &conf, &out.pedestrian, &p.cfg.fusion, Some(&tree_mask(&label)))?;
        let id = &s.sample_id;
        w.write(&format!("samples/{id}.pseudo.png"), &encode_mask_png(&fused)?)?;
        let a = blurred_view(&rgb, p.cfg.eval.recon_blur_px, Some(&valid));
        w.write(&format!("samples/{id}.recon_a.png"), &encode_rgb_png(&a)?)?;
        w.write(&format!("samples/{id}.recon_b.png"), &encode_rgb_png(&palette_view(&fused))?)?;
        Ok(fused.data().iter().filter(|c| c.is_ignore()).count())
    })?;
    let ignored: usize = counts.iter().sum();
    let total = samples.len() * grid.len();
    Ok(json!({
        "samples": samples.len(),
        "ignored_fraction": if total > 0 { ignored as f64 / total as f64 } else { 0.0 },
    }))
}
