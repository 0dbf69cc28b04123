//! Per-sample and per-split scoring of pseudo-labels and reconstructions.

use anyhow::{bail, Result};
use serde_json::json;
use std::collections::BTreeMap;

use goldbev_core::bevraster::visibility_cone_mask;
use goldbev_core::datasetio::{
    bevr_to_binary, bevr_to_lidar, bevr_to_sparse, decode_bevr, decode_mask_png, decode_rgb_png, read_manifest, validate_manifest, write_sealed,
    SampleManifest, Split, ValidationLimits,
};
use goldbev_core::evalmetrics::{aggregate, confusion, eval_lidar_holdout, iou_report, psnr, restrict_vehicles_to_visible, ssim, Decibels};
use goldbev_core::BinaryMask;

use super::records::{EvalAggregate, Quality, QualitySummary, SampleEval, SplitAggregate, AGGREGATE, EVAL_SAMPLES, MANIFEST, PROTOCOLS, RECON_VIEWS};
use crate::pipeline::Pipeline;
use crate::store::{Stage, StageWriter};

fn and(a: &BinaryMask, b: &BinaryMask) -> BinaryMask {
    let mut out = a.clone();
    for (o, &x) in out.data_mut().iter_mut().zip(b.data()) {
        *o = *o && x;
    }
    out
}

pub fn manifest_limits(p: &Pipeline) -> ValidationLimits {
    ValidationLimits {
        max_offset_us: p.cfg.align.max_offset_us,
        min_conf: p.cfg.align.matching.min_conf,
        config_hash: Some(p.layout.key(Stage::Split).to_string()),
    }
}

fn score(p: &Pipeline, m: &SampleManifest, cone: &BinaryMask) -> Result<SampleEval> {
    let grid = p.cfg.grid;
    let file = |k: &str| p.read(&m.files[k].path);
    let pred = decode_mask_png(&file("pseudo")?, Some(grid))?;
    let gt = decode_mask_png(&file("gt")?, Some(grid))?;
    let valid = bevr_to_binary(&decode_bevr(&file("valid")?)?, "valid")?;
    let lidar = bevr_to_lidar(&decode_bevr(&file("lidar_bev")?)?)?;
    let sparse = bevr_to_sparse(&decode_bevr(&file("sparse")?)?)?;
    let in_cone = and(&valid, cone);
    let visible_gt = restrict_vehicles_to_visible(&gt, &lidar.counts, p.cfg.eval.min_returns)?;

    let mut cms = BTreeMap::new();
    cms.insert("full", confusion(&pred, &gt, Some(&valid))?);
    cms.insert("cone", confusion(&pred, &gt, Some(&in_cone))?);
    cms.insert("cone_visible", confusion(&pred, &visible_gt, Some(&in_cone))?);
    cms.insert("lidar_holdout", eval_lidar_holdout(&pred, &sparse)?.0);

    let crop = decode_rgb_png(&file("crop")?)?;
    let mut recon = BTreeMap::new();
    for view in RECON_VIEWS {
        let img = decode_rgb_png(&file(view)?)?;
        recon.insert(
            view.to_string(),
            Quality {
                psnr_db: psnr(&img, &crop, p.cfg.eval.ssim.peak)?,
                ssim: ssim(&img, &crop, &p.cfg.eval.ssim)?,
            },
        );
    }
    Ok(SampleEval {
        sample_id: m.sample_id.clone(),
        split: m.split.map(|s| s.name().to_string()),
        protocols: cms.iter().map(|(k, cm)| (k.to_string(), iou_report(cm))).collect(),
        confusion: cms.into_iter().map(|(k, cm)| (k.to_string(), cm)).collect(),
        recon,
    })
}

fn summarize(evals: &[&SampleEval]) -> SplitAggregate {
    let protocols = PROTOCOLS
        .iter()
        .map(|name| {
            let cms: Vec<_> = evals.iter().map(|e| e.confusion[*name]).collect();
            (name.to_string(), aggregate(&cms))
        })
        .collect();
    let recon = RECON_VIEWS
        .iter()
        .map(|view| {
            let n = evals.len();
            let (db, s) = evals.iter().fold((0.0, 0.0), |(db, s), e| {
                let q = &e.recon[*view];
                (db + q.psnr_db.0, s + q.ssim)
            });
            let mean = |v: f64| if n > 0 { v / n as f64 } else { 0.0 };
            (
                view.to_string(),
                QualitySummary {
                    mean_psnr_db: Decibels(mean(db)),
                    mean_ssim: mean(s),
                    samples: n,
                },
            )
        })
        .collect();
    SplitAggregate {
        samples: evals.len(),
        protocols,
        recon,
    }
}

pub fn run(p: &Pipeline, w: &StageWriter) -> Result<serde_json::Value> {
    let manifest = read_manifest(&p.read_text(Stage::Split, MANIFEST)?)?;
    let issues = validate_manifest(&p.layout.root, &manifest, &manifest_limits(p));
    if !issues.is_empty() {
        let listed: Vec<String> = issues.iter().map(|i| serde_json::to_string(i).expect("issue serializes")).collect();
        bail!("manifest validation failed:\n  {}", listed.join("\n  "));
    }
    let cone = visibility_cone_mask(p.cfg.grid, p.cfg.eval.cone.hfov_deg, p.cfg.eval.cone.max_range_m)?;
    let evals = p.par_map(&manifest, |m| score(p, m, &cone))?;
    w.write(EVAL_SAMPLES, write_sealed(&evals)?.as_bytes())?;

    let mut splits = BTreeMap::new();
    splits.insert("all".to_string(), summarize(&evals.iter().collect::<Vec<_>>()));
    for s in Split::ALL {
        let part: Vec<&SampleEval> = evals.iter().filter(|e| e.split.as_deref() == Some(s.name())).collect();
        splits.insert(s.name().to_string(), summarize(&part));
    }
    let agg = EvalAggregate {
        config_hash: p.layout.config_hash.clone(),
        config: serde_json::to_value(&p.cfg)?,
        splits,
    };
    w.write(AGGREGATE, &serde_json::to_vec_pretty(&agg)?)?;
    let test = &agg.splits["test"];
    Ok(json!({
        "samples": evals.len(),
        "test_samples": test.samples,
        "test_cone_miou_all": test.protocols["cone"].micro.miou_all,
    }))
}
