//! Plain-text tables rendered from the evaluation aggregate.

use anyhow::Result;
use std::fmt::Write;

use goldbev_core::evalmetrics::Decibels;
use goldbev_core::ClassId;

use super::records::{EvalAggregate, AGGREGATE, PROTOCOLS, RECON_VIEWS, REPORT_MD};
use crate::pipeline::Pipeline;
use crate::store::{Stage, StageWriter};

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

fn db(v: Decibels) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{:.2}", v.0)
    }
}

pub fn render(agg: &EvalAggregate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# goldbev evaluation report\n");
    let _ = writeln!(s, "config hash: `{}`\n", agg.config_hash);
    let order = ["all", "train", "val", "test"];
    let mut splits: Vec<_> = agg.splits.iter().collect();
    splits.sort_by_key(|(name, _)| order.iter().position(|o| o == name).unwrap_or(order.len()));
    for (split, a) in splits {
        let _ = writeln!(s, "## {split} ({} samples)\n", a.samples);
        let classes: Vec<&str> = ClassId::TRAINABLE.iter().map(|c| c.name()).collect();
        let _ = writeln!(
            s,
            "| protocol | mIoU_All | mIoU_Static | mIoU_Dyn | {} | Ignored | macro mIoU_All |",
            classes.join(" | ")
        );
        let _ = writeln!(s, "|{}", "---|".repeat(classes.len() + 6));
        for name in PROTOCOLS {
            let r = &a.protocols[name];
            let m = &r.micro;
            let per: Vec<String> = ClassId::TRAINABLE.iter().map(|c| num(m.iou(*c))).collect();
            let _ = writeln!(
                s,
                "| {name} | {} | {} | {} | {} | {:.3} | {} |",
                num(m.miou_all),
                num(m.miou_static),
                num(m.miou_dyn),
                per.join(" | "),
                m.ignored_fraction,
                num(r.macro_miou_all)
            );
        }
        let _ = writeln!(s, "\n| view | PSNR (dB) | SSIM |\n|---|---|---|");
        for view in RECON_VIEWS {
            let q = &a.recon[view];
            let _ = writeln!(s, "| {view} | {} | {:.4} |", db(q.mean_psnr_db), q.mean_ssim);
        }
        let _ = writeln!(s);
    }
    s
}

pub fn run(p: &Pipeline, w: &StageWriter) -> Result<serde_json::Value> {
    let agg: EvalAggregate = serde_json::from_str(&p.read_text(Stage::Eval, AGGREGATE)?)?;
    let text = render(&agg);
    w.write(REPORT_MD, text.as_bytes())?;
    Ok(serde_json::json!({ "splits": agg.splits.len() }))
}
