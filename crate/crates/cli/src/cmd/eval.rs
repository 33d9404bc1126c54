//! `fringe eval`: masked error statistics of a predicted phase map
//! against ground truth.

use crate::config::RunConfig;
use crate::store::read_field;
use fringe_core::error::Result;
use fringe_core::eval::phase_error;
use fringe_core::field::{Mask, PhaseField};
use fringe_core::io::png::write_heatmap;
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key (repeatable).
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Predicted phase map (.fpt).
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Ground-truth phase map (.fpt).
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Optional validity mask (.fpt, 0/1).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Row label in the report.
    #[arg(long)]
    pub label: Option<String>,
    /// Compare as unwrapped (absolute) maps instead of wrapped ones.
    #[arg(long)]
    pub unwrapped: bool,
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref(), &args.set)?;
    if let Some(p) = &args.pred {
        cfg.override_value("pred", p.display());
    }
    if let Some(p) = &args.gt {
        cfg.override_value("gt", p.display());
    }
    if let Some(p) = &args.mask {
        cfg.override_value("mask", p.display());
    }
    if let Some(l) = &args.label {
        cfg.override_value("label", l);
    }
    if args.unwrapped {
        cfg.override_value("wrapped", false);
    }

    let pred_path = PathBuf::from(super::require(cfg.take_opt("pred"), "--pred", "pred")?);
    let gt_path = PathBuf::from(super::require(cfg.take_opt("gt"), "--gt", "gt")?);
    let mask_path = cfg.take_opt("mask").map(PathBuf::from);
    let label = cfg.take("label", "eval".to_string())?;
    let wrapped = cfg.take("wrapped", true)?;
    let resolved = cfg.finish()?;

    let load = |path: &PathBuf| -> Result<PhaseField> {
        if wrapped {
            super::read_wrapped(path)
        } else {
            Ok(PhaseField::unwrapped(read_field(path)?))
        }
    };
    let pred = load(&pred_path)?;
    let gt = load(&gt_path)?;
    let mask = match mask_path {
        Some(p) => super::read_mask(&p)?,
        None => Mask::from_fn(pred.width(), pred.height(), |_, _| true),
    };

    let report = phase_error(&label, &pred, &gt, &mask)?;

    super::ensure_dir(&args.out)?;
    resolved.save(&args.out)?;
    super::write_text(
        &args.out.join("report.csv"),
        &format!(
            "label,mae_rad,rmse_rad,max_abs_rad,masked_pixels\n{},{:.9e},{:.9e},{:.9e},{}\n",
            report.method, report.mae, report.rmse, report.max_abs, report.masked_pixels
        ),
    )?;
    let json = serde_json::json!({
        "label": report.method,
        "mae_rad": report.mae,
        "rmse_rad": report.rmse,
        "max_abs_rad": report.max_abs,
        "masked_pixels": report.masked_pixels,
    });
    super::write_text(
        &args.out.join("report.json"),
        &format!("{:#}\n", json),
    )?;
    write_heatmap(
        &args.out.join("error.png"),
        &report.error_map,
        0.0,
        report.max_abs.max(1e-12),
        Some(&mask),
    )?;

    println!(
        "{}: mae {:.6e} rad, rmse {:.6e} rad, max {:.6e} rad over {} pixels",
        report.method, report.mae, report.rmse, report.max_abs, report.masked_pixels
    );
    Ok(())
}
