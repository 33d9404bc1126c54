//! `fringe unwrap`: temporal two-frequency unwrapping of a wrapped phase
//! map against a low-frequency anchor.

use crate::config::RunConfig;
use crate::store::write_field;
use fringe_core::error::{Error, Result};
use fringe_core::unwrap::{temporal_unwrap, FrequencyPair};
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
    /// Wrapped phase map at the carrier frequency (.fpt).
    #[arg(long)]
    pub fine: Option<PathBuf>,
    /// Wrapped phase map at the low anchor frequency (.fpt).
    #[arg(long)]
    pub coarse: Option<PathBuf>,
    /// Fringes across the width in the fine map.
    #[arg(long = "f-high")]
    pub f_high: Option<f64>,
    /// Fringes across the width in the coarse map (1 keeps the anchor
    /// wrap-free).
    #[arg(long = "f-low")]
    pub f_low: Option<f64>,
    /// Optional validity mask (.fpt, 0/1); quality is judged inside it.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref(), &args.set)?;
    if let Some(p) = &args.fine {
        cfg.override_value("fine", p.display());
    }
    if let Some(p) = &args.coarse {
        cfg.override_value("coarse", p.display());
    }
    if let Some(f) = args.f_high {
        cfg.override_value("f_high", f);
    }
    if let Some(f) = args.f_low {
        cfg.override_value("f_low", f);
    }
    if let Some(p) = &args.mask {
        cfg.override_value("mask", p.display());
    }

    let fine = PathBuf::from(super::require(cfg.take_opt("fine"), "--fine", "fine")?);
    let coarse = PathBuf::from(super::require(cfg.take_opt("coarse"), "--coarse", "coarse")?);
    let f_high_raw = super::require(cfg.take_opt("f_high"), "--f-high", "f_high")?;
    let f_high: f64 = f_high_raw
        .parse()
        .map_err(|_| Error::config(format!("f_high must be a number, got {f_high_raw:?}")))?;
    let f_low = cfg.take("f_low", 1.0)?;
    let mask_path = cfg.take_opt("mask").map(PathBuf::from);
    let resolved = cfg.finish()?;

    let pair = FrequencyPair {
        f_high,
        f_low,
        phase_high: super::read_wrapped(&fine)?,
        phase_low: super::read_wrapped(&coarse)?,
    };
    let mask = mask_path.map(|p| super::read_mask(&p)).transpose()?;
    let result = temporal_unwrap(&pair, mask.as_ref())?;
    if let Some(w) = &result.warning {
        eprintln!("warning: {w}");
    }

    super::ensure_dir(&args.out)?;
    resolved.save(&args.out)?;
    write_field(&args.out.join("unwrapped.fpt"), &result.phase.values)?;
    write_field(&args.out.join("order.fpt"), &result.order)?;

    let (lo, hi) = result.order.min_max();
    println!(
        "unwrapped {}x{}; fringe orders span {lo:.0}..{hi:.0} -> {}",
        result.phase.width(),
        result.phase.height(),
        args.out.display()
    );
    Ok(())
}
