//! `fringe train`: fit CNN1 then CNN2 on a generated dataset, optionally
//! also the single-net direct baseline. Checkpoints land in --out as
//! cnn1.fpw / cnn2.fpw / direct.fpw with per-epoch histories alongside.

use crate::config::RunConfig;
use crate::store;
use fringe_core::error::{Error, Result};
use fringe_core::io::fpw::read_checkpoint;
use fringe_core::io::manifest::{DatasetManifest, MANIFEST_NAME};
use fringe_core::neural::{
    load_cnn2, load_resstack, resume_cnn1, resume_cnn2, resume_direct, save_cnn2, save_resstack,
    train_cnn1, train_cnn2, train_direct, Cnn1Config, Cnn2Config, History, Normalization,
    TrainConfig, ARCH_CNN1, ARCH_DIRECT,
};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. --set epochs=20 (repeatable).
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Dataset directory produced by `fringe gen`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory for checkpoints and histories.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Continue from the checkpoints already in --out.
    #[arg(long)]
    pub resume: bool,
}

/// Which networks to fit. The two-stage demodulator always trains CNN1
/// before CNN2, because CNN2 learns from CNN1's predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Nets {
    Cnn,
    Direct,
    All,
}

impl FromStr for Nets {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cnn" => Ok(Nets::Cnn),
            "direct" => Ok(Nets::Direct),
            "all" => Ok(Nets::All),
            other => Err(format!("unknown net selection {other:?}")),
        }
    }
}

impl fmt::Display for Nets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nets::Cnn => "cnn",
            Nets::Direct => "direct",
            Nets::All => "all",
        })
    }
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref(), &args.set)?;
    if let Some(d) = &args.dataset {
        cfg.override_value("dataset", d.display());
    }
    let dataset = PathBuf::from(super::require(
        cfg.take_opt("dataset"),
        "--dataset",
        "dataset",
    )?);
    if !dataset.join(MANIFEST_NAME).is_file() {
        return Err(Error::validation(format!(
            "no dataset manifest at {}; run `fringe gen` first",
            dataset.join(MANIFEST_NAME).display()
        )));
    }
    let manifest = DatasetManifest::load(&dataset)?;
    let n_train = manifest.split("train").count();
    let n_val = manifest.split("val").count();
    if n_train == 0 {
        return Err(Error::validation("dataset has no train scenes"));
    }
    // the manifest's own val split sets the default holdout share
    let default_fraction = if n_val > 0 {
        n_val as f64 / (n_train + n_val) as f64
    } else {
        150.0 / 950.0
    };

    let nets: Nets = cfg.take("nets", Nets::Cnn)?;
    let base_channels = cfg.take("base_channels", 32usize)?;
    let n_residual_blocks = cfg.take("n_residual_blocks", 4usize)?;
    let tc = TrainConfig {
        learning_rate: cfg.take("learning_rate", 1e-4)?,
        batch_size: cfg.take("batch_size", 8usize)?,
        epochs: cfg.take("epochs", 200usize)?,
        patience: cfg.take("patience", 20usize)?,
        seed: cfg.take("seed", 7u64)?,
        validation_fraction: cfg.take("validation_fraction", default_fraction)?,
        start_epoch: 0,
        checkpoint_dir: Some(args.out.clone()),
    };
    let resolved = cfg.finish()?;
    tc.validate()?;

    super::ensure_dir(&args.out)?;
    resolved.save(&args.out)?;

    let pool = store::load_splits(&dataset, &manifest, &["train", "val"])?;
    let maxval = ((1u32 << manifest.bits) - 1) as f64;
    let norm = Normalization::new(maxval, manifest.frames)?;

    if nets == Nets::Cnn || nets == Nets::All {
        let cnn1_path = args.out.join("cnn1.fpw");
        let mut cnn1 = match resume_checkpoint(args.resume, &cnn1_path)? {
            Some(step) => {
                let (mut net, ck_norm) = load_resstack(&cnn1_path, ARCH_CNN1)?;
                check_norm(&cnn1_path, ck_norm, &norm)?;
                if step < tc.epochs {
                    let rc = TrainConfig {
                        start_epoch: step,
                        ..tc.clone()
                    };
                    let h = resume_cnn1(&pool, &norm, &mut net, &rc)?;
                    finish_net("cnn1", &args.out, &h, true, |p, s| {
                        save_resstack(p, ARCH_CNN1, &mut net, &norm, tc.seed, s)
                    })?;
                } else {
                    println!("cnn1: checkpoint already at epoch {step}, nothing to do");
                }
                net
            }
            None => {
                let net_cfg = Cnn1Config {
                    base_channels,
                    n_residual_blocks,
                };
                let (mut net, h) = train_cnn1(&pool, &norm, &net_cfg, &tc)?;
                finish_net("cnn1", &args.out, &h, false, |p, s| {
                    save_resstack(p, ARCH_CNN1, &mut net, &norm, tc.seed, s)
                })?;
                net
            }
        };

        let cnn2_path = args.out.join("cnn2.fpw");
        match resume_checkpoint(args.resume, &cnn2_path)? {
            Some(step) => {
                let (mut net, ck_norm) = load_cnn2(&cnn2_path)?;
                check_norm(&cnn2_path, ck_norm, &norm)?;
                if step < tc.epochs {
                    let rc = TrainConfig {
                        start_epoch: step,
                        ..tc.clone()
                    };
                    let h = resume_cnn2(&pool, &norm, &mut cnn1, &mut net, &rc)?;
                    finish_net("cnn2", &args.out, &h, true, |p, s| {
                        save_cnn2(p, &mut net, &norm, tc.seed, s)
                    })?;
                } else {
                    println!("cnn2: checkpoint already at epoch {step}, nothing to do");
                }
            }
            None => {
                let net_cfg = Cnn2Config {
                    base_channels,
                    n_residual_blocks,
                };
                let (mut net, h) = train_cnn2(&pool, &norm, &mut cnn1, &net_cfg, &tc)?;
                finish_net("cnn2", &args.out, &h, false, |p, s| {
                    save_cnn2(p, &mut net, &norm, tc.seed, s)
                })?;
            }
        }
    }

    if nets == Nets::Direct || nets == Nets::All {
        let direct_path = args.out.join("direct.fpw");
        match resume_checkpoint(args.resume, &direct_path)? {
            Some(step) => {
                let (mut net, ck_norm) = load_resstack(&direct_path, ARCH_DIRECT)?;
                check_norm(&direct_path, ck_norm, &norm)?;
                if step < tc.epochs {
                    let rc = TrainConfig {
                        start_epoch: step,
                        ..tc.clone()
                    };
                    let h = resume_direct(&pool, &norm, &mut net, &rc)?;
                    finish_net("direct", &args.out, &h, true, |p, s| {
                        save_resstack(p, ARCH_DIRECT, &mut net, &norm, tc.seed, s)
                    })?;
                } else {
                    println!("direct: checkpoint already at epoch {step}, nothing to do");
                }
            }
            None => {
                let net_cfg = Cnn1Config {
                    base_channels,
                    n_residual_blocks,
                };
                let (mut net, h) = train_direct(&pool, &norm, &net_cfg, &tc)?;
                finish_net("direct", &args.out, &h, false, |p, s| {
                    save_resstack(p, ARCH_DIRECT, &mut net, &norm, tc.seed, s)
                })?;
            }
        }
    }

    Ok(())
}

/// Reads the completed-epoch counter of an existing checkpoint when
/// resuming; the step field of checkpoints written here records epochs
/// finished, so numbering continues where the last run stopped.
fn resume_checkpoint(resume: bool, path: &Path) -> Result<Option<usize>> {
    if resume && path.is_file() {
        Ok(Some(read_checkpoint(path)?.header.step as usize))
    } else {
        Ok(None)
    }
}

fn check_norm(path: &Path, found: Normalization, expected: &Normalization) -> Result<()> {
    if found != *expected {
        return Err(Error::config(format!(
            "checkpoint {} was trained for maxval {} / {} frames, dataset has maxval {} / {} frames",
            path.display(),
            found.maxval,
            found.frames,
            expected.maxval,
            expected.frames
        )));
    }
    Ok(())
}

/// Saves the checkpoint (step = completed epochs), writes or extends the
/// history CSV, and prints a one-line summary.
fn finish_net(
    label: &str,
    out: &Path,
    history: &History,
    append: bool,
    save: impl FnOnce(&Path, u64) -> Result<()>,
) -> Result<()> {
    let completed = history.epochs.last().map_or(0, |e| e.epoch + 1);
    save(&out.join(format!("{label}.fpw")), completed as u64)?;

    let csv_path = out.join(format!("{label}_history.csv"));
    let csv = history.to_csv();
    let text = if append && csv_path.is_file() {
        let old = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let rows = csv.split_once('\n').map_or("", |(_, r)| r);
        format!("{old}{rows}")
    } else {
        csv
    };
    super::write_text(&csv_path, &text)?;

    let stop = if history.stopped_early {
        " (early stop)"
    } else {
        ""
    };
    println!(
        "{label}: {} epochs, best val loss {:.4e} at epoch {}{stop}",
        history.epochs.len(),
        history.best_val_loss,
        history.best_epoch
    );
    Ok(())
}
