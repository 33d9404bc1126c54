//! `fringe gen`: synthetic dataset generation.

use crate::config::RunConfig;
use crate::store;
use fringe_core::error::{Error, Result};
use fringe_core::io::manifest::{DatasetManifest, MANIFEST_FORMAT};
use fringe_core::synth::{gen_scene, GenParams};
use std::path::PathBuf;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. --set seed=3 (repeatable).
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory for the dataset.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Shortcut for a quick set: N train scenes, no val or test split.
    #[arg(long)]
    pub scenes: Option<usize>,
    /// Master seed; every scene derives its own stream from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref(), &args.set)?;
    if let Some(n) = args.scenes {
        cfg.override_value("train", n);
        cfg.override_value("val", 0);
        cfg.override_value("test", 0);
    }
    if let Some(seed) = args.seed {
        cfg.override_value("seed", seed);
    }

    let d = GenParams::default();
    let params = GenParams {
        width: cfg.take("width", d.width)?,
        height: cfg.take("height", d.height)?,
        frames: cfg.take("frames", d.frames)?,
        carrier_freq: cfg.take("carrier_freq", d.carrier_freq)?,
        bits: cfg.take("bits", d.bits)?,
        noise_sigma: cfg.take("noise_sigma", d.noise_sigma)?,
        seed: cfg.take("seed", d.seed)?,
        train: cfg.take("train", d.train)?,
        val: cfg.take("val", d.val)?,
        test: cfg.take("test", d.test)?,
    };
    let resolved = cfg.finish()?;
    params.validate()?;
    let total = params.train + params.val + params.test;
    if total == 0 {
        return Err(Error::validation(
            "nothing to generate: train + val + test is 0",
        ));
    }

    super::ensure_dir(&args.out)?;
    resolved.save(&args.out)?;

    // scenes stream through one at a time; only the manifest entries stay
    let maxval = params.maxval() as u32;
    let mut scenes = Vec::with_capacity(total);
    for (split, count) in [
        ("train", params.train),
        ("val", params.val),
        ("test", params.test),
    ] {
        for index in 0..count {
            let sample = gen_scene(&params, split, index)?;
            scenes.push(store::write_sample(&args.out, &sample, maxval)?);
        }
    }
    let manifest = DatasetManifest {
        format: MANIFEST_FORMAT.to_string(),
        width: params.width,
        height: params.height,
        frames: params.frames,
        carrier_freq: params.carrier_freq,
        bits: params.bits,
        noise_sigma: params.noise_sigma,
        seed: params.seed,
        scenes,
    };
    manifest.save(&args.out)?;

    println!(
        "generated {total} scenes ({} train, {} val, {} test) in {}",
        params.train,
        params.val,
        params.test,
        args.out.display()
    );
    Ok(())
}
