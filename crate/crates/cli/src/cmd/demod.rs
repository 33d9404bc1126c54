//! `fringe demod`: one wrapped phase map from a fringe recording, by
//! phase shifting (needs the full stack) or a single-frame method.

use crate::config::RunConfig;
use crate::store::write_field;
use fringe_core::classical::{
    carrier_omega, demod_ft, demod_ps, demod_wft, modulation_mask, phase_from_phasor, FtParams,
    WftParams,
};
use fringe_core::error::{Error, Result};
use fringe_core::eval::DEFAULT_MODULATION_THRESHOLD;
use fringe_core::field::{Image, PhasorField};
use fringe_core::io::png::write_heatmap;
use fringe_core::neural::{cnn1_forward, cnn2_forward, load_cnn2, load_resstack, ARCH_CNN1};
use std::f64::consts::PI;
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
    /// Demodulation method: ps, ft, wft, or cnn.
    #[arg(long)]
    pub method: Option<String>,
    /// Directory holding the phase-shift stack (method ps).
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// Single fringe frame, .pgm or .fpt (methods ft, wft, cnn).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Trained background-net checkpoint (method cnn).
    #[arg(long)]
    pub cnn1: Option<PathBuf>,
    /// Trained phasor-net checkpoint (method cnn).
    #[arg(long)]
    pub cnn2: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref(), &args.set)?;
    if let Some(m) = &args.method {
        cfg.override_value("method", m);
    }
    if let Some(p) = &args.stack {
        cfg.override_value("stack", p.display());
    }
    if let Some(p) = &args.input {
        cfg.override_value("input", p.display());
    }
    if let Some(p) = &args.cnn1 {
        cfg.override_value("cnn1", p.display());
    }
    if let Some(p) = &args.cnn2 {
        cfg.override_value("cnn2", p.display());
    }

    let method = super::require(cfg.take_opt("method"), "--method", "method")?;
    let stack = cfg.take_opt("stack").map(PathBuf::from);
    let input = cfg.take_opt("input").map(PathBuf::from);
    let cnn1 = cfg.take_opt("cnn1").map(PathBuf::from);
    let cnn2 = cfg.take_opt("cnn2").map(PathBuf::from);

    // load inputs before the numeric keys: band defaults need the dims
    enum Loaded {
        Stack(Vec<Image>),
        Frame(Image),
    }
    let loaded = match method.as_str() {
        "ps" => {
            let dir = stack.ok_or_else(|| {
                Error::config("method ps needs --stack (or config key `stack`)")
            })?;
            Loaded::Stack(super::read_stack(&dir)?)
        }
        "ft" | "wft" | "cnn" => {
            let path = input.ok_or_else(|| {
                Error::config(format!(
                    "method {method} needs --input (or config key `input`)"
                ))
            })?;
            Loaded::Frame(super::read_image(&path)?)
        }
        other => {
            return Err(Error::validation(format!(
                "unknown method {other:?}; expected ps, ft, wft, or cnn"
            )))
        }
    };
    let (w, h) = match &loaded {
        Loaded::Stack(frames) => (frames[0].width(), frames[0].height()),
        Loaded::Frame(img) => (img.width(), img.height()),
    };

    let carrier = cfg.take("carrier_freq", 32.0)?;
    let ft_band_x = cfg.take("ft_band_x", carrier / 2.0)?;
    let ft_band_y = cfg.take("ft_band_y", ft_band_x * h as f64 / w as f64)?;
    let ft_edge_width = cfg.take("ft_edge_width", 4.0)?;
    let wft_sigma = cfg.take("wft_sigma", 10.0)?;
    let wft_band = cfg.take("wft_band", 0.6)?;
    let wft_step = cfg.take("wft_step", 0.025)?;
    let wft_threshold = cfg.take("wft_threshold", 6.0)?;
    let threshold = cfg.take("modulation_threshold", DEFAULT_MODULATION_THRESHOLD)?;
    let resolved = cfg.finish()?;

    let phasor: PhasorField = match (&loaded, method.as_str()) {
        (Loaded::Stack(frames), "ps") => demod_ps(frames)?,
        (Loaded::Frame(img), "ft") => {
            let params = FtParams {
                carrier_freq: carrier,
                band_x: Some(ft_band_x),
                band_y: Some(ft_band_y),
                edge_width: ft_edge_width,
            };
            demod_ft(img, &params)?
        }
        (Loaded::Frame(img), "wft") => {
            let omega0 = carrier_omega(carrier, w);
            let params = WftParams {
                window_sigma: wft_sigma,
                freq_lo_x: omega0 - wft_band,
                freq_hi_x: omega0 + wft_band,
                freq_lo_y: -wft_band,
                freq_hi_y: wft_band,
                freq_step: wft_step,
                threshold: wft_threshold,
            };
            demod_wft(img, &params)?
        }
        (Loaded::Frame(img), "cnn") => {
            let p1 = checkpoint_path(cnn1, "--cnn1", "cnn1")?;
            let p2 = checkpoint_path(cnn2, "--cnn2", "cnn2")?;
            let (mut net1, norm1) = load_resstack(&p1, ARCH_CNN1)?;
            let (mut net2, norm2) = load_cnn2(&p2)?;
            if norm1 != norm2 {
                return Err(Error::config(
                    "cnn1 and cnn2 checkpoints disagree on normalization",
                ));
            }
            let background = cnn1_forward(&mut net1, &norm1, img)?;
            cnn2_forward(&mut net2, &norm1, img, &background)?
        }
        _ => unreachable!("method validated above"),
    };

    let phase = phase_from_phasor(&phasor);
    let mask = modulation_mask(&phasor, threshold);

    super::ensure_dir(&args.out)?;
    resolved.save(&args.out)?;
    write_field(&args.out.join("phase.fpt"), &phase.values)?;
    write_field(&args.out.join("numerator.fpt"), &phasor.numerator)?;
    write_field(&args.out.join("denominator.fpt"), &phasor.denominator)?;
    write_field(&args.out.join("mask.fpt"), &super::mask_to_image(&mask))?;
    write_heatmap(&args.out.join("phase.png"), &phase.values, -PI, PI, Some(&mask))?;

    println!(
        "demodulated {method}: {w}x{h}, scale_c {}, {} valid pixels -> {}",
        phasor.scale_c,
        mask.count(),
        args.out.display()
    );
    Ok(())
}

/// The cnn method cannot run without trained weights; a missing flag or a
/// dangling path both exit with the offending flag named.
fn checkpoint_path(value: Option<PathBuf>, flag: &str, key: &str) -> Result<PathBuf> {
    let path = value.ok_or_else(|| {
        Error::config(format!(
            "method cnn needs trained weights: missing {flag} (or config key `{key}`)"
        ))
    })?;
    if !path.is_file() {
        return Err(Error::validation(format!(
            "no checkpoint at {} ({flag})",
            path.display()
        )));
    }
    Ok(path)
}
