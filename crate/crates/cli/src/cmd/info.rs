//! `fringe info`: defaults, formats, and conventions in one place.

use fringe_core::error::Result;
use fringe_core::eval::{DEFAULT_MODULATION_THRESHOLD, EVAL_MARGIN};
use fringe_core::synth::GenParams;

pub fn run() -> Result<()> {
    let d = GenParams::default();
    println!("fringe {}", env!("CARGO_PKG_VERSION"));
    println!();
    println!("model      I_n = A + B cos(Phi - 2 pi n / N), n = 0..N-1");
    println!("phase      phi = atan2(M, D) in (-pi, pi]; scale_c = N/2 (ps), 0.5 (ft, wft, cnn)");
    println!("methods    ps (N-step oracle), ft, wft, cnn (two-stage), direct (ablation)");
    println!();
    println!(
        "gen        {}x{} px, N = {}, carrier {} fringes, {}-bit, noise sigma {}, \
         splits {}/{}/{}, seed {}",
        d.width,
        d.height,
        d.frames,
        d.carrier_freq,
        d.bits,
        d.noise_sigma,
        d.train,
        d.val,
        d.test,
        d.seed
    );
    println!(
        "train      base_channels 32, 4 residual blocks, Adam, lr 1e-4, batch 8, \
         up to 200 epochs, patience 20, seed 7"
    );
    println!(
        "eval       modulation threshold {DEFAULT_MODULATION_THRESHOLD} counts, \
         {EVAL_MARGIN} px border margin"
    );
    println!();
    println!("formats    PGM (P5) frames; FPT1 float32 fields; FPW1 checkpoints;");
    println!("           CSV / JSON reports; PNG heatmaps; every run echoes resolved.cfg");
    println!();
    println!("exit codes 0 success, 1 invalid input or configuration, 2 I/O failure,");
    println!("           3 numeric failure (divergence dumps the last finite checkpoint)");
    println!();
    println!("threads    1; runs are single-threaded and bit-for-bit reproducible");
    Ok(())
}
