//! `fringe compare`: run several demodulation methods over freshly
//! generated scenes, tabulate per-scene errors, and close the loop with
//! the two-sphere metrology check.

use crate::config::RunConfig;
use fringe_core::classical::{carrier_omega, demod_ps, phase_from_phasor, FtParams, WftParams};
use fringe_core::error::{Error, Result};
use fringe_core::eval::{
    aggregate_mae, compare_methods, comparison_csv, metrology_ps, sphere_metrology, CompareConfig,
    DirectContext, Method, MetrologyReport, NeuralContext, TwoSphereScene,
    DEFAULT_MODULATION_THRESHOLD,
};
use fringe_core::io::png::write_heatmap;
use fringe_core::neural::{demod_neural, load_cnn2, load_resstack, ARCH_CNN1, ARCH_DIRECT};
use fringe_core::synth::{gen_scene, GenParams, Sample};
use std::fmt::Write as _;
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
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref(), &args.set)?;

    // scene stream: `train` and `val` are offsets into the master seed's
    // scene sequence, so the default compare set reproduces exactly the
    // held-out test split of a default `fringe gen` dataset
    let d = GenParams::default();
    let scenes = cfg.take("scenes", d.test)?;
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
        test: scenes,
    };

    let methods_raw = cfg.take("methods", "ps,ft,wft".to_string())?;
    let methods = methods_raw
        .split(',')
        .map(|name| Method::parse(name.trim()))
        .collect::<Result<Vec<Method>>>()?;

    let cnn1_path = cfg.take_opt("cnn1").map(PathBuf::from);
    let cnn2_path = cfg.take_opt("cnn2").map(PathBuf::from);
    let direct_path = cfg.take_opt("direct").map(PathBuf::from);

    let threshold = cfg.take("modulation_threshold", DEFAULT_MODULATION_THRESHOLD)?;
    let ft_band_x = cfg.take("ft_band_x", params.carrier_freq / 2.0)?;
    let ft_band_y = cfg.take(
        "ft_band_y",
        ft_band_x * params.height as f64 / params.width as f64,
    )?;
    let ft_edge_width = cfg.take("ft_edge_width", 4.0)?;
    // the tighter window generalizes across the mixed scene families;
    // demod's defaults favor smooth scenes instead
    let wft_sigma = cfg.take("wft_sigma", 4.0)?;
    let wft_band = cfg.take("wft_band", 0.75)?;
    let wft_step = cfg.take("wft_step", 0.05)?;
    let wft_threshold = cfg.take("wft_threshold", 6.0)?;

    let sphere = cfg.take("sphere", true)?;
    let sphere_frames = cfg.take("sphere_frames", params.frames)?;
    let sphere_noise_sigma = cfg.take("sphere_noise_sigma", params.noise_sigma)?;
    let sphere_seed = cfg.take("sphere_seed", 707u64)?;
    let resolved = cfg.finish()?;

    if scenes == 0 {
        return Err(Error::validation("nothing to compare: scenes is 0"));
    }

    let mut neural = match (methods.contains(&Method::Cnn), cnn1_path, cnn2_path) {
        (false, _, _) => None,
        (true, Some(p1), Some(p2)) => {
            let (cnn1, norm1) = load_resstack(&p1, ARCH_CNN1)?;
            let (cnn2, norm2) = load_cnn2(&p2)?;
            if norm1 != norm2 {
                return Err(Error::config(
                    "cnn1 and cnn2 checkpoints disagree on normalization",
                ));
            }
            Some(NeuralContext {
                cnn1,
                cnn2,
                norm: norm1,
            })
        }
        _ => {
            return Err(Error::config(
                "method cnn needs config keys `cnn1` and `cnn2` pointing at trained checkpoints",
            ))
        }
    };
    let mut direct = match (methods.contains(&Method::Direct), direct_path) {
        (false, _) => None,
        (true, Some(p)) => {
            let (net, norm) = load_resstack(&p, ARCH_DIRECT)?;
            Some(DirectContext { net, norm })
        }
        (true, None) => {
            return Err(Error::config(
                "method direct needs config key `direct` pointing at a trained checkpoint",
            ))
        }
    };

    let samples = (0..scenes)
        .map(|i| gen_scene(&params, "test", i))
        .collect::<Result<Vec<Sample>>>()?;

    let omega0 = carrier_omega(params.carrier_freq, params.width);
    let cc = CompareConfig {
        ft: Some(FtParams {
            carrier_freq: params.carrier_freq,
            band_x: Some(ft_band_x),
            band_y: Some(ft_band_y),
            edge_width: ft_edge_width,
        }),
        wft: Some(WftParams {
            window_sigma: wft_sigma,
            freq_lo_x: omega0 - wft_band,
            freq_hi_x: omega0 + wft_band,
            freq_lo_y: -wft_band,
            freq_hi_y: wft_band,
            freq_step: wft_step,
            threshold: wft_threshold,
        }),
        modulation_threshold: Some(threshold),
    };
    let rows = compare_methods(&samples, &methods, &cc, neural.as_mut(), direct.as_mut())?;

    super::ensure_dir(&args.out)?;
    resolved.save(&args.out)?;
    super::write_text(&args.out.join("comparison.csv"), &comparison_csv(&rows))?;

    // the first scene's error maps give the table a face
    for row in rows.iter().filter(|r| r.scene_id == samples[0].id) {
        write_heatmap(
            &args.out.join(format!("error_{}.png", row.method.as_str())),
            &row.report.error_map,
            0.0,
            row.report.max_abs.max(1e-12),
            None,
        )?;
    }

    let mut summary = String::new();
    let mut ranked: Vec<(Method, f64)> = Vec::new();
    for &m in &methods {
        if let Some(mae) = aggregate_mae(&rows, m) {
            writeln!(
                summary,
                "mae {:<6} {mae:.9e} rad over {scenes} scenes",
                m.as_str()
            )
            .expect("string write");
            ranked.push((m, mae));
        }
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let ordering = ranked
        .iter()
        .map(|(m, _)| m.as_str())
        .collect::<Vec<_>>()
        .join(" < ");
    writeln!(summary, "ordering: {ordering}").expect("string write");

    if sphere {
        let scene = TwoSphereScene::default();
        // zero sigma means exact: no noise and no quantization, so the
        // closed-loop check can reach its nanometre-scale floor
        let data = if sphere_noise_sigma == 0.0 {
            scene.render_exact(sphere_frames)?
        } else {
            scene.render(sphere_frames, sphere_noise_sigma, params.bits, sphere_seed)?
        };

        let mut csv = String::from(
            "demod,radius_left_mm,radius_right_mm,distance_mm,\
             radius_error_left_um,radius_error_right_um,distance_error_um\n",
        );
        let mut add = |label: &str, rep: &MetrologyReport| {
            if let Some(w) = &rep.unwrap_warning {
                eprintln!("warning: sphere {label}: {w}");
            }
            writeln!(
                csv,
                "{label},{:.6},{:.6},{:.6},{:.3},{:.3},{:.3}",
                rep.left.radius,
                rep.right.radius,
                rep.center_distance,
                rep.radius_error_left * 1e3,
                rep.radius_error_right * 1e3,
                rep.distance_error * 1e3
            )
            .expect("string write");
            writeln!(
                summary,
                "sphere {label}: radius errors {:+.2} / {:+.2} um, distance error {:+.2} um",
                rep.radius_error_left * 1e3,
                rep.radius_error_right * 1e3,
                rep.distance_error * 1e3
            )
            .expect("string write");
        };

        add("ps", &metrology_ps(&data)?);
        if let Some(ctx) = neural.as_mut() {
            let high = demod_neural(&mut ctx.cnn1, &mut ctx.cnn2, &ctx.norm, &data.high_frames[0])?;
            // the unit-frequency anchor comes from phase shifting: one
            // fringe across the field is far outside the carrier the nets
            // were trained at
            let low = phase_from_phasor(&demod_ps(&data.low_frames)?);
            add("cnn", &sphere_metrology(&data, &high, &low)?);
        }
        super::write_text(&args.out.join("metrology.csv"), &csv)?;
    }

    super::write_text(&args.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
