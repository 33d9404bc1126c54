//! Seeded, single-threaded MSE training for the demodulation nets.
//!
//! One generic loop drives all three tasks (background, phasor, direct
//! phase); the task builders only differ in which planes of a sample become
//! input and target. Everything downstream of the config seed is
//! deterministic, so two runs produce bit-identical weights.

use crate::error::{Error, Result};
use crate::field::wrap_phase;
use crate::io::fpw::TensorEntry;
use crate::neural::model::{
    save_cnn2, save_resstack, Cnn1Config, Cnn2Config, Normalization, ResStackNet, TwoScaleNet,
    ARCH_CNN1, ARCH_DIRECT,
};
use crate::nn::layers::Layer;
use crate::nn::ops::mse_loss;
use crate::nn::{Adam, Tensor};
use crate::synth::dataset::{derive_seed, Sample};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Knobs of one training run. The loss is always per-element MSE.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Upper bound on epochs; early stopping usually ends sooner.
    pub epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Share of the pool set apart for validation, never trained on.
    pub validation_fraction: f64,
    /// First epoch number of this run. Nonzero when resuming from a
    /// checkpoint: epoch numbering continues and the remaining budget is
    /// `epochs - start_epoch`. Optimizer moments start fresh either way.
    pub start_epoch: usize,
    /// Where a divergence dump lands. None skips the dump.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 8,
            epochs: 200,
            patience: 20,
            seed: 7,
            validation_fraction: 150.0 / 960.0,
            start_epoch: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning rate must be positive and finite"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epoch budget must be positive"));
        }
        if self.start_epoch >= self.epochs {
            return Err(Error::config(format!(
                "nothing left to train: start epoch {} >= budget {}",
                self.start_epoch, self.epochs
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// One line of the training history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Per-epoch losses plus where the best validation loss happened.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    /// Total optimizer steps taken, recorded into checkpoints.
    pub steps: u64,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{:.9e},{:.9e}\n", e.epoch, e.train_loss, e.val_loss));
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Splits `n` sample indices into (train, validation) with a seeded shuffle.
/// The validation side gets round(fraction * n), clamped so both sides stay
/// nonempty; a single-sample pool degenerates to validating on the training
/// sample, which only the memorization probes use.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::validation("cannot split an empty dataset"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if n == 1 {
        return Ok((vec![0], vec![0]));
    }
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut StdRng::seed_from_u64(derive_seed(seed, 0x511)));
    let (val, train) = order.split_at(n_val);
    let mut train = train.to_vec();
    let mut val = val.to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// A task ready for the generic loop: flat normalized planes per sample.
struct TaskData {
    ids: Vec<String>,
    inputs: Vec<Vec<f32>>,
    targets: Vec<Vec<f32>>,
    in_channels: usize,
    out_channels: usize,
    height: usize,
    width: usize,
}

impl TaskData {
    fn batch(&self, indices: &[usize]) -> (Tensor<f32>, Tensor<f32>) {
        let plane = self.height * self.width;
        let mut x = Tensor::zeros([indices.len(), self.in_channels, self.height, self.width]);
        let mut t = Tensor::zeros([indices.len(), self.out_channels, self.height, self.width]);
        for (row, &i) in indices.iter().enumerate() {
            let xb = row * self.in_channels * plane;
            x.data_mut()[xb..xb + self.in_channels * plane].copy_from_slice(&self.inputs[i]);
            let tb = row * self.out_channels * plane;
            t.data_mut()[tb..tb + self.out_channels * plane].copy_from_slice(&self.targets[i]);
        }
        (x, t)
    }
}

fn snapshot(layer: &mut dyn Layer<f32>) -> Vec<Vec<f32>> {
    let mut snap = Vec::new();
    layer.visit_params(&mut |_, t| snap.push(t.data().to_vec()));
    snap
}

fn restore(layer: &mut dyn Layer<f32>, snap: &[Vec<f32>]) {
    let mut i = 0;
    layer.visit_params(&mut |_, t| {
        t.data_mut().copy_from_slice(&snap[i]);
        i += 1;
    });
}

/// Mean loss over a sample set without touching gradients.
fn eval_loss(
    layer: &mut dyn Layer<f32>,
    data: &TaskData,
    indices: &[usize],
    batch_size: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for chunk in indices.chunks(batch_size) {
        let (x, t) = data.batch(chunk);
        let y = layer.forward(&x)?;
        let (loss, _) = mse_loss(&y, &t)?;
        total += loss as f64 * chunk.len() as f64;
    }
    Ok(total / indices.len() as f64)
}

/// What a diverged run leaves behind for inspection.
type DumpFn<'a> = dyn FnMut(&Path, &mut dyn Layer<f32>, u64) -> Result<()> + 'a;

/// The shared loop: seeded split, per-epoch shuffle, Adam over MSE, early
/// stopping on validation loss with best-weights restore. A non-finite loss
/// aborts the run, dumping the last finite weights when a directory is set.
fn run_training(
    layer: &mut dyn Layer<f32>,
    data: &TaskData,
    cfg: &TrainConfig,
    label: &str,
    dump: &mut DumpFn<'_>,
) -> Result<History> {
    cfg.validate()?;
    if data.ids.is_empty() {
        return Err(Error::validation("training dataset is empty"));
    }
    let (train_idx, val_idx) = split_indices(data.ids.len(), cfg.validation_fraction, cfg.seed)?;
    if data.ids.len() > 1 {
        debug_assert!(train_idx.iter().all(|i| !val_idx.contains(i)));
    }

    let mut opt = Adam::<f32>::new(cfg.learning_rate);
    let mut history = History {
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        stopped_early: false,
        steps: 0,
    };
    let mut best_weights = snapshot(layer);
    let mut stale_epochs = 0usize;

    let mut shuffled = train_idx.clone();
    for epoch in cfg.start_epoch..cfg.epochs {
        shuffled.shuffle(&mut StdRng::seed_from_u64(derive_seed(
            cfg.seed,
            1000 + epoch as u64,
        )));

        let mut epoch_loss = 0.0;
        for chunk in shuffled.chunks(cfg.batch_size) {
            let finite_weights = snapshot(layer);
            let (x, t) = data.batch(chunk);
            let y = layer.forward(&x)?;
            let (loss, grad) = mse_loss(&y, &t)?;
            if !loss.is_finite() {
                restore(layer, &finite_weights);
                if let Some(dir) = &cfg.checkpoint_dir {
                    let path = dir.join(format!("{label}-diverged.fpw"));
                    dump(&path, layer, history.steps)?;
                }
                return Err(Error::numeric(format!(
                    "{label} training diverged at epoch {epoch} (loss not finite)"
                )));
            }
            epoch_loss += loss as f64 * chunk.len() as f64;
            layer.zero_grads();
            layer.backward(&grad)?;
            opt.step(layer)?;
            history.steps += 1;
        }
        let train_loss = epoch_loss / shuffled.len() as f64;
        let val_loss = eval_loss(layer, data, &val_idx, cfg.batch_size)?;
        if !val_loss.is_finite() {
            return Err(Error::numeric(format!(
                "{label} validation loss not finite at epoch {epoch}"
            )));
        }
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });

        if val_loss < history.best_val_loss {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best_weights = snapshot(layer);
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }

    restore(layer, &best_weights);
    Ok(history)
}

fn check_pool(samples: &[Sample], norm: &Normalization) -> Result<(usize, usize)> {
    let Some(first) = samples.first() else {
        return Err(Error::validation("training dataset is empty"));
    };
    if first.frames.len() != norm.frames {
        return Err(Error::validation(format!(
            "samples carry {} frames but normalization says {}",
            first.frames.len(),
            norm.frames
        )));
    }
    Ok((first.spec.width, first.spec.height))
}

fn norm_plane(img: &crate::field::Image, scale: f64) -> Vec<f32> {
    img.data().iter().map(|&v| (v / scale) as f32).collect()
}

fn cnn1_task(samples: &[Sample], norm: &Normalization) -> Result<TaskData> {
    let (width, height) = check_pool(samples, norm)?;
    Ok(TaskData {
        ids: samples.iter().map(|s| s.id.clone()).collect(),
        inputs: samples
            .iter()
            .map(|s| norm_plane(&s.frames[0], norm.maxval))
            .collect(),
        targets: samples
            .iter()
            .map(|s| norm_plane(&s.truth.background, norm.maxval))
            .collect(),
        in_channels: 1,
        out_channels: 1,
        height,
        width,
    })
}

/// Trains the background net: first frame in, clean background out.
pub fn train_cnn1(
    samples: &[Sample],
    norm: &Normalization,
    net_cfg: &Cnn1Config,
    cfg: &TrainConfig,
) -> Result<(ResStackNet<f32>, History)> {
    let mut net = ResStackNet::new(net_cfg, 1, 1, derive_seed(cfg.seed, 0xC1))?;
    let history = resume_cnn1(samples, norm, &mut net, cfg)?;
    Ok((net, history))
}

/// Continues training an existing background net; epoch numbering starts
/// at `cfg.start_epoch`.
pub fn resume_cnn1(
    samples: &[Sample],
    norm: &Normalization,
    net: &mut ResStackNet<f32>,
    cfg: &TrainConfig,
) -> Result<History> {
    let data = cnn1_task(samples, norm)?;
    let net_cfg = net.config.clone();
    let norm_copy = *norm;
    let seed = derive_seed(cfg.seed, 0xC1);
    run_training(net, &data, cfg, "cnn1", &mut |path, layer, step| {
        save_dump(path, ARCH_CNN1, layer, &net_cfg, &norm_copy, seed, step)
    })
}

fn cnn2_task(
    samples: &[Sample],
    norm: &Normalization,
    cnn1: &mut ResStackNet<f32>,
    batch_size: usize,
) -> Result<TaskData> {
    let (width, height) = check_pool(samples, norm)?;
    let plane = width * height;

    // batched prediction pass; cnn1 weights are fixed from here on
    let mut backgrounds: Vec<Vec<f32>> = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(batch_size.max(1)) {
        let mut x = Tensor::zeros([chunk.len(), 1, height, width]);
        for (row, s) in chunk.iter().enumerate() {
            x.data_mut()[row * plane..(row + 1) * plane]
                .copy_from_slice(&norm_plane(&s.frames[0], norm.maxval));
        }
        let y = cnn1.forward(&x)?;
        for row in 0..chunk.len() {
            backgrounds.push(y.data()[row * plane..(row + 1) * plane].to_vec());
        }
    }

    let phasor_scale = norm.phasor_scale();
    Ok(TaskData {
        ids: samples.iter().map(|s| s.id.clone()).collect(),
        inputs: samples
            .iter()
            .zip(&backgrounds)
            .map(|(s, bg)| {
                let mut planes = norm_plane(&s.frames[0], norm.maxval);
                planes.extend_from_slice(bg);
                planes
            })
            .collect(),
        targets: samples
            .iter()
            .map(|s| {
                let mut planes = norm_plane(&s.truth.numerator, phasor_scale);
                planes.extend_from_slice(&norm_plane(&s.truth.denominator, phasor_scale));
                planes
            })
            .collect(),
        in_channels: 2,
        out_channels: 2,
        height,
        width,
    })
}

/// Trains the phasor net on this pool. Background inputs are the first
/// net's predictions, recomputed once up front, so the training
/// distribution matches what inference will feed it.
pub fn train_cnn2(
    samples: &[Sample],
    norm: &Normalization,
    cnn1: &mut ResStackNet<f32>,
    net_cfg: &Cnn2Config,
    cfg: &TrainConfig,
) -> Result<(TwoScaleNet<f32>, History)> {
    let mut net = TwoScaleNet::new(net_cfg, 2, 2, derive_seed(cfg.seed, 0xC2))?;
    let history = resume_cnn2(samples, norm, cnn1, &mut net, cfg)?;
    Ok((net, history))
}

/// Continues training an existing phasor net.
pub fn resume_cnn2(
    samples: &[Sample],
    norm: &Normalization,
    cnn1: &mut ResStackNet<f32>,
    net: &mut TwoScaleNet<f32>,
    cfg: &TrainConfig,
) -> Result<History> {
    let data = cnn2_task(samples, norm, cnn1, cfg.batch_size)?;
    let net_cfg = net.config.clone();
    let norm_copy = *norm;
    let seed = derive_seed(cfg.seed, 0xC2);
    run_training(net, &data, cfg, "cnn2", &mut |path, layer, step| {
        save_dump_cnn2(path, layer, &net_cfg, &norm_copy, seed, step)
    })
}

fn direct_task(samples: &[Sample], norm: &Normalization) -> Result<TaskData> {
    let (width, height) = check_pool(samples, norm)?;
    Ok(TaskData {
        ids: samples.iter().map(|s| s.id.clone()).collect(),
        inputs: samples
            .iter()
            .map(|s| norm_plane(&s.frames[0], norm.maxval))
            .collect(),
        targets: samples
            .iter()
            .map(|s| {
                s.truth
                    .phase
                    .values
                    .data()
                    .iter()
                    .map(|&v| (wrap_phase(v) / PI) as f32)
                    .collect()
            })
            .collect(),
        in_channels: 1,
        out_channels: 1,
        height,
        width,
    })
}

/// Trains the single-net baseline that regresses wrapped phase / pi.
pub fn train_direct(
    samples: &[Sample],
    norm: &Normalization,
    net_cfg: &Cnn1Config,
    cfg: &TrainConfig,
) -> Result<(ResStackNet<f32>, History)> {
    let mut net = ResStackNet::new(net_cfg, 1, 1, derive_seed(cfg.seed, 0xD1))?;
    let history = resume_direct(samples, norm, &mut net, cfg)?;
    Ok((net, history))
}

/// Continues training an existing direct-regression net.
pub fn resume_direct(
    samples: &[Sample],
    norm: &Normalization,
    net: &mut ResStackNet<f32>,
    cfg: &TrainConfig,
) -> Result<History> {
    let data = direct_task(samples, norm)?;
    let net_cfg = net.config.clone();
    let norm_copy = *norm;
    let seed = derive_seed(cfg.seed, 0xD1);
    run_training(net, &data, cfg, "direct", &mut |path, layer, step| {
        save_dump(path, ARCH_DIRECT, layer, &net_cfg, &norm_copy, seed, step)
    })
}

// The dump closures only ever see the net they were built for, so the
// downcast-free rebuild below is safe: it reconstructs an identically
// shaped net and copies the parameters across by declaration order.
fn save_dump(
    path: &Path,
    arch: &str,
    layer: &mut dyn Layer<f32>,
    net_cfg: &Cnn1Config,
    norm: &Normalization,
    seed: u64,
    step: u64,
) -> Result<()> {
    let mut copy = ResStackNet::<f32>::new(net_cfg, 1, 1, seed)?;
    copy_params(layer, &mut copy)?;
    save_resstack(path, arch, &mut copy, norm, seed, step)
}

fn save_dump_cnn2(
    path: &Path,
    layer: &mut dyn Layer<f32>,
    net_cfg: &Cnn2Config,
    norm: &Normalization,
    seed: u64,
    step: u64,
) -> Result<()> {
    let mut copy = TwoScaleNet::<f32>::new(net_cfg, 2, 2, seed)?;
    copy_params(layer, &mut copy)?;
    save_cnn2(path, &mut copy, norm, seed, step)
}

fn copy_params(src: &mut dyn Layer<f32>, dst: &mut dyn Layer<f32>) -> Result<()> {
    let mut entries: Vec<(String, Vec<f32>)> = Vec::new();
    src.visit_params(&mut |n, t| entries.push((n.to_string(), t.data().to_vec())));
    let mut i = 0;
    let mut bad: Option<TensorEntry> = None;
    dst.visit_params(&mut |n, t| {
        if bad.is_some() {
            return;
        }
        if entries[i].0 != n || entries[i].1.len() != t.len() {
            bad = Some(TensorEntry {
                name: n.to_string(),
                dims: t.dims().to_vec(),
            });
            return;
        }
        t.data_mut().copy_from_slice(&entries[i].1);
        i += 1;
    });
    match bad {
        Some(e) => Err(Error::numeric(format!(
            "divergence dump shape mismatch at {:?} {:?}",
            e.name, e.dims
        ))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::dataset::{gen_scene, GenParams};

    fn tiny_params(train: usize) -> GenParams {
        GenParams {
            width: 16,
            height: 16,
            frames: 12,
            carrier_freq: 4.0,
            bits: 8,
            noise_sigma: 0.0,
            seed: 5,
            train,
            val: 0,
            test: 0,
        }
    }

    fn tiny_pool(n: usize) -> (Vec<Sample>, Normalization) {
        let params = tiny_params(n);
        let samples: Vec<Sample> = (0..n)
            .map(|i| gen_scene(&params, "train", i).unwrap())
            .collect();
        let norm = Normalization::new(params.maxval(), params.frames).unwrap();
        (samples, norm)
    }

    fn tiny_net_cfg() -> Cnn1Config {
        Cnn1Config {
            base_channels: 4,
            n_residual_blocks: 1,
        }
    }

    #[test]
    fn split_is_disjoint_and_sized() {
        let (train, val) = split_indices(960, 150.0 / 960.0, 3).unwrap();
        assert_eq!(val.len(), 150);
        assert_eq!(train.len(), 810);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..960).collect::<Vec<_>>());

        // both sides stay nonempty even at extreme fractions
        let (t2, v2) = split_indices(4, 0.01, 3).unwrap();
        assert_eq!((t2.len(), v2.len()), (3, 1));
        assert!(split_indices(0, 0.2, 3).is_err());
        assert!(split_indices(10, 1.0, 3).is_err());
    }

    #[test]
    fn single_sample_memorizes_background() {
        let (samples, norm) = tiny_pool(1);
        let cfg = TrainConfig {
            learning_rate: 2e-3,
            batch_size: 1,
            epochs: 400,
            patience: 400,
            seed: 9,
            ..TrainConfig::default()
        };
        let (_, history) = train_cnn1(&samples, &norm, &tiny_net_cfg(), &cfg).unwrap();
        let first = history.epochs.first().unwrap().train_loss;
        let last = history.epochs.last().unwrap().train_loss;
        assert!(
            last <= 1e-3 * first,
            "loss went {first:.3e} -> {last:.3e}, wanted 1e-3x"
        );
    }

    #[test]
    fn resume_continues_epoch_numbering() {
        let (samples, norm) = tiny_pool(3);
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 2,
            epochs: 2,
            patience: 100,
            seed: 11,
            ..TrainConfig::default()
        };
        let (mut net, first) = train_cnn1(&samples, &norm, &tiny_net_cfg(), &cfg).unwrap();
        let epochs = |h: &History| h.epochs.iter().map(|e| e.epoch).collect::<Vec<_>>();
        assert_eq!(epochs(&first), vec![0, 1]);

        let resumed = resume_cnn1(
            &samples,
            &norm,
            &mut net,
            &TrainConfig {
                epochs: 4,
                start_epoch: 2,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(epochs(&resumed), vec![2, 3]);

        // exhausted budgets are a config error, not a silent no-op
        assert!(matches!(
            resume_cnn1(
                &samples,
                &norm,
                &mut net,
                &TrainConfig {
                    epochs: 4,
                    start_epoch: 4,
                    ..cfg
                }
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let (samples, norm) = tiny_pool(4);
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 2,
            epochs: 3,
            patience: 10,
            seed: 42,
            ..TrainConfig::default()
        };
        let (mut a, ha) = train_cnn1(&samples, &norm, &tiny_net_cfg(), &cfg).unwrap();
        let (mut b, hb) = train_cnn1(&samples, &norm, &tiny_net_cfg(), &cfg).unwrap();
        assert_eq!(ha, hb);
        let mut wa = Vec::new();
        a.visit_params(&mut |_, t| wa.extend_from_slice(t.data()));
        let mut wb = Vec::new();
        b.visit_params(&mut |_, t| wb.extend_from_slice(t.data()));
        assert_eq!(wa, wb);
    }

    #[test]
    fn empty_pool_is_rejected() {
        let norm = Normalization::new(255.0, 12).unwrap();
        let err = train_cnn1(&[], &norm, &tiny_net_cfg(), &TrainConfig::default());
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn divergence_dumps_last_finite_weights() {
        let (samples, norm) = tiny_pool(3);
        let dir = std::env::temp_dir().join(format!("fringe-diverge-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e12,
            batch_size: 1,
            epochs: 5,
            patience: 5,
            seed: 4,
            checkpoint_dir: Some(dir.clone()),
            ..TrainConfig::default()
        };
        match train_cnn1(&samples, &norm, &tiny_net_cfg(), &cfg) {
            Err(Error::Numeric(_)) => {}
            Err(e) => panic!("unexpected error kind: {e:?}"),
            Ok(_) => panic!("training with an absurd learning rate should diverge"),
        }
        let dump = dir.join("cnn1-diverged.fpw");
        let (mut net, _) = crate::neural::model::load_resstack(&dump, ARCH_CNN1).unwrap();
        let mut finite = true;
        net.visit_params(&mut |_, t| finite &= t.data().iter().all(|v| v.is_finite()));
        assert!(finite, "dumped weights must be finite");
        std::fs::remove_file(&dump).ok();
    }

    #[test]
    fn cnn2_and_direct_train_end_to_end() {
        let (samples, norm) = tiny_pool(3);
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 2,
            epochs: 2,
            patience: 5,
            seed: 11,
            ..TrainConfig::default()
        };
        let (mut cnn1, _) = train_cnn1(&samples, &norm, &tiny_net_cfg(), &cfg).unwrap();
        let cfg2 = Cnn2Config {
            base_channels: 4,
            n_residual_blocks: 1,
        };
        let (mut cnn2, h2) = train_cnn2(&samples, &norm, &mut cnn1, &cfg2, &cfg).unwrap();
        assert_eq!(h2.epochs.len(), 2);
        let (mut direct, _) = train_direct(&samples, &norm, &tiny_net_cfg(), &cfg).unwrap();

        let phase =
            crate::neural::model::demod_neural(&mut cnn1, &mut cnn2, &norm, &samples[0].frames[0])
                .unwrap();
        phase.check_wrapped_range().unwrap();
        let dphase =
            crate::neural::model::demod_direct(&mut direct, &norm, &samples[0].frames[0]).unwrap();
        dphase.check_wrapped_range().unwrap();
    }
}
