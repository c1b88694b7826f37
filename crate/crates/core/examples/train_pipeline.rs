//! Trains all three stages plus the PRL baseline on a small synthetic
//! corpus, saves the model directory and compares reconstructions against
//! the blurred halftone and the base layer alone.
//!
//!     cargo run --release --example train_pipeline -- [MODEL_DIR] [EPOCHS]

use std::path::PathBuf;

use saldl::networks::{base_kernel, reconstruct_baseline};
use saldl::synth;
use saldl::training::{build_dataset, save_model_dir, train_pipeline, LogRow, RunOptions, TensorSet, TrainConfig};
use saldl::{convolve_same, predict_base, psnr, reconstruct, BaselineKind};

fn main() -> saldl::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "model_out".into()));
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let cfg = TrainConfig {
        epochs,
        iters_per_epoch: 50,
        lr_step_epochs: epochs.div_ceil(2),
        ..TrainConfig::default()
    };
    let k = base_kernel();
    let samples = build_dataset(&synth::corpus(4, 64, 11), cfg.patch_size, 4, cfg.seed)?;
    let set = TensorSet::new(&samples, &k)?;
    let mut print = |r: &LogRow| println!("stage {:<5} epoch {:>3} loss {:.4e}", r.stage, r.epoch, r.loss_total);
    let mut opts = RunOptions {
        start_epoch: 0,
        on_epoch: Some(&mut print),
    };
    let result = train_pipeline(&set, None, &cfg, &[BaselineKind::Prl], &mut opts)?;
    save_model_dir(&dir, &result.bundle, &result.epochs)?;

    let n = samples.len() as f64;
    let (mut blur, mut base, mut recon, mut prl) = (0.0, 0.0, 0.0, 0.0);
    for s in &samples {
        blur += psnr(&convolve_same(&s.halftone, &k)?.clamp01(), &s.original, 1.0)?;
        base += psnr(&predict_base(&s.halftone, &result.bundle)?.0.clamp01(), &s.original, 1.0)?;
        recon += psnr(&reconstruct(&s.halftone, &result.bundle)?, &s.original, 1.0)?;
        prl += psnr(
            &reconstruct_baseline(&s.halftone, &result.bundle, BaselineKind::Prl)?,
            &s.original,
            1.0,
        )?;
    }
    println!("mean training-set PSNR over {} patches:", samples.len());
    println!("  blurred halftone {:.2} dB", blur / n);
    println!("  base layer       {:.2} dB", base / n);
    println!("  reconstruction   {:.2} dB", recon / n);
    println!("  PRL baseline     {:.2} dB", prl / n);
    println!("model saved to {}", dir.display());
    Ok(())
}
