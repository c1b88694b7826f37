//! Reconstructs a halftone with a trained model directory and writes every
//! intermediate layer.
//!
//!     cargo run --release --example reconstruct -- MODEL_DIR [HALFTONE.pgm] [OUT_DIR]
//!
//! Without a halftone, a synthetic scene is halftoned first.

use std::path::PathBuf;

use saldl::networks::reconstruct_layers;
use saldl::synth::{self, Scene};
use saldl::training::load_model_dir;
use saldl::{floyd_steinberg, load_pgm, psnr, save_pgm, ssim};

fn main() -> saldl::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(model) = args.next() else {
        eprintln!("usage: reconstruct MODEL_DIR [HALFTONE.pgm] [OUT_DIR]");
        std::process::exit(1);
    };
    let (bundle, epochs) = load_model_dir(&model)?;
    println!("loaded {model}: {:?}, epochs {epochs:?}", bundle.arch);
    let (halftone, original) = match args.next() {
        Some(p) => (load_pgm(&p)?, None),
        None => {
            let img = synth::scene(Scene::Landscape, 128, 9);
            (floyd_steinberg(&img)?.to_gray(), Some(img))
        }
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "reconstruct_out".into()));
    std::fs::create_dir_all(&out).map_err(|e| saldl::Error::io(&out, e))?;
    let l = reconstruct_layers(&halftone, &bundle)?;
    save_pgm(&halftone, out.join("halftone.pgm"))?;
    save_pgm(&l.blurred, out.join("blurred.pgm"))?;
    save_pgm(&l.base.clamp01(), out.join("base.pgm"))?;
    save_pgm(&l.initial.clamp01(), out.join("initial.pgm"))?;
    save_pgm(&l.laplacian.offset_encode(), out.join("laplacian.pgm"))?;
    save_pgm(&l.detail.offset_encode(), out.join("detail.pgm"))?;
    save_pgm(&l.output, out.join("output.pgm"))?;
    println!(
        "detail range [{:.3}, {:.3}], laplacian range [{:.3}, {:.3}]",
        l.detail.min(),
        l.detail.max(),
        l.laplacian.min(),
        l.laplacian.max()
    );
    if let Some(img) = original {
        println!(
            "PSNR {:.2} dB (blurred {:.2} dB), SSIM {:.4}",
            psnr(&img, &l.output, 1.0)?,
            psnr(&img, &l.blurred, 1.0)?,
            ssim(&img, &l.output)?
        );
    }
    println!("layers written to {}", out.display());
    Ok(())
}
