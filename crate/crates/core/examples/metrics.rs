//! PSNR and SSIM between a scene and several degraded versions of it.
//!
//!     cargo run --release --example metrics

use saldl::image::ColorImage;
use saldl::metrics::{psnr_color, ssim_color, ColorSsim};
use saldl::networks::base_kernel;
use saldl::synth::{self, Scene};
use saldl::{convolve_same, floyd_steinberg, psnr, ssim};

fn main() -> saldl::Result<()> {
    let img = synth::scene(Scene::Portrait, 128, 1);
    let half = floyd_steinberg(&img)?.to_gray();
    let candidates = [
        ("identical", img.clone()),
        ("offset +0.1", img.map(|v| v + 0.1)),
        ("halftone", half.clone()),
        ("blurred halftone", convolve_same(&half, &base_kernel())?),
    ];
    println!("{:<18} {:>10} {:>8}", "candidate", "psnr (dB)", "ssim");
    for (name, c) in &candidates {
        println!("{name:<18} {:>10.3} {:>8.4}", psnr(&img, c, 1.0)?, ssim(&img, c)?);
    }
    let color = ColorImage::new(
        img.clone(),
        synth::scene(Scene::Clouds, 128, 2),
        synth::scene(Scene::Facade, 128, 3),
    )?;
    let noisy = ColorImage::new(
        color.planes()[0].map(|v| v * 0.9),
        color.planes()[1].clone(),
        color.planes()[2].clone(),
    )?;
    println!(
        "color: psnr {:.3} dB, luma ssim {:.4}",
        psnr_color(&color, &noisy, 1.0)?,
        ssim_color(&color, &noisy, ColorSsim::Luma)?
    );
    Ok(())
}
