//! Floyd–Steinberg halftones of the synthetic scenes.
//!
//! Writes `<scene>.pgm` and `<scene>_halftone.pgm` into the output directory
//! (default `halftone_out`) and prints how well each halftone keeps the tone.
//!
//!     cargo run --release --example halftone -- [OUT_DIR]

use std::path::PathBuf;

use saldl::{convolve_same, floyd_steinberg, gaussian_kernel, psnr, save_pgm, synth};

fn main() -> saldl::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "halftone_out".into()));
    std::fs::create_dir_all(&out).map_err(|e| saldl::Error::io(&out, e))?;
    let k = gaussian_kernel(1.0, 5)?;
    println!("{:<10} {:>9} {:>9} {:>12}", "scene", "mean", "ht mean", "blur psnr");
    for (name, img) in synth::natural_test_set(256) {
        let bits = floyd_steinberg(&img)?;
        let half = bits.to_gray();
        save_pgm(&img, out.join(format!("{name}.pgm")))?;
        save_pgm(&half, out.join(format!("{name}_halftone.pgm")))?;
        let blurred = convolve_same(&half, &k)?;
        println!(
            "{name:<10} {:>9.4} {:>9.4} {:>9.2} dB",
            img.mean(),
            bits.mean(),
            psnr(&img, &blurred, 1.0)?
        );
    }
    println!("wrote images to {}", out.display());
    Ok(())
}
