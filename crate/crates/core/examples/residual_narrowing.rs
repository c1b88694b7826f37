//! Compares the additive residual `original − halftone` with the Gaussian
//! residual `(original − halftone) ⊗ k` on the synthetic test set, and
//! writes both histograms as CSV.
//!
//!     cargo run --release --example residual_narrowing -- [OUT_DIR]

use std::path::PathBuf;

use saldl::metrics::DEFAULT_BINS;
use saldl::networks::base_kernel;
use saldl::{floyd_steinberg, residual_histogram, synth};

fn main() -> saldl::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "narrowing_out".into()));
    std::fs::create_dir_all(&out).map_err(|e| saldl::Error::io(&out, e))?;
    let k = base_kernel();
    println!(
        "{:<10} {:>10} {:>10} {:>10} {:>12} {:>12}",
        "scene", "add std", "gcm std", "std ratio", "add width99", "gcm width99"
    );
    for (name, img) in synth::natural_test_set(256) {
        let half = floyd_steinberg(&img)?;
        let r = residual_histogram(&img, &half, &k, DEFAULT_BINS)?;
        println!(
            "{name:<10} {:>10.4} {:>10.4} {:>10.4} {:>12.4} {:>12.4}",
            r.additive_stats.std,
            r.gcm_stats.std,
            r.std_ratio(),
            r.additive_stats.width99,
            r.gcm_stats.width99
        );
        let path = out.join(format!("{name}_histogram.csv"));
        std::fs::write(&path, r.to_csv()).map_err(|e| saldl::Error::io(&path, e))?;
    }
    println!("histograms in {}", out.display());
    Ok(())
}
