//! Builds a patch dataset directory from the synthetic corpus and reads it
//! back.
//!
//!     cargo run --release --example dataset -- [OUT_DIR]

use std::path::PathBuf;

use saldl::synth;
use saldl::training::{build_dataset, load_dataset_dir, save_dataset_dir};

fn main() -> saldl::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dataset_out".into()));
    let images = synth::corpus(5, 96, 42);
    let samples = build_dataset(&images, 32, 8, 0)?;
    save_dataset_dir(&out, &samples)?;
    let back = load_dataset_dir(&out)?;
    let lap_range = back
        .iter()
        .map(|t| (t.laplacian.min(), t.laplacian.max()))
        .fold((f64::MAX, f64::MIN), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    println!("{} triplets of 32x32 in {}", back.len(), out.display());
    println!("stored Laplacian range [{:.3}, {:.3}]", lap_range.0, lap_range.1);
    Ok(())
}
