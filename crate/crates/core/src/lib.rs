//! Inverse halftoning by structure-aware layer decomposition.
//!
//! A halftone is reconstructed as the sum of a smooth base layer and a signed
//! detail layer. The base layer comes from a Gaussian-blurred halftone plus a
//! learned residual whose target, `(x^o − x^i) ⊗ k^g`, has a much narrower
//! range than the plain difference `x^o − x^i`. The detail layer is predicted
//! from the base layer, the halftone, and a predicted Laplacian structure map.
//!
//! Modules, bottom up:
//!
//! - [`image`], [`pnm`]: pixel containers and binary PGM/PPM I/O
//! - [`filters`]: Gaussian kernels, same-size convolution, Laplacian maps
//! - [`halftone`]: Floyd–Steinberg error diffusion
//! - [`nn`]: a small CPU convolutional network engine with gradient checking
//! - [`networks`]: subnet architectures and the reconstruction pipeline
//! - [`training`]: patch datasets, the three training stages, baselines
//! - [`metrics`]: PSNR, SSIM and residual histograms
//! - [`verify`]: the property suite behind `saldl verify`
//! - [`cli`]: the `saldl` command surface

pub mod cli;
pub mod error;
pub mod filters;
pub mod halftone;
pub mod image;
pub mod metrics;
pub mod networks;
pub mod nn;
pub mod pnm;
pub mod synth;
pub mod training;
pub mod verify;

pub use error::{Error, PnmError, Result};
pub use filters::{convolve_same, gaussian_kernel, laplacian_map, Kernel};
pub use halftone::floyd_steinberg;
pub use image::{clamp01, merge_planes, split_planes, to_grayscale, BitImage, ColorImage, GrayImage};
pub use metrics::{psnr, residual_histogram, ssim, HistogramReport};
pub use networks::{
    build_baseline, build_subnet, predict_base, predict_detail, predict_structure_map, reconstruct,
    ArchScale, BaselineKind, ModelBundle, Role, SubnetSpec,
};
pub use pnm::{load_pgm, save_pgm};
