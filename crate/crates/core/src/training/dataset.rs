//! Aligned patch triplets `(original, halftone, laplacian)` and their
//! stacked tensor form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{convolve_same, laplacian_map, Kernel};
use crate::halftone::floyd_steinberg;
use crate::image::{ColorImage, GrayImage};
use crate::nn::Tensor4;
use crate::pnm::{load_pgm, load_pnm, save_pgm, Pnm};

/// One training sample: co-located crops of the original, its halftone and
/// its Laplacian. The halftone and Laplacian are computed on the whole image
/// before cropping.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTriplet {
    pub original: GrayImage,
    pub halftone: GrayImage,
    pub laplacian: GrayImage,
}

/// Cuts `per_image` random aligned `patch × patch` triplets from each image.
pub fn build_dataset(images: &[GrayImage], patch: usize, per_image: usize, seed: u64) -> Result<Vec<SampleTriplet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(images.len() * per_image);
    for (i, img) in images.iter().enumerate() {
        let (h, w) = img.dims();
        if h < patch || w < patch {
            return Err(Error::Data(format!(
                "image {i} is {h}x{w}, smaller than the {patch}x{patch} patch"
            )));
        }
        let halftone = floyd_steinberg(img)?.to_gray();
        let laplacian = laplacian_map(img)?;
        for _ in 0..per_image {
            let y = rng.gen_range(0..=h - patch);
            let x = rng.gen_range(0..=w - patch);
            out.push(SampleTriplet {
                original: img.crop(y, x, patch, patch)?,
                halftone: halftone.crop(y, x, patch, patch)?,
                laplacian: laplacian.crop(y, x, patch, patch)?,
            });
        }
    }
    Ok(out)
}

/// Color images contribute each of their three planes as a grayscale image.
pub fn build_dataset_color(images: &[ColorImage], patch: usize, per_image: usize, seed: u64) -> Result<Vec<SampleTriplet>> {
    let planes: Vec<GrayImage> = images.iter().flat_map(|c| c.planes().iter().cloned()).collect();
    build_dataset(&planes, patch, per_image, seed)
}

/// The stage-1 target `(original − halftone) ⊗ k`.
pub fn gcm_target(t: &SampleTriplet, kernel: &Kernel) -> Result<GrayImage> {
    convolve_same(&t.original.sub(&t.halftone)?, kernel)
}

pub const DATASET_MANIFEST: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "index,original,halftone,laplacian";
const LAPLACIAN_NOTE: &str = "# laplacian encoding: stored = (v + 1) / 2, values outside [-1, 1] clipped";

/// Writes each triplet as three PGMs plus `manifest.csv`. The signed
/// Laplacian is stored offset-encoded, so the files are 8-bit quantized.
pub fn save_dataset_dir(dir: impl AsRef<Path>, samples: &[SampleTriplet]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!("{LAPLACIAN_NOTE}\n{MANIFEST_HEADER}\n");
    for (i, t) in samples.iter().enumerate() {
        let names = [
            format!("{i:05}_original.pgm"),
            format!("{i:05}_halftone.pgm"),
            format!("{i:05}_laplacian.pgm"),
        ];
        save_pgm(&t.original, dir.join(&names[0]))?;
        save_pgm(&t.halftone, dir.join(&names[1]))?;
        save_pgm(&t.laplacian.offset_encode(), dir.join(&names[2]))?;
        writeln!(manifest, "{i},{},{},{}", names[0], names[1], names[2]).expect("string write");
    }
    let path = dir.join(DATASET_MANIFEST);
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

pub fn load_dataset_dir(dir: impl AsRef<Path>) -> Result<Vec<SampleTriplet>> {
    let dir = dir.as_ref();
    let path = dir.join(DATASET_MANIFEST);
    if !path.exists() {
        return Err(Error::MissingArtifact(path));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut rows = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    if rows.next().map(str::trim) != Some(MANIFEST_HEADER) {
        return Err(Error::Data(format!("{}: unexpected header", path.display())));
    }
    rows.map(|row| {
        let f: Vec<&str> = row.trim().split(',').collect();
        if f.len() != 4 {
            return Err(Error::Data(format!("{}: bad row {row:?}", path.display())));
        }
        Ok(SampleTriplet {
            original: load_pgm(dir.join(f[1]))?,
            halftone: load_pgm(dir.join(f[2]))?,
            laplacian: load_pgm(dir.join(f[3]))?.offset_decode(),
        })
    })
    .collect()
}

/// PGM/PPM files in a directory, sorted by name. Color images yield their
/// three planes.
pub fn load_corpus_planes(dir: impl AsRef<Path>) -> Result<Vec<(String, GrayImage)>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("pgm" | "ppm" | "pnm")
            )
        })
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();
        match load_pnm(&p)? {
            Pnm::Gray(g) => out.push((stem, g)),
            Pnm::Color(c) => {
                for (plane, name) in c.into_planes().into_iter().zip(["r", "g", "b"]) {
                    out.push((format!("{stem}.{name}"), plane));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Data(format!("no PGM or PPM images in {}", dir.display())));
    }
    Ok(out)
}

/// A dataset stacked into `(N, 1, P, P)` tensors, with the blurred halftone
/// and the stage-1 target precomputed.
#[derive(Debug, Clone)]
pub struct TensorSet {
    pub original: Tensor4<f32>,
    pub halftone: Tensor4<f32>,
    pub laplacian: Tensor4<f32>,
    pub blurred: Tensor4<f32>,
    pub gcm_target: Tensor4<f32>,
}

impl TensorSet {
    pub fn new(samples: &[SampleTriplet], kernel: &Kernel) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("empty dataset".into()));
        }
        let blurred: Vec<GrayImage> = samples
            .iter()
            .map(|t| convolve_same(&t.halftone, kernel))
            .collect::<Result<_>>()?;
        let targets: Vec<GrayImage> = samples
            .iter()
            .map(|t| gcm_target(t, kernel))
            .collect::<Result<_>>()?;
        let stack = |f: &dyn Fn(&SampleTriplet) -> &GrayImage| {
            Tensor4::from_images(&samples.iter().map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            original: stack(&|t| &t.original)?,
            halftone: stack(&|t| &t.halftone)?,
            laplacian: stack(&|t| &t.laplacian)?,
            blurred: Tensor4::from_images(&blurred.iter().collect::<Vec<_>>())?,
            gcm_target: Tensor4::from_images(&targets.iter().collect::<Vec<_>>())?,
        })
    }

    pub fn len(&self) -> usize {
        self.original.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws mini-batch indices: a fresh shuffle of the whole set each pass, so
/// every sample is seen once per pass and passes repeat indefinitely.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub fn new(len: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: (0..len).collect(),
            cursor: len,
        }
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        use rand::seq::SliceRandom;
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            out.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::base_kernel;
    use crate::synth;

    #[test]
    fn triplets_are_aligned_and_deterministic() {
        let imgs = synth::corpus(2, 48, 1);
        let a = build_dataset(&imgs, 16, 3, 7).unwrap();
        assert_eq!(a, build_dataset(&imgs, 16, 3, 7).unwrap());
        assert_eq!(a.len(), 6);
        let full_ht = floyd_steinberg(&imgs[0]).unwrap().to_gray();
        let t = &a[0];
        // locate the crop in the original and check the halftone matches there
        let mut found = false;
        for y in 0..=32 {
            for x in 0..=32 {
                if imgs[0].crop(y, x, 16, 16).unwrap() == t.original {
                    found |= full_ht.crop(y, x, 16, 16).unwrap() == t.halftone;
                }
            }
        }
        assert!(found);
        assert!(t.halftone.data().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn small_images_are_rejected() {
        let imgs = vec![GrayImage::filled(8, 40, 0.5)];
        assert!(matches!(build_dataset(&imgs, 16, 1, 0), Err(Error::Data(_))));
    }

    #[test]
    fn tensor_set_targets() {
        let imgs = synth::corpus(1, 40, 2);
        let samples = build_dataset(&imgs, 16, 2, 3).unwrap();
        let k = base_kernel();
        let set = TensorSet::new(&samples, &k).unwrap();
        assert_eq!(set.gcm_target.dims(), (2, 1, 16, 16));
        let want = gcm_target(&samples[1], &k).unwrap();
        assert!(set.gcm_target.to_image(1, 0).max_abs_diff(&want).unwrap() < 1e-6);
    }

    #[test]
    fn dataset_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples = build_dataset(&synth::corpus(1, 40, 4), 16, 3, 0).unwrap();
        save_dataset_dir(dir.path(), &samples).unwrap();
        let back = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.halftone, b.halftone);
            assert!(a.original.max_abs_diff(&b.original).unwrap() <= 0.5 / 255.0 + 1e-12);
            let lap_err = a.laplacian.map(|v| v.clamp(-1.0, 1.0)).max_abs_diff(&b.laplacian).unwrap();
            assert!(lap_err <= 1.0 / 255.0 + 1e-12);
        }
        assert!(matches!(load_corpus_planes(dir.path().join("missing")), Err(Error::Io { .. })));
    }

    #[test]
    fn sampler_covers_each_pass() {
        let mut s = BatchSampler::new(5, 0);
        let mut seen = s.next_batch(5);
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert_eq!(s.next_batch(12).len(), 12);
    }
}
