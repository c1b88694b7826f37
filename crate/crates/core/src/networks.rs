//! Subnetwork architectures and the layer-decomposition inference pipeline.
//!
//! The pipeline turns a halftone into a continuous-tone image in three steps:
//!
//! 1. **Base layer.** The halftone is blurred with the frozen Gaussian `k^g`;
//!    the GCM subnet predicts the residual between that blur and the blurred
//!    original, and the two are summed.
//! 2. **Structure map.** The IRS turns the halftone into an initial
//!    reconstruction, and the ISMP head maps it to a Laplacian map.
//! 3. **Detail layer.** SARDS reads `(base, laplacian, halftone)` stacked in
//!    that channel order and predicts the signed detail layer.
//!
//! The output is `clamp01(base + detail)`. The base layer itself is never
//! clamped.
//!
//! Two baselines share the frozen base layer: PRL predicts the detail layer
//! from `(base, halftone)`, DDN predicts the full image from the same pair.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{convolve_same, gaussian_kernel, Kernel};
use crate::image::GrayImage;
use crate::nn::gradcheck::Differentiable;
use crate::nn::{concat_channels, mse_loss, split_channels, ConvParams, ConvStack, GradBundle, Scalar, Tensor4};

pub const GAUSSIAN_SIGMA: f64 = 1.0;
pub const GAUSSIAN_SIDE: usize = 5;

/// The frozen base-layer blur.
pub fn base_kernel() -> Kernel {
    gaussian_kernel(GAUSSIAN_SIGMA, GAUSSIAN_SIDE).expect("valid constants")
}

/// Depth and width of the subnets in a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchScale {
    /// Convolution layers in the GCM subnet, IRS, SARDS and baselines.
    pub blocks: usize,
    /// Convolution layers in the ISMP head that follows the IRS.
    pub head_blocks: usize,
    pub channels: usize,
}

impl ArchScale {
    /// 16/6 blocks of 64 filters.
    pub const PAPER: ArchScale = ArchScale {
        blocks: 16,
        head_blocks: 6,
        channels: 64,
    };

    /// Small nets that train in minutes on a CPU.
    pub const DESK: ArchScale = ArchScale {
        blocks: 3,
        head_blocks: 3,
        channels: 16,
    };
}

impl Default for ArchScale {
    fn default() -> Self {
        Self::DESK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Gcm,
    Irs,
    IsmpHead,
    Sards,
    Prl,
    Ddn,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Gcm,
        Role::Irs,
        Role::IsmpHead,
        Role::Sards,
        Role::Prl,
        Role::Ddn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Gcm => "gcm",
            Role::Irs => "irs",
            Role::IsmpHead => "ismp_head",
            Role::Sards => "sards",
            Role::Prl => "prl",
            Role::Ddn => "ddn",
        }
    }

    pub fn from_name(name: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Salt mixed into the bundle seed so each subnet draws its own weights.
    fn seed_salt(self) -> u64 {
        match self {
            Role::Gcm => 1,
            Role::Irs => 2,
            Role::IsmpHead => 3,
            Role::Sards => 4,
            Role::Prl => 5,
            Role::Ddn => 6,
        }
    }

    pub fn spec(self, arch: ArchScale) -> SubnetSpec {
        let (blocks, input_channels) = match self {
            Role::Gcm | Role::Irs => (arch.blocks, 1),
            Role::IsmpHead => (arch.head_blocks, 1),
            Role::Sards => (arch.blocks, 3),
            Role::Prl | Role::Ddn => (arch.blocks, 2),
        };
        SubnetSpec {
            name: self.name().to_string(),
            block_count: blocks,
            input_channels,
            hidden_channels: arch.channels,
            output_channels: 1,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which baseline variant to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Direct deblurring: `(base, halftone)` to the full image.
    Ddn,
    /// Progressive residual: `(base, halftone)` to the detail layer.
    Prl,
}

impl BaselineKind {
    pub fn role(self) -> Role {
        match self {
            BaselineKind::Ddn => Role::Ddn,
            BaselineKind::Prl => Role::Prl,
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ddn" => Ok(BaselineKind::Ddn),
            "prl" => Ok(BaselineKind::Prl),
            other => Err(Error::Spec(format!("unknown baseline kind {other:?}"))),
        }
    }
}

/// Architecture of one subnet: `block_count` convolutions, the first taking
/// `input_channels`, the last emitting `output_channels` without a ReLU, and
/// every other one `hidden_channels` wide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubnetSpec {
    pub name: String,
    pub block_count: usize,
    pub input_channels: usize,
    pub hidden_channels: usize,
    pub output_channels: usize,
}

impl SubnetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.block_count == 0
            || self.input_channels == 0
            || self.hidden_channels == 0
            || self.output_channels == 0
        {
            return Err(Error::Spec(format!("{}: counts must be positive: {self:?}", self.name)));
        }
        Ok(())
    }

    /// `(m, c)` per convolution layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let n = self.block_count;
        (0..n)
            .map(|i| {
                let c = if i == 0 { self.input_channels } else { self.hidden_channels };
                let m = if i + 1 == n { self.output_channels } else { self.hidden_channels };
                (m, c)
            })
            .collect()
    }

    /// True when `stack` has exactly this architecture.
    pub fn matches(&self, stack: &ConvStack<impl Scalar>) -> bool {
        let shapes: Vec<_> = stack.layers.iter().map(|l| (l.out_channels, l.in_channels)).collect();
        shapes == self.layer_shapes()
    }
}

/// Derives a per-subnet seed from a bundle seed.
pub fn derive_seed(seed: u64, role: Role) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ role.seed_salt().wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Glorot-initialized stack with the shapes of `spec`.
pub fn build_subnet<T: Scalar>(spec: &SubnetSpec, seed: u64) -> Result<ConvStack<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = spec
        .layer_shapes()
        .into_iter()
        .map(|(m, c)| ConvParams::<f64>::glorot_uniform(m, c, &mut rng).cast())
        .collect();
    ConvStack::new(spec.name.clone(), layers)
}

pub fn build_baseline<T: Scalar>(kind: BaselineKind, arch: ArchScale, seed: u64) -> Result<ConvStack<T>> {
    let role = kind.role();
    build_subnet(&role.spec(arch), derive_seed(seed, role))
}

/// Trained parameters of every subnet plus the frozen Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub arch: ArchScale,
    pub seed: u64,
    pub kernel: Kernel,
    pub gcm: Option<ConvStack<f32>>,
    pub irs: Option<ConvStack<f32>>,
    pub ismp_head: Option<ConvStack<f32>>,
    pub sards: Option<ConvStack<f32>>,
    pub prl: Option<ConvStack<f32>>,
    pub ddn: Option<ConvStack<f32>>,
}

impl ModelBundle {
    /// A bundle with no trained subnets.
    pub fn empty(arch: ArchScale, seed: u64) -> Self {
        Self {
            arch,
            seed,
            kernel: base_kernel(),
            gcm: None,
            irs: None,
            ismp_head: None,
            sards: None,
            prl: None,
            ddn: None,
        }
    }

    /// Every subnet freshly initialized from `seed`.
    pub fn initialized(arch: ArchScale, seed: u64) -> Result<Self> {
        let mut b = Self::empty(arch, seed);
        for role in Role::ALL {
            *b.slot_mut(role) = Some(build_subnet(&role.spec(arch), derive_seed(seed, role))?);
        }
        Ok(b)
    }

    /// Every subnet present with all weights and biases zero.
    pub fn zeros(arch: ArchScale) -> Result<Self> {
        let mut b = Self::initialized(arch, 0)?;
        for role in Role::ALL {
            let s = b.slot_mut(role);
            *s = s.as_ref().map(ConvStack::zeroed);
        }
        Ok(b)
    }

    pub fn slot(&self, role: Role) -> &Option<ConvStack<f32>> {
        match role {
            Role::Gcm => &self.gcm,
            Role::Irs => &self.irs,
            Role::IsmpHead => &self.ismp_head,
            Role::Sards => &self.sards,
            Role::Prl => &self.prl,
            Role::Ddn => &self.ddn,
        }
    }

    pub fn slot_mut(&mut self, role: Role) -> &mut Option<ConvStack<f32>> {
        match role {
            Role::Gcm => &mut self.gcm,
            Role::Irs => &mut self.irs,
            Role::IsmpHead => &mut self.ismp_head,
            Role::Sards => &mut self.sards,
            Role::Prl => &mut self.prl,
            Role::Ddn => &mut self.ddn,
        }
    }

    pub fn subnet(&self, role: Role) -> Result<&ConvStack<f32>> {
        self.slot(role)
            .as_ref()
            .ok_or_else(|| Error::Untrained(role.name().to_string()))
    }

    /// Checks every present subnet against the architecture table.
    pub fn check_architecture(&self) -> Result<()> {
        for role in Role::ALL {
            if let Some(s) = self.slot(role) {
                if !role.spec(self.arch).matches(s) {
                    return Err(Error::Spec(format!(
                        "{role} does not match the {:?} architecture",
                        self.arch
                    )));
                }
            }
        }
        Ok(())
    }
}

fn run(stack: &ConvStack<f32>, inputs: &[&GrayImage]) -> Result<GrayImage> {
    let first = inputs[0];
    for img in &inputs[1..] {
        first.check_same_dims(img)?;
    }
    let tensors: Vec<Tensor4<f32>> = inputs.iter().map(|i| Tensor4::from_image(i)).collect();
    let refs: Vec<&Tensor4<f32>> = tensors.iter().collect();
    let x = concat_channels(&refs)?;
    Ok(stack.infer(&x)?.to_image(0, 0))
}

/// `(blurred, residual, base)` for a halftone.
fn base_parts(halftone: &GrayImage, bundle: &ModelBundle) -> Result<(GrayImage, GrayImage, GrayImage)> {
    let gcm = bundle.subnet(Role::Gcm)?;
    let blurred = convolve_same(halftone, &bundle.kernel)?;
    let residual = run(gcm, &[&blurred])?;
    let base = residual.add(&blurred)?;
    Ok((blurred, residual, base))
}

/// `(base, residual)` for a halftone.
pub fn predict_base(halftone: &GrayImage, bundle: &ModelBundle) -> Result<(GrayImage, GrayImage)> {
    let (_, residual, base) = base_parts(halftone, bundle)?;
    Ok((base, residual))
}

/// `(laplacian, initial_reconstruction)` for a halftone.
pub fn predict_structure_map(halftone: &GrayImage, bundle: &ModelBundle) -> Result<(GrayImage, GrayImage)> {
    let irs = bundle.subnet(Role::Irs)?;
    let head = bundle.subnet(Role::IsmpHead)?;
    let initial = run(irs, &[halftone])?;
    let laplacian = run(head, &[&initial])?;
    Ok((laplacian, initial))
}

/// Signed detail layer from `(base, laplacian, halftone)`.
pub fn predict_detail(
    base: &GrayImage,
    laplacian: &GrayImage,
    halftone: &GrayImage,
    bundle: &ModelBundle,
) -> Result<GrayImage> {
    run(bundle.subnet(Role::Sards)?, &[base, laplacian, halftone])
}

/// Every intermediate layer of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Layers {
    pub blurred: GrayImage,
    pub residual: GrayImage,
    pub base: GrayImage,
    pub initial: GrayImage,
    pub laplacian: GrayImage,
    pub detail: GrayImage,
    pub output: GrayImage,
}

pub fn reconstruct_layers(halftone: &GrayImage, bundle: &ModelBundle) -> Result<Layers> {
    let (blurred, residual, base) = base_parts(halftone, bundle)?;
    let (laplacian, initial) = predict_structure_map(halftone, bundle)?;
    let detail = predict_detail(&base, &laplacian, halftone, bundle)?;
    let output = base.add(&detail)?.clamp01();
    Ok(Layers {
        blurred,
        residual,
        base,
        initial,
        laplacian,
        detail,
        output,
    })
}

/// Continuous-tone reconstruction `clamp01(base + detail)`.
pub fn reconstruct(halftone: &GrayImage, bundle: &ModelBundle) -> Result<GrayImage> {
    let (base, _) = predict_base(halftone, bundle)?;
    let (laplacian, _) = predict_structure_map(halftone, bundle)?;
    let detail = predict_detail(&base, &laplacian, halftone, bundle)?;
    Ok(base.add(&detail)?.clamp01())
}

/// Baseline reconstruction over the same GCM base layer.
pub fn reconstruct_baseline(halftone: &GrayImage, bundle: &ModelBundle, kind: BaselineKind) -> Result<GrayImage> {
    let (base, _) = predict_base(halftone, bundle)?;
    let net = bundle.subnet(kind.role())?;
    let out = run(net, &[&base, halftone])?;
    Ok(match kind {
        BaselineKind::Prl => base.add(&out)?.clamp01(),
        BaselineKind::Ddn => out.clamp01(),
    })
}

/// One stage-3 mini-batch: frozen base layers, halftones and both targets.
#[derive(Debug, Clone)]
pub struct JointBatch<T> {
    pub base: Tensor4<T>,
    pub halftone: Tensor4<T>,
    pub detail_target: Tensor4<T>,
    pub laplacian_target: Tensor4<T>,
}

/// Loss terms and per-subnet gradients of one joint step.
#[derive(Debug, Clone)]
pub struct JointGrads<T> {
    pub loss_total: f64,
    pub loss_detail: f64,
    pub loss_laplacian: f64,
    pub irs: Vec<GradBundle<T>>,
    pub head: Vec<GradBundle<T>>,
    pub sards: Vec<GradBundle<T>>,
}

/// Loss weights `(ω₁ detail, ω₂ laplacian)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub detail: f64,
    pub laplacian: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            detail: 1.0,
            laplacian: 1.0,
        }
    }
}

/// Weighted detail + Laplacian loss and its gradients with respect to the
/// IRS, ISMP head and SARDS. The detail gradient reaches the ISMP through
/// the Laplacian channel of the SARDS input.
pub fn joint_loss_and_grads<T: Scalar>(
    irs: &ConvStack<T>,
    head: &ConvStack<T>,
    sards: &ConvStack<T>,
    batch: &JointBatch<T>,
    weights: LossWeights,
) -> Result<JointGrads<T>> {
    let (initial, irs_cache) = irs.forward(&batch.halftone)?;
    let (laplacian, head_cache) = head.forward(&initial)?;
    let sards_in = concat_channels(&[&batch.base, &laplacian, &batch.halftone])?;
    let (detail, sards_cache) = sards.forward(&sards_in)?;

    let (loss_detail, grad_detail) = mse_loss(&detail, &batch.detail_target)?;
    let (loss_laplacian, grad_lap) = mse_loss(&laplacian, &batch.laplacian_target)?;
    let w1 = T::from_f64(weights.detail);
    let w2 = T::from_f64(weights.laplacian);

    let (grad_in, sards_grads) = sards.backward(&sards_cache, &grad_detail.map(|g| w1 * g), true)?;
    let parts = split_channels(&grad_in.expect("requested"), &[1, 1, 1])?;
    let grad_laplacian = parts[1].zip_map(&grad_lap, |a, b| a + w2 * b)?;
    let (grad_initial, head_grads) = head.backward(&head_cache, &grad_laplacian, true)?;
    let (_, irs_grads) = irs.backward(&irs_cache, &grad_initial.expect("requested"), false)?;

    Ok(JointGrads {
        loss_total: weights.detail * loss_detail + weights.laplacian * loss_laplacian,
        loss_detail,
        loss_laplacian,
        irs: irs_grads,
        head: head_grads,
        sards: sards_grads,
    })
}

/// Joint-loss evaluation without gradients.
pub fn joint_loss<T: Scalar>(
    irs: &ConvStack<T>,
    head: &ConvStack<T>,
    sards: &ConvStack<T>,
    batch: &JointBatch<T>,
    weights: LossWeights,
) -> Result<(f64, f64, f64)> {
    let initial = irs.infer(&batch.halftone)?;
    let laplacian = head.infer(&initial)?;
    let detail = sards.infer(&concat_channels(&[&batch.base, &laplacian, &batch.halftone])?)?;
    let (ld, _) = mse_loss(&detail, &batch.detail_target)?;
    let (ll, _) = mse_loss(&laplacian, &batch.laplacian_target)?;
    Ok((weights.detail * ld + weights.laplacian * ll, ld, ll))
}

/// The joint objective as a flat-parameter problem for gradient checking.
/// Parameters are ordered IRS, head, SARDS.
#[derive(Debug, Clone)]
pub struct JointProblem {
    pub irs: ConvStack<f64>,
    pub head: ConvStack<f64>,
    pub sards: ConvStack<f64>,
    pub batch: JointBatch<f64>,
    pub weights: LossWeights,
}

impl JointProblem {
    fn locate(&self, index: usize) -> (usize, usize) {
        let a = self.irs.param_count();
        let b = a + self.head.param_count();
        if index < a {
            (0, index)
        } else if index < b {
            (1, index - a)
        } else {
            (2, index - b)
        }
    }

    fn stack(&self, which: usize) -> &ConvStack<f64> {
        [&self.irs, &self.head, &self.sards][which]
    }
}

impl Differentiable for JointProblem {
    fn param_count(&self) -> usize {
        self.irs.param_count() + self.head.param_count() + self.sards.param_count()
    }

    fn param(&self, index: usize) -> f64 {
        let (which, local) = self.locate(index);
        self.stack(which).param(local)
    }

    fn set_param(&mut self, index: usize, value: f64) {
        let (which, local) = self.locate(index);
        let s = match which {
            0 => &mut self.irs,
            1 => &mut self.head,
            _ => &mut self.sards,
        };
        *s.param_mut(local) = value;
    }

    fn loss(&self) -> Result<f64> {
        Ok(joint_loss(&self.irs, &self.head, &self.sards, &self.batch, self.weights)?.0)
    }

    fn loss_and_grad(&self) -> Result<(f64, Vec<f64>)> {
        let g = joint_loss_and_grads(&self.irs, &self.head, &self.sards, &self.batch, self.weights)?;
        let flat = g
            .irs
            .iter()
            .chain(&g.head)
            .chain(&g.sards)
            .flat_map(|b| b.weights.iter().chain(&b.bias).copied())
            .collect();
        Ok((g.loss_total, flat))
    }

    fn activation_pattern(&self) -> Result<Vec<bool>> {
        let (initial, c1) = self.irs.forward(&self.batch.halftone)?;
        let (laplacian, c2) = self.head.forward(&initial)?;
        let (_, c3) = self
            .sards
            .forward(&concat_channels(&[&self.batch.base, &laplacian, &self.batch.halftone])?)?;
        let mut p = c1.activation_pattern();
        p.extend(c2.activation_pattern());
        p.extend(c3.activation_pattern());
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_shapes() {
        let gcm = Role::Gcm.spec(ArchScale::PAPER);
        let shapes = gcm.layer_shapes();
        assert_eq!(shapes.len(), 16);
        assert_eq!(shapes[0], (64, 1));
        assert!(shapes[1..15].iter().all(|&s| s == (64, 64)));
        assert_eq!(shapes[15], (1, 64));

        let sards = Role::Sards.spec(ArchScale::PAPER).layer_shapes();
        assert_eq!(sards[0], (64, 3));
        assert_eq!(sards.len(), 16);

        let head = Role::IsmpHead.spec(ArchScale::PAPER).layer_shapes();
        assert_eq!(head.len(), 6);
        assert_eq!(head[0], (64, 1));
        assert_eq!(head[5], (1, 64));

        assert_eq!(Role::Irs.spec(ArchScale::PAPER).layer_shapes().len(), 16);
        assert_eq!(Role::Prl.spec(ArchScale::PAPER).layer_shapes()[0], (64, 2));
    }

    #[test]
    fn build_is_deterministic() {
        let spec = Role::Gcm.spec(ArchScale::DESK);
        let a: ConvStack<f32> = build_subnet(&spec, 42).unwrap();
        let b: ConvStack<f32> = build_subnet(&spec, 42).unwrap();
        let c: ConvStack<f32> = build_subnet(&spec, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(spec.matches(&a));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn invalid_spec() {
        let mut spec = Role::Gcm.spec(ArchScale::DESK);
        spec.block_count = 0;
        assert!(matches!(build_subnet::<f32>(&spec, 0), Err(Error::Spec(_))));
        assert!("unet".parse::<BaselineKind>().is_err());
        assert_eq!("PRL".parse::<BaselineKind>().unwrap(), BaselineKind::Prl);
    }

    #[test]
    fn untrained_subnet_reported() {
        let bundle = ModelBundle::empty(ArchScale::DESK, 0);
        let img = GrayImage::filled(8, 8, 1.0);
        assert!(matches!(predict_base(&img, &bundle), Err(Error::Untrained(name)) if name == "gcm"));
    }

    #[test]
    fn zero_network_skeleton() {
        let bundle = ModelBundle::zeros(ArchScale::DESK).unwrap();
        let half = GrayImage::from_fn(12, 10, |y, x| ((y * 7 + x * 3) % 2) as f64);
        let blurred = convolve_same(&half, &bundle.kernel).unwrap();
        let (base, residual) = predict_base(&half, &bundle).unwrap();
        assert!(residual.data().iter().all(|&v| v == 0.0));
        assert_eq!(base, blurred);
        let (lap, _) = predict_structure_map(&half, &bundle).unwrap();
        assert!(lap.data().iter().all(|&v| v == 0.0));
        let detail = predict_detail(&base, &lap, &half, &bundle).unwrap();
        assert!(detail.data().iter().all(|&v| v == 0.0));
        assert_eq!(reconstruct(&half, &bundle).unwrap(), base.clamp01());
        assert_eq!(reconstruct_baseline(&half, &bundle, BaselineKind::Prl).unwrap(), base.clamp01());
        let ddn = reconstruct_baseline(&half, &bundle, BaselineKind::Ddn).unwrap();
        assert!(ddn.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ddn_bias_only_output() {
        let mut bundle = ModelBundle::zeros(ArchScale::DESK).unwrap();
        bundle.ddn.as_mut().unwrap().layers.last_mut().unwrap().bias[0] = 0.375;
        let half = GrayImage::filled(8, 8, 1.0);
        let out = reconstruct_baseline(&half, &bundle, BaselineKind::Ddn).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.375));
    }

    #[test]
    fn detail_size_mismatch() {
        let bundle = ModelBundle::zeros(ArchScale::DESK).unwrap();
        let a = GrayImage::zeros(8, 8);
        let b = GrayImage::zeros(8, 9);
        assert!(matches!(predict_detail(&a, &b, &a, &bundle), Err(Error::Dimension(_))));
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = Role::ALL.iter().map(|&r| derive_seed(7, r)).collect();
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }
}
