//! The three training stages and the two baselines.
//!
//! Every stage is mini-batch SGD on the batch-mean l2 loss with the staircase
//! learning-rate schedule. A non-finite loss or gradient aborts the run with
//! [`Error::Numeric`]. When a validation set is given, the parameters with the
//! lowest validation loss are returned.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::networks::{
    build_baseline, build_subnet, derive_seed, joint_loss, joint_loss_and_grads, BaselineKind, JointBatch, Role,
};
use crate::nn::{concat_channels, mse_loss, ConvStack, Sgd, Tensor4};
use crate::training::config::{lr_schedule, TrainConfig};
use crate::training::dataset::{BatchSampler, TensorSet};
use crate::training::log::{LogRow, TrainLog};

/// Samples per forward pass when evaluating a whole set.
const EVAL_CHUNK: usize = 64;

/// Options that do not change the optimization itself.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Epoch to continue from when resuming a checkpoint.
    pub start_epoch: usize,
    /// Called after every epoch with its log row.
    pub on_epoch: Option<&'a mut dyn FnMut(&LogRow)>,
}

impl RunOptions<'_> {
    fn report(&mut self, row: &LogRow) {
        if let Some(f) = self.on_epoch.as_mut() {
            f(row);
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageResult {
    pub stack: ConvStack<f32>,
    pub log: TrainLog,
    pub val_log: TrainLog,
    /// Whole-training-set loss before the first step and after the last.
    pub initial_loss: f64,
    pub final_loss: f64,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct JointResult {
    pub irs: ConvStack<f32>,
    pub head: ConvStack<f32>,
    pub sards: ConvStack<f32>,
    pub log: TrainLog,
    pub val_log: TrainLog,
    /// `(total, detail, laplacian)` over the whole training set.
    pub initial_loss: (f64, f64, f64),
    pub final_loss: (f64, f64, f64),
    pub best_epoch: Option<usize>,
}

/// Order-sensitive hash of every parameter bit pattern.
pub fn fingerprint(stack: &ConvStack<f32>) -> u64 {
    let mut h = DefaultHasher::new();
    for layer in &stack.layers {
        h.write_usize(layer.out_channels);
        h.write_usize(layer.in_channels);
        layer.weights.iter().for_each(|w| h.write_u32(w.to_bits()));
        layer.bias.iter().for_each(|b| h.write_u32(b.to_bits()));
    }
    h.finish()
}

fn stage_seed(cfg: &TrainConfig, stage: &str, start_epoch: usize) -> u64 {
    let mut h = DefaultHasher::new();
    h.write_u64(cfg.seed);
    h.write(stage.as_bytes());
    h.write_usize(start_epoch);
    h.finish()
}

fn check_loss(loss: f64, stage: &str, epoch: usize, iter: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "stage {stage}: loss is {loss} at epoch {epoch}, iteration {iter}"
        )))
    }
}

fn chunks(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n).step_by(EVAL_CHUNK).map(move |s| (s..(s + EVAL_CHUNK).min(n)).collect())
}

/// Mean per-sample l2 loss of `stack` over a whole set.
pub fn set_loss(stack: &ConvStack<f32>, input: &Tensor4<f32>, target: &Tensor4<f32>) -> Result<f64> {
    let mut total = 0.0;
    for idx in chunks(input.n()) {
        let pred = stack.infer(&input.select(&idx))?;
        let (loss, _) = mse_loss(&pred, &target.select(&idx))?;
        total += loss * idx.len() as f64;
    }
    Ok(total / input.n() as f64)
}

/// Runs a stack over a whole set in chunks.
pub fn infer_set(stack: &ConvStack<f32>, input: &Tensor4<f32>) -> Result<Tensor4<f32>> {
    let (n, _, h, w) = input.dims();
    let mut out = Tensor4::zeros(n, stack.output_channels(), h, w);
    for idx in chunks(n) {
        let pred = stack.infer(&input.select(&idx))?;
        for (k, &i) in idx.iter().enumerate() {
            out.sample_mut(i).copy_from_slice(pred.sample(k));
        }
    }
    Ok(out)
}

/// Single-objective SGD: minimize `‖stack(input) − target‖²`.
#[allow(clippy::too_many_arguments)]
pub fn train_regression(
    mut stack: ConvStack<f32>,
    input: &Tensor4<f32>,
    target: &Tensor4<f32>,
    val: Option<(&Tensor4<f32>, &Tensor4<f32>)>,
    cfg: &TrainConfig,
    stage: &str,
    opts: &mut RunOptions<'_>,
) -> Result<StageResult> {
    cfg.validate()?;
    if (input.n(), input.h(), input.w()) != (target.n(), target.h(), target.w()) {
        return Err(Error::Shape(format!(
            "stage {stage}: input {:?} and target {:?} disagree",
            input.dims(),
            target.dims()
        )));
    }
    let started = Instant::now();
    let mut sampler = BatchSampler::new(input.n(), stage_seed(cfg, stage, opts.start_epoch));
    let mut opt = Sgd::new(cfg.momentum);
    let initial_loss = set_loss(&stack, input, target)?;
    let (mut log, mut val_log) = (TrainLog::default(), TrainLog::default());
    let mut best: Option<(f64, usize, ConvStack<f32>)> = None;

    for epoch in opts.start_epoch..cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        let mut sum = 0.0;
        for it in 0..cfg.iters_per_epoch {
            let idx = sampler.next_batch(cfg.batch_size);
            let (pred, cache) = stack.forward(&input.select(&idx))?;
            let (loss, grad) = mse_loss(&pred, &target.select(&idx))?;
            check_loss(loss, stage, epoch, it)?;
            let (_, grads) = stack.backward(&cache, &grad, false)?;
            opt.step(&mut stack, &grads, lr);
            sum += loss;
        }
        let mean = sum / cfg.iters_per_epoch as f64;
        let row = LogRow {
            epoch,
            iter: (epoch + 1) * cfg.iters_per_epoch,
            stage: stage.to_string(),
            loss_total: mean,
            loss_detail: mean,
            loss_laplacian: 0.0,
            lr,
            wallclock_ms: started.elapsed().as_millis(),
        };
        opts.report(&row);
        if let Some((vx, vy)) = val {
            let vl = set_loss(&stack, vx, vy)?;
            check_loss(vl, stage, epoch, cfg.iters_per_epoch)?;
            val_log.push(LogRow {
                loss_total: vl,
                loss_detail: vl,
                ..row.clone()
            });
            if best.as_ref().map_or(true, |(b, _, _)| vl < *b) {
                best = Some((vl, epoch, stack.clone()));
            }
        }
        log.push(row);
    }

    let best_epoch = best.as_ref().map(|(_, e, _)| *e);
    if let Some((_, _, s)) = best {
        stack = s;
    }
    let final_loss = set_loss(&stack, input, target)?;
    Ok(StageResult {
        stack,
        log,
        val_log,
        initial_loss,
        final_loss,
        best_epoch,
    })
}

fn fresh(role: Role, cfg: &TrainConfig) -> Result<ConvStack<f32>> {
    build_subnet(&role.spec(cfg.arch()), derive_seed(cfg.seed, role))
}

/// Stage 1: the GCM learns `(original − halftone) ⊗ k` from the blurred
/// halftone.
pub fn train_stage1_gcm(
    set: &TensorSet,
    val: Option<&TensorSet>,
    cfg: &TrainConfig,
    init: Option<ConvStack<f32>>,
    opts: &mut RunOptions<'_>,
) -> Result<StageResult> {
    let stack = match init {
        Some(s) => s,
        None => fresh(Role::Gcm, cfg)?,
    };
    let val = val.map(|v| (&v.blurred, &v.gcm_target));
    train_regression(stack, &set.blurred, &set.gcm_target, val, cfg, "1", opts)
}

/// Stage 2: the IRS learns the original from the halftone.
pub fn train_stage2_irs(
    set: &TensorSet,
    val: Option<&TensorSet>,
    cfg: &TrainConfig,
    init: Option<ConvStack<f32>>,
    opts: &mut RunOptions<'_>,
) -> Result<StageResult> {
    let stack = match init {
        Some(s) => s,
        None => fresh(Role::Irs, cfg)?,
    };
    let val = val.map(|v| (&v.halftone, &v.original));
    train_regression(stack, &set.halftone, &set.original, val, cfg, "2", opts)
}

/// Base layers `blur + gcm(blur)` for a whole set.
pub fn base_layers(set: &TensorSet, gcm: &ConvStack<f32>) -> Result<Tensor4<f32>> {
    infer_set(gcm, &set.blurred)?.add(&set.blurred)
}

/// Detail targets `original − base`, checked to recompose the original up to
/// one rounding of the subtraction.
pub fn detail_targets(original: &Tensor4<f32>, base: &Tensor4<f32>) -> Result<Tensor4<f32>> {
    let detail = original.sub(base)?;
    for ((&o, &b), &d) in original.data().iter().zip(base.data()).zip(detail.data()) {
        let tol = 2.0 * f32::EPSILON * o.abs().max(b.abs()).max(1.0);
        if ((d + b) - o).abs() > tol {
            return Err(Error::Numeric(format!(
                "detail target does not recompose: {d} + {b} vs {o}"
            )));
        }
    }
    Ok(detail)
}

/// Assembles a stage-3 batch, recomputing base layers with the frozen GCM.
fn joint_batch(set: &TensorSet, gcm: &ConvStack<f32>, idx: &[usize]) -> Result<JointBatch<f32>> {
    let blurred = set.blurred.select(idx);
    let base = gcm.infer(&blurred)?.add(&blurred)?;
    let detail_target = detail_targets(&set.original.select(idx), &base)?;
    Ok(JointBatch {
        base,
        halftone: set.halftone.select(idx),
        detail_target,
        laplacian_target: set.laplacian.select(idx),
    })
}

fn joint_set_loss(
    irs: &ConvStack<f32>,
    head: &ConvStack<f32>,
    sards: &ConvStack<f32>,
    gcm: &ConvStack<f32>,
    set: &TensorSet,
    cfg: &TrainConfig,
) -> Result<(f64, f64, f64)> {
    let mut acc = (0.0, 0.0, 0.0);
    for idx in chunks(set.len()) {
        let k = idx.len() as f64;
        let (t, d, l) = joint_loss(irs, head, sards, &joint_batch(set, gcm, &idx)?, cfg.loss_weights())?;
        acc = (acc.0 + t * k, acc.1 + d * k, acc.2 + l * k);
    }
    let n = set.len() as f64;
    Ok((acc.0 / n, acc.1 / n, acc.2 / n))
}

/// Initial subnets for stage 3. Missing head or SARDS are freshly built.
#[derive(Debug, Clone)]
pub struct JointInit {
    pub irs: ConvStack<f32>,
    pub head: Option<ConvStack<f32>>,
    pub sards: Option<ConvStack<f32>>,
}

/// Stage 3: IRS, ISMP head and SARDS trained jointly on
/// `ω₁‖detail − target‖² + ω₂‖laplacian − target‖²` with the GCM frozen.
pub fn train_stage3_joint(
    set: &TensorSet,
    val: Option<&TensorSet>,
    cfg: &TrainConfig,
    gcm: &ConvStack<f32>,
    init: JointInit,
    opts: &mut RunOptions<'_>,
) -> Result<JointResult> {
    cfg.validate()?;
    let frozen = fingerprint(gcm);
    let started = Instant::now();
    let weights = cfg.loss_weights();
    let mut irs = init.irs;
    let mut head = match init.head {
        Some(h) => h,
        None => fresh(Role::IsmpHead, cfg)?,
    };
    let mut sards = match init.sards {
        Some(s) => s,
        None => fresh(Role::Sards, cfg)?,
    };

    let mut sampler = BatchSampler::new(set.len(), stage_seed(cfg, "3", opts.start_epoch));
    let (mut o_irs, mut o_head, mut o_sards) = (
        Sgd::new(cfg.momentum),
        Sgd::new(cfg.momentum),
        Sgd::new(cfg.momentum),
    );
    let initial_loss = joint_set_loss(&irs, &head, &sards, gcm, set, cfg)?;
    let (mut log, mut val_log) = (TrainLog::default(), TrainLog::default());
    type Snapshot = (f64, usize, ConvStack<f32>, ConvStack<f32>, ConvStack<f32>);
    let mut best: Option<Snapshot> = None;

    for epoch in opts.start_epoch..cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        let (mut st, mut sd, mut sl) = (0.0, 0.0, 0.0);
        for it in 0..cfg.iters_per_epoch {
            let idx = sampler.next_batch(cfg.batch_size);
            let batch = joint_batch(set, gcm, &idx)?;
            let g = joint_loss_and_grads(&irs, &head, &sards, &batch, weights)?;
            check_loss(g.loss_total, "3", epoch, it)?;
            o_irs.step(&mut irs, &g.irs, lr);
            o_head.step(&mut head, &g.head, lr);
            o_sards.step(&mut sards, &g.sards, lr);
            st += g.loss_total;
            sd += g.loss_detail;
            sl += g.loss_laplacian;
        }
        let k = cfg.iters_per_epoch as f64;
        let row = LogRow {
            epoch,
            iter: (epoch + 1) * cfg.iters_per_epoch,
            stage: "3".into(),
            loss_total: st / k,
            loss_detail: sd / k,
            loss_laplacian: sl / k,
            lr,
            wallclock_ms: started.elapsed().as_millis(),
        };
        opts.report(&row);
        if fingerprint(gcm) != frozen {
            return Err(Error::Numeric(format!("GCM parameters changed during stage 3, epoch {epoch}")));
        }
        if let Some(v) = val {
            let (t, d, l) = joint_set_loss(&irs, &head, &sards, gcm, v, cfg)?;
            check_loss(t, "3", epoch, cfg.iters_per_epoch)?;
            val_log.push(LogRow {
                loss_total: t,
                loss_detail: d,
                loss_laplacian: l,
                ..row.clone()
            });
            if best.as_ref().map_or(true, |b| t < b.0) {
                best = Some((t, epoch, irs.clone(), head.clone(), sards.clone()));
            }
        }
        log.push(row);
    }

    let best_epoch = best.as_ref().map(|b| b.1);
    if let Some((_, _, i, h, s)) = best {
        (irs, head, sards) = (i, h, s);
    }
    let final_loss = joint_set_loss(&irs, &head, &sards, gcm, set, cfg)?;
    Ok(JointResult {
        irs,
        head,
        sards,
        log,
        val_log,
        initial_loss,
        final_loss,
        best_epoch,
    })
}

/// Input `(base, halftone)` and target for a baseline.
pub fn baseline_problem(
    kind: BaselineKind,
    set: &TensorSet,
    gcm: &ConvStack<f32>,
) -> Result<(Tensor4<f32>, Tensor4<f32>)> {
    let base = base_layers(set, gcm)?;
    let input = concat_channels(&[&base, &set.halftone])?;
    let target = match kind {
        BaselineKind::Prl => detail_targets(&set.original, &base)?,
        BaselineKind::Ddn => set.original.clone(),
    };
    Ok((input, target))
}

/// Trains PRL (residual over the base layer) or DDN (direct output) with the
/// same data, budget and schedule as the main model.
pub fn train_baseline(
    kind: BaselineKind,
    set: &TensorSet,
    val: Option<&TensorSet>,
    cfg: &TrainConfig,
    gcm: &ConvStack<f32>,
    opts: &mut RunOptions<'_>,
) -> Result<StageResult> {
    let stack = build_baseline(kind, cfg.arch(), cfg.seed)?;
    let (input, target) = baseline_problem(kind, set, gcm)?;
    let val = match val {
        Some(v) => Some(baseline_problem(kind, v, gcm)?),
        None => None,
    };
    let label = kind.role().name();
    train_regression(
        stack,
        &input,
        &target,
        val.as_ref().map(|(a, b)| (a, b)),
        cfg,
        label,
        opts,
    )
}
