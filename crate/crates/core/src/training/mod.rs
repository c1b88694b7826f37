//! Patch datasets, the staged training procedure, baselines and model
//! directories.

pub mod artifacts;
pub mod config;
pub mod dataset;
pub mod log;
pub mod trainer;

pub use artifacts::{load_model_dir, save_model_dir, EpochsDone};
pub use config::{lr_schedule, TrainConfig};
pub use dataset::{
    build_dataset, build_dataset_color, gcm_target, load_corpus_planes, load_dataset_dir, save_dataset_dir, BatchSampler,
    SampleTriplet, TensorSet,
};
pub use log::{LogRow, TrainLog};
pub use trainer::{
    base_layers, detail_targets, fingerprint, train_baseline, train_regression, train_stage1_gcm,
    train_stage2_irs, train_stage3_joint, JointInit, JointResult, RunOptions, StageResult,
};

use crate::error::Result;
use crate::networks::{BaselineKind, ModelBundle, Role};

/// Outcome of [`train_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub bundle: ModelBundle,
    pub epochs: EpochsDone,
    pub stage1: StageResult,
    pub stage2: StageResult,
    pub stage3: JointResult,
    pub baselines: Vec<(BaselineKind, StageResult)>,
    pub log: TrainLog,
}

/// Runs stages 1 to 3 in order, then trains the requested baselines on the
/// frozen GCM with the same configuration.
pub fn train_pipeline(
    set: &TensorSet,
    val: Option<&TensorSet>,
    cfg: &TrainConfig,
    baselines: &[BaselineKind],
    opts: &mut RunOptions<'_>,
) -> Result<PipelineResult> {
    let stage1 = train_stage1_gcm(set, val, cfg, None, opts)?;
    let stage2 = train_stage2_irs(set, val, cfg, None, opts)?;
    let init = JointInit {
        irs: stage2.stack.clone(),
        head: None,
        sards: None,
    };
    let stage3 = train_stage3_joint(set, val, cfg, &stage1.stack, init, opts)?;
    let mut bundle = ModelBundle::empty(cfg.arch(), cfg.seed);
    bundle.gcm = Some(stage1.stack.clone());
    bundle.irs = Some(stage3.irs.clone());
    bundle.ismp_head = Some(stage3.head.clone());
    bundle.sards = Some(stage3.sards.clone());
    let mut epochs = EpochsDone::from([
        (Role::Gcm, cfg.epochs),
        (Role::Irs, 2 * cfg.epochs),
        (Role::IsmpHead, cfg.epochs),
        (Role::Sards, cfg.epochs),
    ]);
    let mut log = TrainLog::default();
    log.extend(stage1.log.clone());
    log.extend(stage2.log.clone());
    log.extend(stage3.log.clone());
    let mut trained = Vec::new();
    for &kind in baselines {
        let r = train_baseline(kind, set, val, cfg, &stage1.stack, opts)?;
        *bundle.slot_mut(kind.role()) = Some(r.stack.clone());
        epochs.insert(kind.role(), cfg.epochs);
        log.extend(r.log.clone());
        trained.push((kind, r));
    }
    Ok(PipelineResult {
        bundle,
        epochs,
        stage1,
        stage2,
        stage3,
        baselines: trained,
        log,
    })
}
