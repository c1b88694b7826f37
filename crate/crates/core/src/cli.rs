//! The `saldl` command surface.
//!
//! Each subcommand has a `cmd_*` function usable from library code; [`run`]
//! parses arguments, dispatches and maps errors to exit codes:
//! 0 success, 1 usage, 2 data error, 3 numeric failure, 4 property failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::halftone::floyd_steinberg;
use crate::image::{merge_planes, GrayImage};
use crate::metrics::{psnr, psnr_color, psnr_color_per_plane, ssim, ssim_color, ColorSsim};
use crate::networks::{base_kernel, reconstruct_baseline, reconstruct_layers, BaselineKind, ModelBundle, Role};
use crate::pnm::{load_pnm, save_pgm, save_pnm, Pnm};
use crate::synth;
use crate::training::artifacts::{checkpoint_path, load_model_dir, save_model_dir, EpochsDone, MANIFEST};
use crate::training::dataset::{build_dataset, load_corpus_planes, load_dataset_dir, save_dataset_dir, DATASET_MANIFEST};
use crate::training::{
    train_baseline, train_stage1_gcm, train_stage2_irs, train_stage3_joint, JointInit, LogRow, RunOptions,
    SampleTriplet, TensorSet, TrainConfig, TrainLog,
};
use crate::verify::{gcm_identity, gradcheck_suite, narrowing, PropertyResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

pub const TRAIN_LOG: &str = "train_log.csv";
pub const VALIDATION_LOG: &str = "validation_log.csv";
pub const RESOLVED_CONFIG: &str = "config.txt";

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Numeric(_) => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "saldl", version, about = "Inverse halftoning by structure-aware layer decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Floyd–Steinberg halftone of a grayscale PGM.
    Halftone(HalftoneArgs),
    /// Cut aligned (original, halftone, Laplacian) patch triplets from a corpus.
    Dataset(DatasetArgs),
    /// Train one stage, or a baseline, into a model directory.
    Train(TrainArgs),
    /// Reconstruct a continuous-tone image from a halftone.
    Infer(InferArgs),
    /// PSNR/SSIM for the reference/candidate pairs in a manifest.
    Eval(EvalArgs),
    /// Run the property suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct HalftoneArgs {
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Directory of PGM/PPM images; color images contribute three planes.
    pub corpus_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Number of triplets to produce.
    #[arg(long, default_value_t = 256)]
    pub patches: usize,
    #[arg(long, default_value_t = 32)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Prl,
    Ddn,
}

impl From<BaselineArg> for BaselineKind {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Prl => BaselineKind::Prl,
            BaselineArg::Ddn => BaselineKind::Ddn,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Training stage: 1 GCM, 2 IRS, 3 joint IRS + ISMP head + SARDS.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), required_unless_present = "baseline", conflicts_with = "baseline")]
    pub stage: Option<u8>,
    /// Train a baseline over the stage-1 GCM instead of a stage.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    /// `key = value` config file; desk-scale defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory (with manifest.csv) or a corpus of PGM/PPM images.
    #[arg(long)]
    pub data: PathBuf,
    /// Optional validation data, same forms as --data.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Output model directory; earlier stages are read from here.
    #[arg(long)]
    pub model_dir: PathBuf,
    /// Continue the stage's subnet from this model directory, keeping its
    /// epoch count.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print one line per epoch.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    pub model_dir: PathBuf,
    /// Halftone PGM, or PPM whose planes are reconstructed independently.
    pub input: PathBuf,
    pub output: PathBuf,
    /// Also write base, detail and Laplacian layers next to the output.
    #[arg(long)]
    pub emit_layers: bool,
    /// Reconstruct with a trained baseline instead.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColorPsnrArg {
    Merged,
    PerPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColorSsimArg {
    Luma,
    PerPlane,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// CSV of `reference,candidate` paths, relative to the manifest.
    pub manifest: PathBuf,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ColorPsnrArg::Merged)]
    pub color_psnr: ColorPsnrArg,
    #[arg(long, value_enum, default_value_t = ColorSsimArg::Luma)]
    pub color_ssim: ColorSsimArg,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub gradcheck: bool,
    #[arg(long)]
    pub gcm_identity: bool,
    /// Narrowing check on the images in this directory.
    #[arg(long, value_name = "IMAGES_DIR")]
    pub narrowing: Option<PathBuf>,
    /// Narrowing check on the built-in synthetic test set.
    #[arg(long)]
    pub narrowing_builtin: bool,
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn cmd_halftone(args: &HalftoneArgs) -> Result<()> {
    let img = match load_pnm(&args.input)? {
        Pnm::Gray(g) => g,
        Pnm::Color(_) => {
            return Err(Error::Data(format!(
                "{}: expected a grayscale PGM",
                args.input.display()
            )))
        }
    };
    save_pgm(&floyd_steinberg(&img)?.to_gray(), &args.output)
}

/// Writes exactly `args.patches` triplets and returns them.
pub fn cmd_dataset(args: &DatasetArgs) -> Result<Vec<SampleTriplet>> {
    let planes: Vec<GrayImage> = load_corpus_planes(&args.corpus_dir)?
        .into_iter()
        .map(|(_, g)| g)
        .collect();
    if args.patches == 0 {
        return Err(Error::Data("--patches must be positive".into()));
    }
    let per_image = args.patches.div_ceil(planes.len());
    let mut samples = build_dataset(&planes, args.patch_size, per_image, args.seed)?;
    if samples.len() < args.patches {
        return Err(Error::Data(format!(
            "requested {} triplets, produced only {}",
            args.patches,
            samples.len()
        )));
    }
    samples.truncate(args.patches);
    save_dataset_dir(&args.out_dir, &samples)?;
    Ok(samples)
}

/// Triplets from a dataset directory, or cut from a corpus with the config's
/// patch settings.
pub fn load_training_data(path: &Path, cfg: &TrainConfig) -> Result<Vec<SampleTriplet>> {
    if path.join(DATASET_MANIFEST).exists() {
        load_dataset_dir(path)
    } else {
        let planes: Vec<GrayImage> = load_corpus_planes(path)?.into_iter().map(|(_, g)| g).collect();
        build_dataset(&planes, cfg.patch_size, cfg.patches_per_image, cfg.seed)
    }
}

/// What a training run produced.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub config: TrainConfig,
    pub log: TrainLog,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub model_dir: PathBuf,
}

fn require(bundle: &ModelBundle, dir: &Path, role: Role) -> Result<()> {
    match bundle.slot(role) {
        Some(_) => Ok(()),
        None => Err(Error::MissingArtifact(checkpoint_path(dir, role))),
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary> {
    let mut cfg = match &args.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(st) = args.stage {
        cfg.stage = st;
    }
    cfg.validate()?;

    let source = args.resume.as_deref().unwrap_or(&args.model_dir);
    let (mut bundle, mut epochs) = if source.join(MANIFEST).exists() {
        load_model_dir(source)?
    } else if args.resume.is_some() {
        return Err(Error::MissingArtifact(source.join(MANIFEST)));
    } else {
        (ModelBundle::empty(cfg.arch(), cfg.seed), EpochsDone::new())
    };
    if bundle.arch != cfg.arch() {
        return Err(Error::Config(format!(
            "model directory architecture {:?} differs from the config's {:?}",
            bundle.arch,
            cfg.arch()
        )));
    }
    bundle.seed = cfg.seed;

    let samples = load_training_data(&args.data, &cfg)?;
    let set = TensorSet::new(&samples, &bundle.kernel)?;
    let val = match &args.val {
        Some(p) => Some(TensorSet::new(&load_training_data(p, &cfg)?, &bundle.kernel)?),
        None => None,
    };

    let roles: &[Role] = match (args.baseline, cfg.stage) {
        (Some(b), _) => match BaselineKind::from(b) {
            BaselineKind::Prl => &[Role::Prl],
            BaselineKind::Ddn => &[Role::Ddn],
        },
        (None, 1) => &[Role::Gcm],
        (None, 2) => &[Role::Irs],
        _ => &[Role::Irs, Role::IsmpHead, Role::Sards],
    };
    let start_epoch = match args.resume {
        Some(_) => roles.iter().map(|r| epochs.get(r).copied().unwrap_or(0)).min().unwrap_or(0),
        None => 0,
    };
    let resume_slot = |role: Role| args.resume.as_ref().and_then(|_| bundle.slot(role).clone());

    eprintln!("# saldl train: model_dir = {}", args.model_dir.display());
    eprint!("{}", cfg.to_text());
    let mut print_row = |r: &LogRow| {
        eprintln!(
            "stage {} epoch {} iter {} loss {:.6e} (detail {:.6e}, laplacian {:.6e}) lr {:e}",
            r.stage, r.epoch, r.iter, r.loss_total, r.loss_detail, r.loss_laplacian, r.lr
        )
    };
    let mut opts = RunOptions {
        start_epoch,
        on_epoch: if args.verbose { Some(&mut print_row) } else { None },
    };

    let (log, val_log, initial_loss, final_loss) = if let Some(b) = args.baseline {
        require(&bundle, &args.model_dir, Role::Gcm)?;
        let kind = BaselineKind::from(b);
        let gcm = bundle.subnet(Role::Gcm)?.clone();
        let r = train_baseline(kind, &set, val.as_ref(), &cfg, &gcm, &mut opts)?;
        *bundle.slot_mut(kind.role()) = Some(r.stack);
        (r.log, r.val_log, r.initial_loss, r.final_loss)
    } else {
        match cfg.stage {
            1 => {
                let r = train_stage1_gcm(&set, val.as_ref(), &cfg, resume_slot(Role::Gcm), &mut opts)?;
                bundle.gcm = Some(r.stack);
                (r.log, r.val_log, r.initial_loss, r.final_loss)
            }
            2 => {
                let r = train_stage2_irs(&set, val.as_ref(), &cfg, resume_slot(Role::Irs), &mut opts)?;
                bundle.irs = Some(r.stack);
                (r.log, r.val_log, r.initial_loss, r.final_loss)
            }
            _ => {
                require(&bundle, source, Role::Gcm)?;
                require(&bundle, source, Role::Irs)?;
                let init = JointInit {
                    irs: bundle.subnet(Role::Irs)?.clone(),
                    head: resume_slot(Role::IsmpHead),
                    sards: resume_slot(Role::Sards),
                };
                let gcm = bundle.subnet(Role::Gcm)?.clone();
                let r = train_stage3_joint(&set, val.as_ref(), &cfg, &gcm, init, &mut opts)?;
                bundle.irs = Some(r.irs);
                bundle.ismp_head = Some(r.head);
                bundle.sards = Some(r.sards);
                (r.log, r.val_log, r.initial_loss.0, r.final_loss.0)
            }
        }
    };
    for &role in roles {
        epochs.insert(role, cfg.epochs);
    }
    save_model_dir(&args.model_dir, &bundle, &epochs)?;
    let cfg_path = args.model_dir.join(RESOLVED_CONFIG);
    std::fs::write(&cfg_path, cfg.to_text()).map_err(|e| Error::io(&cfg_path, e))?;
    log.append_to(args.model_dir.join(TRAIN_LOG))?;
    if !val_log.rows.is_empty() {
        val_log.append_to(args.model_dir.join(VALIDATION_LOG))?;
    }
    eprintln!("# training-set loss {initial_loss:.6e} -> {final_loss:.6e}");
    Ok(TrainSummary {
        config: cfg,
        log,
        initial_loss,
        final_loss,
        model_dir: args.model_dir.clone(),
    })
}

/// `out.pgm` → `out_base.pgm` and so on.
pub fn layer_path(output: &Path, layer: &str) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = output.extension().and_then(|s| s.to_str()).unwrap_or("pgm");
    output.with_file_name(format!("{stem}_{layer}.{ext}"))
}

/// Reconstructed planes: `(output, base, detail, laplacian)`.
type PlaneLayers = (GrayImage, GrayImage, GrayImage, GrayImage);

fn infer_plane(halftone: &GrayImage, bundle: &ModelBundle, baseline: Option<BaselineKind>) -> Result<PlaneLayers> {
    let l = reconstruct_layers(halftone, bundle)?;
    let output = match baseline {
        Some(kind) => reconstruct_baseline(halftone, bundle, kind)?,
        None => l.output,
    };
    Ok((output, l.base, l.detail, l.laplacian))
}

pub fn cmd_infer(args: &InferArgs) -> Result<()> {
    let (bundle, _) = load_model_dir(&args.model_dir)?;
    let baseline = args.baseline.map(BaselineKind::from);
    let input = load_pnm(&args.input)?;
    let planes: Vec<GrayImage> = match &input {
        Pnm::Gray(g) => vec![g.clone()],
        Pnm::Color(c) => c.planes().to_vec(),
    };
    let results: Vec<PlaneLayers> = planes
        .iter()
        .map(|p| infer_plane(p, &bundle, baseline))
        .collect::<Result<_>>()?;
    let pack = |f: &dyn Fn(&PlaneLayers) -> GrayImage| -> Result<Pnm> {
        let imgs: Vec<GrayImage> = results.iter().map(f).collect();
        Ok(match &input {
            Pnm::Gray(_) => Pnm::Gray(imgs.into_iter().next().expect("one plane")),
            Pnm::Color(_) => {
                let [r, g, b]: [GrayImage; 3] = imgs.try_into().expect("three planes");
                Pnm::Color(merge_planes(r, g, b)?)
            }
        })
    };
    save_pnm(&pack(&|r| r.0.clone())?, &args.output)?;
    if args.emit_layers {
        save_pnm(&pack(&|r| r.1.clamp01())?, layer_path(&args.output, "base"))?;
        save_pnm(&pack(&|r| r.2.offset_encode())?, layer_path(&args.output, "detail"))?;
        save_pnm(&pack(&|r| r.3.offset_encode())?, layer_path(&args.output, "laplacian"))?;
        let note = layer_path(&args.output, "layers").with_extension("txt");
        let text = "base: stored clamped to [0, 1]\n\
                    detail: stored = (v + 1) / 2\n\
                    laplacian: stored = (v + 1) / 2\n";
        std::fs::write(&note, text).map_err(|e| Error::io(&note, e))?;
    }
    Ok(())
}

/// One evaluated pair; `metrics` is `Err` with a message when the pair failed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub name: String,
    pub metrics: std::result::Result<(f64, f64), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Mean PSNR and SSIM over the rows that succeeded.
    pub average: Option<(f64, f64)>,
}

impl EvalReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.metrics.is_err()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("image,psnr_db,ssim,error\n");
        for r in &self.rows {
            match &r.metrics {
                Ok((p, q)) => writeln!(s, "{},{p:.6},{q:.6},", r.name),
                Err(e) => writeln!(s, "{},,,{}", r.name, e.replace(',', ";")),
            }
            .expect("string write");
        }
        if let Some((p, q)) = self.average {
            writeln!(s, "AVG,{p:.6},{q:.6},").expect("string write");
        }
        s
    }
}

fn eval_pair(reference: &Path, candidate: &Path, args: &EvalArgs) -> Result<(f64, f64)> {
    match (load_pnm(reference)?, load_pnm(candidate)?) {
        (Pnm::Gray(a), Pnm::Gray(b)) => Ok((psnr(&a, &b, 1.0)?, ssim(&a, &b)?)),
        (Pnm::Color(a), Pnm::Color(b)) => {
            let p = match args.color_psnr {
                ColorPsnrArg::Merged => psnr_color(&a, &b, 1.0)?,
                ColorPsnrArg::PerPlane => psnr_color_per_plane(&a, &b, 1.0)?,
            };
            let mode = match args.color_ssim {
                ColorSsimArg::Luma => ColorSsim::Luma,
                ColorSsimArg::PerPlane => ColorSsim::PerPlane,
            };
            Ok((p, ssim_color(&a, &b, mode)?))
        }
        _ => Err(Error::Dimension("one image is grayscale and the other color".into())),
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let text = std::fs::read_to_string(&args.manifest).map_err(|e| Error::io(&args.manifest, e))?;
    let root = args.manifest.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') || line == "reference,candidate" {
            continue;
        }
        let Some((r, c)) = line.split_once(',') else {
            rows.push(EvalRow {
                name: line.to_string(),
                metrics: Err("expected reference,candidate".into()),
            });
            continue;
        };
        let (r, c) = (root.join(r.trim()), root.join(c.trim()));
        let name = r.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
        rows.push(EvalRow {
            name,
            metrics: eval_pair(&r, &c, args).map_err(|e| e.to_string()),
        });
    }
    let ok: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.metrics.clone().ok()).collect();
    let average = (!ok.is_empty()).then(|| {
        let n = ok.len() as f64;
        (
            ok.iter().map(|m| m.0).sum::<f64>() / n,
            ok.iter().map(|m| m.1).sum::<f64>() / n,
        )
    });
    Ok(EvalReport { rows, average })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Vec<PropertyResult>> {
    let any = args.gradcheck || args.gcm_identity || args.narrowing.is_some() || args.narrowing_builtin;
    let kernel = base_kernel();
    let mut results = Vec::new();
    if args.gradcheck || !any {
        results.push(gradcheck_suite(args.cases, args.seed, &|p| p)?);
    }
    if args.gcm_identity || !any {
        results.push(gcm_identity(10, args.seed, &kernel)?);
    }
    if let Some(dir) = &args.narrowing {
        results.push(narrowing(&load_corpus_planes(dir)?, &kernel)?);
    }
    if args.narrowing_builtin || !any {
        let imgs: Vec<(String, GrayImage)> = synth::natural_test_set(128)
            .into_iter()
            .map(|(n, i)| (n.to_string(), i))
            .collect();
        results.push(narrowing(&imgs, &kernel)?);
    }
    Ok(results)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Halftone(a) => cmd_halftone(&a).map(|_| EXIT_OK),
        Command::Dataset(a) => {
            let s = cmd_dataset(&a)?;
            println!("wrote {} triplets to {}", s.len(), a.out_dir.display());
            Ok(EXIT_OK)
        }
        Command::Train(a) => {
            let s = cmd_train(&a)?;
            println!(
                "trained into {}: loss {:.6e} -> {:.6e}",
                s.model_dir.display(),
                s.initial_loss,
                s.final_loss
            );
            Ok(EXIT_OK)
        }
        Command::Infer(a) => cmd_infer(&a).map(|_| EXIT_OK),
        Command::Eval(a) => {
            let report = cmd_eval(&a)?;
            let csv = report.to_csv();
            print!("{csv}");
            if let Some(p) = &a.out {
                std::fs::write(p, &csv).map_err(|e| Error::io(p, e))?;
            }
            Ok(if report.failures() > 0 { EXIT_DATA } else { EXIT_OK })
        }
        Command::Verify(a) => {
            let results = cmd_verify(&a)?;
            let mut ok = true;
            for r in &results {
                println!("{r}");
                for d in &r.details {
                    println!("    {d}");
                }
                ok &= r.passed;
            }
            Ok(if ok { EXIT_OK } else { EXIT_PROPERTY })
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main_from_env() -> i32 {
    run(std::env::args_os())
}
