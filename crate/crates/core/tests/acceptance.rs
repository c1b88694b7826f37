//! The acceptance suite. Every criterion runs, prints one PASS/FAIL line, and
//! the test fails at the end if any criterion did.
//!
//!     cargo test --release --test acceptance -- --nocapture

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saldl::cli::{cmd_train, TrainArgs};
use saldl::filters::gaussian_kernel;
use saldl::image::GrayImage;
use saldl::networks::{base_kernel, predict_detail, predict_structure_map, reconstruct};
use saldl::synth;
use saldl::training::{
    build_dataset, train_pipeline, train_stage1_gcm, LogRow, RunOptions, TensorSet, TrainConfig,
};
use saldl::verify::{gcm_identity, gradcheck_suite, narrowing};
use saldl::{convolve_same, floyd_steinberg, predict_base, psnr, ssim, ArchScale, BaselineKind, ModelBundle};

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        summary: summary.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let o = f();
    let elapsed = t.elapsed();
    outcome(
        o.passed && elapsed < limit,
        format!("{} [{:.1}s of {}s]", o.summary, elapsed.as_secs_f64(), limit.as_secs()),
    )
}

fn c1_gradients() -> Outcome {
    timed(Duration::from_secs(120), || {
        let r = gradcheck_suite(24, 2024, &|p| p).unwrap();
        for d in &r.details {
            println!("    {d}");
        }
        outcome(r.passed, format!("24 nets, max relative error {:.3e} (< 1e-4)", r.measured))
    })
}

fn c2_distributivity() -> Outcome {
    let r = gcm_identity(10, 77, &base_kernel()).unwrap();
    outcome(r.passed, format!("10 pairs, sup difference {:.3e} (<= 1e-10)", r.measured))
}

fn c3_narrowing() -> Outcome {
    let images: Vec<(String, GrayImage)> = synth::natural_test_set(256)
        .into_iter()
        .map(|(n, i)| (n.to_string(), i))
        .collect();
    let r = narrowing(&images, &base_kernel()).unwrap();
    for d in &r.details {
        println!("    {d}");
    }
    outcome(r.passed, format!("5 images, largest std/width ratio {:.4}", r.measured))
}

fn c4_floyd_steinberg() -> Outcome {
    // one row: only the right-hand 7/16 share of each error stays in the image
    let mut carry = 0.0;
    let oracle: Vec<u8> = (0..4)
        .map(|_| {
            let v: f64 = 0.5 + carry;
            let out = u8::from(v >= 0.5);
            carry = (v - f64::from(out)) * 7.0 / 16.0;
            out
        })
        .collect();
    let row = GrayImage::filled(1, 4, 0.5);
    let traced = floyd_steinberg(&row).unwrap();
    let a = traced.data() == [1, 0, 1, 0] && oracle == [1, 0, 1, 0];

    let flat = floyd_steinberg(&GrayImage::filled(64, 64, 0.5)).unwrap();
    let drift = (flat.mean() - 0.5).abs();
    let b = drift <= 0.02;

    let img = synth::scene(synth::Scene::Text, 64, 4);
    let once = floyd_steinberg(&img).unwrap();
    let c = floyd_steinberg(&once.to_gray()).unwrap() == once;
    outcome(
        a && b && c,
        format!("trace {:?}, constant-0.5 drift {drift:.4} (<= 0.02), idempotent {c}", traced.data()),
    )
}

fn c5_oracles() -> Outcome {
    let k = gaussian_kernel(1.0, 5).unwrap();
    let sum_err = (k.sum() - 1.0).abs();
    let mut symmetric = true;
    for i in 0..5 {
        for j in 0..5 {
            let t = k.tap(i, j);
            for (a, b) in [(j, i), (4 - i, j), (i, 4 - j), (4 - i, 4 - j), (4 - j, i), (j, 4 - i), (4 - j, 4 - i)] {
                symmetric &= k.tap(a, b) == t;
            }
        }
    }
    let x = synth::scene(synth::Scene::Portrait, 48, 2).map(|v| v * 0.8);
    let y = x.map(|v| v + 0.1);
    let p = psnr(&x, &y, 1.0).unwrap();
    let s = ssim(&x, &x).unwrap();
    outcome(
        sum_err <= 1e-12 && symmetric && (p - 20.0).abs() <= 1e-9 && (s - 1.0).abs() <= 1e-9,
        format!("kernel sum error {sum_err:.1e}, symmetric {symmetric}, psnr {p:.12} dB, ssim(x,x) {s:.12}"),
    )
}

fn c6_overfit() -> Outcome {
    timed(Duration::from_secs(300), || {
        let k = base_kernel();
        let samples = build_dataset(&synth::corpus(1, 64, 3), 32, 1, 0).unwrap();
        let set = TensorSet::new(&samples, &k).unwrap();
        let cfg = TrainConfig {
            epochs: 100,
            iters_per_epoch: 100,
            batch_size: 1,
            lr_start: 1e-4,
            lr_end: 1e-4,
            lr_step_epochs: 100,
            momentum: 0.9,
            ..TrainConfig::default()
        };
        let mut best = f64::INFINITY;
        let mut track = |r: &LogRow| best = best.min(r.loss_total);
        let r = train_stage1_gcm(
            &set,
            None,
            &cfg,
            None,
            &mut RunOptions {
                start_epoch: 0,
                on_epoch: Some(&mut track),
            },
        )
        .unwrap();
        let best = best.min(r.final_loss);
        outcome(
            best < 1e-6,
            format!(
                "{} iterations, loss {:.4e} -> {:.4e} (best epoch mean {best:.4e}, needs < 1e-6)",
                cfg.total_iters(),
                r.initial_loss,
                r.final_loss
            ),
        )
    })
}

/// Desk defaults with momentum switched on; plain SGD converged far more
/// slowly within the 2k-iteration stage budget.
fn toy_config() -> TrainConfig {
    TrainConfig {
        momentum: 0.9,
        ..TrainConfig::default()
    }
}

/// Criteria 7 and 8 share one training run.
fn c7_c8_end_to_end() -> (Outcome, Outcome) {
    let limit = Duration::from_secs(30 * 60);
    let t = Instant::now();
    let k = base_kernel();
    let samples = build_dataset(&synth::corpus(4, 64, 11), 32, 4, 0).unwrap();
    assert_eq!(samples.len(), 16);
    let set = TensorSet::new(&samples, &k).unwrap();
    let cfg = toy_config();
    let mut progress = |r: &LogRow| {
        if (r.epoch + 1) % 5 == 0 {
            println!("    stage {} epoch {} loss {:.4e}", r.stage, r.epoch + 1, r.loss_total)
        }
    };
    let res = train_pipeline(
        &set,
        None,
        &cfg,
        &[BaselineKind::Prl],
        &mut RunOptions {
            start_epoch: 0,
            on_epoch: Some(&mut progress),
        },
    )
    .unwrap();
    let stages_elapsed = t.elapsed();

    let n = samples.len() as f64;
    let (mut recon, mut blur, mut base) = (0.0, 0.0, 0.0);
    for s in &samples {
        recon += psnr(&reconstruct(&s.halftone, &res.bundle).unwrap(), &s.original, 1.0).unwrap();
        blur += psnr(&convolve_same(&s.halftone, &k).unwrap().clamp01(), &s.original, 1.0).unwrap();
        let b = predict_base(&s.halftone, &res.bundle).unwrap().0.clamp01();
        base += psnr(&b, &s.original, 1.0).unwrap();
    }
    let (recon, blur, base) = (recon / n, blur / n, base / n);
    let c7 = outcome(
        recon >= blur + 2.0 && recon >= base + 0.5 && stages_elapsed < limit,
        format!(
            "mean PSNR {recon:.3} dB vs blurred {blur:.3} dB (+{:.3}, needs 2) and base-only {base:.3} dB (+{:.3}, needs 0.5) [{:.0}s of {}s]",
            recon - blur,
            recon - base,
            stages_elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    );
    let saldl_loss = res.stage3.final_loss.1;
    let prl_loss = res.baselines[0].1.final_loss;
    let c8 = outcome(
        saldl_loss <= prl_loss,
        format!("final detail loss: SALDL {saldl_loss:.4e}, PRL {prl_loss:.4e}"),
    );
    (c7, c8)
}

fn train_args(data: &Path, model: &Path, cfg: &Path, stage: u8) -> TrainArgs {
    TrainArgs {
        stage: Some(stage),
        baseline: None,
        config: Some(cfg.to_path_buf()),
        data: data.to_path_buf(),
        val: None,
        model_dir: model.to_path_buf(),
        resume: None,
        seed: Some(5),
        verbose: false,
    }
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    for (i, img) in synth::corpus(2, 48, 3).iter().enumerate() {
        saldl::save_pgm(img, corpus.join(format!("{i}.pgm"))).unwrap();
    }
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "epochs = 2\niters_per_epoch = 10\nbatch_size = 4\nlr_step_epochs = 1\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_train(&train_args(&corpus, &a, &cfg, 1)).unwrap();
    cmd_train(&train_args(&corpus, &b, &cfg, 1)).unwrap();
    let read = |p: &Path| std::fs::read(p.join("gcm.ckpt")).unwrap();
    let identical = read(&a) == read(&b);

    let before = read(&a);
    cmd_train(&train_args(&corpus, &a, &cfg, 2)).unwrap();
    cmd_train(&train_args(&corpus, &a, &cfg, 3)).unwrap();
    let frozen = read(&a) == before;
    let sards_trained = a.join("sards.ckpt").exists();
    outcome(
        identical && frozen && sards_trained,
        format!("repeat stage-1 checkpoints identical {identical}, GCM unchanged by stage 3 {frozen}"),
    )
}

fn c10_composition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let arch = ArchScale {
        blocks: 3,
        head_blocks: 2,
        channels: 4,
    };
    let mut exact = 0;
    for state in 0..100u64 {
        let mut bundle = ModelBundle::initialized(arch, state).unwrap();
        for stack in [&mut bundle.gcm, &mut bundle.irs, &mut bundle.ismp_head, &mut bundle.sards] {
            for layer in &mut stack.as_mut().unwrap().layers {
                layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.3..0.3));
            }
        }
        let img = synth::scene(synth::Scene::ALL[state as usize % 5], 24, state);
        let h = floyd_steinberg(&img).unwrap().to_gray();
        let (base, _) = predict_base(&h, &bundle).unwrap();
        let (lap, _) = predict_structure_map(&h, &bundle).unwrap();
        let detail = predict_detail(&base, &lap, &h, &bundle).unwrap();
        let composed = base.add(&detail).unwrap().clamp01();
        exact += usize::from(reconstruct(&h, &bundle).unwrap() == composed);
    }
    outcome(exact == 100, format!("{exact}/100 parameter states compose exactly"))
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |i: usize, name: &'static str, o: Outcome| {
        println!("{} {i:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.summary);
        results.push((i, name, o));
    };
    record(1, "gradient correctness", c1_gradients());
    record(2, "GCM distributivity", c2_distributivity());
    record(3, "residual narrowing", c3_narrowing());
    record(4, "Floyd-Steinberg", c4_floyd_steinberg());
    record(5, "kernel and metric oracles", c5_oracles());
    record(6, "stage-1 single-triplet overfit", c6_overfit());
    let (c7, c8) = c7_c8_end_to_end();
    record(7, "toy end-to-end PSNR", c7);
    record(8, "baseline direction", c8);
    record(9, "determinism and freeze", c9_determinism());
    record(10, "composition identity", c10_composition());

    println!("\nacceptance summary:");
    for (i, name, o) in &results {
        println!("{} {i:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.summary);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
