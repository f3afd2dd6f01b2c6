//! Acceptance checks. Runs as a plain binary so every result line is shown:
//! `cargo test -p lexstress-core --test acceptance [-- <name filter>]`.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lexstress::augmentation::{generate_corpus, CorpusSpec};
use lexstress::eval::{
    binomial_ci, pr_curve, precision_at_recall, run_ablation, AblationConfig, AblationCorpora,
};
use lexstress::lexicon::Source;
use lexstress::model::{
    differential_bidirectional, dot_product_attention, forward, Checkpoint, Matrix, ModelConfig,
    ModelInput, ModelParameters, Pooling,
};
use lexstress::prosody::{
    compute_f0, compute_intensity, interpolate_unvoiced, sine, AudioSignal, FrameGrid,
    PitchSettings, SAMPLE_RATE,
};
use lexstress::training::gradcheck::{gradient_check, random_instance, DEFAULT_STEP};
use lexstress::training::{
    dataset_loss, sample_dropout, train, InitScheme, Split, TrainConfig, TrainingExample,
};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst: (f64, String) = (0.0, String::new());
    let mut instances = 0;
    for seed in 0..16u64 {
        let pooling = if seed % 4 == 3 {
            Pooling::NucleusMean
        } else {
            Pooling::Attention
        };
        let (config, batch, labels, params) = random_instance(seed, pooling);
        let report = gradient_check(&batch, &labels, &params, &config, Some(seed), DEFAULT_STEP)
            .map_err(|e| e.to_string())?;
        for b in &report.blocks {
            if b.max_rel_error > worst.0 {
                worst = (b.max_rel_error, format!("{} (instance {seed})", b.name));
            }
            ensure(b.max_rel_error <= 1e-4, || {
                format!(
                    "instance {seed}, block {}: relative error {:.3e} > 1e-4",
                    b.name, b.max_rel_error
                )
            })?;
        }
        instances += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s, limit 60 s"))?;
    Ok(format!(
        "{instances} instances, every block ≤ 1e-4; worst {:.2e} in {} ({secs:.1} s)",
        worst.0, worst.1
    ))
}

fn compare_forward(
    input: &ModelInput,
    params: &ModelParameters,
    config: &ModelConfig,
    dropout_seed: Option<u64>,
) -> Result<f64, String> {
    let masks = sample_dropout(std::slice::from_ref(input), config, dropout_seed);
    let mask = masks.as_ref().map(|m| &m[0]);
    let pass = forward(input, params, config, mask).map_err(|e| e.to_string())?;
    let oracle = common::naive_forward(input, params, config, mask);
    let probs = pass.posterior.probabilities();
    let mut diff: f64 = 0.0;
    for (k, row) in oracle.posterior.iter().enumerate() {
        diff = diff
            .max((probs.get(k, 0) - row[0]).abs())
            .max((probs.get(k, 1) - row[1]).abs());
        ensure(
            (probs.get(k, 0) + probs.get(k, 1) - 1.0).abs() <= 1e-6,
            || format!("posterior row {k} does not sum to 1"),
        )?;
    }
    for (weights, oracle_weights) in [
        (pass.frame_attention(), &oracle.frame_weights),
        (pass.phone_attention(), &oracle.phone_weights),
    ] {
        let Some(w) = weights else { continue };
        for (k, expected) in oracle_weights.iter().enumerate() {
            let row = w.row(k);
            ensure((row.iter().sum::<f64>() - 1.0).abs() <= 1e-6, || {
                format!("attention row {k} does not sum to 1")
            })?;
            for (a, b) in row.iter().zip(expected) {
                diff = diff.max((a - b).abs());
            }
            ensure(row[expected.len()..].iter().all(|&x| x == 0.0), || {
                "padding received attention".into()
            })?;
        }
    }
    Ok(diff)
}

fn forward_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut words = 0;
    for seed in 0..24u64 {
        let pooling = if seed % 3 == 2 {
            Pooling::NucleusMean
        } else {
            Pooling::Attention
        };
        let (config, batch, _, params) = random_instance(1000 + seed, pooling);
        for (i, input) in batch.iter().enumerate() {
            let dropout = (seed % 2 == 1).then_some(seed * 31 + i as u64);
            worst = worst.max(compare_forward(input, &params, &config, dropout)?);
            words += 1;
        }
    }
    let corpus = generate_corpus(&CorpusSpec::new("oracle", 24, 3, 0.3, Source::Human, 5))
        .map_err(|e| e.to_string())?;
    let config = ModelConfig::default();
    for (i, ex) in corpus.examples.iter().enumerate() {
        let params = ModelParameters::init_glorot(&config, i as u64);
        let input = ex.input().map_err(|e| e.to_string())?;
        worst = worst.max(compare_forward(&input, &params, &config, None)?);
        worst = worst.max(compare_forward(&input, &params, &config, Some(i as u64))?);
        words += 1;
    }
    ensure(worst <= 1e-9, || {
        format!("max deviation from the reference forward pass {worst:.3e} > 1e-9")
    })?;
    Ok(format!(
        "{words} words over 24 random instances and 24 generated words; max deviation {worst:.1e}"
    ))
}

fn attention_micro_example() -> Outcome {
    let q = Matrix::from_rows(&[vec![1.0, 0.0]]);
    let k = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
    let v = Matrix::from_rows(&[vec![2.0], vec![4.0]]);
    let att = dot_product_attention(&q, &k, &v).map_err(|e| e.to_string())?;
    let e = (1.0 / 2f64.sqrt()).exp();
    let expected = [e / (e + 1.0), 1.0 / (e + 1.0)];
    let w = att.weights.row(0);
    for (i, target) in [0.6698, 0.3302].into_iter().enumerate() {
        ensure((w[i] - target).abs() <= 1e-4, || {
            format!("weight {i} = {:.6}, expected {target}", w[i])
        })?;
        ensure((w[i] - expected[i]).abs() <= 1e-12, || {
            format!("weight {i} differs from the hand softmax")
        })?;
    }
    let out = att.output.get(0, 0);
    ensure((out - 2.6604).abs() <= 1e-4, || {
        format!("output {out:.6}, expected 2.6604")
    })?;
    Ok(format!(
        "weights [{:.4}, {:.4}], output {:.4}",
        w[0], w[1], out
    ))
}

fn dsp_accuracy() -> Outcome {
    let settings = PitchSettings::default();
    let mut worst_hz: f64 = 0.0;
    let mut tones = 0;
    let mut f = 75.0;
    while f <= 500.0 + 1e-9 {
        for amplitude in [0.05, 0.5] {
            let tone = sine(f, amplitude, 0.4);
            let grid = FrameGrid::new(0.0, tone.duration());
            let track = compute_f0(&tone, &grid, &settings).map_err(|e| e.to_string())?;
            // frames whose 40 ms window lies inside the signal
            for i in 2..grid.count - 2 {
                ensure(track.voiced[i], || {
                    format!("{f} Hz tone: frame {i} unvoiced")
                })?;
                worst_hz = worst_hz.max((track.f0[i] - f).abs());
            }
            tones += 1;
        }
        f += 2.5;
    }
    ensure(worst_hz <= 2.0, || {
        format!("F0 error {worst_hz:.3} Hz > 2 Hz")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_db: f64 = 0.0;
    for trial in 0..40 {
        let n = 4800;
        let base: Vec<f64> = if trial % 2 == 0 {
            (0..n).map(|_| rng.random_range(-0.4..0.4)).collect()
        } else {
            sine(
                rng.random_range(80.0..400.0),
                0.4,
                n as f64 / SAMPLE_RATE as f64,
            )
            .samples()
            .to_vec()
        };
        let gain: f64 = rng.random_range(0.01..2.0);
        let a = AudioSignal::new(base.clone(), SAMPLE_RATE).map_err(|e| e.to_string())?;
        let b = AudioSignal::new(base.iter().map(|x| x * gain).collect(), SAMPLE_RATE)
            .map_err(|e| e.to_string())?;
        let grid = FrameGrid::new(0.0, a.duration());
        let (da, db) = (compute_intensity(&a, &grid), compute_intensity(&b, &grid));
        let shift = 20.0 * gain.log10();
        for (x, y) in da.iter().zip(&db) {
            worst_db = worst_db.max((y - x - shift).abs());
        }
    }
    ensure(worst_db <= 0.1, || {
        format!("intensity shift error {worst_db:.4} dB > 0.1 dB")
    })?;

    let mut tracks = 0;
    for trial in 0..500 {
        let n = rng.random_range(1..80);
        let mut voiced: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let forced = rng.random_range(0..n);
        voiced[forced] = true;
        let f0: Vec<f64> = voiced
            .iter()
            .map(|&v| {
                if v {
                    rng.random_range(75.0..500.0)
                } else {
                    0.0
                }
            })
            .collect();
        let filled = interpolate_unvoiced(&f0, &voiced, 120.0);
        ensure(
            !filled.fallback && filled.f0.iter().all(|&x| x > 0.0 && x.is_finite()),
            || format!("track {trial} still has zeros after interpolation"),
        )?;
        tracks += 1;
    }
    // a real track with a silent gap
    let mut samples = sine(150.0, 0.3, 0.3).samples().to_vec();
    samples[1600..3200].iter_mut().for_each(|x| *x = 0.0);
    let gap = AudioSignal::new(samples, SAMPLE_RATE).map_err(|e| e.to_string())?;
    let grid = FrameGrid::new(0.0, gap.duration());
    let track = compute_f0(&gap, &grid, &settings).map_err(|e| e.to_string())?;
    ensure(track.voiced.iter().any(|v| !v), || {
        "silent gap was tracked as voiced".into()
    })?;
    let filled = interpolate_unvoiced(&track.f0, &track.voiced, 120.0);
    ensure(filled.f0.iter().all(|&x| x > 0.0), || {
        "gap left zeros".into()
    })?;
    tracks += 1;

    Ok(format!(
        "{tones} tones 75–500 Hz, max F0 error {worst_hz:.3} Hz; intensity shift error {worst_db:.1e} dB; {tracks} tracks interpolated without zeros"
    ))
}

fn ratio_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let k = rng.random_range(2..=6);
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..3).map(|_| rng.random_range(0.01..2.0)).collect())
            .collect();
        let g = 10f64.powf(rng.random_range(-2.0..2.0));
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|x| x * g).collect())
            .collect();
        let a = differential_bidirectional(&Matrix::from_rows(&rows), k);
        let b = differential_bidirectional(&Matrix::from_rows(&scaled), k);
        for r in 0..k {
            for c in 3..9 {
                worst = worst.max((a.get(r, c) - b.get(r, c)).abs());
            }
        }

        let row: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..2.0)).collect();
        let uniform = differential_bidirectional(&Matrix::from_rows(&vec![row; k]), k);
        for r in 0..k {
            for c in 3..9 {
                ensure((uniform.get(r, c) - 1.0).abs() <= 1e-12, || {
                    format!("identical syllables gave ratio {}", uniform.get(r, c))
                })?;
            }
        }
        let ones = differential_bidirectional(&Matrix::filled(k, 3, 1.0), k);
        ensure(
            ones.as_slice().iter().all(|&x| (x - 1.0).abs() <= 1e-12),
            || "all-ones input gave a non-one output".into(),
        )?;
    }
    ensure(worst <= 1e-12, || {
        format!("scaling changed a ratio by {worst:.3e}")
    })?;
    Ok(format!(
        "500 random matrices; max ratio change under scaling {worst:.1e}; uniform input → all ones"
    ))
}

fn scaled_ablation() -> Outcome {
    let start = Instant::now();
    let corpora = AblationCorpora::new(0);
    let (data, generated) = corpora.generate().map_err(|e| e.to_string())?;
    for c in &generated {
        print!("{}", c.summary());
    }
    let test_errors = data.test.iter().filter(|e| e.has_error()).count();
    let outcome = run_ablation(&data, &AblationConfig::default()).map_err(|e| e.to_string())?;
    print!("{}", outcome.report.table());
    let auc = |name: &str| {
        outcome
            .report
            .model(name)
            .map(|m| m.auc)
            .ok_or(format!("missing {name}"))
    };
    let (att_tts, att_notts, noatt_tts, noatt_notts) = (
        auc("Att_TTS")?,
        auc("Att_NoTTS")?,
        auc("NoAtt_TTS")?,
        auc("NoAtt_NoTTS")?,
    );
    let point = outcome
        .report
        .model("Att_TTS")
        .map(|m| m.operating_point)
        .ok_or("missing Att_TTS")?;
    let secs = start.elapsed().as_secs_f64();

    let mut failures = Vec::new();
    if !(att_tts > att_notts && att_notts > noatt_tts.max(noatt_notts)) {
        failures.push(format!(
            "AUC order: Att_TTS {att_tts:.4}, Att_NoTTS {att_notts:.4}, NoAtt_TTS {noatt_tts:.4}, NoAtt_NoTTS {noatt_notts:.4}"
        ));
    }
    if !(point.recall >= 0.5 && point.precision >= 0.90) {
        failures.push(format!(
            "Att_TTS precision {:.4} at recall {:.4}",
            point.precision, point.recall
        ));
    }
    if !(att_tts - noatt_tts >= 0.10 && att_tts - noatt_notts >= 0.10) {
        failures.push(format!(
            "margins over NoAtt {:.4} / {:.4} < 0.10",
            att_tts - noatt_tts,
            att_tts - noatt_notts
        ));
    }
    if secs > 900.0 {
        failures.push(format!("runtime {secs:.0} s > 900 s"));
    }
    if !failures.is_empty() {
        return Err(failures.join("; "));
    }
    Ok(format!(
        "AUC {att_tts:.4} > {att_notts:.4} > {noatt_tts:.4}/{noatt_notts:.4}; Att_TTS precision {:.4} at recall {:.4}; margins {:.4}/{:.4}; {} test words, {test_errors} errors ({secs:.0} s)",
        point.precision,
        point.recall,
        att_tts - noatt_tts,
        att_tts - noatt_notts,
        data.test.len()
    ))
}

fn evaluation_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut sets = 0usize;
    for n in 1..=12usize {
        for mask in 0u32..(1 << n) {
            let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let tied = rng.random_bool(0.5);
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    if tied {
                        rng.random_range(0..5) as f64 / 4.0
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect();
            let positives = labels.iter().filter(|&&l| l).count();
            let curve = pr_curve(&scores, &labels);
            if positives == 0 || positives == n {
                ensure(curve.is_err(), || {
                    format!("single-class set {mask:b} accepted")
                })?;
                continue;
            }
            let curve = curve.map_err(|e| e.to_string())?;
            let oracle = common::enumerate_pr(&scores, &labels);
            ensure(curve.points.len() == oracle.len(), || {
                format!(
                    "set {mask:b}: {} points, expected {}",
                    curve.points.len(),
                    oracle.len()
                )
            })?;
            let mut area = 0.0;
            let mut prev = (0.0, oracle[0].1 as f64 / (oracle[0].1 + oracle[0].2) as f64);
            for (p, &(t, tp, fp)) in curve.points.iter().zip(&oracle) {
                let (precision, recall) =
                    (tp as f64 / (tp + fp) as f64, tp as f64 / positives as f64);
                ensure(
                    p.threshold == t
                        && p.true_positives == tp
                        && p.false_positives == fp
                        && p.precision == precision
                        && p.recall == recall,
                    || format!("set {mask:b}: point {p:?} vs ({t}, {tp}, {fp})"),
                )?;
                area += (recall - prev.0) * (precision + prev.1) / 2.0;
                prev = (recall, precision);
            }
            ensure((curve.auc - area).abs() <= 1e-12, || {
                format!("set {mask:b}: AUC {} vs {area}", curve.auc)
            })?;
            let at = precision_at_recall(&curve, 0.5).map_err(|e| e.to_string())?;
            let min_recall = oracle
                .iter()
                .map(|&(_, tp, _)| tp as f64 / positives as f64)
                .filter(|&r| r >= 0.5)
                .fold(f64::INFINITY, f64::min);
            let best = oracle
                .iter()
                .filter(|&&(_, tp, _)| tp as f64 / positives as f64 == min_recall)
                .map(|&(_, tp, fp)| tp as f64 / (tp + fp) as f64)
                .fold(0.0, f64::max);
            ensure(at.recall == min_recall && at.precision == best, || {
                format!("set {mask:b}: operating point {at:?}")
            })?;
            sets += 1;
        }
    }

    let mut cases: Vec<(u64, u64)> = vec![
        (93, 98),
        (96, 189),
        (189, 2108),
        (0, 1),
        (1, 1),
        (0, 50),
        (50, 50),
    ];
    for n in [1u64, 2, 5, 10, 37, 98] {
        cases.extend((0..=n).map(|x| (x, n)));
    }
    let mut worst: f64 = 0.0;
    for &(x, n) in &cases {
        for level in [0.90, 0.95, 0.99] {
            let got = binomial_ci(x, n, level).map_err(|e| e.to_string())?;
            let want = common::clopper_pearson_oracle(x, n, level);
            let d = (got.0 - want.0).abs().max((got.1 - want.1).abs());
            ensure(d <= 1e-6, || {
                format!("CI for {x}/{n} at {level}: {got:?} vs {want:?}")
            })?;
            worst = worst.max(d);
        }
    }
    Ok(format!(
        "{sets} two-class label/score sets of ≤ 12 items match enumeration; {} intervals within {worst:.1e} of the tail-sum oracle",
        cases.len() * 3
    ))
}

fn bits(p: &ModelParameters) -> Vec<u64> {
    p.tensors()
        .iter()
        .flat_map(|(_, _, xs)| xs.iter().map(|x| x.to_bits()))
        .collect()
}

fn determinism_and_persistence() -> Outcome {
    let mut spec = CorpusSpec::new("det", 400, 8, 0.2, Source::Human, 17);
    spec.validation_speakers = 2;
    let corpus = generate_corpus(&spec).map_err(|e| e.to_string())?;
    let again = generate_corpus(&spec).map_err(|e| e.to_string())?;
    let (d1, d2) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    corpus.write(d1.path()).map_err(|e| e.to_string())?;
    again.write(d2.path()).map_err(|e| e.to_string())?;
    let mut files = 0;
    for path in [
        corpus.alignments_path(d1.path()),
        corpus.features_path(d1.path()),
        corpus.manifest_path(d1.path()),
    ] {
        let other = d2.path().join(path.file_name().unwrap());
        let (a, b) = (
            std::fs::read(&path).map_err(|e| e.to_string())?,
            std::fs::read(&other).map_err(|e| e.to_string())?,
        );
        ensure(a == b, || {
            format!("{} differs between runs", path.display())
        })?;
        files += 1;
    }

    let (train_set, validation): (Vec<TrainingExample>, Vec<TrainingExample>) =
        (corpus.split(Split::Train), corpus.split(Split::Validation));
    let model = ModelConfig::default();
    let config = TrainConfig {
        epochs: 4,
        init: InitScheme::Glorot,
        encoder_gain: 3.0,
        seed: 3,
        ..TrainConfig::default()
    };
    let first = train(&train_set, &validation, &model, &config).map_err(|e| e.to_string())?;
    let second = train(&train_set, &validation, &model, &config).map_err(|e| e.to_string())?;
    ensure(bits(&first.params) == bits(&second.params), || {
        "retrained parameters differ".into()
    })?;
    let log_bits = |o: &lexstress::training::TrainOutcome| {
        o.log
            .iter()
            .map(|e| (e.train_loss.to_bits(), e.val_loss.map(f64::to_bits)))
            .collect::<Vec<_>>()
    };
    ensure(log_bits(&first) == log_bits(&second), || {
        "loss logs differ".into()
    })?;

    let path = d1.path().join("model.json");
    Checkpoint::new(model.clone(), first.params.clone())
        .and_then(|c| c.save(&path))
        .map_err(|e| e.to_string())?;
    let loaded = Checkpoint::load(&path).map_err(|e| e.to_string())?;
    let inputs: Vec<ModelInput> = validation
        .iter()
        .map(|e| e.input())
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let labels: Vec<_> = validation.iter().map(|e| e.label.clone()).collect();
    let before =
        dataset_loss(&inputs, &labels, &first.params, &model).map_err(|e| e.to_string())?;
    let after = dataset_loss(&inputs, &labels, &loaded.params, &loaded.config)
        .map_err(|e| e.to_string())?;
    ensure((before - after).abs() <= 1e-9, || {
        format!("validation loss {before} before save, {after} after load")
    })?;
    Ok(format!(
        "{files} corpus files byte-identical; retrain bitwise-identical over {} epochs; reloaded validation loss differs by {:.1e}",
        first.log.len() - 1,
        (before - after).abs()
    ))
}

fn main() {
    let checks: [Check; 8] = [
        ("gradient correctness", gradient_correctness),
        ("forward-pass oracle", forward_oracle),
        ("attention micro-example", attention_micro_example),
        ("DSP accuracy", dsp_accuracy),
        ("ratio-layer algebra", ratio_algebra),
        ("scaled ablation", scaled_ablation),
        ("evaluation correctness", evaluation_correctness),
        ("determinism and persistence", determinism_and_persistence),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut run = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        run += 1;
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", run - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
