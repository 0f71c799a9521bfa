use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use spectrum_anomaly::commands::{cmd_eval, cmd_experiment, cmd_score, cmd_synth, cmd_train, MODEL_FILE, SCORES_FILE, TEST_FILE, TRAIN_FILE};
use spectrum_anomaly::evaluation::trapezoid;
use spectrum_anomaly::persistence::report::parse_summary;
use spectrum_anomaly::persistence::{encode_model, load_model, read_loss_history, read_roc, read_scores};
use spectrum_anomaly::scoring::score_dataset_with_floor;
use spectrum_anomaly::{Error, LatentMode, RunConfig};

const SMALL: &str = "\
# tiny run for tests
seed = 31
train_count = 24
test_count = 12
epochs = 2
batch_size = 8
hidden_widths = 32,16
latent_dim = 4
lof_k = 5
";

fn small_config() -> RunConfig {
    RunConfig::parse(SMALL).unwrap()
}

fn quiet(_: &str) {}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn summary(dir: &Path) -> BTreeMap<String, String> {
    parse_summary(&std::fs::read_to_string(dir.join("summary.txt")).unwrap())
        .unwrap()
        .into_iter()
        .collect()
}

#[test]
fn synth_is_deterministic_and_in_range() {
    let config = small_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_synth(&config, a.path(), &mut quiet).unwrap();
    cmd_synth(&config, b.path(), &mut quiet).unwrap();
    assert_eq!(read_dir_bytes(a.path()), read_dir_bytes(b.path()));

    let manifest = parse_summary(&std::fs::read_to_string(a.path().join("manifest.txt")).unwrap()).unwrap();
    let get = |k: &str| manifest.iter().find(|(key, _)| key == k).unwrap().1.clone();
    assert_eq!(get("train_normal"), "24");
    assert_eq!(get("test_normal"), "6");
    assert_eq!(get("test_abnormal"), "6");

    // Scan the raw file without the library decoder.
    let bytes = std::fs::read(a.path().join(TEST_FILE)).unwrap();
    assert_eq!(&bytes[..4], b"SPGD");
    let count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let eps = f64::from_le_bytes(bytes[14..22].try_into().unwrap());
    assert_eq!(count, 12);
    let pixels = &bytes[22 + count..];
    assert_eq!(pixels.len(), count * 4096 * 4);
    for chunk in pixels.chunks_exact(4) {
        let p = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        assert!(p >= eps && p <= 1.0, "pixel {p}");
    }
}

#[test]
fn train_score_eval_round_trip() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    cmd_synth(&config, out, &mut quiet).unwrap();
    let (model, history) = cmd_train(&config, &out.join(TRAIN_FILE), out, &mut quiet).unwrap();

    let model_bytes = std::fs::read(out.join(MODEL_FILE)).unwrap();
    let loaded = load_model(&out.join(MODEL_FILE)).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(encode_model(&loaded).unwrap(), model_bytes);
    let losses = read_loss_history(&out.join("loss_vae.csv")).unwrap();
    assert_eq!(losses.len(), config.epochs);
    assert_eq!(losses, history);

    let records = cmd_score(&config, &out.join(MODEL_FILE), &out.join(TEST_FILE), out).unwrap();
    let rows = read_scores(&out.join(SCORES_FILE)).unwrap();
    assert_eq!(rows.len(), 2 * config.test_count);
    let test = spectrum_anomaly::persistence::load_dataset(&out.join(TEST_FILE)).unwrap();
    let in_memory = score_dataset_with_floor(&model, &test, LatentMode::Mean, 0, config.noise_floor_percentile).unwrap();
    assert_eq!(records, in_memory);
    for r in rows.iter().filter(|r| r.score_name == "noise_attention") {
        assert_eq!(r.score, in_memory[r.sample_id].noise_attention);
        assert_eq!(r.noise_floor_out, Some(in_memory[r.sample_id].noise_floor_out));
    }

    let entries = cmd_eval(&out.join(SCORES_FILE), out).unwrap();
    let sums = summary(out);
    for e in &entries {
        let key = format!("{}_{}", e.detector, e.score_name);
        let points = read_roc(&out.join(format!("roc_{key}.csv"))).unwrap();
        let recomputed = trapezoid(&points);
        let reported: f64 = sums[&format!("auc.{}.{}", e.detector, e.score_name)].parse().unwrap();
        assert_eq!(reported, recomputed);
        assert!((reported - e.auc_mann_whitney).abs() < 1e-9);
    }
    assert!(sums.contains_key("floor.abnormal_positive_fraction"));
}

#[test]
fn eval_rejects_single_class_scores() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scores.csv");
    std::fs::write(
        &path,
        "sample_id,label,detector,score_name,score,noise_floor_in,noise_floor_out\n\
         0,normal,vae,noise_attention,1.5,,\n\
         1,normal,vae,noise_attention,2.5,,\n",
    )
    .unwrap();
    let err = cmd_eval(&path, dir.path()).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
}

#[test]
fn experiment_rerun_is_byte_identical() {
    let config = small_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let report = cmd_experiment(&config, a.path(), &mut quiet).unwrap();
    cmd_experiment(&config, b.path(), &mut quiet).unwrap();
    let files = read_dir_bytes(a.path());
    assert_eq!(files, read_dir_bytes(b.path()));
    for name in [
        "config.txt",
        "summary.txt",
        "scores.csv",
        "roc_vae_noise_attention.csv",
        "roc_autoencoder_mse.csv",
        "roc_lof_lof.csv",
        "hist_vae_noise_attention.csv",
        "loss_vae.csv",
        "loss_autoencoder.csv",
        "norm_stats.txt",
    ] {
        assert!(files.contains_key(name), "missing {name}");
    }
    assert!(!files.contains_key("FAILED"));
    assert_eq!(report.detectors.len(), 4);
    assert_eq!(RunConfig::parse(std::str::from_utf8(&files["config.txt"]).unwrap()).unwrap(), config);
}

#[test]
fn failed_experiment_leaves_marker() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config();
    // Too few training samples for the neighbor count: fails validation
    // before any stage runs.
    config.lof.k = 50;
    let err = cmd_experiment(&config, dir.path(), &mut quiet).unwrap_err();
    let marker = std::fs::read_to_string(dir.path().join("FAILED")).unwrap();
    assert!(marker.contains(&err.to_string()));
    assert!(dir.path().join("config.txt").exists());
}

#[test]
fn binary_runs_synth_and_reports_errors() {
    let exe = env!("CARGO_BIN_EXE_spectrum-anomaly");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(exe)
        .args(["synth", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "7"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let echoed = RunConfig::load(&out.join("config.txt")).unwrap();
    assert_eq!(echoed.seed, 7);

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let bad = Command::new(exe).args(["synth", "--config"]).arg(&cfg).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown config key"));
}
