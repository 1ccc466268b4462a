mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use organiq::data::write_pgm;
use organiq::gan::parse_history;

fn organiq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_organiq"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_args<'a>(images: &'a str, labels: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "train", "--images", images, "--labels", labels, "--class", "0", "--out", out,
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn train_zero_iterations_writes_the_initial_model() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (common::images_path(), common::labels_path());
    let model = dir.path().join("m.json");
    let out = organiq(&train_args(
        s(&images),
        s(&labels),
        s(&model),
        &["--iters", "0", "--seed", "42"],
    ));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"seed\":42"), "resolved config printed: {stderr}");
    assert!(model.exists());
    let history = fs::read_to_string(dir.path().join("m.history.csv")).unwrap();
    assert!(parse_history(&history).unwrap().is_empty());
    let loaded = organiq::gan::load_model(&model).unwrap();
    assert_eq!(loaded.config.seed, 42);
    assert_eq!(loaded.config.iterations, 0);
}

#[test]
fn train_short_run_reports_frechet() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (common::images_path(), common::labels_path());
    let model = dir.path().join("m.json");
    let history = dir.path().join("h.csv");
    let out = organiq(&train_args(
        s(&images),
        s(&labels),
        s(&model),
        &[
            "--iters",
            "4",
            "--batch",
            "5",
            "--eval-every",
            "2",
            "--eval-count",
            "8",
            "--history",
            s(&history),
        ],
    ));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("final_frechet ") && stdout.contains("best_frechet "),
        "{stdout}"
    );
    let records = parse_history(&fs::read_to_string(&history).unwrap()).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records[1].val_frechet.is_some() && records[0].val_frechet.is_none());
}

#[test]
fn baseline_ignores_ablation_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (common::images_path(), common::labels_path());
    let model = dir.path().join("b.json");
    let out = organiq(&train_args(
        s(&images),
        s(&labels),
        s(&model),
        &["--mode", "baseline", "--no-injection", "--iters", "0"],
    ));
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ignored"));
    let loaded = organiq::gan::load_model(&model).unwrap();
    assert!(!loaded.config.ablations.any());
    assert!(loaded.injection.is_none());
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (common::images_path(), common::labels_path());
    let model = dir.path().join("m.json");
    for extra in [
        &["--class", "12"][..],
        &["--mode", "hybrid"],
        &["--iters", "-1"],
        &["--bogus"],
    ] {
        let out = organiq(&train_args(s(&images), s(&labels), s(&model), extra));
        assert_eq!(code(&out), 2, "{extra:?}");
    }
    assert_eq!(code(&organiq(&["train", "--images", s(&images)])), 2);
    assert_eq!(code(&organiq(&[])), 2);
    let out = organiq(&train_args(s(&images), s(&labels), s(&model), &["--batch", "0"]));
    assert_eq!(code(&out), 2);
}

#[test]
fn runtime_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.idx");
    let labels = common::labels_path();
    let out = organiq(&train_args(s(&missing), s(&labels), s(&dir.path().join("m.json")), &[]));
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = organiq(&[
        "generate",
        "--model",
        s(&dir.path().join("none.json")),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn generate_writes_numbered_pgms_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (common::images_path(), common::labels_path());
    let model = dir.path().join("m.json");
    assert_eq!(
        code(&organiq(&train_args(
            s(&images),
            s(&labels),
            s(&model),
            &["--iters", "0"]
        ))),
        0
    );

    let one = dir.path().join("one");
    let out = organiq(&[
        "generate",
        "--model",
        s(&model),
        "--count",
        "1",
        "--out-dir",
        s(&one),
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0);
    let mut names: Vec<String> = fs::read_dir(&one)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["img_00000.pgm", "manifest.csv"]);
    assert_eq!(
        fs::read_to_string(one.join("manifest.csv")).unwrap(),
        "filename,seed\nimg_00000.pgm,3\n"
    );
    assert_eq!(
        fs::read(one.join("img_00000.pgm")).unwrap().len(),
        "P5\n28 28\n255\n".len() + 784
    );

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = organiq(&[
            "generate",
            "--model",
            s(&model),
            "--count",
            "12",
            "--out-dir",
            s(d),
            "--seed",
            "9",
        ]);
        assert_eq!(code(&out), 0);
    }
    for i in 0..12 {
        let name = format!("img_{i:05}.pgm");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
    assert_eq!(
        code(&organiq(&[
            "generate",
            "--model",
            s(&model),
            "--count",
            "0",
            "--out-dir",
            s(&a)
        ])),
        2
    );
}

fn score(extra: &[&str], generated: &Path) -> Output {
    let (images, labels) = (common::images_path(), common::labels_path());
    let mut args = vec![
        "score",
        "--real-images",
        s(&images),
        "--real-labels",
        s(&labels),
        "--class",
        "0",
        "--generated",
        s(generated),
    ];
    args.extend_from_slice(extra);
    organiq(&args)
}

fn value(out: &Output) -> f64 {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 1);
    text.trim().parse().unwrap()
}

#[test]
fn score_real_samples_against_their_class() {
    let dir = tempfile::tempdir().unwrap();
    let same = dir.path().join("same");
    let other = dir.path().join("other");
    fs::create_dir_all(&same).unwrap();
    fs::create_dir_all(&other).unwrap();
    let zeros = common::class_images(0);
    let ones = common::class_images(1);
    for i in 0..100 {
        write_pgm(zeros.images.row(2 * i + 1), same.join(format!("img_{i:05}.pgm"))).unwrap();
        write_pgm(ones.images.row(i), other.join(format!("img_{i:05}.pgm"))).unwrap();
    }
    let near = value(&score(&["--features", "pixels"], &same));
    let far = value(&score(&["--features", "pixels"], &other));
    assert!(near >= 0.0 && near.is_finite());
    assert!(near < 0.25 * far, "same class {near}, other class {far}");

    assert_eq!(code(&score(&["--features", "pca"], &same)), 2);

    let model = dir.path().join("m.json");
    let (images, labels) = (common::images_path(), common::labels_path());
    assert_eq!(
        code(&organiq(&train_args(
            s(&images),
            s(&labels),
            s(&model),
            &["--iters", "0"]
        ))),
        0
    );
    let pca_near = value(&score(&["--features", "pca", "--model", s(&model)], &same));
    let pca_far = value(&score(&["--features", "pca", "--model", s(&model)], &other));
    assert!(pca_near < pca_far);
    assert_eq!(code(&score(&["--features", "pixels", "--model", s(&model)], &same)), 2);
}
