use std::path::Path;
use std::process::{Command, Output};

fn rlpa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlpa"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(rlpa(
        &[
            "synth",
            "--height",
            "30",
            "--width",
            "30",
            "--bands",
            "8",
            "--classes",
            "3",
            "--grid-rows",
            "1",
            "--grid-cols",
            "3",
            "--out-cube",
            "cube.raw",
            "--out-labels",
            "truth.txt",
            "--seed",
            "1",
        ],
        dir,
    ));
    ok(rlpa(
        &[
            "noisify",
            "--rho",
            "0.3",
            "--labels",
            "truth.txt",
            "--out",
            "noisy.txt",
            "--seed",
            "2",
        ],
        dir,
    ));
    ok(rlpa(
        &[
            "segment",
            "--cube",
            "cube.raw",
            "--superpixels",
            "9",
            "--out",
            "segmap.txt",
        ],
        dir,
    ));
    ok(rlpa(
        &[
            "cleanse",
            "--cube",
            "cube.raw",
            "--labels",
            "noisy.txt",
            "--clean",
            "truth.txt",
            "--segmap",
            "segmap.txt",
            "--rounds",
            "20",
            "--seed",
            "42",
            "--out",
            "cleaned.txt",
            "--diag",
            "diag.csv",
            "--transition",
            "t.txt",
        ],
        dir,
    ));
    let diag = std::fs::read_to_string(dir.join("diag.csv")).unwrap();
    let lines: Vec<&str> = diag.lines().collect();
    assert_eq!(lines[0], "round,cumulative_noisy,round_noisy");
    assert_eq!(lines.len(), 1 + 21);
    let initial: usize = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    let last: usize = lines[21].split(',').nth(1).unwrap().parse().unwrap();
    assert!(last < initial, "{last} >= {initial}");
    assert!(std::fs::read_to_string(dir.join("t.txt"))
        .unwrap()
        .starts_with("900 "));

    let eval = ok(rlpa(
        &[
            "evaluate",
            "--truth",
            "truth.txt",
            "--pred",
            "cleaned.txt",
            "--map",
            "map.ppm",
        ],
        dir,
    ));
    let stdout = String::from_utf8(eval.stdout).unwrap();
    assert!(stdout.starts_with("samples,oa,aa,kappa\n900,"));
    assert!(std::fs::read(dir.join("map.ppm"))
        .unwrap()
        .starts_with(b"P6\n30 30\n255\n"));
}

#[test]
fn classify_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("train_x.csv"), "0,0\n0,1\n5,5\n5,6\n").unwrap();
    std::fs::write(dir.join("train_y.txt"), "1\n1\n2\n2\n").unwrap();
    std::fs::write(dir.join("test_x.csv"), "0.2,0.4\n4.8,5.5\n").unwrap();
    for clf in ["nn", "elm"] {
        ok(rlpa(
            &[
                "classify",
                "--train-x",
                "train_x.csv",
                "--train-y",
                "train_y.txt",
                "--test-x",
                "test_x.csv",
                "--clf",
                clf,
                "--elm-hidden",
                "30",
                "--out",
                "pred.txt",
            ],
            dir,
        ));
        assert_eq!(
            std::fs::read_to_string(dir.join("pred.txt")).unwrap(),
            "1\n2\n"
        );
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // bad config value
    std::fs::write(dir.join("bad.cfg"), "rho = 2\n").unwrap();
    let out = rlpa(
        &["experiment", "--config", "bad.cfg", "--out", "r.csv"],
        dir,
    );
    assert_eq!(out.status.code(), Some(2));
    // missing config file
    let out = rlpa(
        &["experiment", "--config", "none.cfg", "--out", "r.csv"],
        dir,
    );
    assert_eq!(out.status.code(), Some(2));
    // unknown classifier
    let out = rlpa(
        &[
            "classify",
            "--train-x",
            "a",
            "--train-y",
            "b",
            "--test-x",
            "c",
            "--clf",
            "svm",
            "--out",
            "p",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(2));
    // malformed data
    std::fs::write(dir.join("labels.txt"), "1 2\n3\n").unwrap();
    let out = rlpa(
        &[
            "noisify",
            "--rho",
            "0.1",
            "--labels",
            "labels.txt",
            "--out",
            "n.txt",
        ],
        dir,
    );
    assert_eq!(out.status.code(), Some(3));
    // missing data file
    let out = rlpa(&["segment", "--cube", "missing.raw", "--out", "s.txt"], dir);
    assert_eq!(out.status.code(), Some(3));
    // usage error
    let out = rlpa(&["noisify"], dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_and_sweep_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("exp.cfg"),
        "synth_height = 24\nsynth_width = 24\nsynth_bands = 6\nsynth_classes = 4\nsynth_grid_rows = 2\nsynth_grid_cols = 2\n\
         split = per_class:20\nrho = 0.2\nseed = 0\nseed = 1\nrounds = 10\nsuperpixels = 16\nelm_hidden = 40\n\
         sweep_eta = 0.5\nsweep_eta = 0.7\nsweep_alpha = 0.9\nmap_dir = maps\n",
    )
    .unwrap();
    ok(rlpa(
        &[
            "experiment",
            "--config",
            "exp.cfg",
            "--out",
            "r.csv",
            "--meta",
            "meta.txt",
            "--seed",
            "3",
        ],
        dir,
    ));
    let csv = std::fs::read_to_string(dir.join("r.csv")).unwrap();
    // 2 methods x 2 classifiers x 1 rho x (2 seeds + mean)
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    assert!(csv.lines().any(|l| l.starts_with("rlpa,elm,0.2,mean,")));
    let meta = std::fs::read_to_string(dir.join("meta.txt")).unwrap();
    assert!(meta.contains("# master_seed = 3"));
    assert_eq!(std::fs::read_dir(dir.join("maps")).unwrap().count(), 8);

    ok(rlpa(
        &["sweep", "--config", "exp.cfg", "--out", "s.csv"],
        dir,
    ));
    let sweep = std::fs::read_to_string(dir.join("s.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
    ok(rlpa(
        &[
            "sweep", "--config", "exp.cfg", "--eta", "0.6", "--out", "s2.csv",
        ],
        dir,
    ));
    let sweep = std::fs::read_to_string(dir.join("s2.csv")).unwrap();
    assert!(sweep.lines().nth(1).unwrap().starts_with("0.6,0.9,"));
}
