use std::path::Path;
use std::process::{Command, Output};

fn lfr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfr")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = lfr(args);
    assert!(
        out.status.success(),
        "lfr {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_disparity_refocus_eval_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("scene");
    ok(&[
        "synth", "--out", p(&data), "--hr-size", "64", "--grid", "3x3", "--scale", "2",
        "--planes", "1;2.5@0.25,0.25,0.75,0.75", "--noise", "0.002", "--seed", "3",
    ]);
    for name in ["meta.json", "view_0_0.png", "view_2_2.png", "gt.png", "gt_disparity.pfm", "gt_disparity_hr.pfm"] {
        assert!(data.join(name).is_file(), "{name}");
    }
    let meta = std::fs::read_to_string(data.join("meta.json")).unwrap();
    assert!(meta.contains("disparity_range"));

    let disp = tmp.path().join("disp.pfm");
    ok(&["disparity", "--input", p(&data), "--out", p(&disp), "--n", "13", "--range", "0:3", "--window", "5"]);
    let est = lfr_core::lf_data::load_disparity(&disp).unwrap();
    assert_eq!((est.height(), est.width()), (32, 32));
    assert!((est.get(16, 16) - 2.5).abs() <= 0.5);

    let out = tmp.path().join("out.png");
    let inter = tmp.path().join("inter");
    let stdout = ok(&[
        "refocus", "--input", p(&data), "--disparity", p(&disp), "--df", "2.5", "--k", "1.5", "--scale", "2",
        "--noi", "4", "--step", "0.1", "--lambda-b", "5", "--lambda-btv", "0.2", "--a", "15", "--b", "0.3",
        "--out", p(&out), "--save-intermediates", p(&inter),
    ]);
    assert!(stdout.contains("objective"));
    let img = lfr_core::lf_data::load_png(&out).unwrap();
    assert_eq!((img.height(), img.width()), (64, 64));
    for name in ["disparity.pfm", "disparity_hr.pfm", "radius.pfm", "weights.pfm", "bokeh.png", "objective.csv"] {
        assert!(inter.join(name).is_file(), "{name}");
    }
    let trace = std::fs::read_to_string(inter.join("objective.csv")).unwrap();
    assert_eq!(trace.lines().count(), 6);

    let eval = ok(&[
        "eval", "--result", p(&out), "--gt", p(&data.join("gt.png")), "--weights", p(&inter.join("weights.pfm")),
        "--threshold", "0.5",
    ]);
    let psnr: f64 = eval.trim().strip_prefix("psnr_db ").unwrap().parse().unwrap();
    assert!(psnr > 15.0, "{psnr}");

    // estimated disparity and backtracking
    ok(&[
        "refocus", "--input", p(&data), "--df", "1", "--k", "1", "--noi", "2", "--backtracking", "--out",
        p(&tmp.path().join("far.png")),
    ]);

    let csv_path = tmp.path().join("timings.csv");
    ok(&["profile", "--input", p(&data), "--k-list", "1,2", "--noi-list", "1,2", "--out", p(&csv_path)]);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "k,noi,disparity_s,bokeh_s,sr_s,total_s");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,1,") && lines[4].starts_with("2,2,"));
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nothing");
    let out = lfr(&["refocus", "--input", p(&missing), "--df", "1", "--k", "1", "--out", p(&tmp.path().join("o.png"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("meta.json"), "{err}");

    let out = lfr(&["synth", "--out", p(tmp.path()), "--planes", "x@1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("planes"));

    let data = tmp.path().join("scene");
    ok(&["synth", "--out", p(&data), "--hr-size", "32", "--planes", "1", "--grid", "3x3"]);
    let out = lfr(&["refocus", "--input", p(&data), "--df", "1", "--k", "-1", "--out", p(&tmp.path().join("o.png"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("k"));

    let single = tmp.path().join("single");
    ok(&["synth", "--out", p(&single), "--hr-size", "32", "--planes", "1", "--grid", "1x1"]);
    let out = lfr(&["refocus", "--input", p(&single), "--df", "1", "--k", "1", "--out", p(&tmp.path().join("o.png"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("single view"));
}
