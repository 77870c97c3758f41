use std::path::Path;
use std::process::{Command, Output};

fn seqmul(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqmul"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn mul_worked_example() {
    let out = seqmul(&["mul", "--n", "4", "--t", "2", "--a", "11", "--b", "13"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("accurate=143 approx=159\n"));
}

#[test]
fn mul_zero_and_library_agreement() {
    let out = seqmul(&["mul", "--n", "4", "--t", "2", "--a", "0", "--b", "13"]);
    assert!(stdout(&out).starts_with("accurate=0 approx=0\n"));
    let out = seqmul(&["mul", "--n", "8", "--t", "4", "--a", "200", "--b", "100"]);
    let expected = seqmul::multiplier::evaluate(200, 100, &seqmul::multiplier::MultiplierConfig::new(8, 4, true).unwrap()).product;
    assert!(stdout(&out).starts_with(&format!("accurate=20000 approx={expected}\n")));
}

#[test]
fn mul_trace_lists_every_cycle() {
    let out = seqmul(&["mul", "--n", "4", "--t", "2", "--a", "11", "--b", "13", "--trace"]);
    let text = stdout(&out);
    assert!(text.contains("\n2      1111 01001 0010   0    1   0\n"), "{text}");
    assert!(text.contains("\n3      1111 10011 1100   1    0   0\n"));
}

#[test]
fn metrics_csv_matches_golden_file() {
    let out = seqmul(&["metrics", "--n", "8", "--t", "4"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), include_str!("fixtures/metrics_8_4.csv"));
    let out = seqmul(&["metrics", "--n", "8", "--t", "4", "--accurate"]);
    assert_eq!(stdout(&out), include_str!("fixtures/metrics_8_4_accurate.csv"));
}

#[test]
fn metrics_json_mirrors_report_fields() {
    let out = seqmul(&["metrics", "--n", "6", "--t", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for field in [
        "config", "method", "er", "ber", "mae", "med_signed", "med_abs", "nmed",
        "mred_conventional", "mred_global", "sample_count", "seed",
    ] {
        assert!(v.get(field).is_some(), "missing {field}");
    }
    assert_eq!(v["mae"], 240);
}

#[test]
fn monte_carlo_replays_with_equal_seed() {
    let args = ["metrics", "--n", "20", "--t", "10", "--method", "mc", "--samples", "1048576", "--seed", "7"];
    let first = seqmul(&args);
    assert!(first.status.success());
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    assert_eq!(first.stdout, seqmul(&threaded).stdout);
    assert!(stdout(&first).contains("20,10,true,monte_carlo,er,"));
}

#[test]
fn estimate_method_reports_rows() {
    let out = seqmul(&["metrics", "--n", "8", "--t", "4", "--method", "estimate", "--depth", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("8,4,true,estimate,mae,2016,,\n"));
    assert!(text.contains("8,4,true,estimate,depth,2,,\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(seqmul(&["metrics", "--n", "15", "--t", "7"]).status.code(), Some(3));
    assert_eq!(seqmul(&["metrics", "--n", "8", "--t", "8"]).status.code(), Some(2));
    assert_eq!(seqmul(&["metrics", "--n", "4", "--t", "2", "--method", "estimate"]).status.code(), Some(2));
    assert_eq!(seqmul(&["nonsense"]).status.code(), Some(2));
    assert_eq!(seqmul(&["mul", "--n", "4", "--t", "2", "--a", "16", "--b", "1"]).status.code(), Some(2));
    assert_eq!(
        seqmul(&["metrics", "--n", "6", "--t", "3", "--out", "/nonexistent/dir/x.csv"]).status.code(),
        Some(4)
    );
    assert_eq!(seqmul(&["pareto", "--in", "/nonexistent.csv"]).status.code(), Some(4));
    assert_eq!(seqmul(&["sweep", "--n", "16", "--method", "exhaustive"]).status.code(), Some(3));
    assert_eq!(seqmul(&["--help"]).status.code(), Some(0));
}

#[test]
fn distribution_files_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("point.txt");
    let mut text = String::from("n=4\n");
    for v in 0..16 {
        text += if v == 11 { "1\n" } else { "0\n" };
    }
    std::fs::write(&path, text).unwrap();
    let b = dir.path().join("b.txt");
    let mut text = String::from("n=4\n");
    for v in 0..16 {
        text += if v == 13 { "1\n" } else { "0\n" };
    }
    std::fs::write(&b, text).unwrap();
    let out = seqmul(&[
        "metrics", "--n", "4", "--t", "2",
        "--dist-a", path.to_str().unwrap(), "--dist-b", b.to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("4,2,true,exhaustive,er,1,"), "{text}");
    assert!(text.contains("4,2,true,exhaustive,med_signed,-16,"));
}

#[test]
fn sweep_then_pareto() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("sweep.csv");
    let out = seqmul(&["sweep", "--n", "6,8", "--out", table.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&table).unwrap();
    let configs: Vec<String> = text
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(4) == Some("er"))
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        configs,
        ["6,2,false", "6,2,true", "6,3,false", "6,3,true", "8,2,false", "8,2,true", "8,3,false", "8,3,true", "8,4,false", "8,4,true"]
    );

    let front = seqmul(&["pareto", "--in", table.to_str().unwrap()]);
    assert!(front.status.success());

    // the front depends on the metric tuples only, not on row order
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].reverse();
    let shuffled = dir.path().join("shuffled.csv");
    std::fs::write(&shuffled, lines.join("\n") + "\n").unwrap();
    assert_eq!(seqmul(&["pareto", "--in", shuffled.to_str().unwrap()]).stdout, front.stdout);
}

#[test]
fn image_demo_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("cam");
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/camera512.pgm");
    let out = seqmul(&[
        "image-demo", "--in", fixture.to_str().unwrap(),
        "--n", "8", "--t", "4", "--out-prefix", prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let product = std::fs::read(dir.path().join("cam_product.pgm")).unwrap();
    assert!(product.starts_with(b"P5\n512 512\n65535\n"));
    let display = seqmul::imagedemo::load_pgm(&dir.path().join("cam_display.pgm")).unwrap();
    assert_eq!((display.width, display.height), (512, 512));
    let score: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("cam_score.json")).unwrap()).unwrap();
    let psnr = score["psnr"].as_f64().unwrap();
    assert!((35.0..=48.0).contains(&psnr));

    let p2 = dir.path().join("ascii.pgm");
    std::fs::write(&p2, "P2\n1 1\n255\n0\n").unwrap();
    let out = seqmul(&["image-demo", "--in", p2.to_str().unwrap(), "--out-prefix", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let out = seqmul(&["image-demo", "--in", fixture.to_str().unwrap(), "--n", "6", "--t", "3", "--out-prefix", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
