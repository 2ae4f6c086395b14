use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const HEADER: &str = "step,work_units,matching_size,mu_exact,ratio,rebuild_flag";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynmatch")).args(args).output().expect("spawn")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dynmatch-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn ratios(csv: &str) -> Vec<f64> {
    csv.lines().skip(1).filter_map(|l| l.split(',').nth(4).filter(|r| !r.is_empty()).map(|r| r.parse().unwrap())).collect()
}

#[test]
fn gen_zero_steps_is_header_only() {
    let out = bin(&["gen", "--n", "9", "--steps", "0"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "9\n");
}

#[test]
fn empty_stream_gives_header_only_csv() {
    let stream = tmp("empty.txt");
    fs::write(&stream, "16\n").unwrap();
    let out = bin(&["run", "--algo", "damaged-edcs", "--stream", stream.to_str().unwrap(), "--verify-every", "1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), format!("{HEADER}\n"));
}

#[test]
fn uniform_lambda_at_beta_fails() {
    let out = bin(&["run", "--algo", "uniform-sparsify", "--lambda", "1", "--beta", "1", "--n", "10", "--steps", "5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fractional matching"));
}

#[test]
fn bad_arguments_fail() {
    assert!(!bin(&["run", "--algo", "nope", "--n", "4"]).status.success());
    assert!(!bin(&["run", "--steps", "5"]).status.success());
}

#[test]
fn gen_and_run_are_deterministic() {
    for kind in ["erdos-renyi-dynamic", "sliding-window", "planted-matching-adversarial"] {
        let a = bin(&["gen", "--kind", kind, "--n", "20", "--steps", "100", "--seed", "4"]);
        let b = bin(&["gen", "--kind", kind, "--n", "20", "--steps", "100", "--seed", "4"]);
        assert_eq!(a.stdout, b.stdout);
        let path = tmp(&format!("{kind}.txt"));
        fs::write(&path, &a.stdout).unwrap();
        for algo in ["damaged-edcs", "damaged-edcs-batch", "worstcase-3-2", "uniform-sparsify", "uniform-sparsify-batch"] {
            let args = ["run", "--algo", algo, "--stream", path.to_str().unwrap(), "--verify-every", "7"];
            let x = bin(&args);
            let y = bin(&args);
            assert!(x.status.success(), "{algo} {kind}: {}", String::from_utf8_lossy(&x.stderr));
            assert_eq!(x.stdout, y.stdout, "{algo} {kind}");
            let csv = String::from_utf8(x.stdout).unwrap();
            assert_eq!(csv.lines().count(), 101);
            assert_eq!(ratios(&csv).len(), 15);
        }
    }
}

#[test]
fn bench_is_deterministic() {
    let args = ["bench", "--n", "32", "--kind", "sliding-window", "--steps", "300", "--seed", "2"];
    let a = bin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, bin(&args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("amortized: steps=300"));
    assert!(text.contains("\nscheduled: steps=300"));
}

#[test]
fn worstcase_long_run() {
    let metrics = tmp("worst.csv");
    let out = bin(&[
        "run", "--algo", "worstcase-3-2", "--n", "128", "--steps", "2000", "--seed", "1", "--verify-every", "50",
        "--metrics", metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&metrics).unwrap();
    assert_eq!(ratios(&csv).len(), 40);
}

#[test]
fn worstcase_reduced_ratio() {
    let metrics = tmp("reduced.csv");
    let out = bin(&[
        "run", "--algo", "worstcase-3-2", "--n", "128", "--steps", "2000", "--seed", "1", "--verify-every", "50",
        "--L", "2", "--C", "2", "--growth", "2", "--metrics", metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = ratios(&fs::read_to_string(&metrics).unwrap());
    assert_eq!(r.len(), 40);
    assert!(r.iter().all(|&x| x <= 1.5 + 0.5), "{r:?}");
}
