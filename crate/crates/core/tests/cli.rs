use std::path::Path;
use std::process::{Command, Output};

fn gridsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridsim"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn small() -> Vec<&'static str> {
    vec![
        "--set",
        "workload.n_jobs=40",
        "--set",
        "topology.sites_per_region=4",
    ]
}

#[test]
fn run_writes_one_summary_row_and_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = dir.path().join("jobs.csv");
    let trace = dir.path().join("trace.tsv");
    let catalog = dir.path().join("catalog.csv");
    let mut args = vec!["run", "--strategy", "bhr", "--seed", "4", "--check"];
    args.extend(small());
    args.extend(["--dump-jobs", jobs.to_str().unwrap()]);
    args.extend(["--trace", trace.to_str().unwrap()]);
    args.extend(["--dump-catalog", catalog.to_str().unwrap()]);
    let out = stdout(&gridsim(&args));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("strategy,seed,n_jobs,wan_mbps"));
    assert!(lines[1].starts_with("bhr,4,40,10,1000,"));

    let jobs = std::fs::read_to_string(jobs).unwrap();
    assert_eq!(jobs.lines().count(), 41);
    let trace = std::fs::read_to_string(trace).unwrap();
    assert_eq!(
        trace
            .lines()
            .filter(|l| l.contains("\tJobComplete\t"))
            .count(),
        40
    );
    assert!(Path::new(&catalog).exists());
}

#[test]
fn unknown_strategy_exits_2_and_names_the_key() {
    let o = gridsim(&["run", "--strategy", "xyz"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("strategy"));
}

#[test]
fn bad_config_value_names_the_key() {
    let o = gridsim(&["run", "--set", "topology.wan_mbps=fast"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("topology.wan_mbps"));
}

#[test]
fn missing_config_file_exits_2() {
    let o = gridsim(&["run", "--config", "/nonexistent/grid.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_wan_emits_every_combination() {
    let mut args = vec!["sweep-wan", "--wan", "10,100,1000", "--seeds", "0..1"];
    args.extend(small());
    let out = stdout(&gridsim(&args));
    assert_eq!(out.lines().count(), 1 + 3 * 3 * 2);
}

#[test]
fn sweep_jobs_to_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let mut args = vec![
            "sweep-jobs",
            "--jobs",
            "20,40",
            "--strategies",
            "hrs,lru",
            "--seeds",
            "0,7",
        ];
        args.extend(small());
        args.extend(["--out", p.to_str().unwrap()]);
        stdout(&gridsim(&args));
    }
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 1 + 2 * 2 * 2);
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("grid.conf");
    std::fs::write(
        &conf,
        "# test\nseed = 9\ntopology.wan_mbps = 50\nstrategy = lru\n",
    )
    .unwrap();
    let c = conf.to_str().unwrap();
    let text = stdout(&gridsim(&[
        "print-config",
        "--config",
        c,
        "--set",
        "topology.wan_mbps=100",
    ]));
    assert!(text.contains("seed = 9"));
    assert!(text.contains("strategy = lru"));
    assert!(text.contains("topology.wan_mbps = 100"));
    assert!(text.contains("topology.lan_mbps = 1000"));
}

#[test]
fn printed_config_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("grid.conf");
    let text = stdout(&gridsim(&[
        "print-config",
        "--set",
        "workload.inter_arrival_s=7.5",
    ]));
    std::fs::write(&conf, &text).unwrap();
    let again = stdout(&gridsim(&[
        "print-config",
        "--config",
        conf.to_str().unwrap(),
    ]));
    assert_eq!(text, again);
}
