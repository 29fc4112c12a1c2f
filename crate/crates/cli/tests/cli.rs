use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("{name}.txt"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pldpch")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn rate_of_bundled_matrices() {
    let r4 = data("b7x11_r4");
    let out = ok(&["rate", "--proto", r4.to_str().unwrap(), "--z1", "32", "--z2", "512"]);
    assert_eq!(out, "rate 4/81 ≈ 0.0494\nk 65536\nn_total 1327104\n");
    let r10 = data("b6x24_r10");
    assert_eq!(ok(&["rate", "--proto", r10.to_str().unwrap()]), "rate 18/6096 ≈ 0.00295\n");
    let out = ok(&["rate", "--proto", r4.to_str().unwrap(), "--puncture-cols", "6,8"]);
    assert_eq!(out, "rate 4/79 ≈ 0.0506\n");
    let out = ok(&["rate", "--proto", "builtin:b6x10_r5", "--z1", "32", "--z2", "512"]);
    assert_eq!(out, "rate 4/190 ≈ 0.0211\nk 65536\nn_total 3112960\n");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["rate"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["rate", "--proto", "/nonexistent/b.txt"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 3\n1 1 1\n1 q 1\n").unwrap();
    let o = run(&["rate", "--proto", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    // An entry of 3 cannot be lifted with z1 = 2.
    let o = run(&["lift", "--proto", "builtin:b7x11_r4", "--z1", "2", "--z2", "8", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["rate", "--proto", "builtin:b7x11_r4", "--puncture-d1h", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.toml");
    std::fs::write(&c, "m = 7\nn = 11\nrow_weight = 6\nmin_col_weight = 1\nmax_col_weight = 9\nmax_entry = 3\n").unwrap();
    assert_eq!(ok(&["validate", "--proto", "builtin:b7x11_r4", "--constraints", c.to_str().unwrap()]), "ok\n");
    std::fs::write(&c, "m = 7\nn = 11\nrow_weight = 6\nmin_col_weight = 1\nmax_col_weight = 9\nmax_entry = 2\n").unwrap();
    let o = run(&["validate", "--proto", "builtin:b7x11_r4", "--constraints", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("entry (0, 8) = 3"), "{err}");
    std::fs::write(&c, "m = 7\nn = \"x\"\n").unwrap();
    assert_eq!(run(&["validate", "--proto", "builtin:b7x11_r4", "--constraints", c.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn lift_full_size_table_and_girth_of_reduced_one() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.txt");
    ok(&["lift", "--proto", "builtin:b7x11_r4", "--z1", "32", "--z2", "512", "--seed", "1", "--out", t.to_str().unwrap()]);
    let text = std::fs::read_to_string(&t).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 224);
    assert!(rows.iter().all(|r| r.split_whitespace().count() == 6));
    let small = dir.path().join("s.txt");
    ok(&["lift", "--proto", "builtin:b7x11_r4", "--z1", "4", "--z2", "16", "--seed", "1", "--out", small.to_str().unwrap()]);
    let g = ok(&["girth", "--table", small.to_str().unwrap(), "--cap", "12"]);
    let v: usize = g.trim().strip_prefix("girth ").unwrap().parse().unwrap();
    assert!(v >= 4 && v % 2 == 0);
    let again = ok(&["lift", "--proto", "builtin:b7x11_r4", "--z1", "4", "--z2", "16", "--seed", "1"]);
    assert_eq!(again, std::fs::read_to_string(&small).unwrap());
}

#[test]
fn pexit_start_at_floor_and_determinism() {
    let out = ok(&["pexit", "--proto", "builtin:b7x11_r4", "--start-db", "-1.59"]);
    assert_eq!(out, "ebn0_db,converged,iterations,min_i_app\nthreshold above start (-1.59 dB)\n");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let args = |p: &Path, w: &str| {
        vec!["pexit".to_string(), "--proto".into(), "builtin:b7x11_r4".into(), "--start-db".into(), "0.5".into(), "--w".into(), "300".into(),
             "--max-iters".into(), "4".into(), "--seed".into(), "9".into(), "--workers".into(), w.into(), "--out".into(), p.to_str().unwrap().into()]
    };
    let oa = ok(&args(&a, "1").iter().map(String::as_str).collect::<Vec<_>>());
    let ob = ok(&args(&b, "3").iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(oa, ob);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("ebn0_db,converged,iterations,min_i_app"));
    assert_eq!(text.lines().nth(1).unwrap().split(',').next(), Some("0.5"));
}

#[test]
fn search_small_budget() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.toml");
    std::fs::write(&c, "m = 3\nn = 4\nrow_weight = 6\nmin_col_weight = 1\nmax_col_weight = 9\nmax_entry = 3\n").unwrap();
    let best = dir.path().join("best.txt");
    let args = ["search", "--constraints", c.to_str().unwrap(), "--budget", "2", "--seed", "5", "--start-db", "3.0", "--w", "200",
                "--max-iters", "20", "--out", best.to_str().unwrap()];
    let o1 = ok(&args);
    let o2 = ok(&args);
    assert_eq!(o1, o2);
    assert_eq!(o1.lines().filter(|l| l.starts_with("candidate")).count(), 2);
    if o1.contains("best threshold") {
        let text = std::fs::read_to_string(&best).unwrap();
        assert!(text.starts_with("# threshold"));
    }
    std::fs::write(&c, "m = 3\nn = 4\nrow_weight = 6\nmin_col_weight = 1\nmax_col_weight = 9\nmax_entry = 1\n").unwrap();
    assert_eq!(run(&["search", "--constraints", c.to_str().unwrap(), "--budget", "1", "--seed", "1"]).status.code(), Some(3));
}

#[test]
fn simulate_campaign_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!(
            "proto = {:?}\nz1 = 4\nz2 = 8\nlift_seed = 1\nseed = 2\nebn0_db = [0.5, -1.0, 0.0, -0.5]\nframe_errors = 5\nmax_frames = 40\nmax_iters = 50\nout = \"r.csv\"\n",
            data("b7x11_r4")
        ),
    )
    .unwrap();
    let msg = ok(&["simulate", "--config", cfg.to_str().unwrap(), "--workers", "2"]);
    assert!(msg.contains("4 point(s)"));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ebn0_db,frames,ber,fer,avg_iters");
    assert_eq!(lines.len(), 5);
    let dbs: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(dbs, vec![-1.0, -0.5, 0.0, 0.5]);
    let again = ok(&["simulate", "--config", cfg.to_str().unwrap(), "--workers", "1", "--ebn0", "-1,-0.5,0,0.5", "--out", "/dev/stdout"]);
    assert!(again.starts_with(&text));
}
