use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fmsat(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmsat"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn stats_row_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.cnf"), "p cnf 2 2\n1 0\n2 0\n").unwrap();
    let o = fmsat(&["stats", "a.cnf", "--csv"], dir.path());
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "name,vars,clauses,horn,anti_horn,binary,other,pure_vars\na.cnf,2,2,100.00,100.00,0.00,0.00,100.00\n"
    );

    fs::write(dir.path().join("bad.cnf"), "p cnf x\n").unwrap();
    let o = fmsat(&["stats", "a.cnf", "bad.cnf", "--csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = fmsat(&["stats", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = fmsat(&["stats", "a.cnf", "--simplify", "--csv"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("a.cnf,2,2,2,SAT,0,0,NA,NA,NA,NA,NA"));
}

#[test]
fn solve_json_and_toggles() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.cnf"), "p cnf 3 3\n1 2 0\n-1 3 0\n-3 0\n").unwrap();
    for flags in [
        &[][..],
        &["--no-learning", "--no-restarts", "--no-vsids"][..],
    ] {
        let mut args = vec!["solve", "--in", "f.cnf", "--json", "--seed", "4"];
        args.extend_from_slice(flags);
        let o = fmsat(&args, dir.path());
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["verdict"], "SAT");
        assert_eq!(v["model"], serde_json::json!([-1, 2, -3]));
        assert!(v["metrics"]["conflicts"].is_u64());
    }
    fs::write(dir.path().join("u.cnf"), "p cnf 1 2\n1 0\n-1 0\n").unwrap();
    let o = fmsat(&["solve", "--in", "u.cnf"], dir.path());
    assert!(stdout(&o).starts_with("s UNSATISFIABLE"));
}

#[test]
fn simplify_writes_core_and_trail() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("f.cnf"),
        "p cnf 4 4\n1 0\n-1 2 0\n-2 3 4 0\n-3 4 0\n",
    )
    .unwrap();
    let o = fmsat(
        &[
            "simplify",
            "--in",
            "f.cnf",
            "--out",
            "core.cnf",
            "--trail",
            "trail.json",
            "--max-passes",
            "5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let core = fs::read_to_string(dir.path().join("core.cnf")).unwrap();
    assert!(core.starts_with("p cnf"));
    let trail: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trail.json")).unwrap()).unwrap();
    assert_eq!(trail["original_vars"], 4);
    assert!(trail["steps"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["kind"].is_string()));
}

#[test]
fn profile_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.cnf"), "p cnf 3 2\n1 2 0\n-1 3 0\n").unwrap();
    let o = fmsat(
        &["profile", "--in", "f.cnf", "--out", "t.csv", "--every", "1"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "tick,decisions,conflicts,unassigned,unrestricted,pos_restricted,neg_restricted,unknown,context_unsat"
    );
    let o = fmsat(
        &["profile", "--in", "f.cnf", "--oracle", "nope"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn backdoor_modes_and_audit_batch() {
    let dir = tempfile::tempdir().unwrap();
    let cnfs = dir.path().join("cnfs");
    fs::create_dir(&cnfs).unwrap();
    fs::write(cnfs.join("a.cnf"), "p cnf 3 2\n1 2 0\n-1 3 0\n").unwrap();
    fs::write(cnfs.join("b.cnf"), "p cnf 2 1\n1 2 0\n").unwrap();

    let o = fmsat(
        &["backdoor", "--in", "cnfs/a.cnf", "--mode", "fpt", "--json"],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["size"], 2);
    let o = fmsat(
        &[
            "backdoor",
            "--in",
            "cnfs/a.cnf",
            "--mode",
            "brute",
            "--k",
            "1",
            "--json",
        ],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["found"], false);
    let o = fmsat(
        &[
            "backdoor",
            "--in",
            "cnfs/b.cnf",
            "--mode",
            "strong",
            "--json",
        ],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["size"], 1);

    let o = fmsat(
        &["backdoor", "--in", "cnfs", "--mode", "audit", "--json"],
        dir.path(),
    );
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["source"], "a.cnf");
    assert_eq!(lines[1]["source"], "b.cnf");
    assert!(lines
        .iter()
        .all(|l| l["holds_leq"] == true && l["holds_complement"] == true));
}

#[test]
fn gen_is_deterministic_and_encode_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = fmsat(
        &[
            "gen",
            "ksat",
            "--n",
            "30",
            "--density",
            "4.25",
            "--seed",
            "9",
        ],
        dir.path(),
    );
    let b = fmsat(
        &[
            "gen",
            "ksat",
            "--n",
            "30",
            "--density",
            "4.25",
            "--seed",
            "9",
        ],
        dir.path(),
    );
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("p cnf 30 128"));

    let o = fmsat(
        &[
            "gen",
            "hornmix",
            "--n",
            "20",
            "--m",
            "40",
            "--horn-fraction",
            "1.0",
        ],
        dir.path(),
    );
    fs::write(dir.path().join("h.cnf"), &o.stdout).unwrap();
    let o = fmsat(&["stats", "h.cnf", "--csv"], dir.path());
    assert_eq!(
        stdout(&o).lines().nth(1).unwrap().split(',').nth(3),
        Some("100.00")
    );

    let o = fmsat(
        &[
            "gen", "hardfm", "--n", "6", "--m", "3", "--arity", "2", "--out", "fm.json",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let o = fmsat(
        &[
            "encode", "--in", "fm.json", "--out", "fm.cnf", "--map", "map.json",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let map: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("map.json")).unwrap()).unwrap();
    assert_eq!(map["features"]["root"]["presence"], 1);
    let o = fmsat(&["solve", "--in", "fm.cnf", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "SAT");

    let o = fmsat(&["gen", "nope", "--n", "3", "--m", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiments_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "exp",
        "phase",
        "--n",
        "12",
        "--from",
        "3",
        "--to",
        "5",
        "--step",
        "1",
        "--instances",
        "4",
        "--seed",
        "5",
        "--json",
    ];
    let a = fmsat(&args, dir.path());
    let b = fmsat(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 3);

    let o = fmsat(
        &[
            "exp",
            "horn",
            "--n",
            "20",
            "--m",
            "60",
            "--fractions",
            "0.5,1.0",
            "--instances",
            "3",
            "--csv",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);

    fs::write(dir.path().join("f.cnf"), "p cnf 3 2\n1 2 0\n-1 3 0\n").unwrap();
    let o = fmsat(
        &[
            "exp", "ablation", "f.cnf", "--seeds", "1,2", "--rows", "rows.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let rows = fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 8 * 2);
}
