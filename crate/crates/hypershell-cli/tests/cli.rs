use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypershell"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hypershell-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const RATIONAL_FORM: &str = "dim = 5\nplus_block = [[1,0,0],[0,1,0],[0,0,1]]\nminus_block = [[1,0],[0,1]]\n";

fn run(args: &[&str]) -> Output {
    exe().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn count_row_matches_the_library() {
    let dir = scratch("count");
    let form = write(&dir, "f.toml", "diagonal = [1, -1]\n");
    let o = run(&["count", "--form", form.to_str().unwrap(), "--a", "-1", "--b", "1", "--r", "3"]);
    assert!(o.status.success());
    // brute force over the 7×7 box
    let mut want = 0;
    for x in -3i64..=3 {
        for y in -3i64..=3 {
            want += ((x * x - y * y).abs() <= 1) as u32;
        }
    }
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,a,b,count,work,algo,seconds"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[3], want.to_string());
    assert_eq!(row[5], "block_split");
    assert_eq!(row[6], "");
}

#[test]
fn out_writes_csv_and_sidecar() {
    let dir = scratch("sidecar");
    let form = write(&dir, "f.toml", RATIONAL_FORM);
    let out = dir.join("res/count.csv");
    let o = run(&["--seed", "4", "count", "--form", form.to_str().unwrap(), "--a", "-1", "--b", "1", "--r", "2,3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("res/count.json")).unwrap()).unwrap();
    assert_eq!(side["command"], "count");
    assert_eq!(side["seed"], 4);
    assert_eq!(side["rows"], 2);
    assert_eq!(side["exit_status"], 0);
    assert_eq!(side["form"]["source"], RATIONAL_FORM);
    assert_eq!(side["config"]["command"]["r"], "2,3");
    assert!(side["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(side["version"].is_string());
}

#[test]
fn dry_run_writes_nothing() {
    let dir = scratch("dry");
    let form = write(&dir, "f.toml", RATIONAL_FORM);
    let out = dir.join("x.csv");
    let o = run(&["--dry-run", "count", "--form", form.to_str().unwrap(), "--a", "-1", "--b", "1", "--r", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("estimated work"));
    assert!(!out.exists());
    assert!(!dir.join("x.json").exists());
}

#[test]
fn empty_r_list_is_a_config_error() {
    let dir = scratch("empty");
    let form = write(&dir, "f.toml", RATIONAL_FORM);
    let o = run(&["delta", "--form", form.to_str().unwrap(), "--a", "-1", "--b", "1", "--r-list", ""]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
}

#[test]
fn precondition_violation_exits_2() {
    let dir = scratch("pre");
    let form = write(&dir, "f.toml", "diagonal = [1, 1, -1]\n");
    let cfg = write(&dir, "suite.toml", "checks = [\"multineq\", \"vol3_upper\"]\nsamples = 5000\n");
    let out = dir.join("s.csv");
    let o = run(&["suite", "--form", form.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--r-list", "4,8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("check,r,lhs,rhs,constant,pass\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("vol3_upper")).count(), 2);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("s.json")).unwrap()).unwrap();
    assert_eq!(side["exit_status"], 2);
    assert_eq!(side["precondition_violations"].as_array().unwrap().len(), 2);
    assert!(side["files"]["suite"].as_str().unwrap().contains("multineq"));
}

#[test]
fn bad_form_files_are_rejected() {
    let dir = scratch("bad");
    for (name, text) in [
        ("dim.toml", "dim = 3\ndiagonal = [1, -1]\n"),
        ("key.toml", "diagonal = [1, -1]\ncolour = 2\n"),
        ("both.toml", "diagonal = [1, -1]\nmatrix = [[1,0],[0,-1]]\n"),
        ("pd.toml", "plus_block = [[1]]\nminus_block = [[-1]]\n"),
    ] {
        let f = write(&dir, name, text);
        let o = run(&["count", "--form", f.to_str().unwrap(), "--a", "0", "--b", "1", "--r", "2"]);
        assert_eq!(o.status.code(), Some(1), "{name}");
    }
}

#[test]
fn experiment_file_matches_the_direct_command() {
    let dir = scratch("exp");
    write(&dir, "f.toml", "diagonal = [1, 1, 1, \"-sqrt(2)\", \"-sqrt(2)\"]\n");
    let exp = write(
        &dir,
        "exp.toml",
        "operation = \"delta\"\nform = \"f.toml\"\nout = \"delta.csv\"\nseed = 3\n[params]\na = -1\nb = 1\nr_list = [4, 6]\nsamples = 20000\n",
    );
    let o = run(&["run", "--config", exp.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let from_file = std::fs::read_to_string(dir.join("delta.csv")).unwrap();
    assert_eq!(from_file.lines().count(), 3);
    let direct = run(&["--seed", "3", "delta", "--form", dir.join("f.toml").to_str().unwrap(), "--a", "-1", "--b", "1", "--r-list", "4,6", "--samples", "20000"]);
    assert_eq!(stdout(&direct), from_file);
}

#[test]
fn experiment_with_empty_r_list_fails() {
    let dir = scratch("exp-empty");
    write(&dir, "f.toml", RATIONAL_FORM);
    let exp = write(&dir, "exp.toml", "operation = \"gaps\"\nform = \"f.toml\"\n[params]\nr_list = []\n");
    let o = run(&["run", "--config", exp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn experiment_with_missing_form_fails() {
    let dir = scratch("exp-missing");
    let exp = write(&dir, "exp.toml", "operation = \"gaps\"\nform = \"nowhere.toml\"\n[params]\nr_list = [2]\n");
    let o = run(&["run", "--config", exp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = scratch("threads");
    let form = write(&dir, "f.toml", "diagonal = [1, 1, -2]\n");
    let f = form.to_str().unwrap();
    let args = ["delta", "--form", f, "--a", "-1", "--b", "2", "--r-list", "5", "--samples", "30000"];
    let one = exe().args(args).args(["--threads", "1"]).output().unwrap();
    let env = exe().args(args).env("HYPERSHELL_THREADS", "3").output().unwrap();
    assert!(one.status.success() && env.status.success());
    assert_eq!(one.stdout, env.stdout);
}

#[test]
fn theta_row_has_sum_and_integral() {
    let dir = scratch("theta");
    let form = write(&dir, "f.toml", "diagonal = [1]\n");
    // Q = m², z = 3 and r large: Σ exp(−(3 + 2/r²) m²) ≈ Σ exp(−3m²)
    let o = run(&["theta", "--form", form.to_str().unwrap(), "--r", "1000000", "--z", "3,0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[3] - 1.099_586_4).abs() < 1e-7);
    assert!((row[7] - (std::f64::consts::PI / 3.0).sqrt()).abs() < 1e-6);
}
