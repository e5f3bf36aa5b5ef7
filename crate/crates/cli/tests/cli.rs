use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn evoq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoq"))
        .args(args)
        .output()
        .expect("spawn evoq")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    p.to_str().unwrap().to_string()
}

const TINY: &str = r#"
environment = "CartPole-v1"
grammar = "cp.bnf"
family = "orthogonal"
training_episodes = 2
runs = 2
test_episodes = 5
validation_episodes = 5
max_steps = 200

[evolution]
population_size = 8
generations = 3
genotype_length = 64
gene_mutation_probability = 0.1
"#;

const GRAMMAR: &str = "\
dt ::= <if>
if ::= if <condition> then <action> else <action>
condition ::= theta <comp_op> <c> | omega <comp_op> <c>
action ::= leaf | <if>
comp_op ::= lt | gt
c ::= range(-0.2, 0.2, 0.01)
";

fn tiny_config(dir: &Path) -> PathBuf {
    std::fs::write(dir.join("cp.bnf"), GRAMMAR).unwrap();
    let p = dir.join("tiny.toml");
    std::fs::write(&p, TINY).unwrap();
    p
}

#[test]
fn inspect_prints_rules_report_and_dot() {
    let out = stdout(&evoq(&["inspect", &fixture("cartpole_orthogonal.json")]));
    assert!(out.contains("if omega < 0.074 then"));
    assert!(out.contains("if theta < 0.022 then"));
    assert!(out.contains("M = 35.60"));
    assert!(out.contains("digraph"));
}

#[test]
fn inspect_keeps_full_precision() {
    let out = stdout(&evoq(&["inspect", &fixture("lunarlander_oblique.json")]));
    assert!(out.contains("0.401*p_x - 0.104*p_y"));
}

#[test]
fn test_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let out = stdout(&evoq(&[
        "test",
        &fixture("cartpole_oblique.json"),
        "--env",
        "CartPole-v1",
        "--episodes",
        "10",
        "--output",
        json.to_str().unwrap(),
    ]));
    assert!(out.contains("mean 500.00 std 0.00"), "{out}");
    let text = std::fs::read_to_string(json).unwrap();
    assert!(text.contains("\"max_steps\": 500"));
}

#[test]
fn train_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        stdout(&evoq(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            workers,
            "--output",
            out.to_str().unwrap(),
        ]));
        outputs.push(out);
    }
    for f in [
        "run_0.json",
        "run_1.json",
        "history_1.jsonl",
        "results.json",
        "summary.csv",
    ] {
        let a = std::fs::read(outputs[0].join(f)).unwrap();
        let b = std::fs::read(outputs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn train_seed_override_changes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let run = |seed: &str| {
        let out = dir.path().join(format!("s{seed}"));
        stdout(&evoq(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--runs",
            "1",
            "--output",
            out.to_str().unwrap(),
        ]));
        std::fs::read_to_string(out.join("run_0.json")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn compare_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.json");
    std::fs::write(&p, "[1, 2, 3, 4, 5]").unwrap();
    let out = stdout(&evoq(&[
        "compare",
        p.to_str().unwrap(),
        p.to_str().unwrap(),
    ]));
    assert!(out.contains("p = 1.000000"), "{out}");
    assert!(out.contains("not significant"));
}

#[test]
fn sweep_zero_sigma_matches_test() {
    let tree = fixture("cartpole_orthogonal.json");
    let csv = stdout(&evoq(&[
        "sweep",
        &tree,
        "--env",
        "cartpole",
        "--sigmas",
        "0",
        "--episodes",
        "20",
        "--seed",
        "3",
    ]));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let test = stdout(&evoq(&[
        "test",
        &tree,
        "--env",
        "cartpole",
        "--episodes",
        "20",
        "--seed",
        "3",
    ]));
    let mean: f64 = row[1].parse().unwrap();
    assert!(
        test.contains(&format!("mean {mean:.2}")),
        "{test} vs {mean}"
    );
}

#[test]
fn stability_csv_has_one_row_per_step() {
    let csv = stdout(&evoq(&[
        "sweep",
        &fixture("cartpole_oblique.json"),
        "--env",
        "cartpole",
        "--stability",
        "--episodes",
        "5",
    ]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,mean_distance");
    assert_eq!(lines.len(), 501);
}

#[test]
fn simplify_writes_a_loadable_tree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    stdout(&evoq(&[
        "simplify",
        &fixture("mountaincar_orthogonal.json"),
        "--env",
        "MountainCar-v0",
        "--episodes",
        "10",
        "--output",
        out.to_str().unwrap(),
    ]));
    stdout(&evoq(&["inspect", out.to_str().unwrap()]));
}

#[test]
fn errors_exit_nonzero_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "environment = \"CartPole-v1\"\nrunz = 3\n").unwrap();
    let o = evoq(&["train", "--config", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml"), "{err}");

    let o = evoq(&[
        "test",
        &fixture("cartpole_orthogonal.json"),
        "--env",
        "MountainCar-v0",
    ]);
    assert!(!o.status.success());
}
