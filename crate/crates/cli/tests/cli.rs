use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pathdep_cli::{config_hash, config_to_toml, parse_config};

const SMALL: &str = r#"
experiments = ["forward", "grid_rate", "remainder"]
master_grid = 256
n_samples = 60
seed = 3

[model]
x0 = [0.0]
b = { kind = "zero", rows = 1, cols = 1 }
sigma = { kind = "constant", value = [[0.2]] }

[sweep]
kind = "dyadic"
min_cells = 4
max_cells = 32
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pathdep-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.in.toml");
    fs::write(&path, body).unwrap();
    path
}

fn pathdep(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pathdep"));
    cmd.args(args).env_remove("PATHDEP_SEED");
    if let Some(s) = env_seed {
        cmd.env("PATHDEP_SEED", s);
    }
    cmd.output().unwrap()
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    pathdep(&args, None)
}

#[test]
fn run_writes_tables_and_manifest() {
    let dir = scratch("run");
    let cfg = write_config(&dir, SMALL);
    let out = dir.join("out");
    let o = run(&cfg, &out, &["--workers", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["forward.csv", "grid_rate.csv", "remainder.csv", "config.toml", "manifest.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 3"));
    assert!(manifest.contains("files = [\"forward.csv\", \"grid_rate.csv\", \"remainder.csv\", \"config.toml\"]"));

    // constant σ: p_exceed is non-increasing in n at every ε
    let table = fs::read_to_string(out.join("forward.csv")).unwrap();
    let mut by_eps: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for line in table.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        by_eps.entry(f[2].to_string()).or_default().push(f[3].parse().unwrap());
    }
    for (eps, ps) in by_eps {
        assert!(ps.windows(2).all(|w| w[1] <= w[0]), "{eps}: {ps:?}");
    }
}

#[test]
fn worker_count_does_not_change_outputs() {
    let dir = scratch("workers");
    let cfg = write_config(&dir, SMALL);
    let (a, b) = (dir.join("a"), dir.join("b"));
    assert_eq!(run(&cfg, &a, &["--workers", "1"]).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, &["--workers", "8"]).status.code(), Some(0));
    for f in ["forward.csv", "grid_rate.csv", "remainder.csv", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_precedence() {
    let dir = scratch("seed");
    let cfg = write_config(&dir, SMALL.replace("n_samples = 60", "n_samples = 5").as_str());
    let args = |out: &Path| vec!["run".to_string(), cfg.display().to_string(), "--out".into(), out.display().to_string()];
    let env_out = dir.join("env");
    let a: Vec<String> = args(&env_out);
    let o = pathdep(&a.iter().map(String::as_str).collect::<Vec<_>>(), Some("99"));
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(env_out.join("manifest.toml")).unwrap().contains("seed = 99"));

    let flag_out = dir.join("flag");
    let mut a = args(&flag_out);
    a.extend(["--seed".into(), "5".into()]);
    let o = pathdep(&a.iter().map(String::as_str).collect::<Vec<_>>(), Some("99"));
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(flag_out.join("manifest.toml")).unwrap().contains("seed = 5"));
    assert_ne!(
        fs::read(env_out.join("forward.csv")).unwrap(),
        fs::read(flag_out.join("forward.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2() {
    let dir = scratch("bad");
    let cases = [
        SMALL.replace("seed = 3", "seed = 3\nalpha = 0.6"),
        SMALL.replace("\"constant\"", "\"cubic\""),
        SMALL.replace("min_cells = 4", "min_cells = 5"),
        SMALL.replace("master_grid = 256", "master_grid = 128"),
        "this is not toml".to_string(),
    ];
    for (k, body) in cases.iter().enumerate() {
        let cfg = write_config(&dir, body);
        let o = run(&cfg, &dir.join(format!("o{k}")), &[]);
        assert_eq!(o.status.code(), Some(2), "case {k}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let cfg = write_config(&dir, &cases[0]);
    let o = run(&cfg, &dir.join("alpha"), &[]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1/2)"));
    assert_eq!(run(&dir.join("missing.toml"), &dir.join("m"), &[]).status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let dir = scratch("diverge");
    let body = SMALL
        .replace("x0 = [0.0]", "x0 = [1.0]")
        .replace(
            "b = { kind = \"zero\", rows = 1, cols = 1 }",
            "b = { kind = \"pointwise\", g = \"identity\", scale = [[60.0]] }",
        );
    let cfg = write_config(&dir, &body);
    let o = run(&cfg, &dir.join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_suites_pass() {
    for suite in ["interp", "norms", "derivatives"] {
        let o = pathdep(&["check", suite, "--seed", "1"], None);
        let text = String::from_utf8_lossy(&o.stdout);
        assert_eq!(o.status.code(), Some(0), "{text}");
        assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
    }
    let o = pathdep(&["check", "everything"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_round_trip() {
    let c = parse_config(SMALL).unwrap();
    let text = config_to_toml(&c).unwrap();
    assert_eq!(parse_config(&text).unwrap(), c);

    let h = config_hash(&c).unwrap();
    let reformatted = format!("# comment\n{}", SMALL.replace("seed = 3", "seed   =   3"));
    assert_eq!(config_hash(&parse_config(&reformatted).unwrap()).unwrap(), h);
    let changed = parse_config(&SMALL.replace("seed = 3", "seed = 4")).unwrap();
    assert_ne!(config_hash(&changed).unwrap(), h);
}
