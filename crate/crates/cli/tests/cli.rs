use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparse_qi::LevelSet;
use tempfile::TempDir;

const HYBRID: &str = "[spec]
kind = \"hybrid\"
p = 2.0
theta = 1.0
q = 2.0
r = 4
d = 2
alpha = 1.5
beta = -0.5
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparse-qi"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().map(|l| l.split(',').map(String::from).collect::<Vec<_>>());
    let header = lines.next().unwrap();
    (header, lines.collect())
}

fn col(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn smallest_grid_is_the_origin() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{HYBRID}[run]\nbudgets = [4]\n"));
    let (h, r) = rows(&stdout(&run(&["gridinfo"], &cfg)));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][col(&h, "xi")], "0");
    assert_eq!(r[0][col(&h, "levels")], "1");
    assert_eq!(r[0][col(&h, "n_declared")], "4");
}

#[test]
fn budget_ratio_stays_bounded() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", HYBRID);
    let out = stdout(&run(&["gridinfo", "--budgets", "100,1000,10000,100000,1000000"], &cfg));
    let (h, r) = rows(&out);
    let ratios: Vec<f64> = r.iter().map(|row| row[col(&h, "ratio")].parse().unwrap()).collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 10.0, "{ratios:?}");
}

#[test]
fn invalid_epsilon_names_the_interval_and_line() {
    let dir = TempDir::new().unwrap();
    let text = "[spec]\nkind = \"mixed\"\np = 2.0\ntheta = 2.0\nq = 2.0\nr = 4\na = [1.0, 1.5]\nepsilon = 0.9\n";
    let cfg = write(dir.path(), "bad.toml", text);
    let o = run(&["gridinfo"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:8:"), "{err}");
    assert!(err.contains("0 < epsilon < 0.5"), "{err}");

    let o = run(&["gridinfo", "--set", "spec.epsilon=0.25"], &cfg);
    assert!(o.status.success(), "override should win");
}

#[test]
fn syntax_and_schema_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.toml", "[spec]\nkind = \"hybrid\"\np = \n");
    let o = run(&["gridinfo"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s.toml:3:"));

    let cfg = write(dir.path(), "u.toml", &format!("{HYBRID}[run]\nlatice = \"auto\"\n"));
    let o = run(&["gridinfo"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("latice"));

    let cfg = write(dir.path(), "f.toml", &format!("{HYBRID}[run]\nfamily = \"diamond\"\n"));
    let o = run(&["gridinfo"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("f.toml:11:"));

    let missing = dir.path().join("absent.toml");
    assert_eq!(run(&["gridinfo"], &missing).status.code(), Some(2));
}

#[test]
fn recover_is_deterministic_and_tagged() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("{HYBRID}[run]\nbudgets = [400, 100, 1000, 200]\ncorpus = [\"poly_const\", \"poly_top\", \"kink\"]\nlattice = \"uniform\"\nresolution = 65\n"),
    );
    let first = stdout(&run(&["recover"], &cfg));
    let second = stdout(
        &bin()
            .env("SPARSE_QI_THREADS", "1")
            .args(["recover", "--config"])
            .arg(&cfg)
            .output()
            .unwrap(),
    );
    assert_eq!(first, second);

    let (h, r) = rows(&first);
    assert_eq!(r.len(), 12);
    let hash = &r[0][col(&h, "config_hash")];
    assert_eq!(hash.len(), 16);
    assert!(r.iter().all(|row| &row[0] == hash));
    let targets: Vec<u64> = r[..4]
        .iter()
        .map(|row| row[col(&h, "budget_target")].parse().unwrap())
        .collect();
    assert_eq!(targets, vec![100, 200, 400, 1000]);
    for row in &r {
        let err: f64 = row[col(&h, "error_q")].parse().unwrap();
        if row[col(&h, "function")].starts_with("monomial") {
            assert!(err <= 1e-9, "polynomial control {row:?}");
        }
    }
    let last = r.last().unwrap();
    assert_eq!(last[col(&h, "predicted_exponent")], "-1");
    let slope: f64 = last[col(&h, "slope_so_far")].parse().unwrap();
    assert!(slope < -0.5, "{last:?}");
}

#[test]
fn integrate_is_exact_on_constants() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("{HYBRID}[run]\ncorpus = [\"poly_const\", \"sine\"]\n"),
    );
    let (h, r) = rows(&stdout(&run(&["integrate", "--budgets", "50,100,200,400,800"], &cfg)));
    assert_eq!(r.len(), 10);
    for row in r.iter().filter(|row| row[col(&h, "function")] == "monomial_0_0") {
        let err: f64 = row[col(&h, "error")].parse().unwrap();
        assert!(err < 1e-12, "{row:?}");
    }
    let sine: Vec<f64> = r
        .iter()
        .filter(|row| row[col(&h, "function")] == "sine_product")
        .map(|row| row[col(&h, "error")].parse().unwrap())
        .collect();
    assert!(sine.last().unwrap() < &(sine[0] / 10.0), "{sine:?}");
}

#[test]
fn compare_shows_the_full_grid_gap() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", HYBRID);
    let (h, r) = rows(&stdout(&run(&["compare", "--budgets", "100,101,100000"], &cfg)));
    assert_eq!(r.len(), 3);
    let strip = |row: &Vec<String>| {
        let mut v = row.clone();
        v.remove(col(&h, "budget_target"));
        v
    };
    assert_eq!(strip(&r[0]), strip(&r[1]), "same level set, same row");
    let gap: f64 = r[2][col(&h, "full_ratio")].parse().unwrap();
    assert!(gap > 10.0);
}

#[test]
fn export_rule_sums_to_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", HYBRID);
    let out = dir.path().join("rule.csv");
    let o = bin()
        .args(["export-rule", "--budget", "200", "--out"])
        .arg(&out)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(o.status.success());
    let (h, r) = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(h, ["x_1", "x_2", "weight", "config_hash"]);
    let sum: f64 = r.iter().map(|row| row[2].parse::<f64>().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn dump_grid_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", HYBRID);
    let text = stdout(&run(&["dump-grid", "--budget", "1000"], &cfg));
    assert!(text.starts_with("# config_hash="));
    let delta = LevelSet::from_text(&text).unwrap();
    assert_eq!(delta.dim(), 2);
    assert!(delta.is_downward_closed());
    assert!(delta.budget() <= 1000);
}

#[test]
fn jsonl_and_plot_files() {
    let dir = TempDir::new().unwrap();
    let plots = dir.path().join("plots");
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!(
            "{HYBRID}[run]\nbudgets = [50, 100]\ncorpus = [\"sine\"]\n[output]\nformat = \"jsonl\"\nplot_dir = \"{}\"\n",
            plots.display()
        ),
    );
    let out = stdout(&run(&["integrate"], &cfg));
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().all(|l| l.starts_with("{\"config_hash\":")));
    let series = std::fs::read_to_string(plots.join("integrate_sine_product.dat")).unwrap();
    assert_eq!(series.lines().count(), 3);

    let csv = stdout(&run(&["integrate", "--format", "csv"], &cfg));
    assert!(csv.starts_with("config_hash,"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", HYBRID);
    let o = bin()
        .env("SPARSE_QI_THREADS", "0")
        .args(["gridinfo", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SPARSE_QI_THREADS"));
}

#[test]
fn degenerate_reference_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let text = "[spec]\nkind = \"hybrid\"\np = 2.0\ntheta = 2.0\nq = 2.0\nr = 4\nd = 2\nalpha = 2.0\nbeta = 0.0\ngamma = 1.0\n\
                [run]\nbudgets = [100]\ncorpus = [\"sine\"]\nreference_offset = 1e-9\n";
    let cfg = write(dir.path(), "e.toml", text);
    let o = run(&["recover"], &cfg);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical failure"));
}
