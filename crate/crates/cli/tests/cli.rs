use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_resonance-lab");

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(config: &str) -> Run {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("run.toml"), config).unwrap();
        Run { dir }
    }

    fn config(&self) -> PathBuf {
        self.dir.path().join("run.toml")
    }

    fn exec(&self, cmd: &str, out: &str, extra: &[&str]) -> Output {
        Command::new(BIN)
            .arg(cmd)
            .arg("--config")
            .arg(self.config())
            .arg("--out")
            .arg(self.dir.path().join(out))
            .args(extra)
            .env_remove("RESONANCE_LAB_OUT")
            .output()
            .unwrap()
    }

    fn read(&self, out: &str, file: &str) -> String {
        fs::read_to_string(self.dir.path().join(out).join(file)).unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

const SWEEP: &str = r#"
[equilibria]
alpha = [0.0, -0.75, 1.5]
w = { start = -0.6, stop = 0.6, n = 5 }
z = [0.0, 0.35, -0.8]
json = true
"#;

#[test]
fn sweep_is_byte_identical_across_workers() {
    let run = Run::new(SWEEP);
    for (out, w) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let o = run.exec("equilibria", out, &["--workers", w]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["equilibria.csv", "equilibria.json"] {
        let a = run.read("a", f);
        assert_eq!(a, run.read("b", f));
        assert_eq!(a, run.read("c", f));
    }
}

#[test]
fn sweep_rows() {
    let run = Run::new(SWEEP);
    assert_eq!(code(&run.exec("equilibria", "o", &[])), 0);
    let csv = run.read("o", "equilibria.csv");
    assert!(csv.starts_with("alpha,w,z,kind,eta,g,residual,flags\n"));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 8));
    let zero = "0.0000000000000000e0";
    // circular family at the origin for alpha = 0
    assert!(rows.iter().any(|r| r[0] == zero
        && r[1] == zero
        && r[2] == zero
        && r[3] == "torus3"
        && r[4] == "1.0000000000000000e0"));
    // alpha = -3/4 flags the degenerate continuum
    let degenerate: Vec<_> = rows.iter().filter(|r| r[0] == "-7.5000000000000000e-1").collect();
    assert!(degenerate.iter().any(|r| r[7].split(';').any(|f| f == "continuum")));
    assert!(degenerate.iter().any(|r| r[7].split(';').any(|f| f == "continuum_e")));
    assert!(!csv.contains("cross_mismatch"));
    let json: serde_json::Value = serde_json::from_str(&run.read("o", "equilibria.json")).unwrap();
    assert_eq!(json.as_array().unwrap().len(), rows.len());
}

#[test]
fn sweep_exits_nonzero_when_every_cell_fails() {
    let run = Run::new("[equilibria]\nalpha = [0.5]\nw = [1.5]\nz = [0.0, 2.0]\n");
    let o = run.exec("equilibria", "o", &[]);
    assert_eq!(code(&o), 1);
    assert!(run.read("o", "equilibria.csv").contains("error: out of domain"));
}

#[test]
fn verify_passes_by_default() {
    let run = Run::new("");
    let o = run.exec("verify", "o", &["--workers", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_str(&run.read("o", "verify_report.json")).unwrap();
    assert_eq!(report["passed"], true);
    let suites = report["suites"].as_array().unwrap();
    assert!(suites.len() >= 20);
    assert!(suites.iter().all(|s| s["max_residual"].is_number()));
}

#[test]
fn injected_fault_names_the_suite() {
    let run = Run::new("[verify]\ncriteria = [1, 3]\nfault = [\"N\", \"M\"]\n");
    let o = run.exec("verify", "o", &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed suites: bracket_table"));
    let report: serde_json::Value = serde_json::from_str(&run.read("o", "verify_report.json")).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn configuration_errors_exit_two() {
    for cfg in [
        "unknown = 1",
        "[verify]\ncriteria = [11]",
        "[verify]\nfault = [\"M\", \"Q\"]",
        "[verify]\nfault = [\"Z\", \"K\"]",
        "[model]\nepsilon = -1.0\nbeta = 1.0\n[integrate]\nmode = \"full\"\nt_end = 1.0\ninitial = { chart = \"cartesian\", q = [1.0, 0.0, 0.0, 0.0], p = [0.0, 0.0, 0.0, 0.0] }",
        "[model]\nepsilon = 0.0\nbeta = 1.0\n[integrate]\nmode = \"sideways\"\nt_end = 1.0",
        "[model]\nepsilon = 0.0\nbeta = 1.0\n[integrate]\nmode = \"full\"\nt_end = -1.0\ninitial = { chart = \"cartesian\", q = [1.0, 0.0, 0.0, 0.0], p = [0.0, 0.0, 0.0, 0.0] }",
        "[model]\nepsilon = 0.0\nbeta = 1.0\n[integrate]\nmode = \"normalized\"\nt_end = 1.0\ninitial = { chart = \"delaunay\", ell = 0.0, g = 0.0, u1 = 0.0, u3 = 0.0, L = 1.0, G = 0.5, U1 = 0.9, U3 = 0.0 }",
        "[nf_table]\nbeta = []\nG = [0.5]\nU1 = [0.0]\nU3 = [0.0]",
    ] {
        let run = Run::new(cfg);
        let cmd = if cfg.contains("[integrate]") {
            "integrate"
        } else if cfg.contains("[nf_table]") {
            "nf-table"
        } else {
            "verify"
        };
        let o = run.exec(cmd, "o", &[]);
        assert_eq!(code(&o), 2, "{cfg}\n{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("usage:"));
    }
    let run = Run::new("");
    assert_eq!(code(&run.exec("integrate", "o", &[])), 2);
    assert_eq!(code(&run.exec("sideways", "o", &[])), 2);
    let missing = Command::new(BIN).args(["verify", "--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(code(&missing), 2);
}

#[test]
fn harmonic_orbit_closes() {
    let run = Run::new(
        r#"
[model]
epsilon = 0.0
beta = 1.0
[integrate]
mode = "full"
t_end = 6.283185307179586
samples = 5
initial = { chart = "cartesian", q = [0.6, -0.1, 0.2, 0.3], p = [0.1, 0.5, -0.4, 0.2] }
"#,
    );
    assert_eq!(code(&run.exec("integrate", "o", &[])), 0);
    let csv = run.read("o", "trajectory.csv");
    assert_eq!(csv.lines().next().unwrap(), "t,q1,q2,q3,q4,Q1,Q2,Q3,Q4,H,Xi,L1");
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    let (first, last) = (&rows[0], &rows[4]);
    for i in 1..12 {
        assert!((first[i] - last[i]).abs() < 1e-9, "column {i}");
    }
}

#[test]
fn reduced_run_at_beta_two_keeps_k() {
    let run = Run::new(
        r#"
[model]
epsilon = 0.01
beta = 2.0
[integrate]
mode = "reduced"
t_end = 40.0
samples = 41
initial = { chart = "cartesian", q = [0.6, -0.1, 0.2, 0.3], p = [0.1, 0.5, -0.4, 0.2] }
"#,
    );
    assert_eq!(code(&run.exec("integrate", "o", &[])), 0);
    let csv = run.read("o", "reduced.csv");
    assert_eq!(csv.lines().next().unwrap(), "t,K,N,S,H3,casimir_residual");
    let k = column(&csv, "K");
    assert_eq!(k.len(), 41);
    assert!(k.iter().all(|v| (v - k[0]).abs() < 1e-10));
    assert!(column(&csv, "casimir_residual").iter().all(|c| c.abs() < 1e-8));
    assert!(column(&csv, "N").iter().any(|n| (n - column(&csv, "N")[0]).abs() > 1e-3));
}

#[test]
fn normalized_run_reports_slow_variables() {
    let run = Run::new(
        r#"
[model]
epsilon = 1e-3
beta = 1.4142135623730951
gamma = 0.5
[integrate]
mode = "normalized"
t_end = 1000.0
samples = 3
tol = 1e-10
compare = true
checks = 2
initial = { chart = "delaunay", ell = 0.0, g = 0.7, u1 = 0.1, u3 = 0.2, L = 1.0, G = 0.8, U1 = 0.3, U3 = -0.2 }
"#,
    );
    let o = run.exec("integrate", "o", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let norm = run.read("o", "normalized.csv");
    assert_eq!(column(&norm, "L"), vec![1.0; 3]);
    assert_eq!(column(&norm, "U1"), vec![0.3; 3]);
    let slow = run.read("o", "slow_flow.csv");
    assert_eq!(slow.lines().next().unwrap(), "s,g_direct,G_direct,g_normal,G_normal");
    let (gd, gn) = (column(&slow, "G_direct"), column(&slow, "G_normal"));
    assert_eq!(gd.len(), 2);
    for (a, b) in gd.iter().zip(&gn) {
        assert!((a - b).abs() < 0.05, "{a} {b}");
    }
}

#[test]
fn reduce_writes_points_and_surfaces() {
    let run = Run::new(
        r#"
[model]
epsilon = 0.0
beta = 1.0
gamma = 0.5
[reduce]
surface_points = 9
[[reduce.states]]
chart = "cartesian"
q = [1.0, 0.2, 0.0, 0.3]
p = [0.0, 0.5, 0.4, 0.0]
[[reduce.states]]
chart = "delaunay"
ell = 0.3
g = 0.7
u1 = 0.1
u3 = 0.2
L = 1.0
G = 0.8
U1 = 0.3
U3 = -0.2
"#,
    );
    assert_eq!(code(&run.exec("reduce", "o", &[])), 0);
    let csv = run.read("o", "reduce.csv");
    assert_eq!(csv.lines().count(), 3);
    assert!(column(&csv, "casimir_residual").iter().all(|c| c.abs() < 1e-12));
    for i in 0..2 {
        let surf = run.read("o", &format!("surface_{i}.csv"));
        assert_eq!(surf.lines().next().unwrap(), "K,sqrt_f_over_2");
        assert_eq!(surf.lines().count(), 10);
        assert!(column(&surf, "sqrt_f_over_2").iter().all(|h| *h >= 0.0));
    }
    let json: serde_json::Value = serde_json::from_str(&run.read("o", "reduce.json")).unwrap();
    assert_eq!(json[1]["input"]["chart"], "delaunay");
    assert_eq!(json[1]["cartesian"]["chart"], "cartesian");
    assert!(json[1]["reduced"]["iv"]["n"].as_f64().unwrap() > 0.0);
}

#[test]
fn nf_table_skips_points_outside_the_chart() {
    let run = Run::new(
        "[nf_table]\nbeta = [1.0, 2.0]\nG = { start = 0.5, stop = 0.9, n = 2 }\nU1 = [0.0, 0.6]\nU3 = [0.1]\n",
    );
    assert_eq!(code(&run.exec("nf-table", "o", &["--workers", "3"])), 0);
    let csv = run.read("o", "nf_table.csv");
    assert_eq!(csv.lines().next().unwrap(), "beta,L,G,U1,U3,C01,C11,C21,C02,C12,C22,C32,C42");
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(column(&csv, "G").iter().zip(column(&csv, "U1")).all(|(g, u)| u.abs() <= *g));
    // beta = 1 has no g-dependence at first order
    let beta = column(&csv, "beta");
    let c11 = column(&csv, "C11");
    assert!(beta.iter().zip(&c11).filter(|(b, _)| **b == 1.0).all(|(_, c)| *c == 0.0));

    let none = Run::new("[nf_table]\nbeta = [1.0]\nG = [0.5]\nU1 = [0.9]\nU3 = [0.0]\n");
    assert_eq!(code(&none.exec("nf-table", "o", &[])), 1);
}

#[test]
fn env_var_sets_default_output_dir() {
    let run = Run::new("[verify]\ncriteria = [2]\n");
    let target = run.dir.path().join("from_env");
    let o = Command::new(BIN)
        .args(["verify", "--config"])
        .arg(run.config())
        .env("RESONANCE_LAB_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(Path::new(&target).join("verify_report.json").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let run = Run::new("seed = 5\n[verify]\ncriteria = [1]\n");
    run.exec("verify", "a", &[]);
    run.exec("verify", "b", &["--seed", "5"]);
    run.exec("verify", "c", &["--seed", "6"]);
    let (a, b, c) =
        (run.read("a", "verify_report.json"), run.read("b", "verify_report.json"), run.read("c", "verify_report.json"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(c.contains("\"seed\": 6"));
}
