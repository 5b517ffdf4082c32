use std::process::{Command, Output};

fn ensembles(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensembles"))
        .args(args)
        .env_remove(ensembles_cli::WORKERS_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ensembles-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gap_of_single_site() {
    let o = ensembles(&["gap", "--ensemble", "DL+", "--rho", "2", "--beta", "1", "--N", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let g = column(&stdout(&o), 1)[0];
    assert!((g - (1.0 - (-2f64).exp())).abs() < 1e-12, "{g}");
    assert!(stdout(&o).lines().nth(1).unwrap().contains("8.6466471676338741e-1"));
}

#[test]
fn gap_duality_column() {
    let o = ensembles(&["gap", "--ensemble", "DJ-", "--rho", "0.2", "--a", "0.5", "--b", "-0.3", "--N", "1:4", "--check"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(column(&stdout(&o), 3).iter().all(|d| *d < 1e-8));
}

#[test]
fn tracy_widom_table_is_a_cdf() {
    let o = ensembles(&["tw-table", "--grid", "-5:2:0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let f = column(&stdout(&o), 1);
    assert_eq!(f.len(), 29);
    assert!(f.windows(2).all(|w| w[1] > w[0]));
    assert!(f[0] > 0.0 && *f.last().unwrap() < 1.0);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(ensembles(&["gap", "--bogus", "1"]).status.code(), Some(2));
    assert_eq!(ensembles(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(ensembles(&["gap", "--ensemble", "DL+", "--rho", "2", "--N", "1"]).status.code(), Some(2));
    assert_eq!(ensembles(&["gap", "--ensemble", "DQ+", "--rho", "2", "--N", "1"]).status.code(), Some(2));
    let o = ensembles(&["sample", "--ensemble", "DH+", "--rho", "0", "--window", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn failed_verdict_exits_with_one() {
    let o = ensembles(&["schur-check", "--kind", "duality", "--a", "2", "--b", "2", "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("verdict=fail"));
    let o = ensembles(&["schur-check", "--kind", "duality", "--a", "2", "--b", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn config_file_and_flag_precedence() {
    let cfg = temp_path("gap.conf");
    std::fs::write(&cfg, "# single-site gap\nensemble = DL+\nrho = 5   # overridden below\nbeta = 1\nN = 1\n").unwrap();
    let o = ensembles(&["gap", "--config", cfg.to_str().unwrap(), "--rho", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((column(&stdout(&o), 1)[0] - (1.0 - (-2f64).exp())).abs() < 1e-12);

    std::fs::write(&cfg, "ensemble = DL+\nrho = 2\nbeta = 1\nN = 1\nlambda = 3\n").unwrap();
    let o = ensembles(&["gap", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
}

#[test]
fn stochastic_output_is_independent_of_workers() {
    let args = ["simulate-asep", "--q", "0.5", "--t", "2", "--x", "-1:1", "--replicas", "300", "--seed", "7"];
    let one = ensembles(&[&args[..], &["--workers", "1"]].concat());
    let four = ensembles(&[&args[..], &["--workers", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(stdout(&one).lines().count(), 1 + 3 * 300);

    let s = ["sample", "--ensemble", "DH+", "--rho", "-1", "--window", "12", "--count", "50", "--seed", "3"];
    let env_run = Command::new(env!("CARGO_BIN_EXE_ensembles")).args(s).env(ensembles_cli::WORKERS_ENV, "3").output().unwrap();
    assert_eq!(ensembles(&s).stdout, env_run.stdout);
    assert_eq!(stdout(&env_run).lines().count(), 50);
}

#[test]
fn output_file_matches_stdout() {
    let path = temp_path("kpz.csv");
    let args = ["kpz-table", "--zeta-hat", "0.5,1,2"];
    let o = ensembles(&[&args[..], &["--output", path.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), ensembles(&args).stdout);
    let v = column(&String::from_utf8(std::fs::read(&path).unwrap()).unwrap(), 2);
    assert!(v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|x| *x > 0.0 && *x < 1.0));
}

#[test]
fn q_laplace_round_trip() {
    let o = ensembles(&["qlaplace", "--q", "0.6", "--dist", "0.2,0.5,0.3", "--invert", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for (want, got) in column(&out, 1).iter().zip(column(&out, 2)) {
        assert!((want - got).abs() < 1e-8);
    }
}

#[test]
fn ensemble_transform_at_zero_ensemble() {
    // DL⁺(0) is the full configuration, so the transform is Π_{z≥0} 1/(1 + ζ q^z)
    let o = ensembles(&["qlaplace", "--q", "0.5", "--zeta", "0.5", "--ensemble", "DL+", "--rho", "0", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let want: f64 = (0..80).map(|z| 1.0 / (1.0 + 0.5 * 0.5f64.powi(z))).product();
    assert!((column(&stdout(&o), 1)[0] - want).abs() < 1e-12);
}

#[test]
fn six_vertex_and_kernel_tables() {
    let o = ensembles(&["simulate-6v", "--q", "0.25", "--u", "3", "--points", "1:1,4:4", "--replicas", "20", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().filter(|l| l.contains(",1:1,")).all(|l| l.ends_with(",1")));

    let o = ensembles(&["kernel", "--ensemble", "DH+", "--rho", "0.5", "--size", "4", "--form", "integrable"]);
    let w = ensembles(&["kernel", "--ensemble", "DH+", "--rho", "0.5", "--size", "4"]);
    for (a, b) in column(&stdout(&o), 2).iter().zip(column(&stdout(&w), 2)) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn limit_transition_report() {
    let o = ensembles(&["verify-limit", "--transition", "racah-dj", "--rho", "0.2", "--a", "0.5", "--b", "-0.3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("check.kernel_error_decreasing=pass"));
}
