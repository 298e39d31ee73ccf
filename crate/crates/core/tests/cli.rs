use std::path::Path;
use std::process::{Command, Output};

fn cutiga(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutiga"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn convergence_writes_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = cutiga(dir.path(), &["convergence", "--variant", "ls", "--tau", "0.1", "--ns", "4,8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("convergence_square_fitted_ls_tau0.1_beta10.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("geometry,h,n,"));
    assert!(dir.path().join("convergence_square_fitted_ls_tau0.1_beta10.json").exists());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cutiga(dir.path(), &["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cutiga(dir.path(), &["solve", "--geometry", "circle", "--h", "-1", "--t", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = cutiga(dir.path(), &["convergence", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for flag in ["--geometry", "--tau", "--shifts", "--quick", "--plot", "--variant"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn export_geometry_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = cutiga(dir.path(), &["export-geometry", "--geometry", "circle", "--h", "0.26", "--t", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("cut"));
    assert!(dir.path().join("geometry_circle_h0.26_t0.5.txt").exists());
}

#[test]
fn solve_plots_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let o = cutiga(
        dir.path(),
        &["solve", "--geometry", "circle", "--h", "0.26", "--t", "0.3", "--plot", "--raster", "21", "--export-system"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("L2 error"));
    let svg = std::fs::read_to_string(dir.path().join("solve_circle_ls.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let raster = std::fs::read_to_string(dir.path().join("solve_circle_ls_raster.csv")).unwrap();
    assert_eq!(raster.lines().count(), 1 + 21 * 21);
    assert!(dir.path().join("system_matrix.coo").exists());
}

#[test]
fn condition_with_few_shifts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cutiga(dir.path(), &["condition", "--h", "0.26", "--shifts", "3", "--variant", "ls", "--tau", "0.1", "--plot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("condition.svg").exists());
}
