//! The command-line binary end to end: exit codes, reports and outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "[grids]\npoints = 64\nmf_quadrature_nodes = 65\n";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("device.toml"), SMALL).unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, config: &str, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_colorqubit"))
            .arg("--config")
            .arg(self.path(config))
            .arg("--out")
            .arg(self.path("out"))
            .args(args)
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn report_value(o: &Output, key: &str) -> f64 {
    let text = stdout(o);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "exit {:?}\n{}", o.status.code(), stderr(&o));
    o
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let ws = Workspace::new();
    ws.write("bad.toml", "[sfwm]\nsigma_one_THz = 6.0\n");
    let o = ws.run("bad.toml", &["design", "--no-figures"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma_one_THz"), "{}", stderr(&o));
}

#[test]
fn empty_or_broken_plans_are_usage_errors() {
    let ws = Workspace::new();
    let empty = ws.write("empty.plan", "name = \"empty\"\n");
    let o = ws.run("device.toml", &["sweep", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let unknown = ws.write(
        "unknown.plan",
        "name = \"u\"\n[[axis]]\npath = \"dfg.not_a_field\"\nstart = 0.0\nstop = 1.0\nsteps = 3\n",
    );
    let o = ws.run("device.toml", &["sweep", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dfg.not_a_field"));
    let o = ws.run("device.toml", &["sweep", ws.path("missing.plan").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shown_configuration_round_trips() {
    let ws = Workspace::new();
    let first = stdout(&ok(ws.run("device.toml", &["design", "--show-config"])));
    assert!(first.contains("points = 64"));
    ws.write("echo.toml", &first);
    let second = stdout(&ok(ws.run("echo.toml", &["design", "--show-config"])));
    assert_eq!(first, second);
}

#[test]
fn axis_phase_only_rotates_beta() {
    let ws = Workspace::new();
    let a = ok(ws.run("device.toml", &["gate", "--nu", "0"]));
    let b = ok(ws.run("device.toml", &["gate", "--nu", "1.5707963267948966"]));
    for key in ["alpha_abs_sq", "beta_abs_sq", "fidelity"] {
        assert!((report_value(&a, key) - report_value(&b, key)).abs() < 1e-12, "{key}");
    }
    let shift = report_value(&b, "beta_phase_rad") - report_value(&a, "beta_phase_rad");
    let wrapped = (shift + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
    assert!((wrapped.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-9, "shift {shift}");
}

#[test]
fn pump_powers_set_the_rotation() {
    let ws = Workspace::new();
    let base = ok(ws.run("device.toml", &["gate"]));
    let pmin = report_value(&base, "min_power_product_mW2");
    let p = pmin.sqrt().to_string();
    let full = ok(ws.run("device.toml", &["gate", "--powers", &p, &p]));
    assert!(report_value(&full, "beta_abs_sq") > 0.95);
    assert!((report_value(&full, "theta1_rad") - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    let off = ok(ws.run("device.toml", &["gate", "--powers", "0", "0"]));
    assert_eq!(report_value(&off, "beta_abs_sq"), 0.0);
    let kept = ["alpha_abs_sq", "spurious_weight", "out_of_span_weight"].map(|k| report_value(&off, k));
    assert!((kept.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{kept:?}");
    assert_eq!(report_value(&off, "fidelity"), report_value(&off, "alpha_abs_sq"));
}

#[test]
fn malformed_amplitude_file_is_a_usage_error() {
    let ws = Workspace::new();
    let f = ws.write("input.dat", "# domega re im\n0.0 1.0 0.0\n0.1 oops 0.0\n");
    let o = ws.run("device.toml", &["gate", "--input", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn sweeps_are_reproducible_and_documented() {
    let ws = Workspace::new();
    let plan = ws.write(
        "tiny.plan",
        "name = \"tiny\"\noutputs = [\"fidelity\", \"purity\"]\n\
         [[axis]]\npath = \"dfg.sigma2_THz\"\nstart = 0.5\nstop = 0.9\nsteps = 3\n",
    );
    let read = |ws: &Workspace| fs::read_to_string(ws.path("out").join("tiny.csv")).unwrap();
    ok(ws.run("device.toml", &["sweep", plan.to_str().unwrap(), "--heatmap"]));
    let first = read(&ws);
    ok(ws.run("device.toml", &["--threads", "1", "sweep", plan.to_str().unwrap()]));
    assert_eq!(first, read(&ws));
    assert_eq!(first.lines().filter(|l| !l.starts_with('#')).count(), 4);
    let manifest = fs::read_to_string(ws.path("out").join("sweep.manifest.json")).unwrap();
    assert!(manifest.contains("config_hash") && manifest.contains("effective-index"));
}

fn write_table(path: &Path) {
    // Uniform core index close to the built-in solver: enough to exercise the import path.
    let mut text = String::from("# neff-table v1\n");
    for iw in 0..=32 {
        let w = 0.6 + 0.05 * iw as f64;
        for il in 0..=130 {
            let l = 0.5 + 0.01 * il as f64;
            let n = 1.80 + 0.05 * (w - 1.0) - 0.06 * (l - 1.0) + 0.01 / (l * l);
            text.push_str(&format!("{w} 0.7 {l} {n}\n"));
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn dispersion_table_replaces_the_solver() {
    let ws = Workspace::new();
    let table = ws.path("neff.txt");
    write_table(&table);
    let o = Command::new(env!("CARGO_BIN_EXE_colorqubit"))
        .args(["--config", ws.path("device.toml").to_str().unwrap()])
        .args(["--dispersion", table.to_str().unwrap()])
        .args(["--out", ws.path("out").to_str().unwrap()])
        .arg("dispersion")
        .output()
        .unwrap();
    let o = ok(o);
    assert!(stdout(&o).contains("dispersion_model = tabulated"), "{}", stdout(&o));
    assert!(ws.path("out").join("dispersion_compare.dat").exists());
}
