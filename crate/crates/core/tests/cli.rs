use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use neurotherm::experiment::read_trajectory_csv;

const SHORT_B: &str = r#"
model = "B"
duration = 2.0
output_decimation = 100

[ambient]
kind = "constant"
t_amb = 40.0
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurotherm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn default_simulation_writes_a_full_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--out", "sim"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_trajectory_csv(fs::File::open(dir.path().join("sim/trajectory.csv")).unwrap()).unwrap();
    assert!(rows.len() >= 20 * 100, "{} rows", rows.len());
    assert_eq!(rows[0].t, 0.0);
    assert_eq!(rows.last().unwrap().t, 20.0);
    assert!(rows.windows(2).all(|w| w[1].t > w[0].t));
    let report = fs::read_to_string(dir.path().join("sim/report.txt")).unwrap();
    assert!(report.contains("model = model-b"));
    assert!(report.contains("jumps.spike_1 = "));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "short.toml", SHORT_B);
    for out in ["first", "second"] {
        let o = run(dir.path(), &["simulate", "--scenario", &sc, "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["trajectory.csv", "trajectory.svg"] {
        assert_eq!(
            fs::read(dir.path().join("first").join(file)).unwrap(),
            fs::read(dir.path().join("second").join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn plots_are_well_formed_xml() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "short.toml", SHORT_B);
    let o = run(dir.path(), &["simulate", "--scenario", &sc, "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("o/trajectory.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("valid XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert!(doc.descendants().any(|n| n.has_tag_name("path")));
}

#[test]
fn model_a_takes_more_jumps_than_model_b() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "short.toml", SHORT_B);
    let o = run(dir.path(), &["compare-models", "--scenario", &sc, "--out", "cmp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let txt = fs::read_to_string(dir.path().join("cmp/comparison.txt")).unwrap();
    let value = |key: &str| -> f64 {
        txt.lines()
            .find_map(|l| {
                l.strip_prefix(key)?
                    .trim()
                    .strip_prefix('=')
                    .map(|v| v.trim().parse().unwrap())
            })
            .unwrap_or_else(|| panic!("{key} missing from:\n{txt}"))
    };
    assert!(value("jump_count_A") > value("jump_count_B"));
    assert!(dir.path().join("cmp/comparison.csv").exists());
}

#[test]
fn calibration_writes_loadable_params() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["calibrate-ntc", "--target", "39.84", "--out", "cal"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sc = write(dir.path(), "short.toml", SHORT_B);
    let o = run(
        dir.path(),
        &[
            "simulate",
            "--params",
            "cal/params_calibrated.toml",
            "--scenario",
            &sc,
            "--out",
            "s",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write(
        dir.path(),
        "zero.toml",
        &SHORT_B.replace("duration = 2.0", "duration = 0.0"),
    );
    let unknown = write(dir.path(), "unknown.toml", &format!("{SHORT_B}\nbogus = 1\n"));
    let bad_param = write(dir.path(), "p.toml", "R1 = \"ten\"\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--scenario", &zero],
        vec!["simulate", "--scenario", &unknown],
        vec!["simulate", "--scenario", "missing.toml"],
        vec!["simulate", "--params", &bad_param],
        vec!["sweep-u", "--t-min", "0", "--t-max", "1", "--step", "2"],
    ];
    for args in cases {
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error: "), "{args:?}");
    }
    let o = run(dir.path(), &["simulate", "--scenario", &unknown]);
    let msg = stderr(&o);
    assert!(msg.contains("bogus") && msg.contains("line"), "{msg}");
}

#[test]
fn solver_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "short.toml", SHORT_B);
    let solver = write(dir.path(), "solver.toml", "zeno_jump_limit = 0\n");
    let o = run(
        dir.path(),
        &["simulate", "--scenario", &sc, "--solver", &solver, "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn usage_errors_are_reported_by_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["no-such-command"]);
    assert_ne!(o.status.code(), Some(0));
}
