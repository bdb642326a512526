use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use latcosine::cbc::parse_z_file;
use latcosine::lattice::{lattice_points, GeneratingVector, PointKind, PointSet};
use latcosine::wce::wce_korobov_lattice;
use latcosine::{SpaceParams, WeightSpec};

fn latcosine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latcosine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn tented_points_of_a_small_lattice() {
    let out = latcosine(&["points", "--n", "4", "--z", "1,3", "--tent"]);
    assert!(out.status.success());
    let rows: Vec<Vec<f64>> = stdout(&out)
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let expected = [[0.5, 0.5], [1.0, 1.0], [0.5, 0.5], [0.0, 0.0]];
    assert_eq!(rows.len(), 4);
    for (r, e) in rows.iter().zip(expected) {
        assert_eq!(r.as_slice(), e.as_slice());
    }
}

#[test]
fn points_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    let out = latcosine(&["points", "--n", "13", "--z", "1,5,-3", "--shift", "0.25,0.5,0.125", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let read = PointSet::read_csv(BufReader::new(fs::File::open(&path).unwrap()), PointKind::Shifted).unwrap();
    assert_eq!(read.len(), 13);
    assert_eq!(read.point(12), &[0.25, 0.5, 0.125]);
}

#[test]
fn cbc_writes_z_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.txt");
    let out = latcosine(&[
        "cbc", "--n", "127", "--d", "6", "--alpha", "1", "--weights", "c=1,eta=2", "--engine", "fast", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gen = parse_z_file(&fs::read_to_string(&path).unwrap(), 127).unwrap();
    assert_eq!(gen.dim(), 6);
    assert_eq!(gen.z()[0], 1);

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("z.txt.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], "latcosine/1");
    assert_eq!(summary["engine"], "fast");
    let z: Vec<u64> = serde_json::from_value(summary["z"].clone()).unwrap();
    assert_eq!(z, gen.z());

    // the last criterion value is the squared error of the full rule
    let params = SpaceParams::from_spec(1.0, WeightSpec::PowerLaw { c: 1.0, eta: 2.0 }, 6).unwrap();
    let e2 = wce_korobov_lattice(&params, &gen).unwrap().squared_error;
    let last = summary["criterion"].as_array().unwrap().last().unwrap().as_f64().unwrap();
    assert!((e2 - last).abs() <= 1e-12 * e2.max(1.0));
}

#[test]
fn plain_and_fast_cbc_print_the_same_vector() {
    let run = |engine| stdout(&latcosine(&["cbc", "--n", "101", "--d", "4", "--engine", engine]));
    assert_eq!(run("plain"), run("fast"));
}

#[test]
fn wce_json_reports_every_route() {
    let out = latcosine(&["wce", "--n", "61", "--z", "1,17", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let reports = v["reports"].as_object().unwrap();
    for key in ["korobov-closed-form", "korobov-dual", "tented-cosine-dual", "rms-kernel-form", "rms-dual"] {
        assert!(reports.contains_key(key), "missing {key}");
    }
    let tented = reports["tented-cosine-dual"]["squared_error"].as_f64().unwrap();
    let korobov = reports["korobov-closed-form"]["squared_error"].as_f64().unwrap();
    assert!(tented <= korobov);
    let ratio = v["sign_factor_ratio"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio <= 1.0);
    let only_tented = latcosine(&["wce", "--n", "61", "--z", "1,17", "--method", "tented", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&only_tented).trim()).unwrap();
    assert!(v["sign_factor_ratio"].is_null());
}

#[test]
fn approx_accepts_coefficient_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.jsonl");
    fs::write(&path, "{\"k\":[0,0],\"re\":1.0,\"im\":0.0}\n{\"k\":[1,0],\"re\":0.5,\"im\":0.0}\n").unwrap();
    let out = latcosine(&["approx", "--n", "61", "--z", "1,17", "--M", "4", "--coeffs", path.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    // both terms lie in the cross and nothing aliases onto them
    assert!(v["exact_l2_error"].as_f64().unwrap() < 1e-20);
}

#[test]
fn hypercross_lists_the_origin_first() {
    let out = latcosine(&["hypercross", "--d", "2", "--M", "5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("0,0"));
}

#[test]
fn check_suite_passes() {
    let out = latcosine(&["check", "--format", "json"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(latcosine(&["bogus"]).status.code(), Some(2));
    assert_eq!(latcosine(&["cbc", "--n", "128", "--d", "2"]).status.code(), Some(2));
    assert_eq!(latcosine(&["points", "--n", "7", "--z", "1,2", "--d", "3"]).status.code(), Some(2));
    assert_eq!(latcosine(&["cbc", "--n", "127", "--d", "2", "--engine", "fast", "--criterion", "approximation", "--M", "4"]).status.code(), Some(2));
    assert_eq!(latcosine(&["--help"]).status.code(), Some(0));
}

#[test]
fn infeasible_cross_is_rejected() {
    let out = latcosine(&["cbc", "--n", "5", "--d", "2", "--engine", "plain", "--criterion", "approximation", "--M", "1000"]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn studies_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "a.json",
        r#"{"mode":"approximation_convergence","n_list":[31,61,127],"d":2,"alpha":2,
            "weights":{"c":1,"eta":3},"m_rule":{"c":1,"lambda":0.3},"seed":11}"#,
    );
    let run = |prefix: &str| {
        let p = dir.path().join(prefix);
        let out = latcosine(&["study", "--spec", &spec, "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read_to_string(p.with_extension("csv")).unwrap(), fs::read_to_string(p.with_extension("json")).unwrap())
    };
    assert_eq!(run("one"), run("two"));

    let other = latcosine(&["study", "--spec", &spec, "--seed", "12"]);
    let same = latcosine(&["study", "--spec", &spec, "--seed", "11"]);
    let first = stdout(&latcosine(&["study", "--spec", &spec]));
    assert_eq!(stdout(&same), first);
    assert_ne!(stdout(&other), first);
}

#[test]
fn integration_study_rows_follow_n_list() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "i.json",
        r#"{"mode":"integration_convergence","n_list":[31,61,127,251],"d":3,"seed":1,"max_slope":-0.5}"#,
    );
    let out = latcosine(&["study", "--spec", &spec]);
    assert!(out.status.success());
    let text = stdout(&out);
    let ns: Vec<u64> = text.lines().skip(1).take(4).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ns, [31, 61, 127, 251]);
    let z: Vec<u64> = text.lines().nth(3).unwrap().split(',').nth(1).unwrap().split(';').map(|v| v.parse().unwrap()).collect();
    let gen = GeneratingVector::from_unsigned(127, z).unwrap();
    assert_eq!(lattice_points(&gen).len(), 127);
}

#[test]
fn study_reports_infeasible_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "inf.json",
        r#"{"mode":"approximation_convergence","n_list":[3,31],"d":2,"alpha":1,
            "m_rule":{"c":50,"lambda":0.75},"seed":0}"#,
    );
    let out = latcosine(&["study", "--spec", &spec]);
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("3,") && row.contains(",false,"), "{text}");
}

#[test]
fn study_spec_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let composite = write_spec(dir.path(), "c.json", r#"{"mode":"error_tables","n_list":[31,33]}"#);
    assert_eq!(latcosine(&["study", "--spec", &composite]).status.code(), Some(2));
    let lambda = write_spec(
        dir.path(),
        "l.json",
        r#"{"mode":"approximation_convergence","n_list":[31],"alpha":1,"m_rule":{"lambda":0.3}}"#,
    );
    assert_eq!(latcosine(&["study", "--spec", &lambda]).status.code(), Some(2));
    let unknown = write_spec(dir.path(), "u.json", r#"{"mode":"error_tables","n_list":[31],"colour":1}"#);
    assert_eq!(latcosine(&["study", "--spec", &unknown]).status.code(), Some(2));
}
