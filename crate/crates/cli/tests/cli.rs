use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use robustpave::{demo_system, Stages, Truth};
use robustpave_cli::{load_system, parse_system, print_system, run, CliError, RunMode, RunRequest};

fn systems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../systems")
}

fn system(name: &str) -> PathBuf {
    systems_dir().join(name)
}

const BILINEAR: &str = r#"
state_vars = ["x1", "x2"]
control_vars = ["u"]
perturbation_vars = ["w"]
horizon = 1
transition = ["3*x1*x2 + w*u", "2*x2 + x1"]
allowed = ["-1 <= x1", "x1 <= 1", "-1 <= x2", "x2 <= 1"]
control_domain = [[-0.5, 0.5]]
perturbation_domain = [[-0.1, 0.1]]
initial_box = [[-1, 1], [-1, 1]]
"#;

#[test]
fn bilinear_document_matches_builtin_system() {
    assert_eq!(parse_system(BILINEAR).unwrap(), demo_system(1));
    for n in 0..4 {
        assert_eq!(load_system(&system(&format!("bilinear_n{n}.toml"))).unwrap(), demo_system(n));
    }
}

#[test]
fn missing_horizon_is_reported() {
    let text = BILINEAR.replace("horizon = 1\n", "");
    let err = parse_system(&text).unwrap_err().to_string();
    assert!(err.contains("horizon"), "{err}");
}

#[test]
fn undeclared_transition_variable_is_named() {
    let text = BILINEAR.replace("2*x2 + x1", "2*x2 + y");
    let err = parse_system(&text).unwrap_err().to_string();
    assert!(err.contains("transition[1]") && err.contains("undeclared variable y"), "{err}");
}

#[test]
fn syntax_errors_carry_line_context() {
    let text = BILINEAR.replace("horizon = 1", "horizon = = 1");
    let err = parse_system(&text).unwrap_err().to_string();
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn per_stage_lists_and_string_bounds() {
    let text = BILINEAR
        .replace("horizon = 1", "horizon = 2")
        .replace(
            r#"allowed = ["-1 <= x1", "x1 <= 1", "-1 <= x2", "x2 <= 1"]"#,
            r#"allowed = [["-1 <= x1 <= 1"], ["-1 <= x1 <= 1", "x2 <= 1"], ["-2 <= x2 <= 2"]]"#,
        )
        .replace(
            "perturbation_domain = [[-0.1, 0.1]]",
            r#"perturbation_domain = [[["-0.1", "0.1"]], [["-1e-2", "0.3333"]]]"#,
        );
    let s = parse_system(&text).unwrap();
    let Stages::PerStage(allowed) = &s.allowed else { panic!() };
    assert_eq!(allowed.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 3, 2]);
    let w = s.perturbation_domain.at(1).as_ref().unwrap().side(0);
    assert!(w.lo() <= -0.01 && w.hi() >= 0.3333 && w.hi() < 0.33331);
    assert_eq!(parse_system(&print_system(&s)).unwrap(), s);

    let short = text.replace(r#", [["-1e-2", "0.3333"]]"#, "");
    let err = parse_system(&short).unwrap_err().to_string();
    assert!(err.contains("perturbation_domain has 1 per-stage entries, expected 2"), "{err}");
}

#[test]
fn printed_systems_read_back() {
    for n in 0..4 {
        let s = demo_system(n);
        assert_eq!(parse_system(&print_system(&s)).unwrap(), s);
    }
    let mut s = load_system(&system("rotation3.toml")).unwrap();
    assert_eq!(parse_system(&print_system(&s)).unwrap(), s);
    s.initial_box = robustpave::IntervalBox::from_bounds(&[(-1.0 / 3.0, 0.1 + 0.2), (-1e-300, 1e300), (0.0, 1.0)]);
    assert_eq!(parse_system(&print_system(&s)).unwrap(), s);
}

fn temp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn request(system_file: &str, dir: &Path) -> RunRequest {
    RunRequest {
        csv: Some(dir.join("paving.csv")),
        svg: Some(dir.join("paving.svg")),
        stats: Some(dir.join("stats.json")),
        ..RunRequest::new(system(system_file))
    }
}

fn stats_of(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("stats.json")).unwrap()).unwrap()
}

fn check_stats_schema(stats: &serde_json::Value) {
    for key in ["wall_seconds", "bisections", "atom_evals", "box_handling_seconds", "refine_seconds"] {
        let v = stats[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {stats}"));
        assert!(v >= 0.0, "{key} = {v}");
    }
    for (_, cache) in stats["caches"].as_object().unwrap() {
        let queries = cache["queries"].as_u64().unwrap();
        assert!(cache["memo_hits"].as_u64().unwrap() <= queries);
        assert!(cache["refine_calls"].is_u64());
    }
}

#[test]
fn zero_horizon_run() {
    let dir = temp();
    run(&request("bilinear_n0.toml", dir.path()), &mut Vec::new()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("paving.csv")).unwrap();
    assert_eq!(csv, "value,x1_lo,x1_hi,x2_lo,x2_hi\nT,-1,1,-1,1\n");
    let svg = std::fs::read_to_string(dir.path().join("paving.svg")).unwrap();
    assert_eq!(rects(&svg), vec![(0.0, 0.0, 800.0, 800.0, "green".to_string())]);
    let stats = stats_of(dir.path());
    check_stats_schema(&stats);
    assert_eq!(stats["err"].as_f64(), Some(0.0));
    assert_eq!(stats["boxes_true"].as_u64(), Some(1));
}

/// `(x, y, width, height, fill)` of every filled rectangle.
fn rects(svg: &str) -> Vec<(f64, f64, f64, f64, String)> {
    let attr = |line: &str, name: &str| -> String {
        let start = line.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
        line[start..].split('"').next().unwrap().to_string()
    };
    svg.lines()
        .filter(|l| l.starts_with("<rect") && !l.contains("fill=\"none\""))
        .map(|l| {
            let num = |n| attr(l, n).parse::<f64>().unwrap();
            (num("x"), num("y"), num("width"), num("height"), attr(l, "fill"))
        })
        .collect()
}

fn csv_measures(csv: &str) -> HashMap<char, f64> {
    let mut out = HashMap::new();
    for line in csv.lines().skip(1) {
        let mut fields = line.split(',');
        let value = fields.next().unwrap().chars().next().unwrap();
        let nums: Vec<f64> = fields.map(|f| f.parse().unwrap()).collect();
        let volume: f64 = nums.chunks(2).map(|p| p[1] - p[0]).product();
        *out.entry(value).or_insert(0.0) += volume;
    }
    out
}

#[test]
fn one_step_run_writes_consistent_outputs() {
    let dir = temp();
    let mut summary = Vec::new();
    run(&request("bilinear_n1.toml", dir.path()), &mut summary).unwrap();
    assert!(String::from_utf8(summary).unwrap().starts_with("err "));

    let stats = stats_of(dir.path());
    check_stats_schema(&stats);
    let err = stats["err"].as_f64().unwrap();
    assert!(err <= 0.2, "{err}");

    let csv = std::fs::read_to_string(dir.path().join("paving.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let m = csv_measures(&csv);
    assert_eq!(m[&'U'], err);
    assert_eq!(m[&'T'], stats["measure_true"].as_f64().unwrap());
    assert_eq!(m[&'F'], stats["measure_false"].as_f64().unwrap());
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|f| f.parse().unwrap()).collect())
        .collect();
    let corners: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[2])).collect();
    assert!(corners.windows(2).all(|w| w[0] <= w[1]), "rows sorted by lower corner");

    let svg = std::fs::read_to_string(dir.path().join("paving.svg")).unwrap();
    let mut area: HashMap<String, f64> = HashMap::new();
    for (_, _, w, h, fill) in rects(&svg) {
        *area.entry(fill).or_insert(0.0) += w * h;
    }
    let canvas = 800.0 * 800.0;
    for (fill, letter) in [("green", 'T'), ("red", 'F'), ("white", 'U')] {
        let frac = area.get(fill).copied().unwrap_or(0.0) / canvas;
        assert!((frac - m[&letter] / 4.0).abs() < 0.01, "{fill}: {frac}");
    }
    assert!(svg.contains(r#"stroke="black""#));
}

#[test]
fn svg_axis_points_up() {
    let dir = temp();
    let mut req = request("bilinear_n1.toml", dir.path());
    req.target_err = 3.0;
    run(&req, &mut Vec::new()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("paving.csv")).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("paving.svg")).unwrap();
    // sorted rows and rects correspond one to one
    for (row, rect) in csv.lines().skip(1).zip(rects(&svg)) {
        let f: Vec<f64> = row.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert_eq!(rect.0, (f[0] + 1.0) * 400.0);
        assert_eq!(rect.1, 800.0 - (f[3] + 1.0) * 400.0);
    }
}

#[test]
fn single_mode_reports_a_box() {
    let dir = temp();
    let req = RunRequest {
        mode: RunMode::Single,
        stats: Some(dir.path().join("stats.json")),
        ..RunRequest::new(system("bilinear_n1.toml"))
    };
    let mut out = Vec::new();
    run(&req, &mut out).unwrap();
    let line = String::from_utf8(out).unwrap();
    assert!(line.starts_with("x1 in ["), "{line}");
    let stats = stats_of(dir.path());
    check_stats_schema(&stats);
    assert_eq!(stats["found"].as_array().unwrap().len(), 2);
}

#[test]
fn svg_needs_two_states() {
    let dir = temp();
    let req = request("rotation3.toml", dir.path());
    let err = run(&req, &mut Vec::new()).unwrap_err();
    assert_eq!(err.to_string(), "svg requires 2 state variables");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (temp(), temp());
    run(&request("bilinear_n1.toml", a.path()), &mut Vec::new()).unwrap();
    run(&request("bilinear_n1.toml", b.path()), &mut Vec::new()).unwrap();
    for f in ["paving.csv", "paving.svg"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

fn binary(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_robustpave")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn exit_codes() {
    let n0 = system("bilinear_n0.toml");
    let (code, stdout, _) = binary(&[n0.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("err 0 "), "{stdout}");

    let (code, _, stderr) = binary(&["/nonexistent/system.toml"]);
    assert_eq!(code, 4, "{stderr}");

    let (code, _, _) = binary(&[n0.to_str().unwrap(), "--error", "-1"]);
    assert_eq!(code, 2);
    let (code, _, _) = binary(&[n0.to_str().unwrap(), "--mode", "sideways"]);
    assert_eq!(code, 2);

    let dir = temp();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, BILINEAR.replace("x1 <= 1", "x1 <= q")).unwrap();
    let (code, _, stderr) = binary(&[bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("undeclared variable q"), "{stderr}");

    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, BILINEAR.replace(r#""x1 <= 1""#, r#""x1 <= -2""#)).unwrap();
    let (code, _, stderr) = binary(&[empty.to_str().unwrap(), "--mode", "single"]);
    assert_eq!(code, 3, "{stderr}");

    let out = dir.path().join("missing-dir").join("p.csv");
    let (code, _, _) = binary(&[n0.to_str().unwrap(), "--csv", out.to_str().unwrap()]);
    assert_eq!(code, 4);
}

#[test]
fn cli_errors_map_to_exit_codes() {
    assert_eq!(CliError::NoTrueBox.exit_code(), 3);
    assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
    let _ = Truth::Unknown;
}
