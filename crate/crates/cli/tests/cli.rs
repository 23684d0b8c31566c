use std::path::Path;
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::SeedableRng;
use shiftbt::rom::{reduce_jshift, rom_output};
use shiftbt::synthetic::random_system;
use shiftbt::{LtiSystem, PiecewiseConstantInput, TimeGrid};
use shiftbt_cli::bundle::{read_rom, write_system};

fn shiftbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftbt")).args(args).output().expect("binary runs")
}

fn sample_system(seed: u64) -> LtiSystem {
    random_system(&mut StdRng::seed_from_u64(seed), 8, 1, 2, 2)
}

fn bundle(dir: &Path, sys: &LtiSystem) -> String {
    write_system(dir, "sample", sys).unwrap();
    dir.to_str().unwrap().to_string()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn reduce_writes_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = bundle(&tmp.path().join("sys"), &sample_system(1));
    let out = tmp.path().join("rom");
    let o = shiftbt(&["reduce", "--system", &sys, "--method", "bt", "--order", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["Ar", "Br", "Cr", "Dr", "X0r", "Fr"] {
        assert!(out.join(format!("{f}.mtx")).exists(), "{f}");
    }
    let (rom, meta) = read_rom(&out).unwrap();
    assert_eq!((rom.order(), meta.method.as_str(), meta.hsv.len()), (3, "bt", 8));
}

#[test]
fn optimized_alpha_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = bundle(&tmp.path().join("sys"), &sample_system(2));
    let out = tmp.path().join("rom");
    let o = shiftbt(&[
        "reduce",
        "--system",
        &sys,
        "--method",
        "jshift",
        "--order",
        "3",
        "--alpha",
        "optimize",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, meta) = read_rom(&out).unwrap();
    let alpha = meta.alpha.unwrap();
    assert!(alpha > 0.0);
    assert!(meta.alpha_trace.len() >= 13);
    let best = meta.alpha_trace.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let at_star = meta.alpha_trace.iter().find(|p| p[0] == alpha).map(|p| p[1]).unwrap();
    assert_eq!(at_star, best);
}

#[test]
fn unstable_system_exits_with_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sys = sample_system(3);
    sys.a += DMatrix::identity(8, 8) * 10.0;
    let dir = bundle(&tmp.path().join("sys"), &sys);
    let o = shiftbt(&[
        "reduce",
        "--system",
        &dir,
        "--method",
        "bt",
        "--order",
        "2",
        "--out",
        tmp.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = bundle(&tmp.path().join("sys"), &sample_system(4));
    let out = tmp.path().join("r");
    let cases: [&[&str]; 4] = [
        &["reduce", "--system", &dir, "--method", "nope", "--order", "2", "--out", out.to_str().unwrap()],
        &["reduce", "--system", &dir, "--method", "btbt", "--order", "2", "--out", out.to_str().unwrap()],
        &["reduce", "--system", "/nonexistent", "--method", "bt", "--order", "2", "--out", out.to_str().unwrap()],
        &["bounds", "--system", &dir, "--method", "bt", "--order", "2", "--z0", "1"],
    ];
    for args in cases {
        assert_eq!(shiftbt(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bounds_beta_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = bundle(&tmp.path().join("sys"), &sample_system(5));
    let o = shiftbt(&[
        "bounds",
        "--system",
        &dir,
        "--method",
        "jshift",
        "--order",
        "3",
        "--alpha",
        "0.5",
        "--beta",
        "0.01,0.1,1,10,100",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 5);
    for w in records.windows(2) {
        assert!(w[1]["c_u"].as_f64().unwrap() <= w[0]["c_u"].as_f64().unwrap() * (1.0 + 1e-12));
        assert_eq!(w[0]["r"], 3);
    }

    let o = shiftbt(&["bounds", "--system", &dir, "--method", "bt", "--order", "8"]);
    let rec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rec["c_u"].as_f64(), Some(0.0));

    let o = shiftbt(&["bounds", "--system", &dir, "--method", "sshift", "--orders", "3,2", "--alpha", "heur-fro"]);
    let rec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((rec["k"].as_u64(), rec["l"].as_u64()), (Some(3), Some(2)));
    assert!(rec["c_x0"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let system = sample_system(6);
    let dir = bundle(&tmp.path().join("sys"), &system);
    let zero = tmp.path().join("zero.csv");
    let o = shiftbt(&["simulate", "--system", &dir, "--grid", "0.1,5", "--out", zero.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&zero);
    assert_eq!(header, "t,y1,y2");
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));

    let input = tmp.path().join("u.csv");
    std::fs::write(&input, "0,0\n500,1\n1000,0\n").unwrap();
    let rom = tmp.path().join("rom");
    let o = shiftbt(&["reduce", "--system", &dir, "--method", "bt", "--order", "8", "--out", rom.to_str().unwrap()]);
    assert!(o.status.success());
    let err = tmp.path().join("err.csv");
    let o = shiftbt(&[
        "simulate",
        "--system",
        &dir,
        "--rom",
        rom.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--z0",
        "1,-2",
        "--grid",
        "0.5,auto",
        "--out",
        err.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&err);
    assert_eq!(header, "t,error");
    assert!(rows.last().unwrap()[0] > 1000.0);
    assert!(rows.iter().all(|r| r[1] <= 1e-7));
}

#[test]
fn rom_bundle_round_trip_reproduces_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let system = sample_system(7);
    let dir = bundle(&tmp.path().join("sys"), &system);
    let out = tmp.path().join("rom");
    let o = shiftbt(&[
        "reduce",
        "--system",
        &dir,
        "--method",
        "jshift",
        "--order",
        "3",
        "--alpha",
        "0.7",
        "--beta",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (back, _) = read_rom(&out).unwrap();
    let direct = reduce_jshift(&system, 3, 0.7, 2.0).unwrap();
    let u = PiecewiseConstantInput::pulse(DVector::from_element(1, 1.0), 0.0, 1.0).unwrap();
    let z0 = DVector::from_vec(vec![0.5, -1.0]);
    let grid = TimeGrid::new(0.05, 200).unwrap();
    let a = rom_output(&back, &u, &z0, &grid).unwrap();
    let b = rom_output(&direct, &u, &z0, &grid).unwrap();
    assert!(a.difference(&b).unwrap().linf_norm() <= 1e-12 * (1.0 + b.linf_norm()));
}

#[test]
fn compare_reports() {
    let tmp = tempfile::tempdir().unwrap();
    bundle(&tmp.path().join("sys"), &sample_system(8));
    let cfg = tmp.path().join("cmp.toml");
    std::fs::write(
        &cfg,
        r#"
system = "sys"
z0 = [1.0, -0.5]
alpha = "optimize"
betas = [1.0, "heur"]
step = 0.05
smoothing = 5
[input]
breakpoints = [0.0, 1.0, 2.0]
values = [[0.0], [1.0], [0.0]]
[[methods]]
method = "bt"
order = 3
[[methods]]
method = "trlbt"
order = 3
[[methods]]
method = "augbt"
order = 3
[[methods]]
method = "jshift"
order = 3
[[methods]]
method = "btbt"
orders = [2, 2]
[[methods]]
method = "sshift"
orders = [2, 2]
[sweep]
order = 3
"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = shiftbt(&["compare", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 7, "{report}");
    assert!(rows.iter().all(|r| r.contains(",false,")));
    assert_eq!(std::fs::read_dir(out.join("trajectories")).unwrap().count(), 7);
    let (header, sweep) = csv_rows(&out.join("alpha_sweep.csv"));
    assert_eq!(header, "alpha,c_u");
    assert_eq!(sweep.len(), 241);
    // decreasing at the small end, increasing at the large end
    assert!(sweep[1][1] <= sweep[0][1]);
    assert!(sweep[240][1] >= sweep[239][1]);

    std::fs::write(&cfg, "system = \"sys\"\nstep = 0.1\n").unwrap();
    let o = shiftbt(&["compare", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
