mod common;

use common::{run, stderr, stdout, write_profile};
use jostline::presets;

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scatter_writes_all_files_and_maps_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let barrier = write_profile(dir.path(), "barrier", &presets::square_layer(1.0, 0.0, 1.0));
    let out = dir.path().join("o");
    let o = run(&["scatter", "--profile", s(&barrier), "--lambda", "0.5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["transition.csv", "smatrix.csv", "residuals.csv", "channels.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let sm = std::fs::read_to_string(out.join("smatrix.csv")).unwrap();
    assert!(sm.starts_with("lambda,block,row,col,re,im"));
    let res = std::fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert!(res.starts_with("lambda,check_name,residual"));

    // closed-form barrier transmission, k = κ = √0.5
    let k = 0.5f64.sqrt();
    let expect = 1.0 / (1.0 + ((2.0 * k * k) / (2.0 * k * k)).powi(2) * (2.0 * k).sinh().powi(2));
    let t: Vec<f64> = sm
        .lines()
        .find(|l| l.contains(",t1_tilde,0,0,"))
        .unwrap()
        .split(',')
        .skip(4)
        .take(2)
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((t[0].hypot(t[1]).powi(2) - expect).abs() < 1e-8);

    // at a threshold
    let o = run(&["scatter", "--profile", s(&barrier), "--lambda", "1", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("channel 0"), "{}", stderr(&o));

    // malformed profile
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"channels": 1}"#).unwrap();
    let o = run(&["scatter", "--profile", s(&bad), "--lambda", "0.5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    // indefinite g fails validation
    let mut p = presets::square_layer::<f64>(1.0, 0.0, 1.0);
    p.left_tail.g[(0, 0)] = -1.0;
    let neg = write_profile(dir.path(), "neg", &p);
    let o = run(&["scatter", "--profile", s(&neg), "--lambda", "0.5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn transfer_method_matches_the_integrator() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_profile(dir.path(), "r", &presets::random_piecewise_constant(3, 2, 4));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, method) in [(&a, "ode"), (&b, "transfer")] {
        let o = run(&[
            "scatter",
            "--profile",
            s(&p),
            "--lambda",
            "-2.5",
            "--out",
            s(out),
            "--method",
            method,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &std::path::Path| -> Vec<(f64, f64, String)> {
        std::fs::read_to_string(d.join("smatrix.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[4].parse().unwrap(), f[5].parse().unwrap(), f[6].to_string())
            })
            .collect()
    };
    let (ra, rb) = (read(&a), read(&b));
    assert_eq!(ra.len(), rb.len());
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x.0 - y.0).abs() < 1e-8 && (x.1 - y.1).abs() < 1e-8);
        assert_eq!((x.2.as_str(), y.2.as_str()), ("ode", "transfer"));
    }
}

#[test]
fn sweep_rows_skip_thresholds_and_support_json() {
    let dir = tempfile::tempdir().unwrap();
    let barrier = write_profile(dir.path(), "barrier", &presets::square_layer(1.0, 0.0, 1.0));
    let out = dir.path().join("o");
    let o = run(&[
        "sweep",
        "--profile",
        s(&barrier),
        "--lambda-range",
        "-5:-0.1:101",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,T_0,R_0,unitarity");
    assert_eq!(lines.len(), 102);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] + f[2] - 1.0).abs() < 1e-8 && f[3] < 1e-8, "{l}");
    }

    let o = run(&[
        "sweep",
        "--profile",
        s(&barrier),
        "--lambda-range",
        "0:2:5",
        "--out",
        s(&out),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("skipping lambda = 1"), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    // above the threshold nothing comes in from the left
    assert!(rows[3]["transmission"][0].is_null());
}

#[test]
fn bound_command_reports_states_and_notices() {
    let dir = tempfile::tempdir().unwrap();
    let well = write_profile(dir.path(), "well", &presets::square_well(10.0));
    let out = dir.path().join("o");
    let o = run(&[
        "bound",
        "--profile",
        s(&well),
        "--lambda-range",
        "0.001:9.99:400",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bound_states.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    let trace = std::fs::read_to_string(out.join("scan_trace.csv")).unwrap();
    assert!(trace.starts_with("lambda,re_D,im_D,abs_D\n"));

    let o = run(&[
        "bound",
        "--profile",
        s(&well),
        "--lambda-range",
        "-5:-1:50",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("all channels open: no bound states possible"));
    assert_eq!(
        std::fs::read_to_string(out.join("bound_states.json")).unwrap().trim(),
        "[]"
    );

    let flat = write_profile(dir.path(), "flat", &presets::uniform(&[0.0], 1.0));
    let o = run(&[
        "bound",
        "--profile",
        s(&flat),
        "--lambda-range",
        "0.01:5:100",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(out.join("bound_states.json")).unwrap().trim(),
        "[]"
    );
}

#[test]
fn verify_passes_fails_and_notices() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_profile(dir.path(), "r3", &presets::random_piecewise_constant(11, 3, 5));
    let out = dir.path().join("o");
    let o = run(&["verify", "--profile", s(&p), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("oracle.smatrix"));
    assert!(stdout(&o).contains("closed_open."));

    let o = run(&["verify", "--profile", s(&p), "--out", s(&out), "--corrupt-s"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));

    let smooth = write_profile(dir.path(), "smooth", &presets::smooth_two_channel(41));
    let o = run(&["verify", "--profile", s(&smooth), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stderr(&o).contains("oracle comparison skipped"));
    assert!(!stdout(&o).contains("oracle."));
}

#[test]
fn bad_usage_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_profile(dir.path(), "w", &presets::square_well(3.0));
    let out = dir.path().join("o");
    for args in [
        vec!["sweep", "--profile", s(&p), "--lambda-range", "1:0:3", "--out", s(&out)],
        vec![
            "sweep",
            "--profile",
            s(&p),
            "--lambda-range",
            "-1:1:3:log",
            "--out",
            s(&out),
        ],
        vec!["scatter", "--profile", s(&p), "--out", s(&out)],
        vec!["verify", "--profile", s(&p), "--tol", "check", "--out", s(&out)],
        vec!["verify", "--profile", s(&p), "--tol", "bogus=1", "--out", s(&out)],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}
