//! End-to-end runs of every command through `jpa_cli::run`.

use std::fs;
use std::path::{Path, PathBuf};

use jpa_cli::{run, Outcome, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
use jpa_core::io::ResultRecord;
use tempfile::TempDir;

fn jpa(args: &[&str]) -> Outcome {
    run(std::iter::once("jpa").chain(args.iter().copied()))
}

fn ok(args: &[&str]) -> ResultRecord {
    let out = jpa(args);
    if let Some(e) = &out.error {
        panic!("{args:?} failed: {}", e.to_json());
    }
    assert_eq!(out.code, EXIT_OK);
    let rec = out.record.expect("record");
    rec.validate().unwrap();
    rec
}

fn value(rec: &ResultRecord, key: &str) -> f64 {
    rec.outputs
        .get(key)
        .unwrap_or_else(|| panic!("no output `{key}` in {:?}", rec.outputs.keys()))
        .value
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CAVITY: [&str; 6] = ["--f-r", "5.9e9", "--kappa-i", "3e5", "--kappa-ex", "1.2e6"];

fn with_cavity<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(CAVITY.iter()).chain(tail.iter()).copied().collect()
}

#[test]
fn gate_sweep_round_trip() {
    let dir = TempDir::new().unwrap();
    let table = path(&dir, "gate.csv");
    ok(&[
        "simulate",
        "gate-sweep",
        "--f-geo",
        "7.2e9",
        "--f0",
        "6.2e9",
        "--table",
        s(&table),
    ]);
    let rec = ok(&[
        "fit-circuit",
        "--in",
        s(&table),
        "--f-geo",
        "7.2e9",
        "--f0",
        "6.2e9",
        "--f0-min",
        "6.0e9",
        "--f0-max",
        "6.45e9",
    ]);
    assert!((value(&rec, "alpha_l") / 1e-3 - 1.0).abs() < 1e-3);
    assert!((value(&rec, "r_j") / 15e3 - 1.0).abs() < 1e-3);
    assert!((value(&rec, "c_k") / 5e-15 - 1.0).abs() < 1e-3);
    assert!(value(&rec, "r_j_systematic") > 0.0);
    assert!(rec.series.contains_key("kappa_i_min"));
}

#[test]
fn reflection_round_trip_both_formats() {
    let dir = TempDir::new().unwrap();
    for name in ["t.s1p", "t.csv"] {
        let trace = path(&dir, name);
        ok(&with_cavity(
            &["simulate", "reflection"],
            &["--noise", "0.002", "--seed", "3", "--trace", s(&trace)],
        ));
        let plot = path(&dir, "fit.svg");
        let rec = ok(&["fit-resonance", "--in", s(&trace), "--plot", s(&plot)]);
        assert!((value(&rec, "f_r") - 5.9e9).abs() < 2e3, "{name}");
        assert!((value(&rec, "kappa_i_hz") / 3e5 - 1.0).abs() < 0.02, "{name}");
        assert!((value(&rec, "kappa_ex_hz") / 1.2e6 - 1.0).abs() < 0.02, "{name}");
        assert!((value(&rec, "efficiency") - 0.8).abs() < 0.01);
        assert!(fs::read_to_string(&plot).unwrap().starts_with("<svg"));
    }
}

#[test]
fn kerr_extract_from_table() {
    let dir = TempDir::new().unwrap();
    let table = path(&dir, "sweep.csv");
    // Resonance moving by −10 kHz per fW on top of 5.9 GHz.
    let mut text = String::from("Pin_dBm,fr_Hz\n");
    for i in 0..6 {
        let fw = 0.2 * i as f64;
        let dbm = if i == 0 {
            -200.0
        } else {
            10.0 * (fw * 1e-15 / 1e-3).log10()
        };
        text.push_str(&format!("{dbm},{}\n", 5.9e9 - 1e4 * fw));
    }
    fs::write(&table, text).unwrap();
    let rec = ok(&[
        "kerr-extract",
        "--in",
        s(&table),
        "--kappa-i",
        "3e5",
        "--kappa-ex",
        "1.2e6",
    ]);
    assert!(value(&rec, "kerr") < 0.0);
    assert!((value(&rec, "shift_per_power_mhz_per_fw") + 0.01).abs() < 1e-4);
    assert_eq!(value(&rec, "points_used"), 6.0);
}

#[test]
fn kerr_predict_design_point() {
    let rec = ok(&["kerr-predict", "--ic", "10e-6", "--f0", "6e9", "--z0", "50"]);
    assert!((value(&rec, "l_j") - 32.91e-12).abs() < 0.01e-12);
    let k = value(&rec, "kerr");
    assert!(k < 0.0 && (k.abs() / 1.4e3).log2().abs() < 1.0);
    assert!((value(&rec, "kerr_hz") - k / (2.0 * std::f64::consts::PI)).abs() < 1e-9);
}

#[test]
fn hemt_calibration_from_table() {
    let dir = TempDir::new().unwrap();
    let table = path(&dir, "hemt.csv");
    let f = 5.784e9;
    let mut text = String::from("Tset_K,psd_K\n");
    for i in 0..10 {
        let t = 0.02 + 0.1 * i as f64;
        let cw = jpa_core::chain::callen_welton_temperature(t, f).unwrap();
        text.push_str(&format!("{t},{}\n", 2.0 * (cw + 1.61)));
    }
    fs::write(&table, text).unwrap();
    let rec = ok(&["calibrate-hemt", "--in", s(&table), "--frequency", "5.784e9"]);
    assert!((value(&rec, "t_hemt_mc") - 1.61).abs() < 1e-9);
    assert!((value(&rec, "gain_scale") - 2.0).abs() < 1e-9);
}

#[test]
fn noise_bookkeeping() {
    let rec = ok(&[
        "estimate-attenuation",
        "--signal-dbm",
        "-50",
        "--margin-db",
        "0",
        "--t-noise",
        "1.61",
        "--rbw",
        "3880",
    ]);
    assert!((value(&rec, "floor") + 160.6426).abs() < 1e-3);
    assert!((value(&rec, "attenuation") + 110.6426).abs() < 1e-3);

    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "chain.toml");
    fs::write(&cfg, "eta_s = 0.8\neta_c_off = 0.87\nt_hemt_K = 1.61\n").unwrap();
    let rec = ok(&[
        "--config",
        s(&cfg),
        "refer-noise",
        "--gain-db",
        "20.3",
        "--frequency",
        "5.784e9",
        "--efficiency",
        "0.85",
    ]);
    assert!((value(&rec, "eta_off") - 0.696).abs() < 1e-12);
    assert!((value(&rec, "expected_total_input_noise") - 0.3543).abs() < 1e-3);
    // Flags win over the file.
    let rec = ok(&[
        "--config",
        s(&cfg),
        "refer-noise",
        "--eta-s",
        "0.5",
        "--gain-db",
        "20.3",
        "--frequency",
        "5.784e9",
    ]);
    assert!((value(&rec, "eta_off") - 0.435).abs() < 1e-12);
}

fn spectrum_args<'a>(on: &'a str, off: &'a str, seed: &'a str) -> Vec<&'a str> {
    with_cavity(
        &["simulate", "spectrum"],
        &[
            "--kerr",
            "-200",
            "--pump",
            "5.89879e9",
            "--pump-dbm",
            "-99.2",
            "--pilot",
            "5.89881e9",
            "--pilot-dbm",
            "-140",
            "--eta-s",
            "0.8",
            "--eta-c-off",
            "0.87",
            "--t-hemt",
            "1.61",
            "--rbw",
            "1000",
            "--seed",
            seed,
            "--on",
            on,
            "--off",
            off,
        ],
    )
}

#[test]
fn spectrum_to_delta_snr() {
    let dir = TempDir::new().unwrap();
    let (on, off) = (path(&dir, "on.csv"), path(&dir, "off.csv"));
    let sim = ok(&spectrum_args(s(&on), s(&off), "5"));
    let g = value(&sim, "signal_gain");
    assert!(g > 10.0, "{g}");
    let rec = ok(&["delta-snr", "--on", s(&on), "--off", s(&off), "--eta-c-off", "0.87"]);
    assert!(
        (value(&rec, "gain") / g - 1.0).abs() < 0.01,
        "{} vs {g}",
        value(&rec, "gain")
    );
    assert!(value(&rec, "delta_snr") > 0.0);
}

#[test]
fn gain_map_grid_and_plot() {
    let dir = TempDir::new().unwrap();
    let map_svg = path(&dir, "map.svg");
    let rec = ok(&with_cavity(
        &["gain-map"],
        &["--kerr", "-200", "--powers", "6", "--freqs", "8", "--plot", s(&map_svg)],
    ));
    let grid = &rec.grids["gain"];
    assert_eq!(grid.unit, "dB");
    assert_eq!(grid.values.len(), 48);
    assert!(rec.artifacts.contains_key(s(&map_svg)));
    let svg = fs::read(&map_svg).unwrap();
    assert_eq!(rec.artifacts[s(&map_svg)], jpa_core::io::sha256_hex(&svg));
}

#[test]
fn plot_command_from_spec_files() {
    let dir = TempDir::new().unwrap();
    let record = path(&dir, "map.json");
    ok(&with_cavity(
        &["--out", s(&record), "gain-map"],
        &["--kerr", "-200", "--powers", "4", "--freqs", "5"],
    ));
    let spec = path(&dir, "spec.toml");
    fs::write(
        &spec,
        "kind = \"map\"\ntitle = \"Gain\"\ngrid = \"gain\"\n[x]\nlabel = \"pump\"\nunit = \"Hz\"\n[y]\nlabel = \"power\"\nunit = \"dBm\"\n",
    )
    .unwrap();
    let svg = path(&dir, "out.svg");
    let rec = ok(&["plot", "--record", s(&record), "--spec", s(&spec), "--svg", s(&svg)]);
    assert!(rec.input_digests.contains_key("spec"));
    assert!(fs::read_to_string(&svg).unwrap().contains("Gain"));

    fs::write(&spec, "kind = \"map\"\ntitle = \"Gain\"\ngrid = \"missing\"\n[x]\nlabel = \"p\"\nunit = \"Hz\"\n[y]\nlabel = \"q\"\nunit = \"dBm\"\n").unwrap();
    let out = jpa(&["plot", "--record", s(&record), "--spec", s(&spec), "--svg", s(&svg)]);
    assert_eq!(out.code, EXIT_INPUT);
    assert_eq!(out.error.unwrap().category(), "schema");
}

/// Runs `args` twice and returns both artifact sets and digests.
fn run_twice(args: &[&str], files: &[&Path]) {
    let first = ok(args);
    let bytes: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    let second = ok(args);
    for (f, b) in files.iter().zip(&bytes) {
        assert_eq!(&fs::read(f).unwrap(), b, "{} changed between runs", f.display());
    }
    assert_eq!(first.digest, second.digest);
    assert_eq!(first.artifacts, second.artifacts);
}

#[test]
fn simulate_and_plot_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let trace = path(&dir, "r.s1p");
    run_twice(
        &with_cavity(
            &["simulate", "reflection"],
            &["--noise", "0.01", "--seed", "9", "--trace", s(&trace)],
        ),
        &[&trace],
    );
    let (on, off) = (path(&dir, "on.csv"), path(&dir, "off.csv"));
    run_twice(&spectrum_args(s(&on), s(&off), "9"), &[&on, &off]);
    let table = path(&dir, "gate.csv");
    run_twice(
        &[
            "simulate",
            "gate-sweep",
            "--f-geo",
            "7.2e9",
            "--f0",
            "6.2e9",
            "--table",
            s(&table),
        ],
        &[&table],
    );
    let svg = path(&dir, "fit.svg");
    run_twice(&["fit-resonance", "--in", s(&trace), "--plot", s(&svg)], &[&svg]);
}

#[test]
fn different_seeds_differ() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    ok(&with_cavity(
        &["simulate", "reflection"],
        &["--noise", "0.01", "--seed", "1", "--trace", s(&a)],
    ));
    ok(&with_cavity(
        &["simulate", "reflection"],
        &["--noise", "0.01", "--seed", "2", "--trace", s(&b)],
    ));
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn golden_map_svg() {
    let dir = TempDir::new().unwrap();
    let record = path(&dir, "map.json");
    ok(&with_cavity(
        &["--out", s(&record), "gain-map"],
        &["--kerr", "-200", "--powers", "5", "--freqs", "6"],
    ));
    let spec = path(&dir, "spec.json");
    fs::write(
        &spec,
        r#"{"kind":"map","title":"Signal gain","grid":"gain","x":{"label":"pump frequency","unit":"Hz"},"y":{"label":"pump power","unit":"dBm"}}"#,
    )
    .unwrap();
    let svg = path(&dir, "map.svg");
    ok(&["plot", "--record", s(&record), "--spec", s(&spec), "--svg", s(&svg)]);
    let got = fs::read_to_string(&svg).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/gain_map.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden.parent().unwrap()).unwrap();
        fs::write(&golden, &got).unwrap();
    }
    assert_eq!(got, fs::read_to_string(&golden).unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(jpa(&["--help"]).code, EXIT_OK);
    assert!(jpa(&["--help"]).message.unwrap().contains("fit-resonance"));
    assert_eq!(jpa(&["no-such-command"]).code, EXIT_USAGE);
    assert_eq!(jpa(&["fit-resonance"]).code, EXIT_USAGE);

    let out = jpa(&["fit-resonance", "--in", "/nonexistent/trace.csv"]);
    assert_eq!(out.code, EXIT_INPUT);
    assert_eq!(out.error.unwrap().category(), "io");

    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "f_Hz,re,im\n1e9,0.5\n").unwrap();
    assert_eq!(jpa(&["fit-resonance", "--in", s(&bad)]).code, EXIT_INPUT);

    let out = jpa(&["refer-noise", "--gain-db", "20", "--frequency", "6e9"]);
    assert_eq!(out.code, EXIT_INPUT);
    let err = out.error.unwrap();
    assert_eq!(err.category(), "schema");
    let json: serde_json::Value = serde_json::from_str(&err.to_json()).unwrap();
    assert_eq!(json["error"]["category"], "schema");

    let cfg = path(&dir, "bad.toml");
    fs::write(&cfg, "eta = 1\n").unwrap();
    assert_eq!(
        jpa(&[
            "--config",
            s(&cfg),
            "estimate-attenuation",
            "--signal-dbm",
            "-50",
            "--margin-db",
            "0",
            "--t-noise",
            "1",
            "--rbw",
            "1e3"
        ])
        .code,
        EXIT_INPUT
    );

    // Every point vacuum-saturated: the slope is unidentifiable.
    let hemt = path(&dir, "hemt.csv");
    fs::write(&hemt, "Tset_K,psd_K\n0.001,1\n0.002,1\n0.003,1\n0.004,1\n").unwrap();
    let out = jpa(&["calibrate-hemt", "--in", s(&hemt), "--frequency", "6e9"]);
    assert_eq!(out.code, EXIT_NUMERICAL);
    assert_eq!(out.error.unwrap().category(), "unidentifiable");
}

#[test]
fn out_file_matches_record() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "rec.json");
    let rec = ok(&[
        "--out",
        s(&out),
        "estimate-attenuation",
        "--signal-dbm",
        "-50",
        "--margin-db",
        "3",
        "--t-noise",
        "1.61",
        "--rbw",
        "3880",
    ]);
    let back = ResultRecord::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    back.validate().unwrap();
    assert_eq!(back.digest, rec.digest);
}
