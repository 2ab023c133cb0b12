use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vrpm::obj::load_obj;
use vrpm::stream::{from_bytes, from_text, to_bytes};
use vrpm_core::grid::quantize_with;
use vrpm_core::{shapes, GridSpec};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn vrpm(args: &[&str]) -> Output {
    vrpm_env(args, &[])
}

fn vrpm_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vrpm"));
    cmd.args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("VRPM_")) {
        cmd.env_remove(k);
    }
    cmd.envs(env.iter().copied());
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_pyramid_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("pyramid.vrpm");
    let out = vrpm(&[
        "encode",
        path_str(&fixture("pyramid.obj")),
        path_str(&out_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(value(&text, "tokens"), "51");
    assert_eq!(value(&text, "f0"), "4");
    assert_eq!(value(&text, "n_int"), "1");
    assert_eq!(value(&text, "n_bnd"), "0");
    let ratio: f64 = value(&text, "ratio").parse().unwrap();
    assert!((ratio - 48.0 / 54.0).abs() < 1e-12);

    let golden = from_text(&std::fs::read_to_string(fixture("pyramid.tokens")).unwrap()).unwrap();
    let written = std::fs::read(&out_path).unwrap();
    assert_eq!(written, to_bytes(&golden));
}

#[test]
fn encode_is_deterministic_and_honors_n_bins() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("pyramid.obj");
    let run = |name: &str, args: &[&str], env: &[(&str, &str)]| {
        let path = dir.path().join(name);
        let mut full = args.to_vec();
        full.extend(["encode", path_str(&input), path_str(&path)]);
        let out = vrpm_env(&full, env);
        assert!(out.status.success(), "{}", stderr(&out));
        (
            stdout(&out).replace(path_str(&path), "OUT"),
            std::fs::read(&path).unwrap(),
        )
    };
    let a = run("a.vrpm", &[], &[]);
    let b = run("b.vrpm", &[], &[]);
    assert_eq!(a, b);

    let (_, bytes) = run("c.vrpm", &["--n-bins", "64"], &[]);
    assert_eq!(from_bytes(&bytes).unwrap().n_bins, 64);
    let (_, bytes) = run("d.vrpm", &[], &[("VRPM_N_BINS", "32")]);
    assert_eq!(from_bytes(&bytes).unwrap().n_bins, 32);
    let (_, bytes) = run("e.vrpm", &["--n-bins", "16"], &[("VRPM_N_BINS", "32")]);
    assert_eq!(from_bytes(&bytes).unwrap().n_bins, 16);
}

#[test]
fn non_manifold_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.vrpm");
    let out = vrpm(&[
        "encode",
        path_str(&fixture("fan3.obj")),
        path_str(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("edge-manifold violation"),
        "{}",
        stderr(&out)
    );
    assert!(!out_path.exists());
}

#[test]
fn bad_obj_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.obj");
    std::fs::write(&input, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n").unwrap();
    let out = vrpm(&[
        "encode",
        path_str(&input),
        path_str(&dir.path().join("x.vrpm")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

#[test]
fn decode_levels() {
    let dir = tempfile::tempdir().unwrap();
    let golden = fixture("pyramid.tokens");
    let grid = GridSpec::unit(128);
    let load = |path: &Path| {
        let obj = load_obj(&std::fs::read(path).unwrap()).unwrap();
        quantize_with(&obj.mesh, &grid).unwrap()
    };

    let out = vrpm(&[
        "decode",
        path_str(&golden),
        path_str(dir.path()),
        "--stop-at-k",
        "0",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let base = load(&dir.path().join("pyramid_k0.obj"));
    assert_eq!((base.vertex_count(), base.face_count()), (4, 4));
    assert!(base.validate().is_valid());

    let out = vrpm(&["decode", path_str(&golden), path_str(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let full = load(&dir.path().join("pyramid.obj"));
    let source = load_obj(&std::fs::read(fixture("pyramid.obj")).unwrap())
        .unwrap()
        .mesh;
    let expected = quantize_with(&source, &GridSpec::fit(&source.positions, 128)).unwrap();
    assert!(full.same_geometry(&expected));

    let all = dir.path().join("all");
    let out = vrpm(&[
        "decode",
        path_str(&golden),
        path_str(&all),
        "--emit-all-levels",
    ]);
    assert!(out.status.success());
    assert_eq!(value(&stdout(&out), "levels_written"), "2");
    assert!(load(&all.join("pyramid_level00000.obj")).same_geometry(&base));
    assert!(load(&all.join("pyramid_level00001.obj")).same_geometry(&full));

    let out = vrpm(&[
        "decode",
        path_str(&golden),
        path_str(dir.path()),
        "--stop-at-k",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decode_reports_truncation_offset() {
    let dir = tempfile::tempdir().unwrap();
    let golden = from_text(&std::fs::read_to_string(fixture("pyramid.tokens")).unwrap()).unwrap();
    let path = dir.path().join("cut.vrpm");
    std::fs::write(&path, &to_bytes(&golden)[..57]).unwrap();
    let out = vrpm(&["decode", path_str(&path), path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("byte 57: truncated"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn validate_accepts_golden_and_rejects_garbage() {
    let out = vrpm(&["validate", path_str(&fixture("pyramid.tokens"))]);
    assert!(out.status.success());
    assert_eq!(value(&stdout(&out), "valid"), "true");
    assert_eq!(value(&stdout(&out), "levels"), "2");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.tokens");
    // The second base face repeats the first one.
    std::fs::write(
        &path,
        "# vrpm-tokens version=1 n_bins=8\n8\n0\n0\n0\n1\n0\n0\n0\n1\n0\n0\n0\n0\n1\n0\n0\n0\n1\n0\n9\n10\n",
    )
    .unwrap();
    let out = vrpm(&["validate", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(value(&stdout(&out), "valid"), "false");
}

#[test]
fn stats_over_generated_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = vrpm(&["--seed", "7", "corpus", path_str(&corpus)]);
    assert!(out.status.success());
    assert_eq!(value(&stdout(&out), "meshes"), "105");

    let out = vrpm(&["stats", path_str(&corpus), "--no-half-edge", "--jobs", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let ratio: f64 = value(&text, "mean_ratio").parse().unwrap();
    assert!((0.667..=1.0).contains(&ratio), "{ratio}");
    let overhead: f64 = value(&text, "no_half_edge_overhead").parse().unwrap();
    assert!(overhead > 0.0);
    value(&text, "m0_fraction");
    value(&text, "boundary_fraction");

    let serial = vrpm(&["stats", path_str(&corpus), "--no-half-edge", "--jobs", "1"]);
    assert_eq!(stdout(&serial), text);
}

#[test]
fn metrics_of_a_set_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    for (name, raw) in shapes::corpus(5).iter().step_by(15) {
        std::fs::write(
            dir.path().join(format!("{name}.obj")),
            vrpm::obj::save_raw_obj(raw),
        )
        .unwrap();
    }
    let d = path_str(dir.path());
    let out = vrpm(&["metrics", d, d, "--points", "256", "--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(value(&text, "cov"), "100");
    assert_eq!(value(&text, "mmd"), "0");
    assert_eq!(value(&text, "jsd"), "0");
    assert_eq!(value(&text, "jsd_grid"), "28");
    assert_eq!(
        vrpm(&["metrics", d, d, "--points", "256", "--seed", "3"]).stdout,
        out.stdout
    );
}

#[test]
fn fuzz_thousand_samples() {
    let out = vrpm(&["fuzz", "--count", "1000", "--seed", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("1000/1000 valid"), "{text}");
    let rate: f64 = value(&text, "unmasked_valid_rate").parse().unwrap();
    assert!(rate < 0.01);
}

#[test]
fn missing_input_exits_1() {
    let out = vrpm(&["validate", "/nonexistent/file.vrpm"]);
    assert_eq!(out.status.code(), Some(1));
}
