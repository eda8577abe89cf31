use std::path::Path;
use std::process::{Command, Output};

use kicked_top::entanglement::time_averaged_entanglement;
use kicked_top::experiments::output::{parse_pgm, sha256_hex};
use kicked_top::experiments::{RunManifest, Summary, MANIFEST_FILE, SUMMARY_FILE};
use kicked_top::floquet::build_floquet;
use kicked_top::spin::{coherent_state, SpinQuantumNumber};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kicked-top"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "experiment = \"phase_map\"\nkapa = 5\n").unwrap();
    let o = cli(&[
        "phase-map",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kapa") && err.contains("line 2"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn config_for_other_experiment_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "experiment = \"flooding\"\n").unwrap();
    let o = cli(&["phase-map", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_flag_values_exit_2() {
    for args in [
        vec!["kappa-sweep", "--kappa-grid", "6,5"],
        vec!["phase-map", "--grid", "8x8"],
        vec!["flooding", "--j", "2.25"],
        vec!["flooding", "--grid", "banana"],
        vec!["spectral", "--threads", "0"],
    ] {
        let o = cli(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"").unwrap();
    let out = blocker.join("run");
    let o = cli(&["kappa-sweep", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn missing_manifest_exits_4() {
    let o = cli(&["rerun", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn kappa_sweep_matches_library_calls() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ks");
    let o = cli(&[
        "kappa-sweep",
        "--kappa-grid",
        "0,1.5,4",
        "--kicks",
        "60",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("kappa_sweep.csv"));
    assert_eq!(header, ["kappa", "entanglement", "lyapunov"]);
    let m = manifest(&out);
    let s = SpinQuantumNumber::from_f64(m.config.j).unwrap();
    let psi0 = coherent_state(s, m.config.theta, m.config.phi).unwrap();
    for (row, kappa) in rows.iter().zip([0.0, 1.5, 4.0]) {
        assert_eq!(row[0].parse::<f64>().unwrap(), kappa);
        let f = build_floquet(s, m.config.alpha, kappa).unwrap();
        let direct = time_averaged_entanglement(&psi0, &f, 60).unwrap();
        assert_eq!(row[1].parse::<f64>().unwrap(), direct);
        // 17 significant digits.
        assert_eq!(row[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
}

#[test]
fn phase_map_outputs_are_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pm");
    let o = cli(&[
        "phase-map",
        "--grid",
        "16x24",
        "--kicks",
        "40",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let (header, rows) = read_csv(&out.join("phase_map.csv"));
    assert_eq!(header, ["theta", "phi", "lambda", "label", "entanglement", "weight"]);
    assert_eq!(rows.len(), 16 * 24);
    let mut acc = [(0.0, 0.0); 2];
    for r in &rows {
        let slot = usize::from(r[3] == "chaotic");
        let (e, w): (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
        acc[slot].0 += w * e;
        acc[slot].1 += w;
    }
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
    let Summary::PhaseMap {
        e_chaotic,
        e_regular,
        ratio,
        ..
    } = summary.clone()
    else {
        panic!("wrong summary kind");
    };
    let recomputed = |(n, d): (f64, f64)| (d > 0.0).then(|| n / d);
    assert_eq!(e_regular, recomputed(acc[0]));
    assert_eq!(e_chaotic, recomputed(acc[1]));
    if let (Some(c), Some(r)) = (e_chaotic, e_regular) {
        assert_eq!(ratio, Some(c / r));
    }

    let text = std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap();
    let reparsed: Summary = serde_json::from_str(&serde_json::to_string(&summary).unwrap()).unwrap();
    assert_eq!(reparsed, summary);
    assert!(text.contains("\"experiment\": \"phase_map\""));

    let pgm = std::fs::read(out.join("entanglement.pgm")).unwrap();
    let (w, h, maxval, data) = parse_pgm(&pgm).unwrap();
    assert_eq!((w, h, maxval, data.len()), (24, 16, 255, 16 * 24));
    assert!(data.contains(&0) && data.contains(&255));
}

#[test]
fn manifest_is_complete_and_written_last() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fl");
    let o = cli(&[
        "flooding",
        "--grid",
        "16x32",
        "--kicks",
        "10",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m.config.seed, 3);
    assert_eq!(m.config.n_kicks, 10);
    assert_eq!(m.code_version, env!("CARGO_PKG_VERSION"));
    assert!(m.conventions.floquet_order.contains("Jz^2"));
    assert!(m.wall_clock_seconds >= 0.0);

    let manifest_time = std::fs::metadata(out.join(MANIFEST_FILE)).unwrap().modified().unwrap();
    let mut files: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE)
        .collect();
    files.sort();
    let mut listed: Vec<String> = m.outputs.iter().map(|r| r.file.clone()).collect();
    listed.sort();
    assert_eq!(files, listed);
    for rec in &m.outputs {
        let path = out.join(&rec.file);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(sha256_hex(&bytes), rec.sha256, "{}", rec.file);
        assert!(std::fs::metadata(&path).unwrap().modified().unwrap() <= manifest_time);
    }

    // Flooding rows cover t = 0..=86 (the largest snapshot time).
    let (_, rows) = read_csv(&out.join("flooding.csv"));
    assert_eq!(rows.len(), 87);
    let pgms: Vec<_> = m
        .pgm_scales
        .iter()
        .map(|s| (s.file.as_str(), s.width, s.height))
        .collect();
    assert_eq!(pgms.len(), 5);
    for (file, w, h) in pgms {
        assert_eq!((w, h), (256, 128), "{file}");
        let (pw, ph, _, _) = parse_pgm(&std::fs::read(out.join(file)).unwrap()).unwrap();
        assert_eq!((pw, ph), (256, 128));
    }
}

#[test]
fn rerun_reproduces_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = cli(&[
        "spectral",
        "--j",
        "12",
        "--overlap-map",
        "--grid",
        "8x16",
        "--threads",
        "2",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cli(&[
        "rerun",
        "--manifest",
        a.join(MANIFEST_FILE).to_str().unwrap(),
        "--threads",
        "1",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["spectrum.csv", "overlap_map.csv", SUMMARY_FILE] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma.outputs, mb.outputs);
    assert_eq!((ma.threads, mb.threads), (2, 1));
}
