use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use scq_cli::{execute, Command, QecArgs, RunConfig, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
use serde_json::Value;
use tempfile::TempDir;

fn rc(command: Command, config: Option<PathBuf>, out: &Path) -> RunConfig {
    RunConfig { command, config, out: out.to_path_buf(), seed: 0, threads: None, verbosity: 0 }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_scq"))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[circuit]\nej_ghz = 20.0\nej_ghzz = 3.0\n");
    let out = bin().args(["spectrum", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ej_ghzz"));
}

#[test]
fn unit_free_key_is_rejected() {
    // A bare `ej` carries no unit, so it is not a recognised key.
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[circuit]\nej = 20.0\n");
    let err = execute(&rc(Command::Spectrum, Some(cfg), &tmp.path().join("o"))).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert!(err.to_string().contains("`ej`"), "{err}");
}

#[test]
fn bad_flag_is_a_usage_error() {
    let code = scq_cli::run(["scq", "qec", "--d", "three"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn qec_without_noise_never_fails() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out_s = out.to_str().unwrap();
    let code = scq_cli::run(["scq", "qec", "--d", "3", "--p", "0", "--shots", "100", "--out", out_s]);
    assert_eq!(code, EXIT_OK);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["rate"], 0.0);
    assert_eq!(report["shots"], 100);
    assert_eq!(report["failures"], 0);
}

#[test]
fn qec_flags_override_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "q.toml", "d = 5\np = 0.1\nshots = 10\n");
    let mut r = rc(Command::Qec(QecArgs { p: Some(0.0), ..Default::default() }), Some(cfg), &tmp.path().join("o"));
    r.seed = 3;
    let s = execute(&r).unwrap();
    assert_eq!(s.report["distance"], 5);
    assert_eq!(s.report["p"], 0.0);
    assert_eq!(s.report["shots"], 10);
}

#[test]
fn qec_rejects_probability_above_one() {
    let tmp = TempDir::new().unwrap();
    let args = QecArgs { p: Some(1.5), ..Default::default() };
    let err = execute(&rc(Command::Qec(args), None, &tmp.path().join("o"))).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
}

#[test]
fn spectrum_defaults_give_the_transmon_frequency() {
    let tmp = TempDir::new().unwrap();
    let s = execute(&rc(Command::Spectrum, None, &tmp.path().join("o"))).unwrap();
    let w = s.report["omega_q_ghz"].as_f64().unwrap();
    // sqrt(8 Ej Ec) - Ec = 7.6 GHz at Ej = 20, Ec = 0.4.
    assert!((w - 7.6).abs() < 0.05, "{w}");
    let levels = fs::read_to_string(tmp.path().join("o/levels.csv")).unwrap();
    assert!(levels.starts_with("level,energy_GHz"), "{levels}");
}

#[test]
fn json_config_is_accepted() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"circuit": {"ej_ghz": 30.0, "ec_ghz": 0.3}, "levels": 4}"#);
    let s = execute(&rc(Command::Spectrum, Some(cfg), &tmp.path().join("o"))).unwrap();
    let w = s.report["omega_q_ghz"].as_f64().unwrap();
    let est = (8.0f64 * 30.0 * 0.3).sqrt() - 0.3;
    assert!((w - est).abs() < 0.05, "{w} vs {est}");
    assert_eq!(s.report["levels_ghz"].as_array().unwrap().len(), 4);
}

#[test]
fn rb_recovers_depolarizing_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "rb.toml",
        "lengths = [1, 5, 10, 20, 40, 60, 80, 100, 150, 200]\nsequences = 200\nshots = 100\n\n[error]\nkind = \"depolarizing\"\nr = 0.01\n",
    );
    let s = execute(&rc(Command::Rb, Some(cfg), &tmp.path().join("o"))).unwrap();
    let r = s.report["r"].as_f64().unwrap();
    assert!((r - 0.01).abs() < 0.05 * 0.01, "{r}");
    let csv = fs::read_to_string(tmp.path().join("o/survival.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn rb_interleaved_reports_bounds() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "rb.toml",
        "lengths = [1, 10, 30, 60, 100]\nsequences = 60\nshots = 0\n\n[error]\nkind = \"depolarizing\"\nr = 0.005\n\n\
         [interleaved]\ngate = \"x\"\n[interleaved.error]\nkind = \"depolarizing\"\nr = 0.01\n",
    );
    let s = execute(&rc(Command::Rb, Some(cfg), &tmp.path().join("o"))).unwrap();
    assert_eq!(s.report["mode"], "interleaved");
    let r_c = s.report["r_c"].as_f64().unwrap();
    let b = s.report["r_c_bounds"].as_array().unwrap();
    let (lo, hi) = (b[0].as_f64().unwrap(), b[1].as_f64().unwrap());
    assert!(lo <= r_c && r_c <= hi);
    assert!((r_c - 0.01).abs() < 0.003, "{r_c}");
}

#[test]
fn numeric_failure_exits_3() {
    let tmp = TempDir::new().unwrap();
    // Fully depolarizing gates leave nothing to fit.
    let cfg = write(
        tmp.path(),
        "rb.toml",
        "lengths = [1, 2, 3]\nsequences = 1\nshots = 1\n[error]\nkind = \"depolarizing\"\nr = 0.75\n",
    );
    let out = bin().arg("rb").arg("--config").arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_NUMERIC), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_exits_2() {
    let tmp = TempDir::new().unwrap();
    let err = execute(&rc(Command::Spectrum, Some(tmp.path().join("nope.toml")), &tmp.path().join("o"))).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
}

fn files_except_manifest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn manifest_without_time(dir: &Path) -> Value {
    let mut m = read_json(&dir.join("manifest.json"));
    m.as_object_mut().unwrap().remove("timestamp_unix");
    m
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "q.toml", "d = 3\np = 0.02\ncycles = 2\nshots = 300\n");
    let run = |name: &str, threads| {
        let out = tmp.path().join(name);
        let mut r = rc(Command::Qec(QecArgs::default()), Some(cfg.clone()), &out);
        r.seed = 11;
        r.threads = threads;
        execute(&r).unwrap();
        out
    };
    let (a, b, c) = (run("a", None), run("b", Some(1)), run("c", Some(3)));
    assert_eq!(files_except_manifest(&a), files_except_manifest(&b));
    assert_eq!(files_except_manifest(&a), files_except_manifest(&c));
    let (ma, mb) = (manifest_without_time(&a), manifest_without_time(&b));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["inputs_sha256"], mb["inputs_sha256"]);
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let tmp = TempDir::new().unwrap();
    let text = "sequence = \"cpmg\"\npulses = 2\ntau_ns = 20.0\n";
    let cfg = write(tmp.path(), "e.toml", text);
    let out = tmp.path().join("o");
    let mut r = rc(Command::Echo, Some(cfg), &out);
    r.seed = 42;
    execute(&r).unwrap();
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "echo");
    assert_eq!(m["seed"], 42);
    assert_eq!(m["inputs_sha256"], scq_cli::output::sha256_hex(text.as_bytes()));
    assert_eq!(m["effective_config"]["pulses"], 2);
    assert_eq!(m["effective_config"]["omega_points"], 2001);
    for entry in m["outputs"].as_array().unwrap() {
        let f = entry["file"].as_str().unwrap();
        let bytes = fs::read(out.join(f)).unwrap();
        assert_eq!(entry["sha256"], scq_cli::output::sha256_hex(&bytes));
    }
    assert!(m["versions"]["scq-core"].is_string());
    assert!(m["timestamp_unix"].is_u64());
}

#[test]
fn every_subcommand_runs_on_defaults() {
    let tmp = TempDir::new().unwrap();
    let fast_qec = Command::Qec(QecArgs { shots: Some(50), ..Default::default() });
    let rb_cfg = write(tmp.path(), "rb.toml", "lengths = [1, 10, 50]\nsequences = 20\nshots = 20\n");
    let cases: Vec<(Command, Option<PathBuf>, &[&str])> = vec![
        (Command::Couple, None, &["dressed_levels.csv"]),
        (Command::Evolve, None, &["trajectory.csv"]),
        (Command::Gate, None, &["unitary.csv"]),
        (Command::Grape, None, &["amplitudes.csv", "trace.csv"]),
        (Command::Echo, None, &["filter.csv", "pulses.csv"]),
        (fast_qec, None, &["syndromes.csv"]),
        (Command::Experiment, None, &["data.csv"]),
        (Command::Rb, Some(rb_cfg), &["survival.csv"]),
    ];
    for (cmd, cfg, files) in cases {
        let name = cmd.name();
        let out = tmp.path().join(name);
        execute(&rc(cmd, cfg, &out)).unwrap_or_else(|e| panic!("{name}: {e}"));
        for f in files.iter().chain(&["report.json", "manifest.json"]) {
            assert!(out.join(f).is_file(), "{name} missing {f}");
        }
    }
}

#[test]
fn gate_ideal_times_hit_their_targets() {
    let tmp = TempDir::new().unwrap();
    for kind in ["iswap", "bswap", "cz", "cnot_cz"] {
        let cfg = write(tmp.path(), "g.toml", &format!("kind = \"{kind}\"\n"));
        let s = execute(&rc(Command::Gate, Some(cfg), &tmp.path().join(kind))).unwrap();
        let d = s.report["phase_distance"].as_f64().unwrap();
        assert!(d < 1e-9, "{kind}: {d}");
    }
}

#[test]
fn experiment_t1_recovers_lifetime() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t1.toml", "kind = \"t1\"\n[qubit]\ngamma1_per_ns = 0.02\n[sweep]\npoints = 41\n");
    let s = execute(&rc(Command::Experiment, Some(cfg), &tmp.path().join("o"))).unwrap();
    let t1 = s.report["t1_ns"].as_f64().unwrap();
    assert!((t1 - 50.0).abs() < 0.5, "{t1}");
}

#[test]
fn time_sweep_rejects_frequency_keys() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "x.toml", "kind = \"t1\"\n[sweep]\nstart_ghz = 4.0\n");
    let err = execute(&rc(Command::Experiment, Some(cfg), &tmp.path().join("o"))).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
}

/// Subcommand for each recipe under `configs/`.
const RECIPES: [(&str, &str); 17] = [
    ("cpmg", "echo"),
    ("cross_resonance", "gate"),
    ("cz", "gate"),
    ("dispersive", "couple"),
    ("fluxonium", "spectrum"),
    ("grape_bounded", "grape"),
    ("irb_x90", "rb"),
    ("memory_d3", "qec"),
    ("oscillators_driven", "couple"),
    ("oscillators_pumped", "couple"),
    ("oscillators_resonant", "couple"),
    ("ramsey", "experiment"),
    ("rb", "rb"),
    ("readout", "experiment"),
    ("relaxation", "evolve"),
    ("transmon", "spectrum"),
    ("vacuum_rabi", "couple"),
];

#[test]
fn every_recipe_runs_within_ten_minutes() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut on_disk: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    on_disk.sort();
    let listed: Vec<&str> = RECIPES.iter().map(|r| r.0).collect();
    assert_eq!(on_disk, listed, "recipe table out of date");
    let tmp = TempDir::new().unwrap();
    for (name, sub) in RECIPES {
        let start = std::time::Instant::now();
        let out = bin()
            .arg(sub)
            .arg("--config")
            .arg(dir.join(format!("{name}.toml")))
            .arg("--out")
            .arg(tmp.path().join(name))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(EXIT_OK), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(start.elapsed().as_secs() < 600, "{name} too slow");
    }
}
