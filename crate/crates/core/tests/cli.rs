use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polarpuf::puf::{read_sram_dump, write_sram_dump, PufModel};
use polarpuf::scheme::HelperData;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polarpuf"));
    c.env_remove("POLARPUF_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn construct(&self, name: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(name);
        let mut args = vec!["construct", "--out", p(&out)];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    }
}

#[test]
fn construct_reports_sizes() {
    let fx = Fixture::new();
    let spec = fx.construct("s.json", &["--n", "1024", "--k", "128", "--p-design", "0.15"]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    assert_eq!(doc["frozen_set"].as_array().unwrap().len(), 896);
    assert_eq!(doc["N"], 1024);

    let o = run(&["construct", "--n", "1024", "--k", "128", "--puncture-m", "50"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("puf_bits=974"), "{}", stderr(&o));
    assert!(stderr(&o).contains("frozen=896"));
    assert!(stderr(&o).contains("PASS"));
    assert!(stdout(&o).contains("\"construction\": \"bhattacharyya-v1\""));

    let o = run(&["construct", "--n", "1000", "--k", "100"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("not a power of two"));
    assert_eq!(code(&run(&["construct", "--n", "64", "--k", "64"])), 2);
    assert_eq!(code(&run(&["construct", "--n", "64", "--k", "8", "--puncture-kind", "middle"])), 2);
}

#[test]
fn enroll_then_regen_noiseless() {
    let fx = Fixture::new();
    let spec = fx.construct("s.json", &["--n", "1024", "--k", "128"]);
    let (helper, key, dump) = (fx.path("h.bin"), fx.path("key.hex"), fx.path("x.sram"));
    let o = run(&[
        "enroll", "--spec", p(&spec), "--random", "--seed", "7", "--helper-out", p(&helper),
        "--key-out", p(&key), "--puf-out", p(&dump),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("WARNING"));
    let h = HelperData::from_bytes(&std::fs::read(&helper).unwrap()).unwrap();
    assert_eq!(h.payload_bits(), 896);

    // Same seed, same helper file.
    let helper2 = fx.path("h2.bin");
    let o = run(&["enroll", "--spec", p(&spec), "--random", "--seed", "7", "--helper-out", p(&helper2)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&helper).unwrap(), std::fs::read(&helper2).unwrap());

    let enrolled = std::fs::read_to_string(&key).unwrap();
    assert_eq!(enrolled.trim().len(), 32);
    for policy in ["sc", "scl:4", "adaptive:8"] {
        let out_key = fx.path("regen.hex");
        let o = run(&[
            "regen", "--spec", p(&spec), "--helper", p(&helper), "--puf-in", p(&dump), "--p", "0.15",
            "--policy", policy, "--key-out", p(&out_key),
        ]);
        assert_eq!(code(&o), 0, "{policy}: {}", stderr(&o));
        assert_eq!(std::fs::read_to_string(&out_key).unwrap(), enrolled);
        assert!(stderr(&o).contains("list_used="));
    }
    // Key on stdout when no --key-out.
    let o = run(&["regen", "--spec", p(&spec), "--helper", p(&helper), "--puf-in", p(&dump), "--p", "0.15"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), enrolled);
}

#[test]
fn regen_noisy_and_garbage() {
    let fx = Fixture::new();
    let spec = fx.construct("s.json", &["--n", "256", "--k", "32"]);
    let helper = fx.path("h.hex");
    let o = run(&["enroll", "--spec", p(&spec), "--random", "--seed", "3", "--helper-out", p(&helper), "--hex"]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&helper).unwrap().starts_with("50505546"));

    // A noisy re-read SC cannot correct but the adaptive decoder can.
    let model = PufModel::new(256, 0.2, 3).unwrap();
    let x = model.draw_enrollment();
    let mut escalated = false;
    for t in 0..200 {
        let y = model.draw_authentication(&x, t).unwrap();
        let dump = fx.path("y.sram");
        write_sram_dump(std::fs::File::create(&dump).unwrap(), &y).unwrap();
        let sc = run(&["regen", "--spec", p(&spec), "--helper", p(&helper), "--puf-in", p(&dump), "--p", "0.2", "--policy", "sc"]);
        if code(&sc) == 0 {
            continue;
        }
        assert_eq!(code(&sc), 1);
        let ad = run(&["regen", "--spec", p(&spec), "--helper", p(&helper), "--puf-in", p(&dump), "--p", "0.2"]);
        if code(&ad) == 0 {
            let err = stderr(&ad);
            assert!(err.contains("list_used=2") || err.contains("list_used=4") || err.contains("list_used=8"), "{err}");
            escalated = true;
            break;
        }
    }
    assert!(escalated, "no trial needed and got list decoding");

    // Uninformative input.
    let o = run(&[
        "regen", "--spec", p(&spec), "--helper", p(&helper), "--random", "--seed", "3", "--noise", "0.5",
        "--p", "0.15", "--policy", "scl:8",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn regen_error_codes() {
    let fx = Fixture::new();
    let spec = fx.construct("a.json", &["--n", "64", "--k", "16"]);
    let other = fx.construct("b.json", &["--n", "64", "--k", "20"]);
    let helper = fx.path("h.bin");
    assert_eq!(code(&run(&["enroll", "--spec", p(&spec), "--random", "--seed", "1", "--helper-out", p(&helper)])), 0);

    let o = run(&["regen", "--spec", p(&other), "--helper", p(&helper), "--random", "--seed", "1", "--p", "0.1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let o = run(&["enroll", "--spec", p(&fx.path("missing.json")), "--random", "--seed", "1", "--helper-out", p(&helper)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("spec not found"));

    let short = fx.path("short.sram");
    write_sram_dump(std::fs::File::create(&short).unwrap(), &PufModel::new(63, 0.1, 1).unwrap().draw_enrollment()).unwrap();
    let o = run(&["regen", "--spec", p(&spec), "--helper", p(&helper), "--puf-in", p(&short), "--p", "0.1"]);
    assert_eq!(code(&o), 2);

    let o = run(&["regen", "--spec", p(&spec), "--helper", p(&helper), "--random", "--seed", "1", "--p", "0.1", "--policy", "scl:x"]);
    assert_eq!(code(&o), 2);

    let junk = fx.path("junk.bin");
    std::fs::write(&junk, b"PPUF\x07").unwrap();
    let o = run(&["regen", "--spec", p(&spec), "--helper", p(&junk), "--random", "--seed", "1", "--p", "0.1"]);
    assert_eq!(code(&o), 2);

    // Conflicting input flags are a usage error.
    let o = run(&["regen", "--spec", p(&spec), "--helper", p(&helper), "--random", "--seed", "1", "--puf-in", p(&short), "--p", "0.1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn punctured_enroll_regen() {
    let fx = Fixture::new();
    let spec = fx.construct("s.json", &["--n", "256", "--k", "32", "--puncture-m", "16"]);
    let (h1, h2, dump) = (fx.path("h1"), fx.path("h2"), fx.path("x.sram"));
    let args = |h: &PathBuf| {
        run(&["enroll", "--spec", p(&spec), "--random", "--seed", "9", "--helper-out", p(h), "--puf-out", p(&dump)])
    };
    assert_eq!(code(&args(&h1)), 0);
    assert_eq!(code(&args(&h2)), 0);
    assert_eq!(read_sram_dump(&std::fs::read(&dump).unwrap()[..]).unwrap().len(), 240);
    // Fill bits are fresh per enrollment.
    assert_ne!(std::fs::read(&h1).unwrap(), std::fs::read(&h2).unwrap());
    for h in [&h1, &h2] {
        let o = run(&["regen", "--spec", p(&spec), "--helper", p(h), "--puf-in", p(&dump), "--p", "0.1", "--policy", "scl:4"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
}

#[test]
fn audit_command() {
    let fx = Fixture::new();
    let spec = fx.construct("s.json", &["--n", "512", "--k", "64"]);
    let o = run(&["audit", "--spec", p(&spec)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("rank(G_F) = 448"));
    assert!(stdout(&o).contains("PASS"));

    let demo = fx.path("demo.json");
    std::fs::write(
        &demo,
        r#"{"N": 8, "K": 3, "design_p": 0.15, "frozen_set": [1, 2, 3, 4, 6], "construction": "bhattacharyya-v1"}"#,
    )
    .unwrap();
    let o = run(&["audit", "--spec", p(&demo)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("rank(G_F) = 5") && text.contains("rank(G_Fc) = 3") && text.contains("= 8 (want 8)"));

    let bad = fx.path("bad.json");
    std::fs::write(&bad, "{\"N\": 8, \"K\": ").unwrap();
    assert_eq!(code(&run(&["audit", "--spec", p(&bad)])), 2);
    std::fs::write(&bad, r#"{"N": 8, "K": 3, "design_p": 0.15, "frozen_set": [1, 1, 3, 4, 6], "construction": "bhattacharyya-v1"}"#).unwrap();
    assert_eq!(code(&run(&["audit", "--spec", p(&bad)])), 2);
    assert_eq!(code(&run(&["audit", "--spec", p(&fx.path("nope.json"))])), 2);
}

fn write_sweep(fx: &Fixture, trials: u64) -> PathBuf {
    let path = fx.path("sweep.json");
    std::fs::write(
        &path,
        format!(
            r#"{{"spec": {{"path": "s.json"}}, "p_values": [0.2, 0.3], "policies": ["sc", "scl:4", "adaptive:8"],
                "trials_per_point": {trials}, "seed": 99}}"#
        ),
    )
    .unwrap();
    path
}

#[test]
fn simulate_is_worker_invariant() {
    let fx = Fixture::new();
    fx.construct("s.json", &["--n", "128", "--k", "16"]);
    let sweep = write_sweep(&fx, 3000);
    let mut csvs = Vec::new();
    for w in ["1", "8"] {
        let out = fx.path(&format!("r{w}.csv"));
        let o = run(&["simulate", "--sweep", p(&sweep), "--out", p(&out), "--workers", w]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("adaptive:8"));
        csvs.push(std::fs::read_to_string(&out).unwrap());
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
        assert_eq!(json["config"]["seed"], 99);
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0].lines().count(), 2 + 6);

    // Worker count from the environment.
    let out = fx.path("env.csv");
    let o = bin()
        .args(["simulate", "--sweep", p(&sweep), "--out", p(&out)])
        .env("POLARPUF_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), csvs[0]);
}

#[test]
fn simulate_rejects_bad_configs() {
    let fx = Fixture::new();
    fx.construct("s.json", &["--n", "128", "--k", "16"]);
    let sweep = write_sweep(&fx, 0);
    let o = run(&["simulate", "--sweep", p(&sweep), "--out", p(&fx.path("r.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("trials_per_point"));
    let sweep = write_sweep(&fx, 10);
    let o = run(&["simulate", "--sweep", p(&sweep), "--out", p(&fx.path("r.csv")), "--trials", "0"]);
    assert_eq!(code(&o), 2);
    let o = run(&["simulate", "--preset", "nope", "--out", p(&fx.path("r.csv"))]);
    assert_eq!(code(&o), 2);
    let o = run(&["simulate", "--out", p(&fx.path("r.csv"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_preset_fig4_desk() {
    let fx = Fixture::new();
    let out = fx.path("fig4.csv");
    let o = run(&["simulate", "--preset", "fig4-desk", "--trials", "200", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("0.25,sc,1,200,")));
    assert!(csv.lines().any(|l| l.starts_with("0.25,scl:8,8,200,")));
}

#[test]
fn simulate_checkpoint_file() {
    let fx = Fixture::new();
    fx.construct("s.json", &["--n", "64", "--k", "16"]);
    let sweep = write_sweep(&fx, 500);
    let ck = fx.path("run.ckpt");
    let out = fx.path("r.csv");
    let o = run(&["simulate", "--sweep", p(&sweep), "--out", p(&out), "--checkpoint", p(&ck)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(ck.exists());
    let first = std::fs::read_to_string(&out).unwrap();
    // A finished checkpoint replays without new work.
    let o = run(&["simulate", "--sweep", p(&sweep), "--out", p(&out), "--checkpoint", p(&ck)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn info_describes_files() {
    let fx = Fixture::new();
    let o = run(&["info"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("exit codes"));

    let spec = fx.construct("s.json", &["--n", "64", "--k", "16"]);
    let o = run(&["info", p(&spec)]);
    assert!(stdout(&o).contains("code spec: N=64 K=16 helper_bits=48"));

    let (helper, dump) = (fx.path("h"), fx.path("x.sram"));
    run(&["enroll", "--spec", p(&spec), "--random", "--seed", "1", "--helper-out", p(&helper), "--puf-out", p(&dump)]);
    assert!(stdout(&run(&["info", p(&helper)])).contains("helper data: scheme=syndrome payload_bits=48 tag=sha256x128"));
    assert!(stdout(&run(&["info", p(&dump)])).contains("SRAM dump: 64 cells"));

    let junk = fx.path("junk");
    std::fs::write(&junk, "hello").unwrap();
    assert_eq!(code(&run(&["info", p(&junk)])), 2);
    assert_eq!(code(&run(&["info", p(&fx.path("missing"))])), 2);
}
