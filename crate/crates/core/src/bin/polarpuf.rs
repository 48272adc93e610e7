//! Command-line front end. Exit codes:
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success (audit passed, key regenerated) |
//! | 1 | regeneration failed, or audit found leakage |
//! | 2 | usage, I/O, missing file or malformed input |
//! | 3 | helper data or sweep pinned to a different code |

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polarpuf::codec::DecoderPolicy;
use polarpuf::construction::{CodeSpec, ConstructParams, PunctureKind, DEFAULT_DESIGN_P};
use polarpuf::gf2::BitVector;
use polarpuf::hash::HashConfig;
use polarpuf::montecarlo::{run_sweep_with, RunSettings, SweepConfig, WORKERS_ENV};
use polarpuf::puf::{read_sram_dump, write_sram_dump, PufModel};
use polarpuf::scheme::{self, HelperData};
use polarpuf::Error;

const PRESETS: [(&str, &str); 4] = [
    ("fig4-desk", include_str!("../../presets/fig4-desk.json")),
    ("fig5-desk", include_str!("../../presets/fig5-desk.json")),
    ("table1-anchor", include_str!("../../presets/table1-anchor.json")),
    ("table1-anchor-long", include_str!("../../presets/table1-anchor-long.json")),
];

#[derive(Parser)]
#[command(name = "polarpuf", version, about = "Polar-code syndrome key generation for SRAM PUFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code with the Bhattacharyya construction and write its spec.
    Construct {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "p-design", default_value_t = DEFAULT_DESIGN_P)]
        p_design: f64,
        #[arg(long = "puncture-m", default_value_t = 0)]
        puncture_m: usize,
        /// Which positions to puncture: tail or head.
        #[arg(long = "puncture-kind", default_value = "tail")]
        puncture_kind: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enroll a PUF readout: derive the key and write the helper data.
    Enroll {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        input: PufInput,
        #[arg(long = "helper-out")]
        helper_out: PathBuf,
        /// Also write the key (lowercase hex) to this file.
        #[arg(long = "key-out")]
        key_out: Option<PathBuf>,
        /// Write helper data as hex text instead of binary.
        #[arg(long)]
        hex: bool,
        /// Hash tag length: 32, 64, 128 or 256.
        #[arg(long = "tag-bits", default_value_t = 128)]
        tag_bits: u16,
        /// Save the readout used (useful with --random).
        #[arg(long = "puf-out")]
        puf_out: Option<PathBuf>,
    },
    /// Regenerate the key from a noisy readout and the helper data.
    Regen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        helper: PathBuf,
        #[command(flatten)]
        input: PufInput,
        /// Crossover probability assumed by the decoder.
        #[arg(long)]
        p: f64,
        /// sc, scl:L, adaptive:Lmax or adaptive:L1,L2,...; append /exact
        /// for the exact check-node kernel.
        #[arg(long, default_value = "adaptive:8")]
        policy: String,
        /// Write the key here; printed to stdout when omitted.
        #[arg(long = "key-out")]
        key_out: Option<PathBuf>,
    },
    /// Check the GF(2) ranks behind the zero-leakage property.
    Audit {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run a failure-rate sweep and write CSV and JSON reports.
    Simulate {
        /// Sweep configuration file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        sweep: Option<PathBuf>,
        /// Built-in sweep: fig4-desk, fig5-desk, table1-anchor or
        /// table1-anchor-long.
        #[arg(long)]
        preset: Option<String>,
        /// CSV report path; the JSON report goes next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Override trials_per_point.
        #[arg(long)]
        trials: Option<u64>,
        /// Resume from / save progress to this file.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Describe a file (spec, helper data, SRAM dump or sweep), or print
    /// build information when no file is given.
    Info { file: Option<PathBuf> },
}

#[derive(Args)]
struct PufInput {
    /// SRAM dump with N - m cells.
    #[arg(long = "puf-in", conflicts_with = "random", required_unless_present = "random")]
    puf_in: Option<PathBuf>,
    /// Simulate the readout of a seeded device instead.
    #[arg(long, requires = "seed")]
    random: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// With --random: re-read noise of the simulated device.
    #[arg(long = "noise", default_value_t = 0.0, requires = "random")]
    noise: f64,
    /// With --random and --noise: which re-read to simulate.
    #[arg(long, default_value_t = 0, requires = "random")]
    trial: u64,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::FingerprintMismatch { .. } => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn fail(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

type CliResult<T = ExitCode> = std::result::Result<T, Failure>;

fn read_file(path: &Path, what: &str) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => fail(format!("{what} not found: {}", path.display())),
        _ => fail(format!("cannot read {what} {}: {e}", path.display())),
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| fail(format!("cannot write {}: {e}", path.display())))
}

fn load_spec(path: &Path) -> CliResult<CodeSpec> {
    let bytes = read_file(path, "spec")?;
    let text = String::from_utf8(bytes).map_err(|_| fail("spec is not UTF-8 JSON"))?;
    CodeSpec::from_json(&text).map_err(|e| fail(format!("bad spec {}: {e}", path.display())))
}

fn parse_helper(bytes: &[u8]) -> polarpuf::Result<HelperData> {
    if bytes.starts_with(b"PPUF") {
        HelperData::from_bytes(bytes)
    } else {
        HelperData::from_hex(&String::from_utf8_lossy(bytes))
    }
}

impl PufInput {
    fn load(&self, spec: &CodeSpec) -> CliResult<BitVector> {
        let cells = match (&self.puf_in, self.seed) {
            (Some(path), _) => read_sram_dump(&read_file(path, "PUF dump")?[..])?,
            (None, Some(seed)) => {
                let model = PufModel::new(spec.puf_len(), self.noise, seed)?;
                let x = model.draw_enrollment();
                if self.noise > 0.0 {
                    model.draw_authentication(&x, self.trial)?
                } else {
                    x
                }
            }
            (None, None) => return Err(fail("give --puf-in or --random --seed")),
        };
        if cells.len() != spec.puf_len() {
            return Err(fail(format!(
                "PUF readout has {} cells, the code needs N - m = {}",
                cells.len(),
                spec.puf_len()
            )));
        }
        Ok(cells)
    }
}

fn construct(
    n: usize,
    k: usize,
    p_design: f64,
    puncture_m: usize,
    kind: &str,
    out: Option<PathBuf>,
) -> CliResult {
    let kind: PunctureKind = kind.parse()?;
    let params = ConstructParams::new(n, k).design_p(p_design).puncture(puncture_m).puncture_kind(kind);
    let spec = CodeSpec::construct(params)?;
    let audit = scheme::leakage_audit(&spec);
    let json = spec.to_json();
    match &out {
        Some(path) => write_file(path, json + "\n")?,
        None => println!("{json}"),
    }
    eprintln!(
        "N={} K={} frozen={} puf_bits={} fingerprint={}",
        spec.block_len(),
        spec.key_len(),
        spec.frozen().len(),
        spec.puf_len(),
        spec.fingerprint()
    );
    eprintln!("audit: {audit}");
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn enroll(
    spec: &Path,
    input: &PufInput,
    helper_out: &Path,
    key_out: Option<&Path>,
    hex: bool,
    tag_bits: u16,
    puf_out: Option<&Path>,
) -> CliResult {
    let spec = load_spec(spec)?;
    let cfg = HashConfig::new(tag_bits)?;
    let cells = input.load(&spec)?;
    if let Some(path) = puf_out {
        let mut buf = Vec::new();
        write_sram_dump(&mut buf, &cells)?;
        write_file(path, buf)?;
    }
    // Fill bits for punctured positions come from OS entropy and are
    // discarded, so enrolling the same readout twice gives different
    // helper data when m > 0.
    let x = scheme::fill_punctured(&cells, &spec, &mut rand::rngs::OsRng)?;
    let (key, helper) = scheme::enroll_syndrome(&x, &spec, cfg)?;
    if hex {
        write_file(helper_out, helper.to_hex() + "\n")?;
    } else {
        write_file(helper_out, helper.to_bytes())?;
    }
    eprintln!(
        "helper: {} payload bits + {}-bit tag -> {}",
        helper.payload_bits(),
        tag_bits,
        helper_out.display()
    );
    if let Some(path) = key_out {
        eprintln!("WARNING: writing the secret key to {} in plain hex", path.display());
        write_file(path, key.to_hex() + "\n")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn regen(
    spec: &Path,
    helper: &Path,
    input: &PufInput,
    p: f64,
    policy: &str,
    key_out: Option<&Path>,
) -> CliResult {
    let policy: DecoderPolicy = policy.parse()?;
    let spec = load_spec(spec)?;
    let helper = parse_helper(&read_file(helper, "helper data")?)?;
    let y = input.load(&spec)?;
    let r = scheme::regenerate_syndrome(&y, &helper, &spec, p, &policy)?;
    eprintln!(
        "policy={policy} ops_f={} ops_g={} list_used={}",
        r.outcome.ops_f, r.outcome.ops_g, r.outcome.list_used
    );
    let Some(key) = r.key else {
        eprintln!("regeneration failed: no candidate matched the key tag");
        return Ok(ExitCode::from(1));
    };
    match key_out {
        Some(path) => write_file(path, key.to_hex() + "\n")?,
        None => println!("{}", key.to_hex()),
    }
    Ok(ExitCode::SUCCESS)
}

fn audit(spec: &Path) -> CliResult {
    let spec = load_spec(spec)?;
    let report = scheme::leakage_audit(&spec);
    println!("{report}");
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn simulate(
    sweep: Option<&Path>,
    preset: Option<&str>,
    out: &Path,
    workers: Option<usize>,
    trials: Option<u64>,
    checkpoint: Option<PathBuf>,
) -> CliResult {
    let (text, base) = match (sweep, preset) {
        (Some(path), _) => (
            String::from_utf8(read_file(path, "sweep config")?).map_err(|_| fail("sweep config is not UTF-8"))?,
            path.parent().map(Path::to_path_buf),
        ),
        (None, Some(name)) => {
            let (_, text) = PRESETS
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| fail(format!("unknown preset {name:?}")))?;
            (text.to_string(), None)
        }
        (None, None) => return Err(fail("give --sweep or --preset")),
    };
    let mut cfg: SweepConfig = serde_json::from_str(&text).map_err(|e| fail(format!("bad sweep config: {e}")))?;
    if let Some(t) = trials {
        cfg.trials_per_point = t;
    }
    cfg.validate()?;
    let settings = RunSettings {
        workers,
        checkpoint,
        base_dir: base,
    };
    let report = run_sweep_with(&cfg, &settings)?;
    write_file(out, report.to_csv())?;
    let json_path = out.with_extension("json");
    write_file(&json_path, report.to_json() + "\n")?;
    print!("{}", report.summary_table());
    eprintln!(
        "seed={} spec={} wall={:.1}s -> {} and {}",
        cfg.seed,
        report.spec_fingerprint,
        report.wall_time_secs,
        out.display(),
        json_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn info(file: Option<&Path>) -> CliResult {
    let Some(path) = file else {
        println!("polarpuf {}", env!("CARGO_PKG_VERSION"));
        println!("construction: {}", polarpuf::construction::CONSTRUCTION_ID);
        println!("hash: {}", polarpuf::hash::HASH_ALGO_ID);
        println!("rng: {}", polarpuf::puf::RNG_ALGO_ID);
        println!("presets: {}", PRESETS.map(|(n, _)| n).join(", "));
        println!("exit codes: 0 ok, 1 regeneration failed / audit failed, 2 usage or input error, 3 code mismatch");
        return Ok(ExitCode::SUCCESS);
    };
    let bytes = read_file(path, "file")?;
    if bytes.starts_with(b"SRAM") {
        let cells = read_sram_dump(&bytes[..])?;
        println!("SRAM dump: {} cells, {} ones", cells.len(), cells.count_ones());
    } else if let Ok(h) = parse_helper(&bytes) {
        println!(
            "helper data: scheme={} payload_bits={} tag={}x{} spec={}",
            h.scheme().name(),
            h.payload_bits(),
            h.tag().algo_id(),
            h.tag().m_bits(),
            h.spec_fingerprint()
        );
    } else {
        let text = String::from_utf8_lossy(&bytes);
        if let Ok(spec) = CodeSpec::from_json(&text) {
            let audit = scheme::leakage_audit(&spec);
            println!(
                "code spec: N={} K={} helper_bits={} puf_bits={} design_p={} fingerprint={}",
                spec.block_len(),
                spec.key_len(),
                spec.helper_len(),
                spec.puf_len(),
                spec.design_p(),
                spec.fingerprint()
            );
            println!("audit: {audit}");
        } else if let Ok(cfg) = SweepConfig::from_json(&text) {
            println!(
                "sweep: {} points x {} trials, seed {}",
                cfg.points().len(),
                cfg.trials_per_point,
                cfg.seed
            );
        } else {
            return Err(fail(format!("{}: unrecognized file", path.display())));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct {
            n,
            k,
            p_design,
            puncture_m,
            puncture_kind,
            out,
        } => construct(n, k, p_design, puncture_m, &puncture_kind, out),
        Command::Enroll {
            spec,
            input,
            helper_out,
            key_out,
            hex,
            tag_bits,
            puf_out,
        } => enroll(&spec, &input, &helper_out, key_out.as_deref(), hex, tag_bits, puf_out.as_deref()),
        Command::Regen {
            spec,
            helper,
            input,
            p,
            policy,
            key_out,
        } => regen(&spec, &helper, &input, p, &policy, key_out.as_deref()),
        Command::Audit { spec } => audit(&spec),
        Command::Simulate {
            sweep,
            preset,
            out,
            workers,
            trials,
            checkpoint,
        } => simulate(sweep.as_deref(), preset.as_deref(), &out, workers, trials, checkpoint),
        Command::Info { file } => info(file.as_deref()),
    };
    result.unwrap_or_else(|f| {
        eprintln!("error: {}", f.msg);
        ExitCode::from(f.code)
    })
}
