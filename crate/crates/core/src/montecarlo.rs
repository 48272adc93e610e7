//! Failure-rate and complexity estimation.
//!
//! Each trial draws a fresh device, enrolls it, draws one noisy re-read and
//! regenerates. All randomness for trial `t` of a point comes from streams
//! indexed by `t` (see [`crate::puf::stream_rng`]), so results do not depend
//! on how trials are spread over workers. Trials run in fixed-size batches;
//! the early-stop scan and the accumulation walk each batch in trial order.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::beta::beta_reg;

use crate::codec::DecoderPolicy;
use crate::construction::{CodeSpec, CodeSpecDoc, ConstructParams};
use crate::error::{invalid, Error, Result};
use crate::gf2::BitVector;
use crate::hash::{hash_key, HashConfig};
use crate::puf::{stream_rng, uniform_bits, PufModel, StreamDomain, RNG_ALGO_ID};
use crate::scheme::{self, merge_fill, SecretKey};

/// Trials evaluated between early-stop checks and checkpoints.
pub const BATCH_TRIALS: u64 = 8192;

/// Environment variable consulted for the default worker count.
pub const WORKERS_ENV: &str = "POLARPUF_WORKERS";

/// Where a sweep gets its code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecSource {
    Construct(ConstructParams),
    Inline(CodeSpecDoc),
    /// A spec JSON file; relative paths resolve against the sweep file.
    Path(PathBuf),
}

/// Helper-data construction simulated by a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimScheme {
    #[default]
    Syndrome,
    CodeOffset,
}

fn default_tag_bits() -> u16 {
    32
}

/// A grid of `(p, policy)` points over one code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub spec: SpecSource,
    /// Optional hex fingerprint the resolved spec must have.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_fingerprint: Option<String>,
    pub p_values: Vec<f64>,
    pub policies: Vec<DecoderPolicy>,
    pub trials_per_point: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_failures: Option<u64>,
    pub seed: u64,
    #[serde(default = "default_tag_bits")]
    pub hash_m_bits: u16,
    #[serde(default)]
    pub scheme: SimScheme,
}

impl SweepConfig {
    pub fn new(spec: SpecSource, p_values: Vec<f64>, policies: Vec<DecoderPolicy>, trials: u64, seed: u64) -> Self {
        SweepConfig {
            spec,
            spec_fingerprint: None,
            p_values,
            policies,
            trials_per_point: trials,
            max_failures: None,
            seed,
            hash_m_bits: default_tag_bits(),
            scheme: SimScheme::Syndrome,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(invalid("trials_per_point must be at least 1"));
        }
        if let Some(p) = self.p_values.iter().find(|p| !(**p > 0.0 && **p < 0.5)) {
            return Err(invalid(format!("p values must lie in (0, 1/2), got {p}")));
        }
        if self.max_failures == Some(0) {
            return Err(invalid("max_failures must be at least 1 when set"));
        }
        HashConfig::new(self.hash_m_bits)?;
        Ok(())
    }

    /// Builds or loads the code. `base` anchors relative spec paths.
    pub fn resolve_spec(&self, base: Option<&Path>) -> Result<CodeSpec> {
        let spec = match &self.spec {
            SpecSource::Construct(params) => CodeSpec::construct(*params)?,
            SpecSource::Inline(doc) => CodeSpec::from_doc(doc)?,
            SpecSource::Path(path) => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                CodeSpec::from_json(&std::fs::read_to_string(full)?)?
            }
        };
        if let Some(want) = &self.spec_fingerprint {
            let got = spec.fingerprint().to_hex();
            if !want.eq_ignore_ascii_case(&got) {
                return Err(Error::FingerprintMismatch {
                    helper: want.clone(),
                    spec: got,
                });
            }
        }
        Ok(spec)
    }

    /// Points in sweep order: every policy for the first p, then the next p.
    pub fn points(&self) -> Vec<(f64, DecoderPolicy)> {
        self.p_values
            .iter()
            .flat_map(|&p| self.policies.iter().map(move |pol| (p, pol.clone())))
            .collect()
    }
}

/// Sub-seed of the point at `index`: the first 8 bytes of
/// SHA-256(seed ‖ index), both big endian.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(index.to_be_bytes());
    u64::from_be_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Per-point knobs shared by every trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOptions {
    pub hash: HashConfig,
    pub max_failures: Option<u64>,
    pub scheme: SimScheme,
}

impl Default for PointOptions {
    fn default() -> Self {
        PointOptions {
            hash: HashConfig::new(default_tag_bits()).unwrap(),
            max_failures: None,
            scheme: SimScheme::Syndrome,
        }
    }
}

/// Raw counters of a point, exact integers so that aggregation is
/// order independent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub failures: u64,
    /// Wrong keys that still matched the tag.
    pub false_accepts: u64,
    pub sum_ops_f: u64,
    pub sum_ops_g: u64,
    pub sum_list_used: u64,
}

impl Tally {
    fn add(&mut self, t: &TrialOutcome) {
        self.trials += 1;
        self.failures += u64::from(t.failed);
        self.false_accepts += u64::from(t.false_accept);
        self.sum_ops_f += t.ops_f;
        self.sum_ops_g += t.ops_g;
        self.sum_list_used += t.list_used as u64;
    }
}

/// Interval construction used for a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    /// Fixed number of trials.
    ClopperPearson,
    /// Sampling stopped at the `r`-th failure; the upper bound uses the
    /// inverse-binomial form.
    InverseBinomial,
}

/// Aggregated result of one `(p, policy)` point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub p: f64,
    pub policy: DecoderPolicy,
    pub list_size: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub tally: Tally,
    /// True when the point stopped early at `max_failures`.
    pub censored: bool,
    pub failure_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_method: CiMethod,
}

impl PointResult {
    fn from_tally(p: f64, policy: DecoderPolicy, seed: u64, tally: Tally, censored: bool) -> Self {
        let (ci_low, ci_high, ci_method) = if censored {
            let (lo, hi) = stopped_ci(tally.failures, tally.trials, 0.95);
            (lo, hi, CiMethod::InverseBinomial)
        } else {
            let (lo, hi) = binomial_ci(tally.failures, tally.trials, 0.95).expect("valid counts");
            (lo, hi, CiMethod::ClopperPearson)
        };
        PointResult {
            p,
            list_size: policy.max_list(),
            policy,
            seed,
            tally,
            censored,
            failure_rate: tally.failures as f64 / tally.trials as f64,
            ci_low,
            ci_high,
            ci_method,
        }
    }

    pub fn trials(&self) -> u64 {
        self.tally.trials
    }

    pub fn failures(&self) -> u64 {
        self.tally.failures
    }

    pub fn mean_ops_f(&self) -> f64 {
        self.tally.sum_ops_f as f64 / self.tally.trials as f64
    }

    pub fn mean_ops_g(&self) -> f64 {
        self.tally.sum_ops_g as f64 / self.tally.trials as f64
    }

    pub fn mean_ops(&self) -> f64 {
        self.mean_ops_f() + self.mean_ops_g()
    }

    pub fn mean_list_used(&self) -> f64 {
        self.tally.sum_list_used as f64 / self.tally.trials as f64
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct TrialOutcome {
    failed: bool,
    false_accept: bool,
    ops_f: u64,
    ops_g: u64,
    list_used: usize,
}

struct PointContext<'a> {
    spec: &'a CodeSpec,
    policy: &'a DecoderPolicy,
    p: f64,
    seed: u64,
    puf: PufModel,
    opts: PointOptions,
}

impl PointContext<'_> {
    fn trial(&self, t: u64) -> Result<TrialOutcome> {
        let spec = self.spec;
        let cells = self.puf.draw_enrollment_for(t);
        let y = self.puf.draw_authentication(&cells, t)?;
        let (key, regen) = match self.opts.scheme {
            SimScheme::Syndrome => {
                let mut fill_rng = stream_rng(self.seed, StreamDomain::PunctureFill, t);
                let fill = uniform_bits(&mut fill_rng, spec.puncture().m());
                let x = merge_fill(&cells, &fill, spec);
                let (key, helper) = scheme::enroll_syndrome(&x, spec, self.opts.hash)?;
                (key, scheme::regenerate_syndrome(&y, &helper, spec, self.p, self.policy)?)
            }
            SimScheme::CodeOffset => {
                let mut key_rng = stream_rng(self.seed, StreamDomain::KeyChoice, t);
                let key = SecretKey::new(uniform_bits(&mut key_rng, spec.key_len()));
                let helper = scheme::enroll_code_offset(&key, &cells, spec, self.opts.hash)?;
                (key, scheme::regenerate_code_offset(&y, &helper, spec, self.p, self.policy)?)
            }
        };
        let out = regen.outcome;
        let failed = out.key_candidate.as_ref() != Some(key.bits());
        let false_accept = failed && out.key_candidate.as_ref().is_some_and(|k| accepted(k, &key, self.opts.hash));
        Ok(TrialOutcome {
            failed,
            false_accept,
            ops_f: out.ops_f,
            ops_g: out.ops_g,
            list_used: out.list_used,
        })
    }
}

fn accepted(candidate: &BitVector, key: &SecretKey, cfg: HashConfig) -> bool {
    hash_key(candidate, cfg) == key.tag(cfg)
}

/// Resumable state of a point in progress.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointProgress {
    pub tally: Tally,
    pub done: bool,
    pub censored: bool,
}

impl PointProgress {
    fn fresh() -> Self {
        PointProgress {
            tally: Tally::default(),
            done: false,
            censored: false,
        }
    }
}

fn advance(ctx: &PointContext<'_>, trials: u64, prog: &mut PointProgress) -> Result<()> {
    let start = prog.tally.trials;
    let end = (start + BATCH_TRIALS).min(trials);
    let outcomes: Vec<TrialOutcome> = (start..end)
        .into_par_iter()
        .map(|t| ctx.trial(t))
        .collect::<Result<_>>()?;
    for o in &outcomes {
        prog.tally.add(o);
        if ctx.opts.max_failures.is_some_and(|m| prog.tally.failures >= m) {
            prog.censored = prog.tally.trials < trials;
            prog.done = true;
            return Ok(());
        }
    }
    prog.done = prog.tally.trials >= trials;
    Ok(())
}

fn check_point(spec: &CodeSpec, p: f64, trials: u64, opts: &PointOptions) -> Result<()> {
    if trials == 0 {
        return Err(invalid("a point needs at least one trial"));
    }
    if !(p > 0.0 && p < 0.5) {
        return Err(invalid(format!("p must lie in (0, 1/2), got {p}")));
    }
    if opts.scheme == SimScheme::CodeOffset && !spec.puncture().is_empty() {
        return Err(invalid("code-offset simulation needs an unpunctured code"));
    }
    Ok(())
}

/// Runs `trials` independent enroll/regenerate trials at one point on the
/// current rayon pool. A trial fails iff the regenerated key differs from
/// the enrolled one.
pub fn run_point(
    spec: &CodeSpec,
    p: f64,
    policy: &DecoderPolicy,
    trials: u64,
    seed: u64,
    opts: &PointOptions,
) -> Result<PointResult> {
    check_point(spec, p, trials, opts)?;
    let ctx = PointContext {
        spec,
        policy,
        p,
        seed,
        puf: PufModel::new(spec.puf_len(), p, seed)?,
        opts: *opts,
    };
    let mut prog = PointProgress::fresh();
    while !prog.done {
        advance(&ctx, trials, &mut prog)?;
    }
    Ok(PointResult::from_tally(p, policy.clone(), seed, prog.tally, prog.censored))
}

/// Output of [`run_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SweepConfig,
    pub spec_fingerprint: String,
    pub rng: String,
    pub hash_algo: String,
    /// Whether the code passed [`scheme::leakage_audit`].
    pub audit_passed: bool,
    pub scope: String,
    pub points: Vec<PointResult>,
    /// Excluded from the CSV so that reruns compare byte for byte.
    pub wall_time_secs: f64,
}

/// Attached to every report.
pub const SCOPE_NOTE: &str = "Failure means the regenerated key differs from the enrolled key. \
Rates near 1e-9 are not simulated directly; they are bounded by trends in L and p and by a 1e-6 anchor point.";

/// Column header of [`SimulationReport::to_csv`].
pub const CSV_HEADER: &str =
    "p,policy,L,trials,failures,rate,ci_low,ci_high,mean_ops_f,mean_ops_g,mean_list_used";

impl SimulationReport {
    /// One row per point, preceded by `#` comment lines carrying the seed
    /// and the spec fingerprint.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# seed={} spec={} scheme={} tag_bits={}\n{CSV_HEADER}\n",
            self.config.seed,
            self.spec_fingerprint,
            match self.config.scheme {
                SimScheme::Syndrome => "syndrome",
                SimScheme::CodeOffset => "code-offset",
            },
            self.config.hash_m_bits
        );
        for r in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{:e},{:e},{:e},{},{},{}\n",
                r.p,
                r.policy,
                r.list_size,
                r.trials(),
                r.failures(),
                r.failure_rate,
                r.ci_low,
                r.ci_high,
                r.mean_ops_f(),
                r.mean_ops_g(),
                r.mean_list_used()
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table for terminals.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:>6}  {:<12} {:>10} {:>8} {:>11}  {:<25} {:>11} {:>7}\n",
            "p", "policy", "trials", "fails", "rate", "95% CI", "mean ops", "mean L"
        );
        for r in &self.points {
            out.push_str(&format!(
                "{:>6}  {:<12} {:>10} {:>8} {:>11.3e}  [{:.2e}, {:.2e}]{} {:>11.1} {:>7.3}\n",
                r.p,
                r.policy.to_string(),
                r.trials(),
                r.failures(),
                r.failure_rate,
                r.ci_low,
                r.ci_high,
                if r.censored { "*" } else { " " },
                r.mean_ops(),
                r.mean_list_used()
            ));
        }
        if !self.audit_passed {
            out.push_str("warning: this code failed the leakage audit\n");
        }
        if self.points.iter().any(|r| r.censored) {
            out.push_str("* stopped early at max_failures; upper bound uses the inverse-binomial interval\n");
        }
        out
    }
}

/// Checkpoint of a sweep: finished points plus the partial state of the
/// next one. Trial streams are addressed by index, so the trial count is
/// the whole RNG state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: SweepConfig,
    pub spec_fingerprint: String,
    pub finished: Vec<PointResult>,
    pub current: Option<PointProgress>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Writes to a sibling temp file first, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}

/// Execution settings that never change results.
#[derive(Clone, Debug, Default)]
pub struct RunSettings {
    /// Worker threads; `None` uses [`WORKERS_ENV`] or all cores.
    pub workers: Option<usize>,
    /// Checkpoint file, read on start when present and rewritten after
    /// every batch.
    pub checkpoint: Option<PathBuf>,
    /// Directory against which relative spec paths resolve.
    pub base_dir: Option<PathBuf>,
}

/// Worker count from `explicit`, else [`WORKERS_ENV`], else the number of
/// logical cores.
pub fn default_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every point of `cfg` with default settings.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SimulationReport> {
    run_sweep_with(cfg, &RunSettings::default())
}

/// Runs every point of `cfg` in order. Point `i` uses sub-seed
/// [`point_seed`]`(cfg.seed, i)`, so two identical entries at different
/// positions give different (independent) estimates.
pub fn run_sweep_with(cfg: &SweepConfig, settings: &RunSettings) -> Result<SimulationReport> {
    cfg.validate()?;
    let started = Instant::now();
    let spec = cfg.resolve_spec(settings.base_dir.as_deref())?;
    let fingerprint = spec.fingerprint().to_hex();
    let opts = PointOptions {
        hash: HashConfig::new(cfg.hash_m_bits)?,
        max_failures: cfg.max_failures,
        scheme: cfg.scheme,
    };
    let points = cfg.points();
    for (p, _) in &points {
        check_point(&spec, *p, cfg.trials_per_point, &opts)?;
    }

    let mut state = match &settings.checkpoint {
        Some(path) if path.exists() => {
            let ck = Checkpoint::load(path)?;
            if ck.config != *cfg || ck.spec_fingerprint != fingerprint {
                return Err(Error::Format {
                    what: "checkpoint",
                    reason: "written by a different sweep configuration".into(),
                });
            }
            ck
        }
        _ => Checkpoint {
            config: cfg.clone(),
            spec_fingerprint: fingerprint.clone(),
            finished: Vec::new(),
            current: None,
        },
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(default_workers(settings.workers))
        .build()
        .map_err(|e| invalid(e.to_string()))?;

    pool.install(|| -> Result<()> {
        for (index, (p, policy)) in points.iter().enumerate().skip(state.finished.len()) {
            let seed = point_seed(cfg.seed, index as u64);
            let ctx = PointContext {
                spec: &spec,
                policy,
                p: *p,
                seed,
                puf: PufModel::new(spec.puf_len(), *p, seed)?,
                opts,
            };
            let mut prog = state.current.take().unwrap_or_else(PointProgress::fresh);
            while !prog.done {
                advance(&ctx, cfg.trials_per_point, &mut prog)?;
                if let Some(path) = &settings.checkpoint {
                    state.current = Some(prog.clone());
                    state.save(path)?;
                    state.current = None;
                }
            }
            state
                .finished
                .push(PointResult::from_tally(*p, policy.clone(), seed, prog.tally, prog.censored));
        }
        Ok(())
    })?;

    if let Some(path) = &settings.checkpoint {
        state.save(path)?;
    }
    Ok(SimulationReport {
        config: cfg.clone(),
        spec_fingerprint: fingerprint,
        rng: RNG_ALGO_ID.to_string(),
        hash_algo: crate::hash::HASH_ALGO_ID.to_string(),
        audit_passed: scheme::leakage_audit(&spec).passed(),
        scope: SCOPE_NOTE.to_string(),
        points: state.finished,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Inverse of the regularized incomplete beta function, by bisection down
/// to adjacent floats.
fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Exact two-sided Clopper–Pearson interval for `failures` out of
/// `trials` at the given confidence.
pub fn binomial_ci(failures: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || failures > trials {
        return Err(invalid(format!("need 0 <= failures <= trials, trials >= 1; got {failures}/{trials}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence must be in (0, 1), got {confidence}")));
    }
    let alpha = 1.0 - confidence;
    let (x, n) = (failures as f64, trials as f64);
    let low = if failures == 0 { 0.0 } else { beta_quantile(alpha / 2.0, x, n - x + 1.0) };
    let high = if failures == trials { 1.0 } else { beta_quantile(1.0 - alpha / 2.0, x + 1.0, n - x) };
    Ok((low, high))
}

/// Interval for sampling stopped at the `r`-th failure on trial `n`:
/// the lower bound is the Clopper–Pearson one, the upper bound solves
/// `P(Bin(n - 1, p) <= r - 1) = alpha / 2`.
fn stopped_ci(r: u64, n: u64, confidence: f64) -> (f64, f64) {
    let (low, _) = binomial_ci(r, n, confidence).expect("valid counts");
    let high = if r == n {
        1.0
    } else {
        beta_quantile(1.0 - (1.0 - confidence) / 2.0, r as f64, (n - r) as f64)
    };
    (low, high)
}
