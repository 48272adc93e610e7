//! Polar transform and the LLR-domain decoders: successive cancellation
//! with helper-data frozen bits, hash-aided list decoding and the adaptive
//! SC-then-list escalation.
//!
//! Decoding walks the natural-order tree of `G_N`. A node of size `2S` with
//! input LLRs `a` sends `f(a[j], a[j+S])` to its left child and, once the
//! left child's re-encoded bits `v` are known, `g(a[j], a[j+S], v[j])` to
//! its right child. The node's own re-encoded output is `[v ⊕ r, r]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construction::{CodeSpec, PuncturePattern};
use crate::error::{invalid, Error, Result};
use crate::gf2::BitVector;
use crate::hash::HashTag;

/// Log-likelihood ratio `ln(Pr(0)/Pr(1))`.
pub type Llr = f64;

/// Saturation magnitude applied by the channel map and both kernels.
pub const LLR_MAX: Llr = 64.0;

/// Decoder LLRs live on a grid of this step. Every sum the min-sum decoder
/// forms (and every path metric) is then exact in `f64`, so tie-breaking
/// never depends on rounding order.
pub const LLR_RESOLUTION: Llr = 1.0 / (1u64 << 20) as f64;

#[inline]
pub fn saturate(x: Llr) -> Llr {
    x.clamp(-LLR_MAX, LLR_MAX)
}

/// Rounds to the [`LLR_RESOLUTION`] grid and saturates.
#[inline]
pub fn quantize(x: Llr) -> Llr {
    saturate((x * (1u64 << 20) as f64).round() * LLR_RESOLUTION)
}

/// Check-node update rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FKernel {
    /// `2 atanh(tanh(a/2) tanh(b/2))`.
    ExactTanh,
    /// `sign(ab) min(|a|, |b|)`.
    #[default]
    MinSum,
}

impl FromStr for FKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-tanh" => Ok(FKernel::ExactTanh),
            "min-sum" | "minsum" => Ok(FKernel::MinSum),
            other => Err(invalid(format!("unknown f kernel {other:?}"))),
        }
    }
}

/// `(1 - 2y) ln((1-p)/p)`, saturated.
pub fn channel_llr(y: bool, p: f64) -> Result<Llr> {
    if !(p > 0.0 && p < 0.5) {
        return Err(invalid(format!(
            "channel LLR needs 0 < p < 1/2, got {p}"
        )));
    }
    let mag = quantize(((1.0 - p) / p).ln());
    Ok(if y { -mag } else { mag })
}

#[inline]
pub fn f_kernel(l1: Llr, l2: Llr, mode: FKernel) -> Llr {
    match mode {
        FKernel::MinSum => {
            let m = l1.abs().min(l2.abs());
            if (l1 < 0.0) != (l2 < 0.0) {
                -m
            } else {
                m
            }
        }
        FKernel::ExactTanh => quantize(exact_f(l1, l2)),
    }
}

fn exact_f(a: f64, b: f64) -> f64 {
    let t = (0.5 * a).tanh() * (0.5 * b).tanh();
    if t.abs() < 0.5 {
        2.0 * t.atanh()
    } else {
        // Jacobian form; the tanh product loses precision near ±1.
        let m = a.abs().min(b.abs());
        let s = if (a < 0.0) != (b < 0.0) { -m } else { m };
        s + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
    }
}

/// `(1 - 2u) l1 + l2`.
#[inline]
pub fn g_kernel(l1: Llr, l2: Llr, u_prev: u8) -> Llr {
    let v = if u_prev == 0 { l2 + l1 } else { l2 - l1 };
    saturate(v)
}

/// Applies `x -> x · G_N` in place on 0/1 bytes with the butterfly network.
pub fn polar_transform_bits(x: &mut [u8]) -> Result<()> {
    let n = x.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut half = 1;
    while half < n {
        for block in x.chunks_exact_mut(2 * half) {
            let (a, b) = block.split_at_mut(half);
            for (p, q) in a.iter_mut().zip(b.iter()) {
                *p ^= q;
            }
        }
        half *= 2;
    }
    Ok(())
}

/// `x · G_N`; an involution.
pub fn polar_transform(x: &BitVector) -> Result<BitVector> {
    let mut bits = x.to_bits();
    polar_transform_bits(&mut bits)?;
    Ok(BitVector::from_bits(&bits))
}

/// Expands `N - m` observed LLRs to length `N` with exact zeros at the
/// punctured positions.
pub fn puncture_llrs(observed: &[Llr], pattern: &PuncturePattern) -> Result<Vec<Llr>> {
    let n = pattern.block_len();
    if observed.len() + pattern.m() != n {
        return Err(Error::Dimension {
            expected: n - pattern.m(),
            actual: observed.len(),
        });
    }
    let mask = pattern.indices().mask();
    let mut src = observed.iter();
    Ok(mask
        .into_iter()
        .map(|punct| if punct { 0.0 } else { *src.next().expect("length checked") })
        .collect())
}

/// Which regeneration algorithm to run.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Sc,
    Scl { list_size: usize },
    /// SC first, then list decoding at each size in `schedule` until the
    /// hash matches.
    Adaptive { schedule: Vec<usize> },
}

/// Decoder selection plus the check-node kernel.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DecoderPolicy {
    pub kind: PolicyKind,
    pub f_kernel: FKernel,
}

/// Largest list size of the default adaptive schedule.
pub const DEFAULT_L_MAX: usize = 8;

impl DecoderPolicy {
    pub fn sc() -> Self {
        DecoderPolicy {
            kind: PolicyKind::Sc,
            f_kernel: FKernel::MinSum,
        }
    }

    pub fn scl(list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return Err(invalid("list size must be at least 1"));
        }
        Ok(DecoderPolicy {
            kind: PolicyKind::Scl { list_size },
            f_kernel: FKernel::MinSum,
        })
    }

    /// Doubling schedule `2, 4, ..., l_max`.
    pub fn adaptive(l_max: usize) -> Result<Self> {
        if l_max < 2 || !l_max.is_power_of_two() {
            return Err(invalid(format!(
                "adaptive L_max must be a power of two >= 2, got {l_max}"
            )));
        }
        let schedule = std::iter::successors(Some(2), |&l| Some(l * 2))
            .take_while(|&l| l <= l_max)
            .collect();
        Self::adaptive_with_schedule(schedule)
    }

    pub fn adaptive_with_schedule(schedule: Vec<usize>) -> Result<Self> {
        if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "adaptive schedule must be nonempty and strictly increasing, got {schedule:?}"
            )));
        }
        Ok(DecoderPolicy {
            kind: PolicyKind::Adaptive { schedule },
            f_kernel: FKernel::MinSum,
        })
    }

    pub fn with_kernel(mut self, f_kernel: FKernel) -> Self {
        self.f_kernel = f_kernel;
        self
    }

    /// The largest list this policy may use.
    pub fn max_list(&self) -> usize {
        match &self.kind {
            PolicyKind::Sc => 1,
            PolicyKind::Scl { list_size } => *list_size,
            PolicyKind::Adaptive { schedule } => *schedule.last().expect("nonempty"),
        }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            PolicyKind::Sc => "sc",
            PolicyKind::Scl { .. } => "scl",
            PolicyKind::Adaptive { .. } => "adaptive",
        }
    }
}

impl fmt::Display for DecoderPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PolicyKind::Sc => f.write_str("sc")?,
            PolicyKind::Scl { list_size } => write!(f, "scl:{list_size}")?,
            PolicyKind::Adaptive { schedule } => {
                let doubling = DecoderPolicy::adaptive(*schedule.last().unwrap())
                    .map(|p| p.kind == self.kind)
                    .unwrap_or(false);
                if doubling {
                    write!(f, "adaptive:{}", schedule.last().unwrap())?;
                } else {
                    let s: Vec<String> = schedule.iter().map(|l| l.to_string()).collect();
                    write!(f, "adaptive:{}", s.join(","))?;
                }
            }
        }
        if self.f_kernel == FKernel::ExactTanh {
            f.write_str("/exact")?;
        }
        Ok(())
    }
}

/// Grammar: `sc`, `scl:L`, `adaptive:Lmax` or `adaptive:L1,L2,...`, each
/// optionally suffixed with `/exact` or `/min-sum`.
impl FromStr for DecoderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (body, kernel) = match s.split_once('/') {
            Some((b, k)) => (b, k.parse()?),
            None => (s, FKernel::MinSum),
        };
        let parse_l = |v: &str| -> Result<usize> {
            v.trim()
                .parse()
                .map_err(|_| invalid(format!("bad list size {v:?} in policy {s:?}")))
        };
        let policy = match body.split_once(':') {
            None if body == "sc" => DecoderPolicy::sc(),
            Some(("scl", l)) => DecoderPolicy::scl(parse_l(l)?)?,
            Some(("adaptive", l)) if l.contains(',') => {
                let schedule = l.split(',').map(parse_l).collect::<Result<Vec<_>>>()?;
                DecoderPolicy::adaptive_with_schedule(schedule)?
            }
            Some(("adaptive", l)) => DecoderPolicy::adaptive(parse_l(l)?)?,
            _ => {
                return Err(invalid(format!(
                    "unknown policy {s:?}; expected sc, scl:L or adaptive:Lmax"
                )))
            }
        };
        Ok(policy.with_kernel(kernel))
    }
}

impl TryFrom<String> for DecoderPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DecoderPolicy> for String {
    fn from(p: DecoderPolicy) -> String {
        p.to_string()
    }
}

/// Result of one decode call.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    /// Decoded key bits (info positions). `None` only when the adaptive
    /// decoder exhausts its schedule.
    pub key_candidate: Option<BitVector>,
    pub hash_valid: bool,
    /// Exact number of f-kernel evaluations across all paths and attempts.
    pub ops_f: u64,
    /// Exact number of g-kernel evaluations across all paths and attempts.
    pub ops_g: u64,
    pub list_used: usize,
}

impl DecodeOutcome {
    pub fn ops(&self) -> u64 {
        self.ops_f + self.ops_g
    }
}

/// One surviving list-decoder path.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    /// All `N` decided bits `Ĉ`, helper bits included.
    pub bits: Vec<u8>,
    /// Accumulated penalty; lower is more likely.
    pub metric: f64,
}

impl Candidate {
    pub fn key(&self, spec: &CodeSpec) -> BitVector {
        BitVector::from_bools(spec.info().iter().map(|i| self.bits[i - 1] == 1))
    }
}

/// Output of the list decoder before hash selection.
#[derive(Clone, Debug)]
pub struct ListOutput {
    /// Surviving paths in ascending metric order.
    pub candidates: Vec<Candidate>,
    pub ops_f: u64,
    pub ops_g: u64,
}

fn check_inputs(llr: &[Llr], spec: &CodeSpec, frozen_bits: &BitVector) -> Result<()> {
    if llr.len() != spec.block_len() {
        return Err(Error::Dimension {
            expected: spec.block_len(),
            actual: llr.len(),
        });
    }
    if frozen_bits.len() != spec.helper_len() {
        return Err(Error::Dimension {
            expected: spec.helper_len(),
            actual: frozen_bits.len(),
        });
    }
    Ok(())
}

/// Frozen-bit value per position, `None` at information positions.
fn frozen_schedule(spec: &CodeSpec, frozen_bits: &BitVector) -> Vec<Option<u8>> {
    let mut sched = vec![None; spec.block_len()];
    for (j, i) in spec.frozen().iter().enumerate() {
        sched[i - 1] = Some(u8::from(frozen_bits.get(j)));
    }
    sched
}

#[inline]
fn level_offset(level: usize) -> usize {
    (1 << level) - 1
}

/// Per-path decoder memory: LLRs and left-child partial sums for levels
/// `0..n` (the channel level is shared), plus the decided bits.
#[derive(Clone)]
struct PathState {
    alpha: Vec<Llr>,
    left: Vec<u8>,
    bits: Vec<u8>,
    metric: f64,
}

impl PathState {
    fn new(block_len: usize) -> Self {
        PathState {
            alpha: vec![0.0; block_len - 1],
            left: vec![0; block_len - 1],
            bits: vec![0; block_len],
            metric: 0.0,
        }
    }

    /// Fills level 0 with the LLR of leaf `i`; returns (f, g) op counts.
    fn compute_leaf(&mut self, channel: &[Llr], levels: usize, i: usize, kernel: FKernel) -> (u64, u64) {
        let (mut ops_f, mut ops_g) = (0, 0);
        let mut level = if i == 0 {
            levels
        } else {
            let t = i.trailing_zeros() as usize;
            let s = 1 << t;
            let (child, parent) = split_levels(&mut self.alpha, channel, levels, t);
            let left = &self.left[level_offset(t)..level_offset(t) + s];
            for j in 0..s {
                child[j] = g_kernel(parent[j], parent[j + s], left[j]);
            }
            ops_g += s as u64;
            t
        };
        while level > 0 {
            level -= 1;
            let s = 1 << level;
            let (child, parent) = split_levels(&mut self.alpha, channel, levels, level);
            for j in 0..s {
                child[j] = f_kernel(parent[j], parent[j + s], kernel);
            }
            ops_f += s as u64;
        }
        (ops_f, ops_g)
    }

    fn leaf_llr(&self) -> Llr {
        self.alpha[0]
    }

    /// Records bit `i` and folds it into the stored partial sums.
    fn commit(&mut self, levels: usize, i: usize, bit: u8, scratch: &mut [u8]) {
        self.bits[i] = bit;
        scratch[0] = bit;
        let mut level = 0;
        while level < levels {
            let s = 1 << level;
            let off = level_offset(level);
            if (i >> level) & 1 == 0 {
                self.left[off..off + s].copy_from_slice(&scratch[..s]);
                return;
            }
            let (lo, hi) = scratch.split_at_mut(s);
            hi[..s].copy_from_slice(lo);
            for (j, v) in lo.iter_mut().enumerate() {
                *v ^= self.left[off + j];
            }
            level += 1;
        }
    }
}

/// Mutable view of level `level` and shared view of its parent.
fn split_levels<'a>(
    alpha: &'a mut [Llr],
    channel: &'a [Llr],
    levels: usize,
    level: usize,
) -> (&'a mut [Llr], &'a [Llr]) {
    let s = 1 << level;
    let off = level_offset(level);
    if level + 1 == levels {
        (&mut alpha[off..off + s], channel)
    } else {
        let (lo, hi) = alpha.split_at_mut(off + s);
        (&mut lo[off..], &hi[..2 * s])
    }
}

fn run_sc(llr: &[Llr], sched: &[Option<u8>], kernel: FKernel) -> (Vec<u8>, u64, u64) {
    let llr: Vec<Llr> = llr.iter().map(|&l| quantize(l)).collect();
    let llr = &llr[..];
    let n = llr.len();
    let levels = n.trailing_zeros() as usize;
    let mut path = PathState::new(n);
    let mut scratch = vec![0u8; n];
    let (mut ops_f, mut ops_g) = (0, 0);
    for (i, frozen) in sched.iter().enumerate() {
        let (f, g) = path.compute_leaf(llr, levels, i, kernel);
        ops_f += f;
        ops_g += g;
        let bit = match frozen {
            Some(b) => *b,
            // Ties (LLR exactly 0) decide 0.
            None => u8::from(path.leaf_llr() < 0.0),
        };
        path.commit(levels, i, bit, &mut scratch);
    }
    (path.bits, ops_f, ops_g)
}

/// Successive-cancellation decoding with the frozen positions forced to the
/// helper bits (ascending frozen-index order). `hash_valid` is left false.
pub fn sc_decode(llr: &[Llr], spec: &CodeSpec, w: &BitVector, kernel: FKernel) -> Result<DecodeOutcome> {
    check_inputs(llr, spec, w)?;
    let sched = frozen_schedule(spec, w);
    let (bits, ops_f, ops_g) = run_sc(llr, &sched, kernel);
    let key = BitVector::from_bools(spec.info().iter().map(|i| bits[i - 1] == 1));
    Ok(DecodeOutcome {
        key_candidate: Some(key),
        hash_valid: false,
        ops_f,
        ops_g,
        list_used: 1,
    })
}

#[inline]
fn penalty(llr: Llr, bit: u8) -> f64 {
    if (bit == 0 && llr < 0.0) || (bit == 1 && llr > 0.0) {
        llr.abs()
    } else {
        0.0
    }
}

/// List decoding keeping up to `list_size` paths. Helper positions extend
/// every path (and charge the usual penalty); information positions fork
/// and keep the `list_size` lowest metrics, preferring the bit-0 extension
/// and then the lower path index on ties.
pub fn scl_candidates(
    llr: &[Llr],
    spec: &CodeSpec,
    frozen_bits: &BitVector,
    list_size: usize,
    kernel: FKernel,
) -> Result<ListOutput> {
    check_inputs(llr, spec, frozen_bits)?;
    if list_size == 0 {
        return Err(invalid("list size must be at least 1"));
    }
    let sched = frozen_schedule(spec, frozen_bits);
    let llr: Vec<Llr> = llr.iter().map(|&l| quantize(l)).collect();
    let llr = &llr[..];
    let n = llr.len();
    let levels = n.trailing_zeros() as usize;
    let mut slots: Vec<PathState> = vec![PathState::new(n)];
    let mut active: Vec<usize> = vec![0];
    let mut free: Vec<usize> = Vec::new();
    let mut scratch = vec![0u8; n];
    let (mut ops_f, mut ops_g) = (0u64, 0u64);
    let mut forks: Vec<(f64, u8, usize)> = Vec::with_capacity(2 * list_size);

    for (i, frozen) in sched.iter().enumerate() {
        for &slot in &active {
            let (f, g) = slots[slot].compute_leaf(llr, levels, i, kernel);
            ops_f += f;
            ops_g += g;
        }
        if let Some(bit) = *frozen {
            for &slot in &active {
                let path = &mut slots[slot];
                path.metric += penalty(path.leaf_llr(), bit);
                path.commit(levels, i, bit, &mut scratch);
            }
            continue;
        }

        forks.clear();
        for (pos, &slot) in active.iter().enumerate() {
            let path = &slots[slot];
            let l = path.leaf_llr();
            forks.push((path.metric + penalty(l, 0), 0, pos));
            forks.push((path.metric + penalty(l, 1), 1, pos));
        }
        forks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        forks.truncate(list_size);

        let mut keep = vec![[false; 2]; active.len()];
        for &(_, bit, pos) in &forks {
            keep[pos][bit as usize] = true;
        }
        for (pos, k) in keep.iter().enumerate() {
            if !k[0] && !k[1] {
                free.push(active[pos]);
            }
        }
        // Slot receiving the bit-1 extension when both survive.
        let mut twin = vec![usize::MAX; active.len()];
        for (pos, k) in keep.iter().enumerate() {
            if k[0] && k[1] {
                let src = active[pos];
                let dst = match free.pop() {
                    Some(d) => {
                        let (a, b) = two_mut(&mut slots, src, d);
                        b.clone_from(a);
                        d
                    }
                    None => {
                        slots.push(slots[src].clone());
                        slots.len() - 1
                    }
                };
                twin[pos] = dst;
            }
        }
        let mut next = Vec::with_capacity(forks.len());
        for &(metric, bit, pos) in &forks {
            let slot = if bit == 1 && keep[pos][0] { twin[pos] } else { active[pos] };
            let path = &mut slots[slot];
            path.metric = metric;
            path.commit(levels, i, bit, &mut scratch);
            next.push(slot);
        }
        active = next;
    }

    let mut candidates: Vec<Candidate> = active
        .iter()
        .map(|&s| Candidate {
            bits: slots[s].bits.clone(),
            metric: slots[s].metric,
        })
        .collect();
    candidates.sort_by(|a, b| a.metric.total_cmp(&b.metric));
    Ok(ListOutput {
        candidates,
        ops_f,
        ops_g,
    })
}

fn two_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// Hash-aided list decoding: candidates are scanned in ascending metric
/// order and the first whose key matches `tag` is returned. Without a
/// match the best-metric candidate comes back with `hash_valid = false`.
pub fn scl_decode(
    llr: &[Llr],
    spec: &CodeSpec,
    w: &BitVector,
    list_size: usize,
    tag: &HashTag,
    kernel: FKernel,
) -> Result<DecodeOutcome> {
    let out = scl_candidates(llr, spec, w, list_size, kernel)?;
    let keys: Vec<BitVector> = out.candidates.iter().map(|c| c.key(spec)).collect();
    let hit = keys.iter().position(|k| tag.matches(k));
    let chosen = hit.unwrap_or(0);
    Ok(DecodeOutcome {
        key_candidate: keys.into_iter().nth(chosen),
        hash_valid: hit.is_some(),
        ops_f: out.ops_f,
        ops_g: out.ops_g,
        list_used: list_size,
    })
}

/// SC first; on a hash mismatch, list decoding at each scheduled size in
/// turn. Op counts accumulate over every attempt.
pub fn adaptive_decode(
    llr: &[Llr],
    spec: &CodeSpec,
    w: &BitVector,
    schedule: &[usize],
    tag: &HashTag,
    kernel: FKernel,
) -> Result<DecodeOutcome> {
    let mut out = sc_decode(llr, spec, w, kernel)?;
    if out.key_candidate.as_ref().is_some_and(|k| tag.matches(k)) {
        out.hash_valid = true;
        return Ok(out);
    }
    let (mut ops_f, mut ops_g) = (out.ops_f, out.ops_g);
    for &l in schedule {
        let attempt = scl_decode(llr, spec, w, l, tag, kernel)?;
        ops_f += attempt.ops_f;
        ops_g += attempt.ops_g;
        if attempt.hash_valid {
            return Ok(DecodeOutcome {
                ops_f,
                ops_g,
                ..attempt
            });
        }
    }
    Ok(DecodeOutcome {
        key_candidate: None,
        hash_valid: false,
        ops_f,
        ops_g,
        list_used: schedule.last().copied().unwrap_or(1),
    })
}

/// Runs whichever decoder `policy` names. SC never consults the tag.
pub fn decode(
    llr: &[Llr],
    spec: &CodeSpec,
    frozen_bits: &BitVector,
    policy: &DecoderPolicy,
    tag: &HashTag,
) -> Result<DecodeOutcome> {
    match &policy.kind {
        PolicyKind::Sc => sc_decode(llr, spec, frozen_bits, policy.f_kernel),
        PolicyKind::Scl { list_size } => scl_decode(llr, spec, frozen_bits, *list_size, tag, policy.f_kernel),
        PolicyKind::Adaptive { schedule } => {
            adaptive_decode(llr, spec, frozen_bits, schedule, tag, policy.f_kernel)
        }
    }
}
