//! Code construction: Bhattacharyya reliability profiles, frozen-set
//! selection, puncture patterns and the serializable [`CodeSpec`].
//!
//! Synthetic channels are indexed in natural order (no bit reversal), so
//! the channels of `G_N = G_2^{⊗n}` split as: the most significant index
//! bit selects the first polarization step. Leaf `2i` is the degraded
//! ("upper", check-node) child of parent `i`, leaf `2i+1` the upgraded one.
//!
//! The entropy-threshold definition of the frozen set is asymptotic; at
//! finite length it is realized by freezing the `N-K` channels with the
//! largest Bhattacharyya parameter.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::gf2::IndexSet;

/// Identifier written into serialized specs.
pub const CONSTRUCTION_ID: &str = "bhattacharyya-v1";

/// Default design crossover probability.
pub const DEFAULT_DESIGN_P: f64 = 0.15;

/// Per-synthetic-channel Bhattacharyya parameters, natural order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityProfile {
    n_levels: u32,
    z: Vec<f64>,
}

impl ReliabilityProfile {
    pub fn n_levels(&self) -> u32 {
        self.n_levels
    }

    pub fn block_len(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Builds a profile from explicit values (mostly for tests).
    pub fn from_values(z: Vec<f64>) -> Result<Self> {
        if !z.len().is_power_of_two() || z.len() < 2 {
            return Err(Error::NotPowerOfTwo(z.len()));
        }
        if z.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("Bhattacharyya values must lie in [0, 1]"));
        }
        Ok(ReliabilityProfile {
            n_levels: z.len().trailing_zeros(),
            z,
        })
    }
}

fn check_design(n: u32, p: f64) -> Result<()> {
    if !(1..=20).contains(&n) {
        return Err(invalid(format!("n must be in 1..=20, got {n}")));
    }
    if !(p > 0.0 && p <= 0.5) {
        return Err(invalid(format!("crossover probability must be in (0, 1/2], got {p}")));
    }
    Ok(())
}

/// Bhattacharyya parameter of BSC(p).
pub fn bsc_bhattacharyya(p: f64) -> f64 {
    (2.0 * (p * (1.0 - p)).sqrt()).min(1.0)
}

/// Profile of `2^n` synthetic channels built from BSC(p) by the
/// `z -> (2z - z^2, z^2)` recursion.
pub fn bhattacharyya_profile(n: u32, p: f64) -> Result<ReliabilityProfile> {
    check_design(n, p)?;
    let mut z = vec![bsc_bhattacharyya(p)];
    for _ in 0..n {
        z = z
            .iter()
            .flat_map(|&parent| [2.0 * parent - parent * parent, parent * parent])
            .collect();
    }
    Ok(ReliabilityProfile { n_levels: n, z })
}

/// Profile when some codeword positions are punctured. Punctured positions
/// enter as erasures (`z = 1`) and the recursion runs over the decoding tree
/// with per-position values: the degraded child gets `a + b - ab`, the
/// upgraded child `ab`. With no puncturing this equals
/// [`bhattacharyya_profile`].
pub fn punctured_profile(
    n: u32,
    p: f64,
    puncture: &PuncturePattern,
) -> Result<ReliabilityProfile> {
    check_design(n, p)?;
    let block_len = 1usize << n;
    if puncture.block_len() != block_len {
        return Err(Error::Dimension {
            expected: block_len,
            actual: puncture.block_len(),
        });
    }
    let z0 = bsc_bhattacharyya(p);
    let mut channel = vec![z0; block_len];
    for i in puncture.indices().iter() {
        channel[i - 1] = 1.0;
    }
    let mut leaves = Vec::with_capacity(block_len);
    split_node(&channel, &mut leaves);
    Ok(ReliabilityProfile { n_levels: n, z: leaves })
}

fn split_node(node: &[f64], out: &mut Vec<f64>) {
    if node.len() == 1 {
        out.push(node[0]);
        return;
    }
    let half = node.len() / 2;
    let (a, b) = node.split_at(half);
    let upper: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x + y - x * y).collect();
    let lower: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
    split_node(&upper, out);
    split_node(&lower, out);
}

/// Splits `{1..N}` into (frozen, info): the `N-K` largest-z indices are
/// frozen, ties freezing the smaller index.
pub fn choose_frozen_set(profile: &ReliabilityProfile, key_len: usize) -> Result<(IndexSet, IndexSet)> {
    let n = profile.block_len();
    if key_len >= n {
        return Err(invalid(format!("K = {key_len} must be below N = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| profile.z[b].total_cmp(&profile.z[a]).then(a.cmp(&b)));
    let mut frozen: Vec<usize> = order[..n - key_len].iter().map(|i| i + 1).collect();
    frozen.sort_unstable();
    let frozen = IndexSet::new(frozen, n)?;
    let info = frozen.complement();
    Ok((frozen, info))
}

/// Codeword positions replaced by fill bits at enrollment and zero LLRs at
/// regeneration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PuncturePattern {
    indices: IndexSet,
}

/// Named puncture layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PunctureKind {
    /// The last `m` positions (default).
    Tail,
    /// The first `m` positions.
    Head,
}

impl std::str::FromStr for PunctureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tail" => Ok(PunctureKind::Tail),
            "head" => Ok(PunctureKind::Head),
            _ => Err(invalid(format!("unknown puncture layout {s:?}; expected tail or head"))),
        }
    }
}

impl PuncturePattern {
    pub fn new(indices: IndexSet) -> Self {
        PuncturePattern { indices }
    }

    pub fn none(block_len: usize) -> Self {
        PuncturePattern {
            indices: IndexSet::empty(block_len),
        }
    }

    pub fn with_kind(kind: PunctureKind, block_len: usize, m: usize) -> Result<Self> {
        if m >= block_len {
            return Err(invalid(format!(
                "cannot puncture {m} of {block_len} positions"
            )));
        }
        let idx: Vec<usize> = match kind {
            PunctureKind::Tail => (block_len - m + 1..=block_len).collect(),
            PunctureKind::Head => (1..=m).collect(),
        };
        Ok(PuncturePattern {
            indices: IndexSet::new(idx, block_len)?,
        })
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn block_len(&self) -> usize {
        self.indices.universe()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Positions that carry observed PUF bits.
    pub fn observed(&self) -> IndexSet {
        self.indices.complement()
    }
}

/// Tail puncturing: positions `{N-m+1, ..., N}`.
pub fn default_puncture(block_len: usize, m: usize) -> Result<PuncturePattern> {
    PuncturePattern::with_kind(PunctureKind::Tail, block_len, m)
}

/// A fully specified polar code: block length, key length, frozen set,
/// puncture pattern and the design point it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    block_len: usize,
    key_len: usize,
    frozen: IndexSet,
    info: IndexSet,
    design_p: f64,
    puncture: PuncturePattern,
    fingerprint: Fingerprint,
}

/// Parameters for [`CodeSpec::construct`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructParams {
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_design_p")]
    pub design_p: f64,
    #[serde(default)]
    pub puncture_m: usize,
    #[serde(default = "default_kind")]
    pub puncture_kind: PunctureKind,
}

fn default_design_p() -> f64 {
    DEFAULT_DESIGN_P
}

fn default_kind() -> PunctureKind {
    PunctureKind::Tail
}

impl ConstructParams {
    pub fn new(n: usize, k: usize) -> Self {
        ConstructParams {
            n,
            k,
            design_p: DEFAULT_DESIGN_P,
            puncture_m: 0,
            puncture_kind: PunctureKind::Tail,
        }
    }

    pub fn design_p(mut self, p: f64) -> Self {
        self.design_p = p;
        self
    }

    pub fn puncture(mut self, m: usize) -> Self {
        self.puncture_m = m;
        self
    }

    pub fn puncture_kind(mut self, kind: PunctureKind) -> Self {
        self.puncture_kind = kind;
        self
    }
}

impl CodeSpec {
    /// Assembles a spec from explicit parts, checking every structural
    /// invariant.
    pub fn new(
        key_len: usize,
        frozen: IndexSet,
        design_p: f64,
        puncture: PuncturePattern,
    ) -> Result<Self> {
        let block_len = frozen.universe();
        if !block_len.is_power_of_two() || block_len < 2 {
            return Err(Error::NotPowerOfTwo(block_len));
        }
        if key_len == 0 || key_len >= block_len {
            return Err(invalid(format!("need 1 <= K < N, got K={key_len} N={block_len}")));
        }
        if frozen.len() != block_len - key_len {
            return Err(invalid(format!(
                "frozen set has {} indices, expected N-K = {}",
                frozen.len(),
                block_len - key_len
            )));
        }
        if !(design_p > 0.0 && design_p <= 0.5) {
            return Err(invalid(format!("design_p must be in (0, 1/2], got {design_p}")));
        }
        if puncture.block_len() != block_len {
            return Err(Error::Dimension {
                expected: block_len,
                actual: puncture.block_len(),
            });
        }
        if block_len - puncture.m() < key_len {
            return Err(invalid(format!(
                "N - m = {} is below K = {key_len}",
                block_len - puncture.m()
            )));
        }
        let info = frozen.complement();
        let mut spec = CodeSpec {
            block_len,
            key_len,
            frozen,
            info,
            design_p,
            puncture,
            fingerprint: Fingerprint([0; 32]),
        };
        spec.fingerprint = Fingerprint(Sha256::digest(spec.canonical_bytes()).into());
        Ok(spec)
    }

    /// Runs the Bhattacharyya construction. Punctured codes use the
    /// puncture-aware profile.
    pub fn construct(params: ConstructParams) -> Result<Self> {
        let ConstructParams {
            n,
            k,
            design_p,
            puncture_m,
            puncture_kind,
        } = params;
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::NotPowerOfTwo(n));
        }
        if k == 0 || k + puncture_m > n {
            return Err(invalid(format!(
                "need 1 <= K <= N - m, got N={n} K={k} m={puncture_m}"
            )));
        }
        let levels = n.trailing_zeros();
        let puncture = PuncturePattern::with_kind(puncture_kind, n, puncture_m)?;
        let profile = if puncture.is_empty() {
            bhattacharyya_profile(levels, design_p)?
        } else {
            punctured_profile(levels, design_p, &puncture)?
        };
        let (frozen, _) = choose_frozen_set(&profile, k)?;
        CodeSpec::new(k, frozen, design_p, puncture)
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn n_levels(&self) -> u32 {
        self.block_len.trailing_zeros()
    }

    pub fn key_len(&self) -> usize {
        self.key_len
    }

    /// `N - K`, the syndrome helper length.
    pub fn helper_len(&self) -> usize {
        self.block_len - self.key_len
    }

    /// `N - m`, the number of PUF cells read.
    pub fn puf_len(&self) -> usize {
        self.block_len - self.puncture.m()
    }

    pub fn frozen(&self) -> &IndexSet {
        &self.frozen
    }

    pub fn info(&self) -> &IndexSet {
        &self.info
    }

    pub fn design_p(&self) -> f64 {
        self.design_p
    }

    pub fn puncture(&self) -> &PuncturePattern {
        &self.puncture
    }

    pub fn to_doc(&self) -> CodeSpecDoc {
        CodeSpecDoc {
            n: self.block_len,
            k: self.key_len,
            design_p: self.design_p,
            frozen_set: self.frozen.as_slice().to_vec(),
            puncture: self.puncture.indices().as_slice().to_vec(),
            construction: CONSTRUCTION_ID.to_string(),
        }
    }

    pub fn from_doc(doc: &CodeSpecDoc) -> Result<Self> {
        if doc.construction != CONSTRUCTION_ID {
            return Err(Error::Format {
                what: "code spec",
                reason: format!("unknown construction {:?}", doc.construction),
            });
        }
        let frozen = IndexSet::new(doc.frozen_set.clone(), doc.n)?;
        let puncture = PuncturePattern::new(IndexSet::new(doc.puncture.clone(), doc.n)?);
        CodeSpec::new(doc.k, frozen, doc.design_p, puncture)
    }

    /// Pretty JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CodeSpecDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    /// Compact JSON in fixed field order; the fingerprint input.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_doc()).expect("spec serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }
}

/// Serialized form of a [`CodeSpec`]. Index sets are 1-based and ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpecDoc {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub design_p: f64,
    pub frozen_set: Vec<usize>,
    #[serde(default)]
    pub puncture: Vec<usize>,
    pub construction: String,
}

/// Content hash identifying a [`CodeSpec`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl std::fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fingerprint({})", self.to_hex())
    }
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}
