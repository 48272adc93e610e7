//! Enrollment and regeneration for the syndrome and code-offset
//! constructions, the helper-data container, and the zero-leakage audit.
//!
//! Syndrome construction: the enrollment readout `X` is treated as a polar
//! codeword, `C = X·G_N` (`G_N` is its own inverse), the key is `C` on the
//! information set and the public helper data is `C` on the frozen set.
//! Regeneration runs the decoder with the frozen positions pinned to the
//! helper bits instead of zeros.

use std::fmt;

use rand::RngCore;

use crate::codec::{self, channel_llr, polar_transform_bits, puncture_llrs, DecodeOutcome, DecoderPolicy, Llr};
use crate::construction::{CodeSpec, Fingerprint};
use crate::error::{Error, Result};
use crate::gf2::{polar_generator, rank_gf2, select_columns, BitVector};
use crate::hash::{hash_key, HashConfig, HashTag};

/// A regenerated or enrolled key. `Debug` never prints the bits.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(BitVector);

impl SecretKey {
    pub fn new(bits: BitVector) -> Self {
        SecretKey(bits)
    }

    pub fn bits(&self) -> &BitVector {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lowercase hex, most significant nibble first.
    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }

    pub fn tag(&self, cfg: HashConfig) -> HashTag {
        hash_key(&self.0, cfg)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({} bits, redacted)", self.0.len())
    }
}

/// Which helper-data construction produced a [`HelperData`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Syndrome,
    CodeOffset,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Syndrome => "syndrome",
            Scheme::CodeOffset => "code-offset",
        }
    }

    fn byte(self) -> u8 {
        match self {
            Scheme::Syndrome => 0,
            Scheme::CodeOffset => 1,
        }
    }
}

/// Public per-device data: the syndrome `W` (or the code offset), the key
/// hash tag, and the fingerprint of the code it belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperData {
    scheme: Scheme,
    payload: BitVector,
    tag: HashTag,
    spec_fingerprint: Fingerprint,
}

const HELPER_MAGIC: &[u8; 4] = b"PPUF";
const HELPER_VERSION: u8 = 1;

impl HelperData {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Syndrome bits, ascending frozen-index order.
    pub fn w(&self) -> Option<&BitVector> {
        (self.scheme == Scheme::Syndrome).then_some(&self.payload)
    }

    /// Code offset `C ⊕ X`.
    pub fn offset(&self) -> Option<&BitVector> {
        (self.scheme == Scheme::CodeOffset).then_some(&self.payload)
    }

    pub fn payload(&self) -> &BitVector {
        &self.payload
    }

    /// Stored helper bits (excluding the tag).
    pub fn payload_bits(&self) -> usize {
        self.payload.len()
    }

    pub fn tag(&self) -> &HashTag {
        &self.tag
    }

    pub fn spec_fingerprint(&self) -> &Fingerprint {
        &self.spec_fingerprint
    }

    /// Binary container:
    ///
    /// | bytes | field |
    /// |---|---|
    /// | 4 | `"PPUF"` |
    /// | 1 | version (1) |
    /// | 1 | scheme: 0 syndrome, 1 code-offset |
    /// | 32 | code-spec fingerprint |
    /// | 2 | tag length `m` in bits, big endian |
    /// | 1 + a | hash algorithm id, length-prefixed ASCII |
    /// | m/8 | tag |
    /// | 4 | payload length in bits, big endian |
    /// | ⌈len/8⌉ | payload, MSB first; bit 0 belongs to the smallest frozen index |
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(HELPER_MAGIC);
        out.push(HELPER_VERSION);
        out.push(self.scheme.byte());
        out.extend_from_slice(&self.spec_fingerprint.0);
        out.extend_from_slice(&self.tag.m_bits().to_be_bytes());
        let algo = self.tag.algo_id().as_bytes();
        out.push(algo.len() as u8);
        out.extend_from_slice(algo);
        out.extend_from_slice(&self.tag.digest().to_bytes_msb());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload.to_bytes_msb());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf: bytes, pos: 0 };
        if cur.take(4)? != HELPER_MAGIC {
            return Err(format_err("missing PPUF magic"));
        }
        let version = cur.take(1)?[0];
        if version != HELPER_VERSION {
            return Err(format_err(&format!("unsupported version {version}")));
        }
        let scheme = match cur.take(1)?[0] {
            0 => Scheme::Syndrome,
            1 => Scheme::CodeOffset,
            other => return Err(format_err(&format!("unknown scheme byte {other}"))),
        };
        let fingerprint = Fingerprint(cur.take(32)?.try_into().unwrap());
        let m_bits = u16::from_be_bytes(cur.take(2)?.try_into().unwrap());
        let algo_len = cur.take(1)?[0] as usize;
        let algo = std::str::from_utf8(cur.take(algo_len)?)
            .map_err(|_| format_err("hash id is not ASCII"))?
            .to_string();
        let digest = BitVector::from_bytes_msb(cur.take(m_bits as usize / 8)?, m_bits as usize)?;
        let tag = HashTag::from_parts(m_bits, digest, &algo)?;
        let len = u32::from_be_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let payload = BitVector::from_bytes_msb(cur.take(len.div_ceil(8))?, len)?;
        if cur.pos != bytes.len() {
            return Err(format_err("trailing bytes after payload"));
        }
        Ok(HelperData {
            scheme,
            payload,
            tag,
            spec_fingerprint: fingerprint,
        })
    }

    /// Hex of [`HelperData::to_bytes`], for debugging.
    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s.trim()).map_err(|e| format_err(&e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    fn check(&self, spec: &CodeSpec, scheme: Scheme) -> Result<()> {
        if self.scheme != scheme {
            return Err(Error::SchemeMismatch {
                expected: scheme.name(),
                actual: self.scheme.name(),
            });
        }
        let fp = spec.fingerprint();
        if fp != self.spec_fingerprint {
            return Err(Error::FingerprintMismatch {
                helper: self.spec_fingerprint.to_hex(),
                spec: fp.to_hex(),
            });
        }
        let expected = match scheme {
            Scheme::Syndrome => spec.helper_len(),
            Scheme::CodeOffset => spec.block_len(),
        };
        if self.payload.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: self.payload.len(),
            });
        }
        Ok(())
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(format_err("truncated"));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

fn format_err(reason: &str) -> Error {
    Error::Format {
        what: "helper data",
        reason: reason.to_string(),
    }
}

/// Outcome of a regeneration attempt.
#[derive(Clone, Debug)]
pub struct RegenResult {
    /// True iff the decoded key hashes to the enrolled tag.
    pub success: bool,
    pub key: Option<SecretKey>,
    pub outcome: DecodeOutcome,
}

fn check_len(v: &BitVector, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension {
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

/// Syndrome enrollment. `x` has length `N`; for punctured codes the
/// punctured positions must already hold fresh random fill bits
/// (see [`fill_punctured`]).
pub fn enroll_syndrome(x: &BitVector, spec: &CodeSpec, cfg: HashConfig) -> Result<(SecretKey, HelperData)> {
    check_len(x, spec.block_len())?;
    let mut c = x.to_bits();
    polar_transform_bits(&mut c)?;
    let c = BitVector::from_bits(&c);
    let key = SecretKey(c.select(spec.info()));
    let helper = HelperData {
        scheme: Scheme::Syndrome,
        payload: c.select(spec.frozen()),
        tag: key.tag(cfg),
        spec_fingerprint: spec.fingerprint(),
    };
    Ok((key, helper))
}

/// Spreads `N - m` PUF bits over the unpunctured positions and draws the
/// punctured ones from `rng`. Fill bits are never stored.
pub fn fill_punctured(puf: &BitVector, spec: &CodeSpec, rng: &mut impl RngCore) -> Result<BitVector> {
    check_len(puf, spec.puf_len())?;
    let fill = crate::puf::uniform_bits(rng, spec.puncture().m());
    Ok(merge_fill(puf, &fill, spec))
}

pub(crate) fn merge_fill(puf: &BitVector, fill: &BitVector, spec: &CodeSpec) -> BitVector {
    let mask = spec.puncture().indices().mask();
    let (mut a, mut b) = (puf.iter(), fill.iter());
    BitVector::from_bools(mask.into_iter().map(|punct| {
        if punct {
            b.next().expect("fill length")
        } else {
            a.next().expect("puf length")
        }
    }))
}

/// LLRs for `N - m` observed cells, expanded with zeros at punctured
/// positions.
pub fn observation_llrs(y: &BitVector, spec: &CodeSpec, p_channel: f64) -> Result<Vec<Llr>> {
    check_len(y, spec.puf_len())?;
    let mag = channel_llr(false, p_channel)?;
    let observed: Vec<Llr> = y.iter().map(|b| if b { -mag } else { mag }).collect();
    puncture_llrs(&observed, spec.puncture())
}

fn finish(outcome: DecodeOutcome, tag: &HashTag) -> RegenResult {
    let success = outcome.key_candidate.as_ref().is_some_and(|k| tag.matches(k));
    let key = if success {
        outcome.key_candidate.clone().map(SecretKey)
    } else {
        None
    };
    RegenResult { success, key, outcome }
}

/// Syndrome regeneration from the `N - m` unpunctured cells of a noisy
/// re-read.
pub fn regenerate_syndrome(
    y: &BitVector,
    helper: &HelperData,
    spec: &CodeSpec,
    p_channel: f64,
    policy: &DecoderPolicy,
) -> Result<RegenResult> {
    helper.check(spec, Scheme::Syndrome)?;
    let llr = observation_llrs(y, spec, p_channel)?;
    let outcome = codec::decode(&llr, spec, &helper.payload, policy, &helper.tag)?;
    Ok(finish(outcome, &helper.tag))
}

/// Code-offset enrollment of a chosen key: `C = U·G_N` with `U` carrying
/// the key on the information set and zeros elsewhere; helper data is
/// `C ⊕ X`. Unpunctured codes only.
pub fn enroll_code_offset(s: &SecretKey, x: &BitVector, spec: &CodeSpec, cfg: HashConfig) -> Result<HelperData> {
    if !spec.puncture().is_empty() {
        return Err(Error::InvalidParameter(
            "code-offset enrollment is only defined for unpunctured codes".into(),
        ));
    }
    check_len(s.bits(), spec.key_len())?;
    check_len(x, spec.block_len())?;
    let mut u = vec![0u8; spec.block_len()];
    for (j, i) in spec.info().iter().enumerate() {
        u[i - 1] = u8::from(s.bits().get(j));
    }
    polar_transform_bits(&mut u)?;
    let offset = BitVector::from_bits(&u).xor(x)?;
    Ok(HelperData {
        scheme: Scheme::CodeOffset,
        payload: offset,
        tag: s.tag(cfg),
        spec_fingerprint: spec.fingerprint(),
    })
}

/// Code-offset regeneration: decodes `W ⊕ Y` with all-zero frozen bits.
pub fn regenerate_code_offset(
    y: &BitVector,
    helper: &HelperData,
    spec: &CodeSpec,
    p_channel: f64,
    policy: &DecoderPolicy,
) -> Result<RegenResult> {
    helper.check(spec, Scheme::CodeOffset)?;
    let shifted = helper.payload.xor(y)?;
    let llr = observation_llrs(&shifted, spec, p_channel)?;
    let zeros = BitVector::zeros(spec.helper_len());
    let outcome = codec::decode(&llr, spec, &zeros, policy, &helper.tag)?;
    Ok(finish(outcome, &helper.tag))
}

/// GF(2) ranks behind the zero-leakage argument: with uniform `X`,
/// `I(S; W) = rank(G_info) + rank(G_frozen) - rank([G_frozen | G_info])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub block_len: usize,
    pub key_len: usize,
    pub rank_frozen: usize,
    pub rank_info: usize,
    pub rank_joint: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.rank_frozen == self.block_len - self.key_len
            && self.rank_info == self.key_len
            && self.rank_joint == self.block_len
    }

    /// `rank_info + rank_frozen - rank_joint`, the leakage in bits.
    pub fn leakage_bits(&self) -> i64 {
        self.rank_info as i64 + self.rank_frozen as i64 - self.rank_joint as i64
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rank(G_F) = {} (want {}), rank(G_Fc) = {} (want {}), rank([G_F|G_Fc]) = {} (want {}); leakage = {} bits: {}",
            self.rank_frozen,
            self.block_len - self.key_len,
            self.rank_info,
            self.key_len,
            self.rank_joint,
            self.block_len,
            self.leakage_bits(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Builds `G_N`, slices it by the frozen and information sets and checks
/// the three ranks.
pub fn leakage_audit(spec: &CodeSpec) -> AuditReport {
    let g = polar_generator(spec.block_len()).expect("spec block length is a power of two");
    let gf = select_columns(&g, spec.frozen().as_slice()).expect("valid frozen set");
    let gi = select_columns(&g, spec.info().as_slice()).expect("valid info set");
    let joint = gf.hconcat(&gi).expect("same row count");
    AuditReport {
        block_len: spec.block_len(),
        key_len: spec.key_len(),
        rank_frozen: rank_gf2(&gf),
        rank_info: rank_gf2(&gi),
        rank_joint: rank_gf2(&joint),
    }
}
