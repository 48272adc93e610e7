//! Seeded SRAM-PUF model: uniform enrollment readouts and BSC(p)
//! re-reads.
//!
//! Every draw comes from a ChaCha12 stream keyed by `(seed, domain)` with
//! the stream id set to the device or trial index, so any trial's bits can
//! be produced without generating the ones before it.

use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::gf2::BitVector;

/// Versioned name of the stream construction, recorded in reports.
pub const RNG_ALGO_ID: &str = "chacha12-v1";

/// Independent random streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamDomain {
    Enrollment,
    Authentication,
    PunctureFill,
    /// Keys chosen by the code-offset enroller.
    KeyChoice,
}

impl StreamDomain {
    fn tag(self) -> u8 {
        match self {
            StreamDomain::Enrollment => 1,
            StreamDomain::Authentication => 2,
            StreamDomain::PunctureFill => 3,
            StreamDomain::KeyChoice => 4,
        }
    }
}

/// The generator for `(seed, domain)` positioned at stream `index`.
pub fn stream_rng(seed: u64, domain: StreamDomain, index: u64) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(RNG_ALGO_ID.as_bytes());
    h.update(seed.to_be_bytes());
    h.update([domain.tag()]);
    let mut rng = ChaCha12Rng::from_seed(h.finalize().into());
    rng.set_stream(index);
    rng
}

/// `len` uniform bits, 64 per generator word, least significant first.
pub fn uniform_bits(rng: &mut impl RngCore, len: usize) -> BitVector {
    let mut bits = Vec::with_capacity(len);
    while bits.len() < len {
        let word = rng.next_u64();
        let take = (len - bits.len()).min(64);
        bits.extend((0..take).map(|b| ((word >> b) & 1) as u8));
    }
    BitVector::from_bits(&bits)
}

/// I.i.d. binary-symmetric PUF: uniform cells, each flipped with
/// probability `p` on re-read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PufModel {
    n_cells: usize,
    p: f64,
    seed: u64,
}

impl PufModel {
    pub fn new(n_cells: usize, p: f64, seed: u64) -> Result<Self> {
        if n_cells == 0 {
            return Err(invalid("a PUF needs at least one cell"));
        }
        if !(0.0..=0.5).contains(&p) {
            return Err(invalid(format!("PUF error probability must be in [0, 1/2], got {p}")));
        }
        Ok(PufModel { n_cells, p, seed })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Enrollment readout of device 0.
    pub fn draw_enrollment(&self) -> BitVector {
        self.draw_enrollment_for(0)
    }

    /// Enrollment readout of an independent device drawn from the same model.
    pub fn draw_enrollment_for(&self, device: u64) -> BitVector {
        let mut rng = stream_rng(self.seed, StreamDomain::Enrollment, device);
        uniform_bits(&mut rng, self.n_cells)
    }

    /// Noisy re-read of `x`: each cell flips independently with
    /// probability `p`, using the stream for `trial_index`.
    pub fn draw_authentication(&self, x: &BitVector, trial_index: u64) -> Result<BitVector> {
        if x.len() != self.n_cells {
            return Err(Error::Dimension {
                expected: self.n_cells,
                actual: x.len(),
            });
        }
        let mut rng = stream_rng(self.seed, StreamDomain::Authentication, trial_index);
        let threshold = flip_threshold(self.p);
        Ok(BitVector::from_bools(
            x.iter().map(|b| b ^ (rng.next_u64() < threshold)),
        ))
    }
}

/// A cell flips when a uniform `u64` falls below `p * 2^64`.
fn flip_threshold(p: f64) -> u64 {
    if p >= 1.0 {
        u64::MAX
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

const SRAM_MAGIC: &[u8; 4] = b"SRAM";

/// Writes an SRAM dump: `"SRAM"`, the cell count as a big-endian `u32`,
/// then the cells packed most significant bit first.
pub fn write_sram_dump(mut w: impl Write, cells: &BitVector) -> Result<()> {
    let len = u32::try_from(cells.len()).map_err(|_| invalid("SRAM dump too large"))?;
    w.write_all(SRAM_MAGIC)?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(&cells.to_bytes_msb())?;
    Ok(())
}

pub fn read_sram_dump(mut r: impl Read) -> Result<BitVector> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let bad = |reason: &str| Error::Format {
        what: "SRAM dump",
        reason: reason.to_string(),
    };
    if buf.len() < 8 || &buf[..4] != SRAM_MAGIC {
        return Err(bad("missing SRAM header"));
    }
    let len = u32::from_be_bytes(buf[4..8].try_into().unwrap()) as usize;
    let body = &buf[8..];
    if body.len() != len.div_ceil(8) {
        return Err(bad(&format!(
            "header says {len} cells but {} payload bytes follow",
            body.len()
        )));
    }
    BitVector::from_bytes_msb(body, len)
}
