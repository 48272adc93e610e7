//! Dense bit vectors and bit matrices over GF(2).
//!
//! Everything here is small and dense: the largest matrix the crate ever
//! builds is the 1024 x 1024 polar generator used by the leakage audit.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = u64::BITS as usize;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Packed binary vector. Bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from 0/1 bytes; any nonzero byte counts as a one.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        v
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<u8> = bits.into_iter().map(u8::from).collect();
        Self::from_bits(&bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Unpacks into one byte (0 or 1) per bit.
    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::Dimension {
                expected: self.len,
                actual: other.len,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitVector {
            len: self.len,
            words,
        })
    }

    fn xor_assign_words(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a ^= b;
        }
    }

    /// Packs most-significant-bit first: bit 0 is the top bit of byte 0.
    /// The final byte is zero-padded.
    pub fn to_bytes_msb(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn from_bytes_msb(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Dimension {
                expected: len.div_ceil(8),
                actual: bytes.len(),
            });
        }
        let mut v = Self::zeros(len);
        for i in 0..len {
            if bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                v.set(i, true);
            }
        }
        Ok(v)
    }

    /// Lowercase hex of the MSB-first packing.
    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes_msb())
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(s.trim()).map_err(|e| Error::Format {
            what: "hex bit string",
            reason: e.to_string(),
        })?;
        Self::from_bytes_msb(&bytes, len)
    }

    /// Keeps the listed 1-based positions, in order.
    pub fn select(&self, idx: &IndexSet) -> BitVector {
        BitVector::from_bools(idx.iter().map(|i| self.get(i - 1)))
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[{}](", self.len)?;
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

/// Strictly increasing set of 1-based indices drawn from `{1, ..., universe}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    universe: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, universe: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > universe) {
            return Err(Error::IndexSet(format!(
                "index {bad} outside 1..={universe}"
            )));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::IndexSet(format!(
                "indices must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(IndexSet { universe, indices })
    }

    pub fn empty(universe: usize) -> Self {
        IndexSet {
            universe,
            indices: Vec::new(),
        }
    }

    pub fn full(universe: usize) -> Self {
        IndexSet {
            universe,
            indices: (1..=universe).collect(),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> IndexSet {
        let indices = (1..=self.universe).filter(|&i| !self.contains(i)).collect();
        IndexSet {
            universe: self.universe,
            indices,
        }
    }

    /// Membership mask indexed from zero.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.universe];
        for i in self.iter() {
            m[i - 1] = true;
        }
        m
    }
}

/// Row-major packed bit matrix. Storage is exactly `ceil(rows*cols/64)`
/// words with entry `(r, c)` at bit offset `r*cols + c`.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        Ok(BitMatrix {
            rows,
            cols,
            bits: vec![0; words_for(rows * cols)],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, true);
        }
        Ok(m)
    }

    /// Builds from rows of 0/1 bytes.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), ncols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Dimension {
                    expected: ncols,
                    actual: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                m.set(r, c, b != 0);
            }
        }
        Ok(m)
    }

    /// The polar kernel `[[1,0],[1,1]]`.
    pub fn polar_kernel() -> Self {
        Self::from_rows(&[&[1, 0], &[1, 1]]).expect("2x2 literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn storage_words(&self) -> usize {
        self.bits.len()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        let k = r * self.cols + c;
        (self.bits[k / WORD] >> (k % WORD)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let k = r * self.cols + c;
        let mask = 1u64 << (k % WORD);
        if value {
            self.bits[k / WORD] |= mask;
        } else {
            self.bits[k / WORD] &= !mask;
        }
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector::from_bools((0..self.cols).map(|c| self.get(r, c)))
    }

    fn padded_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).words).collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hconcat(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                actual: other.rows,
            });
        }
        let mut m = BitMatrix::zeros(self.rows, self.cols + other.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                m.set(r, self.cols + c, other.get(r, c));
            }
        }
        Ok(m)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kronecker(&self, other: &BitMatrix) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows * other.rows, self.cols * other.cols)
            .expect("nonempty operands");
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                if !self.get(r1, c1) {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        if other.get(r2, c2) {
                            m.set(r1 * other.rows + r2, c1 * other.cols + c2, true);
                        }
                    }
                }
            }
        }
        m
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `base^{⊗n}`; `n = 0` gives the 1x1 identity.
pub fn kronecker_power(base: &BitMatrix, n: u32) -> Result<BitMatrix> {
    if base.rows != 2 || base.cols != 2 {
        return Err(Error::InvalidParameter(format!(
            "kronecker_power expects a 2x2 base, got {}x{}",
            base.rows, base.cols
        )));
    }
    let mut acc = BitMatrix::identity(1)?;
    for _ in 0..n {
        acc = acc.kronecker(base);
    }
    Ok(acc)
}

/// The natural-order polar generator `G_2^{⊗n}` for block length `N = 2^n`.
pub fn polar_generator(block_len: usize) -> Result<BitMatrix> {
    if !block_len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(block_len));
    }
    kronecker_power(&BitMatrix::polar_kernel(), block_len.trailing_zeros())
}

/// Row-vector product `v · m` over GF(2).
pub fn mat_vec_mul(v: &BitVector, m: &BitMatrix) -> Result<BitVector> {
    if v.len() != m.rows {
        return Err(Error::Dimension {
            expected: m.rows,
            actual: v.len(),
        });
    }
    let mut out = BitVector::zeros(m.cols);
    for r in 0..m.rows {
        if v.get(r) {
            out.xor_assign_words(&m.row(r).words);
        }
    }
    Ok(out)
}

/// GF(2) rank by Gaussian elimination, pivoting on the first nonzero row
/// in column order.
pub fn rank_gf2(m: &BitMatrix) -> usize {
    let mut rows = m.padded_rows();
    let mut rank = 0;
    for c in 0..m.cols {
        let (w, mask) = (c / WORD, 1u64 << (c % WORD));
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & mask != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        for row in tail.iter_mut() {
            if row[w] & mask != 0 {
                for (a, b) in row.iter_mut().zip(pivot_row).skip(w) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Submatrix of the listed 1-based columns, in order.
pub fn select_columns(m: &BitMatrix, idx: &[usize]) -> Result<BitMatrix> {
    let set = IndexSet::new(idx.to_vec(), m.cols)?;
    if set.is_empty() {
        return Err(Error::IndexSet("column selection is empty".into()));
    }
    let mut out = BitMatrix::zeros(m.rows, set.len())?;
    for r in 0..m.rows {
        for (k, c) in set.iter().enumerate() {
            out.set(r, k, m.get(r, c - 1));
        }
    }
    Ok(out)
}
