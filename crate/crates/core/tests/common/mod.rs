//! Brute-force maximum-likelihood reference decoder. It enumerates every
//! key, re-encodes with an explicit generator-matrix product and scores
//! the codeword against the observation, sharing nothing with the
//! successive-cancellation code paths.

#![allow(dead_code)]

use polarpuf::construction::CodeSpec;
use polarpuf::gf2::{mat_vec_mul, polar_generator, BitMatrix, BitVector};

pub struct MlOracle {
    g: BitMatrix,
    frozen: Vec<usize>,
    info: Vec<usize>,
}

pub struct MlResult {
    /// Smallest discrepancy over all keys.
    pub best: f64,
    /// Keys reaching it.
    pub argmin: Vec<BitVector>,
}

impl MlOracle {
    pub fn new(spec: &CodeSpec) -> Self {
        MlOracle {
            g: polar_generator(spec.block_len()).unwrap(),
            frozen: spec.frozen().as_slice().to_vec(),
            info: spec.info().as_slice().to_vec(),
        }
    }

    /// Codeword-side word for helper bits `w` and key `s`.
    pub fn encode(&self, w: &BitVector, s: &BitVector) -> BitVector {
        let mut c = vec![0u8; self.g.rows()];
        for (j, &i) in self.frozen.iter().enumerate() {
            c[i - 1] = w.get(j) as u8;
        }
        for (j, &i) in self.info.iter().enumerate() {
            c[i - 1] = s.get(j) as u8;
        }
        mat_vec_mul(&BitVector::from_bits(&c), &self.g).unwrap()
    }

    /// Sum of |llr| over positions where `x` disagrees with the sign of
    /// `llr`; the negative log-likelihood up to a constant.
    pub fn discrepancy(x: &BitVector, llr: &[f64]) -> f64 {
        x.iter()
            .zip(llr)
            .filter(|(b, l)| (*b && **l > 0.0) || (!*b && **l < 0.0))
            .map(|(_, l)| l.abs())
            .sum()
    }

    pub fn decode(&self, w: &BitVector, llr: &[f64]) -> MlResult {
        let k = self.info.len();
        let mut best = f64::INFINITY;
        let mut argmin = Vec::new();
        for v in 0..1u64 << k {
            let s = BitVector::from_bools((0..k).map(|b| (v >> b) & 1 == 1));
            let d = Self::discrepancy(&self.encode(w, &s), llr);
            if d < best {
                best = d;
                argmin.clear();
            }
            if d == best {
                argmin.push(s);
            }
        }
        MlResult { best, argmin }
    }
}
