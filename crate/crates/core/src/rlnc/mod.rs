//! Random linear network coding over GF(2^q).
//!
//! A [`Generation`] of `M` equal-sized source packets is encoded into coded
//! packets `p'_i = sum_j c_ij * p_j`, with the coding vector `c_i` drawn
//! uniformly from the field. Any `M` linearly independent coded packets,
//! wherever they came from, recover the generation.

mod decoder;
mod field;
mod packet;

use rand::Rng;
use thiserror::Error;

pub use decoder::{decode, rank, DecodeOutcome, DecoderState};
pub use field::{gf_inv, gf_mul, FieldOrder};
pub use packet::CodedPacket;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RlncError {
    #[error("unsupported field: {0} (expected 2, 16 or 256)")]
    UnsupportedField(u32),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("generation is empty")]
    EmptyGeneration,
    #[error("generation of {0} packets exceeds the wire limit of 65535")]
    GenerationTooLarge(usize),
    #[error("packet count must be at least 1")]
    ZeroCount,
    #[error("packet size must be at least 1 byte")]
    ZeroPacketSize,
    #[error("payload is {got} bytes, expected {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("coding vector has {got} entries, expected {expected}")]
    CoefficientLength { expected: usize, got: usize },
    #[error("packet is coded over {got}, expected {expected}")]
    FieldMismatch { expected: FieldOrder, got: FieldOrder },
    #[error("coefficient {0:#04x} is not an element of the field")]
    ElementOutOfField(u8),
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
}

/// `M` source packets of identical size, interpreted over `field`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    packets: Vec<Vec<u8>>,
    packet_size: usize,
    field: FieldOrder,
}

impl Generation {
    pub fn new(packets: Vec<Vec<u8>>, field: FieldOrder) -> Result<Self, RlncError> {
        let first = packets.first().ok_or(RlncError::EmptyGeneration)?;
        let packet_size = first.len();
        if packet_size == 0 {
            return Err(RlncError::ZeroPacketSize);
        }
        if packets.len() > u16::MAX as usize {
            return Err(RlncError::GenerationTooLarge(packets.len()));
        }
        if let Some(bad) = packets.iter().find(|p| p.len() != packet_size) {
            return Err(RlncError::PayloadLength {
                expected: packet_size,
                got: bad.len(),
            });
        }
        Ok(Self {
            packets,
            packet_size,
            field,
        })
    }

    /// Uniformly random payloads.
    pub fn random<R: Rng + ?Sized>(
        m: usize,
        packet_size: usize,
        field: FieldOrder,
        rng: &mut R,
    ) -> Result<Self, RlncError> {
        let packets = (0..m)
            .map(|_| {
                let mut p = vec![0u8; packet_size];
                rng.fill(p.as_mut_slice());
                p
            })
            .collect();
        Self::new(packets, field)
    }

    pub fn packets(&self) -> &[Vec<u8>] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn packet_size(&self) -> usize {
        self.packet_size
    }

    pub fn field(&self) -> FieldOrder {
        self.field
    }

    /// The coded packet for an explicit coding vector.
    pub fn combine(&self, coefficients: Vec<u8>) -> Result<CodedPacket, RlncError> {
        if coefficients.len() != self.len() {
            return Err(RlncError::CoefficientLength {
                expected: self.len(),
                got: coefficients.len(),
            });
        }
        if let Some(&bad) = coefficients.iter().find(|&&c| !self.field.contains(c)) {
            return Err(RlncError::ElementOutOfField(bad));
        }
        let mut payload = vec![0u8; self.packet_size];
        for (&c, source) in coefficients.iter().zip(&self.packets) {
            self.field.axpy(&mut payload, c, source);
        }
        Ok(CodedPacket::from_parts(self.field, coefficients, payload))
    }
}

fn random_vector<R: Rng + ?Sized>(m: usize, field: FieldOrder, rng: &mut R) -> Vec<u8> {
    let mask = (field.size() - 1) as u8;
    (0..m).map(|_| rng.gen::<u8>() & mask).collect()
}

/// `count` coded packets with uniformly random coding vectors.
pub fn encode<R: Rng + ?Sized>(
    generation: &Generation,
    count: usize,
    rng: &mut R,
) -> Result<Vec<CodedPacket>, RlncError> {
    if count == 0 {
        return Err(RlncError::ZeroCount);
    }
    (0..count)
        .map(|_| generation.combine(random_vector(generation.len(), generation.field, rng)))
        .collect()
}

/// Like [`encode`], but the first `min(count, M)` packets carry the unit
/// coding vectors, i.e. the source packets themselves.
pub fn encode_systematic<R: Rng + ?Sized>(
    generation: &Generation,
    count: usize,
    rng: &mut R,
) -> Result<Vec<CodedPacket>, RlncError> {
    if count == 0 {
        return Err(RlncError::ZeroCount);
    }
    let m = generation.len();
    (0..count)
        .map(|i| {
            let coefficients = if i < m {
                let mut unit = vec![0u8; m];
                unit[i] = 1;
                unit
            } else {
                random_vector(m, generation.field, rng)
            };
            generation.combine(coefficients)
        })
        .collect()
}

/// Probability that `m + extra` uniformly random vectors over GF(`field_size`)
/// span the whole `m`-dimensional space: `prod_{i=extra+1}^{extra+m} (1 - field_size^-i)`.
pub fn full_rank_probability(m: usize, extra: usize, field_size: u32) -> f64 {
    let q = field_size as f64;
    (extra + 1..=extra + m).map(|i| 1.0 - q.powi(-(i as i32))).product()
}
